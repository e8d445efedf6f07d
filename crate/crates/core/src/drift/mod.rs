//! Drifts `b = b₁ + b₂ + mean` with divergence-free `b₁`, their Helmholtz
//! decomposition, and the built-in example fields.
//!
//! A divergence-free part is carried either through an antisymmetric matrix
//! potential `A` with `b₁^i = Σ_j ∂_j A_{ji}` (the divergence of the i-th
//! column) or as raw coefficients checked for vanishing divergence.
//!
//! Derivative symbols vanish on Nyquist planes, so the decomposition acts on
//! the Nyquist-free modes; content on Nyquist planes is dropped and reported.

mod library;
mod lift;
mod singular;

pub use library::{build_drift, BuiltDrift, DriftParams};
pub use lift::{particle_lift, LiftedDrift, SparseField};
pub use singular::{
    build_cutoff, cutoff_profile, default_antisymmetric, growth_exponent, morrey_counterexample_A, point_singularity_A,
    tail_growth_exponent, torus_delta, verify_structural_conditions, AxisSegment, CenteredFunctional, CutoffSequence,
    KSet, MorreyField, MorreyReport, SingularField, StructuralReport, StructuralRow, BOUNDED_GROWTH_EXPONENT,
    MORREY_GROWTH_FACTOR,
};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeds;
use crate::spectral::{derivative_symbol, Multiplier, Rank, SpectralField, TorusGrid, TWO_PI};

/// Relative tolerance for coefficient-wise antisymmetry of a potential.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;
/// `‖∇·b₁‖_{H^{-2}} ≤ DIVERGENCE_TOL · ‖b₁‖_{H^{-1}}` for raw divergence-free parts.
pub const DIVERGENCE_TOL: f64 = 1e-8;
/// Default cap on lifted modes for sparse particle lifts.
pub const DEFAULT_LIFT_BUDGET: usize = crate::spectral::DEFAULT_DIRECT_SUM_BUDGET;

#[derive(Debug, Clone, PartialEq)]
pub enum B1Rep {
    /// Antisymmetric matrix field `A`.
    Potential(SpectralField),
    /// Divergence-free vector field.
    Raw(SpectralField),
}

impl B1Rep {
    pub fn drift(&self) -> Result<SpectralField> {
        match self {
            B1Rep::Potential(a) => drift_from_A(a),
            B1Rep::Raw(b) => Ok(b.clone()),
        }
    }

    /// The potential, reconstructing it from raw coefficients when needed.
    pub fn potential(&self) -> Result<SpectralField> {
        match self {
            B1Rep::Potential(a) => Ok(a.clone()),
            B1Rep::Raw(b) => Ok(helmholtz_decompose(b)?.a),
        }
    }

    pub fn scaled(&self, w: f64) -> B1Rep {
        match self {
            B1Rep::Potential(a) => B1Rep::Potential(a.scale(w)),
            B1Rep::Raw(b) => B1Rep::Raw(b.scale(w)),
        }
    }

    /// `self + w · other`; mixed representations fall back to raw coefficients.
    pub fn add_scaled(&self, other: &B1Rep, w: f64) -> Result<B1Rep> {
        match (self, other) {
            (B1Rep::Potential(a), B1Rep::Potential(b)) => Ok(B1Rep::Potential(a.add(&b.scale(w))?)),
            _ => Ok(B1Rep::Raw(self.drift()?.add(&other.drift()?.scale(w))?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSnapshot {
    pub t: f64,
    pub b1: B1Rep,
    pub b2: SpectralField,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeDependence {
    Static,
    /// Piecewise constant in time, left endpoint; the top-level fields hold the first snapshot.
    Sampled(Vec<DriftSnapshot>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub grid: TorusGrid,
    pub b1: B1Rep,
    pub b2: SpectralField,
    pub mean: Vec<f64>,
    pub time_dep: TimeDependence,
    pub label: String,
}

impl DriftSpec {
    pub fn zero(grid: TorusGrid) -> Self {
        Self {
            grid,
            b1: B1Rep::Potential(SpectralField::zeros(grid, Rank::Matrix)),
            b2: SpectralField::zeros(grid, Rank::Vector),
            mean: vec![0.0; grid.dim()],
            time_dep: TimeDependence::Static,
            label: "zero".into(),
        }
    }

    pub fn from_potential(a: SpectralField, label: impl Into<String>) -> Result<Self> {
        if a.rank() != Rank::Matrix {
            return Err(Error::Dimension("potential must be a matrix field".into()));
        }
        check_antisymmetric(&a)?;
        let grid = a.grid();
        Ok(Self {
            b1: B1Rep::Potential(a),
            label: label.into(),
            ..Self::zero(grid)
        })
    }

    pub fn from_raw(b1: SpectralField, label: impl Into<String>) -> Result<Self> {
        if b1.rank() != Rank::Vector {
            return Err(Error::Dimension("raw drift must be a vector field".into()));
        }
        check_divergence_free(&b1)?;
        let grid = b1.grid();
        Ok(Self {
            b1: B1Rep::Raw(b1),
            label: label.into(),
            ..Self::zero(grid)
        })
    }

    pub fn with_b2(mut self, b2: SpectralField) -> Result<Self> {
        if b2.rank() != Rank::Vector || b2.grid() != self.grid {
            return Err(Error::Dimension("b2 must be a vector field on the drift grid".into()));
        }
        self.b2 = b2;
        Ok(self)
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.grid.dim() {
            return Err(Error::Dimension(format!(
                "mean has {} entries, grid dim is {}",
                mean.len(),
                self.grid.dim()
            )));
        }
        self.mean = mean;
        Ok(self)
    }

    /// Build a sampled drift from snapshots with strictly increasing times.
    pub fn sampled(label: impl Into<String>, mean: Vec<f64>, snaps: Vec<DriftSnapshot>) -> Result<Self> {
        let first = snaps
            .first()
            .ok_or_else(|| Error::Validation("sampled drift needs at least one snapshot".into()))?;
        let grid = first.b2.grid();
        for w in snaps.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Validation("snapshot times must increase".into()));
            }
        }
        for s in &snaps {
            match &s.b1 {
                B1Rep::Potential(a) => check_antisymmetric(a)?,
                B1Rep::Raw(b) => check_divergence_free(b)?,
            }
        }
        let mut out = Self {
            grid,
            b1: first.b1.clone(),
            b2: first.b2.clone(),
            mean,
            time_dep: TimeDependence::Static,
            label: label.into(),
        };
        out.time_dep = TimeDependence::Sampled(snaps);
        Ok(out)
    }

    pub fn is_static(&self) -> bool {
        matches!(self.time_dep, TimeDependence::Static)
    }

    pub fn b2_is_zero(&self) -> bool {
        let zero = |f: &SpectralField| f.max_abs_coeff() == 0.0;
        match &self.time_dep {
            TimeDependence::Static => zero(&self.b2),
            TimeDependence::Sampled(s) => s.iter().all(|x| zero(&x.b2)),
        }
    }

    /// Static slice in force at time `t` (left endpoint rule).
    pub fn slice_at(&self, t: f64) -> DriftSpec {
        match &self.time_dep {
            TimeDependence::Static => self.clone(),
            TimeDependence::Sampled(snaps) => {
                let idx = snaps.iter().rposition(|s| s.t <= t).unwrap_or(0);
                DriftSpec {
                    grid: self.grid,
                    b1: snaps[idx].b1.clone(),
                    b2: snaps[idx].b2.clone(),
                    mean: self.mean.clone(),
                    time_dep: TimeDependence::Static,
                    label: self.label.clone(),
                }
            }
        }
    }

    /// Restriction of every part to a coarser grid.
    pub fn truncated(&self, coarse: TorusGrid) -> Result<DriftSpec> {
        let rep = |r: &B1Rep| -> Result<B1Rep> {
            Ok(match r {
                B1Rep::Potential(a) => B1Rep::Potential(a.truncate(coarse)?),
                B1Rep::Raw(b) => B1Rep::Raw(b.truncate(coarse)?),
            })
        };
        let time_dep = match &self.time_dep {
            TimeDependence::Static => TimeDependence::Static,
            TimeDependence::Sampled(snaps) => TimeDependence::Sampled(
                snaps
                    .iter()
                    .map(|s| {
                        Ok(DriftSnapshot {
                            t: s.t,
                            b1: rep(&s.b1)?,
                            b2: s.b2.truncate(coarse)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(DriftSpec {
            grid: coarse,
            b1: rep(&self.b1)?,
            b2: self.b2.truncate(coarse)?,
            mean: self.mean.clone(),
            time_dep,
            label: self.label.clone(),
        })
    }

    pub fn b1_field(&self) -> Result<SpectralField> {
        self.b1.drift()
    }

    /// `b₁ + b₂ + mean` as one vector field.
    pub fn total_field(&self) -> Result<SpectralField> {
        let mut out = self.b1.drift()?.add(&self.b2)?;
        for (c, m) in self.mean.iter().enumerate() {
            out.component_mut(c)[0] += Complex64::new(*m, 0.0);
        }
        Ok(out)
    }
}

/// Errors unless `A_{ij} + A_{ji} = 0` coefficient-wise (diagonal included).
pub fn check_antisymmetric(a: &SpectralField) -> Result<()> {
    if a.rank() != Rank::Matrix {
        return Err(Error::Dimension("antisymmetry check needs a matrix field".into()));
    }
    let d = a.grid().dim();
    let scale = a.max_abs_coeff();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let aij = a.component(i * d + j);
            let aji = a.component(j * d + i);
            for (x, y) in aij.iter().zip(aji) {
                worst = worst.max((x + y).norm());
            }
        }
    }
    if worst > ANTISYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) && worst > 0.0 {
        return Err(Error::Validation(format!(
            "potential is not antisymmetric: max |A + Aᵀ| = {worst:.3e} (scale {scale:.3e})"
        )));
    }
    Ok(())
}

fn check_divergence_free(b: &SpectralField) -> Result<()> {
    let div = divergence(b)?;
    let lhs = div.sobolev_norm_sq(-2.0).sqrt();
    let rhs = b.sobolev_norm_sq(-1.0).sqrt();
    if lhs > DIVERGENCE_TOL * rhs {
        return Err(Error::Validation(format!(
            "raw b1 is not divergence-free: ‖div b‖_H^-2 = {lhs:.3e}, ‖b‖_H^-1 = {rhs:.3e}"
        )));
    }
    Ok(())
}

pub fn divergence(b: &SpectralField) -> Result<SpectralField> {
    if b.rank() != Rank::Vector {
        return Err(Error::Dimension("divergence needs a vector field".into()));
    }
    let grid = b.grid();
    let d = grid.dim();
    let n = grid.n();
    let mut out = SpectralField::zeros(grid, Rank::Scalar);
    out.set_real_flag(b.is_real());
    let dst = out.component_mut(0);
    for (i, slot) in dst.iter_mut().enumerate() {
        let k = grid.k_at(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..d {
            acc += derivative_symbol(k[j], n) * b.component(j)[i];
        }
        *slot = acc;
    }
    Ok(out)
}

pub fn gradient(u: &SpectralField) -> Result<SpectralField> {
    if u.rank() != Rank::Scalar {
        return Err(Error::Dimension("gradient needs a scalar field".into()));
    }
    let grid = u.grid();
    let d = grid.dim();
    let n = grid.n();
    let mut out = SpectralField::zeros(grid, Rank::Vector);
    out.set_real_flag(u.is_real());
    let src = u.component(0).to_vec();
    for j in 0..d {
        let dst = out.component_mut(j);
        for (i, slot) in dst.iter_mut().enumerate() {
            let k = grid.k_at(i);
            *slot = derivative_symbol(k[j], n) * src[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Helmholtz {
    pub a: SpectralField,
    pub v: SpectralField,
    pub mean: Vec<f64>,
    /// L² norm of the Nyquist-plane content that the decomposition cannot represent.
    pub dropped_nyquist: f64,
}

/// `A_{ij} = Δ^{-1}(∂_i b^j − ∂_j b^i)`, `V = Δ^{-1}∇·b`, `mean = b̂(0)`.
pub fn helmholtz_decompose(b: &SpectralField) -> Result<Helmholtz> {
    if b.rank() != Rank::Vector {
        return Err(Error::Dimension("Helmholtz decomposition needs a vector field".into()));
    }
    let grid = b.grid();
    let d = grid.dim();
    let n = grid.n();
    let len = grid.len();
    let mut a = SpectralField::zeros(grid, Rank::Matrix);
    let mut v = SpectralField::zeros(grid, Rank::Scalar);
    a.set_real_flag(b.is_real());
    v.set_real_flag(b.is_real());
    let mut dropped = 0.0;
    let mut sigma = [Complex64::new(0.0, 0.0); 3];
    let mut bk = [Complex64::new(0.0, 0.0); 3];
    for i in 1..len {
        for c in 0..d {
            bk[c] = b.component(c)[i];
        }
        if grid.on_nyquist_plane(i) {
            dropped += bk[..d].iter().map(|x| x.norm_sqr()).sum::<f64>();
            continue;
        }
        let k = grid.k_at(i);
        for c in 0..d {
            sigma[c] = derivative_symbol(k[c], n);
        }
        let lap = -TWO_PI * TWO_PI * grid.k_norm_sq(i);
        let mut div = Complex64::new(0.0, 0.0);
        for c in 0..d {
            div += sigma[c] * bk[c];
        }
        v.component_mut(0)[i] = div / lap;
        for p in 0..d {
            for q in 0..d {
                if p != q {
                    a.component_mut(p * d + q)[i] = (sigma[p] * bk[q] - sigma[q] * bk[p]) / lap;
                }
            }
        }
    }
    let mean = (0..d).map(|c| b.component(c)[0].re).collect();
    Ok(Helmholtz {
        a,
        v,
        mean,
        dropped_nyquist: dropped.sqrt(),
    })
}

/// `b^i = Σ_j ∂_j A_{ji}`; the input must be antisymmetric.
#[allow(non_snake_case)]
pub fn drift_from_A(a: &SpectralField) -> Result<SpectralField> {
    check_antisymmetric(a)?;
    let grid = a.grid();
    let d = grid.dim();
    let n = grid.n();
    let mut out = SpectralField::zeros(grid, Rank::Vector);
    out.set_real_flag(a.is_real());
    for c in 0..d {
        for j in 0..d {
            if j == c {
                continue;
            }
            let src = a.component(j * d + c).to_vec();
            let dst = out.component_mut(c);
            for (i, slot) in dst.iter_mut().enumerate() {
                if src[i].re == 0.0 && src[i].im == 0.0 {
                    continue;
                }
                let k = grid.k_at(i);
                *slot += derivative_symbol(k[j], n) * src[i];
            }
        }
    }
    Ok(out)
}

/// Canonical representative of `{k, -k}`: first nonzero component positive.
fn is_canonical(k: &[i64]) -> bool {
    for &v in k {
        if v != 0 {
            return v > 0;
        }
    }
    false
}

/// Massless free field on `𝕋²`: `ξ̂(0) = 0`, `ξ̂(k) = γ_k / (2π|k|)`.
///
/// Each pair `±k` draws its own `γ_k = (a + ib)/√2` from a stream keyed by
/// `(seed, k)`, so a field sampled at resolution `N` is the truncation of the
/// same seed at `2N`. Nyquist planes are left empty.
pub fn sample_gff(grid: TorusGrid, seed: u64) -> Result<SpectralField> {
    if grid.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "the free field sampler is two-dimensional, got dim {}",
            grid.dim()
        )));
    }
    let mut f = SpectralField::zeros(grid, Rank::Scalar);
    let len = grid.len();
    let coeffs = f.component_mut(0);
    for i in 1..len {
        if grid.on_nyquist_plane(i) {
            continue;
        }
        let k = grid.k_at(i);
        if !is_canonical(&k[..2]) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[k[0] as u64, k[1] as u64]));
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let gamma = Complex64::new(a, b) / 2f64.sqrt();
        let val = gamma / (TWO_PI * grid.k_norm_sq(i).sqrt());
        coeffs[i] = val;
        let j = grid.conjugate_index(i);
        coeffs[j] = val.conj();
    }
    f.set_real_flag(true);
    Ok(f)
}

/// `A₁₂ = −A₂₁ = −log(1 − Δ)^{−α} ξ`, so `b₁ = ∇^⊥ log(1 − Δ)^{−α} ξ`.
pub fn gff_curl_drift(xi: &SpectralField, alpha: f64) -> Result<DriftSpec> {
    if xi.grid().dim() != 2 || xi.rank() != Rank::Scalar {
        return Err(Error::Unsupported("free-field curl drift needs a scalar field on 𝕋²".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
    }
    let psi = Multiplier::log_regularizer(alpha).apply(xi)?;
    let a = SpectralField::stack(
        Rank::Matrix,
        &[
            SpectralField::zeros(xi.grid(), Rank::Scalar),
            psi.scale(-1.0),
            psi.clone(),
            SpectralField::zeros(xi.grid(), Rank::Scalar),
        ],
    )?;
    DriftSpec::from_potential(a, format!("gff_curl(alpha={alpha})"))
}

/// Shear flow `b = (U sin(2π m x₂), 0, …)` through its potential
/// `A₁₂ = −A₂₁ = U cos(2π m x₂) / (2π m)`.
pub fn shear_drift(grid: TorusGrid, amplitude: f64, m: i64) -> Result<DriftSpec> {
    if grid.dim() < 2 {
        return Err(Error::Unsupported("shear drift needs dim >= 2".into()));
    }
    if m == 0 || (m.unsigned_abs() as usize) * 2 >= grid.n() {
        return Err(Error::Resolution(format!("shear wavenumber {m} not resolvable on N = {}", grid.n())));
    }
    let d = grid.dim();
    let mut k = [0i64; 3];
    k[1] = m;
    let c = amplitude / (TWO_PI * m as f64) / 2.0;
    let mut a = SpectralField::zeros(grid, Rank::Matrix);
    let ip = grid.k_index(&k[..d]).expect("resolvable");
    k[1] = -m;
    let im = grid.k_index(&k[..d]).expect("resolvable");
    for (idx, sign) in [(1usize, 1.0), (d, -1.0)] {
        let comp = a.component_mut(idx);
        comp[ip] = Complex64::new(sign * c, 0.0);
        comp[im] = Complex64::new(sign * c, 0.0);
    }
    a.set_real_flag(true);
    DriftSpec::from_potential(a, format!("shear(U={amplitude},m={m})"))
}

pub fn constant_drift(grid: TorusGrid, c: Vec<f64>) -> Result<DriftSpec> {
    let mut s = DriftSpec::zero(grid).with_mean(c)?;
    s.label = "constant".into();
    Ok(s)
}
