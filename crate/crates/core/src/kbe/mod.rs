//! Spectral Galerkin solvers for `∂_t u = Δu + b·∇u`: the generator in its two
//! algebraic forms, the backward equation, and the resolvent.
//!
//! All quadratic terms are evaluated on the 2× padded grid, so for
//! band-limited inputs the truncated operator is the exact Galerkin
//! projection and its skew part stays skew. Vectors live on the
//! Nyquist-free modes; Nyquist entries are ignored on input and zero on output.

mod backward;
mod resolvent;

pub use backward::{
    apriori_report, b2_energy_constant, solve_backward, BackwardOptions, LedgerRow, PDETrajectory,
    BLOWUP_FACTOR,
};
pub use resolvent::{
    h_minus1_norm, injectivity_probe, resolvent_solve, InjectivityProbe, ResolventOptions, ResolventSolution,
    DENSE_SVD_MAX_MODES,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::spectral::fft::{fft_nd, FftDirection};
use crate::spectral::{derivative_symbol, Rank, SpectralField, TorusGrid, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorForm {
    /// `Δu + ∇·(b₁u) + b₂·∇u`.
    GradientOut,
    /// `Δu + ∇·(A∇u) + b₂·∇u`.
    DivergenceOut,
}

impl GeneratorForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeneratorForm::GradientOut => "gradient_out",
            GeneratorForm::DivergenceOut => "divergence_out",
        }
    }
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Generator of one static drift slice, with drift samples cached on the padded grid.
pub struct Generator {
    grid: TorusGrid,
    fine: TorusGrid,
    form: GeneratorForm,
    /// Coarse index → fine index, `None` on Nyquist planes.
    fmap: Vec<Option<usize>>,
    dsym: Vec<[Complex64; 3]>,
    /// `−4π²|k|² + 2πi m·k` with `m` the mean drift.
    diag: Vec<Complex64>,
    a: Option<Vec<Complex64>>,
    b1: Option<Vec<Complex64>>,
    b2: Option<Vec<Complex64>>,
}

fn fine_samples(field: &SpectralField, fine: TorusGrid) -> Vec<Complex64> {
    let padded = field.pad(fine.n() / field.grid().n());
    debug_assert_eq!(padded.grid(), fine);
    padded.inverse_transform_complex()
}

impl Generator {
    pub fn new(drift: &DriftSpec, form: GeneratorForm) -> Result<Self> {
        if !drift.is_static() {
            return Err(Error::Validation("generator needs a static drift slice".into()));
        }
        let grid = drift.grid;
        let d = grid.dim();
        let n = grid.n();
        let fine = grid.refined(2);
        let len = grid.len();
        let mut fmap = Vec::with_capacity(len);
        let mut dsym = Vec::with_capacity(len);
        let mut diag = Vec::with_capacity(len);
        for i in 0..len {
            let k = grid.k_at(i);
            if grid.on_nyquist_plane(i) {
                fmap.push(None);
            } else {
                fmap.push(fine.k_index(&k[..d]));
            }
            let mut s = [ZERO; 3];
            for a in 0..d {
                s[a] = derivative_symbol(k[a], n);
            }
            dsym.push(s);
            let mut v = Complex64::new(-4.0 * std::f64::consts::PI.powi(2) * grid.k_norm_sq(i), 0.0);
            for a in 0..d {
                v += s[a] * drift.mean[a];
            }
            diag.push(v);
        }
        let nonzero = |f: &SpectralField| f.max_abs_coeff() > 0.0;
        let b2 = nonzero(&drift.b2).then(|| fine_samples(&drift.b2, fine));
        let (a, b1) = match form {
            GeneratorForm::DivergenceOut => {
                let mut a = drift.b1.potential()?;
                a.zero_nyquist();
                (nonzero(&a).then(|| fine_samples(&a, fine)), None)
            }
            GeneratorForm::GradientOut => {
                let mut b1 = drift.b1.drift()?;
                b1.zero_nyquist();
                (None, nonzero(&b1).then(|| fine_samples(&b1, fine)))
            }
        };
        Ok(Self {
            grid,
            fine,
            form,
            fmap,
            dsym,
            diag,
            a,
            b1,
            b2,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn form(&self) -> GeneratorForm {
        self.form
    }

    /// Diagonal part `−4π²|k|² + 2πi m·k`.
    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn has_drift_part(&self) -> bool {
        self.a.is_some() || self.b1.is_some() || self.b2.is_some()
    }

    fn to_fine(&self, coeffs: &[Complex64], sym: Option<usize>) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.fine.len()];
        for (i, c) in coeffs.iter().enumerate() {
            if let Some(j) = self.fmap[i] {
                buf[j] = match sym {
                    Some(a) => self.dsym[i][a] * c,
                    None => *c,
                };
            }
        }
        fft_nd(&mut buf, self.fine, FftDirection::Inverse);
        buf
    }

    /// Forward transform of fine samples restricted to the coarse Nyquist-free modes,
    /// optionally multiplied by the derivative symbol along `axis`, accumulated into `out`.
    fn accumulate(&self, mut buf: Vec<Complex64>, axis: Option<usize>, out: &mut [Complex64]) {
        fft_nd(&mut buf, self.fine, FftDirection::Forward);
        let scale = 1.0 / self.fine.len() as f64;
        for (i, o) in out.iter_mut().enumerate() {
            if let Some(j) = self.fmap[i] {
                let v = buf[j] * scale;
                *o += match axis {
                    Some(a) => self.dsym[i][a] * v,
                    None => v,
                };
            }
        }
    }

    /// Off-diagonal (drift) part `B` of `L = diag + B`, on raw coefficients.
    pub fn apply_drift_part(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.drift_part(u, false)
    }

    /// `B*`, the `L²` adjoint of [`Generator::apply_drift_part`].
    pub fn apply_drift_part_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.drift_part(u, true)
    }

    fn drift_part(&self, u: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let d = self.grid.dim();
        let flen = self.fine.len();
        let mut out = vec![ZERO; u.len()];
        if !self.has_drift_part() {
            return out;
        }
        let need_grad = self.a.is_some() || (self.b2.is_some() && !adjoint) || (self.b1.is_some() && adjoint);
        let need_vals = (self.b1.is_some() && !adjoint) || (self.b2.is_some() && adjoint);
        let grads: Vec<Vec<Complex64>> = if need_grad {
            (0..d).map(|a| self.to_fine(u, Some(a))).collect()
        } else {
            Vec::new()
        };
        let vals = need_vals.then(|| self.to_fine(u, None));
        let sign = if adjoint { -1.0 } else { 1.0 };
        // divergence part: Σ_i ∂_i flux_i
        let mut fluxes: Vec<Option<Vec<Complex64>>> = vec![None; d];
        let mut add_flux = |i: usize, f: &dyn Fn(usize) -> Complex64| {
            let slot = fluxes[i].get_or_insert_with(|| vec![ZERO; flen]);
            for (x, v) in slot.iter_mut().enumerate() {
                *v += f(x);
            }
        };
        if let Some(a) = &self.a {
            // ∇·(A∇u); its adjoint is ∇·(Aᵀ∇u) = −∇·(A∇u)
            for i in 0..d {
                for j in 0..d {
                    let aij = &a[(i * d + j) * flen..(i * d + j + 1) * flen];
                    let g = &grads[j];
                    add_flux(i, &|x| aij[x] * g[x] * sign);
                }
            }
        }
        if let (Some(b1), false) = (&self.b1, adjoint) {
            let v = vals.as_ref().expect("values computed");
            for i in 0..d {
                let bi = &b1[i * flen..(i + 1) * flen];
                add_flux(i, &|x| bi[x] * v[x]);
            }
        }
        if let (Some(b2), true) = (&self.b2, adjoint) {
            let v = vals.as_ref().expect("values computed");
            for i in 0..d {
                let bi = &b2[i * flen..(i + 1) * flen];
                add_flux(i, &|x| -bi[x] * v[x]);
            }
        }
        for (i, f) in fluxes.into_iter().enumerate() {
            if let Some(f) = f {
                self.accumulate(f, Some(i), &mut out);
            }
        }
        // transport part: s = c·∇u
        let transport = match (adjoint, &self.b1, &self.b2) {
            (false, _, Some(b2)) => Some((b2, 1.0)),
            (true, Some(b1), _) => Some((b1, -1.0)),
            _ => None,
        };
        if let Some((c, s)) = transport {
            let mut buf = vec![ZERO; flen];
            for i in 0..d {
                let ci = &c[i * flen..(i + 1) * flen];
                let g = &grads[i];
                for (x, v) in buf.iter_mut().enumerate() {
                    *v += ci[x] * g[x] * s;
                }
            }
            self.accumulate(buf, None, &mut out);
        }
        out
    }

    /// `L u` on raw coefficients.
    pub fn apply_coeffs(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.apply_drift_part(u);
        for (i, o) in out.iter_mut().enumerate() {
            if self.fmap[i].is_some() {
                *o += self.diag[i] * u[i];
            }
        }
        out
    }

    /// `L* u` on raw coefficients.
    pub fn apply_adjoint_coeffs(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.apply_drift_part_adjoint(u);
        for (i, o) in out.iter_mut().enumerate() {
            if self.fmap[i].is_some() {
                *o += self.diag[i].conj() * u[i];
            }
        }
        out
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.grid() != self.grid || u.rank() != Rank::Scalar {
            return Err(Error::Dimension("generator input must be scalar on the drift grid".into()));
        }
        SpectralField::from_coeffs(self.grid, Rank::Scalar, self.apply_coeffs(u.coeffs()), u.is_real())
    }

    /// Indices of the Nyquist-free modes the operator acts on.
    pub fn active_modes(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&i| self.fmap[i].is_some()).collect()
    }
}

/// `L u` for a static drift (sampled drifts use their first slice).
pub fn apply_generator(drift: &DriftSpec, u: &SpectralField, form: GeneratorForm) -> Result<SpectralField> {
    Generator::new(&drift.slice_at(0.0), form)?.apply(u)
}

/// `e_k` with unit amplitude as a complex field.
pub fn plane_wave(grid: TorusGrid, k: &[i64]) -> Result<SpectralField> {
    SpectralField::mode(grid, k, Complex64::new(1.0, 0.0))
}

/// Symbol `−4π²|k|² + 2πi c·k` of the constant-drift generator.
pub fn constant_drift_symbol(c: &[f64], k: &[i64]) -> Complex64 {
    let ksq: f64 = k.iter().map(|v| (v * v) as f64).sum();
    let ck: f64 = c.iter().zip(k).map(|(a, b)| a * *b as f64).sum();
    Complex64::new(-TWO_PI * TWO_PI * ksq, TWO_PI * ck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{constant_drift, gff_curl_drift, sample_gff, shear_drift};

    fn random_band_limited(grid: TorusGrid, kmax: i64, seed: u64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(grid, Rank::Scalar);
        for i in 0..grid.len() {
            let k = grid.k_at(i);
            if k.iter().all(|v| v.abs() <= kmax) {
                f.coeffs_mut()[i] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
        f.symmetrize();
        f
    }

    #[test]
    fn zero_drift_is_laplacian() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = plane_wave(g, &[2, -1]).unwrap();
        let out = apply_generator(&DriftSpec::zero(g), &u, GeneratorForm::DivergenceOut).unwrap();
        let i = g.k_index(&[2, -1]).unwrap();
        assert!((out.coeffs()[i] - Complex64::new(-TWO_PI * TWO_PI * 5.0, 0.0)).norm() < 1e-12);
        assert!(out.sub(&u.scale(-TWO_PI * TWO_PI * 5.0)).unwrap().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn constant_drift_symbol_matches() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = vec![0.3, -1.7];
        let drift = constant_drift(g, c.clone()).unwrap();
        for form in [GeneratorForm::DivergenceOut, GeneratorForm::GradientOut] {
            let u = plane_wave(g, &[1, 3]).unwrap();
            let out = apply_generator(&drift, &u, form).unwrap();
            let i = g.k_index(&[1, 3]).unwrap();
            assert!((out.coeffs()[i] - constant_drift_symbol(&c, &[1, 3])).norm() < 1e-12);
        }
    }

    #[test]
    fn forms_agree_and_skew_part_is_skew() {
        let g = TorusGrid::new(2, 32).unwrap();
        let drift = gff_curl_drift(&sample_gff(g, 5).unwrap(), 1.5).unwrap();
        let gd = Generator::new(&drift, GeneratorForm::DivergenceOut).unwrap();
        let gg = Generator::new(&drift, GeneratorForm::GradientOut).unwrap();
        for seed in 0..5 {
            let u = random_band_limited(g, 6, seed);
            let a = gd.apply(&u).unwrap();
            let b = gg.apply(&u).unwrap();
            assert!(a.sub(&b).unwrap().l2_norm() <= 1e-8 * a.l2_norm());
            let bu = SpectralField::from_coeffs(g, Rank::Scalar, gd.apply_drift_part(u.coeffs()), true).unwrap();
            assert!(u.inner(&bu).unwrap().norm() <= 1e-8 * u.gradient_norm_sq());
        }
    }

    #[test]
    fn adjoint_is_exact() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut drift = shear_drift(g, 1.3, 1).unwrap();
        let b2 = SpectralField::forward_transform(
            g,
            Rank::Vector,
            &(0..2 * g.len())
                .map(|j| {
                    let x = g.point(j % g.len());
                    (TWO_PI * (x[0] + 2.0 * x[1]) + j as f64 / g.len() as f64).sin()
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let mut b2 = b2;
        b2.zero_nyquist();
        drift = drift.with_b2(b2).unwrap().with_mean(vec![0.4, 0.1]).unwrap();
        for form in [GeneratorForm::DivergenceOut, GeneratorForm::GradientOut] {
            let gen = Generator::new(&drift, form).unwrap();
            let u = random_band_limited(g, 5, 1);
            let v = random_band_limited(g, 5, 2);
            let lu = gen.apply_coeffs(u.coeffs());
            let lsv = gen.apply_adjoint_coeffs(v.coeffs());
            let lhs: Complex64 = v.coeffs().iter().zip(&lu).map(|(a, b)| a.conj() * b).sum();
            let rhs: Complex64 = lsv.iter().zip(u.coeffs()).map(|(a, b)| a.conj() * b).sum();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
    }
}
