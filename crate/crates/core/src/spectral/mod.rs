//! Truncated Fourier representation of periodic fields on the unit torus.
//!
//! Coefficients follow the pairing `û(k) = ∫ u(x) e^{-2πik·x} dx`, discretized
//! as `û(k) = N^{-d} Σ_j u(x_j) e^{-2πik·x_j}` on the collocation points
//! `x_j = j/N`. Wavenumbers per axis live in `(-N/2, N/2]` and are stored in
//! FFT order (index `i` carries `k = i` for `i ≤ N/2`, otherwise `k = i - N`).
//!
//! Odd-order derivative symbols vanish on Nyquist planes (`k_i = N/2`), which
//! keeps real fields real. Products of fields are formed on a 2× zero-padded
//! grid and truncated back with the Nyquist planes removed.

mod eval;
pub(crate) mod fft;
mod multiplier;
pub mod snapshot;

pub use eval::{EvalMode, GridSampler, DEFAULT_DIRECT_SUM_BUDGET};
pub use multiplier::{derivative_symbol, MatrixMultiplier, Multiplier, ZeroModeRule};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use fft::{fft_nd, FftDirection};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Dimension(format!(
                "modes per axis must be an even integer >= 4, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of collocation points (equivalently, stored modes).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Grid with `factor` times as many modes per axis.
    pub fn refined(&self, factor: usize) -> TorusGrid {
        TorusGrid {
            dim: self.dim,
            n: self.n * factor,
        }
    }

    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k > half || k <= -half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Multi-index of a flat (row-major, axis 0 slowest) position.
    #[inline]
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    #[inline]
    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Wavenumber vector stored at a flat index (unused axes are zero).
    #[inline]
    pub fn k_at(&self, flat: usize) -> [i64; 3] {
        let idx = self.unflatten(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(idx[a]);
        }
        k
    }

    pub fn k_index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            idx[a] = self.axis_index(k[a])?;
        }
        Some(self.flatten(&idx))
    }

    /// Flat index of `-k` with per-axis wraparound (the DFT conjugate partner).
    #[inline]
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let idx = self.unflatten(flat);
        let mut out = [0usize; 3];
        for a in 0..self.dim {
            out[a] = (self.n - idx[a]) % self.n;
        }
        self.flatten(&out)
    }

    #[inline]
    pub fn on_nyquist_plane(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        idx[..self.dim].iter().any(|&i| i == self.n / 2)
    }

    #[inline]
    pub fn k_norm_sq(&self, flat: usize) -> f64 {
        let k = self.k_at(flat);
        k.iter().map(|&v| (v * v) as f64).sum()
    }

    /// Collocation point at a flat index.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }
}

/// Tensor rank of a field; component `(i, j)` of a matrix field is stored at `i * dim + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Scalar,
    Vector,
    Matrix,
}

impl Rank {
    pub fn components(&self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::Matrix => dim * dim,
        }
    }

    pub fn code(&self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Matrix => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Rank> {
        match code {
            0 => Some(Rank::Scalar),
            1 => Some(Rank::Vector),
            2 => Some(Rank::Matrix),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    rank: Rank,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, rank: Rank) -> Self {
        let len = rank.components(grid.dim()) * grid.len();
        Self {
            grid,
            rank,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
            real: true,
        }
    }

    pub fn from_coeffs(grid: TorusGrid, rank: Rank, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        let expected = rank.components(grid.dim()) * grid.len();
        if coeffs.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self {
            grid,
            rank,
            coeffs,
            real,
        })
    }

    /// Single Fourier mode `amplitude · e^{2πik·x}` (complex-valued unless `k = 0`).
    pub fn mode(grid: TorusGrid, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let idx = grid
            .k_index(k)
            .ok_or_else(|| Error::Dimension(format!("wavenumber {k:?} not resolvable")))?;
        let mut f = Self::zeros(grid, Rank::Scalar);
        f.coeffs[idx] = amplitude;
        f.real = k[..grid.dim()].iter().all(|&v| v == 0) && amplitude.im == 0.0;
        Ok(f)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid, Rank::Scalar);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// Forward transform of collocation samples laid out component-major.
    pub fn forward_transform(grid: TorusGrid, rank: Rank, samples: &[f64]) -> Result<Self> {
        let ncomp = rank.components(grid.dim());
        if samples.len() != ncomp * grid.len() {
            return Err(Error::Dimension(format!(
                "sample array has {} entries, grid needs {}",
                samples.len(),
                ncomp * grid.len()
            )));
        }
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let scale = 1.0 / grid.len() as f64;
        for chunk in coeffs.chunks_mut(grid.len()) {
            fft_nd(chunk, grid, FftDirection::Forward);
            chunk.iter_mut().for_each(|c| *c *= scale);
        }
        Ok(Self {
            grid,
            rank,
            coeffs,
            real: true,
        })
    }

    pub fn forward_transform_complex(grid: TorusGrid, rank: Rank, samples: &[Complex64]) -> Result<Self> {
        let ncomp = rank.components(grid.dim());
        if samples.len() != ncomp * grid.len() {
            return Err(Error::Dimension(format!(
                "sample array has {} entries, grid needs {}",
                samples.len(),
                ncomp * grid.len()
            )));
        }
        let mut coeffs = samples.to_vec();
        let scale = 1.0 / grid.len() as f64;
        for chunk in coeffs.chunks_mut(grid.len()) {
            fft_nd(chunk, grid, FftDirection::Forward);
            chunk.iter_mut().for_each(|c| *c *= scale);
        }
        Ok(Self {
            grid,
            rank,
            coeffs,
            real: false,
        })
    }

    /// Samples on the collocation grid (component-major, real parts).
    pub fn inverse_transform(&self) -> Vec<f64> {
        self.inverse_transform_complex().into_iter().map(|c| c.re).collect()
    }

    pub fn inverse_transform_complex(&self) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        for chunk in out.chunks_mut(self.grid.len()) {
            fft_nd(chunk, self.grid, FftDirection::Inverse);
        }
        out
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real_flag(&mut self, real: bool) {
        self.real = real;
    }

    pub fn components(&self) -> usize {
        self.rank.components(self.grid.dim())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Component `c` as a scalar field.
    pub fn component_field(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            rank: Rank::Scalar,
            coeffs: self.component(c).to_vec(),
            real: self.real,
        }
    }

    /// Stack scalar fields into a field of the given rank.
    pub fn stack(rank: Rank, parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Dimension("cannot stack zero components".into()))?;
        let grid = first.grid;
        if parts.len() != rank.components(grid.dim()) {
            return Err(Error::Dimension(format!(
                "rank {rank:?} needs {} components, got {}",
                rank.components(grid.dim()),
                parts.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(parts.len() * grid.len());
        let mut real = true;
        for p in parts {
            if p.grid != grid || p.rank != Rank::Scalar {
                return Err(Error::Dimension("stacked parts must be scalar fields on one grid".into()));
            }
            real &= p.real;
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(SpectralField {
            grid,
            rank,
            coeffs,
            real,
        })
    }

    pub fn mean(&self) -> Vec<Complex64> {
        (0..self.components()).map(|c| self.component(c)[0]).collect()
    }

    pub fn ensure_same_shape(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.rank != other.rank {
            return Err(Error::Dimension(format!(
                "rank mismatch: {:?} vs {:?}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.ensure_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(SpectralField {
            grid: self.grid,
            rank: self.rank,
            coeffs,
            real: self.real && other.real,
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.ensure_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(SpectralField {
            grid: self.grid,
            rank: self.rank,
            coeffs,
            real: self.real && other.real,
        })
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            real: self.real && s.im == 0.0,
        }
    }

    /// `Σ_k |û(k)|²` summed over components; equals the squared L² norm.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Squared inhomogeneous Sobolev norm `Σ (1 + 4π²|k|²)^s |û(k)|²`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        let len = self.grid.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k2 = self.grid.k_norm_sq(i % len);
                (1.0 + TWO_PI * TWO_PI * k2).powf(s) * c.norm_sqr()
            })
            .sum()
    }

    /// `‖∇u‖²_{L²} = Σ 4π²|k|² |û(k)|²` (Nyquist planes excluded, matching the derivative symbols).
    pub fn gradient_norm_sq(&self) -> f64 {
        let len = self.grid.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let flat = i % len;
                if self.grid.on_nyquist_plane(flat) {
                    0.0
                } else {
                    TWO_PI * TWO_PI * self.grid.k_norm_sq(flat) * c.norm_sqr()
                }
            })
            .sum()
    }

    /// `⟨self, other⟩_{L²} = Σ_k û(k)·conj(v̂(k))`, summed over components.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.ensure_same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    /// Largest deviation from Hermitian symmetry `û(-k) = conj(û(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.components() {
            let comp = self.component(c);
            for i in 0..len {
                let j = self.grid.conjugate_index(i);
                worst = worst.max((comp[j] - comp[i].conj()).norm());
            }
        }
        worst
    }

    /// Replace the coefficients by their Hermitian-symmetric part and mark the field real.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        let grid = self.grid;
        for c in 0..self.components() {
            let comp = self.component_mut(c);
            let orig = comp.to_vec();
            for i in 0..len {
                let j = grid.conjugate_index(i);
                comp[i] = 0.5 * (orig[i] + orig[j].conj());
            }
        }
        self.real = true;
    }

    pub fn zero_nyquist(&mut self) {
        let len = self.grid.len();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if self.grid.on_nyquist_plane(i % len) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero-pad to a grid with `factor` times the modes per axis.
    ///
    /// A Nyquist coefficient is split evenly between `±N/2` so real fields stay real.
    pub fn pad(&self, factor: usize) -> SpectralField {
        let fine = self.grid.refined(factor);
        let dim = self.grid.dim();
        let half = (self.grid.n() / 2) as i64;
        let mut out = SpectralField::zeros(fine, self.rank);
        out.real = self.real;
        let len = self.grid.len();
        for c in 0..self.components() {
            let src = self.component(c);
            let dst = out.component_mut(c);
            for (i, &v) in src.iter().enumerate().take(len) {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let k = self.grid.k_at(i);
                let splits = k[..dim].iter().filter(|&&ka| ka == half).count();
                let weight = 0.5f64.powi(splits as i32);
                for mask in 0..(1usize << splits) {
                    let mut kk = k;
                    let mut bit = 0;
                    for a in 0..dim {
                        if k[a] == half {
                            if mask >> bit & 1 == 1 {
                                kk[a] = -half;
                            }
                            bit += 1;
                        }
                    }
                    let j = fine.k_index(&kk).expect("padded grid resolves coarse modes");
                    dst[j] += v * weight;
                }
            }
        }
        out
    }

    /// Restrict to a coarser grid, dropping every mode outside `|k_i| < N/2`.
    pub fn truncate(&self, coarse: TorusGrid) -> Result<SpectralField> {
        if coarse.dim() != self.grid.dim() || coarse.n() > self.grid.n() {
            return Err(Error::Dimension(format!(
                "cannot truncate {:?} to {:?}",
                self.grid, coarse
            )));
        }
        let mut out = SpectralField::zeros(coarse, self.rank);
        out.real = self.real;
        let len = coarse.len();
        for c in 0..self.components() {
            let src = self.component(c);
            let dst = out.component_mut(c);
            for (j, slot) in dst.iter_mut().enumerate().take(len) {
                if coarse.on_nyquist_plane(j) {
                    continue;
                }
                let k = coarse.k_at(j);
                let i = self.grid.k_index(&k).expect("fine grid resolves coarse modes");
                *slot = src[i];
            }
        }
        Ok(out)
    }

    /// L² mass carried by modes with `|k| > N/4`, relative to the total.
    pub fn high_mode_fraction(&self) -> f64 {
        let len = self.grid.len();
        let cut = (self.grid.n() as f64 / 4.0).powi(2);
        let total = self.l2_norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.k_norm_sq(i % len) > cut)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        high / total
    }
}

/// Pointwise products evaluated on the 2× padded grid.
///
/// Fields are uploaded once as padded physical samples; products of band-limited
/// inputs are then exact up to rounding.
pub struct PaddedSamples {
    pub fine: TorusGrid,
    pub samples: Vec<Complex64>,
    pub components: usize,
}

impl PaddedSamples {
    pub fn from_field(field: &SpectralField) -> Self {
        let padded = field.pad(2);
        let fine = padded.grid();
        let components = padded.components();
        let samples = padded.inverse_transform_complex();
        Self {
            fine,
            samples,
            components,
        }
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.fine.len();
        &self.samples[c * len..(c + 1) * len]
    }

    /// Transform padded samples back to a field on the fine grid.
    pub fn to_fine_field(fine: TorusGrid, rank: Rank, samples: &[Complex64], real: bool) -> Result<SpectralField> {
        let mut f = SpectralField::forward_transform_complex(fine, rank, samples)?;
        f.set_real_flag(real);
        if real {
            f.symmetrize();
        }
        Ok(f)
    }
}

/// Dealiased pointwise product of two scalar fields, returned on the 2× padded grid.
pub fn product_padded(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    if a.grid() != b.grid() {
        return Err(Error::Dimension("product of fields on different grids".into()));
    }
    if a.rank() != Rank::Scalar || b.rank() != Rank::Scalar {
        return Err(Error::Dimension("product_padded expects scalar fields".into()));
    }
    let pa = PaddedSamples::from_field(a);
    let pb = PaddedSamples::from_field(b);
    let prod: Vec<Complex64> = pa.samples.iter().zip(&pb.samples).map(|(x, y)| x * y).collect();
    PaddedSamples::to_fine_field(pa.fine, Rank::Scalar, &prod, a.is_real() && b.is_real())
}

/// Dealiased product truncated back to the input grid.
pub fn product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    product_padded(a, b)?.truncate(a.grid())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dim: usize, n: usize) -> TorusGrid {
        TorusGrid::new(dim, n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(TorusGrid::new(4, 8).is_err());
        assert!(TorusGrid::new(2, 6).is_ok());
        assert!(TorusGrid::new(2, 7).is_err());
        assert!(TorusGrid::new(1, 2).is_err());
    }

    #[test]
    fn wavenumber_order_matches_fft_layout() {
        let g = grid(1, 8);
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.axis_index(-4), None);
        assert_eq!(g.axis_index(4), Some(4));
        let g3 = grid(3, 4);
        for flat in 0..g3.len() {
            let k = g3.k_at(flat);
            assert_eq!(g3.k_index(&k), Some(flat));
        }
    }

    #[test]
    fn zero_samples_give_zero_coefficients() {
        let g = grid(2, 8);
        let f = SpectralField::forward_transform(g, Rank::Scalar, &vec![0.0; 64]).unwrap();
        assert!(f.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cosine_has_two_half_coefficients() {
        // direct DFT sum over the 8 points as oracle
        let g = grid(1, 8);
        let samples: Vec<f64> = (0..8).map(|j| (TWO_PI * j as f64 / 8.0).cos()).collect();
        let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        for kk in -3i64..=4 {
            let mut oracle = Complex64::new(0.0, 0.0);
            for (j, &s) in samples.iter().enumerate() {
                let phase = -TWO_PI * kk as f64 * j as f64 / 8.0;
                oracle += s * Complex64::new(phase.cos(), phase.sin());
            }
            oracle /= 8.0;
            let got = f.coeffs()[g.k_index(&[kk]).unwrap()];
            assert!((got - oracle).norm() < 1e-14);
            let expected = if kk.abs() == 1 { 0.5 } else { 0.0 };
            assert!((got.re - expected).abs() < 1e-14 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let g = grid(2, 8);
        let err = SpectralField::forward_transform(g, Rank::Scalar, &[0.0; 10]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn pad_then_truncate_is_identity_off_nyquist() {
        let g = grid(2, 8);
        let samples: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let mut f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        f.zero_nyquist();
        let back = f.pad(2).truncate(g).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
        // padded samples of a real field are real
        let padded = f.pad(2).inverse_transform_complex();
        assert!(padded.iter().all(|c| c.im.abs() < 1e-13));
    }

    #[test]
    fn padded_product_is_exact_for_band_limited_factors() {
        let g = grid(1, 8);
        let a = SpectralField::forward_transform(
            g,
            Rank::Scalar,
            &(0..8).map(|j| (TWO_PI * 3.0 * j as f64 / 8.0).cos()).collect::<Vec<_>>(),
        )
        .unwrap();
        let p = product_padded(&a, &a).unwrap();
        // cos² = 1/2 + cos(2·3·2πx)/2 and the k = ±6 modes must survive on the padded grid
        let fine = p.grid();
        assert!((p.coeffs()[0].re - 0.5).abs() < 1e-14);
        assert!((p.coeffs()[fine.k_index(&[6]).unwrap()].re - 0.25).abs() < 1e-14);
        assert!((p.coeffs()[fine.k_index(&[-6]).unwrap()].re - 0.25).abs() < 1e-14);
    }
}
