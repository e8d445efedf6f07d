use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Rank, SpectralField, TorusGrid, TWO_PI};
use crate::error::{Error, Result};

/// Largest mode count `direct_sum` evaluation accepts by default.
pub const DEFAULT_DIRECT_SUM_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    DirectSum,
    GridInterp,
}

impl SpectralField {
    /// Values at off-grid points, `points.len() / dim` of them, component-major per point.
    ///
    /// Real fields return the real part of the truncated Fourier sum, so a
    /// Nyquist coefficient contributes `Re(c) cos(πNx)`.
    pub fn evaluate_at(&self, points: &[f64], mode: EvalMode) -> Result<Vec<f64>> {
        self.evaluate_at_with_budget(points, mode, DEFAULT_DIRECT_SUM_BUDGET)
    }

    pub fn evaluate_at_with_budget(&self, points: &[f64], mode: EvalMode, budget: usize) -> Result<Vec<f64>> {
        let dim = self.grid().dim();
        if points.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "point buffer length {} is not a multiple of dim {dim}",
                points.len()
            )));
        }
        match mode {
            EvalMode::DirectSum => {
                let total = self.grid().len();
                if total > budget {
                    return Err(Error::Budget(format!(
                        "direct_sum over {total} modes exceeds budget {budget}"
                    )));
                }
                let ev = DirectSum::new(self);
                let ncomp = self.components();
                let mut out = vec![0.0; points.len() / dim * ncomp];
                for (p, chunk) in points.chunks(dim).enumerate() {
                    ev.eval(chunk, &mut out[p * ncomp..(p + 1) * ncomp]);
                }
                Ok(out)
            }
            EvalMode::GridInterp => {
                let sampler = GridSampler::new(self);
                let ncomp = self.components();
                let mut out = vec![0.0; points.len() / dim * ncomp];
                for (p, chunk) in points.chunks(dim).enumerate() {
                    sampler.eval(chunk, &mut out[p * ncomp..(p + 1) * ncomp]);
                }
                Ok(out)
            }
        }
    }

    /// `(N^{-d} Σ_j |f(x_j)|^p)^{1/p}` on the collocation grid; `p = ∞` takes the max.
    ///
    /// Vector and matrix fields use the pointwise Euclidean (Frobenius) norm.
    pub fn lebesgue_norm(&self, p: f64) -> f64 {
        let samples = self.inverse_transform_complex();
        pointwise_lp(&samples, self.grid().len(), self.components(), p)
    }
}

pub(crate) fn pointwise_lp(samples: &[Complex64], len: usize, ncomp: usize, p: f64) -> f64 {
    let magnitude = |j: usize| -> f64 {
        if ncomp == 1 {
            samples[j].norm()
        } else {
            (0..ncomp).map(|c| samples[c * len + j].norm_sqr()).sum::<f64>().sqrt()
        }
    };
    if p.is_infinite() {
        (0..len).map(magnitude).fold(0.0, f64::max)
    } else {
        let s: f64 = (0..len).map(|j| magnitude(j).powf(p)).sum();
        (s / len as f64).powf(1.0 / p)
    }
}

/// Exact truncated Fourier sum, separable in the axes.
pub(crate) struct DirectSum<'a> {
    field: &'a SpectralField,
}

impl<'a> DirectSum<'a> {
    pub(crate) fn new(field: &'a SpectralField) -> Self {
        Self { field }
    }

    pub(crate) fn eval_complex(&self, x: &[f64], out: &mut [Complex64]) {
        let grid = self.field.grid();
        let n = grid.n();
        let dim = grid.dim();
        let mut phases = vec![Complex64::new(0.0, 0.0); dim * n];
        for a in 0..dim {
            for i in 0..n {
                let k = grid.wavenumber(i) as f64;
                let th = TWO_PI * k * x[a];
                phases[a * n + i] = Complex64::new(th.cos(), th.sin());
            }
        }
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let len = grid.len();
        for flat in 0..len {
            let idx = grid.unflatten(flat);
            let mut ph = phases[idx[0]];
            for a in 1..dim {
                ph *= phases[a * n + idx[a]];
            }
            for (c, slot) in out.iter_mut().enumerate() {
                *slot += self.field.component(c)[flat] * ph;
            }
        }
    }

    pub(crate) fn eval(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); out.len()];
        self.eval_complex(x, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = t.re;
        }
    }
}

/// Multilinear periodic interpolation of collocation samples.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid: TorusGrid,
    components: usize,
    samples: Vec<f64>,
}

impl GridSampler {
    pub fn new(field: &SpectralField) -> Self {
        Self {
            grid: field.grid(),
            components: field.components(),
            samples: field.inverse_transform(),
        }
    }

    /// Sample `field` on a grid refined by `factor` before interpolating.
    pub fn refined(field: &SpectralField, factor: usize) -> Self {
        if factor <= 1 {
            return Self::new(field);
        }
        Self::new(&field.pad(factor))
    }

    pub fn from_samples(grid: TorusGrid, rank: Rank, samples: Vec<f64>) -> Result<Self> {
        let components = rank.components(grid.dim());
        if samples.len() != components * grid.len() {
            return Err(Error::Dimension("sample buffer does not match grid".into()));
        }
        Ok(Self {
            grid,
            components,
            samples,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Interpolate at `x` (any real coordinates; wrapped internally).
    #[inline]
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let dim = self.grid.dim();
        let len = self.grid.len();
        let nf = n as f64;
        let mut i0 = [0usize; 3];
        let mut w = [0.0f64; 3];
        for a in 0..dim {
            let s = x[a].rem_euclid(1.0) * nf;
            let fl = s.floor();
            i0[a] = (fl as usize) % n;
            w[a] = s - fl;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut flat = 0usize;
            for a in 0..dim {
                let bit = corner >> (dim - 1 - a) & 1;
                let ia = if bit == 1 { (i0[a] + 1) % n } else { i0[a] };
                weight *= if bit == 1 { w[a] } else { 1.0 - w[a] };
                flat = flat * n + ia;
            }
            if weight == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate().take(self.components) {
                *o += weight * self.samples[c * len + flat];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_evaluates_to_constant() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = SpectralField::constant(g, 2.5);
        let pts = [0.13, 0.77, 0.5, 0.01];
        for mode in [EvalMode::DirectSum, EvalMode::GridInterp] {
            let v = f.evaluate_at(&pts, mode).unwrap();
            assert!(v.iter().all(|x| (x - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn cosine_vanishes_at_quarter() {
        let g = TorusGrid::new(2, 8).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (TWO_PI * g.point(i)[0]).cos()).collect();
        let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        let v = f.evaluate_at(&[0.25, 0.0], EvalMode::DirectSum).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn direct_sum_budget_is_enforced() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::constant(g, 1.0);
        let err = f.evaluate_at_with_budget(&[0.1, 0.2], EvalMode::DirectSum, 100).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }

    #[test]
    fn lebesgue_norms_of_cosine() {
        let g = TorusGrid::new(2, 16).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (TWO_PI * g.point(i)[0]).cos()).collect();
        let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        assert!((f.lebesgue_norm(2.0) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((f.lebesgue_norm(f64::INFINITY) - 1.0).abs() < 1e-12);
        let c = SpectralField::constant(g, 3.0);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((c.lebesgue_norm(p) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_error_decreases_with_resolution() {
        // smooth band-limited field; direct_sum is the oracle
        let mut errs = Vec::new();
        let pts: Vec<f64> = (0..64).flat_map(|i| [(i as f64 * 0.6180339) % 1.0, (i as f64 * 0.4142135) % 1.0]).collect();
        for n in [8, 16, 32, 64] {
            let g = TorusGrid::new(2, n).unwrap();
            let samples: Vec<f64> = (0..g.len())
                .map(|i| {
                    let x = g.point(i);
                    (TWO_PI * x[0]).sin() * (TWO_PI * 2.0 * x[1]).cos() + 0.3 * (TWO_PI * (x[0] + x[1])).cos()
                })
                .collect();
            let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
            let exact = f.evaluate_at(&pts, EvalMode::DirectSum).unwrap();
            let interp = f.evaluate_at(&pts, EvalMode::GridInterp).unwrap();
            let err = exact.iter().zip(&interp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!(w[1] < w[0] * 0.4, "{errs:?}");
        }
    }
}
