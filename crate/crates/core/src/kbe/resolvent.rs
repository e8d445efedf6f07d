use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Generator, GeneratorForm};
use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::spectral::{Rank, SpectralField, TorusGrid, TWO_PI};

/// Mode counts up to this use a dense SVD; larger problems use Lanczos on `S*S`.
pub const DENSE_SVD_MAX_MODES: usize = 1024;
/// Largest mode count the probe accepts.
pub const PROBE_MAX_MODES: usize = 1 << 15;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `‖f‖_{H^{-1}} = (Σ_k (1 + 4π²|k|²)^{-1} |f̂(k)|²)^{1/2}`.
pub fn h_minus1_norm(f: &SpectralField) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() / (1.0 + TWO_PI * TWO_PI * g.k_norm_sq(i % g.len())))
        .sum::<f64>()
        .sqrt()
}

fn h1_norm(f: &SpectralField) -> f64 {
    f.sobolev_norm_sq(1.0).sqrt()
}

/// `S = D^{-1/2} (λ − L) D^{-1/2}` on the compressed Nyquist-free mode vector,
/// with `D = λ + 4π²|k|²`.
struct ScaledOperator<'a> {
    gen: &'a Generator,
    lambda: f64,
    modes: Vec<usize>,
    inv_sqrt_d: Vec<f64>,
    len: usize,
}

impl<'a> ScaledOperator<'a> {
    fn new(gen: &'a Generator, lambda: f64) -> Self {
        let grid = gen.grid();
        let modes = gen.active_modes();
        let inv_sqrt_d = modes
            .iter()
            .map(|&i| 1.0 / (lambda + TWO_PI * TWO_PI * grid.k_norm_sq(i)).sqrt())
            .collect();
        Self {
            gen,
            lambda,
            modes,
            inv_sqrt_d,
            len: grid.len(),
        }
    }

    fn dim(&self) -> usize {
        self.modes.len()
    }

    fn expand(&self, x: &[Complex64], scale: bool) -> Vec<Complex64> {
        let mut full = vec![ZERO; self.len];
        for (j, &i) in self.modes.iter().enumerate() {
            full[i] = if scale { x[j] * self.inv_sqrt_d[j] } else { x[j] };
        }
        full
    }

    fn apply_inner(&self, x: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let u = self.expand(x, true);
        let lu = if adjoint {
            self.gen.apply_adjoint_coeffs(&u)
        } else {
            self.gen.apply_coeffs(&u)
        };
        self.modes
            .iter()
            .enumerate()
            .map(|(j, &i)| (u[i] * self.lambda - lu[i]) * self.inv_sqrt_d[j])
            .collect()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_inner(x, false)
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_inner(x, true)
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Restarted GMRES; returns the solution and the relative residual estimate per iteration.
fn gmres(
    op: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    x0: Vec<Complex64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
    history: &mut Vec<f64>,
) -> (Vec<Complex64>, usize) {
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = x0;
    let mut iters = 0;
    while iters < max_iter {
        let ax = op(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta / bnorm <= tol {
            break;
        }
        let m = restart.min(max_iter - iters).min(n).max(1);
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = op(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(vi, &w);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hik * b);
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let a = h[k][k];
            let bb = h[k + 1][k];
            let rr = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if rr == 0.0 {
                k_used = k + 1;
                break;
            }
            cs[k] = a / rr;
            sn[k] = bb / rr;
            h[k][k] = Complex64::new(rr, 0.0);
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            iters += 1;
            k_used = k + 1;
            let res = g[k + 1].norm() / bnorm;
            history.push(res);
            if res <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        // back substitution
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&v[j]).for_each(|(a, b)| *a += yj * b);
        }
        if k_used == 0 {
            break;
        }
    }
    (x, iters)
}

#[derive(Debug, Clone)]
pub struct ResolventOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub form: GeneratorForm,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            restart: 60,
            form: GeneratorForm::DivergenceOut,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventSolution {
    pub lambda: f64,
    #[serde(skip)]
    pub u: SpectralField,
    #[serde(skip)]
    pub rhs: SpectralField,
    /// `‖(λ − L)u − rhs‖_{H^{-1}} / ‖rhs‖_{H^{-1}}`.
    pub residual_h_minus1: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// `‖u‖_{H¹} / ‖rhs‖_{H^{-1}}`.
    pub h1_ratio: f64,
}

/// Solve `(λ − L)u = rhs` by GMRES on the diagonally scaled system
/// `D^{-1/2}(λ − L)D^{-1/2} (D^{1/2}u) = D^{-1/2} rhs`.
pub fn resolvent_solve(
    drift: &DriftSpec,
    lambda: f64,
    rhs: &SpectralField,
    opts: &ResolventOptions,
) -> Result<ResolventSolution> {
    if !(lambda > 0.0) {
        return Err(Error::Validation(format!("lambda must be positive, got {lambda}")));
    }
    if rhs.grid() != drift.grid || rhs.rank() != Rank::Scalar {
        return Err(Error::Dimension("rhs must be scalar on the drift grid".into()));
    }
    let gen = Generator::new(&drift.slice_at(0.0), opts.form)?;
    let op = ScaledOperator::new(&gen, lambda);
    let mut rhs_t = rhs.clone();
    rhs_t.zero_nyquist();
    let b: Vec<Complex64> = op
        .modes
        .iter()
        .enumerate()
        .map(|(j, &i)| rhs_t.coeffs()[i] * op.inv_sqrt_d[j])
        .collect();
    let rhs_norm = h_minus1_norm(&rhs_t);
    if rhs_norm == 0.0 {
        return Ok(ResolventSolution {
            lambda,
            u: SpectralField::zeros(drift.grid, Rank::Scalar),
            rhs: rhs.clone(),
            residual_h_minus1: 0.0,
            iterations: 0,
            history: vec![0.0],
            h1_ratio: 0.0,
        });
    }
    let inner_tol = 0.5 * opts.tol / lambda.max(1.0 / lambda).sqrt();
    let mut history = Vec::new();
    let mut x = vec![ZERO; op.dim()];
    let mut iterations = 0;
    let apply = |v: &[Complex64]| op.apply(v);
    let residual_of = |x: &[Complex64]| -> Result<(SpectralField, f64)> {
        let u = SpectralField::from_coeffs(drift.grid, Rank::Scalar, op.expand(x, true), rhs.is_real())?;
        let lu = gen.apply(&u)?;
        let r = rhs_t.sub(&u.scale(lambda).sub(&lu)?)?;
        Ok((u, h_minus1_norm(&r) / rhs_norm))
    };
    loop {
        let (nx, it) = gmres(&apply, &b, x, inner_tol, opts.restart, opts.max_iter - iterations, &mut history);
        x = nx;
        iterations += it;
        let (u, res) = residual_of(&x)?;
        if res <= opts.tol {
            let h1_ratio = h1_norm(&u) / rhs_norm;
            return Ok(ResolventSolution {
                lambda,
                u,
                rhs: rhs.clone(),
                residual_h_minus1: res,
                iterations,
                history,
                h1_ratio,
            });
        }
        if iterations >= opts.max_iter || it == 0 {
            return Err(Error::Divergence {
                iterations,
                last_residual: res,
                history,
            });
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectivityProbe {
    /// Smallest estimate over the sweep.
    pub sigma_min: f64,
    /// `(λ, σ_min(λ))`.
    pub table: Vec<(f64, f64)>,
    pub n_modes: usize,
    pub method: String,
}

fn sigma_min_dense(op: &ScaledOperator) -> f64 {
    let m = op.dim();
    let mut mat = DMatrix::<Complex64>::zeros(m, m);
    let mut e = vec![ZERO; m];
    for j in 0..m {
        e[j] = Complex64::new(1.0, 0.0);
        let col = op.apply(&e);
        for (i, v) in col.into_iter().enumerate() {
            mat[(i, j)] = v;
        }
        e[j] = ZERO;
    }
    mat.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of `S*S` by Lanczos with full reorthogonalization.
fn sigma_min_lanczos(op: &ScaledOperator, seed: u64) -> f64 {
    let m = op.dim();
    let kmax = m.min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Complex64> = (0..m)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n0 = norm(&q);
    q.iter_mut().for_each(|c| *c /= n0);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(kmax);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let mut stable = 0;
    for k in 0..kmax {
        let mut w = op.apply_adjoint(&op.apply(&q));
        let a = dot(&q, &w).re;
        alpha.push(a);
        basis.push(q.clone());
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let ritz = {
            let n = alpha.len();
            let mut t = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                t[(i, i)] = alpha[i];
                if i + 1 < n {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        if (ritz - last).abs() <= 1e-12 * ritz.abs().max(1e-300) {
            stable += 1;
        } else {
            stable = 0;
        }
        last = ritz;
        if b <= 1e-13 || stable >= 5 || k + 1 == kmax {
            break;
        }
        beta.push(b);
        q = w.iter().map(|c| c / b).collect();
    }
    last.max(0.0).sqrt()
}

/// `σ_min` of `D^{-1/2}(λ − L_N)D^{-1/2}` for each `λ`, optionally after
/// truncating the drift to `n` modes per axis.
pub fn injectivity_probe(drift: &DriftSpec, lambdas: &[f64], n: Option<usize>, form: GeneratorForm) -> Result<InjectivityProbe> {
    let drift = match n {
        Some(n) if n != drift.grid.n() => drift.truncated(TorusGrid::new(drift.grid.dim(), n)?)?,
        _ => drift.clone(),
    };
    let gen = Generator::new(&drift.slice_at(0.0), form)?;
    let n_modes = gen.active_modes().len();
    if n_modes > PROBE_MAX_MODES {
        return Err(Error::Budget(format!(
            "injectivity probe over {n_modes} modes exceeds {PROBE_MAX_MODES}"
        )));
    }
    let dense = n_modes <= DENSE_SVD_MAX_MODES;
    let mut table = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::Validation(format!("lambda must be positive, got {lambda}")));
        }
        let op = ScaledOperator::new(&gen, lambda);
        let s = if dense {
            sigma_min_dense(&op)
        } else {
            sigma_min_lanczos(&op, 0x5eed ^ lambda.to_bits())
        };
        table.push((lambda, s));
    }
    let sigma_min = table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    Ok(InjectivityProbe {
        sigma_min,
        table,
        n_modes,
        method: if dense { "dense_svd" } else { "lanczos" }.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{constant_drift, gff_curl_drift, sample_gff};
    use crate::kbe::{constant_drift_symbol, plane_wave};

    #[test]
    fn zero_drift_resolvent_is_diagonal() {
        let g = TorusGrid::new(2, 16).unwrap();
        let rhs = plane_wave(g, &[1, 2]).unwrap();
        let s = resolvent_solve(&DriftSpec::zero(g), 3.0, &rhs, &ResolventOptions::default()).unwrap();
        let i = g.k_index(&[1, 2]).unwrap();
        let expect = 1.0 / (3.0 + TWO_PI * TWO_PI * 5.0);
        assert!((s.u.coeffs()[i].re - expect).abs() < 1e-12);
        assert!(s.residual_h_minus1 <= 1e-10);
    }

    #[test]
    fn constant_drift_resolvent() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = vec![1.5, -0.5];
        let rhs = plane_wave(g, &[2, -1]).unwrap();
        let s = resolvent_solve(&constant_drift(g, c.clone()).unwrap(), 2.0, &rhs, &ResolventOptions::default()).unwrap();
        let i = g.k_index(&[2, -1]).unwrap();
        let expect = Complex64::new(1.0, 0.0) / (Complex64::new(2.0, 0.0) - constant_drift_symbol(&c, &[2, -1]));
        assert!((s.u.coeffs()[i] - expect).norm() < 1e-12);
    }

    #[test]
    fn gff_resolvent_meets_residual_contract() {
        let g = TorusGrid::new(2, 32).unwrap();
        let drift = gff_curl_drift(&sample_gff(g, 3).unwrap(), 1.5).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (TWO_PI * g.point(i)[0]).cos()).collect();
        let rhs = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        for lambda in [16.0, 32.0] {
            let s = resolvent_solve(&drift, lambda, &rhs, &ResolventOptions::default()).unwrap();
            assert!(s.residual_h_minus1 <= 1e-10);
            assert!(s.h1_ratio.is_finite() && s.h1_ratio > 0.0);
        }
    }

    #[test]
    fn divergence_report_carries_history() {
        let g = TorusGrid::new(2, 16).unwrap();
        let drift = gff_curl_drift(&sample_gff(g, 3).unwrap(), 1.5).unwrap();
        let rhs = plane_wave(g, &[1, 1]).unwrap();
        let opts = ResolventOptions {
            tol: 1e-14,
            max_iter: 2,
            restart: 2,
            ..Default::default()
        };
        match resolvent_solve(&drift, 1.0, &rhs, &opts) {
            Err(Error::Divergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sigma_min_identity_and_skew() {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = injectivity_probe(&DriftSpec::zero(g), &[1.0, 10.0], None, GeneratorForm::DivergenceOut).unwrap();
        assert!(p.table.iter().all(|(_, s)| (s - 1.0).abs() < 1e-12));
        let drift = gff_curl_drift(&sample_gff(g, 9).unwrap(), 1.5).unwrap();
        let p = injectivity_probe(&drift, &[1.0, 4.0, 16.0], None, GeneratorForm::DivergenceOut).unwrap();
        assert!(p.sigma_min >= 1.0 - 1e-8, "{p:?}");
    }

    #[test]
    fn compressible_drift_dips_then_recovers() {
        let g = TorusGrid::new(2, 8).unwrap();
        // b₂ = ∇V with V = 3 cos(2πx₁): strongly compressible
        let mut b2 = SpectralField::zeros(g, Rank::Vector);
        let ip = g.k_index(&[1, 0]).unwrap();
        let im = g.k_index(&[-1, 0]).unwrap();
        b2.component_mut(0)[ip] = Complex64::new(0.0, 3.0 * TWO_PI / 2.0);
        b2.component_mut(0)[im] = Complex64::new(0.0, -3.0 * TWO_PI / 2.0);
        let drift = DriftSpec::zero(g).with_b2(b2).unwrap();
        let p = injectivity_probe(&drift, &[0.25, 4.0, 64.0, 1024.0], None, GeneratorForm::DivergenceOut).unwrap();
        let s: Vec<f64> = p.table.iter().map(|t| t.1).collect();
        assert!(s[0] < 0.9, "{s:?}");
        assert!(s[3] > s[0] && s[3] > 0.9, "{s:?}");
    }

    #[test]
    fn lanczos_matches_dense() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut b2 = SpectralField::zeros(g, Rank::Vector);
        let ip = g.k_index(&[1, 1]).unwrap();
        let im = g.k_index(&[-1, -1]).unwrap();
        for c in 0..2 {
            b2.component_mut(c)[ip] = Complex64::new(0.0, 4.0);
            b2.component_mut(c)[im] = Complex64::new(0.0, -4.0);
        }
        let drift = gff_curl_drift(&sample_gff(g, 1).unwrap(), 1.5).unwrap().with_b2(b2).unwrap();
        let gen = Generator::new(&drift, GeneratorForm::DivergenceOut).unwrap();
        for lambda in [0.5, 8.0] {
            let op = ScaledOperator::new(&gen, lambda);
            let d = sigma_min_dense(&op);
            let l = sigma_min_lanczos(&op, 7);
            assert!((d - l).abs() < 1e-6 * d.max(1e-3), "lambda {lambda}: dense {d}, lanczos {l}");
        }
    }
}
