use rayon::prelude::*;

use super::{Ensemble, PathObserver};
use crate::error::{Error, Result};
use crate::spectral::{EvalMode, GridSampler, Rank, SpectralField};

/// Scalar field along the ensemble time grid.
#[derive(Debug, Clone)]
pub enum ScalarPath {
    Static(SpectralField),
    /// One field per saved time.
    Sampled(Vec<SpectralField>),
}

#[derive(Debug, Clone)]
pub struct AdditiveFunctional {
    /// `∫₀^T f(s, X_s) ds` per path (NaN for aborted paths).
    pub integrals: Vec<f64>,
    /// `sup_t |∫₀^t f(s, X_s) ds|` over saved times.
    pub running_sup: Vec<f64>,
}

/// Trapezoidal `∫₀^t f(s, X_s) ds` along the saved path.
pub fn additive_functional(ens: &Ensemble, f: &ScalarPath, mode: EvalMode) -> Result<AdditiveFunctional> {
    let fields: Vec<&SpectralField> = match f {
        ScalarPath::Static(g) => vec![g; ens.n_times()],
        ScalarPath::Sampled(v) => {
            if v.len() != ens.n_times() {
                return Err(Error::Dimension(format!(
                    "functional has {} slices, ensemble has {} saved times",
                    v.len(),
                    ens.n_times()
                )));
            }
            v.iter().collect()
        }
    };
    for g in &fields {
        if g.rank() != Rank::Scalar || g.grid().dim() != ens.dim {
            return Err(Error::Dimension("functional must be scalar on the ensemble torus".into()));
        }
    }
    let samplers: Option<Vec<GridSampler>> = match mode {
        EvalMode::GridInterp => Some(fields.iter().map(|g| GridSampler::new(g)).collect()),
        EvalMode::DirectSum => None,
    };
    let eval = |ti: usize, x: &[f64]| -> Result<f64> {
        match &samplers {
            Some(s) => {
                let mut v = [0.0];
                s[ti].eval(x, &mut v);
                Ok(v[0])
            }
            None => Ok(fields[ti].evaluate_at(x, EvalMode::DirectSum)?[0]),
        }
    };
    let per_path: Vec<Result<(f64, f64)>> = (0..ens.n_paths())
        .into_par_iter()
        .map(|p| {
            if ens.is_failed(p) {
                return Ok((f64::NAN, f64::NAN));
            }
            let mut acc = 0.0;
            let mut sup: f64 = 0.0;
            let mut prev = eval(0, ens.position(p, 0))?;
            for ti in 1..ens.n_times() {
                let cur = eval(ti, ens.position(p, ti))?;
                acc += 0.5 * (prev + cur) * (ens.times[ti] - ens.times[ti - 1]);
                sup = sup.max(acc.abs());
                prev = cur;
            }
            Ok((acc, sup))
        })
        .collect();
    let mut integrals = Vec::with_capacity(per_path.len());
    let mut running_sup = Vec::with_capacity(per_path.len());
    for r in per_path {
        let (a, s) = r?;
        integrals.push(a);
        running_sup.push(s);
    }
    Ok(AdditiveFunctional { integrals, running_sup })
}

/// Trapezoidal `∫ f(s, X_s) ds` at the Euler step resolution.
pub struct QuadratureObserver<F> {
    pub f: F,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QuadratureState {
    pub integral: f64,
    pub running_sup: f64,
    last: f64,
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> PathObserver for QuadratureObserver<F> {
    type State = QuadratureState;

    fn start(&self, _: usize, x0: &[f64]) -> QuadratureState {
        QuadratureState {
            integral: 0.0,
            running_sup: 0.0,
            last: (self.f)(0.0, x0),
        }
    }

    fn step(&self, s: &mut QuadratureState, t: f64, dt: f64, _: &[f64], x_next: &[f64], _: &[f64]) {
        let cur = (self.f)(t + dt, x_next);
        s.integral += 0.5 * (s.last + cur) * dt;
        s.running_sup = s.running_sup.max(s.integral.abs());
        s.last = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftSpec;
    use crate::sde::{simulate, simulate_observed, InitialLaw, SimConfig};
    use crate::spectral::{TorusGrid, TWO_PI};

    #[test]
    fn unit_functional_integrates_to_horizon() {
        let g = TorusGrid::new(2, 8).unwrap();
        let cfg = SimConfig::new(0.01, 0.3, 16).with_stride(3).with_seed(1);
        let ens = simulate(&DriftSpec::zero(g), None, &InitialLaw::Uniform, &cfg).unwrap();
        let one = SpectralField::constant(g, 1.0);
        let a = additive_functional(&ens, &ScalarPath::Static(one), EvalMode::GridInterp).unwrap();
        assert!(a.integrals.iter().all(|v| (v - 0.3).abs() < 1e-12));
        // space-constant c(t) = t sampled at the saved times
        let slices: Vec<SpectralField> = ens.times.iter().map(|t| SpectralField::constant(g, *t)).collect();
        let b = additive_functional(&ens, &ScalarPath::Sampled(slices), EvalMode::DirectSum).unwrap();
        assert!(b.integrals.iter().all(|v| (v - 0.045).abs() < 1e-12));
        assert!(additive_functional(&ens, &ScalarPath::Sampled(vec![]), EvalMode::GridInterp).is_err());
    }

    #[test]
    fn cosine_second_moment_matches_two_point_function() {
        // E[(∫₀^T cos 2πX)²] = (T − (1 − e^{−λT})/λ)/λ with λ = 4π²
        let g = TorusGrid::new(1, 8).unwrap();
        let t = 0.2;
        let cfg = SimConfig::new(1e-3, t, 20_000).with_stride(200).with_seed(77);
        let obs = QuadratureObserver {
            f: |_t: f64, x: &[f64]| (TWO_PI * x[0]).cos(),
        };
        let (_, st) = simulate_observed(&DriftSpec::zero(g), None, &InitialLaw::Uniform, &cfg, &obs).unwrap();
        let sq: Vec<f64> = st.iter().map(|s| s.integral.powi(2)).collect();
        let n = sq.len() as f64;
        let m = sq.iter().sum::<f64>() / n;
        let se = (sq.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let lam = TWO_PI * TWO_PI;
        let exact = (t - (1.0 - (-lam * t).exp()) / lam) / lam;
        assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact} (se {se})");
    }
}
