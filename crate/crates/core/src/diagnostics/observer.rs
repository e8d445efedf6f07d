//! Step-level path functionals collected during a simulation.

use serde::{Deserialize, Serialize};

use super::testfn::{TestFn, VectorTestFn};
use crate::sde::PathObserver;

/// What to accumulate along every path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObserverPlan {
    /// Functions whose `∫ Δf(s, X_s) ds` is tracked.
    #[serde(default)]
    pub ito: Vec<TestFn>,
    /// Functions whose `∫ f(s, X_s) ds` is tracked.
    #[serde(default)]
    pub bank: Vec<TestFn>,
    /// Functions whose martingale `M^f` and `∫ |∇f|²` are tracked.
    #[serde(default)]
    pub martingale: Vec<TestFn>,
    /// Integrands of stochastic exponentials.
    #[serde(default)]
    pub novikov: Vec<VectorTestFn>,
}

impl ObserverPlan {
    pub fn is_empty(&self) -> bool {
        self.ito.is_empty() && self.bank.is_empty() && self.martingale.is_empty() && self.novikov.is_empty()
    }
}

/// Per-path results; index `i` of each vector belongs to entry `i` of the plan list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathRecord {
    /// `∫₀^T Δf(s, X_s) ds`.
    pub ito_terminal: Vec<f64>,
    /// `sup_{t ≤ T} |∫₀^t Δf(s, X_s) ds|`.
    pub ito_sup: Vec<f64>,
    /// `sup_{t ≤ T} |∫₀^t f(s, X_s) ds|`.
    pub bank_sup: Vec<f64>,
    /// `M^f_T`.
    pub martingale: Vec<f64>,
    /// `∫₀^T |∇f|²(s, X_s) ds`.
    pub martingale_qv: Vec<f64>,
    /// `log ℰ_T = ∫ a·dB − ½ ∫ |a|² ds`.
    pub novikov_log: Vec<f64>,
    ito_last: Vec<f64>,
    bank_last: Vec<f64>,
    bank_integral: Vec<f64>,
    mart_f0: Vec<f64>,
    mart_drift: Vec<f64>,
}

/// Observer evaluating an [`ObserverPlan`].
///
/// Time integrals of deterministic functionals use the trapezoid rule; the
/// compensator of `M^f` and the stochastic integrals use left endpoints in space, which
/// matches the Euler drift evaluation. The drift value along the step is read
/// off the increment, `b dt = x_next − x − √2 dw`.
pub struct PlanObserver<'a> {
    pub plan: &'a ObserverPlan,
    dim: usize,
}

impl<'a> PlanObserver<'a> {
    pub fn new(plan: &'a ObserverPlan, dim: usize) -> Self {
        Self { plan, dim }
    }
}

impl PathObserver for PlanObserver<'_> {
    type State = PathRecord;

    fn start(&self, _: usize, x0: &[f64]) -> PathRecord {
        let p = self.plan;
        PathRecord {
            ito_terminal: vec![0.0; p.ito.len()],
            ito_sup: vec![0.0; p.ito.len()],
            bank_sup: vec![0.0; p.bank.len()],
            martingale: vec![0.0; p.martingale.len()],
            martingale_qv: vec![0.0; p.martingale.len()],
            novikov_log: vec![0.0; p.novikov.len()],
            ito_last: p.ito.iter().map(|f| f.laplacian(0.0, x0)).collect(),
            bank_last: p.bank.iter().map(|f| f.value(0.0, x0)).collect(),
            bank_integral: vec![0.0; p.bank.len()],
            mart_f0: p.martingale.iter().map(|f| f.value(0.0, x0)).collect(),
            mart_drift: vec![0.0; p.martingale.len()],
        }
    }

    fn step(&self, s: &mut PathRecord, t: f64, dt: f64, x: &[f64], x_next: &[f64], dw: &[f64]) {
        let d = self.dim;
        let t1 = t + dt;
        for (i, f) in self.plan.ito.iter().enumerate() {
            let cur = f.laplacian(t1, x_next);
            s.ito_terminal[i] += 0.5 * (s.ito_last[i] + cur) * dt;
            s.ito_sup[i] = s.ito_sup[i].max(s.ito_terminal[i].abs());
            s.ito_last[i] = cur;
        }
        for (i, f) in self.plan.bank.iter().enumerate() {
            let cur = f.value(t1, x_next);
            s.bank_integral[i] += 0.5 * (s.bank_last[i] + cur) * dt;
            s.bank_sup[i] = s.bank_sup[i].max(s.bank_integral[i].abs());
            s.bank_last[i] = cur;
        }
        let mut grad = [0.0f64; 3];
        let mut b = [0.0f64; 3];
        for a in 0..d {
            b[a] = (x_next[a] - x[a] - std::f64::consts::SQRT_2 * dw[a]) / dt;
        }
        for (i, f) in self.plan.martingale.iter().enumerate() {
            f.gradient(t, x, &mut grad[..d]);
            let bgrad: f64 = (0..d).map(|a| b[a] * grad[a]).sum();
            let g2: f64 = grad[..d].iter().map(|v| v * v).sum();
            // the ∂_s part as an exact increment keeps space-constant f at M = 0
            s.mart_drift[i] += f.value(t1, x) - f.value(t, x) + (f.laplacian(t, x) + bgrad) * dt;
            s.martingale_qv[i] += g2 * dt;
            s.martingale[i] = f.value(t1, x_next) - s.mart_f0[i] - s.mart_drift[i];
        }
        let mut av = [0.0f64; 3];
        for (i, a) in self.plan.novikov.iter().enumerate() {
            a.value(t, x, &mut av[..d]);
            let mut inc = 0.0;
            let mut sq = 0.0;
            for k in 0..d {
                inc += av[k] * dw[k];
                sq += av[k] * av[k];
            }
            s.novikov_log[i] += inc - 0.5 * sq * dt;
        }
    }
}
