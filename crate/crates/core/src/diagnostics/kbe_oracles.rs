//! Closed-form and conservation checks of the backward solver.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::identities::random_band_limited;
use crate::drift::{constant_drift, gff_curl_drift, sample_gff, shear_drift, DriftSpec};
use crate::error::Result;
use crate::kbe::{constant_drift_symbol, solve_backward, BackwardOptions};
use crate::mollify::mollify_drift;
use crate::report::DiagnosticsReport;
use crate::seeds;
use crate::spectral::{Rank, SpectralField, TorusGrid, TWO_PI};

pub const HEAT_TOL: f64 = 1e-10;
pub const CONSTANT_DRIFT_TOL: f64 = 1e-8;
pub const MAX_PRINCIPLE_TOL: f64 = 1e-6;
pub const ENERGY_LEDGER_TOL: f64 = 1e-6;
/// The ledger quadrature converges like `(dt · 8π²|k|²)⁴`.
const LEDGER_DT: f64 = 5e-5;

/// Largest `|û₀(k) − e^{σ(k)T} û_T(k)|` relative to `max |û_T|`.
fn diagonal_error(u0: &SpectralField, u_t: &SpectralField, symbol: impl Fn(&[i64]) -> Complex64, t: f64) -> f64 {
    let g = u_t.grid();
    let scale = u_t.max_abs_coeff();
    (0..g.len())
        .map(|i| {
            let k = g.k_at(i);
            let expect = (symbol(&k[..g.dim()]) * t).exp() * u_t.coeffs()[i];
            (u0.coeffs()[i] - expect).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// `Σ a_m cos(2π k_m·x)` with `a_m > 0`, so `sup |u| = Σ a_m` is attained at the node `x = 0`.
fn peaked_terminal(grid: TorusGrid, terms: usize, kmax: i64, seed: u64) -> Result<SpectralField> {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(Vec<i64>, f64)> = (0..terms)
        .map(|_| {
            let k: Vec<i64> = (0..d).map(|_| rng.random_range(-kmax..=kmax)).collect();
            (k, rng.random_range(0.2..1.0))
        })
        .collect();
    let samples: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            modes
                .iter()
                .map(|(k, a)| a * (TWO_PI * (0..d).map(|j| k[j] as f64 * x[j]).sum::<f64>()).cos())
                .sum()
        })
        .collect();
    SpectralField::forward_transform(grid, Rank::Scalar, &samples)
}

/// Heat slice, constant-drift diagonal, maximum principle and the `L²` energy ledger.
pub fn kbe_oracles(seed: u64) -> Result<Vec<DiagnosticsReport>> {
    let opts = BackwardOptions::default();
    let g = TorusGrid::new(2, 16)?;
    let mut out = Vec::new();

    let (t, dt) = (0.1, 0.01);
    let mut heat: f64 = 0.0;
    for i in 0..5 {
        let u_t = random_band_limited(g, 5, seeds::derive(seed, &[1, i]));
        let traj = solve_backward(&DriftSpec::zero(g), &u_t, t, dt, &opts)?;
        let sym = |k: &[i64]| Complex64::new(-TWO_PI * TWO_PI * k.iter().map(|v| (v * v) as f64).sum::<f64>(), 0.0);
        heat = heat.max(diagonal_error(traj.u0(), &u_t, sym, t));
    }
    out.push(DiagnosticsReport::at_most("kbe.heat_slice", heat, HEAT_TOL).with("T", t).with("dt", dt));

    let c = vec![0.8, -0.3];
    let drift = constant_drift(g, c.clone())?;
    let (t, dt) = (0.05, 0.005);
    let mut errs = Vec::new();
    for refine in [1.0, 2.0] {
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            let u_t = random_band_limited(g, 5, seeds::derive(seed, &[2, i]));
            let traj = solve_backward(&drift, &u_t, t, dt / refine, &opts)?;
            worst = worst.max(diagonal_error(traj.u0(), &u_t, |k| constant_drift_symbol(&c, k), t));
        }
        errs.push(worst);
    }
    out.push(
        DiagnosticsReport::at_most("kbe.constant_drift", errs[1], CONSTANT_DRIFT_TOL)
            .with("coarse_error", errs[0])
            .with("dt", dt / 2.0),
    );

    let g32 = TorusGrid::new(2, 32)?;
    let gff = mollify_drift(&gff_curl_drift(&sample_gff(g32, seeds::derive(seed, &[3]))?, 1.5)?, 8)?;
    let shear = shear_drift(g32, 3.0, 1)?;
    let mut mp: f64 = 0.0;
    for (j, drift) in [&gff, &shear].into_iter().enumerate() {
        let u_t = peaked_terminal(g32, 4, 3, seeds::derive(seed, &[4, j as u64]))?;
        let traj = solve_backward(drift, &u_t, 0.1, 1e-3, &opts)?;
        let sup_t = traj.ledger.last().expect("ledger").sup_norm;
        let sup = traj.ledger.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
        mp = mp.max((sup / sup_t - 1.0).max(0.0));
    }
    out.push(DiagnosticsReport::at_most("kbe.max_principle", mp, MAX_PRINCIPLE_TOL).with("drifts", ["gff_curl|mollify_n=8", "shear"]));

    let mut ledger: f64 = 0.0;
    for (j, drift) in [&gff, &shear].into_iter().enumerate() {
        let u_t = random_band_limited(g32, 3, seeds::derive(seed, &[5, j as u64]));
        let traj = solve_backward(drift, &u_t, 0.1, LEDGER_DT, &opts)?;
        ledger = ledger.max(traj.energy_balance_defect());
    }
    out.push(DiagnosticsReport::at_most("kbe.energy_ledger", ledger, ENERGY_LEDGER_TOL).with("dt", LEDGER_DT));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_pass() {
        for r in kbe_oracles(11).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }
}
