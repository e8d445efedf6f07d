use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{Generator, GeneratorForm};
use crate::drift::{DriftSpec, TimeDependence};
use crate::error::{Error, Result};
use crate::report::{DiagnosticsReport, Verdict};
use crate::spectral::{Rank, SpectralField};

/// The solve aborts once `‖u‖_∞` exceeds this multiple of `‖u_T‖_∞`.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub sup_norm: f64,
    pub l2: f64,
    pub grad_l2: f64,
}

#[derive(Debug, Clone)]
pub struct BackwardOptions {
    pub form: GeneratorForm,
    /// Keep every `keep_every`-th slice (0 keeps only `u(0)` and `u(T)`).
    pub keep_every: usize,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            form: GeneratorForm::DivergenceOut,
            keep_every: 0,
        }
    }
}

/// Solution of the backward equation `∂_t u + Δu + b·∇u = 0`, `u(T) = u_T`.
#[derive(Debug, Clone)]
pub struct PDETrajectory {
    /// Ascending step times `0 = t_0 < … < t_M = T`.
    pub times: Vec<f64>,
    /// Kept slices, ascending in time; always contains `t = 0` and `t = T`.
    pub slice_times: Vec<f64>,
    pub slices: Vec<SpectralField>,
    pub form_used: GeneratorForm,
    /// One row per entry of `times`.
    pub ledger: Vec<LedgerRow>,
    pub warnings: Vec<String>,
    pub dt: f64,
}

impl PDETrajectory {
    pub fn u0(&self) -> &SpectralField {
        &self.slices[0]
    }

    pub fn terminal(&self) -> &SpectralField {
        self.slices.last().expect("terminal slice")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty time grid")
    }

    /// `⟨u(0), η₀⟩` with `η₀` normalized to unit mass.
    pub fn pairing_at_zero(&self, eta0: &SpectralField) -> Result<f64> {
        let mass = eta0.mean()[0].re;
        if !(mass > 0.0) {
            return Err(Error::Validation("initial density must have positive mass".into()));
        }
        Ok(self.u0().inner(eta0)?.re / mass)
    }

    /// `‖u(t)‖²_{L²} + 2∫_t^T ‖∇u‖²_{L²} ds − ‖u_T‖²` relative to `‖u_T‖²`, worst over `t`.
    ///
    /// The time integral is piecewise cubic on the step grid, so the check
    /// resolves the decay only once `dt · 8π²|k|²` is small for the active modes.
    pub fn energy_balance_defect(&self) -> f64 {
        let m = self.ledger.len();
        let terminal_sq = self.ledger[m - 1].l2.powi(2);
        if terminal_sq == 0.0 {
            return 0.0;
        }
        let g: Vec<f64> = self.ledger.iter().map(|r| r.grad_l2.powi(2)).collect();
        let pieces = interval_integrals(&g, self.dt);
        let mut worst: f64 = 0.0;
        let mut integral = 0.0;
        for i in (0..m).rev() {
            if i < m - 1 {
                integral += pieces[i];
            }
            let lhs = self.ledger[i].l2.powi(2) + 2.0 * integral;
            worst = worst.max((lhs - terminal_sq).abs() / terminal_sq);
        }
        worst
    }

    /// CSV with columns `t,sup_norm,l2,grad_l2`.
    pub fn write_ledger_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,sup_norm,l2,grad_l2")?;
        for r in &self.ledger {
            writeln!(w, "{},{},{},{}", r.t, r.sup_norm, r.l2, r.grad_l2)?;
        }
        Ok(())
    }
}

/// Integrals of the cubic through the four nearest samples over each interval.
fn interval_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    if n < 2 {
        return Vec::new();
    }
    if n < 4 {
        let mut out = Vec::new();
        if n == 2 {
            out.push(0.5 * h * (f[0] + f[1]));
        } else {
            // quadratic through three points, split per interval
            out.push(h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]));
            out.push(h / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]));
        }
        return out;
    }
    (0..n - 1)
        .map(|j| {
            if j == 0 {
                h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else if j == n - 2 {
                h / 24.0 * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
            } else {
                h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2])
            }
        })
        .collect()
}

/// `∫` over a uniform grid, exact for cubics once four samples are available.
pub(crate) fn uniform_quadrature(f: &[f64], h: f64) -> f64 {
    interval_integrals(f, h).iter().sum()
}

fn ledger_row(t: f64, u: &SpectralField) -> LedgerRow {
    LedgerRow {
        t,
        sup_norm: u.lebesgue_norm(f64::INFINITY),
        l2: u.l2_norm(),
        grad_l2: u.gradient_norm_sq().sqrt(),
    }
}

/// Integrating-factor RK4 (Lawson) in reversed time `τ = T − t`: the diagonal
/// part `Δ + m·∇` is propagated exactly, the drift part explicitly.
pub fn solve_backward(
    drift: &DriftSpec,
    u_t: &SpectralField,
    t_final: f64,
    dt: f64,
    opts: &BackwardOptions,
) -> Result<PDETrajectory> {
    if u_t.grid() != drift.grid || u_t.rank() != Rank::Scalar {
        return Err(Error::Dimension("terminal condition must be scalar on the drift grid".into()));
    }
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(Error::Validation("T and dt must be positive".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - t_final).abs() > 1e-9 * t_final {
        return Err(Error::Validation(format!("T / dt = {} is not an integer", t_final / dt)));
    }
    let grid = drift.grid;
    let slice_times: Vec<f64> = match &drift.time_dep {
        TimeDependence::Static => vec![0.0],
        TimeDependence::Sampled(s) => s.iter().map(|x| x.t).collect(),
    };
    let gens: Vec<Generator> = slice_times
        .iter()
        .map(|t| Generator::new(&drift.slice_at(*t), opts.form))
        .collect::<Result<_>>()?;
    let gen_at = |t: f64| -> &Generator {
        let idx = slice_times.iter().rposition(|s| *s <= t + 1e-12).unwrap_or(0);
        &gens[idx]
    };
    let mut warnings = Vec::new();
    let bsup = (0..slice_times.len())
        .map(|i| drift.slice_at(slice_times[i]).total_field().map(|f| f.lebesgue_norm(f64::INFINITY)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let kmax = std::f64::consts::PI * grid.n() as f64;
    if dt * kmax * bsup > 2.5 {
        warnings.push(format!(
            "dt = {dt} beyond the explicit advection limit 2.5/(pi N |b|_inf) = {:.3e}",
            2.5 / (kmax * bsup)
        ));
    }
    let len = grid.len();
    let diag = gens[0].diagonal().to_vec();
    let e_half: Vec<Complex64> = diag.iter().map(|d| (d * (0.5 * dt)).exp()).collect();
    let e_full: Vec<Complex64> = diag.iter().map(|d| (d * dt).exp()).collect();
    let nyq: Vec<bool> = (0..len).map(|i| grid.on_nyquist_plane(i)).collect();
    let mut v: Vec<Complex64> = u_t.coeffs().to_vec();
    for (i, c) in v.iter_mut().enumerate() {
        if nyq[i] {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    if u_t.coeffs().iter().zip(&nyq).any(|(c, n)| *n && c.norm() > 0.0) {
        warnings.push("terminal condition carries Nyquist content; dropped".into());
    }
    let real = u_t.is_real();
    let to_field = |c: &[Complex64]| SpectralField::from_coeffs(grid, Rank::Scalar, c.to_vec(), real);
    let terminal = to_field(&v)?;
    let sup_t = terminal.lebesgue_norm(f64::INFINITY);
    let limit = BLOWUP_FACTOR * sup_t.max(f64::MIN_POSITIVE);
    let mut ledger_rev = vec![ledger_row(t_final, &terminal)];
    let mut kept_rev = vec![(t_final, terminal)];
    let mul = |e: &[Complex64], x: &[Complex64]| -> Vec<Complex64> { e.iter().zip(x).map(|(a, b)| a * b).collect() };
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(y).map(|(p, q)| p + q * a).collect()
    };
    for m in 0..steps {
        let tau = m as f64 * dt;
        // drift at forward time t = T − τ; left endpoint in forward time means
        // the slice in force on [t − dt, t) is the one at t − dt
        let t_hi = t_final - tau;
        let g = gen_at((t_hi - dt).max(0.0));
        let k1 = g.apply_drift_part(&v);
        let v_half = mul(&e_half, &v);
        let k2 = g.apply_drift_part(&axpy(&v_half, 0.5 * dt, &mul(&e_half, &k1)));
        let k3 = g.apply_drift_part(&axpy(&v_half, 0.5 * dt, &k2));
        let k4 = g.apply_drift_part(&axpy(&mul(&e_full, &v), dt, &mul(&e_half, &k3)));
        let mut next = mul(&e_full, &v);
        for i in 0..len {
            if nyq[i] {
                next[i] = Complex64::new(0.0, 0.0);
                continue;
            }
            next[i] += dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        v = next;
        let t = (t_final - (m + 1) as f64 * dt).max(0.0);
        let t = if m + 1 == steps { 0.0 } else { t };
        let u = to_field(&v)?;
        let row = ledger_row(t, &u);
        if !row.sup_norm.is_finite() || row.sup_norm > limit {
            return Err(Error::BlowUp {
                time: t,
                sup_norm: row.sup_norm,
                limit,
            });
        }
        ledger_rev.push(row);
        let keep = m + 1 == steps || (opts.keep_every > 0 && (m + 1) % opts.keep_every == 0);
        if keep {
            kept_rev.push((t, u));
        }
    }
    ledger_rev.reverse();
    kept_rev.reverse();
    let times = ledger_rev.iter().map(|r| r.t).collect();
    let (slice_times, slices) = kept_rev.into_iter().unzip();
    Ok(PDETrajectory {
        times,
        slice_times,
        slices,
        form_used: opts.form,
        ledger: ledger_rev,
        warnings,
        dt,
    })
}

/// `K = ‖b₂‖²_{L²_T L^p}` over the drift's time slices on `[0, T]`.
pub fn b2_energy_constant(drift: &DriftSpec, t_final: f64, p: f64) -> f64 {
    match &drift.time_dep {
        TimeDependence::Static => t_final * drift.b2.lebesgue_norm(p).powi(2),
        TimeDependence::Sampled(snaps) => {
            let mut k = 0.0;
            for (i, s) in snaps.iter().enumerate() {
                let start = s.t.min(t_final);
                let end = snaps.get(i + 1).map_or(t_final, |n| n.t.min(t_final));
                k += (end - start).max(0.0) * s.b2.lebesgue_norm(p).powi(2);
            }
            k
        }
    }
}

/// Maximum principle and the `L²`/gradient bounds with `K = ‖b₂‖²_{L²_T L^p}`.
pub fn apriori_report(traj: &PDETrajectory, k: f64) -> Vec<DiagnosticsReport> {
    let last = traj.ledger.last().expect("ledger");
    let sup0 = last.sup_norm;
    let l20 = last.l2.powi(2);
    let sup_max = traj.ledger.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
    let l2_max = traj.ledger.iter().map(|r| r.l2.powi(2)).fold(0.0, f64::max);
    let g: Vec<f64> = traj.ledger.iter().map(|r| r.grad_l2.powi(2)).collect();
    let grad_int = uniform_quadrature(&g, traj.dt);
    let ek = k.exp();
    let l2_bound = ek * (l20 + k * sup0 * sup0);
    let grad_bound = (1.0 + k * ek) * l20 + k * (k * ek + 1.0) * sup0 * sup0;
    let mp_bound = sup0 * (1.0 + 1e-6);
    let mk = |name: &str, stat: f64, bound: f64| {
        DiagnosticsReport::new(name, stat, bound, Verdict::from_bool(stat <= bound), "stat <= target")
            .with("margin", bound - stat)
            .with("K", k)
    };
    vec![
        mk("apriori.max_principle", sup_max, mp_bound),
        mk("apriori.l2_bound", l2_max, l2_bound),
        mk("apriori.gradient_bound", grad_int, grad_bound),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{constant_drift, shear_drift};
    use crate::kbe::{constant_drift_symbol, plane_wave};
    use crate::spectral::{TorusGrid, TWO_PI};

    #[test]
    fn quadrature_is_exact_on_cubics() {
        let h = 0.1;
        for n in [2usize, 3, 4, 5, 6, 7, 12] {
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(if n == 2 { 1 } else { 3 })).collect();
            let b = (n - 1) as f64 * h;
            let exact = if n == 2 { b * b / 2.0 } else { b.powi(4) / 4.0 };
            assert!((uniform_quadrature(&f, h) - exact).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn heat_semigroup_is_exact() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut u_t = plane_wave(g, &[1, 2]).unwrap().add(&plane_wave(g, &[-1, -2]).unwrap()).unwrap();
        u_t.set_real_flag(true);
        let traj = solve_backward(&DriftSpec::zero(g), &u_t, 0.1, 0.01, &BackwardOptions::default()).unwrap();
        let i = g.k_index(&[1, 2]).unwrap();
        let expect = (-TWO_PI * TWO_PI * 5.0 * 0.1f64).exp();
        assert!((traj.u0().coeffs()[i].re - expect).abs() < 1e-10);
        assert_eq!(traj.ledger.len(), 11);
        assert_eq!(traj.times[0], 0.0);
    }

    #[test]
    fn constant_drift_is_diagonal() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = vec![0.8, -0.3];
        let u_t = plane_wave(g, &[2, 1]).unwrap();
        let traj = solve_backward(&constant_drift(g, c.clone()).unwrap(), &u_t, 0.05, 0.005, &BackwardOptions::default())
            .unwrap();
        let i = g.k_index(&[2, 1]).unwrap();
        let expect = (constant_drift_symbol(&c, &[2, 1]) * 0.05).exp();
        assert!((traj.u0().coeffs()[i] - expect).norm() < 1e-8);
    }

    #[test]
    fn energy_ledger_balances_for_divergence_free_drift() {
        let g = TorusGrid::new(2, 32).unwrap();
        let drift = shear_drift(g, 3.0, 1).unwrap();
        let samples: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                (TWO_PI * x[0]).cos() + 0.5 * (TWO_PI * (x[0] + 2.0 * x[1])).sin()
            })
            .collect();
        let u_t = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        let traj = solve_backward(&drift, &u_t, 0.1, 1e-4, &BackwardOptions::default()).unwrap();
        assert!(traj.energy_balance_defect() < 1e-6, "{}", traj.energy_balance_defect());
        let reps = apriori_report(&traj, 0.0);
        assert!(reps.iter().all(|r| r.passed()), "{reps:?}");
    }

    #[test]
    fn blow_up_is_reported() {
        let g = TorusGrid::new(1, 16).unwrap();
        let mut b2 = SpectralField::zeros(g, Rank::Vector);
        b2.coeffs_mut()[1] = num_complex::Complex64::new(0.0, -200.0);
        b2.coeffs_mut()[15] = num_complex::Complex64::new(0.0, 200.0);
        let drift = DriftSpec::zero(g).with_b2(b2).unwrap();
        let u_t = plane_wave(g, &[3]).unwrap();
        let r = solve_backward(&drift, &u_t, 0.1, 0.01, &BackwardOptions::default());
        assert!(matches!(r, Err(Error::BlowUp { .. })), "{r:?}");
    }
}
