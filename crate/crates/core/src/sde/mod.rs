//! Euler–Maruyama ensembles for `dX = bⁿ(t, X) dt + √2 dB` on the torus.
//!
//! Every path owns a ChaCha8 stream seeded from `(master_seed, path)`, so an
//! ensemble is a pure function of its inputs whatever the thread schedule.

mod functional;
mod initial;

pub use functional::{additive_functional, AdditiveFunctional, QuadratureObserver, ScalarPath};
pub use initial::{sample_initial, InitialLaw, InitialSample, MAX_DENSITY_RATIO};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{DriftSpec, TimeDependence};
use crate::error::{Error, Result};
use crate::mollify::{mollify_drift, mollify_time};
use crate::seeds;
use crate::spectral::{EvalMode, GridSampler, SpectralField};

/// Reduction to `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_paths: usize,
    #[serde(default = "default_stride")]
    pub save_stride: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_eval_mode")]
    pub eval_mode: EvalMode,
    /// Grid refinement factor for the interpolated drift samples.
    #[serde(default = "default_refine")]
    pub interp_refine: usize,
}

fn default_stride() -> usize {
    1
}

fn default_eval_mode() -> EvalMode {
    EvalMode::GridInterp
}

fn default_refine() -> usize {
    1
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64, n_paths: usize) -> Self {
        Self {
            dt,
            t_final,
            n_paths,
            save_stride: 1,
            master_seed: 0,
            eval_mode: EvalMode::GridInterp,
            interp_refine: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.save_stride = stride;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_eval_mode(mut self, mode: EvalMode) -> Self {
        self.eval_mode = mode;
        self
    }

    pub fn with_refine(mut self, factor: usize) -> Self {
        self.interp_refine = factor;
        self
    }

    /// Number of Euler steps; checks the config invariants.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::Validation("dt and T must be positive".into()));
        }
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Validation(format!("T / dt = {ratio} is not an integer")));
        }
        let steps = steps as usize;
        if self.save_stride == 0 || steps % self.save_stride != 0 {
            return Err(Error::Validation(format!(
                "save_stride {} does not divide the step count {steps}",
                self.save_stride
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Validation("n_paths must be positive".into()));
        }
        if self.interp_refine == 0 {
            return Err(Error::Validation("interp_refine must be >= 1".into()));
        }
        Ok(steps)
    }

    pub fn save_times(&self) -> Result<Vec<f64>> {
        let steps = self.steps()?;
        Ok((0..=steps / self.save_stride)
            .map(|i| (i * self.save_stride) as f64 * self.dt)
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub dim: usize,
    pub times: Vec<f64>,
    /// `[path][time][axis]`, in `[0, 1)`.
    pub wrapped: Vec<f64>,
    /// `[path][time][axis]`, cumulative in `ℝ^d`.
    pub unwrapped: Vec<f64>,
    pub path_seeds: Vec<u64>,
    pub config: SimConfig,
    pub drift_id: String,
    /// Started from the uniform law.
    pub stationary_start: bool,
    /// The simulated drift has no gradient part.
    pub divergence_free: bool,
    /// Paths aborted on a non-finite position, with the step index.
    pub failed: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

impl Ensemble {
    pub fn n_paths(&self) -> usize {
        self.path_seeds.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn position(&self, path: usize, time: usize) -> &[f64] {
        let o = (path * self.times.len() + time) * self.dim;
        &self.wrapped[o..o + self.dim]
    }

    #[inline]
    pub fn unwrapped_position(&self, path: usize, time: usize) -> &[f64] {
        let o = (path * self.times.len() + time) * self.dim;
        &self.unwrapped[o..o + self.dim]
    }

    pub fn is_failed(&self, path: usize) -> bool {
        self.failed.iter().any(|(p, _)| *p == path)
    }

    /// Indices of paths that ran to completion.
    pub fn good_paths(&self) -> Vec<usize> {
        (0..self.n_paths()).filter(|p| !self.is_failed(*p)).collect()
    }

    /// Wrapped positions of all good paths at a saved index, flattened.
    pub fn snapshot(&self, time: usize) -> Vec<f64> {
        self.good_paths()
            .into_iter()
            .flat_map(|p| self.position(p, time).to_vec())
            .collect()
    }

    /// Index of the saved time closest to `t`, if within half a save interval.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let step = self.config.dt * self.config.save_stride as f64;
        let i = (t / step).round();
        if i < 0.0 || (i * step - t).abs() > 0.5 * step {
            return None;
        }
        let i = i as usize;
        (i < self.times.len()).then_some(i)
    }

    /// CSV with columns `path,t,x1..xd,u1..ud`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["path".to_string(), "t".to_string()];
        header.extend((1..=self.dim).map(|a| format!("x{a}")));
        header.extend((1..=self.dim).map(|a| format!("u{a}")));
        writeln!(w, "{}", header.join(","))?;
        for p in 0..self.n_paths() {
            for (ti, t) in self.times.iter().enumerate() {
                let mut line = format!("{p},{t}");
                for v in self.position(p, ti).iter().chain(self.unwrapped_position(p, ti)) {
                    line.push(',');
                    line.push_str(&v.to_string());
                }
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }
}

/// Per-path accumulator driven by every Euler step.
pub trait PathObserver: Sync {
    type State: Send;
    fn start(&self, path: usize, x0: &[f64]) -> Self::State;
    /// Step from `(t, x)` to `(t + dt, x_next)`; `dw` is the Brownian increment
    /// (the noise term is `√2 dw`). Positions are unwrapped.
    fn step(&self, state: &mut Self::State, t: f64, dt: f64, x: &[f64], x_next: &[f64], dw: &[f64]);
}

pub struct NoObserver;

impl PathObserver for NoObserver {
    type State = ();
    fn start(&self, _: usize, _: &[f64]) {}
    fn step(&self, _: &mut (), _: f64, _: f64, _: &[f64], _: &[f64], _: &[f64]) {}
}

enum Evaluator {
    Grid(GridSampler),
    Direct(SpectralField),
}

impl Evaluator {
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Evaluator::Grid(s) => {
                s.eval(x, out);
                Ok(())
            }
            Evaluator::Direct(f) => {
                let d = f.grid().dim();
                let w: Vec<f64> = x.iter().map(|v| wrap(*v)).collect();
                let v = f.evaluate_at(&w[..d], EvalMode::DirectSum)?;
                out.copy_from_slice(&v);
                Ok(())
            }
        }
    }
}

/// Piecewise-constant-in-time drift evaluator (left endpoint).
pub struct DriftEvaluator {
    slices: Vec<(f64, Evaluator)>,
    pub sup_norm: f64,
    dim: usize,
}

impl DriftEvaluator {
    pub fn new(drift: &DriftSpec, mode: EvalMode, refine: usize) -> Result<Self> {
        let make = |field: SpectralField| -> Result<Evaluator> {
            Ok(match mode {
                EvalMode::GridInterp => Evaluator::Grid(GridSampler::refined(&field, refine)),
                EvalMode::DirectSum => {
                    // surface the budget error at construction time
                    let d = field.grid().dim();
                    field.evaluate_at(&vec![0.0; d], EvalMode::DirectSum)?;
                    Evaluator::Direct(field)
                }
            })
        };
        let mut slices = Vec::new();
        let mut sup: f64 = 0.0;
        let times: Vec<f64> = match &drift.time_dep {
            TimeDependence::Static => vec![0.0],
            TimeDependence::Sampled(s) => s.iter().map(|x| x.t).collect(),
        };
        for t in times {
            let field = drift.slice_at(t).total_field()?;
            sup = sup.max(field.lebesgue_norm(f64::INFINITY));
            slices.push((t, make(field)?));
        }
        Ok(Self {
            slices,
            sup_norm: sup,
            dim: drift.grid.dim(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let idx = if self.slices.len() == 1 {
            0
        } else {
            self.slices.iter().rposition(|s| s.0 <= t).unwrap_or(0)
        };
        self.slices[idx].1.eval(x, out)
    }
}

/// The drift actually simulated at mollification level `n` (`None` keeps it as is).
pub fn mollified(drift: &DriftSpec, mollify_n: Option<usize>) -> Result<DriftSpec> {
    match mollify_n {
        None => Ok(drift.clone()),
        Some(n) if drift.is_static() => mollify_drift(drift, n),
        Some(n) => mollify_time(drift, n),
    }
}

pub fn simulate(drift: &DriftSpec, mollify_n: Option<usize>, init: &InitialLaw, config: &SimConfig) -> Result<Ensemble> {
    Ok(simulate_observed(drift, mollify_n, init, config, &NoObserver)?.0)
}

/// Simulate and run `observer` along every path; states come back in path order.
pub fn simulate_observed<O: PathObserver>(
    drift: &DriftSpec,
    mollify_n: Option<usize>,
    init: &InitialLaw,
    config: &SimConfig,
    observer: &O,
) -> Result<(Ensemble, Vec<O::State>)> {
    let steps = config.steps()?;
    let bn = mollified(drift, mollify_n)?;
    let evaluator = DriftEvaluator::new(&bn, config.eval_mode, config.interp_refine)?;
    let d = evaluator.dim();
    let mut warnings = Vec::new();
    let bound = 0.1 / (1.0 + evaluator.sup_norm.powi(2));
    if config.dt > bound {
        warnings.push(format!(
            "dt = {} exceeds the advisory bound 0.1/(1+|b|_inf^2) = {bound:.3e}",
            config.dt
        ));
    }
    let start = sample_initial(init, d, config.n_paths, seeds::derive(config.master_seed, &[0x1417]))?;
    if start.clipped_mass > 0.0 {
        warnings.push(format!("initial density: clipped negative mass {:.3e}", start.clipped_mass));
    }
    let times = config.save_times()?;
    let n_times = times.len();
    let path_seeds: Vec<u64> = (0..config.n_paths)
        .map(|p| seeds::derive(config.master_seed, &[p as u64]))
        .collect();
    let sqrt_dt = config.dt.sqrt();
    let sqrt2 = std::f64::consts::SQRT_2;
    let stride = config.save_stride;
    let results: Vec<Result<(Vec<f64>, Option<usize>, O::State)>> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(path_seeds[p]);
            let mut x = start.positions[p * d..(p + 1) * d].to_vec();
            let mut next = vec![0.0; d];
            let mut b = vec![0.0; d];
            let mut dw = vec![0.0; d];
            let mut saved = vec![f64::NAN; n_times * d];
            saved[..d].copy_from_slice(&x);
            let mut state = observer.start(p, &x);
            let mut failed = None;
            for m in 0..steps {
                let t = m as f64 * config.dt;
                evaluator.eval(t, &x, &mut b)?;
                for a in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    dw[a] = sqrt_dt * z;
                    next[a] = x[a] + b[a] * config.dt + sqrt2 * dw[a];
                }
                if next.iter().any(|v| !v.is_finite()) {
                    failed = Some(m);
                    break;
                }
                observer.step(&mut state, t, config.dt, &x, &next, &dw);
                std::mem::swap(&mut x, &mut next);
                if (m + 1) % stride == 0 {
                    let ti = (m + 1) / stride;
                    saved[ti * d..(ti + 1) * d].copy_from_slice(&x);
                }
            }
            Ok((saved, failed, state))
        })
        .collect();
    let mut unwrapped = Vec::with_capacity(config.n_paths * n_times * d);
    let mut failed = Vec::new();
    let mut states = Vec::with_capacity(config.n_paths);
    for (p, r) in results.into_iter().enumerate() {
        let (saved, f, s) = r?;
        if let Some(m) = f {
            failed.push((p, m));
        }
        unwrapped.extend(saved);
        states.push(s);
    }
    if !failed.is_empty() {
        warnings.push(format!("{} paths aborted on non-finite positions", failed.len()));
    }
    let wrapped = unwrapped.iter().map(|v| if v.is_finite() { wrap(*v) } else { *v }).collect();
    let drift_id = match mollify_n {
        Some(n) => format!("{}|mollify_n={n}", drift.label),
        None => drift.label.clone(),
    };
    Ok((
        Ensemble {
            dim: d,
            times,
            wrapped,
            unwrapped,
            path_seeds,
            config: config.clone(),
            drift_id,
            stationary_start: matches!(init, InitialLaw::Uniform),
            divergence_free: bn.b2_is_zero(),
            failed,
            warnings,
        },
        states,
    ))
}
