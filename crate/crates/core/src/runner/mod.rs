//! Configuration-driven experiments: build the drift, mollify, simulate
//! and/or solve, run the configured checks and write the artifacts.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! config_echo.toml    the parsed config, re-serialized
//! fields/             drift and PDE fields (binary snapshots), KBE ledger
//! ensembles/          ensemble CSVs
//! reports.jsonl       one report per line
//! summary.csv         name,statistic,target,se,verdict
//! metadata.json       timestamps, timings, thread count, warnings
//! ```
//!
//! Everything except `metadata.json` is a pure function of the config. Every
//! random component draws from `component_seed(master_seed, experiment, component)`.

mod config;
mod overrides;
mod presets;

pub use config::{
    exponent, CheckSpec, ExperimentConfig, GridConfig, InitConfig, KbeSection, MollifyLevels, SimSection, DriftCase,
};
pub use overrides::apply_override;
pub use presets::{preset, PRESETS};

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::diagnostics::{
    self, identities, kbe_oracles, ObservedEnsemble, ObserverPlan, TestFn,
};
use crate::drift::{build_drift, build_cutoff, morrey_counterexample_A, default_antisymmetric, verify_structural_conditions, BuiltDrift, DriftParams, DriftSpec};
use crate::error::{Error, Result};
use crate::kbe::{injectivity_probe, resolvent_solve, solve_backward, BackwardOptions, ResolventOptions};
use crate::report::{DiagnosticsReport, Verdict};
use crate::sde::{mollified, InitialLaw, SimConfig};
use crate::seeds::component_seed;
use crate::spectral::{snapshot::write_field, Rank, SpectralField, TorusGrid, TWO_PI};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SDL_THREADS";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<DiagnosticsReport>,
    /// 0 when no report failed, 1 otherwise.
    pub exit_code: i32,
    pub output_dir: PathBuf,
    pub warnings: Vec<String>,
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}

/// Run with the thread cap from the environment.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    run_with_threads(config, threads_from_env())
}

/// Run inside a dedicated pool of `threads` workers (hardware default when `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutcome> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    let workers = pool.current_num_threads();
    pool.install(|| Runner::new(config)?.execute(workers))
}

#[derive(Serialize)]
struct Metadata {
    experiment: String,
    crate_version: &'static str,
    started_unix_s: f64,
    finished_unix_s: f64,
    elapsed_s: f64,
    threads: usize,
    check_seconds: Vec<(String, f64)>,
    warnings: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    drift: BuiltDrift,
    /// The drift actually simulated and solved.
    level: Option<usize>,
    out: PathBuf,
    warnings: Vec<String>,
}

/// Plan entries owned by each check, by check position.
#[derive(Default)]
struct PlanIndex {
    ito: BTreeMap<usize, usize>,
    bank: Option<(usize, usize)>,
    martingale: BTreeMap<usize, usize>,
    novikov: BTreeMap<usize, usize>,
}

fn default_test(dim: usize) -> TestFn {
    TestFn::cosine(dim, 0, 1)
}

fn metadata_f64(r: &DiagnosticsReport, key: &str) -> Result<f64> {
    r.metadata
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::Numeric(format!("report `{}` has no numeric `{key}`", r.name)))
}

fn calibration_copy(mut r: DiagnosticsReport) -> DiagnosticsReport {
    r.name = format!("calibration.{}", r.name);
    r
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let drift = build_drift(&cfg.drift, grid, self_seed(cfg, "drift")).map_err(|e| e.context("drift"))?;
        Ok(Self {
            cfg,
            warnings: drift.warnings.clone(),
            drift,
            level: cfg.mollify_n.as_ref().and_then(|m| m.main_level()),
            out: cfg.output_dir.clone(),
        })
    }

    fn seed(&self, component: &str) -> u64 {
        self_seed(self.cfg, component)
    }

    fn dim(&self) -> usize {
        self.drift.spec.grid.dim()
    }

    fn sim_config(&self, component: &str) -> SimConfig {
        self.cfg.sim.as_ref().expect("validated").to_sim_config(self.seed(component))
    }

    fn density(&self) -> Result<SpectralField> {
        let grid = self.drift.spec.grid;
        let d = grid.dim();
        match &self.cfg.sim.as_ref().expect("validated").init {
            InitConfig::Cosine { amplitude, k } => {
                let k = k.clone().unwrap_or_else(|| {
                    let mut e = vec![0; d];
                    e[0] = 1;
                    e
                });
                let samples: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        let x = grid.point(i);
                        let phase: f64 = (0..d).map(|j| k[j] as f64 * x[j]).sum();
                        1.0 + amplitude * (TWO_PI * phase).cos()
                    })
                    .collect();
                SpectralField::forward_transform(grid, Rank::Scalar, &samples)
            }
            _ => Ok(SpectralField::constant(grid, 1.0)),
        }
    }

    fn init_law(&self) -> Result<InitialLaw> {
        Ok(match &self.cfg.sim.as_ref().expect("validated").init {
            InitConfig::Uniform => InitialLaw::Uniform,
            InitConfig::Cosine { .. } => InitialLaw::Density(self.density()?),
            InitConfig::Point { x } => InitialLaw::Point(x.clone()),
        })
    }

    fn build_plan(&self) -> (ObserverPlan, PlanIndex) {
        let d = self.dim();
        let mut plan = ObserverPlan::default();
        let mut idx = PlanIndex::default();
        for (i, c) in self.cfg.diagnostics.iter().enumerate() {
            match c {
                CheckSpec::ItoTrick { test, .. } => {
                    idx.ito.insert(i, plan.ito.len());
                    plan.ito.push(test.clone().unwrap_or_else(|| default_test(d)));
                }
                CheckSpec::EnergyEstimate { bank_size, kmax, terms, .. } if idx.bank.is_none() => {
                    let start = plan.bank.len();
                    plan.bank
                        .extend(TestFn::random_bank(d, *bank_size, *kmax, *terms, self.seed("bank")));
                    idx.bank = Some((start, plan.bank.len()));
                }
                CheckSpec::Martingale { test, .. } => {
                    idx.martingale.insert(i, plan.martingale.len());
                    plan.martingale.push(test.clone().unwrap_or_else(|| default_test(d)));
                }
                CheckSpec::Novikov { a, .. } => {
                    idx.novikov.insert(i, plan.novikov.len());
                    plan.novikov.push(a.clone());
                }
                _ => {}
            }
        }
        (plan, idx)
    }

    fn execute(mut self, workers: usize) -> Result<RunOutcome> {
        let started = unix_now();
        let clock = Instant::now();
        for sub in ["fields", "ensembles"] {
            fs::create_dir_all(self.out.join(sub))?;
        }
        fs::write(self.out.join("config_echo.toml"), self.cfg.to_toml_string()?)?;
        write_field(create(&self.out.join("fields/drift.sdlf"))?, &self.drift.spec.total_field()?)?;

        let (plan, idx) = self.build_plan();
        let main = if self.cfg.diagnostics.iter().any(|c| c.needs_ensemble()) {
            let obs = diagnostics::simulate_with_plan(
                &self.drift.spec,
                self.level,
                &self.init_law()?,
                &self.sim_config("sim"),
                &plan,
            )
            .map_err(|e| e.context("simulation"))?;
            self.warnings.extend(obs.ensemble.warnings.iter().cloned());
            if self.cfg.sim.as_ref().is_some_and(|s| s.write_ensemble) {
                obs.ensemble.write_csv(create(&self.out.join("ensembles/main.csv"))?)?;
            }
            Some(obs)
        } else {
            None
        };
        let wants_calibration = self.cfg.diagnostics.iter().any(|c| {
            matches!(
                c,
                CheckSpec::ItoTrick { calibrate: true, .. }
                    | CheckSpec::EnergyEstimate { calibrate: true, .. }
                    | CheckSpec::Novikov { calibrate: true, .. }
            )
        });
        let calibration = if wants_calibration {
            Some(
                diagnostics::simulate_with_plan(
                    &DriftSpec::zero(self.drift.spec.grid),
                    None,
                    &InitialLaw::Uniform,
                    &self.sim_config("calibration"),
                    &plan,
                )
                .map_err(|e| e.context("calibration run"))?,
            )
        } else {
            None
        };

        let mut reports = Vec::new();
        let mut timings = Vec::new();
        for (i, check) in self.cfg.diagnostics.iter().enumerate() {
            let t0 = Instant::now();
            let ctx = format!("diagnostics[{i}] ({})", check.name());
            let got = self
                .run_check(i, check, main.as_ref(), calibration.as_ref(), &idx)
                .map_err(|e| e.context(ctx))?;
            reports.extend(got);
            timings.push((check.name().to_string(), t0.elapsed().as_secs_f64()));
        }

        diagnostics::write_jsonl(&reports, create(&self.out.join("reports.jsonl"))?)?;
        diagnostics::write_summary_csv(&reports, create(&self.out.join("summary.csv"))?)?;
        let meta = Metadata {
            experiment: self.cfg.experiment.clone(),
            crate_version: env!("CARGO_PKG_VERSION"),
            started_unix_s: started,
            finished_unix_s: unix_now(),
            elapsed_s: clock.elapsed().as_secs_f64(),
            threads: workers,
            check_seconds: timings,
            warnings: self.warnings.clone(),
        };
        serde_json::to_writer_pretty(create(&self.out.join("metadata.json"))?, &meta)?;
        let exit_code = if diagnostics::all_hard_pass(&reports) { 0 } else { 1 };
        Ok(RunOutcome {
            reports,
            exit_code,
            output_dir: self.out,
            warnings: self.warnings,
        })
    }

    fn run_check(
        &self,
        i: usize,
        check: &CheckSpec,
        main: Option<&ObservedEnsemble>,
        cal: Option<&ObservedEnsemble>,
        idx: &PlanIndex,
    ) -> Result<Vec<DiagnosticsReport>> {
        let main = || main.ok_or_else(|| Error::Precondition("no ensemble".into()));
        let cal_for = |wanted: bool| if wanted { cal } else { None };
        match check {
            CheckSpec::Identities {
                fields,
                besov_fields,
                skew_fields,
                grids,
                skew_cases,
            } => self.identities(*fields, *besov_fields, *skew_fields, grids, skew_cases),
            CheckSpec::KbeOracles => kbe_oracles(self.seed("kbe_oracles")),
            CheckSpec::ItoTrick {
                p,
                q,
                oracle,
                horizons,
                calibrate,
                ..
            } => {
                let obs = main()?;
                let k = idx.ito[&i];
                let mut out = Vec::new();
                let c = match cal_for(*calibrate) {
                    Some(cal) => {
                        let r = diagnostics::ito_trick_check(cal, k, *p, *q, None)?;
                        let c = metadata_f64(&r, "constant")?;
                        out.push(calibration_copy(r));
                        Some(c)
                    }
                    None => None,
                };
                let main_rep = diagnostics::ito_trick_check(obs, k, *p, *q, c)?;
                let main_stat = main_rep.statistic;
                out.push(main_rep);
                if *oracle {
                    out.push(diagnostics::ito_oracle_check(obs, k)?);
                }
                if !horizons.is_empty() {
                    let plan = ObserverPlan {
                        ito: vec![obs.plan.ito[k].clone()],
                        ..Default::default()
                    };
                    let mut pts = vec![(obs.ensemble.config.t_final, main_stat)];
                    for &t in horizons {
                        let mut sc = self.sim_config("sim");
                        sc.t_final = t;
                        sc.save_stride = (t / sc.dt).round() as usize;
                        let run = diagnostics::simulate_with_plan(
                            &self.drift.spec,
                            self.level,
                            &self.init_law()?,
                            &sc,
                            &plan,
                        )?;
                        pts.push((t, diagnostics::ito_trick_check(&run, 0, *p, *q, None)?.statistic));
                    }
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let (ts, ss): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                    out.push(diagnostics::ito_scaling_check(&ts, &ss, *p, *q)?);
                }
                Ok(out)
            }
            CheckSpec::Incompressibility {
                bins,
                times,
                dts,
                extra_drifts,
            } => self.incompressibility(main()?, *bins, times.as_deref(), dts, extra_drifts),
            CheckSpec::EnergyEstimate { calibrate, .. } => {
                let obs = main()?;
                let (a, b) = idx.bank.expect("bank planned");
                let restrict = |o: &ObservedEnsemble| {
                    let mut o = o.clone();
                    o.plan.bank = o.plan.bank[a..b].to_vec();
                    for r in &mut o.records {
                        r.bank_sup = r.bank_sup[a..b].to_vec();
                    }
                    o
                };
                let mut out = Vec::new();
                let c = match cal_for(*calibrate) {
                    Some(cal) => {
                        let r = diagnostics::energy_estimate_check(&restrict(cal), None)?;
                        let c = r.statistic;
                        out.push(calibration_copy(r));
                        Some(c)
                    }
                    None => None,
                };
                out.push(diagnostics::energy_estimate_check(&restrict(obs), c)?);
                Ok(out)
            }
            CheckSpec::Martingale { qv_factor, .. } => diagnostics::martingale_check(main()?, idx.martingale[&i], *qv_factor),
            CheckSpec::Duality => self.duality(main()?),
            CheckSpec::Novikov { p, r, calibrate, .. } => {
                let obs = main()?;
                let k = idx.novikov[&i];
                let mut out = Vec::new();
                let c = match cal_for(*calibrate) {
                    Some(cal) => {
                        let rep = diagnostics::novikov_check(cal, k, *p, *r, None)?;
                        let c = metadata_f64(&rep, "constant")?;
                        out.push(calibration_copy(rep));
                        Some(c)
                    }
                    None => None,
                };
                out.push(diagnostics::novikov_check(obs, k, *p, *r, c)?);
                Ok(out)
            }
            CheckSpec::MollifiedConvergence { n_list } => {
                let list = n_list
                    .clone()
                    .or_else(|| self.cfg.mollify_n.as_ref().map(|m| m.levels()))
                    .expect("validated");
                Ok(vec![diagnostics::mollified_convergence(
                    &self.drift.spec,
                    &list,
                    &self.init_law()?,
                    &self.sim_config("sim"),
                )?])
            }
            CheckSpec::VarianceGrowth => Ok(vec![diagnostics::variance_growth(&main()?.ensemble)?]),
            CheckSpec::Resolvent {
                truncations,
                sigma_floor,
                stability,
            } => self.resolvent(truncations, *sigma_floor, *stability),
            CheckSpec::Structural { eps } => {
                let k = self.singular_set()?;
                let a = self.drift.spec.b1.potential()?;
                Ok(verify_structural_conditions(&a, k, eps)?.reports)
            }
            CheckSpec::Cutoff { eps, grid } => {
                let k = self.singular_set()?;
                let g = match grid {
                    Some(g) => g.build()?,
                    None => self.drift.spec.grid,
                };
                eps.iter()
                    .map(|&e| Ok(build_cutoff(g, k, e)?.report().with("N", g.n()).with("dim", g.dim())))
                    .collect()
            }
            CheckSpec::Morrey { case } => match case.as_ref().map_or((self.cfg.grid, &self.cfg.drift), |c| (c.grid, &c.drift)) {
                (grid, DriftParams::Morrey { alphas, epss, v, b }) => {
                    let g = grid.build()?;
                    let d = g.dim();
                    let v = v.clone().unwrap_or_else(|| {
                        let mut e = vec![0.0; d];
                        e[0] = 1.0;
                        e
                    });
                    let b = b.clone().unwrap_or_else(|| default_antisymmetric(d));
                    let field = morrey_counterexample_A(g, alphas, epss, &v, &b)?;
                    let table = field.functionals()?;
                    Ok(table
                        .verdicts()
                        .into_iter()
                        .map(|r| r.with("local", &table.local).with("centered", &table.centered))
                        .collect())
                }
                (_, _) => Err(Error::Precondition("the morrey check needs the morrey drift".into())),
            },
        }
    }

    fn singular_set(&self) -> Result<&crate::drift::KSet> {
        self.drift
            .k
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("drift `{}` has no singular set", self.cfg.drift.name())))
    }

    fn identities(
        &self,
        fields: usize,
        besov_fields: usize,
        skew_fields: usize,
        grids: &[GridConfig],
        skew_cases: &[DriftCase],
    ) -> Result<Vec<DiagnosticsReport>> {
        let mut out = Vec::new();
        let seed = self.seed("identities");
        for g in grids {
            let grid = g.build()?;
            out.extend(identities::spectral_identities(grid, fields, seed)?);
            out.extend(identities::helmholtz_identities(grid, fields, seed)?);
            out.extend(identities::besov_identities(grid, besov_fields, seed)?);
        }
        for (j, case) in skew_cases.iter().enumerate() {
            let grid = case.grid.build()?;
            let built = build_drift(&case.drift, grid, self.seed(&format!("identities.skew.{j}")))?;
            let kmax = (grid.n() / 4).max(1) as i64;
            out.push(identities::skew_identity(&built.spec, skew_fields, kmax, seed)?.with("dim", grid.dim()));
        }
        Ok(out)
    }

    fn incompressibility(
        &self,
        main: &ObservedEnsemble,
        bins: usize,
        times: Option<&[f64]>,
        dts: &[f64],
        extra_drifts: &[DriftParams],
    ) -> Result<Vec<DiagnosticsReport>> {
        let base_cfg = self.sim_config("sim");
        let saved: Vec<f64> = match times {
            Some(t) => t.to_vec(),
            None => main.ensemble.times[1..].last().copied().into_iter().collect(),
        };
        let mut out = vec![diagnostics::incompressibility_check(&main.ensemble, Some(&saved), bins)?];
        let mut drifts: Vec<(String, DriftSpec)> = vec![(self.cfg.drift.name().to_string(), self.drift.spec.clone())];
        for (j, p) in extra_drifts.iter().enumerate() {
            let built = build_drift(p, self.drift.spec.grid, self.seed(&format!("drift.extra.{j}")))?;
            drifts.push((p.name().to_string(), built.spec));
        }
        let mut all_dts = vec![base_cfg.dt];
        all_dts.extend_from_slice(dts);
        let init = self.init_law()?;
        for (j, (_, spec)) in drifts.iter().enumerate() {
            for (m, &dt) in all_dts.iter().enumerate() {
                if j == 0 && m == 0 {
                    continue;
                }
                let mut sc = base_cfg.clone();
                sc.dt = dt;
                let idx: Vec<usize> = saved.iter().map(|t| (t / dt).round() as usize).collect();
                sc.save_stride = idx.iter().fold(0, |a, &b| gcd(a, b)).max(1);
                let ens = crate::sde::simulate(spec, self.level, &init, &sc)?;
                out.push(diagnostics::incompressibility_check(&ens, Some(&saved), bins)?);
            }
        }
        Ok(out)
    }

    fn kbe_horizon(&self) -> f64 {
        let kbe = self.cfg.kbe.as_ref().expect("validated");
        kbe.t_final
            .or_else(|| self.cfg.sim.as_ref().map(|s| s.t_final))
            .expect("validated")
    }

    fn terminal(&self, grid: TorusGrid) -> Result<SpectralField> {
        let kbe = self.cfg.kbe.as_ref().expect("validated");
        kbe.terminal
            .clone()
            .unwrap_or_else(|| default_test(grid.dim()))
            .spatial_field(grid)
    }

    fn duality(&self, main: &ObservedEnsemble) -> Result<Vec<DiagnosticsReport>> {
        let kbe = self.cfg.kbe.as_ref().expect("validated");
        let bn = mollified(&self.drift.spec, self.level)?;
        let u_t = self.terminal(bn.grid)?;
        let opts = BackwardOptions {
            form: kbe.form,
            keep_every: kbe.keep_every,
        };
        let traj = solve_backward(&bn, &u_t, self.kbe_horizon(), kbe.dt, &opts).map_err(|e| e.context("backward solve"))?;
        write_field(create(&self.out.join("fields/kbe_u0.sdlf"))?, traj.u0())?;
        traj.write_ledger_csv(create(&self.out.join("fields/kbe_ledger.csv"))?)?;
        let eta0 = self.density()?;
        Ok(vec![diagnostics::duality_check(&main.ensemble, &traj, &eta0, kbe.tol)?
            .with("energy_balance_defect", traj.energy_balance_defect())])
    }

    fn resolvent(&self, truncations: &[usize], floor: f64, stability: f64) -> Result<Vec<DiagnosticsReport>> {
        let kbe = self.cfg.kbe.as_ref().expect("validated");
        let bn = mollified(&self.drift.spec, self.level)?;
        let n_list: Vec<usize> = if truncations.is_empty() {
            vec![bn.grid.n()]
        } else {
            truncations.to_vec()
        };
        let opts = ResolventOptions {
            tol: kbe.tol,
            form: kbe.form,
            ..Default::default()
        };
        let rhs_full = self.terminal(bn.grid)?;
        let mut worst_res: f64 = 0.0;
        let mut solves = Vec::new();
        let mut sigma_rows: Vec<(usize, Vec<(f64, f64)>, String)> = Vec::new();
        let mut failures = Vec::new();
        for &n in &n_list {
            let coarse = TorusGrid::new(bn.grid.dim(), n)?;
            let dn = if n == bn.grid.n() { bn.clone() } else { bn.truncated(coarse)? };
            let rhs = if n == bn.grid.n() { rhs_full.clone() } else { rhs_full.truncate(coarse)? };
            for &lambda in &kbe.lambdas {
                match resolvent_solve(&dn, lambda, &rhs, &opts) {
                    Ok(sol) => {
                        worst_res = worst_res.max(sol.residual_h_minus1);
                        solves.push((n, lambda, sol.residual_h_minus1, sol.iterations, sol.h1_ratio));
                    }
                    Err(Error::Divergence { last_residual, iterations, .. }) => {
                        worst_res = worst_res.max(last_residual);
                        failures.push((n, lambda, last_residual, iterations));
                    }
                    Err(e) => return Err(e),
                }
            }
            let probe = injectivity_probe(&bn, &kbe.lambdas, Some(n), kbe.form)?;
            sigma_rows.push((n, probe.table, probe.method));
        }
        let mut out = vec![DiagnosticsReport::new(
            "resolvent.residual",
            worst_res,
            kbe.tol,
            Verdict::from_bool(failures.is_empty() && worst_res <= kbe.tol),
            "every solve converges with H^-1 residual <= target",
        )
        .with("solves_N_lambda_residual_iterations_h1ratio", &solves)
        .with("failures", &failures)];
        let sigma_min = sigma_rows
            .iter()
            .flat_map(|r| r.1.iter().map(|x| x.1))
            .fold(f64::INFINITY, f64::min);
        out.push(
            DiagnosticsReport::at_least("resolvent.sigma_min", sigma_min, floor)
                .with("tables", &sigma_rows)
                .with("lambdas", &kbe.lambdas),
        );
        if sigma_rows.len() >= 2 {
            let mut worst: f64 = 0.0;
            for w in sigma_rows.windows(2) {
                for (a, b) in w[0].1.iter().zip(&w[1].1) {
                    worst = worst.max((b.1 - a.1).abs() / b.1);
                }
            }
            out.push(
                DiagnosticsReport::at_most("resolvent.stability", worst, stability)
                    .with("truncations", &n_list),
            );
        } else {
            out.push(DiagnosticsReport::new(
                "resolvent.stability",
                f64::NAN,
                stability,
                Verdict::Inconclusive,
                "needs two truncations",
            ));
        }
        Ok(out)
    }
}

fn self_seed(cfg: &ExperimentConfig, component: &str) -> u64 {
    component_seed(cfg.master_seed, &cfg.experiment, component)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
