//! Experiment configuration: a TOML (or JSON) document deserialized with
//! unknown keys rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{TestFn, VectorTestFn};
use crate::drift::DriftParams;
use crate::error::{Error, Result};
use crate::kbe::GeneratorForm;
use crate::sde::SimConfig;
use crate::spectral::{EvalMode, TorusGrid};

/// Exponents accept a number or the string `"inf"`.
pub mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Int(v) => Ok(v as f64),
            Raw::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(f64::INFINITY),
            Raw::Text(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl GridConfig {
    pub fn new(dim: usize, n: usize) -> Self {
        Self { dim, n }
    }

    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.n)
    }
}

/// One mollification level or a sweep; the last sweep entry drives the main run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MollifyLevels {
    Level(usize),
    Sweep(Vec<usize>),
}

impl MollifyLevels {
    pub fn main_level(&self) -> Option<usize> {
        match self {
            MollifyLevels::Level(n) => Some(*n),
            MollifyLevels::Sweep(v) => v.last().copied(),
        }
    }

    pub fn levels(&self) -> Vec<usize> {
        match self {
            MollifyLevels::Level(n) => vec![*n],
            MollifyLevels::Sweep(v) => v.clone(),
        }
    }
}

fn one() -> usize {
    1
}

fn grid_interp() -> EvalMode {
    EvalMode::GridInterp
}

fn default_true() -> bool {
    true
}

/// Law of `X₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    #[default]
    Uniform,
    /// Density `1 + amplitude cos(2π k·x)`; `k` defaults to the first unit vector.
    Cosine {
        #[serde(default = "unit_amplitude")]
        amplitude: f64,
        #[serde(default)]
        k: Option<Vec<i64>>,
    },
    Point {
        x: Vec<f64>,
    },
}

fn unit_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_paths: usize,
    #[serde(default = "one")]
    pub save_stride: usize,
    #[serde(default = "grid_interp")]
    pub eval_mode: EvalMode,
    #[serde(default = "one")]
    pub interp_refine: usize,
    #[serde(default)]
    pub init: InitConfig,
    /// Write `ensembles/main.csv`.
    #[serde(default = "default_true")]
    pub write_ensemble: bool,
}

impl SimSection {
    pub fn to_sim_config(&self, seed: u64) -> SimConfig {
        SimConfig::new(self.dt, self.t_final, self.n_paths)
            .with_stride(self.save_stride)
            .with_eval_mode(self.eval_mode)
            .with_refine(self.interp_refine)
            .with_seed(seed)
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn divergence_out() -> GeneratorForm {
    GeneratorForm::DivergenceOut
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbeSection {
    pub dt: f64,
    /// Defaults to the simulation horizon.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "divergence_out")]
    pub form: GeneratorForm,
    /// Terminal condition `u_T`; defaults to `cos(2π x₁)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TestFn>,
    #[serde(default)]
    pub keep_every: usize,
}

fn two() -> f64 {
    2.0
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn sixteen() -> usize {
    16
}

fn bank_size() -> usize {
    20
}

fn bank_kmax() -> i64 {
    3
}

fn bank_terms() -> usize {
    3
}

fn hundred() -> usize {
    100
}

fn two_hundred() -> usize {
    200
}

fn fifty() -> usize {
    50
}

fn sigma_floor() -> f64 {
    0.5
}

fn stability() -> f64 {
    0.1
}

fn identity_grids() -> Vec<GridConfig> {
    vec![GridConfig::new(1, 256), GridConfig::new(2, 32), GridConfig::new(3, 16)]
}

/// A potential-form drift on its own grid, independent of the experiment drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftCase {
    pub grid: GridConfig,
    pub drift: DriftParams,
}

pub fn default_skew_cases() -> Vec<DriftCase> {
    vec![
        DriftCase {
            grid: GridConfig::new(2, 32),
            drift: DriftParams::Shear {
                amplitude: 1.0,
                wavenumber: 1,
            },
        },
        DriftCase {
            grid: GridConfig::new(2, 64),
            drift: DriftParams::GffCurl { alpha: 1.5 },
        },
        DriftCase {
            grid: GridConfig::new(3, 16),
            drift: DriftParams::PointSingularity { alpha: 0.5, b: None },
        },
        DriftCase {
            grid: GridConfig::new(2, 64),
            drift: DriftParams::Morrey {
                alphas: vec![0.5, 0.25],
                epss: vec![1.0 / 16.0, 1.0 / 32.0],
                v: None,
                b: None,
            },
        },
    ]
}

/// A diagnostic and its parameters, tagged by `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Spectral, Helmholtz, skew and Besov identities on random fields.
    Identities {
        #[serde(default = "hundred")]
        fields: usize,
        #[serde(default = "two_hundred")]
        besov_fields: usize,
        #[serde(default = "fifty")]
        skew_fields: usize,
        #[serde(default = "identity_grids")]
        grids: Vec<GridConfig>,
        #[serde(default = "default_skew_cases")]
        skew_cases: Vec<DriftCase>,
    },
    KbeOracles,
    ItoTrick {
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "infinite", with = "exponent")]
        q: f64,
        /// Defaults to `cos(2π x₁)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<TestFn>,
        /// Compare `E[(∫Δf)²]` with its Brownian closed form.
        #[serde(default)]
        oracle: bool,
        /// Extra horizons for the `T`-scaling fit; the main horizon is always included.
        #[serde(default)]
        horizons: Vec<f64>,
        /// Calibrate the constant on a zero-drift run first.
        #[serde(default)]
        calibrate: bool,
    },
    Incompressibility {
        #[serde(default = "sixteen")]
        bins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        times: Option<Vec<f64>>,
        /// Repeat the histogram at these extra step sizes.
        #[serde(default)]
        dts: Vec<f64>,
        /// Repeat it for these extra drifts.
        #[serde(default)]
        extra_drifts: Vec<DriftParams>,
    },
    EnergyEstimate {
        #[serde(default = "bank_size")]
        bank_size: usize,
        #[serde(default = "bank_kmax")]
        kmax: i64,
        #[serde(default = "bank_terms")]
        terms: usize,
        #[serde(default = "default_true")]
        calibrate: bool,
    },
    Martingale {
        /// Defaults to `cos(2π x₁)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<TestFn>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qv_factor: Option<f64>,
    },
    Duality,
    Novikov {
        a: VectorTestFn,
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "two")]
        r: f64,
        #[serde(default = "default_true")]
        calibrate: bool,
    },
    MollifiedConvergence {
        /// Defaults to the `mollify_n` sweep.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_list: Option<Vec<usize>>,
    },
    VarianceGrowth,
    /// Residual contract of the resolvent and the weighted `σ_min` sweep.
    Resolvent {
        /// Mode counts per axis to truncate the drift to; empty means the config grid only.
        #[serde(default)]
        truncations: Vec<usize>,
        #[serde(default = "sigma_floor")]
        sigma_floor: f64,
        /// Largest relative change of `σ_min` between consecutive truncations.
        #[serde(default = "stability")]
        stability: f64,
    },
    /// Structural functionals of a drift with a singular set.
    Structural { eps: Vec<f64> },
    /// Cutoff invariants around the drift's singular set.
    Cutoff {
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridConfig>,
    },
    /// Local and shifted-center functionals of the Morrey drift; `case`
    /// defaults to the experiment grid and drift.
    Morrey {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        case: Option<DriftCase>,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Identities { .. } => "identities",
            CheckSpec::KbeOracles => "kbe_oracles",
            CheckSpec::ItoTrick { .. } => "ito_trick",
            CheckSpec::Incompressibility { .. } => "incompressibility",
            CheckSpec::EnergyEstimate { .. } => "energy_estimate",
            CheckSpec::Martingale { .. } => "martingale",
            CheckSpec::Duality => "duality",
            CheckSpec::Novikov { .. } => "novikov",
            CheckSpec::MollifiedConvergence { .. } => "mollified_convergence",
            CheckSpec::VarianceGrowth => "variance_growth",
            CheckSpec::Resolvent { .. } => "resolvent",
            CheckSpec::Structural { .. } => "structural",
            CheckSpec::Cutoff { .. } => "cutoff",
            CheckSpec::Morrey { .. } => "morrey",
        }
    }

    pub const NAMES: [&'static str; 14] = [
        "identities",
        "kbe_oracles",
        "ito_trick",
        "incompressibility",
        "energy_estimate",
        "martingale",
        "duality",
        "novikov",
        "mollified_convergence",
        "variance_growth",
        "resolvent",
        "structural",
        "cutoff",
        "morrey",
    ];

    /// Whether the check reads the main ensemble.
    pub fn needs_ensemble(&self) -> bool {
        matches!(
            self,
            CheckSpec::ItoTrick { .. }
                | CheckSpec::Incompressibility { .. }
                | CheckSpec::EnergyEstimate { .. }
                | CheckSpec::Martingale { .. }
                | CheckSpec::Duality
                | CheckSpec::Novikov { .. }
                | CheckSpec::VarianceGrowth
        )
    }

    pub fn needs_sim(&self) -> bool {
        self.needs_ensemble() || matches!(self, CheckSpec::MollifiedConvergence { .. })
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("sdl_output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_n: Option<MollifyLevels>,
    pub grid: GridConfig,
    pub drift: DriftParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kbe: Option<KbeSection>,
    #[serde(default)]
    pub diagnostics: Vec<CheckSpec>,
}

/// `null` object entries mean "absent", which TOML cannot express.
fn strip_nulls(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.retain(|_, x| !x.is_null());
            m.values_mut().for_each(strip_nulls);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}

/// Parameter constraints that can be checked without building the field.
fn check_drift(key: &str, drift: &DriftParams) -> Result<()> {
    match drift {
        DriftParams::Morrey { alphas, epss, .. } => {
            if alphas.len() != epss.len() {
                return Err(bad(&format!("{key}.epss"), "needs one entry per alpha"));
            }
            for (i, &e) in epss.iter().enumerate() {
                let n = i as i32 + 1;
                if !(e > 0.0) || e > f64::powi(2.0, -n - 3) * (1.0 + 1e-12) {
                    return Err(bad(&format!("{key}.epss[{i}]"), format!("{e} violates 0 < eps_n <= 2^(-n-3)")));
                }
            }
            Ok(())
        }
        DriftParams::ParticleLift { base, .. } => check_drift(&format!("{key}.base"), base),
        _ => Ok(()),
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be a positive number, got {v}")))
    }
}

impl ExperimentConfig {
    /// Raw config tree from TOML, or JSON when the text starts with `{`.
    pub fn load_table(text: &str) -> Result<toml::Table> {
        if text.trim_start().starts_with('{') {
            let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(".", e.to_string()))?;
            strip_nulls(&mut v);
            serde_json::from_value(v).map_err(|e| bad(".", e.to_string()))
        } else {
            text.parse().map_err(|e: toml::de::Error| bad(".", e.message().to_string()))
        }
    }

    /// Deserialize and validate a config tree, e.g. after overrides.
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg = Self::from_toml(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            let mut de = serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(&mut de).map_err(|e| bad(&e.path().to_string(), e.inner().to_string()))?
        } else {
            let value: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(".", e.message().to_string()))?;
            Self::from_toml(value)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(table: toml::Table) -> Result<Self> {
        serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| bad(&e.path().to_string(), e.inner().message().to_string()))
    }

    pub fn to_toml_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Tree invariants; every error names the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(bad("experiment", "must be nonempty"));
        }
        self.grid.build().map_err(|e| bad("grid", e.to_string()))?;
        if let Some(m) = &self.mollify_n {
            let levels = m.levels();
            if levels.is_empty() {
                return Err(bad("mollify_n", "sweep must be nonempty"));
            }
            if levels.contains(&0) {
                return Err(bad("mollify_n", "levels must be positive"));
            }
        }
        check_drift("drift", &self.drift)?;
        if let Some(sim) = &self.sim {
            sim.to_sim_config(0).steps().map_err(|e| bad("sim", e.to_string()))?;
            let dim = self.drift.output_dim(self.grid.dim);
            match &sim.init {
                InitConfig::Point { x } if x.len() != dim => {
                    return Err(bad("sim.init.x", format!("needs {dim} coordinates")));
                }
                InitConfig::Cosine { amplitude, k } => {
                    if !(amplitude.abs() <= 1.0) {
                        return Err(bad("sim.init.amplitude", "|amplitude| <= 1 keeps the density nonnegative"));
                    }
                    if k.as_ref().is_some_and(|k| k.len() != dim) {
                        return Err(bad("sim.init.k", format!("needs {dim} entries")));
                    }
                }
                _ => {}
            }
        }
        if let Some(kbe) = &self.kbe {
            positive("kbe.dt", kbe.dt)?;
            positive("kbe.tol", kbe.tol)?;
            if let Some(t) = kbe.t_final {
                positive("kbe.T", t)?;
            } else if self.sim.is_none() {
                return Err(bad("kbe.T", "required without a sim section"));
            }
            for (i, l) in kbe.lambdas.iter().enumerate() {
                positive(&format!("kbe.lambdas[{i}]"), *l)?;
            }
            if let Some(f) = &kbe.terminal {
                f.validate().map_err(|e| bad("kbe.terminal", e.to_string()))?;
            }
        }
        for (i, c) in self.diagnostics.iter().enumerate() {
            let key = |k: &str| format!("diagnostics[{i}].{k}");
            if c.needs_sim() && self.sim.is_none() {
                return Err(bad(&format!("diagnostics[{i}]"), format!("check `{}` needs a sim section", c.name())));
            }
            match c {
                CheckSpec::Identities { grids, skew_cases, .. } => {
                    for (j, g) in grids.iter().enumerate() {
                        g.build().map_err(|e| bad(&key(&format!("grids[{j}]")), e.to_string()))?;
                    }
                    for (j, s) in skew_cases.iter().enumerate() {
                        s.grid.build().map_err(|e| bad(&key(&format!("skew_cases[{j}].grid")), e.to_string()))?;
                        check_drift(&key(&format!("skew_cases[{j}].drift")), &s.drift)?;
                    }
                }
                CheckSpec::ItoTrick { p, q, horizons, .. } => {
                    positive(&key("p"), *p)?;
                    if !(*q >= 1.0) {
                        return Err(bad(&key("q"), "must be >= 1"));
                    }
                    for (j, t) in horizons.iter().enumerate() {
                        positive(&key(&format!("horizons[{j}]")), *t)?;
                    }
                }
                CheckSpec::Incompressibility { bins, dts, .. } => {
                    if *bins < 2 {
                        return Err(bad(&key("bins"), "needs at least 2 bins per axis"));
                    }
                    for (j, dt) in dts.iter().enumerate() {
                        positive(&key(&format!("dts[{j}]")), *dt)?;
                    }
                }
                CheckSpec::EnergyEstimate { bank_size, kmax, terms, .. } => {
                    if *bank_size == 0 || *kmax < 1 || *terms == 0 {
                        return Err(bad(&key("bank_size"), "bank needs positive size, kmax and terms"));
                    }
                }
                CheckSpec::Duality => {
                    if self.kbe.is_none() {
                        return Err(bad(&key("check"), "duality needs a kbe section"));
                    }
                    if matches!(self.sim.as_ref().map(|s| &s.init), Some(InitConfig::Point { .. })) {
                        return Err(bad("sim.init", "duality needs a density initial law"));
                    }
                }
                CheckSpec::Novikov { a, p, r, .. } => {
                    a.validate().map_err(|e| bad(&key("a"), e.to_string()))?;
                    positive(&key("p"), *p)?;
                    positive(&key("r"), *r)?;
                }
                CheckSpec::MollifiedConvergence { n_list } => {
                    let list = n_list
                        .clone()
                        .or_else(|| self.mollify_n.as_ref().map(|m| m.levels()))
                        .unwrap_or_default();
                    if list.len() < 2 {
                        return Err(bad(&key("n_list"), "needs at least two levels (or a mollify_n sweep)"));
                    }
                    if list.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(bad(&key("n_list"), "levels must increase"));
                    }
                }
                CheckSpec::Resolvent { .. } => {
                    if self.kbe.as_ref().is_none_or(|k| k.lambdas.is_empty()) {
                        return Err(bad("kbe.lambdas", "the resolvent check needs a nonempty lambda list"));
                    }
                }
                CheckSpec::Structural { eps } | CheckSpec::Cutoff { eps, .. } => {
                    if eps.is_empty() {
                        return Err(bad(&key("eps"), "sweep must be nonempty"));
                    }
                    for (j, e) in eps.iter().enumerate() {
                        positive(&key(&format!("eps[{j}]")), *e)?;
                    }
                    if !matches!(
                        self.drift,
                        DriftParams::PointSingularity { .. } | DriftParams::Morrey { .. }
                    ) {
                        return Err(bad("drift.name", format!("check `{}` needs a drift with a singular set", c.name())));
                    }
                }
                CheckSpec::Morrey { case } => match case {
                    Some(DriftCase { grid, drift }) => {
                        grid.build().map_err(|e| bad(&key("case.grid"), e.to_string()))?;
                        check_drift(&key("case.drift"), drift)?;
                        if !matches!(drift, DriftParams::Morrey { .. }) {
                            return Err(bad(&key("case.drift.name"), "must be morrey"));
                        }
                    }
                    None => {
                        if !matches!(self.drift, DriftParams::Morrey { .. }) {
                            return Err(bad("drift.name", "check `morrey` needs the morrey drift"));
                        }
                    }
                },
                _ => {}
            }
        }
        Ok(())
    }

    /// `(key, kind, meaning)` rows of the configuration schema.
    pub fn schema() -> Vec<(&'static str, &'static str, &'static str)> {
        vec![
            ("experiment", "string", "experiment name, also the seed namespace"),
            ("master_seed", "integer", "root of every derived seed (default 0)"),
            ("output_dir", "path", "artifact directory (default sdl_output)"),
            ("mollify_n", "integer | [integer]", "mollification level or increasing sweep; the last level drives the main run"),
            ("grid.dim", "integer", "torus dimension, 1 to 3"),
            ("grid.N", "integer", "even modes per axis, >= 4"),
            ("drift.name", "string", "one of zero, constant, shear, gff_curl, point_singularity, morrey, particle_lift"),
            ("drift.*", "table", "parameters of the named drift"),
            ("sim.dt", "float", "Euler step"),
            ("sim.T", "float", "horizon, a multiple of dt"),
            ("sim.n_paths", "integer", "ensemble size"),
            ("sim.save_stride", "integer", "steps between saved positions (default 1)"),
            ("sim.eval_mode", "string", "grid_interp or direct_sum"),
            ("sim.interp_refine", "integer", "grid refinement for interpolated drift samples (default 1)"),
            ("sim.init.kind", "string", "uniform, cosine or point"),
            ("sim.init.amplitude", "float", "cosine: density 1 + amplitude cos(2 pi k.x), |amplitude| <= 1 (default 1)"),
            ("sim.init.k", "[integer]", "cosine: wavevector (default first unit vector)"),
            ("sim.init.x", "[float]", "point: starting position"),
            ("sim.write_ensemble", "bool", "write ensembles/main.csv (default true)"),
            ("kbe.dt", "float", "backward solver step"),
            ("kbe.T", "float", "backward horizon (default sim.T)"),
            ("kbe.lambdas", "[float]", "resolvent parameters"),
            ("kbe.tol", "float", "solver tolerance (default 1e-10)"),
            ("kbe.form", "string", "divergence_out or gradient_out"),
            ("kbe.terminal", "test function", "terminal condition (default cos(2 pi x1))"),
            ("kbe.keep_every", "integer", "slices to keep (0 keeps the ends only)"),
            ("diagnostics[].check", "string", "one of the check names, with that check's parameters"),
            ("diagnostics[].fields", "integer", "identities: random fields per grid (default 100)"),
            ("diagnostics[].besov_fields", "integer", "identities: random fields for the Besov layer (default 200)"),
            ("diagnostics[].skew_fields", "integer", "identities: band-limited u per skew case (default 50)"),
            ("diagnostics[].grids", "[grid]", "identities: grids for the spectral, Helmholtz and Besov identities"),
            ("diagnostics[].skew_cases", "[{grid, drift}]", "identities: potential-form drifts for the skew identity"),
            ("diagnostics[].p", "float", "ito_trick, novikov: space exponent (default 2)"),
            ("diagnostics[].q", "float | \"inf\"", "ito_trick: time exponent (default inf)"),
            ("diagnostics[].r", "float", "novikov: exponent of the exponential moment (default 2)"),
            ("diagnostics[].test", "test function", "ito_trick, martingale: observable (default cos(2 pi x1))"),
            ("diagnostics[].a", "vector test function", "novikov: integrand"),
            ("diagnostics[].oracle", "bool", "ito_trick: compare with the Brownian closed form"),
            ("diagnostics[].horizons", "[float]", "ito_trick: extra horizons for the scaling fit"),
            ("diagnostics[].calibrate", "bool", "ito_trick, energy_estimate, novikov: calibrate on a zero-drift run"),
            ("diagnostics[].bins", "integer", "incompressibility: bins per axis (default 16)"),
            ("diagnostics[].times", "[float]", "incompressibility: histogram times (default the final time)"),
            ("diagnostics[].dts", "[float]", "incompressibility: extra step sizes"),
            ("diagnostics[].extra_drifts", "[drift]", "incompressibility: extra drifts"),
            ("diagnostics[].bank_size", "integer", "energy_estimate: random test functions (default 20)"),
            ("diagnostics[].kmax", "integer", "energy_estimate: largest wavenumber in the bank (default 3)"),
            ("diagnostics[].terms", "integer", "energy_estimate: Fourier terms per test function (default 3)"),
            ("diagnostics[].qv_factor", "float", "martingale: quadratic-variation band factor (default 2)"),
            ("diagnostics[].n_list", "[integer]", "mollified_convergence: levels (default the mollify_n sweep)"),
            ("diagnostics[].truncations", "[integer]", "resolvent: modes per axis for the stability sweep"),
            ("diagnostics[].sigma_floor", "float", "resolvent: least admissible sigma_min (default 0.5)"),
            ("diagnostics[].stability", "float", "resolvent: largest relative sigma_min change (default 0.1)"),
            ("diagnostics[].eps", "[float]", "structural, cutoff: scales"),
            ("diagnostics[].grid", "grid", "cutoff: grid override"),
            ("diagnostics[].case", "{grid, drift}", "morrey: field to analyse (default the experiment drift)"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "mini"
master_seed = 3

[grid]
dim = 2
N = 16

[drift]
name = "zero"

[sim]
dt = 0.01
T = 0.1
n_paths = 100

[[diagnostics]]
check = "ito_trick"
q = "inf"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid, GridConfig::new(2, 16));
        let sim = c.sim.as_ref().unwrap();
        assert_eq!(sim.save_stride, 1);
        assert_eq!(sim.init, InitConfig::Uniform);
        match &c.diagnostics[0] {
            CheckSpec::ItoTrick { p, q, .. } => {
                assert_eq!(*p, 2.0);
                assert!(q.is_infinite());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_and_json_round_trip() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), c);
    }

    #[test]
    fn errors_name_the_key() {
        let e = ExperimentConfig::parse(&MINIMAL.replace("\"zero\"", "\"vortex\"")).unwrap_err();
        assert!(e.to_string().contains("drift"), "{e}");
        let e = ExperimentConfig::parse(&MINIMAL.replace("n_paths", "paths")).unwrap_err();
        assert!(e.to_string().contains("sim"), "{e}");
        let e = ExperimentConfig::parse(&MINIMAL.replace("T = 0.1", "T = 0.105")).unwrap_err();
        assert!(e.to_string().contains("`sim`"), "{e}");
        let e = ExperimentConfig::parse(&MINIMAL.replace("q = \"inf\"", "q = \"big\"")).unwrap_err();
        assert!(e.to_string().contains("diagnostics"), "{e}");
        let no_sim = MINIMAL.replace("[sim]\ndt = 0.01\nT = 0.1\nn_paths = 100\n", "");
        let e = ExperimentConfig::parse(&no_sim).unwrap_err();
        assert!(e.to_string().contains("diagnostics[0]"), "{e}");
        let morrey = MINIMAL.replace("name = \"zero\"", "name = \"morrey\"\nalphas = [0.5]\nepss = [0.125]");
        let e = ExperimentConfig::parse(&morrey).unwrap_err();
        assert!(e.to_string().contains("drift.epss[0]"), "{e}");
    }
}
