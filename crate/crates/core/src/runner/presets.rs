//! Built-in experiments.

use std::path::PathBuf;

use super::config::{
    CheckSpec, DriftCase, ExperimentConfig, GridConfig, InitConfig, KbeSection, MollifyLevels, SimSection,
};
use crate::diagnostics::{Term, TestFn, TimeFactor, VectorTestFn};
use crate::drift::DriftParams;
use crate::kbe::GeneratorForm;
use crate::spectral::EvalMode;

/// `(name, what it runs)`.
pub const PRESETS: [(&str, &str); 9] = [
    (
        "brownian_baseline",
        "substrate identities, backward-solver oracles and the zero-drift calibration run",
    ),
    ("ito_trick_scaling", "Ito-trick closed form and horizon scaling for zero drift"),
    ("invariance_shear", "Lebesgue invariance for shear and free-field curl drifts at two step sizes"),
    ("duality_gff", "Monte-Carlo against backward-PDE duality for the mollified free-field curl"),
    ("morrey_demo", "local versus shifted-center functionals of the Morrey drift"),
    ("cutoff_demo", "point-singularity structural table, cutoff invariants and the Morrey functionals"),
    ("resolvent_sweep", "resolvent residuals and weighted smallest singular values"),
    ("particle_pair", "two particles with pairwise drift on the lifted torus"),
    ("variance_gff", "mollified-law convergence and variance growth for the free-field curl"),
];

fn sim(dt: f64, t: f64, n_paths: usize, save_stride: usize) -> SimSection {
    SimSection {
        dt,
        t_final: t,
        n_paths,
        save_stride,
        eval_mode: EvalMode::GridInterp,
        interp_refine: 1,
        init: InitConfig::Uniform,
        write_ensemble: true,
    }
}

fn base(name: &str, grid: GridConfig, drift: DriftParams) -> ExperimentConfig {
    ExperimentConfig {
        experiment: name.to_string(),
        master_seed: 20240611,
        output_dir: PathBuf::from("sdl_output").join(name),
        mollify_n: None,
        grid,
        drift,
        sim: None,
        kbe: None,
        diagnostics: Vec::new(),
    }
}

fn gff() -> DriftParams {
    DriftParams::GffCurl { alpha: 1.5 }
}

/// `α_n = 2^{-n}`, `ε_n = 2^{-3n-1}`, `n = 1..4`.
fn morrey() -> DriftParams {
    DriftParams::Morrey {
        alphas: (1..=4).map(|n| 0.5f64.powi(n)).collect(),
        epss: (1..=4).map(|n| 0.5f64.powi(3 * n + 1)).collect(),
        v: None,
        b: None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut c = match name {
        "brownian_baseline" => {
            let mut c = base(name, GridConfig::new(2, 32), DriftParams::Zero);
            c.sim = Some(sim(1e-4, 0.1, 10_000, 250));
            c.diagnostics = vec![
                CheckSpec::Identities {
                    fields: 100,
                    besov_fields: 200,
                    skew_fields: 50,
                    grids: vec![GridConfig::new(1, 256), GridConfig::new(2, 32), GridConfig::new(3, 16)],
                    skew_cases: super::config::default_skew_cases(),
                },
                CheckSpec::KbeOracles,
                CheckSpec::ItoTrick {
                    p: 2.0,
                    q: f64::INFINITY,
                    test: None,
                    oracle: true,
                    horizons: Vec::new(),
                    calibrate: false,
                },
                CheckSpec::Incompressibility {
                    bins: 16,
                    times: None,
                    dts: Vec::new(),
                    extra_drifts: Vec::new(),
                },
                CheckSpec::EnergyEstimate {
                    bank_size: 20,
                    kmax: 3,
                    terms: 3,
                    calibrate: false,
                },
                CheckSpec::Martingale {
                    test: None,
                    qv_factor: None,
                },
                CheckSpec::Novikov {
                    a: VectorTestFn::constant(vec![0.5, 0.0]),
                    p: 2.0,
                    r: 2.0,
                    calibrate: false,
                },
                CheckSpec::VarianceGrowth,
            ];
            c
        }
        "ito_trick_scaling" => {
            let mut c = base(name, GridConfig::new(1, 16), DriftParams::Zero);
            c.sim = Some(sim(1e-3, 0.5, 20_000, 500));
            c.diagnostics = vec![CheckSpec::ItoTrick {
                p: 2.0,
                q: f64::INFINITY,
                test: Some(TestFn::cosine(1, 0, 1)),
                oracle: true,
                horizons: vec![0.25, 1.0],
                calibrate: false,
            }];
            c
        }
        "invariance_shear" => {
            let mut c = base(
                name,
                GridConfig::new(2, 32),
                DriftParams::Shear {
                    amplitude: 1.0,
                    wavenumber: 1,
                },
            );
            c.sim = Some(sim(1e-3, 1.0, 10_000, 250));
            c.diagnostics = vec![
                CheckSpec::Incompressibility {
                    bins: 16,
                    times: Some(vec![0.25, 0.5, 1.0]),
                    dts: vec![5e-4],
                    extra_drifts: vec![gff()],
                },
                CheckSpec::Martingale {
                    test: None,
                    qv_factor: None,
                },
                CheckSpec::VarianceGrowth,
            ];
            c
        }
        "duality_gff" => {
            let mut c = base(name, GridConfig::new(2, 64), gff());
            c.mollify_n = Some(MollifyLevels::Level(16));
            let mut s = sim(1e-3, 0.5, 20_000, 500);
            s.init = InitConfig::Cosine {
                amplitude: 1.0,
                k: Some(vec![1, 0]),
            };
            c.sim = Some(s);
            c.kbe = Some(KbeSection {
                dt: 2.5e-4,
                t_final: None,
                lambdas: Vec::new(),
                tol: 1e-8,
                form: GeneratorForm::DivergenceOut,
                terminal: Some(TestFn {
                    dim: 2,
                    offset: 0.0,
                    terms: vec![
                        Term {
                            k: vec![1, 0],
                            amplitude: 1.0,
                            phase: 0.0,
                        },
                        Term {
                            k: vec![1, 1],
                            amplitude: 0.5,
                            phase: -std::f64::consts::FRAC_PI_2,
                        },
                    ],
                    time: TimeFactor::Constant,
                }),
                keep_every: 0,
            });
            c.diagnostics = vec![CheckSpec::Duality];
            c
        }
        "morrey_demo" => {
            let mut c = base(name, GridConfig::new(2, 512), morrey());
            c.diagnostics = vec![CheckSpec::Morrey { case: None }];
            c
        }
        "cutoff_demo" => {
            let mut c = base(
                name,
                GridConfig::new(3, 144),
                DriftParams::PointSingularity { alpha: 0.5, b: None },
            );
            c.diagnostics = vec![
                CheckSpec::Structural {
                    eps: vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0],
                },
                CheckSpec::Cutoff {
                    eps: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0],
                    grid: None,
                },
                CheckSpec::Morrey {
                    case: Some(DriftCase {
                        grid: GridConfig::new(2, 512),
                        drift: morrey(),
                    }),
                },
            ];
            c
        }
        "resolvent_sweep" => {
            let mut c = base(name, GridConfig::new(2, 64), gff());
            c.kbe = Some(KbeSection {
                dt: 1e-3,
                t_final: Some(0.1),
                lambdas: (4..=8).map(|e| 2f64.powi(e)).collect(),
                tol: 1e-10,
                form: GeneratorForm::DivergenceOut,
                terminal: None,
                keep_every: 0,
            });
            c.diagnostics = vec![CheckSpec::Resolvent {
                truncations: vec![32, 64],
                sigma_floor: 0.5,
                stability: 0.1,
            }];
            c
        }
        "particle_pair" => {
            let mut c = base(
                name,
                GridConfig::new(1, 32),
                DriftParams::ParticleLift {
                    base: Box::new(DriftParams::Constant { c: vec![1.0] }),
                    particles: 2,
                },
            );
            c.sim = Some(sim(1e-3, 1.0, 4_000, 100));
            c.diagnostics = vec![
                CheckSpec::Incompressibility {
                    bins: 16,
                    times: None,
                    dts: Vec::new(),
                    extra_drifts: Vec::new(),
                },
                CheckSpec::Martingale {
                    test: None,
                    qv_factor: None,
                },
                CheckSpec::VarianceGrowth,
            ];
            c
        }
        "variance_gff" => {
            let mut c = base(name, GridConfig::new(2, 64), gff());
            c.mollify_n = Some(MollifyLevels::Sweep(vec![4, 8, 16, 32]));
            c.sim = Some(sim(1e-3, 1.0, 10_000, 100));
            c.diagnostics = vec![CheckSpec::MollifiedConvergence { n_list: None }, CheckSpec::VarianceGrowth];
            c
        }
        _ => return None,
    };
    c.experiment = name.to_string();
    Some(c)
}
