//! Named drift constructors addressable from configuration files.

use serde::{Deserialize, Serialize};

use super::{
    constant_drift, default_antisymmetric, gff_curl_drift, morrey_counterexample_A, particle_lift,
    point_singularity_A, sample_gff, shear_drift, DriftSpec, KSet, LiftedDrift, DEFAULT_LIFT_BUDGET,
};
use crate::error::{Error, Result};
use crate::spectral::TorusGrid;

fn default_amplitude() -> f64 {
    1.0
}

fn default_wavenumber() -> i64 {
    1
}

fn default_alpha_gff() -> f64 {
    1.5
}

fn default_particles() -> usize {
    2
}

/// Drift library entry, tagged by `name` with the remaining keys as parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftParams {
    Zero,
    Constant {
        c: Vec<f64>,
    },
    /// `b = (U sin(2π m x₂), 0, …)`.
    Shear {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: i64,
    },
    GffCurl {
        #[serde(default = "default_alpha_gff")]
        alpha: f64,
    },
    PointSingularity {
        alpha: f64,
        /// Row-major antisymmetric matrix; defaults to [`default_antisymmetric`].
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    Morrey {
        alphas: Vec<f64>,
        epss: Vec<f64>,
        #[serde(default)]
        v: Option<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    ParticleLift {
        base: Box<DriftParams>,
        #[serde(default = "default_particles")]
        particles: usize,
    },
}

impl DriftParams {
    pub fn name(&self) -> &'static str {
        match self {
            DriftParams::Zero => "zero",
            DriftParams::Constant { .. } => "constant",
            DriftParams::Shear { .. } => "shear",
            DriftParams::GffCurl { .. } => "gff_curl",
            DriftParams::PointSingularity { .. } => "point_singularity",
            DriftParams::Morrey { .. } => "morrey",
            DriftParams::ParticleLift { .. } => "particle_lift",
        }
    }

    pub const NAMES: [&'static str; 7] = [
        "zero",
        "constant",
        "shear",
        "gff_curl",
        "point_singularity",
        "morrey",
        "particle_lift",
    ];

    /// Dimension of the torus the built drift lives on, given the base grid dimension.
    pub fn output_dim(&self, base_dim: usize) -> usize {
        match self {
            DriftParams::ParticleLift { base, particles } => base.output_dim(base_dim) * particles,
            _ => base_dim,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltDrift {
    pub spec: DriftSpec,
    /// Singular set for fields that come with one.
    pub k: Option<KSet>,
    pub warnings: Vec<String>,
    /// Fraction of `L²` mass above `|k| > N/4`.
    pub high_mode_fraction: f64,
}

/// Build a library drift on `grid`; `seed` feeds the random fields.
pub fn build_drift(params: &DriftParams, grid: TorusGrid, seed: u64) -> Result<BuiltDrift> {
    let plain = |spec: DriftSpec| -> Result<BuiltDrift> {
        let high_mode_fraction = spec.total_field()?.high_mode_fraction();
        Ok(BuiltDrift {
            spec,
            k: None,
            warnings: Vec::new(),
            high_mode_fraction,
        })
    };
    match params {
        DriftParams::Zero => plain(DriftSpec::zero(grid)),
        DriftParams::Constant { c } => plain(constant_drift(grid, c.clone())?),
        DriftParams::Shear { amplitude, wavenumber } => plain(shear_drift(grid, *amplitude, *wavenumber)?),
        DriftParams::GffCurl { alpha } => {
            let xi = sample_gff(grid, seed)?;
            plain(gff_curl_drift(&xi, *alpha)?)
        }
        DriftParams::PointSingularity { alpha, b } => {
            let b = b.clone().unwrap_or_else(|| default_antisymmetric(grid.dim()));
            let f = point_singularity_A(grid, *alpha, &b)?;
            let spec = DriftSpec::from_potential(f.a, format!("point_singularity(alpha={alpha})"))?;
            Ok(BuiltDrift {
                spec,
                k: Some(f.k),
                warnings: f.warnings,
                high_mode_fraction: f.high_mode_fraction,
            })
        }
        DriftParams::Morrey { alphas, epss, v, b } => {
            let d = grid.dim();
            let v = v.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; d];
                e[0] = 1.0;
                e
            });
            let b = b.clone().unwrap_or_else(|| default_antisymmetric(d));
            let f = morrey_counterexample_A(grid, alphas, epss, &v, &b)?;
            let mut warnings = Vec::new();
            if f.dropped > 0 {
                warnings.push(format!("{} unresolvable bumps dropped", f.dropped));
            }
            let high_mode_fraction = f.a.high_mode_fraction();
            let spec = DriftSpec::from_potential(f.a, "morrey")?;
            Ok(BuiltDrift {
                spec,
                k: Some(f.k),
                warnings,
                high_mode_fraction,
            })
        }
        DriftParams::ParticleLift { base, particles } => {
            let base = build_drift(base, grid, seed)?;
            match particle_lift(&base.spec, *particles, DEFAULT_LIFT_BUDGET)? {
                LiftedDrift::Grid(spec) => plain(spec),
                LiftedDrift::Sparse { .. } => Err(Error::Unsupported(format!(
                    "lifted drift lives on a {}-dimensional torus; only direct-sum evaluation is available, use particle_lift directly",
                    grid.dim() * particles
                ))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse_from_toml() {
        let p: DriftParams = toml::from_str("name = \"shear\"\namplitude = 2.0\n").unwrap();
        assert_eq!(p, DriftParams::Shear { amplitude: 2.0, wavenumber: 1 });
        let p: DriftParams =
            toml::from_str("name = \"particle_lift\"\nparticles = 2\n[base]\nname = \"zero\"\n").unwrap();
        assert_eq!(p.output_dim(1), 2);
        assert!(toml::from_str::<DriftParams>("name = \"vortex\"\n").is_err());
        assert!(toml::from_str::<DriftParams>("name = \"shear\"\nwidth = 1.0\n").is_err());
    }

    #[test]
    fn every_name_builds() {
        let g2 = TorusGrid::new(2, 16).unwrap();
        let g1 = TorusGrid::new(1, 16).unwrap();
        let cases = [
            (DriftParams::Zero, g2),
            (DriftParams::Constant { c: vec![1.0, 0.5] }, g2),
            (DriftParams::Shear { amplitude: 1.0, wavenumber: 1 }, g2),
            (DriftParams::GffCurl { alpha: 1.5 }, g2),
            (DriftParams::PointSingularity { alpha: 0.5, b: None }, g2),
            (
                DriftParams::Morrey {
                    alphas: vec![0.5],
                    epss: vec![1.0 / 16.0],
                    v: None,
                    b: None,
                },
                g2,
            ),
            (
                DriftParams::ParticleLift {
                    base: Box::new(DriftParams::Constant { c: vec![1.0] }),
                    particles: 2,
                },
                g1,
            ),
        ];
        for (p, g) in cases {
            let built = build_drift(&p, g, 7).unwrap();
            assert_eq!(built.spec.grid.dim(), p.output_dim(g.dim()), "{}", p.name());
            assert!(built.spec.total_field().unwrap().is_finite());
        }
    }
}
