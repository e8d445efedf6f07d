use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seeds;
use crate::spectral::{GridSampler, Rank, SpectralField};

/// Largest `max/mean` density ratio accepted by rejection sampling.
pub const MAX_DENSITY_RATIO: f64 = 1e6;

#[derive(Debug, Clone)]
pub enum InitialLaw {
    Uniform,
    /// Density on the grid; need not be normalized.
    Density(SpectralField),
    /// Every path starts at the same point.
    Point(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct InitialSample {
    /// `[path][axis]`.
    pub positions: Vec<f64>,
    /// Negative density mass removed before sampling, relative to the total.
    pub clipped_mass: f64,
    /// Accepted / proposed.
    pub acceptance: f64,
}

/// Draw `n_paths` starting points; path `p` uses its own stream derived from `(seed, p)`.
///
/// Densities are clipped at zero, interpolated multilinearly between
/// collocation nodes, and sampled by rejection against the grid maximum.
pub fn sample_initial(law: &InitialLaw, dim: usize, n_paths: usize, seed: u64) -> Result<InitialSample> {
    let rng_for = |p: usize| ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[p as u64]));
    match law {
        InitialLaw::Uniform => {
            let positions = (0..n_paths)
                .into_par_iter()
                .flat_map_iter(|p| {
                    let mut rng = rng_for(p);
                    (0..dim).map(move |_| rng.random::<f64>()).collect::<Vec<_>>()
                })
                .collect();
            Ok(InitialSample {
                positions,
                clipped_mass: 0.0,
                acceptance: 1.0,
            })
        }
        InitialLaw::Point(x) => {
            if x.len() != dim {
                return Err(Error::Dimension(format!("start point has {} coordinates, expected {dim}", x.len())));
            }
            let x: Vec<f64> = x.iter().map(|v| super::wrap(*v)).collect();
            Ok(InitialSample {
                positions: x.iter().cloned().cycle().take(n_paths * dim).collect(),
                clipped_mass: 0.0,
                acceptance: 1.0,
            })
        }
        InitialLaw::Density(f) => {
            if f.rank() != Rank::Scalar || f.grid().dim() != dim {
                return Err(Error::Dimension("initial density must be a scalar field of the drift dimension".into()));
            }
            let raw = f.inverse_transform();
            let floor = -1e-8 * raw.iter().cloned().fold(0.0, f64::max).max(1.0);
            if raw.iter().any(|v| *v < floor) {
                return Err(Error::Validation("initial density is negative beyond ringing tolerance".into()));
            }
            let negative: f64 = raw.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
            let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Validation("initial density has no mass".into()));
            }
            let mean = total / clipped.len() as f64;
            let max = clipped.iter().cloned().fold(0.0, f64::max);
            if max / mean > MAX_DENSITY_RATIO {
                return Err(Error::Efficiency(format!(
                    "density max/mean ratio {:.3e} exceeds {MAX_DENSITY_RATIO:e}",
                    max / mean
                )));
            }
            let sampler = GridSampler::from_samples(f.grid(), Rank::Scalar, clipped)?;
            let per_path: Vec<(Vec<f64>, u64)> = (0..n_paths)
                .into_par_iter()
                .map(|p| {
                    let mut rng = rng_for(p);
                    let mut x = vec![0.0; dim];
                    let mut v = [0.0];
                    let mut tries = 0u64;
                    loop {
                        tries += 1;
                        x.iter_mut().for_each(|c| *c = rng.random::<f64>());
                        sampler.eval(&x, &mut v);
                        if rng.random::<f64>() * max < v[0] {
                            return (x, tries);
                        }
                    }
                })
                .collect();
            let proposals: u64 = per_path.iter().map(|p| p.1).sum();
            Ok(InitialSample {
                positions: per_path.into_iter().flat_map(|p| p.0).collect(),
                clipped_mass: negative / (total + negative),
                acceptance: n_paths as f64 / proposals.max(1) as f64,
            })
        }
    }
}
