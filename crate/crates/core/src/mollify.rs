//! Positive bump mollifier `ρ(x) ∝ exp(-1/(1 - |x|²))` on the unit ball and the
//! approximation operators `b ↦ ρⁿ ∗ b` in space and time.
//!
//! Spatial mollification is exact Fourier multiplication by `ρ̂(k/n)`, read
//! from a radial table. The table is built once per dimension from the
//! projection of `ρ` onto a line (so the transform reduces to a 1-d cosine
//! transform) evaluated by a zero-padded FFT, then read with 4-point cubic
//! interpolation.

use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::drift::{B1Rep, DriftSnapshot, DriftSpec, TimeDependence};
use crate::error::{Error, Result};
use crate::spectral::{Multiplier, SpectralField, ZeroModeRule};

/// Sample spacing of the projected profile on `[-1, 1]`.
const PROFILE_STEP: f64 = 1.0 / 2048.0;
/// FFT length; the table spacing is `1 / (FFT_LEN · PROFILE_STEP)`.
const FFT_LEN: usize = 1 << 20;
/// Largest tabulated frequency; `ρ̂` is below 1e-14 beyond it.
const XI_MAX: f64 = 256.0;

/// Unnormalized bump `exp(-1/(1 - r²))`, zero for `r ≥ 1`.
pub fn bump_profile(r: f64) -> f64 {
    let s = 1.0 - r * r;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

#[derive(Debug)]
pub struct MollifierKernel {
    dim: usize,
    mass: f64,
    dxi: f64,
    table: Vec<f64>,
}

static KERNELS: [OnceLock<MollifierKernel>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];

impl MollifierKernel {
    /// Shared kernel for `dim ∈ {1, 2, 3}`.
    pub fn for_dim(dim: usize) -> Result<&'static MollifierKernel> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(format!("mollifier needs dim 1, 2 or 3, got {dim}")));
        }
        Ok(KERNELS[dim - 1].get_or_init(|| Self::build(dim)))
    }

    fn build(dim: usize) -> Self {
        let h = PROFILE_STEP;
        let m = (1.0 / h).round() as usize;
        // line integrand sampled at s_j = j h, j = -m..=m; index j mod FFT_LEN
        let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
        let sample = |s: f64| -> f64 {
            match dim {
                1 => bump_profile(s),
                2 => projected_2d(s),
                // odd function r ρ(|r|); the 3-d transform is -Im(FT)/ξ
                _ => s * bump_profile(s.abs()),
            }
        };
        for j in 0..=m {
            let s = j as f64 * h;
            let v = sample(s);
            buf[j] = Complex64::new(v * h, 0.0);
            if j > 0 {
                let vm = sample(-s);
                buf[FFT_LEN - j] = Complex64::new(vm * h, 0.0);
            }
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(FFT_LEN).process(&mut buf);
        let dxi = 1.0 / (FFT_LEN as f64 * h);
        let count = (XI_MAX / dxi).round() as usize + 1;
        let mut raw: Vec<f64> = Vec::with_capacity(count);
        let mass = match dim {
            3 => {
                // 4π ∫₀¹ ρ r² dr = 2π ∫_{-1}^{1} ρ(|r|) r² dr
                let s: f64 = (0..=2 * m)
                    .map(|j| {
                        let r = (j as f64 - m as f64) * h;
                        bump_profile(r.abs()) * r * r
                    })
                    .sum();
                2.0 * std::f64::consts::PI * s * h
            }
            _ => buf[0].re,
        };
        for (i, v) in buf.iter().take(count).enumerate() {
            let xi = i as f64 * dxi;
            let val = match dim {
                3 => {
                    if i == 0 {
                        mass
                    } else {
                        -v.im / xi
                    }
                }
                _ => v.re,
            };
            raw.push(val / mass);
        }
        Self {
            dim,
            mass,
            dxi,
            table: raw,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∫_{B_1} exp(-1/(1 - |x|²)) dx`.
    pub fn unnormalized_mass(&self) -> f64 {
        self.mass
    }

    /// Unit-mass density `ρ(x)` at radius `r = |x|`.
    pub fn density_radial(&self, r: f64) -> f64 {
        bump_profile(r) / self.mass
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.density_radial(r)
    }

    /// `n^d ρ(n x)`.
    pub fn scaled_density(&self, x: &[f64], n: f64) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        n.powi(self.dim as i32) * self.density_radial(n * r)
    }

    /// `ρ̂(ξ)` at frequency radius `|ξ|`.
    pub fn hat(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        let pos = xi / self.dxi;
        let last = self.table.len() - 1;
        if pos >= (last - 2) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        // 4-point Lagrange through i-1..i+2; the table is even in ξ
        let at = |j: isize| -> f64 { self.table[j.unsigned_abs()] };
        let j = i as isize;
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }

    /// Multiplier `ρ̂(k / n)`.
    pub fn multiplier(&'static self, n: usize) -> Multiplier {
        let nf = n as f64;
        Multiplier::new(format!("mollify_{n}"), ZeroModeRule::Keep, move |k, _| {
            let r = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            Complex64::new(self.hat(r / nf), 0.0)
        })
    }
}

/// Line integral of the 2-d bump across the chord at offset `s`.
fn projected_2d(s: f64) -> f64 {
    let c2 = 1.0 - s * s;
    if c2 <= 0.0 {
        return 0.0;
    }
    let c = c2.sqrt();
    // y = c t; the integrand is a bump in t, so the trapezoid rule converges fast
    const M: usize = 256;
    let dt = 1.0 / M as f64;
    let mut acc = 0.0;
    for i in 1..M {
        let t = i as f64 * dt;
        let y = c * t;
        acc += 2.0 * bump_profile((s * s + y * y).sqrt());
    }
    acc += bump_profile(s.abs());
    acc * dt * c
}

/// `ρⁿ ∗ f` for every component of `f`.
pub fn mollify_space(f: &SpectralField, n: usize) -> Result<SpectralField> {
    if n == 0 {
        return Err(Error::Validation("mollification level must be >= 1".into()));
    }
    let kernel = MollifierKernel::for_dim(f.grid().dim())?;
    kernel.multiplier(n).apply(f)
}

fn mollify_rep(rep: &B1Rep, n: usize) -> Result<B1Rep> {
    Ok(match rep {
        B1Rep::Potential(a) => B1Rep::Potential(mollify_space(a, n)?),
        B1Rep::Raw(b) => B1Rep::Raw(mollify_space(b, n)?),
    })
}

/// Spatial mollification of every part of a drift; the mean is a constant and stays put.
pub fn mollify_drift(drift: &DriftSpec, n: usize) -> Result<DriftSpec> {
    let mut out = drift.clone();
    out.b1 = mollify_rep(&drift.b1, n)?;
    out.b2 = mollify_space(&drift.b2, n)?;
    if let TimeDependence::Sampled(snaps) = &drift.time_dep {
        let mut next = Vec::with_capacity(snaps.len());
        for s in snaps {
            next.push(DriftSnapshot {
                t: s.t,
                b1: mollify_rep(&s.b1, n)?,
                b2: mollify_space(&s.b2, n)?,
            });
        }
        out.time_dep = TimeDependence::Sampled(next);
    }
    out.label = format!("{}|n={n}", drift.label);
    Ok(out)
}

/// Discrete weights `w_m ∝ ρ₁(n m dt)` for `|m| dt < 1/n`, normalized to unit sum.
pub fn time_kernel_weights(dt: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(dt > 0.0) {
        return Err(Error::Validation("time mollification needs n >= 1 and dt > 0".into()));
    }
    if dt > 1.0 / (2.0 * n as f64) {
        return Err(Error::Resolution(format!(
            "time step {dt} is coarser than 1/(2n) = {}",
            1.0 / (2.0 * n as f64)
        )));
    }
    let half = ((1.0 / n as f64) / dt).ceil() as i64;
    let raw: Vec<f64> = (-half..=half)
        .map(|m| bump_profile(n as f64 * m as f64 * dt))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Time mollification of a sampled drift, zero-extended outside the sampled window,
/// composed with spatial mollification at the same level.
pub fn mollify_time(drift: &DriftSpec, n: usize) -> Result<DriftSpec> {
    let snaps = match &drift.time_dep {
        TimeDependence::Sampled(s) if s.len() >= 2 => s,
        TimeDependence::Sampled(_) => {
            return Err(Error::Validation("time mollification needs at least two snapshots".into()))
        }
        TimeDependence::Static => {
            return Err(Error::Validation("time mollification needs a sampled drift".into()))
        }
    };
    let dt = snaps[1].t - snaps[0].t;
    for w in snaps.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::Validation("time samples must be uniform".into()));
        }
    }
    let weights = time_kernel_weights(dt, n)?;
    let half = (weights.len() / 2) as i64;
    let count = snaps.len() as i64;
    let grid = drift.grid;
    let mut out_snaps = Vec::with_capacity(snaps.len());
    for i in 0..count {
        let mut b1: Option<B1Rep> = None;
        let mut b2 = SpectralField::zeros(grid, drift.b2.rank());
        for (m, w) in (-half..=half).zip(&weights) {
            let j = i - m;
            if j < 0 || j >= count {
                continue;
            }
            let s = &snaps[j as usize];
            b1 = Some(match b1 {
                None => s.b1.scaled(*w),
                Some(acc) => acc.add_scaled(&s.b1, *w)?,
            });
            b2 = b2.add(&s.b2.scale(*w))?;
        }
        let b1 = match b1 {
            Some(b) => b,
            None => snaps[i as usize].b1.scaled(0.0),
        };
        out_snaps.push(DriftSnapshot {
            t: snaps[i as usize].t,
            b1: mollify_rep(&b1, n)?,
            b2: mollify_space(&b2, n)?,
        });
    }
    let mut out = drift.clone();
    out.b1 = out_snaps[0].b1.clone();
    out.b2 = out_snaps[0].b2.clone();
    out.time_dep = TimeDependence::Sampled(out_snaps);
    out.label = format!("{}|nt={n}", drift.label);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Rank, TorusGrid, TWO_PI};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn density_has_unit_mass() {
        // radial Simpson quadrature against the surface measure of the sphere
        let surface = [2.0, TWO_PI, 2.0 * TWO_PI];
        for dim in 1..=3 {
            let k = MollifierKernel::for_dim(dim).unwrap();
            let mass = simpson(
                |r| surface[dim - 1] * r.powi(dim as i32 - 1) * k.density_radial(r),
                0.0,
                1.0,
                200_000,
            );
            assert!((mass - 1.0).abs() < 1e-10, "dim {dim}: {mass}");
            assert!((k.hat(0.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_matches_direct_quadrature() {
        // d = 1: ρ̂(ξ) = ∫ ρ(x) cos(2πξx) dx; d = 3: (2/ξ) ∫₀¹ ρ(r) r sin(2πξr) dr
        let k1 = MollifierKernel::for_dim(1).unwrap();
        let k3 = MollifierKernel::for_dim(3).unwrap();
        for &xi in &[0.013, 0.5, 1.7, 3.3, 7.25] {
            let d1 = simpson(|x| k1.density_radial(x.abs()) * (TWO_PI * xi * x).cos(), -1.0, 1.0, 20_000);
            assert!((k1.hat(xi) - d1).abs() < 1e-9, "xi {xi}");
            let d3 = 2.0 / xi * simpson(|r| k3.density_radial(r) * r * (TWO_PI * xi * r).sin(), 0.0, 1.0, 20_000);
            assert!((k3.hat(xi) - d3).abs() < 1e-9, "xi {xi}");
        }
    }

    #[test]
    fn hat_2d_matches_bessel_quadrature() {
        // ρ̂(ξ) = 2π ∫₀¹ ρ(r) J₀(2πξr) r dr, J₀ by its integral representation
        let k2 = MollifierKernel::for_dim(2).unwrap();
        let j0 = |z: f64| simpson(|t| (z * t.sin()).cos(), 0.0, std::f64::consts::PI, 400) / std::f64::consts::PI;
        for &xi in &[0.25, 1.1, 2.6] {
            let direct = TWO_PI * simpson(|r| k2.density_radial(r) * j0(TWO_PI * xi * r) * r, 0.0, 1.0, 4000);
            assert!((k2.hat(xi) - direct).abs() < 1e-9, "xi {xi}: {} vs {direct}", k2.hat(xi));
        }
    }

    #[test]
    fn hat_vanishes_past_table() {
        for dim in 1..=3 {
            let k = MollifierKernel::for_dim(dim).unwrap();
            assert!(k.hat(250.0).abs() < 1e-12);
            assert_eq!(k.hat(1e6), 0.0);
        }
    }

    #[test]
    fn constant_field_is_fixed() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = SpectralField::constant(g, 1.75);
        for n in [1, 2, 7, 64] {
            assert_eq!(mollify_space(&c, n).unwrap().coeffs(), c.coeffs());
        }
        assert!(mollify_space(&c, 0).is_err());
    }

    #[test]
    fn positivity_against_direct_convolution() {
        let g = TorusGrid::new(2, 16).unwrap();
        let kernel = MollifierKernel::for_dim(2).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| ((i * 7919 % 13) as f64 / 13.0).powi(3)).collect();
        let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        let n = 2;
        let out = mollify_space(&f, n).unwrap().inverse_transform();
        let h = g.spacing();
        for (i, &v) in out.iter().enumerate() {
            assert!(v >= -1e-10);
            let x = g.point(i);
            let mut direct = 0.0;
            for (j, &s) in samples.iter().enumerate() {
                let y = g.point(j);
                let mut z = [0.0; 2];
                for a in 0..2 {
                    let d = x[a] - y[a];
                    z[a] = d - d.round();
                }
                direct += s * kernel.scaled_density(&z, n as f64) * h * h;
            }
            assert!((v - direct).abs() < 2e-3, "{v} vs {direct}");
        }
    }

    #[test]
    fn mollification_error_decreases_in_n() {
        let g = TorusGrid::new(2, 32).unwrap();
        let samples: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                (TWO_PI * 3.0 * x[0]).sin() + (TWO_PI * (5.0 * x[0] - 2.0 * x[1])).cos()
            })
            .collect();
        let f = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        let errs: Vec<f64> = [4, 8, 16, 32, 64]
            .iter()
            .map(|&n| mollify_space(&f, n).unwrap().sub(&f).unwrap().l2_norm())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
        // Young's inequality with a unit-mass positive kernel
        for n in [1, 3, 9] {
            assert!(mollify_space(&f, n).unwrap().l2_norm() <= f.l2_norm() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn time_weights_resolution_guard() {
        assert!(matches!(time_kernel_weights(0.3, 2), Err(Error::Resolution(_))));
        let w = time_kernel_weights(0.01, 4).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(w.len() % 2, 1);
    }
}
