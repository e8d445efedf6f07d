//! Exact algebraic identities of the spectral layer, checked on random fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::besov::DyadicPartition;
use crate::drift::{drift_from_A, gradient, helmholtz_decompose, DriftSpec};
use crate::error::Result;
use crate::kbe::{Generator, GeneratorForm};
use crate::report::DiagnosticsReport;
use crate::seeds;
use crate::spectral::{product_padded, Multiplier, Rank, SpectralField, TorusGrid};

/// Spectral identities hold to this relative accuracy.
pub const SPECTRAL_TOL: f64 = 1e-12;
/// Littlewood-Paley identities hold to this relative accuracy.
pub const BESOV_TOL: f64 = 1e-10;
/// `|⟨u, ∇·(A∇u)⟩| ≤ SKEW_TOL ‖∇u‖²`.
pub const SKEW_TOL: f64 = 1e-8;

/// Real field with i.i.d. standard normal collocation samples.
pub fn random_real_field(grid: TorusGrid, rank: Rank, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..rank.components(grid.dim()) * grid.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    SpectralField::forward_transform(grid, rank, &samples).expect("sample buffer matches grid")
}

/// Real scalar field with uniform random coefficients on `|k|_∞ ≤ kmax`.
pub fn random_band_limited(grid: TorusGrid, kmax: i64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid, Rank::Scalar);
    for i in 0..grid.len() {
        let k = grid.k_at(i);
        if k.iter().all(|v| v.abs() <= kmax) && !grid.on_nyquist_plane(i) {
            f.coeffs_mut()[i] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    f.symmetrize();
    f
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

/// Round trip, Parseval and multiplier composition on `count` random fields.
pub fn spectral_identities(grid: TorusGrid, count: usize, seed: u64) -> Result<Vec<DiagnosticsReport>> {
    let d = grid.dim();
    let m1 = Multiplier::derivative(0);
    let m2 = Multiplier::fractional_laplacian(0.75);
    let composed = m1.compose(&m2);
    let (mut round, mut parseval, mut compose): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[i as u64]));
        let samples: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = SpectralField::forward_transform(grid, Rank::Scalar, &samples)?;
        let back = f.inverse_transform();
        let scale = max_abs(samples.iter().map(|v| v.abs()));
        round = round.max(max_abs(back.iter().zip(&samples).map(|(a, b)| (a - b).abs())) / scale);
        let physical = samples.iter().map(|v| v * v).sum::<f64>() / grid.len() as f64;
        parseval = parseval.max((physical - f.l2_norm_sq()).abs() / physical);
        let a = composed.apply(&f)?;
        let b = m1.apply(&m2.apply(&f)?)?;
        let s = b.max_abs_coeff().max(f64::MIN_POSITIVE);
        compose = compose.max(a.sub(&b)?.max_abs_coeff() / s);
    }
    let tag = |r: DiagnosticsReport| r.with("dim", d).with("N", grid.n()).with("fields", count);
    Ok(vec![
        tag(DiagnosticsReport::at_most(format!("spectral.round_trip.d{d}"), round, SPECTRAL_TOL)),
        tag(DiagnosticsReport::at_most(format!("spectral.parseval.d{d}"), parseval, SPECTRAL_TOL)),
        tag(DiagnosticsReport::at_most(format!("spectral.composition.d{d}"), compose, SPECTRAL_TOL)),
    ])
}

fn random_antisymmetric(grid: TorusGrid, seed: u64) -> Result<SpectralField> {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let mut samples = vec![0.0; d * d * len];
    for p in 0..d {
        for q in (p + 1)..d {
            for j in 0..len {
                let v: f64 = StandardNormal.sample(&mut rng);
                samples[(p * d + q) * len + j] = v;
                samples[(q * d + p) * len + j] = -v;
            }
        }
    }
    let mut a = SpectralField::forward_transform(grid, Rank::Matrix, &samples)?;
    a.zero_nyquist();
    Ok(a)
}

/// `b = ∇·A + ∇V + mean` reconstruction and `b(A(b)) = b` on divergence-free mean-zero fields.
pub fn helmholtz_identities(grid: TorusGrid, count: usize, seed: u64) -> Result<Vec<DiagnosticsReport>> {
    let d = grid.dim();
    let (mut recon, mut round): (f64, f64) = (0.0, 0.0);
    for i in 0..count {
        let mut b = random_real_field(grid, Rank::Vector, seeds::derive(seed, &[i as u64, 0]));
        b.zero_nyquist();
        let h = helmholtz_decompose(&b)?;
        let mut rebuilt = drift_from_A(&h.a)?.add(&gradient(&h.v)?)?;
        for (c, m) in h.mean.iter().enumerate() {
            rebuilt.component_mut(c)[0] += Complex64::new(*m, 0.0);
        }
        recon = recon.max(rebuilt.sub(&b)?.max_abs_coeff() / b.max_abs_coeff());
        if d >= 2 {
            let a = random_antisymmetric(grid, seeds::derive(seed, &[i as u64, 1]))?;
            let bdf = drift_from_A(&a)?;
            let again = drift_from_A(&helmholtz_decompose(&bdf)?.a)?;
            let s = bdf.max_abs_coeff().max(f64::MIN_POSITIVE);
            round = round.max(again.sub(&bdf)?.max_abs_coeff() / s);
        }
    }
    let tag = |r: DiagnosticsReport| r.with("dim", d).with("N", grid.n()).with("fields", count);
    Ok(vec![
        tag(DiagnosticsReport::at_most(format!("helmholtz.reconstruction.d{d}"), recon, SPECTRAL_TOL)),
        tag(DiagnosticsReport::at_most(format!("helmholtz.round_trip.d{d}"), round, SPECTRAL_TOL)),
    ])
}

/// Largest `|⟨u, ∇·(A∇u)⟩| / ‖∇u‖²` over `count` random band-limited `u`.
pub fn skew_identity(drift: &DriftSpec, count: usize, kmax: i64, seed: u64) -> Result<DiagnosticsReport> {
    let grid = drift.grid;
    let b1_only = DriftSpec::from_potential(drift.b1.potential()?, drift.label.clone())?;
    let gen = Generator::new(&b1_only, GeneratorForm::DivergenceOut)?;
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let u = random_band_limited(grid, kmax, seeds::derive(seed, &[i as u64]));
        let bu = SpectralField::from_coeffs(grid, Rank::Scalar, gen.apply_drift_part(u.coeffs()), true)?;
        worst = worst.max(u.inner(&bu)?.norm() / u.gradient_norm_sq());
    }
    Ok(DiagnosticsReport::at_most("skew_identity", worst, SKEW_TOL)
        .with("drift", &drift.label)
        .with("N", grid.n())
        .with("fields", count))
}

/// Partition of unity, paraproduct sum and `‖·‖_{L^p} ≤ ‖·‖_{B⁰_{p,1}} ≤ ‖·‖_{B⁰_{p,1,2}}`.
pub fn besov_identities(grid: TorusGrid, count: usize, seed: u64) -> Result<Vec<DiagnosticsReport>> {
    let d = grid.dim();
    let part = DyadicPartition::new(grid);
    let (mut recon, mut para): (f64, f64) = (0.0, 0.0);
    let mut violations = 0usize;
    let mut worst_gap: f64 = f64::INFINITY;
    let ps = [1.0, 2.0, 4.0, f64::INFINITY];
    for i in 0..count {
        let u = random_real_field(grid, Rank::Scalar, seeds::derive(seed, &[i as u64, 0]));
        let mut sum = SpectralField::zeros(grid, Rank::Scalar);
        for b in part.decompose(&u)? {
            sum = sum.add(&b)?;
        }
        recon = recon.max(sum.sub(&u)?.l2_norm() / u.l2_norm());
        let v = random_real_field(grid, Rank::Scalar, seeds::derive(seed, &[i as u64, 1]));
        let exact = product_padded(&u, &v)?;
        let split = part.paraproduct_split(&u, &v)?.sum()?;
        para = para.max(split.sub(&exact)?.l2_norm() / exact.l2_norm());
        let p = ps[i % ps.len()];
        let lp = u.lebesgue_norm(p);
        let b1 = part.besov_norm(&u, crate::besov::BesovParams::new(0.0, p, 1.0)?)?;
        let b12 = part.b012_norm(&u, p)?;
        let slack = 1e-12 * b12;
        if lp > b1 + slack || b1 > b12 + slack {
            violations += 1;
        }
        worst_gap = worst_gap.min((b1 - lp).min(b12 - b1) / b12);
    }
    let tag = |r: DiagnosticsReport| r.with("dim", d).with("N", grid.n()).with("fields", count);
    Ok(vec![
        tag(DiagnosticsReport::at_most(format!("besov.partition_of_unity.d{d}"), recon, BESOV_TOL)),
        tag(DiagnosticsReport::at_most(format!("besov.paraproduct.d{d}"), para, BESOV_TOL)),
        tag(DiagnosticsReport::at_most(format!("besov.embedding_chain.d{d}"), violations as f64, 0.0)
            .with("smallest_relative_gap", worst_gap)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{gff_curl_drift, sample_gff};

    #[test]
    fn identities_hold_on_small_grids() {
        for (d, n) in [(1, 32), (2, 16), (3, 8)] {
            let g = TorusGrid::new(d, n).unwrap();
            let mut all = spectral_identities(g, 5, 1).unwrap();
            all.extend(helmholtz_identities(g, 5, 2).unwrap());
            all.extend(besov_identities(g, 8, 3).unwrap());
            for r in &all {
                assert!(r.passed(), "{r:?}");
            }
        }
    }

    #[test]
    fn skew_identity_for_free_field_curl() {
        let g = TorusGrid::new(2, 32).unwrap();
        let drift = gff_curl_drift(&sample_gff(g, 3).unwrap(), 1.5).unwrap();
        let r = skew_identity(&drift, 5, 8, 4).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
