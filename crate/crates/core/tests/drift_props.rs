mod common;

use common::{grids, grids_2d_3d, rel};
use proptest::prelude::*;
use sdlab::besov::{BesovParams, DyadicPartition};
use sdlab::diagnostics::identities::{random_band_limited, random_real_field, skew_identity, SKEW_TOL};
use sdlab::drift::{
    build_cutoff, check_antisymmetric, divergence, drift_from_A, gradient, helmholtz_decompose, DriftSpec, KSet,
};
use sdlab::kbe::{apply_generator, GeneratorForm};
use sdlab::mollify::{mollify_space, MollifierKernel};
use sdlab::spectral::{Rank, SpectralField, TorusGrid};

/// Zero every coefficient with `|k|_∞ > kmax`.
fn band_limit(mut f: SpectralField, kmax: i64) -> SpectralField {
    let grid = f.grid();
    for c in 0..f.components() {
        for (i, v) in f.component_mut(c).iter_mut().enumerate() {
            if grid.k_at(i).iter().any(|k| k.abs() > kmax) {
                *v = 0.0.into();
            }
        }
    }
    f
}

/// `(M - Mᵀ)/2` for a random matrix field `M`, band-limited to `kmax`.
fn random_potential(grid: TorusGrid, kmax: i64, seed: u64) -> SpectralField {
    let d = grid.dim();
    let m = band_limit(random_real_field(grid, Rank::Matrix, seed), kmax);
    let mut a = m.clone();
    for p in 0..d {
        for q in 0..d {
            let (mp, mq) = (m.component(p * d + q).to_vec(), m.component(q * d + p));
            for ((v, x), y) in a.component_mut(p * d + q).iter_mut().zip(&mp).zip(mq) {
                *v = (x - y) * 0.5;
            }
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn potentials_give_divergence_free_drifts(grid in grids_2d_3d(), seed in any::<u64>()) {
        let a = random_potential(grid, grid.n() as i64 / 2, seed);
        prop_assert!(check_antisymmetric(&a).is_ok());
        let b = drift_from_A(&a).unwrap();
        let div = divergence(&b).unwrap();
        prop_assert!(rel(div.max_abs_coeff(), b.max_abs_coeff()) <= 1e-12);
    }

    #[test]
    fn helmholtz_reconstructs_the_drift(grid in grids(), seed in any::<u64>()) {
        let mut b = random_real_field(grid, Rank::Vector, seed);
        b.zero_nyquist();
        let h = helmholtz_decompose(&b).unwrap();
        let mut rebuilt = gradient(&h.v).unwrap();
        if grid.dim() > 1 {
            rebuilt = rebuilt.add(&drift_from_A(&h.a).unwrap()).unwrap();
        }
        let zero = vec![0i64; grid.dim()];
        let k0 = grid.k_index(&zero).unwrap();
        for (c, m) in h.mean.iter().enumerate() {
            rebuilt.component_mut(c)[k0] += m;
        }
        let err = rebuilt.sub(&b).unwrap().max_abs_coeff();
        prop_assert!(rel(err, b.max_abs_coeff()) <= 1e-12);
    }

    #[test]
    fn generator_forms_agree(grid in grids_2d_3d(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let kmax = grid.n() as i64 / 4;
        let drift = DriftSpec::from_potential(random_potential(grid, kmax, s1), "random").unwrap();
        let u = random_band_limited(grid, kmax, s2);
        let div = apply_generator(&drift, &u, GeneratorForm::DivergenceOut).unwrap();
        let grad = apply_generator(&drift, &u, GeneratorForm::GradientOut).unwrap();
        prop_assert!(rel(div.sub(&grad).unwrap().l2_norm(), div.l2_norm()) <= 1e-8);
    }

    #[test]
    fn antisymmetric_drift_is_skew(grid in grids_2d_3d(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let drift = DriftSpec::from_potential(random_potential(grid, grid.n() as i64 / 2, s1), "random").unwrap();
        let r = skew_identity(&drift, 5, grid.n() as i64 / 4, s2).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
        prop_assert!(r.statistic <= SKEW_TOL);
    }

    #[test]
    fn cutoff_invariants_at_every_node(
        n in prop_oneof![Just(32usize), Just(48), Just(64)],
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        frac in 0.05f64..1.0,
    ) {
        let grid = TorusGrid::new(2, n).unwrap();
        let lo = 4.0 / n as f64;
        let eps = lo + frac * (0.3 - lo);
        let cut = build_cutoff(grid, &KSet::point(vec![x, y]), eps).unwrap();
        prop_assert_eq!(cut.violations, 0);
        prop_assert!(cut.measured_grad <= cut.grad_bound);
        for (g, d) in cut.samples.iter().zip(&cut.distances) {
            if *d > eps {
                prop_assert!((g - 1.0).abs() <= 1e-12);
            } else if *d < eps / 2.0 {
                prop_assert!(g.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mollification_commutes_with_the_curl(grid in grids_2d_3d(), seed in any::<u64>(), n in 1usize..64) {
        let a = random_potential(grid, grid.n() as i64 / 2, seed);
        let lhs = mollify_space(&drift_from_A(&a).unwrap(), n).unwrap();
        let rhs = drift_from_A(&mollify_space(&a, n).unwrap()).unwrap();
        prop_assert!(rel(lhs.sub(&rhs).unwrap().max_abs_coeff(), lhs.max_abs_coeff().max(1e-300)) <= 1e-14);
    }

    #[test]
    fn mollification_never_increases_l2_norms(grid in grids(), seed in any::<u64>(), n in 1usize..64) {
        let b = random_real_field(grid, Rank::Vector, seed);
        let m = mollify_space(&b, n).unwrap();
        let part = DyadicPartition::new(grid);
        let params = BesovParams::new(0.0, 2.0, 1.0).unwrap();
        prop_assert!(m.l2_norm() <= b.l2_norm() * (1.0 + 1e-10));
        prop_assert!(part.besov_norm(&m, params).unwrap() <= part.besov_norm(&b, params).unwrap() * (1.0 + 1e-10));
        prop_assert!(part.b012_norm(&m, 2.0).unwrap() <= part.b012_norm(&b, 2.0).unwrap() * (1.0 + 1e-10));
    }

    #[test]
    fn kernel_is_a_positive_unit_bump(dim in 1usize..=3, r in 0.0f64..1.5) {
        let k = MollifierKernel::for_dim(dim).unwrap();
        prop_assert!(k.density_radial(r) >= 0.0);
        if r >= 1.0 {
            prop_assert_eq!(k.density_radial(r), 0.0);
        }
        prop_assert!((k.hat(0.0) - 1.0).abs() <= 1e-12);
        prop_assert!(k.hat(r * 10.0).abs() <= 1.0 + 1e-12);
    }
}
