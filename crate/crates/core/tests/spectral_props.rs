mod common;

use common::{grids, rel};
use num_complex::Complex64;
use proptest::prelude::*;
use sdlab::diagnostics::identities::random_real_field;
use sdlab::spectral::{Multiplier, Rank, SpectralField, ZeroModeRule};

fn ranks() -> impl Strategy<Value = Rank> {
    prop_oneof![Just(Rank::Scalar), Just(Rank::Vector), Just(Rank::Matrix)]
}

#[derive(Debug, Clone)]
enum Symbol {
    Derivative(usize),
    Laplacian,
    Fractional(f64),
    InverseLaplacian,
    Bessel(f64),
    Log(f64),
}

impl Symbol {
    fn build(&self, dim: usize) -> Multiplier {
        match *self {
            Symbol::Derivative(a) => Multiplier::derivative(a % dim),
            Symbol::Laplacian => Multiplier::laplacian(),
            Symbol::Fractional(s) => Multiplier::fractional_laplacian(s),
            Symbol::InverseLaplacian => Multiplier::inverse_laplacian(),
            Symbol::Bessel(b) => Multiplier::bessel_potential(b),
            Symbol::Log(a) => Multiplier::log_regularizer(a),
        }
    }
}

fn symbols() -> impl Strategy<Value = Symbol> {
    prop_oneof![
        (0usize..3).prop_map(Symbol::Derivative),
        Just(Symbol::Laplacian),
        (0.1f64..1.5).prop_map(Symbol::Fractional),
        Just(Symbol::InverseLaplacian),
        (-2.0f64..2.0).prop_map(Symbol::Bessel),
        (0.5f64..2.0).prop_map(Symbol::Log),
    ]
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(grid in grids(), rank in ranks(), seed in any::<u64>()) {
        let f = random_real_field(grid, rank, seed);
        let samples = f.inverse_transform();
        let back = SpectralField::forward_transform(grid, rank, &samples).unwrap();
        let scale = f.max_abs_coeff();
        prop_assert!(rel(max_diff(f.coeffs(), back.coeffs()), scale) <= 1e-12);
        prop_assert_eq!(samples.len(), rank.components(grid.dim()) * grid.len());
    }

    #[test]
    fn parseval(grid in grids(), rank in ranks(), seed in any::<u64>()) {
        let f = random_real_field(grid, rank, seed);
        let samples = f.inverse_transform();
        let physical = samples.iter().map(|v| v * v).sum::<f64>() / grid.len() as f64;
        prop_assert!(rel((f.l2_norm_sq() - physical).abs(), physical) <= 1e-12);
    }

    #[test]
    fn hermitian_symbols_keep_fields_real(grid in grids(), sym in symbols(), seed in any::<u64>()) {
        let m = sym.build(grid.dim());
        let f = random_real_field(grid, Rank::Scalar, seed);
        prop_assert!(m.is_hermitian_on(grid));
        let g = m.apply(&f).unwrap();
        prop_assert!(rel(g.hermitian_defect(), g.max_abs_coeff()) <= 1e-14);
    }

    #[test]
    fn composition_matches_product_symbol(grid in grids(), s1 in symbols(), s2 in symbols(), seed in any::<u64>()) {
        let (m1, m2) = (s1.build(grid.dim()), s2.build(grid.dim()));
        let f = random_real_field(grid, Rank::Scalar, seed);
        let sequential = m1.apply(&m2.apply(&f).unwrap()).unwrap();
        let composed = m1.compose(&m2).apply(&f).unwrap();
        prop_assert!(rel(max_diff(sequential.coeffs(), composed.coeffs()), composed.max_abs_coeff()) <= 1e-14);
    }

    #[test]
    fn annihilate_rule_zeroes_the_mean(grid in grids(), seed in any::<u64>(), c in -5.0f64..5.0) {
        let f = random_real_field(grid, Rank::Scalar, seed).add(&SpectralField::constant(grid, c)).unwrap();
        let m = Multiplier::new("one", ZeroModeRule::Annihilate, |_, _| Complex64::new(1.0, 0.0));
        let g = m.apply(&f).unwrap();
        prop_assert_eq!(g.coeffs()[grid.k_index(&[0, 0, 0][..grid.dim()]).unwrap()], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn grid_wavenumbers_and_points(grid in grids(), flat in any::<prop::sample::Index>()) {
        let i = flat.index(grid.len());
        let n = grid.n() as i64;
        let k = grid.k_at(i);
        let x = grid.point(i);
        let idx = grid.unflatten(i);
        for a in 0..grid.dim() {
            prop_assert!(-n / 2 < k[a] && k[a] <= n / 2);
            prop_assert!((x[a] - idx[a] as f64 / grid.n() as f64).abs() <= 1e-15);
        }
        prop_assert_eq!(grid.k_index(&k[..grid.dim()]), Some(i));
    }
}
