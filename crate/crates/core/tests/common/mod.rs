#![allow(dead_code)]

use proptest::prelude::*;
use sdlab::spectral::TorusGrid;

/// Small grids in every supported dimension.
pub fn grids() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![
        (2usize..=32).prop_map(|h| TorusGrid::new(1, 2 * h).unwrap()),
        (2usize..=8).prop_map(|h| TorusGrid::new(2, 2 * h).unwrap()),
        (2usize..=5).prop_map(|h| TorusGrid::new(3, 2 * h).unwrap()),
    ]
}

/// Grids with at least two dimensions, where antisymmetric potentials are nontrivial.
pub fn grids_2d_3d() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![
        (4usize..=10).prop_map(|h| TorusGrid::new(2, 2 * h).unwrap()),
        (4usize..=5).prop_map(|h| TorusGrid::new(3, 2 * h).unwrap()),
    ]
}

pub fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}
