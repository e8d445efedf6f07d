//! Spectral and Monte-Carlo laboratory for SDEs `dX = b(t, X) dt + √2 dB` on the
//! torus with divergence-free distributional drift.
//!
//! The crate is layered: [`spectral`] carries periodic fields and Fourier
//! multipliers, [`besov`] adds Littlewood-Paley blocks and Besov-type norms,
//! [`drift`] builds and decomposes drifts, [`mollify`] regularizes them,
//! [`sde`] simulates ensembles, [`kbe`] solves the backward Kolmogorov and
//! resolvent equations, [`diagnostics`] turns both into statistical
//! witnesses, and [`runner`] wires everything into configurable experiments.

pub mod besov;
pub mod diagnostics;
pub mod drift;
pub mod error;
pub mod kbe;
pub mod mollify;
pub mod report;
pub mod runner;
pub mod sde;
pub mod seeds;
pub mod spectral;

pub use error::{Error, Result};
