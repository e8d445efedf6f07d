//! Pairwise-interaction drift of `N` particles on `𝕋^{dN}`:
//! particle `k` feels `Σ_{l≠k} b(x^k − x^l)`.
//!
//! A base mode `b̂(q) e^{2πiq·z}` evaluated at `z = x^k − x^l` is the lifted
//! mode with wavevector `q` in block `k` and `−q` in block `l`, so the lift is
//! pure coefficient bookkeeping. On `dN ≤ 3` the result lives on a collocation
//! grid; otherwise it is a sparse mode list evaluated by direct summation.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{helmholtz_decompose, B1Rep, DriftSpec};
use crate::error::{Error, Result};
use crate::spectral::{Rank, SpectralField, TorusGrid, TWO_PI};

/// Field stored as `wavevector → component coefficients`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseField {
    pub dim: usize,
    pub components: usize,
    pub modes: BTreeMap<Vec<i64>, Vec<Complex64>>,
}

impl SparseField {
    pub fn new(dim: usize, components: usize) -> Self {
        Self {
            dim,
            components,
            modes: BTreeMap::new(),
        }
    }

    fn add_mode(&mut self, k: Vec<i64>, c: usize, v: Complex64) {
        let n = self.components;
        self.modes.entry(k).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])[c] += v;
    }

    /// Real part of the Fourier sum at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components];
        for (k, coeffs) in &self.modes {
            let th: f64 = TWO_PI * k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>();
            let ph = Complex64::new(th.cos(), th.sin());
            for (o, c) in out.iter_mut().zip(coeffs) {
                *o += (c * ph).re;
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.modes
            .values()
            .flat_map(|v| v.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    /// Divergence of matrix columns `b^i = Σ_j ∂_j A_{ji}` for a `D × D` sparse matrix field.
    pub fn column_divergence(&self) -> Result<SparseField> {
        let dd = self.dim;
        if self.components != dd * dd {
            return Err(Error::Dimension("column divergence needs a matrix field".into()));
        }
        let mut out = SparseField::new(dd, dd);
        for (k, coeffs) in &self.modes {
            for i in 0..dd {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..dd {
                    acc += Complex64::new(0.0, TWO_PI * k[j] as f64) * coeffs[j * dd + i];
                }
                if acc.norm() > 0.0 {
                    out.add_mode(k.clone(), i, acc);
                }
            }
        }
        Ok(out)
    }

    /// Largest `|A_{ij} + A_{ji}|` over modes.
    pub fn antisymmetry_defect(&self) -> f64 {
        let dd = self.dim;
        let mut worst: f64 = 0.0;
        for coeffs in self.modes.values() {
            for i in 0..dd {
                for j in 0..dd {
                    worst = worst.max((coeffs[i * dd + j] + coeffs[j * dd + i]).norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub enum LiftedDrift {
    Grid(DriftSpec),
    Sparse {
        drift: SparseField,
        /// Lifted potential `A^N`, present when the base carries an even potential.
        potential: Option<SparseField>,
    },
}

fn block_vector(d: usize, particles: usize, k: usize, l: usize, q: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; d * particles];
    for a in 0..d {
        out[k * d + a] = q[a];
        out[l * d + a] -= q[a];
    }
    out
}

fn is_even(a: &SpectralField) -> bool {
    let grid = a.grid();
    let tol = 1e-12 * a.max_abs_coeff().max(f64::MIN_POSITIVE);
    (0..a.components()).all(|c| {
        let comp = a.component(c);
        (0..grid.len()).all(|i| (comp[i] - comp[grid.conjugate_index(i)]).norm() <= tol)
    })
}

/// Lift a static drift to `particles ∈ {2, 3}` interacting particles.
///
/// `budget` caps the number of lifted modes in the sparse representation.
pub fn particle_lift(base: &DriftSpec, particles: usize, budget: usize) -> Result<LiftedDrift> {
    if !(2..=3).contains(&particles) {
        return Err(Error::Validation(format!("particle count must be 2 or 3, got {particles}")));
    }
    if !base.is_static() {
        return Err(Error::Unsupported("particle lift of sampled drifts".into()));
    }
    let grid = base.grid;
    let d = grid.dim();
    let total = base.total_field()?;
    let dd = d * particles;
    let nonzero: Vec<usize> = (0..grid.len())
        .filter(|&i| !grid.on_nyquist_plane(i) && (0..d).any(|c| total.component(c)[i].norm() > 0.0))
        .collect();
    let lifted_modes = nonzero.len() * particles * (particles - 1);
    if lifted_modes > budget {
        return Err(Error::Budget(format!(
            "particle lift needs {lifted_modes} modes, budget is {budget}"
        )));
    }
    let mut drift = SparseField::new(dd, dd);
    for &i in &nonzero {
        let q = grid.k_at(i);
        for k in 0..particles {
            for l in 0..particles {
                if k == l {
                    continue;
                }
                let kv = block_vector(d, particles, k, l, &q[..d]);
                for c in 0..d {
                    let v = total.component(c)[i];
                    if v.norm() > 0.0 {
                        drift.add_mode(kv.clone(), k * d + c, v);
                    }
                }
            }
        }
    }
    if dd <= 3 {
        let lgrid = TorusGrid::new(dd, grid.n())?;
        let mut field = SpectralField::zeros(lgrid, Rank::Vector);
        for (kv, coeffs) in &drift.modes {
            let idx = lgrid
                .k_index(kv)
                .ok_or_else(|| Error::Resolution(format!("lifted mode {kv:?} not representable")))?;
            for (c, v) in coeffs.iter().enumerate() {
                field.component_mut(c)[idx] += v;
            }
        }
        field.set_real_flag(total.is_real());
        let h = helmholtz_decompose(&field)?;
        let b2 = crate::drift::gradient(&h.v)?;
        let mut spec = DriftSpec::from_potential(h.a, format!("particle_lift({},N={particles})", base.label))?
            .with_b2(b2)?
            .with_mean(h.mean)?;
        spec.time_dep = super::TimeDependence::Static;
        return Ok(LiftedDrift::Grid(spec));
    }
    // A^N_{(k,i),(l,j)}(x) = -A_{ij}(x^l - x^k) for even A; the sign makes b(A^N) the lifted drift
    let potential = match &base.b1 {
        B1Rep::Potential(a) if is_even(a) && base.b2_is_zero() && base.mean.iter().all(|m| *m == 0.0) => {
            let mut pot = SparseField::new(dd, dd * dd);
            for i in 0..grid.len() {
                if grid.on_nyquist_plane(i) {
                    continue;
                }
                let q = grid.k_at(i);
                for k in 0..particles {
                    for l in 0..particles {
                        if k == l {
                            continue;
                        }
                        // A(x^l - x^k): wavevector q in block l, -q in block k
                        let kv = block_vector(d, particles, l, k, &q[..d]);
                        for p in 0..d {
                            for r in 0..d {
                                let v = a.component(p * d + r)[i];
                                if v.norm() > 0.0 {
                                    pot.add_mode(kv.clone(), (k * d + p) * dd + (l * d + r), -v);
                                }
                            }
                        }
                    }
                }
            }
            Some(pot)
        }
        _ => None,
    };
    Ok(LiftedDrift::Sparse { drift, potential })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{shear_drift, DEFAULT_LIFT_BUDGET};

    #[test]
    fn zero_base_lifts_to_zero() {
        let g = TorusGrid::new(1, 8).unwrap();
        match particle_lift(&DriftSpec::zero(g), 2, DEFAULT_LIFT_BUDGET).unwrap() {
            LiftedDrift::Grid(s) => assert_eq!(s.total_field().unwrap().max_abs_coeff(), 0.0),
            _ => panic!("expected grid lift"),
        }
    }

    #[test]
    fn sine_pair_matches_hand_assembly() {
        // b(z) = sin(2πz) = (e^{2πiz} − e^{−2πiz}) / 2i, lifted: (b(x₁−x₂), b(x₂−x₁))
        let g = TorusGrid::new(1, 8).unwrap();
        let mut b = SpectralField::zeros(g, Rank::Vector);
        b.component_mut(0)[1] = Complex64::new(0.0, -0.5);
        b.component_mut(0)[7] = Complex64::new(0.0, 0.5);
        let base = DriftSpec::zero(g).with_b2(b).unwrap();
        let lifted = match particle_lift(&base, 2, DEFAULT_LIFT_BUDGET).unwrap() {
            LiftedDrift::Grid(s) => s.total_field().unwrap(),
            _ => panic!("expected grid lift"),
        };
        let lg = lifted.grid();
        let mut hand = SpectralField::zeros(lg, Rank::Vector);
        let i_pm = lg.k_index(&[1, -1]).unwrap();
        let i_mp = lg.k_index(&[-1, 1]).unwrap();
        hand.component_mut(0)[i_pm] = Complex64::new(0.0, -0.5);
        hand.component_mut(0)[i_mp] = Complex64::new(0.0, 0.5);
        hand.component_mut(1)[i_mp] = Complex64::new(0.0, -0.5);
        hand.component_mut(1)[i_pm] = Complex64::new(0.0, 0.5);
        assert!(lifted.sub(&hand).unwrap().max_abs_coeff() < 1e-15);
        let x = [0.31, 0.07];
        let v = lifted.evaluate_at(&x, crate::spectral::EvalMode::DirectSum).unwrap();
        assert!((v[0] - (TWO_PI * (x[0] - x[1])).sin()).abs() < 1e-13);
        assert!((v[1] - (TWO_PI * (x[1] - x[0])).sin()).abs() < 1e-13);
    }

    #[test]
    fn even_potential_lifts_antisymmetric_and_consistent() {
        let g = TorusGrid::new(2, 8).unwrap();
        let base = shear_drift(g, 1.0, 1).unwrap();
        match particle_lift(&base, 2, DEFAULT_LIFT_BUDGET).unwrap() {
            LiftedDrift::Sparse { drift, potential } => {
                let pot = potential.expect("shear potential is even");
                assert_eq!(pot.antisymmetry_defect(), 0.0);
                let from_pot = pot.column_divergence().unwrap();
                for x in [[0.1, 0.2, 0.7, 0.4], [0.9, 0.33, 0.5, 0.05]] {
                    let a = drift.eval(&x);
                    let b = from_pot.eval(&x);
                    for (u, v) in a.iter().zip(&b) {
                        assert!((u - v).abs() < 1e-13);
                    }
                    // particle 1 feels sin(2π(x₂¹ − x₂²)) in its first coordinate
                    assert!((a[0] - (TWO_PI * (x[1] - x[3])).sin()).abs() < 1e-13);
                }
            }
            _ => panic!("expected sparse lift"),
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = TorusGrid::new(2, 8).unwrap();
        let base = shear_drift(g, 1.0, 1).unwrap();
        assert!(matches!(particle_lift(&base, 3, 5), Err(Error::Budget(_))));
    }
}
