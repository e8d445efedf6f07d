//! Littlewood-Paley blocks, Besov norms, the squared-tail space `B⁰_{p,1,2}`
//! and Bony paraproducts.
//!
//! The dyadic partition uses a C^∞ radial profile `ψ` equal to 1 on `r ≤ 1`
//! and 0 on `r ≥ 4/3`:
//!
//! ```text
//! ψ(r)  = 1 - S((r - 1) / (1/3)),     S(t) = e(t) / (e(t) + e(1 - t)),  e(t) = exp(-1/t) for t > 0
//! χ(r)  = ψ(r)                         block j = -1
//! φ(r)  = ψ(r/2) - ψ(r)                block j ≥ 0 uses φ(2^{-j} r), supported in [1, 8/3]
//! ```
//!
//! The sum telescopes, so the blocks reconstruct the field up to rounding.
//! Blocks `i` and `j` have disjoint frequency support once `|i - j| ≥ 2`; the
//! resonant shift constant for this geometry is `K = 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{PaddedSamples, Rank, SpectralField, TorusGrid};

/// Index shift between a block of `f ⊙ g` and the tails that feed it.
pub const RESONANT_SHIFT_K: i32 = 2;

/// The C^∞ transition `S` with `S = 0` on `t ≤ 0` and `S = 1` on `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    fn e(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = e(t);
        a / (a + e(1.0 - t))
    }
}

fn psi(r: f64) -> f64 {
    1.0 - smooth_step((r - 1.0) * 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) {
            return Err(Error::Validation(format!("Besov p, q must be >= 1, got p={p}, q={q}")));
        }
        Ok(Self { s, p, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPartition {
    grid: TorusGrid,
    j_max: i32,
}

impl DyadicPartition {
    pub fn new(grid: TorusGrid) -> Self {
        let half = (grid.n() / 2) as f64;
        let j_max = half.log2().ceil() as i32 + 1;
        Self { grid, j_max }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    pub fn chi(r: f64) -> f64 {
        psi(r)
    }

    pub fn phi(r: f64) -> f64 {
        psi(r / 2.0) - psi(r)
    }

    /// Weight of block `j` at frequency radius `r`.
    pub fn weight(j: i32, r: f64) -> f64 {
        if j < 0 {
            Self::chi(r)
        } else {
            Self::phi(r / f64::powi(2.0, j))
        }
    }

    /// Blocks with nonzero weight at radius `r` (at most two for the standard profile).
    pub fn blocks_at(&self, r: f64) -> Vec<i32> {
        self.blocks().filter(|&j| Self::weight(j, r) != 0.0).collect()
    }

    fn check_grid(&self, u: &SpectralField) -> Result<()> {
        if u.grid() != self.grid {
            return Err(Error::Dimension(format!(
                "partition built for {:?}, field lives on {:?}",
                self.grid,
                u.grid()
            )));
        }
        Ok(())
    }

    /// `Δ_j u`.
    pub fn lp_block(&self, u: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(u)?;
        if j < -1 {
            return Err(Error::Validation(format!("block index must be >= -1, got {j}")));
        }
        let mut out = u.clone();
        let len = self.grid.len();
        let weights: Vec<f64> = (0..len)
            .map(|i| Self::weight(j, self.grid.k_norm_sq(i).sqrt()))
            .collect();
        for c in 0..u.components() {
            for (v, w) in out.component_mut(c).iter_mut().zip(&weights) {
                *v *= *w;
            }
        }
        Ok(out)
    }

    /// All blocks `-1..=j_max` in order.
    pub fn decompose(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        self.blocks().map(|j| self.lp_block(u, j)).collect()
    }

    /// `Π_{≥j} u = u - Σ_{i<j} Δ_i u`.
    pub fn tail(&self, u: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(u)?;
        let mut out = u.clone();
        let len = self.grid.len();
        let weights: Vec<f64> = (0..len)
            .map(|i| {
                let r = self.grid.k_norm_sq(i).sqrt();
                1.0 - (-1..j).map(|b| Self::weight(b, r)).sum::<f64>()
            })
            .collect();
        for c in 0..u.components() {
            for (v, w) in out.component_mut(c).iter_mut().zip(&weights) {
                *v *= *w;
            }
        }
        Ok(out)
    }

    /// `(Σ_j 2^{s j₊ q} ‖Δ_j u‖^q_{L^p})^{1/q}`, or the sup over blocks when `q = ∞`.
    ///
    /// The low block carries weight 1, so the norm is non-decreasing in `s`.
    pub fn besov_norm(&self, u: &SpectralField, params: BesovParams) -> Result<f64> {
        let terms: Vec<f64> = self
            .blocks()
            .map(|j| {
                let b = self.lp_block(u, j)?;
                Ok(f64::powf(2.0, params.s * j.max(0) as f64) * b.lebesgue_norm(params.p))
            })
            .collect::<Result<_>>()?;
        Ok(lq_sum(&terms, params.q))
    }

    /// `(Σ_{j=-1}^{j_max} ‖Π_{≥j} u‖²_{B⁰_{p,1}})^{1/2}`.
    pub fn b012_norm(&self, u: &SpectralField, p: f64) -> Result<f64> {
        let params = BesovParams::new(0.0, p, 1.0)?;
        let mut acc = 0.0;
        for j in self.blocks() {
            let t = self.tail(u, j)?;
            let n = self.besov_norm(&t, params)?;
            acc += n * n;
        }
        Ok(acc.sqrt())
    }

    /// Bony decomposition `(f ≺ g, f ⊙ g, f ≻ g)` of the product `f g`.
    ///
    /// All three parts live on the 2× padded grid, where the product of two
    /// fields from this grid is exact.
    pub fn paraproduct_split(&self, f: &SpectralField, g: &SpectralField) -> Result<Paraproducts> {
        self.check_grid(f)?;
        self.check_grid(g)?;
        if f.rank() != Rank::Scalar || g.rank() != Rank::Scalar {
            return Err(Error::Dimension("paraproducts need scalar fields".into()));
        }
        let fb: Vec<PaddedSamples> = self
            .decompose(f)?
            .iter()
            .map(PaddedSamples::from_field)
            .collect();
        let gb: Vec<PaddedSamples> = self
            .decompose(g)?
            .iter()
            .map(PaddedSamples::from_field)
            .collect();
        let fine = fb[0].fine;
        let len = fine.len();
        let mut low_high = vec![Complex64::new(0.0, 0.0); len];
        let mut resonant = vec![Complex64::new(0.0, 0.0); len];
        let mut high_low = vec![Complex64::new(0.0, 0.0); len];
        // block index b corresponds to j = b - 1
        for (a, fa) in fb.iter().enumerate() {
            for (b, gbb) in gb.iter().enumerate() {
                let (i, j) = (a as i32 - 1, b as i32 - 1);
                let target = if i <= j - 2 {
                    &mut low_high
                } else if j <= i - 2 {
                    &mut high_low
                } else {
                    &mut resonant
                };
                for ((t, x), y) in target.iter_mut().zip(&fa.samples).zip(&gbb.samples) {
                    *t += x * y;
                }
            }
        }
        let real = f.is_real() && g.is_real();
        Ok(Paraproducts {
            low_high: PaddedSamples::to_fine_field(fine, Rank::Scalar, &low_high, real)?,
            resonant: PaddedSamples::to_fine_field(fine, Rank::Scalar, &resonant, real)?,
            high_low: PaddedSamples::to_fine_field(fine, Rank::Scalar, &high_low, real)?,
        })
    }

    /// `‖|b|²‖_{B⁰_{p,1}} / ‖b‖²_{B⁰_{2p,1,2}}`, with `|b|²` formed on the padded grid.
    ///
    /// Returns 0 for `b = 0`.
    pub fn square_norm_ratio(&self, b: &SpectralField, p: f64) -> Result<f64> {
        self.check_grid(b)?;
        if b.rank() != Rank::Vector {
            return Err(Error::Dimension("square_norm_ratio expects a vector field".into()));
        }
        let denom = self.b012_norm(b, 2.0 * p)?.powi(2);
        if denom == 0.0 {
            return Ok(0.0);
        }
        let padded = PaddedSamples::from_field(b);
        let len = padded.fine.len();
        let sq: Vec<Complex64> = (0..len)
            .map(|x| {
                let s: f64 = (0..padded.components).map(|c| padded.component(c)[x].norm_sqr()).sum();
                Complex64::new(s, 0.0)
            })
            .collect();
        let square = PaddedSamples::to_fine_field(padded.fine, Rank::Scalar, &sq, true)?;
        let fine_partition = DyadicPartition::new(padded.fine);
        let num = fine_partition.besov_norm(&square, BesovParams::new(0.0, p, 1.0)?)?;
        Ok(num / denom)
    }
}

#[derive(Debug, Clone)]
pub struct Paraproducts {
    pub low_high: SpectralField,
    pub resonant: SpectralField,
    pub high_low: SpectralField,
}

impl Paraproducts {
    pub fn sum(&self) -> Result<SpectralField> {
        self.low_high.add(&self.resonant)?.add(&self.high_low)
    }
}

fn lq_sum(terms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        terms.iter().cloned().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `L^q_T` quadrature of a norm sampled at (possibly nonuniform) times, trapezoid rule.
pub fn time_lq_norm(times: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Dimension("time and value arrays must match and be nonempty".into()));
    }
    if q.is_infinite() {
        return Ok(values.iter().cloned().fold(0.0, f64::max));
    }
    if times.len() == 1 {
        return Ok(values[0]);
    }
    let mut acc = 0.0;
    for w in 0..times.len() - 1 {
        let dt = times[w + 1] - times[w];
        acc += 0.5 * dt * (values[w].powf(q) + values[w + 1].powf(q));
    }
    Ok(acc.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TWO_PI;

    fn random_field(grid: TorusGrid, seed: u64) -> SpectralField {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let samples: Vec<f64> = (0..grid.len())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        SpectralField::forward_transform(grid, Rank::Scalar, &samples).unwrap()
    }

    #[test]
    fn profile_geometry() {
        assert_eq!(DyadicPartition::chi(1.0), 1.0);
        assert_eq!(DyadicPartition::chi(4.0 / 3.0), 0.0);
        assert_eq!(DyadicPartition::phi(0.74), 0.0);
        assert_eq!(DyadicPartition::phi(8.0 / 3.0 + 1e-12), 0.0);
        assert!(DyadicPartition::phi(1.5) > 0.0);
        // partition of unity on a fine radial sweep
        let part = DyadicPartition::new(TorusGrid::new(3, 32).unwrap());
        for i in 0..4000 {
            let r = i as f64 * 0.0125;
            let s: f64 = part.blocks().map(|j| DyadicPartition::weight(j, r)).sum();
            assert!((s - 1.0).abs() < 1e-12, "r = {r}, sum = {s}");
        }
    }

    #[test]
    fn j_max_formula() {
        assert_eq!(DyadicPartition::new(TorusGrid::new(2, 8).unwrap()).j_max(), 3);
        assert_eq!(DyadicPartition::new(TorusGrid::new(2, 64).unwrap()).j_max(), 6);
        assert_eq!(DyadicPartition::new(TorusGrid::new(1, 6).unwrap()).j_max(), 3);
    }

    #[test]
    fn unit_mode_sits_in_low_block() {
        let g = TorusGrid::new(2, 16).unwrap();
        let part = DyadicPartition::new(g);
        let e = SpectralField::mode(g, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let low = part.lp_block(&e, -1).unwrap();
        assert_eq!(low.coeffs(), e.coeffs());
        for j in 0..=part.j_max() {
            assert!(part.lp_block(&e, j).unwrap().max_abs_coeff() == 0.0);
        }
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = TorusGrid::new(2, 16).unwrap();
        let part = DyadicPartition::new(g);
        let z = SpectralField::zeros(g, Rank::Scalar);
        assert_eq!(part.besov_norm(&z, BesovParams::new(-1.0, 2.0, 2.0).unwrap()).unwrap(), 0.0);
        assert_eq!(part.b012_norm(&z, 3.0).unwrap(), 0.0);
        assert_eq!(part.lp_block(&z, 2).unwrap().max_abs_coeff(), 0.0);
        let zv = SpectralField::zeros(g, Rank::Vector);
        assert_eq!(part.square_norm_ratio(&zv, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn reconstruction_and_disjoint_support() {
        let g = TorusGrid::new(2, 32).unwrap();
        let part = DyadicPartition::new(g);
        let u = random_field(g, 3);
        let blocks = part.decompose(&u).unwrap();
        let mut sum = SpectralField::zeros(g, Rank::Scalar);
        for b in &blocks {
            sum = sum.add(b).unwrap();
        }
        assert!(sum.sub(&u).unwrap().l2_norm() <= 1e-10 * u.l2_norm());
        for (a, ba) in blocks.iter().enumerate() {
            for (b, bb) in blocks.iter().enumerate() {
                if (a as i32 - b as i32).abs() >= 2 {
                    for (x, y) in ba.coeffs().iter().zip(bb.coeffs()) {
                        assert!(x.norm() == 0.0 || y.norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_high_mode_besov_weight() {
        // direct evaluation of the block weights at |k| as the oracle
        let g = TorusGrid::new(2, 64).unwrap();
        let part = DyadicPartition::new(g);
        let k = [20i64, 9];
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let mut u = SpectralField::mode(g, &k, Complex64::new(0.5, 0.0)).unwrap();
        let mk = g.k_index(&[-k[0], -k[1]]).unwrap();
        u.coeffs_mut()[mk] = Complex64::new(0.5, 0.0);
        u.set_real_flag(true);
        let expected_sq: f64 = part
            .blocks()
            .map(|j| {
                let w = DyadicPartition::weight(j, r);
                // ‖w cos(2πk·x)‖_{L²} = |w| / √2
                (f64::powi(2.0, -j) * w.abs() / 2f64.sqrt()).powi(2)
            })
            .sum();
        let got = part.besov_norm(&u, BesovParams::new(-1.0, 2.0, 2.0).unwrap()).unwrap();
        assert!((got - expected_sq.sqrt()).abs() < 1e-12);
        assert!(part.blocks_at(r).len() <= 2);
    }

    #[test]
    fn single_mode_b012_matches_tail_sum() {
        let g = TorusGrid::new(1, 64).unwrap();
        let part = DyadicPartition::new(g);
        let k = 11i64;
        let samples: Vec<f64> = (0..64).map(|i| (TWO_PI * k as f64 * i as f64 / 64.0).cos()).collect();
        let u = SpectralField::forward_transform(g, Rank::Scalar, &samples).unwrap();
        let r = k as f64;
        // tail weight at r for each j, then B⁰_{p,1} of the tail is Σ_i |w_i · tail_j| ‖cos‖_{L^p}
        let p = 2.0;
        let cos_lp = 0.5f64.sqrt();
        let mut acc = 0.0;
        for j in part.blocks() {
            let tail_w = 1.0 - (-1..j).map(|b| DyadicPartition::weight(b, r)).sum::<f64>();
            let b01: f64 = part
                .blocks()
                .map(|i| (DyadicPartition::weight(i, r) * tail_w).abs() * cos_lp)
                .sum();
            acc += b01 * b01;
        }
        let got = part.b012_norm(&u, p).unwrap();
        assert!((got - acc.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_factor_paraproduct() {
        let g = TorusGrid::new(2, 16).unwrap();
        let part = DyadicPartition::new(g);
        let c = SpectralField::constant(g, 2.0);
        let v = random_field(g, 11);
        let split = part.paraproduct_split(&c, &v).unwrap();
        // constants live in block -1, which pairs with blocks >= 1 as low-high
        let padded_v = v.pad(2).scale(2.0);
        let sum = split.sum().unwrap();
        assert!(sum.sub(&padded_v).unwrap().l2_norm() < 1e-12 * padded_v.l2_norm());
        let hl_plus_res = split.high_low.add(&split.resonant).unwrap();
        assert!(hl_plus_res.l2_norm() <= padded_v.l2_norm() + 1e-12);
    }

    #[test]
    fn time_norm_quadrature() {
        let times = [0.0, 0.5, 1.0];
        let v = [1.0, 1.0, 1.0];
        assert!((time_lq_norm(&times, &v, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(time_lq_norm(&times, &[1.0, 3.0, 2.0], f64::INFINITY).unwrap(), 3.0);
    }
}
