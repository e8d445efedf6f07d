//! Trigonometric test functions with closed-form derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Rank, SpectralField, TorusGrid, TWO_PI};

/// Scalar time profile `τ(t)` multiplying the spatial part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFactor {
    #[default]
    Constant,
    /// `e^{rate t}`
    Exp { rate: f64 },
    /// `cos(ω t)`
    Cos { omega: f64 },
}

impl TimeFactor {
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::Constant => 1.0,
            TimeFactor::Exp { rate } => (rate * t).exp(),
            TimeFactor::Cos { omega } => (omega * t).cos(),
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::Constant => 0.0,
            TimeFactor::Exp { rate } => rate * (rate * t).exp(),
            TimeFactor::Cos { omega } => -omega * (omega * t).sin(),
        }
    }

    /// `(∫₀^T |τ|^q dt)^{1/q}` by composite Simpson on 2048 panels, `sup` for `q = ∞`.
    pub fn lq_norm(&self, t_final: f64, q: f64) -> f64 {
        let m = 2048;
        let h = t_final / m as f64;
        if q.is_infinite() {
            return (0..=m).map(|i| self.value(i as f64 * h).abs()).fold(0.0, f64::max);
        }
        let mut acc = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * self.value(i as f64 * h).abs().powf(q);
        }
        (acc * h / 3.0).powf(1.0 / q)
    }
}

/// `a cos(2π k·x + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `f(t, x) = τ(t) (c + Σ_m a_m cos(2π k_m·x + φ_m))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFn {
    pub dim: usize,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
    #[serde(default)]
    pub time: TimeFactor,
}

impl TestFn {
    /// `cos(2π m x_axis)`.
    pub fn cosine(dim: usize, axis: usize, m: i64) -> Self {
        let mut k = vec![0; dim];
        k[axis] = m;
        Self {
            dim,
            offset: 0.0,
            terms: vec![Term {
                k,
                amplitude: 1.0,
                phase: 0.0,
            }],
            time: TimeFactor::Constant,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            dim,
            offset: c,
            terms: Vec::new(),
            time: TimeFactor::Constant,
        }
    }

    pub fn with_time(mut self, time: TimeFactor) -> Self {
        self.time = time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::Dimension(format!("test function dim {} not in 1..=3", self.dim)));
        }
        if self.terms.iter().any(|t| t.k.len() != self.dim) {
            return Err(Error::Dimension("test function wavevector length differs from dim".into()));
        }
        Ok(())
    }

    pub fn is_space_constant(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0 || t.k.iter().all(|k| *k == 0))
    }

    /// Largest `|k|_∞` among the terms.
    pub fn max_wavenumber(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    #[inline]
    fn phase_of(t: &Term, x: &[f64]) -> f64 {
        let mut th = t.phase;
        for (k, xa) in t.k.iter().zip(x) {
            th += TWO_PI * *k as f64 * xa;
        }
        th
    }

    #[inline]
    fn spatial(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|t| t.amplitude * Self::phase_of(t, x).cos())
                .sum::<f64>()
    }

    #[inline]
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.time.value(t) * self.spatial(x)
    }

    #[inline]
    pub fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        self.time.derivative(t) * self.spatial(x)
    }

    #[inline]
    pub fn laplacian(&self, t: f64, x: &[f64]) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|term| {
                let k2: f64 = term.k.iter().map(|k| (*k * *k) as f64).sum();
                -TWO_PI * TWO_PI * k2 * term.amplitude * Self::phase_of(term, x).cos()
            })
            .sum();
        self.time.value(t) * s
    }

    #[inline]
    pub fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let tau = self.time.value(t);
        for term in &self.terms {
            let s = -TWO_PI * term.amplitude * Self::phase_of(term, x).sin() * tau;
            for (o, k) in out.iter_mut().zip(&term.k) {
                *o += s * *k as f64;
            }
        }
    }

    /// Spatial part on `grid` (time factor dropped).
    pub fn spatial_field(&self, grid: TorusGrid) -> Result<SpectralField> {
        self.validate()?;
        if grid.dim() != self.dim {
            return Err(Error::Dimension("grid and test function dims differ".into()));
        }
        if 2 * self.max_wavenumber() >= grid.n() as i64 {
            return Err(Error::Resolution(format!(
                "test function wavenumber {} needs N > {}",
                self.max_wavenumber(),
                2 * self.max_wavenumber()
            )));
        }
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                self.spatial(&p[..self.dim])
            })
            .collect();
        SpectralField::forward_transform(grid, Rank::Scalar, &samples)
    }

    /// Smallest power-of-two grid resolving every term with room to spare.
    pub fn natural_grid(&self) -> Result<TorusGrid> {
        let n = (4 * self.max_wavenumber().max(1) as usize).next_power_of_two().max(8);
        TorusGrid::new(self.dim, n)
    }

    /// `‖∇f‖_{L^q_T L^p}` with the pointwise Euclidean norm of `∇f`.
    pub fn gradient_norm(&self, t_final: f64, p: f64, q: f64) -> Result<f64> {
        let grid = self.natural_grid()?;
        let f = self.spatial_field(grid)?;
        let grad = crate::drift::gradient(&f)?;
        Ok(grad.lebesgue_norm(p) * self.time.lq_norm(t_final, q))
    }

    /// `‖f‖_{L²_T H^{-1}}`.
    pub fn l2_h_minus1_norm(&self, t_final: f64) -> Result<f64> {
        let grid = self.natural_grid()?;
        let f = self.spatial_field(grid)?;
        Ok(crate::kbe::h_minus1_norm(&f) * self.time.lq_norm(t_final, 2.0))
    }

    /// Bank of `count` random band-limited mean-zero functions with `|k|_∞ ≤ kmax`.
    pub fn random_bank(dim: usize, count: usize, kmax: i64, terms: usize, seed: u64) -> Vec<TestFn> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut list = Vec::with_capacity(terms);
                while list.len() < terms {
                    let k: Vec<i64> = (0..dim).map(|_| rng.random_range(-kmax..=kmax)).collect();
                    if k.iter().all(|v| *v == 0) {
                        continue;
                    }
                    list.push(Term {
                        k,
                        amplitude: rng.random_range(-1.0..1.0),
                        phase: rng.random_range(0.0..TWO_PI),
                    });
                }
                TestFn {
                    dim,
                    offset: 0.0,
                    terms: list,
                    time: TimeFactor::Cos {
                        omega: rng.random_range(0.0..6.0),
                    },
                }
            })
            .collect()
    }
}

/// `a(t, x) = τ(t) Σ_m v_m cos(2π k_m·x + φ_m)` plus a constant vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorTestFn {
    pub dim: usize,
    #[serde(default)]
    pub offset: Vec<f64>,
    #[serde(default)]
    pub terms: Vec<VectorTerm>,
    #[serde(default)]
    pub time: TimeFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorTerm {
    pub k: Vec<i64>,
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

impl VectorTestFn {
    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    pub fn constant(c: Vec<f64>) -> Self {
        Self {
            dim: c.len(),
            offset: c,
            terms: Vec::new(),
            time: TimeFactor::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::Dimension(format!("vector test function dim {} not in 1..=3", self.dim)));
        }
        if !self.offset.is_empty() && self.offset.len() != self.dim {
            return Err(Error::Dimension("offset length differs from dim".into()));
        }
        if self.terms.iter().any(|t| t.k.len() != self.dim || t.amplitude.len() != self.dim) {
            return Err(Error::Dimension("vector term shape differs from dim".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.offset.get(a).copied().unwrap_or(0.0);
        }
        for term in &self.terms {
            let mut th = term.phase;
            for (k, xa) in term.k.iter().zip(x) {
                th += TWO_PI * *k as f64 * xa;
            }
            let c = th.cos();
            for (o, v) in out.iter_mut().zip(&term.amplitude) {
                *o += v * c;
            }
        }
        let tau = self.time.value(t);
        out.iter_mut().for_each(|o| *o *= tau);
    }

    fn max_wavenumber(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Spatial part on a grid resolving every term.
    pub fn spatial_field(&self) -> Result<SpectralField> {
        self.validate()?;
        let n = (4 * self.max_wavenumber().max(1) as usize).next_power_of_two().max(8);
        let grid = TorusGrid::new(self.dim, n)?;
        let len = grid.len();
        let mut samples = vec![0.0; self.dim * len];
        let mut v = vec![0.0; self.dim];
        let plain = Self {
            time: TimeFactor::Constant,
            ..self.clone()
        };
        for i in 0..len {
            let p = grid.point(i);
            plain.value(0.0, &p[..self.dim], &mut v);
            for a in 0..self.dim {
                samples[a * len + i] = v[a];
            }
        }
        SpectralField::forward_transform(grid, Rank::Vector, &samples)
    }

    /// `‖a‖_{L⁴_T B⁰_{2r,1,2}}`.
    pub fn novikov_norm(&self, t_final: f64, r: f64) -> Result<f64> {
        let field = self.spatial_field()?;
        let part = crate::besov::DyadicPartition::new(field.grid());
        Ok(part.b012_norm(&field, 2.0 * r)? * self.time.lq_norm(t_final, 4.0))
    }
}
