use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Rank, SpectralField, TWO_PI};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModeRule {
    Keep,
    Annihilate,
}

type ScalarSymbol = Arc<dyn Fn(&[i64], usize) -> Complex64 + Send + Sync>;

/// Scalar Fourier multiplier applied component-wise.
///
/// The symbol receives the wavenumber vector and the grid's modes per axis
/// (needed to recognize Nyquist planes). It is evaluated lazily per mode.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    symbol: ScalarSymbol,
    zero_mode: ZeroModeRule,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("name", &self.name)
            .field("zero_mode", &self.zero_mode)
            .finish()
    }
}

/// Symbol of `∂` along one axis: `2πik`, zero on the Nyquist plane.
#[inline]
pub fn derivative_symbol(k_axis: i64, n: usize) -> Complex64 {
    if k_axis.unsigned_abs() as usize * 2 == n {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, TWO_PI * k_axis as f64)
    }
}

#[inline]
fn k_sq(k: &[i64]) -> f64 {
    k.iter().map(|&v| (v * v) as f64).sum()
}

impl Multiplier {
    pub fn new(
        name: impl Into<String>,
        zero_mode: ZeroModeRule,
        symbol: impl Fn(&[i64], usize) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            symbol: Arc::new(symbol),
            zero_mode,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn zero_mode(&self) -> ZeroModeRule {
        self.zero_mode
    }

    pub fn symbol(&self, k: &[i64], n: usize) -> Complex64 {
        if self.zero_mode == ZeroModeRule::Annihilate && k.iter().all(|&v| v == 0) {
            return Complex64::new(0.0, 0.0);
        }
        (self.symbol)(k, n)
    }

    /// `∂_axis`, symbol `2πik_axis`, zero on the Nyquist plane of that axis.
    pub fn derivative(axis: usize) -> Self {
        Self::new(format!("d{axis}"), ZeroModeRule::Keep, move |k, n| derivative_symbol(k[axis], n))
    }

    /// `Δ`, symbol `-4π²|k|²`.
    pub fn laplacian() -> Self {
        Self::new("laplacian", ZeroModeRule::Keep, |k, _| {
            Complex64::new(-TWO_PI * TWO_PI * k_sq(k), 0.0)
        })
    }

    /// `(-Δ)^α`, symbol `1_{|k|>0}(2π|k|)^{2α}`.
    pub fn fractional_laplacian(alpha: f64) -> Self {
        Self::new(format!("frac_laplacian({alpha})"), ZeroModeRule::Annihilate, move |k, _| {
            Complex64::new((TWO_PI * k_sq(k).sqrt()).powf(2.0 * alpha), 0.0)
        })
    }

    /// `Δ^{-1}` on mean-zero fields.
    pub fn inverse_laplacian() -> Self {
        Self::new("inverse_laplacian", ZeroModeRule::Annihilate, |k, _| {
            Complex64::new(-1.0 / (TWO_PI * TWO_PI * k_sq(k)), 0.0)
        })
    }

    /// `(1 - Δ)^{-β}`.
    pub fn bessel_potential(beta: f64) -> Self {
        Self::new(format!("bessel_potential({beta})"), ZeroModeRule::Keep, move |k, _| {
            Complex64::new((1.0 + TWO_PI * TWO_PI * k_sq(k)).powf(-beta), 0.0)
        })
    }

    /// `log(1 - Δ)^{-α}`: multiplication by `log(1 + 4π²|k|²)^{-α}` for `k ≠ 0`.
    ///
    /// The zero mode is kept with symbol value 0; `log 1 = 0` makes the
    /// natural value singular and the free-field use case has no mean mode.
    pub fn log_regularizer(alpha: f64) -> Self {
        Self::new(format!("log_regularizer({alpha})"), ZeroModeRule::Keep, move |k, _| {
            let k2 = k_sq(k);
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 + TWO_PI * TWO_PI * k2).ln().powf(-alpha), 0.0)
            }
        })
    }

    /// Pointwise product of symbols; annihilates the zero mode if either factor does.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        let a = self.clone();
        let b = other.clone();
        let zero_mode = if a.zero_mode == ZeroModeRule::Annihilate || b.zero_mode == ZeroModeRule::Annihilate {
            ZeroModeRule::Annihilate
        } else {
            ZeroModeRule::Keep
        };
        Multiplier::new(format!("{}∘{}", a.name, b.name), zero_mode, move |k, n| {
            a.symbol(k, n) * b.symbol(k, n)
        })
    }

    /// True when `m(-k) = conj(m(k))` on every resolvable mode of the grid.
    pub fn is_hermitian_on(&self, grid: super::TorusGrid) -> bool {
        let dim = grid.dim();
        (0..grid.len()).all(|i| {
            let j = grid.conjugate_index(i);
            let ki = grid.k_at(i);
            let kj = grid.k_at(j);
            (self.symbol(&kj[..dim], grid.n()) - self.symbol(&ki[..dim], grid.n()).conj()).norm() == 0.0
        })
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        let grid = f.grid();
        let dim = grid.dim();
        let len = grid.len();
        let symbols: Vec<Complex64> = (0..len)
            .map(|i| {
                let k = grid.k_at(i);
                self.symbol(&k[..dim], grid.n())
            })
            .collect();
        if let Some((i, s)) = symbols
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::Numeric(format!(
                "multiplier {} has non-finite symbol {s} at k = {:?}",
                self.name,
                grid.k_at(i)
            )));
        }
        let mut out = f.clone();
        for c in 0..f.components() {
            for (v, s) in out.component_mut(c).iter_mut().zip(&symbols) {
                *v *= s;
            }
        }
        let hermitian = f.is_real() && self.is_hermitian_on(grid);
        out.set_real_flag(hermitian);
        Ok(out)
    }
}

type MatrixSymbol = Arc<dyn Fn(&[i64], usize, &mut [Complex64]) + Send + Sync>;

/// Component-mixing multiplier: `out_c(k) = Σ_d M_{cd}(k) in_d(k)`.
#[derive(Clone)]
pub struct MatrixMultiplier {
    name: String,
    in_rank: Rank,
    out_rank: Rank,
    symbol: MatrixSymbol,
}

impl fmt::Debug for MatrixMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixMultiplier")
            .field("name", &self.name)
            .field("in_rank", &self.in_rank)
            .field("out_rank", &self.out_rank)
            .finish()
    }
}

impl MatrixMultiplier {
    /// `symbol(k, n, m)` fills the row-major `out × in` matrix `m`.
    pub fn new(
        name: impl Into<String>,
        in_rank: Rank,
        out_rank: Rank,
        symbol: impl Fn(&[i64], usize, &mut [Complex64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            in_rank,
            out_rank,
            symbol: Arc::new(symbol),
        }
    }

    /// Gradient of a scalar field.
    pub fn gradient() -> Self {
        Self::new("gradient", Rank::Scalar, Rank::Vector, |k, n, m| {
            for (a, slot) in m.iter_mut().enumerate() {
                *slot = derivative_symbol(k[a], n);
            }
        })
    }

    /// Divergence of a vector field.
    pub fn divergence() -> Self {
        Self::new("divergence", Rank::Vector, Rank::Scalar, |k, n, m| {
            for (a, slot) in m.iter_mut().enumerate() {
                *slot = derivative_symbol(k[a], n);
            }
        })
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.rank() != self.in_rank {
            return Err(Error::Dimension(format!(
                "{} expects {:?} input, got {:?}",
                self.name,
                self.in_rank,
                f.rank()
            )));
        }
        let grid = f.grid();
        let dim = grid.dim();
        let nin = self.in_rank.components(dim);
        let nout = self.out_rank.components(dim);
        let len = grid.len();
        let mut out = SpectralField::zeros(grid, self.out_rank);
        let mut m = vec![Complex64::new(0.0, 0.0); nin * nout];
        for i in 0..len {
            let k = grid.k_at(i);
            m.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            (self.symbol)(&k[..dim], grid.n(), &mut m);
            for o in 0..nout {
                let mut acc = Complex64::new(0.0, 0.0);
                for d in 0..nin {
                    acc += m[o * nin + d] * f.component(d)[i];
                }
                if !(acc.re.is_finite() && acc.im.is_finite()) {
                    return Err(Error::Numeric(format!(
                        "{} produced a non-finite coefficient at k = {:?}",
                        self.name, k
                    )));
                }
                out.component_mut(o)[i] = acc;
            }
        }
        out.set_real_flag(f.is_real());
        Ok(out)
    }
}
