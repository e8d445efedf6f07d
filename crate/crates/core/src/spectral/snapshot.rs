//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "SDLF"            4 bytes magic
//! version  u32      currently 1
//! dim      u32
//! N        u32      modes per axis
//! rank     u32      0 scalar, 1 vector, 2 matrix
//! real     u8       1 if the field is real-valued
//! coeffs   f64 × 2  (re, im) pairs, component-major, k in FFT order
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Rank, SpectralField, TorusGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SDLF";
pub const VERSION: u32 = 1;

pub fn write_field<W: Write>(mut w: W, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&field.rank().code().to_le_bytes())?;
    w.write_all(&[field.is_real() as u8])?;
    for c in field.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_field<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let rank = Rank::from_code(read_u32(&mut r)?).ok_or_else(|| Error::Format("unknown rank code".into()))?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let grid = TorusGrid::new(dim, n)?;
    let count = rank.components(dim) * grid.len();
    let mut coeffs = Vec::with_capacity(count);
    let mut buf = [0u8; 16];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        coeffs.push(Complex64::new(re, im));
    }
    SpectralField::from_coeffs(grid, rank, coeffs, flag[0] == 1)
}
