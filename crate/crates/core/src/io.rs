//! Flat binary field snapshots.
//!
//! Layout, all little endian: 8 byte magic `FLFIELD1`, `u64` dim, three `u64` shape
//! entries, `f64` h, three `f64` origin entries, `f64` t, then `shape[0]*shape[1]*shape[2]`
//! values in row-major order with the first axis fastest.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, ScalarField};

pub const FIELD_MAGIC: &[u8; 8] = b"FLFIELD1";
pub const HEADER_BYTES: usize = 8 + 8 * 4 + 8 * 5;

pub fn write_field(mut w: impl Write, field: &ScalarField, t: f64) -> Result<()> {
    let g = &field.grid;
    let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * field.values.len());
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&(g.dim as u64).to_le_bytes());
    for s in g.shape {
        buf.extend_from_slice(&(s as u64).to_le_bytes());
    }
    buf.extend_from_slice(&g.h.to_le_bytes());
    for o in g.origin {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    buf.extend_from_slice(&t.to_le_bytes());
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn field_bytes(field: &ScalarField, t: f64) -> Vec<u8> {
    let mut out = Vec::new();
    write_field(&mut out, field, t).expect("writing to memory");
    out
}

/// Masks are stored as fields of 0 and 1.
pub fn mask_bytes(mask: &Mask, t: f64) -> Vec<u8> {
    field_bytes(&mask.to_field(), t)
}

pub fn read_field(mut r: impl Read) -> Result<(ScalarField, f64)> {
    let mut head = [0u8; HEADER_BYTES];
    r.read_exact(&mut head)?;
    if &head[..8] != FIELD_MAGIC {
        return Err(Error::Io("not a field file (bad magic)".into()));
    }
    let word = |i: usize| -> [u8; 8] { head[8 + 8 * i..16 + 8 * i].try_into().unwrap() };
    let dim = u64::from_le_bytes(word(0)) as usize;
    let shape: Vec<usize> = (1..4).map(|i| u64::from_le_bytes(word(i)) as usize).collect();
    let h = f64::from_le_bytes(word(4));
    let origin: Vec<f64> = (5..8).map(|i| f64::from_le_bytes(word(i))).collect();
    let t = f64::from_le_bytes(word(8));
    if !(1..=3).contains(&dim) || shape[dim..].iter().any(|&s| s != 1) {
        return Err(Error::Io(format!("inconsistent header: dim {dim}, shape {shape:?}")));
    }
    let grid = Grid::new(dim, &shape[..dim], h, &origin[..dim]).map_err(|e| Error::Io(e.to_string()))?;
    let n = grid.len();
    let mut raw = vec![0u8; 8 * n];
    r.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((ScalarField { grid, values }, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = Grid::new(2, &[5, 3], 0.25, &[-1.0, 2.5]).unwrap();
        let field = ScalarField::from_fn(grid, |p| (p[0] * 3.1).sin() + p[1] / 7.0);
        let bytes = field_bytes(&field, 1.5);
        assert_eq!(bytes.len(), HEADER_BYTES + 8 * 15);
        let (back, t) = read_field(&bytes[..]).unwrap();
        assert_eq!(t, 1.5);
        assert_eq!(back, field);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = field_bytes(&ScalarField::constant(Grid::new(1, &[2], 1.0, &[0.0]).unwrap(), 0.0), 0.0);
        bytes[0] = b'X';
        assert!(read_field(&bytes[..]).is_err());
    }
}
