//! CFLD complex field files.
//!
//! Layout, all little-endian: magic `CFLD`, version `u16`, `nx: u32`,
//! `ny: u32`, `pitch_x: f64`, `pitch_y: f64`, then `nx * ny` interleaved
//! `(re, im)` `f64` pairs, row-major.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid2D};

pub const MAGIC: &[u8; 4] = b"CFLD";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8 + 8;

pub fn encode(field: &ComplexField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.pitch_x().to_le_bytes());
    out.extend_from_slice(&g.pitch_y().to_le_bytes());
    for s in field.samples() {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<ComplexField, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err("not a CFLD file".into());
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(format!("unsupported CFLD version {version}"));
    }
    let (nx, ny) = (u32_at(6) as usize, u32_at(10) as usize);
    let grid = Grid2D::new(nx, ny, f64_at(14), f64_at(22)).map_err(|e| e.to_string())?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 16 * grid.len() {
        return Err(format!("body has {} bytes, expected {}", body.len(), 16 * grid.len()));
    }
    let samples = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    ComplexField::new(grid, samples).map_err(|e| e.to_string())
}

pub fn write_field(path: &Path, field: &ComplexField) -> Result<()> {
    super::write_atomic(path, &encode(field))
}

pub fn read_field(path: &Path) -> Result<ComplexField> {
    decode(&super::read_bytes(path)?).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_and_round_trip() {
        let g = Grid2D::new(8, 10, 1.5e-6, 2.5e-6).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x * 1e5, -y * 3e5 + 0.1));
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], b"CFLD");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[8, 0, 0, 0]);
        assert_eq!(&bytes[10..14], &[10, 0, 0, 0]);
        assert_eq!(bytes.len(), 30 + 16 * 80);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_truncated_and_nonfinite() {
        let g = Grid2D::square(8, 1e-6).unwrap();
        let mut bytes = encode(&ComplexField::zeros(g));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let n = bytes.len();
        bytes[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&bytes).is_err());
        assert!(decode(b"CFLX").is_err());
    }
}
