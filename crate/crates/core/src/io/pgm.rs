//! Binary PGM (P5). Frames are written 16-bit big-endian with maxval 65535
//! and hold raw camera codes; bit depth and full scale live in the manifest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Grid2D;
use crate::synth::CameraFrame;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples, top row first.
    pub data: Vec<u16>,
}

pub fn encode(img: &PgmImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval < 256 {
        out.extend(img.data.iter().map(|&v| v as u8));
    } else {
        for v in &img.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Header tokens: magic, width, height, maxval; `#` comments allowed between them.
fn header(bytes: &[u8]) -> std::result::Result<([u64; 3], usize), String> {
    let mut pos = 0;
    let mut tokens: Vec<&[u8]> = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        tokens.push(&bytes[start..pos]);
    }
    if tokens[0] != b"P5" {
        return Err("not a binary PGM (expected P5)".into());
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() {
        return Err("missing raster".into());
    }
    pos += 1;
    let mut nums = [0u64; 3];
    for (n, t) in nums.iter_mut().zip(&tokens[1..]) {
        *n = std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad header field {:?}", String::from_utf8_lossy(t)))?;
    }
    Ok((nums, pos))
}

pub fn decode(bytes: &[u8]) -> std::result::Result<PgmImage, String> {
    let ([width, height, maxval], start) = header(bytes)?;
    if width == 0 || height == 0 || !(1..=65535).contains(&maxval) {
        return Err(format!("invalid dimensions {width}x{height} or maxval {maxval}"));
    }
    let (width, height, maxval) = (width as usize, height as usize, maxval as u16);
    let n = width.checked_mul(height).ok_or("image too large")?;
    let raster = &bytes[start..];
    let sample = if maxval < 256 { 1 } else { 2 };
    if raster.len() != n * sample {
        return Err(format!("raster has {} bytes, expected {}", raster.len(), n * sample));
    }
    let data: Vec<u16> = if sample == 1 {
        raster.iter().map(|&b| u16::from(b)).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(v) = data.iter().find(|&&v| v > maxval) {
        return Err(format!("sample {v} exceeds maxval {maxval}"));
    }
    Ok(PgmImage {
        width,
        height,
        maxval,
        data,
    })
}

pub fn write_frame(path: &Path, frame: &CameraFrame) -> Result<()> {
    let img = PgmImage {
        width: frame.grid().nx(),
        height: frame.grid().ny(),
        maxval: u16::MAX,
        data: frame.codes().to_vec(),
    };
    super::write_atomic(path, &encode(&img))
}

/// Reads a frame whose size must match `grid`.
pub fn read_frame(path: &Path, grid: Grid2D, bit_depth: u8, full_scale: f64) -> Result<CameraFrame> {
    let img = decode(&super::read_bytes(path)?).map_err(|m| Error::format(path, m))?;
    if (img.width, img.height) != (grid.nx(), grid.ny()) {
        return Err(Error::format(
            path,
            format!(
                "{}x{} image, manifest says {}x{}",
                img.width,
                img.height,
                grid.nx(),
                grid.ny()
            ),
        ));
    }
    CameraFrame::new(grid, bit_depth, full_scale, img.data).map_err(|e| Error::format(path, e.to_string()))
}
