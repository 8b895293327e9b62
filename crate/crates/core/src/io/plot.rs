//! 8-bit binary PPM (P6) renderings: amplitude in linear gray, phase on a
//! cyclic hue wheel, and power matrices as a dB heatmap.

use std::f64::consts::PI;
use std::path::Path;

use crate::analysis::PowerMatrix;
use crate::error::{Error, Result};
use crate::field::ComplexField;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpmImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub rgb: Vec<[u8; 3]>,
}

pub fn encode(img: &PpmImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.rgb.iter().flatten());
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<PpmImage, String> {
    let text_end = bytes.len().min(64);
    let head = String::from_utf8_lossy(&bytes[..text_end]);
    let mut fields = head.split_ascii_whitespace();
    if fields.next() != Some("P6") {
        return Err("not a binary PPM (expected P6)".into());
    }
    let mut num = || -> std::result::Result<usize, String> {
        fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| "bad PPM header".to_string())
    };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(format!("only maxval 255 is supported, got {maxval}"));
    }
    let header = format!("P6\n{width} {height}\n255\n");
    if !bytes.starts_with(header.as_bytes()) {
        return Err("non-canonical PPM header".into());
    }
    let raster = &bytes[header.len()..];
    if raster.len() != 3 * width * height {
        return Err(format!(
            "raster has {} bytes, expected {}",
            raster.len(),
            3 * width * height
        ));
    }
    Ok(PpmImage {
        width,
        height,
        rgb: raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

pub fn write_ppm(path: &Path, img: &PpmImage) -> Result<()> {
    super::write_atomic(path, &encode(img))
}

pub fn read_ppm(path: &Path) -> Result<PpmImage> {
    decode(&super::read_bytes(path)?).map_err(|m| Error::format(path, m))
}

/// Hue wheel anchors at phases `-pi, -2pi/3, -pi/3, 0, pi/3, 2pi/3`; colors
/// between anchors are interpolated linearly and the wheel closes at `pi`.
pub const PHASE_HUE_TABLE: [[u8; 3]; 6] = [
    [0, 255, 255], // -pi: cyan
    [0, 0, 255],   // -2pi/3: blue
    [255, 0, 255], // -pi/3: magenta
    [255, 0, 0],   // 0: red
    [255, 255, 0], // pi/3: yellow
    [0, 255, 0],   // 2pi/3: green
];

pub fn phase_color(phase: f64) -> [u8; 3] {
    let t = (phase + PI).rem_euclid(2.0 * PI) / (2.0 * PI) * 6.0;
    let i = (t.floor() as usize).min(5);
    let frac = t - i as f64;
    let (a, b) = (PHASE_HUE_TABLE[i], PHASE_HUE_TABLE[(i + 1) % 6]);
    std::array::from_fn(|k| (f64::from(a[k]) + frac * (f64::from(b[k]) - f64::from(a[k]))).round() as u8)
}

/// `|field|` scaled so the maximum is white; a zero field is black.
pub fn amplitude_image(field: &ComplexField) -> PpmImage {
    let g = field.grid();
    let max = field.max_abs();
    let rgb = field
        .samples()
        .iter()
        .map(|s| {
            let v = if max > 0.0 {
                (s.norm() / max * 255.0).round() as u8
            } else {
                0
            };
            [v; 3]
        })
        .collect();
    PpmImage {
        width: g.nx(),
        height: g.ny(),
        rgb,
    }
}

/// `arg(field)` through [`phase_color`].
pub fn phase_image(field: &ComplexField) -> PpmImage {
    let g = field.grid();
    PpmImage {
        width: g.nx(),
        height: g.ny(),
        rgb: field.samples().iter().map(|s| phase_color(s.arg())).collect(),
    }
}

/// Dark-to-bright ramp used by the heatmap, black at the floor.
const HEAT_TABLE: [[u8; 3]; 5] = [[0, 0, 0], [68, 1, 84], [59, 82, 139], [33, 145, 140], [253, 231, 37]];

fn heat_color(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (HEAT_TABLE.len() - 1) as f64;
    let i = (t.floor() as usize).min(HEAT_TABLE.len() - 2);
    let frac = t - i as f64;
    let (a, b) = (HEAT_TABLE[i], HEAT_TABLE[i + 1]);
    std::array::from_fn(|k| (f64::from(a[k]) + frac * (f64::from(b[k]) - f64::from(a[k]))).round() as u8)
}

/// Ports down, modes across, `cell` pixels per entry, color spanning
/// `floor_db` to 0 dB relative to the largest entry.
pub fn power_heatmap(p: &PowerMatrix, cell: usize, floor_db: f64) -> PpmImage {
    let max = p.rows().iter().flatten().copied().fold(0.0, f64::max);
    let (w, h) = (p.modes() * cell, p.ports() * cell);
    let mut rgb = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = p.rows()[y / cell][x / cell];
            let db = if max > 0.0 && v > 0.0 {
                10.0 * (v / max).log10()
            } else {
                f64::NEG_INFINITY
            };
            rgb.push(heat_color(1.0 - db / floor_db));
        }
    }
    PpmImage {
        width: w,
        height: h,
        rgb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;
    use num_complex::Complex64;

    #[test]
    fn hue_wheel_is_cyclic_and_hits_anchors() {
        assert_eq!(phase_color(0.0), [255, 0, 0]);
        assert_eq!(phase_color(-PI), phase_color(PI));
        assert_eq!(phase_color(PI / 3.0), [255, 255, 0]);
        assert_eq!(phase_color(PI - 1e-12), [0, 255, 255]);
    }

    #[test]
    fn ppm_round_trip() {
        let g = Grid2D::square(8, 1e-6).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::from_polar(x.abs() * 1e6, y * 1e6));
        for img in [amplitude_image(&f), phase_image(&f)] {
            assert_eq!(decode(&encode(&img)).unwrap(), img);
        }
        assert!(decode(b"P6\n1 1\n255\n\x00\x00").is_err());
    }

    #[test]
    fn heatmap_shape_and_extremes() {
        let p = PowerMatrix::new(vec![vec![1.0, 0.0], vec![0.01, 0.5]]).unwrap();
        let img = power_heatmap(&p, 4, -30.0);
        assert_eq!((img.width, img.height), (8, 8));
        assert_eq!(img.rgb[0], [253, 231, 37]);
        assert_eq!(img.rgb[4], [0, 0, 0]);
    }
}
