//! JSON side files: the truth matrix, the frame manifest written next to
//! camera frames, and the recon manifest and sideband log written next to
//! field files.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Polarization, Result, Warning};
use crate::field::{Grid2D, SpatialFrequency};
use crate::recon::SidebandRecord;
use crate::synth::{Excitation, ReferenceBeam, SchemeConfig, SchemeVariant};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECON_MANIFEST_FILE: &str = "recon.json";
pub const SIDEBAND_LOG_FILE: &str = "sidebands.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const FORMAT_VERSION: u32 = 1;

pub const MATRIX_LAYOUT: &str = "row = 2*mode + out_pol, col = 2*port + in_pol, X = 0, Y = 1";

/// Complex matrix as nested `[re, im]` pairs, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub layout: String,
    pub mode_labels: Vec<String>,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl TruthRecord {
    pub fn from_matrix(m: &DMatrix<Complex64>, mode_labels: Vec<String>) -> Self {
        TruthRecord {
            layout: MATRIX_LAYOUT.into(),
            mode_labels,
            rows: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> std::result::Result<DMatrix<Complex64>, String> {
        let nrows = self.rows.len();
        let ncols = self.rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || self.rows.iter().any(|r| r.len() != ncols) {
            return Err("matrix rows must be non-empty and equally long".into());
        }
        if nrows != 2 * self.mode_labels.len() {
            return Err(format!("{nrows} rows for {} mode labels", self.mode_labels.len()));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |r, c| {
            let [re, im] = self.rows[r][c];
            Complex64::new(re, im)
        }))
    }

    pub fn read(path: &Path) -> Result<(DMatrix<Complex64>, Vec<String>)> {
        let rec: TruthRecord = super::read_json(path)?;
        let m = rec.to_matrix().map_err(|msg| Error::format(path, msg))?;
        Ok((m, rec.mode_labels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    /// `[[re_x, im_x], [re_y, im_y]]`.
    pub jones: [[f64; 2]; 2],
    pub carrier: SpatialFrequency,
    pub phase0: f64,
}

impl From<&ReferenceBeam> for ReferenceRecord {
    fn from(r: &ReferenceBeam) -> Self {
        ReferenceRecord {
            jones: r.jones.map(|c| [c.re, c.im]),
            carrier: r.carrier,
            phase0: r.phase0,
        }
    }
}

impl ReferenceRecord {
    fn to_beam(self) -> Result<ReferenceBeam> {
        ReferenceBeam::new(
            self.jones.map(|[re, im]| Complex64::new(re, im)),
            self.carrier,
            self.phase0,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRecord {
    pub variant: SchemeVariant,
    /// One beam for the spatial scheme, `[R_X, R_Y]` for the angular one.
    pub references: Vec<ReferenceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_carrier_separation_bins: Option<f64>,
}

impl From<&SchemeConfig> for SchemeRecord {
    fn from(s: &SchemeConfig) -> Self {
        SchemeRecord {
            variant: s.variant(),
            references: s.references().into_iter().map(ReferenceRecord::from).collect(),
            min_carrier_separation_bins: match s {
                SchemeConfig::Angular {
                    min_carrier_separation_bins,
                    ..
                } => Some(*min_carrier_separation_bins),
                SchemeConfig::Spatial { .. } => None,
            },
        }
    }
}

impl SchemeRecord {
    pub fn to_scheme(&self) -> Result<SchemeConfig> {
        match (self.variant, self.references.as_slice()) {
            (SchemeVariant::Spatial, [r]) => Ok(SchemeConfig::Spatial {
                reference: r.to_beam()?,
            }),
            (SchemeVariant::Angular, [rx, ry]) => Ok(SchemeConfig::Angular {
                rx: rx.to_beam()?,
                ry: ry.to_beam()?,
                min_carrier_separation_bins: self
                    .min_carrier_separation_bins
                    .unwrap_or(crate::synth::DEFAULT_MIN_CARRIER_SEPARATION_BINS),
            }),
            (v, refs) => Err(Error::Config(format!("{v} scheme with {} reference beams", refs.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub w0: f64,
    pub center: [f64; 2],
    pub group_map: Vec<usize>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub port: usize,
    pub pol: Polarization,
}

pub fn frame_file_name(ex: Excitation) -> String {
    format!("frame_p{}_{}.pgm", ex.port, ex.pol)
}

/// Written by `synth` next to the frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub format_version: u32,
    pub grid: Grid2D,
    pub wavelength: f64,
    pub scheme: SchemeRecord,
    pub bit_depth: u8,
    pub full_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub ports: usize,
    pub basis: BasisRecord,
    pub frames: Vec<FrameEntry>,
    pub truth_file: Option<String>,
    pub warnings: Vec<String>,
}

impl FrameManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let m: FrameManifest = super::read_json(&path)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::format(
                &path,
                format!("unsupported format version {}", m.format_version),
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub port: usize,
    pub pol: Polarization,
    pub x_file: String,
    pub y_file: String,
}

/// Field file for output polarization `out` of input `ex`.
pub fn field_file_name(ex: Excitation, out: Polarization) -> String {
    format!("field_p{}_{}_out{}.cfld", ex.port, ex.pol, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub file: String,
    pub port: usize,
    pub pol: Polarization,
    pub error: String,
}

/// Written by `recon` next to the field files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconManifest {
    pub format_version: u32,
    pub source: FrameManifest,
    /// Variant the frames were processed with.
    pub processed_as: SchemeVariant,
    pub field_grid: Grid2D,
    /// Fields are divided by the reference factor.
    pub normalized: bool,
    pub fields: Vec<FieldEntry>,
    pub failures: Vec<FrameFailure>,
}

impl ReconManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(RECON_MANIFEST_FILE);
        let m: ReconManifest = super::read_json(&path)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::format(
                &path,
                format!("unsupported format version {}", m.format_version),
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidebands {
    pub file: String,
    pub port: usize,
    pub pol: Polarization,
    pub sidebands: Vec<SidebandRecord>,
    pub warnings: Vec<Warning>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_round_trip_is_bit_exact() {
        let m = DMatrix::from_fn(6, 6, |r, c| {
            Complex64::new((r as f64 + 0.1).sqrt() / 3.0, -(c as f64).exp() * 1e-7)
        });
        let rec = TruthRecord::from_matrix(&m, vec!["a".into(), "b".into(), "c".into()]);
        let text = serde_json::to_string(&rec).unwrap();
        let back: TruthRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn scheme_round_trip() {
        let g = Grid2D::square(64, 20e-6).unwrap();
        for s in [
            SchemeConfig::spatial_default(&g, 0.3).unwrap(),
            SchemeConfig::angular_default(&g, 0.3, 84.0).unwrap(),
        ] {
            let rec = SchemeRecord::from(&s);
            let text = serde_json::to_string(&rec).unwrap();
            let back: SchemeRecord = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_scheme().unwrap(), s);
        }
    }

    #[test]
    fn file_names() {
        let ex = Excitation {
            port: 2,
            pol: Polarization::Y,
        };
        assert_eq!(frame_file_name(ex), "frame_p2_Y.pgm");
        assert_eq!(field_file_name(ex, Polarization::X), "field_p2_Y_outX.cfld");
    }
}
