//! TOML run configuration.
//!
//! Every section is optional. Lengths are in meters, frequencies derived from
//! bin counts refer to the full camera frame.
//!
//! ```toml
//! seed = 1
//! wavelength = 1.55e-6
//!
//! [grid]
//! nx = 256
//! ny = 256
//! pitch = 20e-6
//!
//! [basis]
//! w0 = 5.12e-4            # default 0.4 * quarter frame width
//! center = [0.0, 0.0]
//! group_map = [0, 1, 1]
//!
//! [device]
//! truth = "truth.json"    # or a [device.design] table
//!
//! [scheme]
//! variant = "spatial"
//! relative_angle_deg = 90.0
//!
//! [camera]
//! bit_depth = 12
//! noise_fraction = 0.0
//!
//! [recon]
//! carrier_source = "configured"
//!
//! [pipeline]
//! schemes = ["spatial", "angular"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::TargetGroups;
use crate::design::DeviceDesign;
use crate::error::{Error, Result};
use crate::field::{Grid2D, SpatialFrequency};
use crate::modes::ModeGroupMap;
use crate::recon::{CarrierSource, ReconConfig, DEFAULT_DETECTION_DB};
use crate::synth::{ReferenceBeam, SchemeConfig, SchemeVariant, DEFAULT_MIN_CARRIER_SEPARATION_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub wavelength: f64,
    pub grid: GridSection,
    pub basis: BasisSection,
    pub device: DeviceSection,
    pub scheme: SchemeSection,
    pub camera: CameraSection,
    pub recon: ReconSection,
    pub analysis: AnalysisSection,
    pub pipeline: PipelineSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            wavelength: 1.55e-6,
            grid: GridSection::default(),
            basis: BasisSection::default(),
            device: DeviceSection::default(),
            scheme: SchemeSection::default(),
            camera: CameraSection::default(),
            recon: ReconSection::default(),
            analysis: AnalysisSection::default(),
            pipeline: PipelineSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    /// Overrides `pitch` along y.
    pub pitch_y: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            nx: 256,
            ny: 256,
            pitch: 20e-6,
            pitch_y: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub w0: Option<f64>,
    pub center: [f64; 2],
    pub group_map: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSection {
    /// Truth-matrix JSON file.
    pub truth: Option<PathBuf>,
    pub design: Option<DesignSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub mdl_db: f64,
    pub xt_db: f64,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            mdl_db: 1.50,
            xt_db: -14.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub variant: SchemeVariant,
    /// Per-polarization reference amplitude; automatic when absent.
    pub reference_amplitude: Option<f64>,
    /// Angle of `R_Y` relative to `R_X`, degrees.
    pub relative_angle_deg: f64,
    /// Hologram carrier in frame bins; `R_Y` mirrors it in x.
    pub carrier_bins: Option<[f64; 2]>,
    pub min_carrier_separation_bins: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            variant: SchemeVariant::Spatial,
            reference_amplitude: None,
            relative_angle_deg: 90.0,
            carrier_bins: None,
            min_carrier_separation_bins: DEFAULT_MIN_CARRIER_SEPARATION_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub bit_depth: u8,
    /// Automatic (peak intensity times `headroom`) when absent.
    pub full_scale: Option<f64>,
    pub headroom: f64,
    /// Absolute noise standard deviation in intensity units.
    pub noise_sigma: Option<f64>,
    /// Noise standard deviation as a fraction of full scale.
    pub noise_fraction: Option<f64>,
}

impl Default for CameraSection {
    fn default() -> Self {
        CameraSection {
            bit_depth: 12,
            full_scale: None,
            headroom: 1.1,
            noise_sigma: None,
            noise_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconSection {
    /// Frame bins; default `nx / 16`.
    pub dc_exclusion_bins: Option<f64>,
    /// Frame bins; default `nx / 10`.
    pub crop_radius_bins: Option<f64>,
    pub carrier_source: CarrierSource,
    pub normalize: bool,
    pub detection_db: f64,
}

impl Default for ReconSection {
    fn default() -> Self {
        ReconSection {
            dc_exclusion_bins: None,
            crop_radius_bins: None,
            carrier_source: CarrierSource::Configured,
            normalize: true,
            detection_db: DEFAULT_DETECTION_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Fixed target group per port; dominant group when absent.
    pub targets: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub schemes: Vec<SchemeVariant>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            schemes: SchemeVariant::BOTH.to_vec(),
        }
    }
}

/// Where the device under test comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceSource {
    Truth(PathBuf),
    Design(DeviceDesign),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        RunConfig::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return bad(format!("wavelength {} must be positive", self.wavelength));
        }
        let grid = self.frame_grid()?;
        if grid.nx() % 4 != 0 {
            return bad(format!("grid.nx = {} must be divisible by 4", grid.nx()));
        }
        if let Some(w0) = self.basis.w0 {
            if !(w0.is_finite() && w0 > 0.0) {
                return bad(format!("basis.w0 = {w0} must be positive"));
            }
        }
        if let Some(g) = &self.basis.group_map {
            ModeGroupMap::new(g.clone()).map_err(|e| Error::Config(format!("basis.group_map: {e}")))?;
        }
        if self.device.truth.is_some() && self.device.design.is_some() {
            return bad("device.truth and device.design are mutually exclusive".into());
        }
        if let Some(a) = self.scheme.reference_amplitude {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("scheme.reference_amplitude = {a} must be positive"));
            }
        }
        if !(8..=16).contains(&self.camera.bit_depth) {
            return bad(format!("camera.bit_depth = {} outside [8, 16]", self.camera.bit_depth));
        }
        if let Some(fs) = self.camera.full_scale {
            if !(fs.is_finite() && fs > 0.0) {
                return bad(format!("camera.full_scale = {fs} must be positive"));
            }
        }
        if !(self.camera.headroom.is_finite() && self.camera.headroom >= 1.0) {
            return bad(format!("camera.headroom = {} must be >= 1", self.camera.headroom));
        }
        if self.camera.noise_sigma.is_some() && self.camera.noise_fraction.is_some() {
            return bad("camera.noise_sigma and camera.noise_fraction are mutually exclusive".into());
        }
        for (name, v) in [
            ("noise_sigma", self.camera.noise_sigma),
            ("noise_fraction", self.camera.noise_fraction),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return bad(format!("camera.{name} = {v} must be >= 0"));
                }
            }
        }
        if self.pipeline.schemes.is_empty() {
            return bad("pipeline.schemes is empty".into());
        }
        Ok(())
    }

    pub fn frame_grid(&self) -> Result<Grid2D> {
        let g = &self.grid;
        Grid2D::new(g.nx, g.ny, g.pitch, g.pitch_y.unwrap_or(g.pitch)).map_err(|e| Error::Config(e.to_string()))
    }

    /// Configured waist, or 0.4 of a quarter of the frame width.
    pub fn waist(&self) -> Result<f64> {
        let g = self.frame_grid()?;
        Ok(self.basis.w0.unwrap_or(0.4 * g.extent_x() / 4.0))
    }

    pub fn group_map(&self) -> Result<ModeGroupMap> {
        match &self.basis.group_map {
            Some(g) => ModeGroupMap::new(g.clone()),
            None => Ok(ModeGroupMap::lp_default()),
        }
    }

    pub fn targets(&self) -> TargetGroups {
        match &self.analysis.targets {
            Some(t) => TargetGroups::Fixed(t.clone()),
            None => TargetGroups::Dominant,
        }
    }

    pub fn device_source(&self) -> Result<DeviceSource> {
        if let Some(p) = &self.device.truth {
            return Ok(DeviceSource::Truth(self.resolve(p)));
        }
        let d = self.device.design.clone().unwrap_or_default();
        Ok(DeviceSource::Design(DeviceDesign {
            modes: 3,
            mdl_db: d.mdl_db,
            xt_db: d.xt_db,
            seed: d.seed.unwrap_or(self.seed),
            group_map: self.group_map()?,
        }))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Scheme of `variant` with per-polarization reference amplitude `amplitude`.
    pub fn scheme_config(&self, variant: SchemeVariant, frame: &Grid2D, amplitude: f64) -> Result<SchemeConfig> {
        let frame = *frame;
        let s = &self.scheme;
        let [kx, ky] = s
            .carrier_bins
            .unwrap_or([frame.nx() as f64 / 8.0, frame.ny() as f64 / 8.0]);
        let scheme = match variant {
            SchemeVariant::Spatial => SchemeConfig::Spatial {
                reference: ReferenceBeam::new(
                    [num_complex::Complex64::new(amplitude, 0.0); 2],
                    SpatialFrequency::from_bins(&frame, kx, ky),
                    0.0,
                )?,
            },
            SchemeVariant::Angular => SchemeConfig::Angular {
                rx: ReferenceBeam::linear(amplitude, 0.0, SpatialFrequency::from_bins(&frame, kx, ky))?,
                ry: ReferenceBeam::linear(
                    amplitude,
                    s.relative_angle_deg,
                    SpatialFrequency::from_bins(&frame, -kx, ky),
                )?,
                min_carrier_separation_bins: s.min_carrier_separation_bins,
            },
        };
        scheme.validate(&frame)?;
        Ok(scheme)
    }

    pub fn recon_config(&self, scheme: &SchemeConfig, frame: &Grid2D) -> Result<ReconConfig> {
        let frame = *frame;
        let r = &self.recon;
        let base = ReconConfig::for_scheme(scheme, &frame);
        let dc = r.dc_exclusion_bins.unwrap_or(frame.nx() as f64 / 16.0);
        let crop = r.crop_radius_bins.unwrap_or(frame.nx() as f64 / 10.0);
        let cfg = ReconConfig {
            carrier_source: r.carrier_source,
            normalize: r.normalize,
            detection_db: r.detection_db,
            ..base.with_radii_bins(&frame, dc, crop)
        };
        cfg.validate(&scheme.recon_grid(&frame)?)?;
        cfg.check_geometry(scheme)?;
        Ok(cfg)
    }
}
