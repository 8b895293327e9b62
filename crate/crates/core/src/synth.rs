//! Camera frames for the two polarization-diversity setups.
//!
//! Intensity is always the squared norm of the total Jones vector,
//! `|S_x + R_x|^2 + |S_y + R_y|^2`, so imperfectly orthogonal references beat
//! with each other without any special casing.
//!
//! A reference beam with hologram carrier `f` is the field
//! `jones * exp(-i (2 pi f.r + phase0))`, which puts the `S R*` term at `+f`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Polarization, Result, Warning};
use crate::field::{plane_wave, ComplexField, Grid2D, JonesField, SpatialFrequency};
use crate::modes::ModeBasis;

/// Ground-truth device: a `(2M) x (2P)` matrix from (port, input pol) to (mode, output pol).
///
/// Rows are mode-major with X before Y, so output `(mode, pol)` is row
/// `2 mode + pol`. Columns follow the same pattern over ports: input
/// `(p, pol)` is column `2p + pol`. The identity is then the device that sends
/// every port to its own mode without changing polarization.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    truth: DMatrix<Complex64>,
    basis: ModeBasis,
}

impl DeviceModel {
    pub fn new(truth: DMatrix<Complex64>, basis: ModeBasis) -> Result<Self> {
        if truth.nrows() != 2 * basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "truth matrix has {} rows; a {}-mode basis needs {}",
                truth.nrows(),
                basis.len(),
                2 * basis.len()
            )));
        }
        if truth.ncols() == 0 || !truth.ncols().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "truth matrix has {} columns; expected 2 per port",
                truth.ncols()
            )));
        }
        if truth.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("truth matrix has non-finite entries".into()));
        }
        Ok(DeviceModel { truth, basis })
    }

    pub fn truth(&self) -> &DMatrix<Complex64> {
        &self.truth
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn ports(&self) -> usize {
        self.truth.ncols() / 2
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }
}

/// One device input: a port driven in one polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Excitation {
    pub port: usize,
    pub pol: Polarization,
}

impl Excitation {
    pub fn column(&self) -> usize {
        2 * self.port + self.pol.index()
    }
}

/// All inputs in frame order: port-major, X before Y.
pub fn excitations(ports: usize) -> Vec<Excitation> {
    (0..ports)
        .flat_map(|port| Polarization::BOTH.map(|pol| Excitation { port, pol }))
        .collect()
}

pub fn synth_output_field(device: &DeviceModel, port: usize, pol: Polarization) -> Result<JonesField> {
    if port >= device.ports() {
        return Err(Error::IndexOutOfRange(format!(
            "port {port} of a {}-port device",
            device.ports()
        )));
    }
    let col = device.truth.column(Excitation { port, pol }.column());
    let m = device.modes();
    let cx: Vec<Complex64> = (0..m).map(|k| col[2 * k]).collect();
    let cy: Vec<Complex64> = (0..m).map(|k| col[2 * k + 1]).collect();
    JonesField::new(device.basis.synthesize(&cx)?, device.basis.synthesize(&cy)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBeam {
    /// Complex (X, Y) amplitudes.
    pub jones: [Complex64; 2],
    /// Where this beam's `S R*` hologram appears in the angular domain.
    pub carrier: SpatialFrequency,
    pub phase0: f64,
}

impl ReferenceBeam {
    pub fn new(jones: [Complex64; 2], carrier: SpatialFrequency, phase0: f64) -> Result<Self> {
        let norm = jones.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("reference Jones vector must be nonzero".into()));
        }
        if !(carrier.fx.is_finite() && carrier.fy.is_finite() && phase0.is_finite()) {
            return Err(Error::InvalidArgument(
                "reference carrier and phase must be finite".into(),
            ));
        }
        Ok(ReferenceBeam { jones, carrier, phase0 })
    }

    /// Linearly polarized at `angle_deg` from the X axis.
    pub fn linear(amplitude: f64, angle_deg: f64, carrier: SpatialFrequency) -> Result<Self> {
        let (s, c) = snapped_sin_cos(angle_deg);
        ReferenceBeam::new(
            [Complex64::new(amplitude * c, 0.0), Complex64::new(amplitude * s, 0.0)],
            carrier,
            0.0,
        )
    }

    /// One polarization component of the beam sampled on `grid`.
    pub fn component(&self, grid: Grid2D, pol: Polarization) -> Result<ComplexField> {
        let tilt = plane_wave(grid, 1.0, self.carrier, self.phase0)?;
        Ok(tilt.map(|t| t.conj() * self.jones[pol.index()]))
    }

    /// Factor multiplying `S_pol` in the hologram of this beam: `conj(jones_pol) * e^{i phase0}`.
    pub fn hologram_factor(&self, pol: Polarization) -> Complex64 {
        self.jones[pol.index()].conj() * Complex64::from_polar(1.0, self.phase0)
    }
}

// exact zeros at multiples of 90 degrees
fn snapped_sin_cos(angle_deg: f64) -> (f64, f64) {
    let quarter = angle_deg / 90.0;
    if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle_deg.to_radians().sin_cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeVariant {
    Spatial,
    Angular,
}

impl SchemeVariant {
    pub const BOTH: [SchemeVariant; 2] = [SchemeVariant::Spatial, SchemeVariant::Angular];

    pub fn name(self) -> &'static str {
        match self {
            SchemeVariant::Spatial => "spatial",
            SchemeVariant::Angular => "angular",
        }
    }
}

impl fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(SchemeVariant::Spatial),
            "angular" => Ok(SchemeVariant::Angular),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected spatial or angular)"
            ))),
        }
    }
}

pub const DEFAULT_MIN_CARRIER_SEPARATION_BINS: f64 = 8.0;

/// Optical layout of the polarization-diversity measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeConfig {
    /// Ideal Wollaston split: X lands on the left half of the camera, Y on the
    /// right. One reference, whose X and Y components serve the two halves.
    Spatial { reference: ReferenceBeam },
    /// Both polarizations on the full camera with two references at distinct carriers.
    Angular {
        rx: ReferenceBeam,
        ry: ReferenceBeam,
        min_carrier_separation_bins: f64,
    },
}

impl SchemeConfig {
    /// Reference along the 45 degree diagonal with amplitude `amplitude` per
    /// polarization and carrier `(nx/8, ny/8)` frame bins.
    pub fn spatial_default(frame: &Grid2D, amplitude: f64) -> Result<Self> {
        let carrier = SpatialFrequency::from_bins(frame, frame.nx() as f64 / 8.0, frame.ny() as f64 / 8.0);
        let a = Complex64::new(amplitude, 0.0);
        Ok(SchemeConfig::Spatial {
            reference: ReferenceBeam::new([a, a], carrier, 0.0)?,
        })
    }

    /// `R_X` along X at `(nx/8, ny/8)` bins, `R_Y` at `relative_angle_deg`
    /// from `R_X` with carrier `(-nx/8, ny/8)` bins.
    pub fn angular_default(frame: &Grid2D, amplitude: f64, relative_angle_deg: f64) -> Result<Self> {
        let (kx, ky) = (frame.nx() as f64 / 8.0, frame.ny() as f64 / 8.0);
        Ok(SchemeConfig::Angular {
            rx: ReferenceBeam::linear(amplitude, 0.0, SpatialFrequency::from_bins(frame, kx, ky))?,
            ry: ReferenceBeam::linear(
                amplitude,
                relative_angle_deg,
                SpatialFrequency::from_bins(frame, -kx, ky),
            )?,
            min_carrier_separation_bins: DEFAULT_MIN_CARRIER_SEPARATION_BINS,
        })
    }

    pub fn default_for(variant: SchemeVariant, frame: &Grid2D, amplitude: f64) -> Result<Self> {
        match variant {
            SchemeVariant::Spatial => SchemeConfig::spatial_default(frame, amplitude),
            SchemeVariant::Angular => SchemeConfig::angular_default(frame, amplitude, 90.0),
        }
    }

    pub fn variant(&self) -> SchemeVariant {
        match self {
            SchemeConfig::Spatial { .. } => SchemeVariant::Spatial,
            SchemeConfig::Angular { .. } => SchemeVariant::Angular,
        }
    }

    pub fn references(&self) -> Vec<&ReferenceBeam> {
        match self {
            SchemeConfig::Spatial { reference } => vec![reference],
            SchemeConfig::Angular { rx, ry, .. } => vec![rx, ry],
        }
    }

    /// The beam whose hologram carries polarization `pol`.
    pub fn reference_for(&self, pol: Polarization) -> &ReferenceBeam {
        match (self, pol) {
            (SchemeConfig::Spatial { reference }, _) => reference,
            (SchemeConfig::Angular { rx, .. }, Polarization::X) => rx,
            (SchemeConfig::Angular { ry, .. }, Polarization::Y) => ry,
        }
    }

    pub fn hologram_carrier(&self, pol: Polarization) -> SpatialFrequency {
        self.reference_for(pol).carrier
    }

    pub fn hologram_factor(&self, pol: Polarization) -> Complex64 {
        self.reference_for(pol).hologram_factor(pol)
    }

    /// Grid on which fields are recovered: a Wollaston half-region for the
    /// spatial scheme, the whole frame for the angular one.
    pub fn recon_grid(&self, frame: &Grid2D) -> Result<Grid2D> {
        match self {
            SchemeConfig::Spatial { .. } => {
                if !frame.nx().is_multiple_of(4) {
                    return Err(Error::InvalidGrid(format!(
                        "spatial scheme needs nx divisible by 4, got {}",
                        frame.nx()
                    )));
                }
                frame.with_size(frame.nx() / 2, frame.ny())
            }
            SchemeConfig::Angular { .. } => Ok(*frame),
        }
    }

    pub fn validate(&self, frame: &Grid2D) -> Result<()> {
        let grid = self.recon_grid(frame)?;
        for r in self.references() {
            if !grid.is_below_nyquist(r.carrier) {
                return Err(Error::AliasedCarrier {
                    fx: r.carrier.fx,
                    fy: r.carrier.fy,
                    nyquist_x: grid.nyquist_x(),
                    nyquist_y: grid.nyquist_y(),
                });
            }
        }
        if let SchemeConfig::Angular {
            rx,
            ry,
            min_carrier_separation_bins,
        } = self
        {
            let (bx, by) = frame.bins_of(rx.carrier - ry.carrier);
            let sep = bx.hypot(by);
            if sep < *min_carrier_separation_bins {
                return Err(Error::Config(format!(
                    "reference carriers are {sep:.2} bins apart; at least {min_carrier_separation_bins} required"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub bit_depth: u8,
    /// Intensity mapped to the top code.
    pub full_scale: f64,
    /// Standard deviation of additive Gaussian intensity noise; 0 disables it.
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl CameraModel {
    pub const DEFAULT_BIT_DEPTH: u8 = 12;

    pub fn new(bit_depth: u8, full_scale: f64, noise_sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(8..=16).contains(&bit_depth) {
            return Err(Error::InvalidArgument(format!("bit depth {bit_depth} outside [8, 16]")));
        }
        if !(full_scale.is_finite() && full_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "full scale {full_scale} must be positive"
            )));
        }
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma {noise_sigma} must be >= 0"
            )));
        }
        Ok(CameraModel {
            bit_depth,
            full_scale,
            noise_sigma,
            rng_seed,
        })
    }

    pub fn max_code(&self) -> u16 {
        max_code(self.bit_depth)
    }

    /// Half a quantization step in intensity units.
    pub fn quantization_bound(&self) -> f64 {
        self.full_scale / f64::from(self.max_code()) / 2.0
    }
}

fn max_code(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// Quantized intensity image as recorded by the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    grid: Grid2D,
    bit_depth: u8,
    full_scale: f64,
    codes: Vec<u16>,
}

impl CameraFrame {
    pub fn new(grid: Grid2D, bit_depth: u8, full_scale: f64, codes: Vec<u16>) -> Result<Self> {
        CameraModel::new(bit_depth, full_scale, 0.0, 0)?;
        if codes.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} codes for a {}x{} frame",
                codes.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        let top = max_code(bit_depth);
        if let Some(c) = codes.iter().find(|&&c| c > top) {
            return Err(Error::InvalidArgument(format!(
                "code {c} exceeds the {bit_depth}-bit maximum {top}"
            )));
        }
        Ok(CameraFrame {
            grid,
            bit_depth,
            full_scale,
            codes,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn full_scale(&self) -> f64 {
        self.full_scale
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    /// Codes converted back to intensity units.
    pub fn intensity(&self) -> Vec<f64> {
        let step = self.full_scale() / f64::from(max_code(self.bit_depth));
        self.codes.iter().map(|&c| f64::from(c) * step).collect()
    }

    /// Left and right halves, each on its own `(nx/2) x ny` grid.
    pub fn split_halves(&self) -> Result<(CameraFrame, CameraFrame)> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let half = self.grid.with_size(nx / 2, ny)?;
        let mut left = Vec::with_capacity(half.len());
        let mut right = Vec::with_capacity(half.len());
        for row in self.codes.chunks_exact(nx) {
            left.extend_from_slice(&row[..nx / 2]);
            right.extend_from_slice(&row[nx / 2..]);
        }
        let fs = self.full_scale();
        Ok((
            CameraFrame::new(half, self.bit_depth, fs, left)?,
            CameraFrame::new(half, self.bit_depth, fs, right)?,
        ))
    }
}

/// Noise-free, unquantized intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

pub fn render_intensity(signal: &JonesField, scheme: &SchemeConfig) -> Result<IntensityImage> {
    let frame = *signal.grid();
    scheme.validate(&frame)?;
    let values = match scheme {
        SchemeConfig::Angular { rx, ry, .. } => {
            let mut values = vec![0.0; frame.len()];
            for pol in Polarization::BOTH {
                let reference = rx.component(frame, pol)?.add(&ry.component(frame, pol)?)?;
                let total = signal.component(pol).add(&reference)?;
                for (v, s) in values.iter_mut().zip(total.samples()) {
                    *v += s.norm_sqr();
                }
            }
            values
        }
        SchemeConfig::Spatial { reference } => {
            let half = scheme.recon_grid(&frame)?;
            let (nx, hx) = (frame.nx(), half.nx());
            let offset = nx / 4;
            let mut values = vec![0.0; frame.len()];
            for (pol, col0) in [(Polarization::X, 0), (Polarization::Y, hx)] {
                let r = reference.component(half, pol)?;
                let s = signal.component(pol);
                for iy in 0..frame.ny() {
                    for u in 0..hx {
                        let total = s.get(u + offset, iy) + r.get(u, iy);
                        values[iy * nx + col0 + u] = total.norm_sqr();
                    }
                }
            }
            values
        }
    };
    Ok(IntensityImage { grid: frame, values })
}

/// Spatial-scheme signal as seen on the half-region grid (ideal Wollaston shift).
pub fn wollaston_view(signal: &JonesField) -> Result<JonesField> {
    let frame = *signal.grid();
    if !frame.nx().is_multiple_of(4) {
        return Err(Error::InvalidGrid("nx must be divisible by 4".into()));
    }
    let half = frame.with_size(frame.nx() / 2, frame.ny())?;
    let offset = frame.nx() / 4;
    let cut = |f: &ComplexField| -> Result<ComplexField> {
        let mut out = Vec::with_capacity(half.len());
        for iy in 0..frame.ny() {
            for u in 0..half.nx() {
                out.push(f.get(u + offset, iy));
            }
        }
        ComplexField::new(half, out)
    };
    JonesField::new(cut(signal.x())?, cut(signal.y())?)
}

#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub frame: CameraFrame,
    pub clipped_fraction: f64,
    pub warnings: Vec<Warning>,
}

pub fn render_frame(signal: &JonesField, scheme: &SchemeConfig, camera: &CameraModel) -> Result<RenderedFrame> {
    let image = render_intensity(signal, scheme)?;
    let top = camera.max_code();
    let gain = f64::from(top) / camera.full_scale;

    let mut noise = if camera.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, camera.noise_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Some((ChaCha8Rng::seed_from_u64(camera.rng_seed), normal))
    } else {
        None
    };

    let mut clipped = 0usize;
    let codes = image
        .values
        .iter()
        .map(|&v| {
            let v = match noise.as_mut() {
                Some((rng, normal)) => v + normal.sample(rng),
                None => v,
            };
            let code = (v * gain).round();
            if code < 0.0 || code > f64::from(top) {
                clipped += 1;
            }
            code.clamp(0.0, f64::from(top)) as u16
        })
        .collect();

    let clipped_fraction = clipped as f64 / image.values.len() as f64;
    let mut warnings = Vec::new();
    if clipped_fraction > 0.01 {
        warnings.push(Warning::Saturation { clipped_fraction });
    }
    Ok(RenderedFrame {
        frame: CameraFrame::new(image.grid, camera.bit_depth, camera.full_scale, codes)?,
        clipped_fraction,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct Measurement {
    /// Frames in excitation order.
    pub frames: Vec<(Excitation, CameraFrame)>,
    pub warnings: Vec<(Excitation, Warning)>,
}

/// Renders one frame per input, seeding frame `i` with `rng_seed ^ i`.
pub fn simulate_measurement(device: &DeviceModel, scheme: &SchemeConfig, camera: &CameraModel) -> Result<Measurement> {
    scheme.validate(device.basis().grid())?;
    let rendered = excitations(device.ports())
        .into_par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let signal = synth_output_field(device, ex.port, ex.pol)?;
            let cam = CameraModel {
                rng_seed: camera.rng_seed ^ i as u64,
                ..*camera
            };
            Ok((ex, render_frame(&signal, scheme, &cam)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut frames = Vec::with_capacity(rendered.len());
    let mut warnings = Vec::new();
    for (ex, r) in rendered {
        warnings.extend(r.warnings.into_iter().map(|w| (ex, w)));
        frames.push((ex, r.frame));
    }
    Ok(Measurement { frames, warnings })
}

/// RMS amplitude of one polarization component of the device output, over
/// the camera region that component lands on, averaged over all inputs.
pub fn auto_reference_amplitude(device: &DeviceModel, variant: SchemeVariant) -> Result<f64> {
    let grid = device.basis().grid();
    let pixels = match variant {
        SchemeVariant::Spatial => grid.len() / 2,
        SchemeVariant::Angular => grid.len(),
    } as f64;
    let inputs = excitations(device.ports());
    let mut total = 0.0;
    for ex in &inputs {
        let f = synth_output_field(device, ex.port, ex.pol)?;
        total += f.power() / grid.pixel_area();
    }
    let mean_sq = total / (2.0 * inputs.len() as f64 * pixels);
    if mean_sq.is_nan() || mean_sq <= 0.0 {
        return Err(Error::InvalidArgument(
            "device output is dark; set the reference amplitude explicitly".into(),
        ));
    }
    Ok(mean_sq.sqrt())
}

/// Peak noise-free intensity over all inputs, times `headroom`.
pub fn auto_full_scale(device: &DeviceModel, scheme: &SchemeConfig, headroom: f64) -> Result<f64> {
    let peak = excitations(device.ports())
        .into_par_iter()
        .map(|ex| {
            let signal = synth_output_field(device, ex.port, ex.pol)?;
            let image = render_intensity(&signal, scheme)?;
            Ok(image.values.iter().copied().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidArgument("frames are dark; cannot set full scale".into()));
    }
    Ok(peak * headroom)
}

/// Carrier for a tilt of `angle_deg` along `direction_deg` at `wavelength`.
pub fn carrier_from_angle(angle_deg: f64, direction_deg: f64, wavelength: f64) -> SpatialFrequency {
    let f = angle_deg.to_radians().sin() / wavelength;
    let dir = direction_deg * PI / 180.0;
    SpatialFrequency::new(f * dir.cos(), f * dir.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_lp_basis;

    fn frame_grid() -> Grid2D {
        Grid2D::square(64, 20e-6).unwrap()
    }

    fn basis() -> ModeBasis {
        build_lp_basis(frame_grid(), 100e-6, (0.0, 0.0)).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_device_fields() {
        let dev = DeviceModel::new(DMatrix::identity(6, 6), basis()).unwrap();
        let f = synth_output_field(&dev, 0, Polarization::X).unwrap();
        assert_eq!(f.x(), &dev.basis().modes()[0]);
        assert_eq!(f.y().max_abs(), 0.0);
        let f = synth_output_field(&dev, 2, Polarization::Y).unwrap();
        assert_eq!(f.y(), &dev.basis().modes()[2]);
        assert_eq!(f.x().max_abs(), 0.0);
        assert!(synth_output_field(&dev, 3, Polarization::X).is_err());
    }

    #[test]
    fn single_entry_column_selects_mode() {
        let mut t = DMatrix::zeros(6, 6);
        t[(2, 0)] = c(1.0);
        let dev = DeviceModel::new(t, basis()).unwrap();
        let f = synth_output_field(&dev, 0, Polarization::X).unwrap();
        assert_eq!(f.x(), &dev.basis().modes()[1]);
    }

    #[test]
    fn device_shape_checks() {
        assert!(DeviceModel::new(DMatrix::identity(4, 6), basis()).is_err());
        assert!(DeviceModel::new(DMatrix::identity(6, 5), basis()).is_err());
    }

    #[test]
    fn excitation_order() {
        let ex = excitations(2);
        let cols: Vec<_> = ex.iter().map(|e| (e.port, e.pol, e.column())).collect();
        assert_eq!(
            cols,
            [
                (0, Polarization::X, 0),
                (0, Polarization::Y, 1),
                (1, Polarization::X, 2),
                (1, Polarization::Y, 3)
            ]
        );
    }

    #[test]
    fn camera_validation() {
        assert!(CameraModel::new(7, 1.0, 0.0, 0).is_err());
        assert!(CameraModel::new(17, 1.0, 0.0, 0).is_err());
        assert!(CameraModel::new(12, 0.0, 0.0, 0).is_err());
        assert!(CameraModel::new(12, 1.0, -1.0, 0).is_err());
        assert_eq!(CameraModel::new(12, 1.0, 0.0, 0).unwrap().max_code(), 4095);
        assert_eq!(CameraModel::new(16, 1.0, 0.0, 0).unwrap().max_code(), 65535);
    }

    #[test]
    fn zero_signal_gives_reference_only_frame() {
        let g = frame_grid();
        let scheme = SchemeConfig::angular_default(&g, 1.5, 90.0).unwrap();
        let img = render_intensity(&JonesField::zeros(g), &scheme).unwrap();
        for v in img.values {
            assert!((v - 2.0 * 1.5 * 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn two_beam_fringe_extremes() {
        let g = frame_grid();
        let a = 0.7;
        let scheme = SchemeConfig::Angular {
            rx: ReferenceBeam::linear(a, 0.0, SpatialFrequency::from_bins(&g, 8.0, 0.0)).unwrap(),
            ry: ReferenceBeam::linear(1e-9, 90.0, SpatialFrequency::from_bins(&g, -8.0, 8.0)).unwrap(),
            min_carrier_separation_bins: 8.0,
        };
        let sx = ComplexField::from_fn(g, |_, _| c(a));
        let signal = JonesField::new(sx, ComplexField::zeros(g)).unwrap();
        let img = render_intensity(&signal, &scheme).unwrap();
        let max = img.values.iter().copied().fold(f64::MIN, f64::max);
        let min = img.values.iter().copied().fold(f64::MAX, f64::min);
        assert!((max - 4.0 * a * a).abs() < 1e-12);
        assert!(min.abs() < 1e-12);
    }

    #[test]
    fn quantization_error_is_bounded() {
        let g = frame_grid();
        let dev = DeviceModel::new(DMatrix::identity(6, 6), basis()).unwrap();
        let amp = auto_reference_amplitude(&dev, SchemeVariant::Angular).unwrap();
        let scheme = SchemeConfig::angular_default(&g, amp, 90.0).unwrap();
        let fs = auto_full_scale(&dev, &scheme, 1.1).unwrap();
        let cam = CameraModel::new(12, fs, 0.0, 0).unwrap();
        let signal = synth_output_field(&dev, 1, Polarization::X).unwrap();
        let exact = render_intensity(&signal, &scheme).unwrap();
        let r = render_frame(&signal, &scheme, &cam).unwrap();
        assert_eq!(r.clipped_fraction, 0.0);
        let bound = cam.quantization_bound() * (1.0 + 1e-9);
        for (q, v) in r.frame.intensity().iter().zip(&exact.values) {
            assert!((q - v).abs() <= bound);
        }
    }

    #[test]
    fn saturation_warning() {
        let g = frame_grid();
        let scheme = SchemeConfig::angular_default(&g, 1.0, 90.0).unwrap();
        let cam = CameraModel::new(12, 1.0, 0.0, 0).unwrap();
        let r = render_frame(&JonesField::zeros(g), &scheme, &cam).unwrap();
        assert_eq!(r.clipped_fraction, 1.0);
        assert!(matches!(r.warnings[..], [Warning::Saturation { .. }]));
    }

    #[test]
    fn carrier_separation_enforced() {
        let g = frame_grid();
        let f = SpatialFrequency::from_bins(&g, 8.0, 8.0);
        let scheme = SchemeConfig::Angular {
            rx: ReferenceBeam::linear(1.0, 0.0, f).unwrap(),
            ry: ReferenceBeam::linear(1.0, 90.0, f + SpatialFrequency::from_bins(&g, 3.0, 0.0)).unwrap(),
            min_carrier_separation_bins: 8.0,
        };
        assert!(matches!(scheme.validate(&g), Err(Error::Config(_))));
    }

    #[test]
    fn spatial_split_partitions_frame() {
        let g = frame_grid();
        let dev = DeviceModel::new(DMatrix::identity(6, 6), basis()).unwrap();
        let scheme = SchemeConfig::spatial_default(&g, 50.0).unwrap();
        let cam = CameraModel::new(12, 1e7, 0.0, 0).unwrap();
        let signal = synth_output_field(&dev, 0, Polarization::X).unwrap();
        let frame = render_frame(&signal, &scheme, &cam).unwrap().frame;
        let (l, r) = frame.split_halves().unwrap();
        assert_eq!(l.grid().nx() + r.grid().nx(), g.nx());
        let mut joined = Vec::new();
        for (a, b) in l.codes().chunks(32).zip(r.codes().chunks(32)) {
            joined.extend_from_slice(a);
            joined.extend_from_slice(b);
        }
        assert_eq!(joined, frame.codes());
        // Y is dark for this input, so the right half is the bare reference
        let first = r.codes()[0];
        assert!(r.codes().iter().all(|&c| c == first));
    }

    #[test]
    fn snapped_angles() {
        assert_eq!(snapped_sin_cos(90.0), (1.0, 0.0));
        assert_eq!(snapped_sin_cos(0.0), (0.0, 1.0));
        let (s, c) = snapped_sin_cos(84.0);
        assert!((c - 84f64.to_radians().cos()).abs() < 1e-15 && s > 0.99);
    }

    #[test]
    fn tilt_carrier_conversion() {
        let f = carrier_from_angle(0.5, 0.0, 1550e-9);
        assert!((f.fx - 0.5f64.to_radians().sin() / 1550e-9).abs() < 1e-9);
        assert!(f.fy.abs() < 1e-9);
    }
}
