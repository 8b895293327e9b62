//! Sampled complex optical fields and their centered, unitary angular spectra.
//!
//! Physical coordinates have their origin at pixel `(nx/2, ny/2)`, so for even
//! sizes `x = (ix - nx/2) * pitch_x`. The angular spectrum uses the same
//! convention: bin `kx` holds frequency `(kx - nx/2) / (nx * pitch_x)`.
//! Forward and inverse transforms are both scaled by `1/sqrt(nx*ny)`.

use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};

const MIN_GRID_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    pitch_x: f64,
    pitch_y: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    nx: usize,
    ny: usize,
    pitch_x: f64,
    pitch_y: f64,
}

impl TryFrom<RawGrid> for Grid2D {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid2D::new(raw.nx, raw.ny, raw.pitch_x, raw.pitch_y)
    }
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, pitch_x: f64, pitch_y: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < MIN_GRID_SIZE || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}; sizes must be even and at least {MIN_GRID_SIZE}"
                )));
            }
        }
        for (name, p) in [("pitch_x", pitch_x), ("pitch_y", pitch_y)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {p}; pitch must be positive and finite"
                )));
            }
        }
        Ok(Grid2D {
            nx,
            ny,
            pitch_x,
            pitch_y,
        })
    }

    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Grid2D::new(n, n, pitch, pitch)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pitch_x(&self) -> f64 {
        self.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.pitch_y
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch_x * self.pitch_y
    }

    pub fn extent_x(&self) -> f64 {
        self.nx as f64 * self.pitch_x
    }

    pub fn extent_y(&self) -> f64 {
        self.ny as f64 * self.pitch_y
    }

    /// Physical x coordinate of column `ix`.
    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.pitch_x
    }

    /// Physical y coordinate of row `iy`.
    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.pitch_y
    }

    /// Frequency bin spacing along x, in cycles/m.
    pub fn freq_step_x(&self) -> f64 {
        1.0 / self.extent_x()
    }

    pub fn freq_step_y(&self) -> f64 {
        1.0 / self.extent_y()
    }

    pub fn nyquist_x(&self) -> f64 {
        0.5 / self.pitch_x
    }

    pub fn nyquist_y(&self) -> f64 {
        0.5 / self.pitch_y
    }

    /// Frequency of spectrum bin `(kx, ky)`.
    pub fn freq(&self, kx: usize, ky: usize) -> SpatialFrequency {
        SpatialFrequency::new(
            (kx as f64 - (self.nx / 2) as f64) * self.freq_step_x(),
            (ky as f64 - (self.ny / 2) as f64) * self.freq_step_y(),
        )
    }

    /// Fractional bin offset of `f` from the DC bin.
    pub fn bins_of(&self, f: SpatialFrequency) -> (f64, f64) {
        (f.fx / self.freq_step_x(), f.fy / self.freq_step_y())
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn is_below_nyquist(&self, f: SpatialFrequency) -> bool {
        f.fx.abs() < self.nyquist_x() && f.fy.abs() < self.nyquist_y()
    }

    /// Same pitch, different pixel counts.
    pub fn with_size(&self, nx: usize, ny: usize) -> Result<Self> {
        Grid2D::new(nx, ny, self.pitch_x, self.pitch_y)
    }
}

/// Spatial frequency in cycles/m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialFrequency {
    pub fx: f64,
    pub fy: f64,
}

impl SpatialFrequency {
    pub const ZERO: SpatialFrequency = SpatialFrequency { fx: 0.0, fy: 0.0 };

    pub fn new(fx: f64, fy: f64) -> Self {
        SpatialFrequency { fx, fy }
    }

    /// Frequency sitting exactly on bin offset `(kx, ky)` from DC.
    pub fn from_bins(grid: &Grid2D, kx: f64, ky: f64) -> Self {
        SpatialFrequency::new(kx * grid.freq_step_x(), ky * grid.freq_step_y())
    }

    /// Carrier produced by a beam tilted by `(theta_x, theta_y)` radians: `f = sin(theta) / lambda`.
    pub fn from_tilt(theta_x: f64, theta_y: f64, wavelength: f64) -> Self {
        SpatialFrequency::new(theta_x.sin() / wavelength, theta_y.sin() / wavelength)
    }

    /// Tilt angles in degrees for the given wavelength.
    pub fn tilt_deg(&self, wavelength: f64) -> (f64, f64) {
        (
            (self.fx * wavelength).asin().to_degrees(),
            (self.fy * wavelength).asin().to_degrees(),
        )
    }

    pub fn norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

impl Add for SpatialFrequency {
    type Output = SpatialFrequency;
    fn add(self, o: Self) -> Self {
        SpatialFrequency::new(self.fx + o.fx, self.fy + o.fy)
    }
}

impl Sub for SpatialFrequency {
    type Output = SpatialFrequency;
    fn sub(self, o: Self) -> Self {
        SpatialFrequency::new(self.fx - o.fx, self.fy - o.fy)
    }
}

impl Neg for SpatialFrequency {
    type Output = SpatialFrequency;
    fn neg(self) -> Self {
        SpatialFrequency::new(-self.fx, -self.fy)
    }
}

/// Complex field sampled on a [`Grid2D`], row-major (`samples[iy * nx + ix]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid2D,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid2D, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(ComplexField { grid, samples })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ComplexField {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a field from a function of physical coordinates `(x, y)`.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                samples.push(f(grid.x(ix), y));
            }
        }
        ComplexField { grid, samples }
    }

    pub fn from_real(grid: Grid2D, values: &[f64]) -> Result<Self> {
        ComplexField::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.samples[self.grid.index(ix, iy)]
    }

    /// Overlap-integral power `sum |s|^2 * pixel_area`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        self.map(|s| s * c)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|s| s.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            samples: self.samples.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Pixel-wise product with a function of physical coordinates.
    pub fn modulate(&self, f: impl Fn(f64, f64) -> Complex64) -> ComplexField {
        let mut out = self.clone();
        for iy in 0..self.grid.ny() {
            let y = self.grid.y(iy);
            for ix in 0..self.grid.nx() {
                let i = self.grid.index(ix, iy);
                out.samples[i] *= f(self.grid.x(ix), y);
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(ComplexField {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        })
    }

    /// `self + c * other`, in place.
    pub fn add_scaled(&mut self, c: Complex64, other: &ComplexField) -> Result<()> {
        check_same_grid(&self.grid, &other.grid)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// X and Y polarization components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JonesField {
    x: ComplexField,
    y: ComplexField,
}

impl JonesField {
    pub fn new(x: ComplexField, y: ComplexField) -> Result<Self> {
        check_same_grid(x.grid(), y.grid())?;
        Ok(JonesField { x, y })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        JonesField {
            x: ComplexField::zeros(grid),
            y: ComplexField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }

    pub fn x(&self) -> &ComplexField {
        &self.x
    }

    pub fn y(&self) -> &ComplexField {
        &self.y
    }

    pub fn component(&self, pol: crate::Polarization) -> &ComplexField {
        match pol {
            crate::Polarization::X => &self.x,
            crate::Polarization::Y => &self.y,
        }
    }

    pub fn power(&self) -> f64 {
        self.x.power() + self.y.power()
    }

    pub fn scale(&self, c: Complex64) -> JonesField {
        JonesField {
            x: self.x.scale(c),
            y: self.y.scale(c),
        }
    }

    pub fn into_parts(self) -> (ComplexField, ComplexField) {
        (self.x, self.y)
    }
}

/// Centered, unitary 2-D spectrum of a [`ComplexField`].
///
/// `grid` is the spatial grid of the source field; bin spacing follows from it.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    grid: Grid2D,
    samples: Vec<Complex64>,
}

impl AngularSpectrum {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn get(&self, kx: usize, ky: usize) -> Complex64 {
        self.samples[self.grid.index(kx, ky)]
    }

    /// Value at bin offset `(dx, dy)` from DC, or `None` outside the array.
    pub fn at_offset(&self, dx: isize, dy: isize) -> Option<Complex64> {
        let kx = (self.grid.nx() / 2) as isize + dx;
        let ky = (self.grid.ny() / 2) as isize + dy;
        if kx < 0 || ky < 0 || kx >= self.grid.nx() as isize || ky >= self.grid.ny() as isize {
            return None;
        }
        Some(self.get(kx as usize, ky as usize))
    }

    /// Same units as [`ComplexField::power`]; equal to it for `fft2(field)`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    /// Wraps raw centered bins. The caller owns the convention.
    pub fn from_bins(grid: Grid2D, samples: Vec<Complex64>) -> Result<Self> {
        let field = ComplexField::new(grid, samples)?;
        Ok(AngularSpectrum {
            grid,
            samples: field.samples,
        })
    }

    pub fn median_magnitude(&self) -> f64 {
        let mut mags: Vec<f64> = self.samples.iter().map(|s| s.norm()).collect();
        let mid = mags.len() / 2;
        let (_, m, _) = mags.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    }
}

pub fn check_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{}x{} @ ({:e}, {:e}) vs {}x{} @ ({:e}, {:e})",
            a.nx(),
            a.ny(),
            a.pitch_x(),
            a.pitch_y(),
            b.nx(),
            b.ny(),
            b.pitch_x(),
            b.pitch_y()
        )))
    }
}

/// `amplitude * exp(i (2 pi (fx x + fy y) + phase0))`.
pub fn plane_wave(grid: Grid2D, amplitude: f64, carrier: SpatialFrequency, phase0: f64) -> Result<ComplexField> {
    if !grid.is_below_nyquist(carrier) {
        return Err(Error::AliasedCarrier {
            fx: carrier.fx,
            fy: carrier.fy,
            nyquist_x: grid.nyquist_x(),
            nyquist_y: grid.nyquist_y(),
        });
    }
    Ok(ComplexField::from_fn(grid, |x, y| {
        Complex64::from_polar(amplitude, 2.0 * PI * (carrier.fx * x + carrier.fy * y) + phase0)
    }))
}

pub fn fft2(field: &ComplexField) -> AngularSpectrum {
    let grid = *field.grid();
    let samples = centered_transform(&grid, field.samples(), FftDirection::Forward);
    AngularSpectrum { grid, samples }
}

pub fn ifft2(spectrum: &AngularSpectrum) -> ComplexField {
    let grid = spectrum.grid;
    let samples = centered_transform(&grid, &spectrum.samples, FftDirection::Inverse);
    ComplexField { grid, samples }
}

// For even sizes fftshift and ifftshift are the same half-length rotation.
fn centered_transform(grid: &Grid2D, input: &[Complex64], direction: FftDirection) -> Vec<Complex64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut buf = rotate_half(nx, ny, input);

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(nx, direction);
    let col_fft = planner.plan_fft(ny, direction);

    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(nx) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let mut transposed = transpose(nx, ny, &buf);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::default());
    for col in transposed.chunks_exact_mut(ny) {
        col_fft.process_with_scratch(col, &mut scratch);
    }
    let buf = transpose(ny, nx, &transposed);

    let norm = 1.0 / (grid.len() as f64).sqrt();
    let mut out = rotate_half(nx, ny, &buf);
    for v in &mut out {
        *v *= norm;
    }
    out
}

fn rotate_half(nx: usize, ny: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    let (hx, hy) = (nx / 2, ny / 2);
    for iy in 0..ny {
        let oy = (iy + hy) % ny;
        for ix in 0..nx {
            out[oy * nx + (ix + hx) % nx] = data[iy * nx + ix];
        }
    }
    out
}

/// `width` x `height` row-major in, `height` x `width` row-major out.
fn transpose(width: usize, height: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}

/// Output of [`crop_recenter`].
#[derive(Debug, Clone)]
pub struct Cropped {
    pub spectrum: AngularSpectrum,
    /// Integer bin shift that moved the circle center onto DC.
    pub shift_bins: (isize, isize),
    /// Part of the requested center not removed by the integer shift.
    pub residual: SpatialFrequency,
    pub warnings: Vec<Warning>,
}

/// Copies the bins inside a circle (radius in cycles/m, centered on the bin
/// nearest `center`) to the same offsets around DC; everything else is zero.
pub fn crop_recenter(spectrum: &AngularSpectrum, center: SpatialFrequency, radius: f64) -> Result<Cropped> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("crop radius {radius} must be positive")));
    }
    let grid = spectrum.grid;
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let (dfx, dfy) = (grid.freq_step_x(), grid.freq_step_y());
    let (bx, by) = grid.bins_of(center);
    let shift = (bx.round() as isize, by.round() as isize);
    let (rx, ry) = (radius / dfx, radius / dfy);

    let cx = nx / 2 + shift.0;
    let cy = ny / 2 + shift.1;
    let fits = |c: isize, r: f64, n: isize| c as f64 - r >= 0.0 && c as f64 + r <= (n - 1) as f64;
    if !(fits(cx, rx, nx) && fits(cy, ry, ny)) {
        return Err(Error::CropOutOfBounds {
            center_x: shift.0,
            center_y: shift.1,
            radius_bins: rx.max(ry),
            nx: grid.nx(),
            ny: grid.ny(),
        });
    }

    let mut warnings = Vec::new();
    let dc_dist = (shift.0 as f64 * dfx).hypot(shift.1 as f64 * dfy);
    if dc_dist <= radius {
        warnings.push(Warning::DcContamination {
            distance_bins: dc_dist / dfx.max(dfy),
            radius_bins: rx.min(ry),
        });
    }

    let mut out = vec![Complex64::default(); grid.len()];
    let (wx, wy) = (rx.floor() as isize, ry.floor() as isize);
    for dy in -wy..=wy {
        for dx in -wx..=wx {
            let fx = dx as f64 * dfx;
            let fy = dy as f64 * dfy;
            if fx * fx + fy * fy > radius * radius {
                continue;
            }
            let src = ((cy + dy) * nx + cx + dx) as usize;
            let dst = ((ny / 2 + dy) * nx + nx / 2 + dx) as usize;
            out[dst] = spectrum.samples[src];
        }
    }

    let residual = SpatialFrequency::new(center.fx - shift.0 as f64 * dfx, center.fy - shift.1 as f64 * dfy);
    Ok(Cropped {
        spectrum: AngularSpectrum { grid, samples: out },
        shift_bins: shift,
        residual,
        warnings,
    })
}

/// Discrete overlap integral `sum conj(b) * a * pixel_area`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    check_same_grid(a.grid(), b.grid())?;
    let sum: Complex64 = a.samples.iter().zip(&b.samples).map(|(x, y)| y.conj() * x).sum();
    Ok(sum * a.grid.pixel_area())
}
