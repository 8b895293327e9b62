//! From camera frames to complex fields: locate the `S R*` holograms in the
//! angular domain, crop them to DC, and transform back.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Polarization, Result, Warning};
use crate::field::{crop_recenter, fft2, ifft2, AngularSpectrum, ComplexField, Grid2D, JonesField, SpatialFrequency};
use crate::synth::{CameraFrame, SchemeConfig, SchemeVariant};

/// Which of a conjugate pair `(f, -f)` is the wanted `S R*` term.
#[derive(Debug, Clone, PartialEq)]
pub enum ConjugateRule {
    /// Keep `fy > 0` (or `fy == 0, fx > 0`).
    UpperHalfPlane,
    /// Keep the member closer to any of these carriers.
    NearestTo(Vec<SpatialFrequency>),
}

/// Frequency at which a hologram is demodulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierSource {
    /// The scheme's reference carrier.
    Configured,
    /// The sub-bin peak position found in the frame.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    /// Radius around DC ignored by the peak search, cycles/m.
    pub dc_exclusion_radius: f64,
    /// Hard crop radius around the hologram, cycles/m.
    pub crop_radius: f64,
    pub expected_sidebands: usize,
    pub conjugate_rule: ConjugateRule,
    pub carrier_source: CarrierSource,
    /// Divide extracted fields by this hologram factor (`conj(R)` amplitude).
    pub reference_factor: Option<Complex64>,
    /// Let [`reconstruct`] fill `reference_factor` from the scheme.
    pub normalize: bool,
    /// Minimum peak level above the spectral median for a detection.
    pub detection_db: f64,
    /// Level above the median at which an unassigned peak counts as a real hologram.
    pub unexpected_db: f64,
    /// Peaks weaker than this, relative to the strongest detected one, are
    /// ignored during assignment (quantization harmonics of strong fringes).
    pub significance_db: f64,
}

pub const DEFAULT_DETECTION_DB: f64 = 10.0;
pub const DEFAULT_UNEXPECTED_DB: f64 = 20.0;
pub const DEFAULT_SIGNIFICANCE_DB: f64 = -20.0;

impl ReconConfig {
    /// DC exclusion `nx/16` and crop radius `nx/10`, in frame bins along x.
    pub fn for_frame(frame: &Grid2D) -> Self {
        let df = frame.freq_step_x();
        let nx = frame.nx() as f64;
        ReconConfig {
            dc_exclusion_radius: nx / 16.0 * df,
            crop_radius: nx / 10.0 * df,
            expected_sidebands: 1,
            conjugate_rule: ConjugateRule::UpperHalfPlane,
            carrier_source: CarrierSource::Estimated,
            reference_factor: None,
            normalize: false,
            detection_db: DEFAULT_DETECTION_DB,
            unexpected_db: DEFAULT_UNEXPECTED_DB,
            significance_db: DEFAULT_SIGNIFICANCE_DB,
        }
    }

    /// Defaults for reconstructing frames of `scheme`: configured carriers,
    /// nearest-carrier disambiguation, normalization by the reference.
    pub fn for_scheme(scheme: &SchemeConfig, frame: &Grid2D) -> Self {
        let carriers = Polarization::BOTH.map(|p| scheme.hologram_carrier(p)).to_vec();
        ReconConfig {
            expected_sidebands: match scheme.variant() {
                SchemeVariant::Spatial => 1,
                SchemeVariant::Angular => 2,
            },
            conjugate_rule: ConjugateRule::NearestTo(carriers),
            carrier_source: CarrierSource::Configured,
            normalize: true,
            ..ReconConfig::for_frame(frame)
        }
    }

    pub fn with_radii_bins(mut self, frame: &Grid2D, dc_exclusion_bins: f64, crop_bins: f64) -> Self {
        self.dc_exclusion_radius = dc_exclusion_bins * frame.freq_step_x();
        self.crop_radius = crop_bins * frame.freq_step_x();
        self
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let coarse = grid.freq_step_x().max(grid.freq_step_y());
        if self.crop_radius.is_nan() || self.crop_radius < 2.0 * coarse {
            return Err(Error::Config(format!(
                "crop radius is {:.2} bins; at least 2 required",
                self.crop_radius / coarse
            )));
        }
        if !(self.dc_exclusion_radius >= 0.0 && self.dc_exclusion_radius.is_finite()) {
            return Err(Error::Config("DC exclusion radius must be >= 0".into()));
        }
        if self.expected_sidebands == 0 {
            return Err(Error::Config("expected_sidebands must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks that every crop disk is clear of DC, of its own conjugate and
    /// of the other polarization's disks.
    pub fn check_geometry(&self, scheme: &SchemeConfig) -> Result<()> {
        let r = self.crop_radius;
        let carriers = Polarization::BOTH.map(|p| scheme.hologram_carrier(p));
        for (pol, c) in Polarization::BOTH.iter().zip(carriers) {
            if c.norm() <= r.max(self.dc_exclusion_radius) {
                return Err(Error::Config(format!(
                    "{pol} crop disk overlaps the DC region (|carrier| = {:.1}, radius = {:.1} cycles/m)",
                    c.norm(),
                    r
                )));
            }
        }
        if scheme.variant() == SchemeVariant::Angular {
            let [cx, cy] = carriers;
            if (cx - cy).norm() <= 2.0 * r || (cx + cy).norm() <= 2.0 * r {
                return Err(Error::Config(
                    "X and Y crop disks (or their conjugates) overlap; increase carrier separation or reduce crop radius".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandEstimate {
    /// Sub-bin peak position, cycles/m.
    pub carrier: SpatialFrequency,
    pub peak_magnitude: f64,
    /// Integer bin offset of the peak from DC.
    pub bin: (isize, isize),
    /// Peak level above the spectral median, dB.
    #[serde(with = "crate::analysis::db_serde")]
    pub level_db: f64,
}

/// Unitary spectrum of the frame's intensity.
pub fn frame_spectrum(frame: &CameraFrame) -> Result<AngularSpectrum> {
    Ok(fft2(&ComplexField::from_real(*frame.grid(), &frame.intensity())?))
}

struct PeakSearch<'a> {
    spectrum: &'a AngularSpectrum,
    mags: Vec<f64>,
    median: f64,
    floor: f64,
}

impl<'a> PeakSearch<'a> {
    fn new(spectrum: &'a AngularSpectrum) -> Self {
        let mags: Vec<f64> = spectrum.samples().iter().map(|s| s.norm()).collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        PeakSearch {
            median: spectrum.median_magnitude(),
            floor: max * 1e-10,
            spectrum,
            mags,
        }
    }

    fn level_db(&self, mag: f64) -> f64 {
        if self.median > 0.0 {
            20.0 * (mag / self.median).log10()
        } else if mag > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    fn mag_at(&self, dx: isize, dy: isize) -> f64 {
        self.spectrum
            .at_offset(dx, dy)
            .map_or(0.0, |v| v.norm())
            .max(self.floor.max(f64::MIN_POSITIVE))
    }

    /// Parabolic fit of log-magnitude around `(dx, dy)` along each axis.
    fn refine(&self, dx: isize, dy: isize) -> SidebandEstimate {
        let grid = self.spectrum.grid();
        let vertex = |l: f64, c: f64, r: f64| {
            let (l, c, r) = (l.ln(), c.ln(), r.ln());
            let denom = l - 2.0 * c + r;
            if denom < 0.0 && denom.is_finite() {
                (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let c = self.mag_at(dx, dy);
        let ox = vertex(self.mag_at(dx - 1, dy), c, self.mag_at(dx + 1, dy));
        let oy = vertex(self.mag_at(dx, dy - 1), c, self.mag_at(dx, dy + 1));
        let peak = self.spectrum.at_offset(dx, dy).map_or(0.0, |v| v.norm());
        SidebandEstimate {
            carrier: SpatialFrequency::from_bins(grid, dx as f64 + ox, dy as f64 + oy),
            peak_magnitude: peak,
            bin: (dx, dy),
            level_db: self.level_db(peak),
        }
    }

    /// Up to `count` strongest peaks outside the DC disk, each suppressing a
    /// crop-radius disk around itself and its conjugate position.
    fn candidates(&self, config: &ReconConfig, count: usize) -> Vec<(isize, isize)> {
        let grid = self.spectrum.grid();
        let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
        let (dfx, dfy) = (grid.freq_step_x(), grid.freq_step_y());
        let dist = |ax: isize, ay: isize, bx: isize, by: isize| ((ax - bx) as f64 * dfx).hypot((ay - by) as f64 * dfy);
        let mut found: Vec<(isize, isize)> = Vec::new();
        while found.len() < count {
            let mut best: Option<((isize, isize), f64)> = None;
            for ky in 0..ny {
                for kx in 0..nx {
                    let (dx, dy) = (kx - nx / 2, ky - ny / 2);
                    if dist(dx, dy, 0, 0) <= config.dc_exclusion_radius {
                        continue;
                    }
                    if found.iter().any(|&(fx, fy)| {
                        dist(dx, dy, fx, fy) <= config.crop_radius || dist(dx, dy, -fx, -fy) <= config.crop_radius
                    }) {
                        continue;
                    }
                    let m = self.mags[(ky * nx + kx) as usize];
                    if m > self.floor && best.is_none_or(|(_, b)| m > b) {
                        best = Some(((dx, dy), m));
                    }
                }
            }
            match best {
                Some((at, _)) => found.push(at),
                None => break,
            }
        }
        found
    }

    /// Picks one member of the conjugate pair at `(dx, dy)`.
    fn disambiguate(&self, at: (isize, isize), rule: &ConjugateRule, crop_radius: f64) -> Result<(isize, isize)> {
        let grid = self.spectrum.grid();
        let mirror = (-at.0, -at.1);
        match rule {
            ConjugateRule::UpperHalfPlane => {
                let fy = at.1 as f64 * grid.freq_step_y();
                if fy.abs() < crop_radius {
                    return Err(Error::ConjugateAmbiguity(format!(
                        "sideband at bin offset {at:?} straddles the fx axis within the crop radius"
                    )));
                }
                Ok(if at.1 > 0 || (at.1 == 0 && at.0 > 0) {
                    at
                } else {
                    mirror
                })
            }
            ConjugateRule::NearestTo(carriers) => {
                let nearest = |p: (isize, isize)| {
                    let f = SpatialFrequency::from_bins(grid, p.0 as f64, p.1 as f64);
                    carriers.iter().map(|c| (f - *c).norm()).fold(f64::INFINITY, f64::min)
                };
                let (d, dm) = (nearest(at), nearest(mirror));
                if (d - dm).abs() < grid.freq_step_x().min(grid.freq_step_y()) {
                    return Err(Error::ConjugateAmbiguity(format!(
                        "sideband at bin offset {at:?} and its conjugate are equidistant from the configured carriers"
                    )));
                }
                Ok(if d <= dm { at } else { mirror })
            }
        }
    }
}

/// The `expected_sidebands` strongest holograms, one per conjugate pair,
/// sorted by descending magnitude.
pub fn locate_sidebands(spectrum: &AngularSpectrum, config: &ReconConfig) -> Result<Vec<SidebandEstimate>> {
    config.validate(spectrum.grid())?;
    let search = PeakSearch::new(spectrum);
    let peaks = search.candidates(config, config.expected_sidebands);
    let mut out = Vec::with_capacity(peaks.len());
    for at in peaks {
        let level = search.level_db(search.mags_at_offset(at));
        if level < config.detection_db {
            break;
        }
        let kept = search.disambiguate(at, &config.conjugate_rule, config.crop_radius)?;
        out.push(search.refine(kept.0, kept.1));
    }
    if out.len() < config.expected_sidebands {
        let strongest = out.first().map_or_else(
            || {
                search
                    .candidates(config, 1)
                    .first()
                    .map_or(f64::NEG_INFINITY, |&at| search.level_db(search.mags_at_offset(at)))
            },
            |s| s.level_db,
        );
        return Err(Error::NoSideband(format!(
            "found {} of {} sidebands at least {:.0} dB above the spectral median (strongest candidate {:.1} dB)",
            out.len(),
            config.expected_sidebands,
            config.detection_db,
            strongest
        )));
    }
    out.sort_by(|a, b| b.peak_magnitude.total_cmp(&a.peak_magnitude));
    Ok(out)
}

impl PeakSearch<'_> {
    fn mags_at_offset(&self, at: (isize, isize)) -> f64 {
        self.spectrum.at_offset(at.0, at.1).map_or(0.0, |v| v.norm())
    }
}

#[derive(Debug, Clone)]
pub struct ExtractedField {
    pub field: ComplexField,
    /// True when divided by the reference factor; otherwise raw `S R*` units.
    pub normalized: bool,
    /// Sub-bin carrier removed after the integer recentering.
    pub residual: SpatialFrequency,
    pub warnings: Vec<Warning>,
}

fn extract_from_spectrum(
    spectrum: &AngularSpectrum,
    carrier: SpatialFrequency,
    config: &ReconConfig,
) -> Result<ExtractedField> {
    let cropped = crop_recenter(spectrum, carrier, config.crop_radius)?;
    let residual = cropped.residual;
    let mut field = ifft2(&cropped.spectrum);
    if residual != SpatialFrequency::ZERO {
        field = field.modulate(|x, y| Complex64::from_polar(1.0, -2.0 * PI * (residual.fx * x + residual.fy * y)));
    }
    let normalized = match config.reference_factor {
        Some(r) if r.norm() > 0.0 => {
            field = field.scale(r.inv());
            true
        }
        Some(_) => return Err(Error::InvalidArgument("reference factor must be nonzero".into())),
        None => false,
    };
    Ok(ExtractedField {
        field,
        normalized,
        residual,
        warnings: cropped.warnings,
    })
}

/// Crop the hologram at `carrier`, bring it to DC, remove the residual
/// sub-bin tilt, and optionally divide out the reference.
pub fn extract_field(frame: &CameraFrame, carrier: &SidebandEstimate, config: &ReconConfig) -> Result<ExtractedField> {
    config.validate(frame.grid())?;
    extract_from_spectrum(&frame_spectrum(frame)?, carrier.carrier, config)
}

/// One hologram considered during reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandRecord {
    /// `full`, `left` or `right`.
    pub region: String,
    /// Polarization this hologram was assigned to, if any.
    pub pol: Option<Polarization>,
    pub estimate: SidebandEstimate,
    /// Carrier used for demodulation.
    pub used_carrier: Option<SpatialFrequency>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub fields: JonesField,
    pub sidebands: Vec<SidebandRecord>,
    pub normalized: bool,
    pub warnings: Vec<Warning>,
}

struct Assigned {
    estimate: Option<SidebandEstimate>,
}

/// Detected holograms in `spectrum`, split into those within the crop radius
/// of `targets` (indexed like `targets`) and the rest.
fn assign_sidebands(
    spectrum: &AngularSpectrum,
    config: &ReconConfig,
    targets: &[(Polarization, SpatialFrequency)],
    max_candidates: usize,
) -> Result<(Vec<Assigned>, Vec<SidebandEstimate>)> {
    let search = PeakSearch::new(spectrum);
    let mut assigned: Vec<Assigned> = targets.iter().map(|_| Assigned { estimate: None }).collect();
    let mut unassigned = Vec::new();
    let detected: Vec<(isize, isize)> = search
        .candidates(config, max_candidates)
        .into_iter()
        .filter(|&at| search.level_db(search.mags_at_offset(at)) >= config.detection_db)
        .collect();
    let strongest = detected.iter().map(|&at| search.mags_at_offset(at)).fold(0.0, f64::max);
    let floor = strongest * 10f64.powf(config.significance_db / 20.0);
    for at in detected {
        if search.mags_at_offset(at) < floor {
            continue;
        }
        let grid = spectrum.grid();
        // nearest target over both conjugate members
        let mut best: Option<(usize, (isize, isize), f64)> = None;
        for p in [at, (-at.0, -at.1)] {
            let f = SpatialFrequency::from_bins(grid, p.0 as f64, p.1 as f64);
            for (i, (_, c)) in targets.iter().enumerate() {
                let d = (f - *c).norm();
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, p, d));
                }
            }
        }
        match best {
            Some((i, p, d)) if d <= config.crop_radius => {
                if assigned[i].estimate.is_some() {
                    return Err(Error::SidebandAssignmentAmbiguous(format!(
                        "two sidebands are nearest to the {} reference carrier",
                        targets[i].0
                    )));
                }
                assigned[i].estimate = Some(search.refine(p.0, p.1));
            }
            _ => unassigned.push(search.refine(at.0, at.1)),
        }
    }
    Ok((assigned, unassigned))
}

/// Per-polarization complex fields from one frame.
///
/// Spatial frames are split into their Wollaston halves and processed on
/// half-width grids; angular frames are transformed once and both holograms
/// cropped from the same spectrum.
pub fn reconstruct(frame: &CameraFrame, scheme: &SchemeConfig, config: &ReconConfig) -> Result<Reconstruction> {
    scheme.validate(frame.grid())?;
    let grid = scheme.recon_grid(frame.grid())?;
    config.validate(&grid)?;
    config.check_geometry(scheme)?;

    let regions: Vec<(String, Vec<Polarization>, AngularSpectrum)> = match scheme.variant() {
        SchemeVariant::Spatial => {
            let (left, right) = frame.split_halves()?;
            vec![
                ("left".into(), vec![Polarization::X], frame_spectrum(&left)?),
                ("right".into(), vec![Polarization::Y], frame_spectrum(&right)?),
            ]
        }
        SchemeVariant::Angular => vec![("full".into(), Polarization::BOTH.to_vec(), frame_spectrum(frame)?)],
    };

    let mut fields: [Option<ComplexField>; 2] = [None, None];
    let mut sidebands = Vec::new();
    let mut warnings = Vec::new();
    let mut detected_any = false;
    let mut normalized = true;

    for (region, pols, spectrum) in &regions {
        let targets: Vec<_> = pols.iter().map(|&p| (p, scheme.hologram_carrier(p))).collect();
        let (assigned, unassigned) = assign_sidebands(spectrum, config, &targets, targets.len() + 2)?;

        for extra in unassigned {
            if scheme.variant() == SchemeVariant::Spatial && extra.level_db >= config.unexpected_db {
                return Err(Error::SidebandAssignmentAmbiguous(format!(
                    "unexpected hologram at ({:.0}, {:.0}) cycles/m in the {region} half-region ({:.1} dB above median); \
                     are these angular-multiplexing frames?",
                    extra.carrier.fx, extra.carrier.fy, extra.level_db
                )));
            }
            if extra.level_db >= config.unexpected_db {
                warnings.push(Warning::UnassignedSideband {
                    fx: extra.carrier.fx,
                    fy: extra.carrier.fy,
                    level_db: extra.level_db,
                });
            }
            sidebands.push(SidebandRecord {
                region: region.clone(),
                pol: None,
                estimate: extra,
                used_carrier: None,
            });
        }

        for ((pol, configured), a) in targets.iter().zip(assigned) {
            let used = match (config.carrier_source, &a.estimate) {
                (CarrierSource::Configured, _) => *configured,
                (CarrierSource::Estimated, Some(est)) => est.carrier,
                (CarrierSource::Estimated, None) => {
                    return Err(Error::NoSideband(format!(
                        "no {pol} hologram detected in the {region} region"
                    )))
                }
            };
            match &a.estimate {
                Some(_) => detected_any = true,
                None => {
                    let level = PeakSearch::new(spectrum).level_db(peak_near(spectrum, *configured));
                    warnings.push(Warning::WeakSideband {
                        pol: *pol,
                        level_db: level,
                    });
                }
            }
            let mut cfg = config.clone();
            if config.normalize {
                cfg.reference_factor = Some(scheme.hologram_factor(*pol));
            }
            let extracted = extract_from_spectrum(spectrum, used, &cfg)?;
            normalized &= extracted.normalized;
            warnings.extend(extracted.warnings);
            if let Some(est) = a.estimate {
                sidebands.push(SidebandRecord {
                    region: region.clone(),
                    pol: Some(*pol),
                    estimate: est,
                    used_carrier: Some(used),
                });
            }
            fields[pol.index()] = Some(extracted.field);
        }
    }

    if !detected_any {
        return Err(Error::NoSideband(format!(
            "no hologram at least {:.0} dB above the spectral median near the configured carriers",
            config.detection_db
        )));
    }
    let [x, y] = fields;
    let (x, y) = (
        x.ok_or_else(|| Error::NoSideband("X field missing".into()))?,
        y.ok_or_else(|| Error::NoSideband("Y field missing".into()))?,
    );
    Ok(Reconstruction {
        fields: JonesField::new(x, y)?,
        sidebands,
        normalized,
        warnings,
    })
}

fn peak_near(spectrum: &AngularSpectrum, f: SpatialFrequency) -> f64 {
    let (bx, by) = spectrum.grid().bins_of(f);
    spectrum
        .at_offset(bx.round() as isize, by.round() as isize)
        .map_or(0.0, |v| v.norm())
}

/// Level, in dB above the median, of the reference-reference beat at
/// `carrier(R_X) - carrier(R_Y)` in an angular-scheme measurement.
///
/// Power spectra of all `frames` are averaged, and the beat power is the mean
/// over the 3x3 bins around the beat position, so single-bin noise draws do
/// not decide the outcome.
pub fn reference_beat_db(frames: &[CameraFrame], scheme: &SchemeConfig) -> Result<f64> {
    let SchemeConfig::Angular { rx, ry, .. } = scheme else {
        return Err(Error::Config("reference beat needs the angular scheme".into()));
    };
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let grid = *first.grid();
    let mut power = vec![0.0; grid.len()];
    for frame in frames {
        crate::field::check_same_grid(&grid, frame.grid())?;
        let s = frame_spectrum(frame)?;
        for (p, v) in power.iter_mut().zip(s.samples()) {
            *p += v.norm_sqr();
        }
    }
    let mut sorted = power.clone();
    let mid = sorted.len() / 2;
    let median = *sorted.select_nth_unstable_by(mid, f64::total_cmp).1;

    let (bx, by) = grid.bins_of(rx.carrier - ry.carrier);
    let (cx, cy) = (
        (grid.nx() / 2) as isize + bx.round() as isize,
        (grid.ny() / 2) as isize + by.round() as isize,
    );
    let mut sum = 0.0;
    let mut n = 0.0;
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (x, y) = (cx + dx, cy + dy);
            if x >= 0 && y >= 0 && (x as usize) < grid.nx() && (y as usize) < grid.ny() {
                sum += power[grid.index(x as usize, y as usize)];
                n += 1.0;
            }
        }
    }
    let beat = sum / n;
    Ok(if median > 0.0 {
        10.0 * (beat / median).log10()
    } else if beat > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}
