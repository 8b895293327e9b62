//! Synth, recon and analyze, both in memory and as the file-based commands
//! behind the `holobench` binary.
//!
//! Output layout of `cmd_pipeline`:
//!
//! ```text
//! OUT/comparison.json, OUT/comparison.txt
//! OUT/<scheme>/frames/    frame_p{port}_{X|Y}.pgm, manifest.json, truth.json
//! OUT/<scheme>/fields/    field_p{port}_{X|Y}_out{X|Y}.cfld, recon.json, sidebands.json
//! OUT/<scheme>/analysis/  report.json, summary.txt, plots/*.ppm
//! ```

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::analysis::{
    analyze, assemble_matrix_with_ports, ColumnMeasurement, MetricsReport, TargetGroups, TransferMatrix,
};
use crate::design::design_device;
use crate::error::{Error, Polarization, Result};
use crate::field::{Grid2D, JonesField};
use crate::io::config::{DeviceSource, RunConfig};
use crate::io::manifest::{
    field_file_name, frame_file_name, BasisRecord, FieldEntry, FrameEntry, FrameFailure, FrameManifest, FrameSidebands,
    ReconManifest, SchemeRecord, TruthRecord, FORMAT_VERSION, MANIFEST_FILE, RECON_MANIFEST_FILE, SIDEBAND_LOG_FILE,
    TRUTH_FILE,
};
use crate::io::report::{
    comparison_text, summary_text, Comparison, ReportFile, SchemeResult, TruthComparison, TruthMetrics,
    COMPARISON_FILE, COMPARISON_TEXT_FILE, REPORT_FILE, SUMMARY_FILE,
};
use crate::io::{field_file, pgm, plot, read_json, write_atomic, write_json};
use crate::modes::{build_lp_basis, decompose, ModeBasis, ModeGroupMap};
use crate::recon::{reconstruct, ReconConfig, Reconstruction};
use crate::synth::{
    auto_full_scale, auto_reference_amplitude, simulate_measurement, CameraFrame, CameraModel, DeviceModel, Excitation,
    Measurement, SchemeConfig, SchemeVariant,
};

/// Device under test on the frame grid.
pub fn build_device(cfg: &RunConfig) -> Result<DeviceModel> {
    let grid = cfg.frame_grid()?;
    let [cx, cy] = cfg.basis.center;
    let basis = build_lp_basis(grid, cfg.waist()?, (cx, cy))?.with_group_map(cfg.group_map()?)?;
    let truth = match cfg.device_source()? {
        DeviceSource::Truth(path) => {
            let (m, _) = TruthRecord::read(&path)?;
            m
        }
        DeviceSource::Design(d) => {
            let designed = design_device(&d)?;
            info!(
                "designed device: theta {:.4}, XT {:.3} dB, MDL {:.3} dB",
                designed.theta, designed.metrics.xt_db, designed.metrics.mdl_db
            );
            designed.truth
        }
    };
    DeviceModel::new(truth, basis)
}

/// Metrics of the device's own matrix.
pub fn truth_metrics(device: &DeviceModel, groups: &ModeGroupMap, targets: &TargetGroups) -> Result<MetricsReport> {
    let t = TransferMatrix::new(device.truth().clone(), device.basis().labels().to_vec())?;
    analyze(&t, groups, targets)
}

#[derive(Debug, Clone)]
pub struct SynthRun {
    pub scheme: SchemeConfig,
    pub camera: CameraModel,
    pub reference_amplitude: f64,
    pub measurement: Measurement,
}

/// Renders every excitation of `device` under `variant`.
pub fn synthesize(cfg: &RunConfig, device: &DeviceModel, variant: SchemeVariant) -> Result<SynthRun> {
    let frame = *device.basis().grid();
    let amplitude = match cfg.scheme.reference_amplitude {
        Some(a) => a,
        None => auto_reference_amplitude(device, variant)?,
    };
    let scheme = cfg.scheme_config(variant, &frame, amplitude)?;
    let full_scale = match cfg.camera.full_scale {
        Some(fs) => fs,
        None => auto_full_scale(device, &scheme, cfg.camera.headroom)?,
    };
    let sigma = match (cfg.camera.noise_sigma, cfg.camera.noise_fraction) {
        (Some(s), _) => s,
        (None, Some(f)) => f * full_scale,
        (None, None) => 0.0,
    };
    let camera = CameraModel::new(cfg.camera.bit_depth, full_scale, sigma, cfg.seed)?;
    let measurement = simulate_measurement(device, &scheme, &camera)?;
    for (ex, w) in &measurement.warnings {
        warn!("port {} {}: {w}", ex.port, ex.pol);
    }
    Ok(SynthRun {
        scheme,
        camera,
        reference_amplitude: amplitude,
        measurement,
    })
}

/// Reconstructs frames in parallel; each result stands alone.
pub fn reconstruct_all(
    frames: &[(Excitation, CameraFrame)],
    scheme: &SchemeConfig,
    config: &ReconConfig,
) -> Vec<(Excitation, Result<Reconstruction>)> {
    frames
        .par_iter()
        .map(|(ex, frame)| (*ex, reconstruct(frame, scheme, config)))
        .collect()
}

/// LP basis on the grid fields are recovered on.
pub fn field_basis(field_grid: Grid2D, w0: f64, center: [f64; 2], groups: ModeGroupMap) -> Result<ModeBasis> {
    build_lp_basis(field_grid, w0, (center[0], center[1]))?.with_group_map(groups)
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub matrix: TransferMatrix,
    pub metrics: MetricsReport,
    /// Captured power fraction per field, in column order, X then Y output.
    pub captured_fraction: Vec<f64>,
}

pub fn analyze_fields(
    fields: &[(Excitation, JonesField)],
    basis: &ModeBasis,
    ports: usize,
    targets: &TargetGroups,
) -> Result<Analysis> {
    let decomposed = fields
        .par_iter()
        .map(|(ex, f)| {
            let dx = decompose(f.x(), basis)?;
            let dy = decompose(f.y(), basis)?;
            Ok((
                ColumnMeasurement {
                    port: ex.port,
                    pol: ex.pol,
                    x: dx.coefficients,
                    y: dy.coefficients,
                },
                [dx.captured_fraction, dy.captured_fraction],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut captured: Vec<(usize, [f64; 2])> = decomposed
        .iter()
        .map(|(m, c)| (2 * m.port + m.pol.index(), *c))
        .collect();
    captured.sort_by_key(|c| c.0);
    let columns: Vec<ColumnMeasurement> = decomposed.into_iter().map(|(m, _)| m).collect();
    let matrix = assemble_matrix_with_ports(&columns, basis, ports)?;
    let metrics = analyze(&matrix, basis.group_map(), targets)?;
    Ok(Analysis {
        matrix,
        metrics,
        captured_fraction: captured.into_iter().flat_map(|c| c.1).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub synth: SynthRun,
    pub analysis: Analysis,
}

/// Synth, recon and analyze for one scheme without touching the disk.
pub fn run_scheme(cfg: &RunConfig, device: &DeviceModel, variant: SchemeVariant) -> Result<SchemeRun> {
    let synth = synthesize(cfg, device, variant)?;
    let frame = *device.basis().grid();
    let recon_cfg = cfg.recon_config(&synth.scheme, &frame)?;
    let mut fields = Vec::new();
    for (ex, r) in reconstruct_all(&synth.measurement.frames, &synth.scheme, &recon_cfg) {
        fields.push((ex, r?.fields));
    }
    let basis = field_basis(
        synth.scheme.recon_grid(&frame)?,
        cfg.waist()?,
        cfg.basis.center,
        device.basis().group_map().clone(),
    )?;
    let analysis = analyze_fields(&fields, &basis, device.ports(), &cfg.targets())?;
    Ok(SchemeRun { synth, analysis })
}

/// Result of a file-based command.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Frames or schemes that failed while the rest went through.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Writes `frame_p{port}_{pol}.pgm` per excitation, `manifest.json` and `truth.json`.
pub fn cmd_synth(cfg: &RunConfig, variant: SchemeVariant, out: &Path) -> Result<Outcome> {
    let device = build_device(cfg)?;
    synth_to_dir(cfg, &device, variant, out)?;
    Ok(Outcome::default())
}

fn synth_to_dir(cfg: &RunConfig, device: &DeviceModel, variant: SchemeVariant, out: &Path) -> Result<FrameManifest> {
    let run = synthesize(cfg, device, variant)?;
    run.measurement
        .frames
        .par_iter()
        .map(|(ex, frame)| pgm::write_frame(&out.join(frame_file_name(*ex)), frame))
        .collect::<Result<Vec<()>>>()?;
    let truth = TruthRecord::from_matrix(device.truth(), device.basis().labels().to_vec());
    write_json(&out.join(TRUTH_FILE), &truth)?;
    let manifest = FrameManifest {
        format_version: FORMAT_VERSION,
        grid: *device.basis().grid(),
        wavelength: cfg.wavelength,
        scheme: SchemeRecord::from(&run.scheme),
        bit_depth: run.camera.bit_depth,
        full_scale: run.camera.full_scale,
        noise_sigma: run.camera.noise_sigma,
        seed: cfg.seed,
        ports: device.ports(),
        basis: BasisRecord {
            w0: cfg.waist()?,
            center: cfg.basis.center,
            group_map: device.basis().group_map().as_slice().to_vec(),
            labels: device.basis().labels().to_vec(),
        },
        frames: run
            .measurement
            .frames
            .iter()
            .map(|(ex, _)| FrameEntry {
                file: frame_file_name(*ex),
                port: ex.port,
                pol: ex.pol,
            })
            .collect(),
        truth_file: Some(TRUTH_FILE.into()),
        warnings: run
            .measurement
            .warnings
            .iter()
            .map(|(ex, w)| format!("port {} {}: {w}", ex.port, ex.pol))
            .collect(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    info!("wrote {} frames to {}", manifest.frames.len(), out.display());
    Ok(manifest)
}

/// Reconstructs every frame listed in `frames/manifest.json`. Frames that
/// fail are logged and listed in `recon.json`; the others are written.
pub fn cmd_recon(
    cfg: &RunConfig,
    scheme_override: Option<SchemeVariant>,
    frames: &Path,
    out: &Path,
) -> Result<Outcome> {
    let manifest = FrameManifest::read(frames)?;
    let mut scheme = manifest.scheme.to_scheme()?;
    let grid = manifest.grid;
    if let Some(v) = scheme_override {
        if v != scheme.variant() {
            warn!(
                "frames were recorded with the {} scheme but are processed as {v}",
                scheme.variant()
            );
            let amplitude = scheme.references()[0].jones[0].norm();
            scheme = cfg.scheme_config(v, &grid, amplitude)?;
        }
    }
    let recon_cfg = cfg.recon_config(&scheme, &grid)?;

    let results: Vec<(FrameEntry, Result<Reconstruction>)> = manifest
        .frames
        .par_iter()
        .map(|entry| {
            let r = pgm::read_frame(&frames.join(&entry.file), grid, manifest.bit_depth, manifest.full_scale)
                .and_then(|frame| reconstruct(&frame, &scheme, &recon_cfg));
            (entry.clone(), r)
        })
        .collect();

    let mut outcome = Outcome::default();
    let mut fields = Vec::new();
    let mut failures = Vec::new();
    let mut log = Vec::new();
    let mut normalized = true;
    for (entry, r) in results {
        let ex = Excitation {
            port: entry.port,
            pol: entry.pol,
        };
        match r {
            Ok(rec) => {
                for pol in Polarization::BOTH {
                    field_file::write_field(&out.join(field_file_name(ex, pol)), rec.fields.component(pol))?;
                }
                for w in &rec.warnings {
                    warn!("{}: {w}", entry.file);
                }
                normalized &= rec.normalized;
                fields.push(FieldEntry {
                    port: entry.port,
                    pol: entry.pol,
                    x_file: field_file_name(ex, Polarization::X),
                    y_file: field_file_name(ex, Polarization::Y),
                });
                log.push(FrameSidebands {
                    file: entry.file,
                    port: entry.port,
                    pol: entry.pol,
                    sidebands: rec.sidebands,
                    warnings: rec.warnings,
                });
            }
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(e) => {
                warn!("{}: {e}", entry.file);
                outcome.failures.push(format!("{}: {e}", entry.file));
                failures.push(FrameFailure {
                    file: entry.file,
                    port: entry.port,
                    pol: entry.pol,
                    error: e.to_string(),
                });
            }
        }
    }
    write_json(&out.join(SIDEBAND_LOG_FILE), &log)?;
    if let Some(t) = &manifest.truth_file {
        let src = frames.join(t);
        if src.exists() {
            write_atomic(&out.join(TRUTH_FILE), &crate::io::read_bytes(&src)?)?;
        }
    }
    let recon_manifest = ReconManifest {
        format_version: FORMAT_VERSION,
        processed_as: scheme.variant(),
        field_grid: scheme.recon_grid(&grid)?,
        normalized,
        fields,
        failures,
        source: manifest,
    };
    write_json(&out.join(RECON_MANIFEST_FILE), &recon_manifest)?;
    info!(
        "reconstructed {} of {} frames into {}",
        recon_manifest.fields.len(),
        recon_manifest.source.frames.len(),
        out.display()
    );
    Ok(outcome)
}

/// Decomposes the fields in `fields/`, writes `report.json`, `summary.txt`
/// and plots to `out/`.
pub fn cmd_analyze(cfg: &RunConfig, fields_dir: &Path, out: &Path) -> Result<ReportFile> {
    let manifest = ReconManifest::read(fields_dir)?;
    let src = &manifest.source;
    let groups = match &cfg.basis.group_map {
        Some(g) => ModeGroupMap::new(g.clone())?,
        None => ModeGroupMap::new(src.basis.group_map.clone())?,
    };
    let basis = field_basis(manifest.field_grid, src.basis.w0, src.basis.center, groups.clone())?;

    let fields = manifest
        .fields
        .par_iter()
        .map(|e| {
            let x = field_file::read_field(&fields_dir.join(&e.x_file))?;
            let y = field_file::read_field(&fields_dir.join(&e.y_file))?;
            Ok((
                Excitation {
                    port: e.port,
                    pol: e.pol,
                },
                JonesField::new(x, y)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let targets = cfg.targets();
    let analysis = analyze_fields(&fields, &basis, src.ports, &targets)?;

    let truth_path = fields_dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        let (m, labels) = TruthRecord::read(&truth_path)?;
        let t = analyze(&TransferMatrix::new(m, labels)?, &groups, &targets)?;
        Some(TruthComparison::new(&analysis.metrics, &t))
    } else {
        None
    };

    let mut warnings: Vec<String> = src.warnings.clone();
    warnings.extend(basis.warnings().iter().map(|w| format!("analysis basis: {w}")));
    if !manifest.normalized {
        warnings
            .push("fields are not normalized by the reference; metrics are scale-free but amplitudes are raw".into());
    }
    let report = ReportFile {
        format_version: FORMAT_VERSION,
        scheme: manifest.processed_as,
        metrics: analysis.metrics,
        truth,
        captured_fraction: analysis.captured_fraction,
        warnings,
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    write_atomic(&out.join(SUMMARY_FILE), summary_text(&report).as_bytes())?;

    let plots = out.join("plots");
    fields
        .par_iter()
        .map(|(ex, f)| {
            for pol in Polarization::BOTH {
                let stem = field_file_name(*ex, pol).trim_end_matches(".cfld").to_string();
                plot::write_ppm(
                    &plots.join(format!("{stem}_amp.ppm")),
                    &plot::amplitude_image(f.component(pol)),
                )?;
                plot::write_ppm(
                    &plots.join(format!("{stem}_phase.ppm")),
                    &plot::phase_image(f.component(pol)),
                )?;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    plot::write_ppm(
        &plots.join("power_matrix.ppm"),
        &plot::power_heatmap(&report.metrics.power_matrix, 64, -30.0),
    )?;
    info!("report written to {}", out.join(REPORT_FILE).display());
    Ok(report)
}

pub fn scheme_dirs(out: &Path, variant: SchemeVariant) -> [PathBuf; 3] {
    let base = out.join(variant.name());
    [base.join("frames"), base.join("fields"), base.join("analysis")]
}

/// Full run for each configured scheme (or only `scheme_override`), then the
/// comparison table.
pub fn cmd_pipeline(
    cfg: &RunConfig,
    scheme_override: Option<SchemeVariant>,
    out: &Path,
) -> Result<(Comparison, Outcome)> {
    let device = build_device(cfg)?;
    let schemes = match scheme_override {
        Some(v) => vec![v],
        None => cfg.pipeline.schemes.clone(),
    };
    let mut outcome = Outcome::default();
    let mut results = Vec::new();
    for variant in schemes {
        let [frames, fields, analysis] = scheme_dirs(out, variant);
        synth_to_dir(cfg, &device, variant, &frames)?;
        let recon = cmd_recon(cfg, None, &frames, &fields)?;
        outcome
            .failures
            .extend(recon.failures.iter().map(|f| format!("{variant}: {f}")));
        match cmd_analyze(cfg, &fields, &analysis) {
            Ok(report) => results.push(SchemeResult {
                scheme: variant,
                xt_db: report.metrics.xt_db,
                mdl_db: report.metrics.mdl_db,
                error: None,
            }),
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(e) => {
                warn!("{variant} analysis failed: {e}");
                outcome.failures.push(format!("{variant}: {e}"));
                results.push(SchemeResult {
                    scheme: variant,
                    xt_db: f64::NAN,
                    mdl_db: f64::NAN,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let t = truth_metrics(&device, device.basis().group_map(), &cfg.targets())?;
    let comparison = Comparison::new(
        results,
        Some(TruthMetrics {
            xt_db: t.xt_db,
            mdl_db: t.mdl_db,
        }),
    );
    write_json(&out.join(COMPARISON_FILE), &comparison)?;
    write_atomic(&out.join(COMPARISON_TEXT_FILE), comparison_text(&comparison).as_bytes())?;
    Ok((comparison, outcome))
}

/// Reads a comparison written by [`cmd_pipeline`].
pub fn read_comparison(out: &Path) -> Result<Comparison> {
    read_json(&out.join(COMPARISON_FILE))
}
