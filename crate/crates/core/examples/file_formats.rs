// Writes and reads back each on-disk format: PGM frames, CFLD complex
// fields, PPM plots and the truth-matrix JSON.

use holobench::io::config::RunConfig;
use holobench::io::manifest::TruthRecord;
use holobench::io::{field_file, pgm, plot, write_json};
use holobench::pipeline::{build_device, synthesize};
use holobench::synth::{synth_output_field, SchemeVariant};
use holobench::Polarization;

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::TempDir::new()?;
    let cfg = RunConfig::default();
    let device = build_device(&cfg)?;

    let run = synthesize(&cfg, &device, SchemeVariant::Spatial)?;
    let frame = &run.measurement.frames[0].1;
    let path = dir.path().join("frame.pgm");
    pgm::write_frame(&path, frame)?;
    let back = pgm::read_frame(&path, *frame.grid(), frame.bit_depth(), frame.full_scale())?;
    println!(
        "PGM  {} bytes, identical: {}",
        std::fs::metadata(&path)?.len(),
        &back == frame
    );

    let field = synth_output_field(&device, 0, Polarization::X)?;
    let path = dir.path().join("field.cfld");
    field_file::write_field(&path, field.x())?;
    let back = field_file::read_field(&path)?;
    println!(
        "CFLD {} bytes, identical: {}",
        std::fs::metadata(&path)?.len(),
        &back == field.x()
    );

    let img = plot::phase_image(field.x());
    let path = dir.path().join("phase.ppm");
    plot::write_ppm(&path, &img)?;
    println!(
        "PPM  {} bytes, identical: {}",
        std::fs::metadata(&path)?.len(),
        plot::read_ppm(&path)? == img
    );

    let path = dir.path().join("truth.json");
    write_json(
        &path,
        &TruthRecord::from_matrix(device.truth(), device.basis().labels().to_vec()),
    )?;
    let (m, labels) = TruthRecord::read(&path)?;
    println!("JSON truth {labels:?}, identical: {}", &m == device.truth());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
