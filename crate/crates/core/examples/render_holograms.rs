// Renders one excitation of the default designed device under both schemes
// and writes the camera frames as 16-bit PGM.
//
// `cargo run --example render_holograms -- [OUT_DIR]`

use std::path::{Path, PathBuf};

use holobench::io::config::RunConfig;
use holobench::io::pgm;
use holobench::pipeline::{build_device, synthesize};
use holobench::synth::SchemeVariant;

pub fn run_example() -> anyhow::Result<()> {
    let tmp = tempfile::TempDir::new()?;
    render_to(tmp.path())
}

fn render_to(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    let cfg = RunConfig::default();
    let device = build_device(&cfg)?;

    for variant in [SchemeVariant::Spatial, SchemeVariant::Angular] {
        let run = synthesize(&cfg, &device, variant)?;
        let (ex, frame) = &run.measurement.frames[0];
        let codes = frame.codes();
        let max = codes.iter().max().copied().unwrap_or(0);
        let path = out.join(format!("{variant}_p{}_{}.pgm", ex.port, ex.pol));
        pgm::write_frame(&path, frame)?;
        println!(
            "{variant}: reference amplitude {:.3e}, full scale {:.3e}, top code used {max}/{}, wrote {}",
            run.reference_amplitude,
            run.camera.full_scale,
            run.camera.max_code(),
            path.display()
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => render_to(&PathBuf::from(dir)),
        None => run_example(),
    }
}
