// Angular multiplexing with imperfectly crossed references: the R_X R_Y*
// beat grows as the relative polarization angle leaves 90 degrees.

use holobench::io::config::RunConfig;
use holobench::pipeline::{build_device, run_scheme, synthesize};
use holobench::recon::reference_beat_db;
use holobench::synth::SchemeVariant;

pub fn run_example() -> anyhow::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.camera.noise_fraction = Some(1.0 / 4095.0);
    let device = build_device(&cfg)?;
    println!("angle  beat [dB]  XT [dB]  MDL [dB]");
    for angle in [90.0, 88.0, 86.0, 84.0, 80.0] {
        cfg.scheme.relative_angle_deg = angle;
        let run = synthesize(&cfg, &device, SchemeVariant::Angular)?;
        let frames: Vec<_> = run.measurement.frames.iter().map(|(_, f)| f.clone()).collect();
        let beat = reference_beat_db(&frames, &run.scheme)?;
        let m = run_scheme(&cfg, &device, SchemeVariant::Angular)?.analysis.metrics;
        println!("{angle:5.0}  {beat:9.1}  {:7.2}  {:8.2}", m.xt_db, m.mdl_db);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
