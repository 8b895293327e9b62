// Full in-memory pipeline under both schemes against the device's own
// metrics.

use holobench::io::config::RunConfig;
use holobench::pipeline::{build_device, run_scheme, truth_metrics};
use holobench::synth::SchemeVariant;

pub fn run_example() -> anyhow::Result<()> {
    let cfg = RunConfig::default();
    let device = build_device(&cfg)?;
    let truth = truth_metrics(&device, &cfg.group_map()?, &cfg.targets())?;
    println!("{:<12} {:>8} {:>8}", "", "XT [dB]", "MDL [dB]");
    println!("{:<12} {:8.3} {:8.3}", "truth", truth.xt_db, truth.mdl_db);
    for variant in [SchemeVariant::Spatial, SchemeVariant::Angular] {
        let run = run_scheme(&cfg, &device, variant)?;
        let m = &run.analysis.metrics;
        let captured = run
            .analysis
            .captured_fraction
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:<12} {:8.3} {:8.3}   min captured fraction {captured:.4}",
            variant.name(),
            m.xt_db,
            m.mdl_db
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
