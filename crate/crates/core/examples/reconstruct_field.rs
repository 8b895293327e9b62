// Off-axis reconstruction of one angular-multiplexed frame: sideband search,
// crop, recenter, and comparison with the field that made the frame.

use holobench::field::inner_product;
use holobench::io::config::RunConfig;
use holobench::pipeline::{build_device, synthesize};
use holobench::recon::reconstruct;
use holobench::synth::{synth_output_field, SchemeVariant};
use holobench::Polarization;

pub fn run_example() -> anyhow::Result<()> {
    let cfg = RunConfig::default();
    let device = build_device(&cfg)?;
    let run = synthesize(&cfg, &device, SchemeVariant::Angular)?;
    let (ex, frame) = &run.measurement.frames[2];
    let rc = cfg.recon_config(&run.scheme, frame.grid())?;
    let rec = reconstruct(frame, &run.scheme, &rc)?;

    println!("frame for port {} {}:", ex.port, ex.pol);
    for s in &rec.sidebands {
        let who = s.pol.map_or("unassigned".to_string(), |p| p.to_string());
        println!(
            "  {who:10} peak at ({:8.1}, {:8.1}) cycles/m, {:.1} dB above median",
            s.estimate.carrier.fx, s.estimate.carrier.fy, s.estimate.level_db
        );
    }
    let truth = synth_output_field(&device, ex.port, ex.pol)?;
    for pol in Polarization::BOTH {
        let (r, t) = (rec.fields.component(pol), truth.component(pol));
        let fid = inner_product(r, t)?.norm_sqr() / (r.power() * t.power());
        println!(
            "  out {pol}: power {:.4e} (truth {:.4e}), fidelity {fid:.6}",
            r.power(),
            t.power()
        );
    }
    for w in &rec.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
