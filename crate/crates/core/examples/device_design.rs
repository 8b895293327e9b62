// Builds ground-truth devices with prescribed MDL and crosstalk.

use holobench::design::{design_device, DeviceDesign};

pub fn run_example() -> anyhow::Result<()> {
    for (mdl, xt) in [(1.5, -14.0), (0.5, -20.0), (3.0, -8.0)] {
        let design = DeviceDesign {
            mdl_db: mdl,
            xt_db: xt,
            ..DeviceDesign::lantern_default(7)
        };
        let d = design_device(&design)?;
        println!(
            "asked MDL {mdl:.2} / XT {xt:.1} dB -> got MDL {:.4} / XT {:.4} dB (mixing angle {:.4})",
            d.metrics.mdl_db, d.metrics.xt_db, d.theta
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
