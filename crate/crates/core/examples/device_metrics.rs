// Power condensation, mode-group crosstalk and MDL of a hand-written
// transfer matrix.

use holobench::analysis::{analyze, db_serde, TargetGroups, TransferMatrix};
use holobench::modes::ModeGroupMap;
use holobench::Complex64;
use nalgebra::DMatrix;

pub fn run_example() -> anyhow::Result<()> {
    // port k mostly couples to mode k, with a little leakage and 2 dB loss on LP11b
    let mut t = DMatrix::<Complex64>::zeros(6, 6);
    for k in 0..6 {
        t[(k, k)] = Complex64::new(if k >= 4 { 10f64.powf(-2.0 / 20.0) } else { 1.0 }, 0.0);
        t[((k + 2) % 6, k)] = Complex64::new(0.0, 0.2);
    }
    let t = TransferMatrix::new(t, vec!["LP01".into(), "LP11a".into(), "LP11b".into()])?;
    let report = analyze(&t, &ModeGroupMap::lp_default(), &TargetGroups::Dominant)?;

    println!("power matrix (rows: ports):");
    for row in report.power_matrix.rows() {
        println!(
            "  {}",
            row.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("  ")
        );
    }
    println!("target groups {:?}", report.crosstalk.target_groups);
    println!(
        "XT {} dB (worst port {} dB)",
        db_serde::display(report.xt_db),
        db_serde::display(report.crosstalk.worst_db)
    );
    println!(
        "MDL {} dB, singular values {:.4?}",
        db_serde::display(report.mdl_db),
        report.singular_values
    );

    let each = analyze(&t, &ModeGroupMap::each_mode_own_group(3), &TargetGroups::Dominant)?;
    println!("with one group per mode: XT {} dB", db_serde::display(each.xt_db));
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
