// LP mode basis on a camera grid, and the overlap coefficients of a field
// built from it.

use holobench::field::Grid2D;
use holobench::modes::{build_lp_basis, decompose};
use holobench::Complex64;

pub fn run_example() -> anyhow::Result<()> {
    let grid = Grid2D::square(128, 20e-6)?;
    let basis = build_lp_basis(grid, 0.4e-3, (0.0, 0.0))?;
    println!("modes {:?}, groups {:?}", basis.labels(), basis.group_map().as_slice());
    println!("Gram deviation {:.1e}", basis.gram_deviation()?);

    let coeffs = [
        Complex64::new(0.8, 0.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(-0.3, 0.1),
    ];
    let field = basis.synthesize(&coeffs)?;
    let d = decompose(&field, &basis)?;
    for ((label, c), truth) in basis.labels().iter().zip(&d.coefficients).zip(coeffs) {
        println!("  {label:6} {c:.6}  (built with {truth})");
    }
    println!("captured fraction {:.9}", d.captured_fraction);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
