// Centered unitary FFT: a tilted plane wave lands on one bin and power is
// the same in both domains.

use holobench::field::{fft2, ifft2, plane_wave, Grid2D, SpatialFrequency};

pub fn run_example() -> anyhow::Result<()> {
    let grid = Grid2D::square(64, 20e-6)?;
    let carrier = SpatialFrequency::from_bins(&grid, 6.0, -4.0);
    let wave = plane_wave(grid, 1.0, carrier, 0.3)?;
    let spectrum = fft2(&wave);

    let (kx, ky) = grid.bins_of(carrier);
    let peak = spectrum.at_offset(kx as isize, ky as isize).unwrap();
    println!(
        "carrier ({:.0}, {:.0}) cycles/m = bin offset ({kx}, {ky})",
        carrier.fx, carrier.fy
    );
    println!(
        "peak |X| = {:.3} (sqrt(N) = {})",
        peak.norm(),
        (grid.len() as f64).sqrt()
    );
    println!("power: field {:.6e}, spectrum {:.6e}", wave.power(), spectrum.power());

    let back = ifft2(&spectrum);
    println!("round-trip max error {:.1e}", back.max_abs_diff(&wave)?);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
