//! Independent routes to quantities the library computes: direct DFT sums,
//! closed-form Gaussian overlaps, a Jacobi eigen-solver for singular values,
//! brute-force condensation and the expanded interference intensity.

use std::f64::consts::PI;

use holobench::analysis::{mdl_db, power_condense, singular_values, TransferMatrix};
use holobench::field::{fft2, ComplexField, Grid2D, JonesField, SpatialFrequency};
use holobench::modes::{decompose, hg_mode, ModeBasis, ModeGroupMap, ModeSpec};
use holobench::synth::{render_intensity, ReferenceBeam, SchemeConfig};
use holobench::{Complex64, Polarization};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ComplexField {
    ComplexField::from_fn(grid, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

// --- DFT ---------------------------------------------------------------

fn direct_dft(f: &ComplexField) -> Vec<Complex64> {
    let g = f.grid();
    let (nx, ny) = (g.nx() as f64, g.ny() as f64);
    let (hx, hy) = (g.nx() / 2, g.ny() / 2);
    let norm = 1.0 / (nx * ny).sqrt();
    let mut out = Vec::with_capacity(g.len());
    for ky in 0..g.ny() {
        for kx in 0..g.nx() {
            let mut acc = Complex64::new(0.0, 0.0);
            for iy in 0..g.ny() {
                for ix in 0..g.nx() {
                    let phase = -2.0
                        * PI
                        * ((kx as f64 - hx as f64) * (ix as f64 - hx as f64) / nx
                            + (ky as f64 - hy as f64) * (iy as f64 - hy as f64) / ny);
                    acc += f.get(ix, iy) * Complex64::from_polar(1.0, phase);
                }
            }
            out.push(acc * norm);
        }
    }
    out
}

#[test]
fn fft_matches_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (nx, ny) in [(8, 8), (12, 10), (16, 8)] {
        let grid = Grid2D::new(nx, ny, 5e-6, 7e-6).unwrap();
        let f = random_field(grid, &mut rng);
        let fast = fft2(&f);
        let slow = direct_dft(&f);
        for (a, b) in fast.samples().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12, "{nx}x{ny}: {a} vs {b}");
        }
    }
}

#[test]
fn plane_wave_lands_on_its_bin() {
    let grid = Grid2D::square(32, 10e-6).unwrap();
    let f = SpatialFrequency::from_bins(&grid, 5.0, -3.0);
    let wave = ComplexField::from_fn(grid, |x, y| {
        Complex64::from_polar(1.0, 2.0 * PI * (f.fx * x + f.fy * y))
    });
    let s = fft2(&wave);
    let peak = s.get(16 + 5, 16 - 3);
    assert!((peak.norm() - 32.0).abs() < 1e-9);
    let rest: f64 = s.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() - peak.norm_sqr();
    assert!(rest.abs() < 1e-16 * 1024.0 * 1024.0);
}

// --- mode overlaps -----------------------------------------------------

#[test]
fn displaced_gaussian_overlaps_match_closed_form() {
    let w0 = 100e-6;
    let grid = Grid2D::square(256, w0 / 16.0).unwrap();
    let d = w0 / 2.0;
    let overlap = |m: u32, shifted_m: u32| {
        let a = hg_mode(grid, &ModeSpec::hermite_gauss(shifted_m, 0, w0, (d, 0.0)).unwrap()).unwrap();
        let b = hg_mode(grid, &ModeSpec::hermite_gauss(m, 0, w0, (0.0, 0.0)).unwrap()).unwrap();
        holobench::field::inner_product(&a, &b).unwrap()
    };
    let s = d * d / (w0 * w0);
    // <n|D|n> = exp(-s/2) L_n(s); <0|D|1> = -sqrt(s) exp(-s/2) for a shift along +x
    let g00 = (-s / 2.0).exp();
    assert!((overlap(0, 0).re - g00).abs() < 1e-6);
    assert!((overlap(1, 1).re - g00 * (1.0 - s)).abs() < 1e-6);
    assert!((overlap(1, 0).re.abs() - s.sqrt() * g00).abs() < 1e-6);
    assert!(overlap(0, 0).im.abs() < 1e-15);
}

#[test]
fn decomposition_of_displaced_gaussian() {
    let w0 = 100e-6;
    let grid = Grid2D::square(256, w0 / 16.0).unwrap();
    let spec = |m, n| ModeSpec::hermite_gauss(m, n, w0, (0.0, 0.0)).unwrap();
    let modes = [(0, 0), (1, 0), (0, 1)]
        .map(|(m, n)| hg_mode(grid, &spec(m, n)).unwrap())
        .to_vec();
    let basis = ModeBasis::new(
        grid,
        modes,
        vec!["a".into(), "b".into(), "c".into()],
        ModeGroupMap::lp_default(),
        1e-6,
    )
    .unwrap();
    let shifted = hg_mode(grid, &ModeSpec::hermite_gauss(0, 0, w0, (0.0, w0 / 2.0)).unwrap()).unwrap();
    let dec = decompose(&shifted, &basis).unwrap();
    let s: f64 = 0.25;
    let expected = [(-s / 2.0).exp(), 0.0, s.sqrt() * (-s / 2.0).exp()];
    for (c, e) in dec.coefficients.iter().zip(expected) {
        assert!((c.norm() - e).abs() < 1e-6, "{c} vs {e}");
    }
    let captured: f64 = expected.iter().map(|e| e * e).sum();
    assert!((dec.captured_fraction - captured).abs() < 1e-6);
}

// --- singular values: Jacobi on the real embedding of T^H T ------------

fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

fn oracle_singular_values(t: &DMatrix<Complex64>) -> Vec<f64> {
    let n = t.ncols();
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = (0..t.nrows()).map(|k| t[(k, i)].conj() * t[(k, j)]).sum();
        }
    }
    // [[A, -B], [B, A]] for H = A + iB has each eigenvalue of H twice
    let mut e = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            e[i][j] = h[i][j].re;
            e[i + n][j + n] = h[i][j].re;
            e[i][j + n] = -h[i][j].im;
            e[i + n][j] = h[i][j].im;
        }
    }
    let ev = jacobi_eigenvalues(e);
    ev.iter().step_by(2).map(|l| l.max(0.0).sqrt()).collect()
}

#[test]
fn singular_values_match_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = random_matrix(6, &mut rng);
        let t = TransferMatrix::unlabeled(m.clone()).unwrap();
        let lib = singular_values(&t);
        let oracle = oracle_singular_values(&m);
        for (a, b) in lib.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10 * oracle[0], "{a} vs {b}");
        }
        let oracle_mdl = 20.0 * (oracle[0] / oracle[5]).log10();
        assert!((mdl_db(&t).unwrap() - oracle_mdl).abs() < 1e-9);
    }
}

// --- condensation ------------------------------------------------------

#[test]
fn condensation_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_matrix(6, &mut rng);
    let p = power_condense(&TransferMatrix::unlabeled(m.clone()).unwrap());
    for port in 0..3 {
        for mode in 0..3 {
            let mut acc = 0.0;
            for out_pol in 0..2 {
                for in_pol in 0..2 {
                    acc += m[(2 * mode + out_pol, 2 * port + in_pol)].norm_sqr();
                }
            }
            assert!((p.rows()[port][mode] - acc / 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn condensed_rows_follow_column_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = random_matrix(6, &mut rng);
    let p = power_condense(&TransferMatrix::unlabeled(m.clone()).unwrap());
    for port in 0..3 {
        let cols = m.column(2 * port).norm_squared() + m.column(2 * port + 1).norm_squared();
        let row: f64 = p.rows()[port].iter().sum();
        assert!((row - cols / 2.0).abs() < 1e-12);
    }
    assert!((p.total() - m.norm_squared() / 2.0).abs() < 1e-12);
}

// --- interference ------------------------------------------------------

#[test]
fn angular_intensity_matches_cross_term_expansion() {
    let grid = Grid2D::square(64, 20e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let signal = JonesField::new(random_field(grid, &mut rng), random_field(grid, &mut rng)).unwrap();
    let fx = SpatialFrequency::from_bins(&grid, 8.0, 8.0);
    let fy = SpatialFrequency::from_bins(&grid, -8.0, 8.0);
    let rx = ReferenceBeam::new([Complex64::new(0.9, 0.1), Complex64::new(0.05, 0.0)], fx, 0.3).unwrap();
    let ry = ReferenceBeam::new([Complex64::new(0.0, 0.02), Complex64::new(0.7, -0.2)], fy, -1.1).unwrap();
    let scheme = SchemeConfig::Angular {
        rx,
        ry,
        min_carrier_separation_bins: 8.0,
    };
    let image = render_intensity(&signal, &scheme).unwrap();

    let reference = |beam: &ReferenceBeam, pol: usize, x: f64, y: f64| {
        beam.jones[pol]
            * Complex64::from_polar(
                1.0,
                -(2.0 * PI * (beam.carrier.fx * x + beam.carrier.fy * y) + beam.phase0),
            )
    };
    for iy in (0..64).step_by(7) {
        for ix in (0..64).step_by(5) {
            let (x, y) = (grid.x(ix), grid.y(iy));
            let mut expected = 0.0;
            for pol in Polarization::BOTH {
                let s = signal.component(pol).get(ix, iy);
                let (a, b) = (reference(&rx, pol.index(), x, y), reference(&ry, pol.index(), x, y));
                expected += s.norm_sqr()
                    + a.norm_sqr()
                    + b.norm_sqr()
                    + 2.0 * (s * a.conj()).re
                    + 2.0 * (s * b.conj()).re
                    + 2.0 * (a * b.conj()).re;
            }
            let got = image.values[iy * 64 + ix];
            assert!(
                (got - expected).abs() < 1e-12 * expected.max(1.0),
                "({ix},{iy}) {got} vs {expected}"
            );
        }
    }
}

#[test]
fn spatial_intensity_places_each_polarization_on_its_half() {
    let grid = Grid2D::square(64, 20e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let signal = JonesField::new(random_field(grid, &mut rng), random_field(grid, &mut rng)).unwrap();
    let scheme = SchemeConfig::spatial_default(&grid, 0.8).unwrap();
    let image = render_intensity(&signal, &scheme).unwrap();
    let SchemeConfig::Spatial { reference } = &scheme else {
        unreachable!()
    };
    let half = Grid2D::new(32, 64, 20e-6, 20e-6).unwrap();
    for iy in (0..64).step_by(3) {
        for u in (0..32).step_by(3) {
            let (x, y) = (half.x(u), half.y(iy));
            let tilt = Complex64::from_polar(1.0, -(2.0 * PI * (reference.carrier.fx * x + reference.carrier.fy * y)));
            for (pol, col0) in [(Polarization::X, 0), (Polarization::Y, 32)] {
                let s = signal.component(pol).get(u + 16, iy);
                let expected = (s + reference.jones[pol.index()] * tilt).norm_sqr();
                let got = image.values[iy * 64 + col0 + u];
                assert!((got - expected).abs() < 1e-12 * expected.max(1.0));
            }
        }
    }
}
