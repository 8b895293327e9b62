//! Properties that hold for any input: transform identities, basis
//! orthonormality, metric invariances and linearity of decomposition and
//! reconstruction.

use holobench::analysis::{crosstalk_db, mdl_db, power_condense, TargetGroups, TransferMatrix};
use holobench::design::random_unitary;
use holobench::field::{fft2, ifft2, ComplexField, Grid2D, JonesField};
use holobench::modes::{build_lp_basis, decompose, ModeGroupMap};
use holobench::recon::{reconstruct, ReconConfig};
use holobench::synth::{render_frame, CameraModel, SchemeConfig};
use holobench::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: Grid2D, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexField::from_fn(grid, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_matrix(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn even(lo: usize, hi: usize) -> impl Strategy<Value = usize> {
    (lo / 2..=hi / 2).prop_map(|h| 2 * h)
}

fn lp_groups() -> ModeGroupMap {
    ModeGroupMap::lp_default()
}

proptest! {
    #[test]
    fn parseval(nx in even(8, 64), ny in even(8, 64), pitch in 1e-6..50e-6f64, seed in any::<u64>()) {
        let f = random_field(Grid2D::new(nx, ny, pitch, pitch * 1.3).unwrap(), seed);
        let p = f.power();
        prop_assert!((fft2(&f).power() - p).abs() <= 1e-10 * p);
    }

    #[test]
    fn fft_round_trip(nx in even(8, 64), ny in even(8, 64), seed in any::<u64>()) {
        let f = random_field(Grid2D::new(nx, ny, 10e-6, 10e-6).unwrap(), seed);
        let back = ifft2(&fft2(&f));
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn basis_is_orthonormal(n in even(64, 256), waists in 8.0..20.0f64, cx in -0.5..0.5f64, cy in -0.5..0.5f64) {
        let pitch = 10e-6;
        let grid = Grid2D::square(n, pitch).unwrap();
        let w0 = n as f64 * pitch / waists;
        let basis = build_lp_basis(grid, w0, (cx * w0, cy * w0)).unwrap();
        prop_assert!(basis.gram_deviation().unwrap() <= 1e-6);
    }

    #[test]
    fn mode_decomposes_to_unit_vector(n in even(64, 192), waists in 8.0..16.0f64) {
        let pitch = 10e-6;
        let basis = build_lp_basis(Grid2D::square(n, pitch).unwrap(), n as f64 * pitch / waists, (0.0, 0.0)).unwrap();
        for (k, mode) in basis.modes().iter().enumerate() {
            let d = decompose(mode, &basis).unwrap();
            for (j, c) in d.coefficients.iter().enumerate() {
                let e = if j == k { 1.0 } else { 0.0 };
                prop_assert!((c - e).norm() <= 1e-10, "mode {k} coefficient {j}: {c}");
            }
        }
    }

    #[test]
    fn decomposition_is_linear(seed in any::<u64>(), a_re in -2.0..2.0f64, a_im in -2.0..2.0f64) {
        let grid = Grid2D::square(64, 10e-6).unwrap();
        let basis = build_lp_basis(grid, 80e-6, (0.0, 0.0)).unwrap();
        let f = random_field(grid, seed);
        let g = random_field(grid, seed.wrapping_add(1));
        let a = Complex64::new(a_re, a_im);
        let combo = f.scale(a).add(&g).unwrap();
        let (df, dg, dc) = (
            decompose(&f, &basis).unwrap(),
            decompose(&g, &basis).unwrap(),
            decompose(&combo, &basis).unwrap(),
        );
        for k in 0..3 {
            let expected = a * df.coefficients[k] + dg.coefficients[k];
            prop_assert!((dc.coefficients[k] - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn captured_fraction_at_most_one(seed in any::<u64>(), w_px in 4.0..12.0f64) {
        let grid = Grid2D::square(96, 10e-6).unwrap();
        let basis = build_lp_basis(grid, w_px * 10e-6, (0.0, 0.0)).unwrap();
        let d = decompose(&random_field(grid, seed), &basis).unwrap();
        prop_assert!(d.captured_fraction <= 1.0 + 1e-9);
        let m = basis.synthesize(&[Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.0), Complex64::new(0.0, 0.9)]).unwrap();
        let d = decompose(&m, &basis).unwrap();
        prop_assert!((d.captured_fraction - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn condensed_total_is_half_frobenius(seed in any::<u64>()) {
        let m = random_matrix(6, seed);
        let p = power_condense(&TransferMatrix::unlabeled(m.clone()).unwrap());
        prop_assert!((p.total() - 0.5 * m.norm_squared()).abs() <= 1e-12 * m.norm_squared());
    }

    #[test]
    fn metrics_ignore_global_scale(seed in any::<u64>(), mag in 1e-3..1e3f64, phase in -3.0..3.0f64) {
        let m = random_matrix(6, seed);
        let c = Complex64::from_polar(mag, phase);
        let t = TransferMatrix::unlabeled(m.clone()).unwrap();
        let ct = TransferMatrix::unlabeled(m.map(|v| v * c)).unwrap();
        prop_assert!((mdl_db(&t).unwrap() - mdl_db(&ct).unwrap()).abs() <= 1e-9);
        let xt = |t: &TransferMatrix| crosstalk_db(&power_condense(t), &lp_groups(), &TargetGroups::Dominant).unwrap().mean_db;
        prop_assert!((xt(&t) - xt(&ct)).abs() <= 1e-9);
    }

    #[test]
    fn unitary_matrices_have_zero_mdl(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(6, &mut rng);
        prop_assert!(mdl_db(&TransferMatrix::unlabeled(u).unwrap()).unwrap().abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mdl_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_matrix(6, seed ^ 0x5eed);
        let (u, v) = (random_unitary(6, &mut rng), random_unitary(6, &mut rng));
        let a = mdl_db(&TransferMatrix::unlabeled(t.clone()).unwrap()).unwrap();
        let b = mdl_db(&TransferMatrix::unlabeled(&u * &t * &v).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // Reference and full scale stay fixed while the signal is scaled, so only
    // quantization separates recon(a S) from a recon(S).
    #[test]
    fn reconstruction_is_linear_in_amplitude(a in 0.3..1.0f64, c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, c2 in -1.0..1.0f64) {
        let grid = Grid2D::square(128, 20e-6).unwrap();
        let basis = build_lp_basis(grid, 0.35e-3, (0.0, 0.0)).unwrap();
        let coeffs = [Complex64::new(1.0, c0), Complex64::new(c1, 0.2), Complex64::new(0.1, c2)];
        let field = basis.synthesize(&coeffs).unwrap();
        let rms = (field.power() / grid.pixel_area() / grid.len() as f64).sqrt();
        let signal = JonesField::new(field.clone(), field.scale(Complex64::new(0.0, 0.5))).unwrap();
        let scheme = SchemeConfig::angular_default(&grid, rms, 90.0).unwrap();
        let peak = field.max_abs() * 1.5 + 2.0 * rms;
        let full_scale = peak * peak * 1.2;
        let camera = CameraModel::new(12, full_scale, 0.0, 0).unwrap();
        let cfg = ReconConfig::for_scheme(&scheme, &grid);

        let run = |s: &JonesField| reconstruct(&render_frame(s, &scheme, &camera).unwrap().frame, &scheme, &cfg).unwrap();
        let full = run(&signal);
        let scaled = run(&signal.scale(Complex64::new(a, 0.0)));

        // quantization step in field units, spread over the crop window
        let step = full_scale / 4095.0 / rms;
        for pol in holobench::Polarization::BOTH {
            let expected = full.fields.component(pol).scale(Complex64::new(a, 0.0));
            let diff = scaled.fields.component(pol).sub(&expected).unwrap();
            let rms_err = (diff.power() / grid.pixel_area() / grid.len() as f64).sqrt();
            prop_assert!(rms_err <= step, "{pol}: rms error {rms_err:e}, step {step:e}");
        }
    }
}
