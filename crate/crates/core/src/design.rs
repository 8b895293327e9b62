//! Seeded ground-truth devices with prescribed mode-dependent loss and
//! mode-group crosstalk.
//!
//! The matrix is `T = C(theta) diag(g)`, where `C = exp(i theta H)` is a
//! unitary coupler built from a random Hermitian `H`. The singular values of
//! `T` are exactly `g`, so the gains fix the MDL, and `theta` is bisected
//! until the crosstalk hits its target.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, MetricsReport, TargetGroups, TransferMatrix};
use crate::error::{Error, Result};
use crate::modes::ModeGroupMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDesign {
    pub modes: usize,
    pub mdl_db: f64,
    pub xt_db: f64,
    pub seed: u64,
    pub group_map: ModeGroupMap,
}

impl DeviceDesign {
    /// Three LP modes, 1.50 dB MDL, -14 dB crosstalk.
    pub fn lantern_default(seed: u64) -> Self {
        DeviceDesign {
            modes: 3,
            mdl_db: 1.50,
            xt_db: -14.0,
            seed,
            group_map: ModeGroupMap::lp_default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignedDevice {
    pub truth: DMatrix<Complex64>,
    pub theta: f64,
    /// Metrics of `truth`, computed directly.
    pub metrics: MetricsReport,
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DVector::from_fn(n, |i, _| {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    q * DMatrix::from_diagonal(&phases)
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    (&a + a.adjoint()).map(|v| v * 0.5)
}

/// `exp(i theta H)` for Hermitian `H`, from its eigendecomposition.
fn unitary_exp(eig: &nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>, theta: f64) -> DMatrix<Complex64> {
    let v = &eig.eigenvectors;
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, theta * l)),
    );
    v * DMatrix::from_diagonal(&d) * v.adjoint()
}

pub fn design_device(design: &DeviceDesign) -> Result<DesignedDevice> {
    let DeviceDesign {
        modes,
        mdl_db,
        xt_db,
        seed,
        ref group_map,
    } = *design;
    if modes == 0 || group_map.mode_count() != modes {
        return Err(Error::InvalidArgument(format!(
            "{modes} modes with a group map over {}",
            group_map.mode_count()
        )));
    }
    if !(mdl_db.is_finite() && mdl_db >= 0.0) || !xt_db.is_finite() {
        return Err(Error::InvalidArgument("targets must be finite, MDL >= 0".into()));
    }
    let n = 2 * modes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // gains span [1, 10^(mdl/20)] with both ends present
    let top = 10f64.powf(mdl_db / 20.0);
    let mut gains: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => top,
            _ => rng.random_range(1.0..=top),
        })
        .collect();
    gains.shuffle(&mut rng);
    let g = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        gains.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    let eig = random_hermitian(n, &mut rng).symmetric_eigen();

    let labels: Vec<String> = (0..modes).map(|m| format!("m{m}")).collect();
    let eval = |theta: f64| -> Result<(DMatrix<Complex64>, MetricsReport)> {
        let t = unitary_exp(&eig, theta) * &g;
        let report = analyze(
            &TransferMatrix::new(t.clone(), labels.clone())?,
            group_map,
            &TargetGroups::Dominant,
        )?;
        Ok((t, report))
    };

    // bracket the target starting from the uncoupled device, then bisect
    let (mut lo, mut hi) = (0.0, 0.01);
    while eval(hi)?.1.xt_db < xt_db {
        lo = hi;
        hi *= 1.5;
        if hi > 10.0 {
            return Err(Error::InvalidArgument(format!(
                "crosstalk target {xt_db} dB not reachable with seed {seed}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.1.xt_db < xt_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (truth, metrics) = eval(theta)?;
    Ok(DesignedDevice { truth, theta, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_design_hits_targets() {
        let d = design_device(&DeviceDesign::lantern_default(7)).unwrap();
        assert!((d.metrics.mdl_db - 1.50).abs() < 1e-9, "{}", d.metrics.mdl_db);
        assert!((d.metrics.xt_db + 14.0).abs() < 1e-6, "{}", d.metrics.xt_db);
        assert_eq!(d.metrics.crosstalk.target_groups, [0, 1, 1]);
    }

    #[test]
    fn design_is_deterministic() {
        let a = design_device(&DeviceDesign::lantern_default(3)).unwrap();
        let b = design_device(&DeviceDesign::lantern_default(3)).unwrap();
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(6, &mut rng);
        let e = (u.adjoint() * &u - DMatrix::<Complex64>::identity(6, 6)).norm();
        assert!(e < 1e-12);
    }
}
