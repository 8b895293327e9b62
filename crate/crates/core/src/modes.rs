//! Hermite-Gaussian LP mode basis and overlap-integral demultiplexing.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::field::{check_same_grid, inner_product, ComplexField, Grid2D};

pub const MAX_HERMITE_ORDER: u32 = 20;
pub const DEFAULT_GRAM_TOL: f64 = 1e-6;
/// Per-sample relative rounding error assumed for overlap sums.
pub const ROUNDING_FLOOR: f64 = 4.0 * f64::EPSILON;
const NORM_TOL: f64 = 1e-12;
const MIN_EXTENT_IN_WAISTS: f64 = 6.0;

/// Physicists' Hermite polynomial `H_order(x)`.
pub fn hermite_poly(order: u32, x: f64) -> Result<f64> {
    if order > MAX_HERMITE_ORDER {
        return Err(Error::OrderTooHigh {
            order,
            max: MAX_HERMITE_ORDER,
        });
    }
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if order == 0 {
        return Ok(prev);
    }
    for k in 1..order {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeFamily {
    HermiteGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub family: ModeFamily,
    pub m: u32,
    pub n: u32,
    /// Waist in meters.
    pub w0: f64,
    /// Mode center in meters.
    pub center: (f64, f64),
}

impl ModeSpec {
    pub fn hermite_gauss(m: u32, n: u32, w0: f64, center: (f64, f64)) -> Result<Self> {
        let spec = ModeSpec {
            family: ModeFamily::HermiteGauss,
            m,
            n,
            w0,
            center,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.w0.is_finite() && self.w0 > 0.0) {
            return Err(Error::InvalidArgument(format!("waist {} must be positive", self.w0)));
        }
        if !(self.center.0.is_finite() && self.center.1.is_finite()) {
            return Err(Error::InvalidArgument("mode center must be finite".into()));
        }
        for order in [self.m, self.n] {
            if order > MAX_HERMITE_ORDER {
                return Err(Error::OrderTooHigh {
                    order,
                    max: MAX_HERMITE_ORDER,
                });
            }
        }
        Ok(())
    }
}

/// Warns when the grid is narrower than six waists along either axis.
pub fn check_mode_extent(grid: &Grid2D, w0: f64) -> Option<Warning> {
    let ratio = grid.extent_x().min(grid.extent_y()) / w0;
    (ratio < MIN_EXTENT_IN_WAISTS).then_some(Warning::NormalizationUnreliable {
        extent_over_waist: ratio,
    })
}

/// Real Hermite-Gaussian mode, normalized so that `power() == 1` on `grid`.
pub fn hg_mode(grid: Grid2D, spec: &ModeSpec) -> Result<ComplexField> {
    spec.validate()?;
    let ModeSpec { m, n, w0, center, .. } = *spec;

    // separable: evaluate each axis once
    let axis = |len: usize, coord: &dyn Fn(usize) -> f64, c0: f64, order: u32| -> Result<Vec<f64>> {
        (0..len)
            .map(|i| {
                let u = coord(i) - c0;
                Ok(hermite_poly(order, SQRT_2 * u / w0)? * (-(u * u) / (w0 * w0)).exp())
            })
            .collect()
    };
    let gx = axis(grid.nx(), &|i| grid.x(i), center.0, m)?;
    let gy = axis(grid.ny(), &|i| grid.y(i), center.1, n)?;

    let mut samples = Vec::with_capacity(grid.len());
    for vy in &gy {
        for vx in &gx {
            samples.push(Complex64::new(vx * vy, 0.0));
        }
    }
    let field = ComplexField::new(grid, samples)?;
    let power = field.power();
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "HG{m}{n} has no support on the grid (power {power:e})"
        )));
    }
    Ok(field.scale(Complex64::new(power.sqrt().recip(), 0.0)))
}

/// Assignment of each mode to a mode group, groups numbered contiguously from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModeGroupMap {
    groups: Vec<usize>,
}

impl TryFrom<Vec<usize>> for ModeGroupMap {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        ModeGroupMap::new(v)
    }
}

impl From<ModeGroupMap> for Vec<usize> {
    fn from(m: ModeGroupMap) -> Self {
        m.groups
    }
}

impl ModeGroupMap {
    pub fn new(groups: Vec<usize>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidArgument("empty mode-group map".into()));
        }
        let count = groups.iter().max().map_or(0, |g| g + 1);
        for g in 0..count {
            if !groups.contains(&g) {
                return Err(Error::InvalidArgument(format!(
                    "mode groups must be contiguous from 0; group {g} is empty"
                )));
            }
        }
        Ok(ModeGroupMap { groups })
    }

    /// LP01 alone, LP11a and LP11b together.
    pub fn lp_default() -> Self {
        ModeGroupMap { groups: vec![0, 1, 1] }
    }

    pub fn each_mode_own_group(modes: usize) -> Self {
        ModeGroupMap {
            groups: (0..modes).collect(),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group_count(&self) -> usize {
        self.groups.iter().max().map_or(0, |g| g + 1)
    }

    pub fn group_of(&self, mode: usize) -> usize {
        self.groups[mode]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.groups
    }
}

/// Ordered orthonormal set of modes on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    grid: Grid2D,
    modes: Vec<ComplexField>,
    labels: Vec<String>,
    group_map: ModeGroupMap,
    warnings: Vec<Warning>,
}

impl ModeBasis {
    pub fn new(
        grid: Grid2D,
        modes: Vec<ComplexField>,
        labels: Vec<String>,
        group_map: ModeGroupMap,
        gram_tol: f64,
    ) -> Result<Self> {
        if modes.is_empty() || modes.len() != labels.len() || modes.len() != group_map.mode_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} modes, {} labels, {} group entries",
                modes.len(),
                labels.len(),
                group_map.mode_count()
            )));
        }
        for (mode, label) in modes.iter().zip(&labels) {
            check_same_grid(&grid, mode.grid())?;
            let p = mode.power();
            if (p - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "mode {label} has power {p}, expected 1"
                )));
            }
        }
        let basis = ModeBasis {
            grid,
            modes,
            labels,
            group_map,
            warnings: Vec::new(),
        };
        let dev = basis.gram_deviation()?;
        if dev > gram_tol {
            return Err(Error::NotOrthonormal {
                max_deviation: dev,
                tolerance: gram_tol,
            });
        }
        Ok(basis)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ComplexField] {
        &self.modes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn group_map(&self) -> &ModeGroupMap {
        &self.group_map
    }

    pub fn with_group_map(mut self, group_map: ModeGroupMap) -> Result<Self> {
        if group_map.mode_count() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "group map covers {} modes, basis has {}",
                group_map.mode_count(),
                self.len()
            )));
        }
        self.group_map = group_map;
        Ok(self)
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Gram matrix `G[j][k] = <mode_j, mode_k>`.
    pub fn gram(&self) -> Result<Vec<Vec<Complex64>>> {
        self.modes
            .iter()
            .map(|a| self.modes.iter().map(|b| inner_product(a, b)).collect())
            .collect()
    }

    pub fn gram_deviation(&self) -> Result<f64> {
        let g = self.gram()?;
        let mut dev: f64 = 0.0;
        for (j, row) in g.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                dev = dev.max((v - target).norm());
            }
        }
        Ok(dev)
    }

    /// `sum_k coefficients[k] * mode_k`.
    pub fn synthesize(&self, coefficients: &[Complex64]) -> Result<ComplexField> {
        if coefficients.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a {}-mode basis",
                coefficients.len(),
                self.len()
            )));
        }
        let mut out = ComplexField::zeros(self.grid);
        for (c, mode) in coefficients.iter().zip(&self.modes) {
            out.add_scaled(*c, mode)?;
        }
        Ok(out)
    }
}

/// `[LP01, LP11a, LP11b] = [HG00, HG10, HG01]` with the default group map.
pub fn build_lp_basis(grid: Grid2D, w0: f64, center: (f64, f64)) -> Result<ModeBasis> {
    let orders = [(0, 0, "LP01"), (1, 0, "LP11a"), (0, 1, "LP11b")];
    let modes = orders
        .iter()
        .map(|&(m, n, _)| hg_mode(grid, &ModeSpec::hermite_gauss(m, n, w0, center)?))
        .collect::<Result<Vec<_>>>()?;
    let labels = orders.iter().map(|o| o.2.to_string()).collect();
    let mut basis = ModeBasis::new(grid, modes, labels, ModeGroupMap::lp_default(), DEFAULT_GRAM_TOL)?;
    if let Some(w) = check_mode_extent(&grid, w0) {
        log::warn!("{w}");
        basis.warnings.push(w);
    }
    Ok(basis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: Vec<Complex64>,
    /// `sum |c_k|^2 / power(field)`; zero for a zero field.
    pub captured_fraction: f64,
}

pub fn decompose(field: &ComplexField, basis: &ModeBasis) -> Result<Decomposition> {
    check_same_grid(field.grid(), basis.grid())?;
    let power = field.power();
    // overlaps at the rounding level of the sum are exact zeros
    let floor = ROUNDING_FLOOR * (field.grid().len() as f64).sqrt() * power.sqrt();
    let coefficients = basis
        .modes
        .iter()
        .map(|m| inner_product(field, m).map(|c| if c.norm() <= floor { Complex64::new(0.0, 0.0) } else { c }))
        .collect::<Result<Vec<_>>>()?;
    let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    Ok(Decomposition {
        captured_fraction: if power > 0.0 { captured / power } else { 0.0 },
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_grid() -> Grid2D {
        Grid2D::square(128, 5e-6).unwrap()
    }

    const W0: f64 = 80e-6;

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite_poly(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite_poly(1, 2.5).unwrap(), 5.0);
        assert_eq!(hermite_poly(2, 1.0).unwrap(), 2.0);
        // H_3 = 8x^3 - 12x
        assert!((hermite_poly(3, 0.5).unwrap() - (1.0 - 6.0)).abs() < 1e-12);
        assert!(matches!(
            hermite_poly(21, 0.0),
            Err(Error::OrderTooHigh { order: 21, .. })
        ));
        assert!(hermite_poly(20, 1.0).is_ok());
    }

    #[test]
    fn hg00_peaks_at_center() {
        let g = test_grid();
        let center = (20e-6, -10e-6);
        let f = hg_mode(g, &ModeSpec::hermite_gauss(0, 0, W0, center).unwrap()).unwrap();
        let (mut best, mut at) = (0.0, (0, 0));
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let v = f.get(ix, iy);
                assert!(v.re > 0.0 && v.im == 0.0);
                if v.re > best {
                    best = v.re;
                    at = (ix, iy);
                }
            }
        }
        assert!((g.x(at.0) - center.0).abs() < 1e-12 && (g.y(at.1) - center.1).abs() < 1e-12);
    }

    #[test]
    fn hg10_is_odd_in_x() {
        let g = test_grid();
        let f = hg_mode(g, &ModeSpec::hermite_gauss(1, 0, W0, (0.0, 0.0)).unwrap()).unwrap();
        for iy in 0..g.ny() {
            assert_eq!(f.get(64, iy).re, 0.0);
            for d in 1..60 {
                let (l, r) = (f.get(64 - d, iy).re, f.get(64 + d, iy).re);
                assert!((l + r).abs() <= 1e-12 * l.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn lp_basis_layout() {
        let b = build_lp_basis(test_grid(), W0, (0.0, 0.0)).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.labels(), ["LP01", "LP11a", "LP11b"]);
        assert_eq!(b.group_map().group_count(), 2);
        assert!(b.gram_deviation().unwrap() < 1e-6);
        assert!(b.warnings().is_empty());
    }

    #[test]
    fn narrow_grid_warns() {
        let g = Grid2D::square(64, 5e-6).unwrap();
        let b = build_lp_basis(g, 60e-6, (0.0, 0.0)).unwrap();
        assert!(matches!(b.warnings(), [Warning::NormalizationUnreliable { .. }]));
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let g = test_grid();
        let a = hg_mode(g, &ModeSpec::hermite_gauss(0, 0, W0, (0.0, 0.0)).unwrap()).unwrap();
        let b = hg_mode(g, &ModeSpec::hermite_gauss(0, 0, W0, (10e-6, 0.0)).unwrap()).unwrap();
        let res = ModeBasis::new(
            g,
            vec![a, b],
            vec!["a".into(), "b".into()],
            ModeGroupMap::each_mode_own_group(2),
            DEFAULT_GRAM_TOL,
        );
        assert!(matches!(res, Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn group_map_validation() {
        assert!(ModeGroupMap::new(vec![0, 2]).is_err());
        assert!(ModeGroupMap::new(vec![]).is_err());
        assert_eq!(ModeGroupMap::new(vec![1, 0, 1]).unwrap().group_count(), 2);
        assert_eq!(ModeGroupMap::each_mode_own_group(3).group_count(), 3);
    }

    #[test]
    fn decompose_modes_and_combinations() {
        let b = build_lp_basis(test_grid(), W0, (0.0, 0.0)).unwrap();
        for (j, mode) in b.modes().iter().enumerate() {
            let d = decompose(mode, &b).unwrap();
            for (k, c) in d.coefficients.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((c - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        let coeffs = [
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.0, 0.0),
        ];
        let f = b.synthesize(&coeffs).unwrap();
        let d = decompose(&f, &b).unwrap();
        for (got, want) in d.coefficients.iter().zip(coeffs) {
            assert!((got - want).norm() < 1e-10);
        }
        assert!((d.captured_fraction - 1.0).abs() < 1e-9);
        let back = b.synthesize(&d.coefficients).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-9 * f.max_abs());
    }

    #[test]
    fn decompose_zero_field() {
        let b = build_lp_basis(test_grid(), W0, (0.0, 0.0)).unwrap();
        let d = decompose(&ComplexField::zeros(test_grid()), &b).unwrap();
        assert_eq!(d.captured_fraction, 0.0);
    }

    #[test]
    fn basis_is_bit_identical_across_builds() {
        let a = build_lp_basis(test_grid(), W0, (1e-6, 0.0)).unwrap();
        let b = build_lp_basis(test_grid(), W0, (1e-6, 0.0)).unwrap();
        assert_eq!(a, b);
    }
}
