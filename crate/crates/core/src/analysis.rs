//! Transfer-matrix assembly, power condensation, mode-group crosstalk and
//! mode-dependent loss.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Polarization, Result};
use crate::modes::{ModeBasis, ModeGroupMap};

pub const CONDENSATION_CONVENTION: &str = "P[port][mode] = 1/2 * sum over input pol * sum over output pol of |T|^2";
pub const AGGREGATION_CONVENTION: &str = "headline XT = 10 log10(mean over ports of linear off-target/target ratios)";

/// Complex `(2M) x (2P)` matrix. Row `2 mode + out_pol`, column
/// `2 port + in_pol`, with X before Y on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    entries: DMatrix<Complex64>,
    mode_labels: Vec<String>,
}

impl TransferMatrix {
    pub fn new(entries: DMatrix<Complex64>, mode_labels: Vec<String>) -> Result<Self> {
        if entries.nrows() != 2 * mode_labels.len() || mode_labels.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} mode labels",
                entries.nrows(),
                mode_labels.len()
            )));
        }
        if entries.ncols() == 0 || !entries.ncols().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "{} columns; expected 2 per port",
                entries.ncols()
            )));
        }
        if entries.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("transfer matrix has non-finite entries".into()));
        }
        Ok(TransferMatrix { entries, mode_labels })
    }

    /// Labels `m0, m1, ...` for matrices built without a basis.
    pub fn unlabeled(entries: DMatrix<Complex64>) -> Result<Self> {
        let modes = entries.nrows() / 2;
        TransferMatrix::new(entries, (0..modes).map(|m| format!("m{m}")).collect())
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn modes(&self) -> usize {
        self.mode_labels.len()
    }

    pub fn ports(&self) -> usize {
        self.entries.ncols() / 2
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.mode_labels
    }

    pub fn row_labels(&self) -> Vec<String> {
        self.mode_labels
            .iter()
            .flat_map(|m| Polarization::BOTH.map(|pol| format!("{m}/{pol}")))
            .collect()
    }

    pub fn col_labels(&self) -> Vec<String> {
        (0..self.ports())
            .flat_map(|p| Polarization::BOTH.map(|pol| format!("port{p}/{pol}")))
            .collect()
    }

    pub fn get(&self, mode: usize, out_pol: Polarization, port: usize, in_pol: Polarization) -> Complex64 {
        self.entries[(2 * mode + out_pol.index(), 2 * port + in_pol.index())]
    }
}

/// Decomposed output of one excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMeasurement {
    pub port: usize,
    pub pol: Polarization,
    /// Mode coefficients of the X output field.
    pub x: Vec<Complex64>,
    /// Mode coefficients of the Y output field.
    pub y: Vec<Complex64>,
}

/// Places each measurement in its column; the port count is the largest
/// port seen plus one.
pub fn assemble_matrix(measurements: &[ColumnMeasurement], basis: &ModeBasis) -> Result<TransferMatrix> {
    let ports = measurements.iter().map(|m| m.port + 1).max().unwrap_or(0);
    assemble_matrix_with_ports(measurements, basis, ports)
}

pub fn assemble_matrix_with_ports(
    measurements: &[ColumnMeasurement],
    basis: &ModeBasis,
    ports: usize,
) -> Result<TransferMatrix> {
    if ports == 0 {
        return Err(Error::InvalidArgument("no measurements".into()));
    }
    let m = basis.len();
    let mut filled = vec![false; 2 * ports];
    let mut entries = DMatrix::zeros(2 * m, 2 * ports);
    for meas in measurements {
        if meas.port >= ports {
            return Err(Error::IndexOutOfRange(format!("port {} of {ports}", meas.port)));
        }
        if meas.x.len() != m || meas.y.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "port {} {}: {}+{} coefficients for a {m}-mode basis",
                meas.port,
                meas.pol,
                meas.x.len(),
                meas.y.len()
            )));
        }
        let col = 2 * meas.port + meas.pol.index();
        if std::mem::replace(&mut filled[col], true) {
            return Err(Error::DuplicateInput {
                port: meas.port,
                pol: meas.pol,
            });
        }
        for k in 0..m {
            entries[(2 * k, col)] = meas.x[k];
            entries[(2 * k + 1, col)] = meas.y[k];
        }
    }
    if let Some(col) = filled.iter().position(|f| !f) {
        return Err(Error::MissingInput {
            port: col / 2,
            pol: Polarization::from_index(col % 2).expect("col % 2 < 2"),
        });
    }
    TransferMatrix::new(entries, basis.labels().to_vec())
}

/// Non-negative `P x M` power matrix, input port to output mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMatrix {
    rows: Vec<Vec<f64>>,
}

impl PowerMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch(
                "power matrix must be rectangular and non-empty".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "power matrix entries must be finite and >= 0".into(),
            ));
        }
        Ok(PowerMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn ports(&self) -> usize {
        self.rows.len()
    }

    pub fn modes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<PowerMatrix> {
        PowerMatrix::new(self.rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect())
    }

    fn group_powers(&self, port: usize, groups: &ModeGroupMap) -> Vec<f64> {
        let mut out = vec![0.0; groups.group_count()];
        for (m, v) in self.rows[port].iter().enumerate() {
            out[groups.group_of(m)] += v;
        }
        out
    }
}

/// Averaged over input polarizations, summed over output polarizations.
pub fn power_condense(t: &TransferMatrix) -> PowerMatrix {
    power_condense_pols(t, &Polarization::BOTH)
}

/// Condensation restricted to the given input polarizations.
pub fn power_condense_pols(t: &TransferMatrix, in_pols: &[Polarization]) -> PowerMatrix {
    let weight = 1.0 / in_pols.len() as f64;
    let rows = (0..t.ports())
        .map(|p| {
            (0..t.modes())
                .map(|m| {
                    weight
                        * in_pols
                            .iter()
                            .flat_map(|&ip| Polarization::BOTH.map(|op| t.get(m, op, p, ip).norm_sqr()))
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    PowerMatrix { rows }
}

/// How each port's target mode group is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetGroups {
    /// The group receiving the most power; ties go to the lowest index.
    Dominant,
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crosstalk {
    pub target_groups: Vec<usize>,
    /// Off-target over target power per port, linear.
    pub per_port_ratio: Vec<f64>,
    #[serde(with = "db_serde::vec")]
    pub per_port_db: Vec<f64>,
    /// Mean of the linear ratios, in dB.
    #[serde(with = "db_serde")]
    pub mean_db: f64,
    /// Largest per-port value.
    #[serde(with = "db_serde")]
    pub worst_db: f64,
    /// Ports whose target group received no power.
    pub zero_target_ports: Vec<usize>,
}

pub fn to_db(ratio: f64) -> f64 {
    if ratio.is_infinite() {
        f64::INFINITY
    } else {
        10.0 * ratio.log10()
    }
}

pub fn crosstalk_db(p: &PowerMatrix, groups: &ModeGroupMap, targets: &TargetGroups) -> Result<Crosstalk> {
    if groups.mode_count() != p.modes() {
        return Err(Error::ShapeMismatch(format!(
            "group map covers {} modes, power matrix has {}",
            groups.mode_count(),
            p.modes()
        )));
    }
    let target_groups: Vec<usize> = match targets {
        TargetGroups::Dominant => (0..p.ports())
            .map(|port| {
                let g = p.group_powers(port, groups);
                // first maximum wins ties
                (0..g.len()).fold(0, |best, i| if g[i] > g[best] { i } else { best })
            })
            .collect(),
        TargetGroups::Fixed(v) => {
            if v.len() != p.ports() {
                return Err(Error::ShapeMismatch(format!(
                    "{} target groups for {} ports",
                    v.len(),
                    p.ports()
                )));
            }
            if let Some(g) = v.iter().find(|g| **g >= groups.group_count()) {
                return Err(Error::IndexOutOfRange(format!(
                    "target group {g} of {}",
                    groups.group_count()
                )));
            }
            v.clone()
        }
    };
    let mut per_port_ratio = Vec::with_capacity(p.ports());
    let mut zero_target_ports = Vec::new();
    for (port, &target) in target_groups.iter().enumerate() {
        let g = p.group_powers(port, groups);
        let on = g[target];
        let off: f64 = g.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, v)| v).sum();
        if on > 0.0 {
            per_port_ratio.push(off / on);
        } else {
            zero_target_ports.push(port);
            per_port_ratio.push(f64::INFINITY);
        }
    }
    let mean = per_port_ratio.iter().sum::<f64>() / per_port_ratio.len() as f64;
    let worst = per_port_ratio.iter().copied().fold(0.0, f64::max);
    Ok(Crosstalk {
        target_groups,
        per_port_db: per_port_ratio.iter().map(|&r| to_db(r)).collect(),
        mean_db: to_db(mean),
        worst_db: to_db(worst),
        per_port_ratio,
        zero_target_ports,
    })
}

/// Singular values of the full complex matrix, descending.
pub fn singular_values(t: &TransferMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = t
        .entries
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `10 log10(sigma_max^2 / sigma_min^2)`; `+inf` for a numerically rank-deficient matrix.
pub fn mdl_db(t: &TransferMatrix) -> Result<f64> {
    mdl_from_singular_values(&singular_values(t), t.entries.nrows().max(t.entries.ncols()))
}

fn mdl_from_singular_values(sv: &[f64], dim: usize) -> Result<f64> {
    let (max, min) = (sv[0], *sv.last().expect("non-empty"));
    if max.is_nan() || max <= 0.0 {
        return Err(Error::InvalidArgument("MDL of a zero matrix is undefined".into()));
    }
    if min <= max * f64::EPSILON * dim as f64 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (max / min).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub condensation: String,
    pub aggregation: String,
    pub group_map: Vec<usize>,
    pub target_assignment: TargetGroups,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Headline mode-group crosstalk (mean of linear per-port ratios), dB.
    #[serde(with = "db_serde")]
    pub xt_db: f64,
    #[serde(with = "db_serde")]
    pub mdl_db: f64,
    pub rank_deficient: bool,
    pub crosstalk: Crosstalk,
    /// Mean over all (port, input pol) pairs, each condensed separately.
    #[serde(with = "db_serde")]
    pub xt_port_pol_mean_db: f64,
    /// Per (port, input pol), in column order.
    #[serde(with = "db_serde::vec")]
    pub xt_port_pol_db: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub mode_labels: Vec<String>,
    pub power_matrix: PowerMatrix,
    pub conventions: Conventions,
}

pub fn analyze(t: &TransferMatrix, groups: &ModeGroupMap, targets: &TargetGroups) -> Result<MetricsReport> {
    let power = power_condense(t);
    let crosstalk = crosstalk_db(&power, groups, targets)?;

    // each input polarization condensed on its own, using the port's headline target
    let fixed = TargetGroups::Fixed(crosstalk.target_groups.clone());
    let by_pol = Polarization::BOTH
        .iter()
        .map(|&pol| crosstalk_db(&power_condense_pols(t, &[pol]), groups, &fixed))
        .collect::<Result<Vec<_>>>()?;
    let port_pol_ratio: Vec<f64> = (0..t.ports())
        .flat_map(|p| by_pol.iter().map(move |x| x.per_port_ratio[p]))
        .collect();
    let port_pol_mean = port_pol_ratio.iter().sum::<f64>() / port_pol_ratio.len() as f64;

    let sv = singular_values(t);
    let mdl = mdl_from_singular_values(&sv, t.entries.nrows().max(t.entries.ncols()))?;
    Ok(MetricsReport {
        xt_db: crosstalk.mean_db,
        mdl_db: mdl,
        rank_deficient: mdl.is_infinite(),
        xt_port_pol_mean_db: to_db(port_pol_mean),
        xt_port_pol_db: port_pol_ratio.iter().map(|&r| to_db(r)).collect(),
        crosstalk,
        singular_values: sv,
        mode_labels: t.mode_labels.clone(),
        power_matrix: power,
        conventions: Conventions {
            condensation: CONDENSATION_CONVENTION.into(),
            aggregation: AGGREGATION_CONVENTION.into(),
            group_map: groups.as_slice().to_vec(),
            target_assignment: targets.clone(),
        },
    })
}

/// dB values that may be infinite, serialized as numbers or the strings
/// `"-inf"`, `"inf"`, `"nan"`.
pub mod db_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number or inf sentinel, got {other:?}"))),
            },
        }
    }

    /// Text form used in summaries.
    pub fn display(v: f64) -> String {
        match to_repr(v) {
            Repr::Num(v) => format!("{v:.2}"),
            Repr::Text(s) => s,
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| to_repr(*x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;
    use crate::modes::build_lp_basis;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis() -> ModeBasis {
        build_lp_basis(Grid2D::square(64, 5e-6).unwrap(), 40e-6, (0.0, 0.0)).unwrap()
    }

    fn identity_measurements() -> Vec<ColumnMeasurement> {
        (0..6)
            .map(|k| {
                let mut x = vec![c(0.0); 3];
                let mut y = vec![c(0.0); 3];
                let pol = Polarization::from_index(k % 2).unwrap();
                match pol {
                    Polarization::X => x[k / 2] = c(1.0),
                    Polarization::Y => y[k / 2] = c(1.0),
                }
                ColumnMeasurement { port: k / 2, pol, x, y }
            })
            .collect()
    }

    #[test]
    fn assemble_places_columns() {
        let t = assemble_matrix(&identity_measurements(), &basis()).unwrap();
        assert_eq!(t.entries(), &DMatrix::identity(6, 6));
        assert_eq!(t.row_labels()[3], "LP11a/Y");
        assert_eq!(t.col_labels()[3], "port1/Y");
    }

    #[test]
    fn assemble_order_independent() {
        let mut ms = identity_measurements();
        ms.reverse();
        ms.swap(1, 4);
        let a = assemble_matrix(&ms, &basis()).unwrap();
        assert_eq!(a, assemble_matrix(&identity_measurements(), &basis()).unwrap());
    }

    #[test]
    fn assemble_errors() {
        let mut ms = identity_measurements();
        ms.push(ms[2].clone());
        assert!(matches!(
            assemble_matrix(&ms, &basis()),
            Err(Error::DuplicateInput {
                port: 1,
                pol: Polarization::X
            })
        ));
        let mut ms = identity_measurements();
        ms.remove(3);
        assert!(matches!(
            assemble_matrix(&ms, &basis()),
            Err(Error::MissingInput {
                port: 1,
                pol: Polarization::Y
            })
        ));
    }

    #[test]
    fn condense_identity_and_scaled() {
        let t = TransferMatrix::unlabeled(DMatrix::identity(6, 6)).unwrap();
        let p = power_condense(&t);
        assert_eq!(
            p.rows(),
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        let t = TransferMatrix::unlabeled(DMatrix::identity(6, 6) * c(0.5f64.sqrt())).unwrap();
        for (i, row) in power_condense(&t).rows().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - if i == j { 0.5 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn crosstalk_closed_forms() {
        let own = ModeGroupMap::each_mode_own_group(3);
        let id = PowerMatrix::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let x = crosstalk_db(&id, &own, &TargetGroups::Dominant).unwrap();
        assert_eq!(x.mean_db, f64::NEG_INFINITY);
        assert_eq!(x.target_groups, [0, 1, 2]);

        let p = PowerMatrix::new(vec![vec![0.9, 0.05, 0.05]; 3]).unwrap();
        let x = crosstalk_db(&p, &own, &TargetGroups::Dominant).unwrap();
        for v in &x.per_port_db {
            assert!((v - 10.0 * (0.1f64 / 0.9).log10()).abs() < 1e-12);
        }

        let u = PowerMatrix::new(vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        let x = crosstalk_db(&u, &own, &TargetGroups::Dominant).unwrap();
        assert!((x.mean_db - 10.0 * 2f64.log10()).abs() < 1e-9);
        assert_eq!(x.target_groups, [0, 0, 0]);
    }

    #[test]
    fn zero_target_power_is_flagged() {
        let p = PowerMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let x = crosstalk_db(
            &p,
            &ModeGroupMap::each_mode_own_group(3),
            &TargetGroups::Fixed(vec![0, 1]),
        )
        .unwrap();
        assert_eq!(x.zero_target_ports, [0, 1]);
        assert_eq!(x.mean_db, f64::INFINITY);
    }

    #[test]
    fn grouped_crosstalk() {
        // LP11a and LP11b together: the LP11 group gets 0.8 of port 1's power
        let p = PowerMatrix::new(vec![vec![0.8, 0.1, 0.1], vec![0.2, 0.5, 0.3]]).unwrap();
        let x = crosstalk_db(&p, &ModeGroupMap::lp_default(), &TargetGroups::Dominant).unwrap();
        assert_eq!(x.target_groups, [0, 1]);
        assert!((x.per_port_ratio[0] - 0.25).abs() < 1e-15);
        assert!((x.per_port_ratio[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mdl_closed_forms() {
        let t = TransferMatrix::unlabeled(DMatrix::identity(6, 6)).unwrap();
        assert_eq!(mdl_db(&t).unwrap(), 0.0);
        let mut d = DMatrix::identity(6, 6);
        d[(5, 5)] = c(0.5);
        let t = TransferMatrix::unlabeled(d).unwrap();
        assert!((mdl_db(&t).unwrap() - 20.0 * 2f64.log10()).abs() < 1e-9);
        let mut d = DMatrix::identity(6, 6);
        d[(5, 5)] = c(0.0);
        assert_eq!(mdl_db(&TransferMatrix::unlabeled(d).unwrap()).unwrap(), f64::INFINITY);
        assert!(mdl_db(&TransferMatrix::unlabeled(DMatrix::zeros(6, 6)).unwrap()).is_err());
    }

    #[test]
    fn report_serializes_sentinels() {
        let t = TransferMatrix::unlabeled(DMatrix::identity(6, 6)).unwrap();
        let r = analyze(&t, &ModeGroupMap::lp_default(), &TargetGroups::Dominant).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""xt_db":"-inf""#), "{json}");
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(db_serde::display(r.xt_db), "-inf");
        assert_eq!(db_serde::display(r.mdl_db), "0.00");
    }
}
