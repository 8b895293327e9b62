//! Metrics report (`report.json` plus `summary.txt`) and the cross-scheme
//! comparison table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{db_serde, MetricsReport};
use crate::synth::SchemeVariant;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const COMPARISON_FILE: &str = "comparison.json";
pub const COMPARISON_TEXT_FILE: &str = "comparison.txt";

/// Reference values of the published lantern measurement, for context only.
pub const PUBLISHED_CONTEXT: &str = "For context: a measurement of a 3-port photonic lantern with these two \
setups reported mode-group XT of -13.8 dB (spatial) and -14.0 dB (angular), and MDL of 1.50 dB (spatial) \
and 1.45 dB (angular). Synthetic runs are judged against their own ground truth, not these numbers.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    #[serde(with = "db_serde")]
    pub xt_db: f64,
    #[serde(with = "db_serde")]
    pub mdl_db: f64,
    /// Measured minus truth.
    #[serde(with = "db_serde")]
    pub xt_error_db: f64,
    #[serde(with = "db_serde")]
    pub mdl_error_db: f64,
}

impl TruthComparison {
    pub fn new(measured: &MetricsReport, truth: &MetricsReport) -> Self {
        TruthComparison {
            xt_db: truth.xt_db,
            mdl_db: truth.mdl_db,
            xt_error_db: measured.xt_db - truth.xt_db,
            mdl_error_db: measured.mdl_db - truth.mdl_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub scheme: SchemeVariant,
    pub metrics: MetricsReport,
    pub truth: Option<TruthComparison>,
    /// Captured power fraction of each field in the basis, column order.
    pub captured_fraction: Vec<f64>,
    pub warnings: Vec<String>,
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:>9.4}")).collect::<Vec<_>>().join(" ")
}

pub fn summary_text(r: &ReportFile) -> String {
    let m = &r.metrics;
    let mut s = String::new();
    let _ = writeln!(s, "scheme:                 {}", r.scheme);
    let _ = writeln!(s, "mode-group XT (mean):   {} dB", db_serde::display(m.xt_db));
    let _ = writeln!(
        s,
        "mode-group XT (worst):  {} dB",
        db_serde::display(m.crosstalk.worst_db)
    );
    let _ = writeln!(
        s,
        "XT (port x input pol):  {} dB",
        db_serde::display(m.xt_port_pol_mean_db)
    );
    let _ = writeln!(s, "MDL:                    {} dB", db_serde::display(m.mdl_db));
    if let Some(t) = &r.truth {
        let _ = writeln!(
            s,
            "ground truth:           XT {} dB, MDL {} dB (errors {} / {} dB)",
            db_serde::display(t.xt_db),
            db_serde::display(t.mdl_db),
            db_serde::display(t.xt_error_db),
            db_serde::display(t.mdl_error_db)
        );
    }
    let _ = writeln!(s, "\nper-port XT (target group):");
    for (p, (db, g)) in m
        .crosstalk
        .per_port_db
        .iter()
        .zip(&m.crosstalk.target_groups)
        .enumerate()
    {
        let _ = writeln!(s, "  port {p}: {} dB (group {g})", db_serde::display(*db));
    }
    let _ = writeln!(
        s,
        "\npower matrix (rows: ports, columns: {}):",
        m.mode_labels.join(", ")
    );
    for row in m.power_matrix.rows() {
        let _ = writeln!(s, "  {}", fmt_row(row));
    }
    let _ = writeln!(s, "\nsingular values: {}", fmt_row(&m.singular_values));
    let _ = writeln!(s, "\nconventions:");
    let _ = writeln!(s, "  condensation: {}", m.conventions.condensation);
    let _ = writeln!(s, "  aggregation:  {}", m.conventions.aggregation);
    let _ = writeln!(s, "  group map:    {:?}", m.conventions.group_map);
    let _ = writeln!(s, "  targets:      {:?}", m.conventions.target_assignment);
    if !r.warnings.is_empty() {
        let _ = writeln!(s, "\nwarnings:");
        for w in &r.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: SchemeVariant,
    #[serde(with = "db_serde")]
    pub xt_db: f64,
    #[serde(with = "db_serde")]
    pub mdl_db: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthMetrics {
    #[serde(with = "db_serde")]
    pub xt_db: f64,
    #[serde(with = "db_serde")]
    pub mdl_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub results: Vec<SchemeResult>,
    /// Spatial minus angular, when both succeeded.
    #[serde(default, with = "opt_db")]
    pub xt_difference_db: Option<f64>,
    #[serde(default, with = "opt_db")]
    pub mdl_difference_db: Option<f64>,
    pub truth: Option<TruthMetrics>,
    pub context: String,
}

mod opt_db {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::analysis::db_serde")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&Wrap(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl Comparison {
    pub fn new(results: Vec<SchemeResult>, truth: Option<TruthMetrics>) -> Self {
        let ok = |v: SchemeVariant| results.iter().find(|r| r.scheme == v && r.error.is_none());
        let (xt, mdl) = match (ok(SchemeVariant::Spatial), ok(SchemeVariant::Angular)) {
            (Some(s), Some(a)) => (Some(s.xt_db - a.xt_db), Some(s.mdl_db - a.mdl_db)),
            _ => (None, None),
        };
        Comparison {
            results,
            xt_difference_db: xt,
            mdl_difference_db: mdl,
            truth,
            context: PUBLISHED_CONTEXT.into(),
        }
    }
}

pub fn comparison_text(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:>10} {:>10}", "scheme", "XT [dB]", "MDL [dB]");
    let mut row = |name: &str, r: &SchemeResult| match &r.error {
        None => {
            let _ = writeln!(
                s,
                "{name:<14} {:>10} {:>10}",
                db_serde::display(r.xt_db),
                db_serde::display(r.mdl_db)
            );
        }
        Some(e) => {
            let _ = writeln!(s, "{name:<14} failed: {e}");
        }
    };
    for r in &c.results {
        row(r.scheme.name(), r);
    }
    if let Some(t) = c.truth {
        let _ = writeln!(
            s,
            "{:<14} {:>10} {:>10}",
            "ground truth",
            db_serde::display(t.xt_db),
            db_serde::display(t.mdl_db)
        );
    }
    if let (Some(x), Some(m)) = (c.xt_difference_db, c.mdl_difference_db) {
        let _ = writeln!(
            s,
            "{:<14} {:>10} {:>10}",
            "difference",
            db_serde::display(x),
            db_serde::display(m)
        );
    }
    let _ = writeln!(s, "\n* {}", c.context);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_differences_and_round_trip() {
        let r = |scheme, xt, mdl| SchemeResult {
            scheme,
            xt_db: xt,
            mdl_db: mdl,
            error: None,
        };
        let c = Comparison::new(
            vec![
                r(SchemeVariant::Spatial, -13.8, 1.50),
                r(SchemeVariant::Angular, -14.0, 1.45),
            ],
            Some(TruthMetrics {
                xt_db: f64::NEG_INFINITY,
                mdl_db: 0.0,
            }),
        );
        assert!((c.xt_difference_db.unwrap() - 0.2).abs() < 1e-12);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Comparison>(&json).unwrap(), c);
        let text = comparison_text(&c);
        assert!(text.contains("difference") && text.contains("-inf") && text.contains("-13.8 dB"));
    }
}
