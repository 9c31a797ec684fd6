//! Integrated recovery metric.
//!
//! Each milestone's durations are min-max scaled across regions to [0, 1];
//! the integrated metric is the plain mean of the four scaled values, so
//! smaller means faster recovery. Regions are then labeled by the quartile
//! of their integrated metric.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::table::{self, Fields, TableRow};
use crate::ingest::{IngestError, RowErrorKind};
use crate::keys::Milestone;
use crate::milestones::MilestoneTable;
use crate::numfmt::sig6;
use crate::stats::quantile::{quantile_sorted, sorted_copy};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("cannot normalize an empty set of durations")]
    Empty,
    #[error("integrated metric takes exactly 4 normalized values, got {0}")]
    WrongArity(usize),
    #[error("normalized value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("quartile categories need at least 4 regions, got {0}")]
    TooFewRegions(usize),
    #[error(transparent)]
    Read(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryCategory {
    Early,
    Mild,
    Late,
    Delayed,
}

impl RecoveryCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            RecoveryCategory::Early => "early",
            RecoveryCategory::Mild => "mild",
            RecoveryCategory::Late => "late",
            RecoveryCategory::Delayed => "delayed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Early, Self::Mild, Self::Late, Self::Delayed].into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for RecoveryCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(t - t_min) / (t_max - t_min)`; a degenerate range maps everything to 0.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|t| (t - min) / range).collect())
}

pub fn integrated_metric(normalized: &[f64]) -> Result<f64, MetricError> {
    integrated_metric_over(normalized, 4.0)
}

/// Sum of the four normalized durations over `divisor`.
pub fn integrated_metric_over(normalized: &[f64], divisor: f64) -> Result<f64, MetricError> {
    if normalized.len() != 4 {
        return Err(MetricError::WrongArity(normalized.len()));
    }
    if let Some(&bad) = normalized.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(MetricError::OutOfRange(bad));
    }
    Ok(normalized.iter().sum::<f64>() / divisor)
}

/// Breakpoints `[Q1, Q2, Q3]` of the integrated metric.
pub type Quartiles = [f64; 3];

/// Labels each value by quartile. Intervals are closed above, so a value
/// equal to a breakpoint takes the lower category.
pub fn categorize(metrics: &[f64]) -> Result<(Vec<RecoveryCategory>, Quartiles), MetricError> {
    if metrics.len() < 4 {
        return Err(MetricError::TooFewRegions(metrics.len()));
    }
    let sorted = sorted_copy(metrics);
    let q = [0.25, 0.5, 0.75].map(|p| quantile_sorted(&sorted, p));
    let labels = metrics
        .iter()
        .map(|&v| {
            if v <= q[0] {
                RecoveryCategory::Early
            } else if v <= q[1] {
                RecoveryCategory::Mild
            } else if v <= q[2] {
                RecoveryCategory::Late
            } else {
                RecoveryCategory::Delayed
            }
        })
        .collect();
    Ok((labels, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRow {
    /// In [`Milestone::ALL`] order.
    pub normalized: [f64; 4],
    pub integrated: f64,
    pub category: RecoveryCategory,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTable {
    pub rows: BTreeMap<String, MetricRow>,
    pub quartiles: Quartiles,
}

impl MetricTable {
    pub fn integrated(&self) -> Vec<f64> {
        self.rows.values().map(|r| r.integrated).collect()
    }
}

pub fn build_metric_table(milestones: &MilestoneTable) -> Result<MetricTable, MetricError> {
    build_metric_table_over(milestones, 4.0)
}

pub fn build_metric_table_over(milestones: &MilestoneTable, divisor: f64) -> Result<MetricTable, MetricError> {
    let n = milestones.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let mut columns = Vec::with_capacity(4);
    for m in Milestone::ALL {
        columns.push(min_max_normalize(&milestones.durations(m))?);
    }
    let integrated = (0..n)
        .map(|i| integrated_metric_over(&[columns[0][i], columns[1][i], columns[2][i], columns[3][i]], divisor))
        .collect::<Result<Vec<_>, _>>()?;
    let (labels, quartiles) = categorize(&integrated)?;
    let rows = milestones
        .rows
        .keys()
        .enumerate()
        .map(|(i, region)| {
            let normalized = [columns[0][i], columns[1][i], columns[2][i], columns[3][i]];
            (region.clone(), MetricRow { normalized, integrated: integrated[i], category: labels[i] })
        })
        .collect();
    Ok(MetricTable { rows, quartiles })
}

const HEADER: &[&str] = &["region", "norm_trip_e", "norm_trip_ne", "norm_tx_e", "norm_tx_ne", "integrated", "category"];

pub fn write_metric_csv(path: &Path, table: &MetricTable) -> Result<(), MetricError> {
    let io = |source| MetricError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "{}", HEADER.join(","))?;
        for (region, r) in &table.rows {
            write!(out, "{region}")?;
            for v in r.normalized {
                write!(out, ",{}", sig6(v))?;
            }
            writeln!(out, ",{},{}", sig6(r.integrated), r.category)?;
        }
        out.flush()
    };
    body().map_err(io)
}

struct MetricCsvRow(String, MetricRow);

impl TableRow for MetricCsvRow {
    const HEADER: &'static [&'static str] = HEADER;

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        let mut normalized = [0.0; 4];
        for (i, v) in normalized.iter_mut().enumerate() {
            *v = f.fraction(1 + i)?;
        }
        let cat = f.text(6)?;
        let category = RecoveryCategory::parse(&cat).ok_or(RowErrorKind::Invalid {
            column: "category",
            value: cat,
            expected: "recovery category",
        })?;
        Ok(MetricCsvRow(f.text(0)?, MetricRow { normalized, integrated: f.fraction(5)?, category }))
    }
}

/// Reads back `metric.csv`. Quartiles are recomputed from the stored values.
pub fn read_metric_csv(path: &Path) -> Result<MetricTable, MetricError> {
    let report = table::read_path::<MetricCsvRow>(path, None)?.into_strict(&path.display().to_string())?;
    let rows: BTreeMap<String, MetricRow> = report.records.into_iter().map(|MetricCsvRow(r, m)| (r, m)).collect();
    let values: Vec<f64> = rows.values().map(|r| r.integrated).collect();
    let quartiles = if values.len() >= 4 { categorize(&values)?.1 } else { [f64::NAN; 3] };
    Ok(MetricTable { rows, quartiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milestones::MilestoneEntry;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(min_max_normalize(&[10.0, 30.0, 20.0]).unwrap(), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[4.0, 4.0, 4.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(min_max_normalize(&[5.0, 7.0]).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(min_max_normalize(&[]), Err(MetricError::Empty)));
    }

    #[test]
    fn integrated_examples() {
        assert_eq!(integrated_metric(&[0.0; 4]).unwrap(), 0.0);
        assert!((integrated_metric(&[0.2, 0.4, 0.6, 0.8]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(integrated_metric(&[1.0; 4]).unwrap(), 1.0);
        assert!(matches!(integrated_metric(&[0.5; 3]), Err(MetricError::WrongArity(3))));
        assert!(matches!(integrated_metric(&[0.5, 0.5, 0.5, 1.5]), Err(MetricError::OutOfRange(_))));
    }

    #[test]
    fn eight_point_fixture_splits_evenly() {
        let v: Vec<f64> = (1..=8).map(|i| i as f64 / 10.0).collect();
        let (labels, q) = categorize(&v).unwrap();
        // Type-7 oracle: h = 7p → Q1 = x[1] + .75(x[2]-x[1]) = .275, Q2 = .45, Q3 = .625.
        assert!((q[0] - 0.275).abs() < 1e-12 && (q[1] - 0.45).abs() < 1e-12 && (q[2] - 0.625).abs() < 1e-12);
        use RecoveryCategory::*;
        assert_eq!(labels, vec![Early, Early, Mild, Mild, Late, Late, Delayed, Delayed]);
    }

    #[test]
    fn identical_metrics_are_all_early() {
        let (labels, _) = categorize(&[0.3; 6]).unwrap();
        assert!(labels.iter().all(|c| *c == RecoveryCategory::Early));
    }

    #[test]
    fn too_few_regions() {
        assert!(matches!(categorize(&[0.1, 0.2, 0.3]), Err(MetricError::TooFewRegions(3))));
    }

    fn table(rows: &[[u32; 4]]) -> MilestoneTable {
        MilestoneTable {
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, d)| (format!("R{i:03}"), d.map(|duration_days| MilestoneEntry { duration_days, censored: false })))
                .collect(),
        }
    }

    #[test]
    fn build_and_csv_round_trip() {
        let t = build_metric_table(&table(&[[1, 2, 3, 4], [5, 6, 7, 8], [9, 9, 9, 9], [3, 9, 1, 2], [2, 2, 2, 2]])).unwrap();
        assert_eq!(t.rows["R002"].normalized, [1.0, 1.0, 1.0, 1.0]);
        assert_eq!(t.rows["R002"].category, RecoveryCategory::Delayed);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("metric.csv");
        write_metric_csv(&p, &t).unwrap();
        let back = read_metric_csv(&p).unwrap();
        for (r, row) in &t.rows {
            assert_eq!(back.rows[r].category, row.category);
            assert!((back.rows[r].integrated - row.integrated).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn normalized_bounds_and_exact_endpoints(v in prop::collection::vec(0u32..200, 2..50)) {
            let xs: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let n = min_max_normalize(&xs).unwrap();
            prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
            let (lo, hi) = (v.iter().min().unwrap(), v.iter().max().unwrap());
            for (x, y) in v.iter().zip(&n) {
                if lo != hi && x == lo { prop_assert_eq!(*y, 0.0); }
                if lo != hi && x == hi { prop_assert_eq!(*y, 1.0); }
            }
        }

        #[test]
        fn categories_invariant_under_increasing_transform(v in prop::collection::vec(0.0f64..1.0, 4..60)) {
            let (a, _) = categorize(&v).unwrap();
            let transformed: Vec<f64> = v.iter().map(|x| (3.0 * x).exp() + x.powi(3)).collect();
            let (b, _) = categorize(&transformed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn dominated_region_has_smaller_metric(rows in prop::collection::vec(prop::array::uniform4(0u32..120), 4..30), pick in any::<prop::sample::Index>()) {
            let t = build_metric_table(&table(&rows)).unwrap();
            let a = pick.index(rows.len());
            for (b, row_b) in rows.iter().enumerate() {
                if rows[a].iter().zip(row_b).all(|(x, y)| x <= y) {
                    let (ra, rb) = (&t.rows[&format!("R{a:03}")], &t.rows[&format!("R{b:03}")]);
                    prop_assert!(ra.integrated <= rb.integrated);
                }
            }
        }
    }
}
