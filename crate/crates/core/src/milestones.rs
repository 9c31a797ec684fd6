//! Recovery-day detection and milestone durations.
//!
//! A series counts as recovered on the last day of the first run of
//! `run_length` consecutive days (at or after the event day `d0`) whose
//! change is at least `threshold`, i.e. whose smoothed activity is at least
//! `1 + threshold` of baseline. The milestone duration is `d_n - d0` days.
//! Series that never recover within `horizon` days are censored: their
//! duration is pinned to `horizon` and flagged.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::table::{self, Fields, TableRow};
use crate::ingest::{IngestError, RowErrorKind};
use crate::keys::{Milestone, SeriesKey};
use crate::series::ChangeSet;

#[derive(Debug, Error)]
pub enum MilestoneError {
    #[error("recovery day {dn} precedes event day {d0}")]
    BeforeEvent { d0: usize, dn: usize },
    #[error("recovery day {dn} is past the horizon ({horizon} days after {d0})")]
    BeyondHorizon { d0: usize, dn: usize, horizon: u32 },
    #[error(transparent)]
    Read(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Thresholding rule. `threshold` is a fraction of baseline (0.9 means
/// activity back to 90%).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryRule {
    pub threshold: f64,
    pub run_length: usize,
}

impl RecoveryRule {
    /// The same threshold expressed as a change relative to baseline.
    pub fn change_threshold(&self) -> f64 {
        self.threshold - 1.0
    }
}

impl Default for RecoveryRule {
    fn default() -> Self {
        RecoveryRule { threshold: 0.9, run_length: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recovery {
    Day(usize),
    Censored,
}

/// Scans `[d0, d0 + horizon]` for the first qualifying run; days past the
/// end of `changes` and `None` entries never qualify.
pub fn detect_recovery_day(
    changes: &[Option<f64>],
    threshold: f64,
    run_length: usize,
    d0: usize,
    horizon: usize,
) -> Recovery {
    let need = run_length.max(1);
    let last = d0.saturating_add(horizon).min(changes.len().saturating_sub(1));
    let mut run = 0;
    for d in d0..=last {
        if d >= changes.len() {
            break;
        }
        match changes[d] {
            Some(c) if c >= threshold => {
                run += 1;
                if run == need {
                    return Recovery::Day(d);
                }
            }
            _ => run = 0,
        }
    }
    Recovery::Censored
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MilestoneEntry {
    pub duration_days: u32,
    pub censored: bool,
}

pub fn recovery_duration(d0: usize, dn: Recovery, horizon: u32) -> Result<MilestoneEntry, MilestoneError> {
    match dn {
        Recovery::Censored => Ok(MilestoneEntry { duration_days: horizon, censored: true }),
        Recovery::Day(dn) if dn < d0 => Err(MilestoneError::BeforeEvent { d0, dn }),
        Recovery::Day(dn) if dn - d0 > horizon as usize => Err(MilestoneError::BeyondHorizon { d0, dn, horizon }),
        Recovery::Day(dn) => Ok(MilestoneEntry { duration_days: (dn - d0) as u32, censored: false }),
    }
}

/// Region to its four milestone entries, in [`Milestone::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MilestoneTable {
    pub rows: BTreeMap<String, [MilestoneEntry; 4]>,
}

impl MilestoneTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, region: &str, milestone: Milestone) -> Option<MilestoneEntry> {
        self.rows.get(region).map(|r| r[milestone.index()])
    }

    /// One milestone's durations across regions, in region order.
    pub fn durations(&self, milestone: Milestone) -> Vec<f64> {
        self.rows.values().map(|r| r[milestone.index()].duration_days as f64).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MilestoneBuild {
    pub table: MilestoneTable,
    /// Regions dropped because some series lacked a usable baseline, with
    /// the milestones that were missing.
    pub excluded: BTreeMap<String, Vec<Milestone>>,
}

/// Detects all four milestones for every region in `regions`.
pub fn build_milestone_table<'a>(
    changes: &ChangeSet,
    regions: impl IntoIterator<Item = &'a str>,
    d0: usize,
    horizon: u32,
    rule: RecoveryRule,
) -> Result<MilestoneBuild, MilestoneError> {
    let mut out = MilestoneBuild::default();
    for region in regions {
        let series: Vec<_> = Milestone::ALL
            .iter()
            .map(|m| changes.series.get(&SeriesKey::new(region, m.source(), m.category())))
            .collect();
        let missing: Vec<Milestone> =
            Milestone::ALL.iter().zip(&series).filter(|(_, s)| s.is_none()).map(|(m, _)| *m).collect();
        if !missing.is_empty() {
            out.excluded.insert(region.to_string(), missing);
            continue;
        }
        let mut row = [MilestoneEntry { duration_days: 0, censored: false }; 4];
        for (slot, s) in row.iter_mut().zip(series) {
            let s = s.expect("checked above");
            let dn = detect_recovery_day(&s.values, rule.change_threshold(), rule.run_length, d0, horizon as usize);
            *slot = recovery_duration(d0, dn, horizon)?;
        }
        out.table.rows.insert(region.to_string(), row);
    }
    Ok(out)
}

const HEADER: &[&str] = &[
    "region",
    "trip_essential_days",
    "trip_essential_censored",
    "trip_nonessential_days",
    "trip_nonessential_censored",
    "tx_essential_days",
    "tx_essential_censored",
    "tx_nonessential_days",
    "tx_nonessential_censored",
];

pub fn write_milestones_csv(path: &Path, table: &MilestoneTable) -> Result<(), MilestoneError> {
    let io = |source| MilestoneError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "{}", HEADER.join(","))?;
        for (region, row) in &table.rows {
            write!(out, "{region}")?;
            for e in row {
                write!(out, ",{},{}", e.duration_days, e.censored)?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    body().map_err(io)
}

struct MilestoneRow(String, [MilestoneEntry; 4]);

impl TableRow for MilestoneRow {
    const HEADER: &'static [&'static str] = HEADER;

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        let mut row = [MilestoneEntry { duration_days: 0, censored: false }; 4];
        for (i, e) in row.iter_mut().enumerate() {
            let days = f.count(1 + 2 * i)?;
            let flag = f.text(2 + 2 * i)?;
            e.duration_days = u32::try_from(days).map_err(|_| RowErrorKind::OutOfRange {
                column: HEADER[1 + 2 * i],
                value: days.to_string(),
                range: "u32",
            })?;
            e.censored = match flag.as_str() {
                "true" => true,
                "false" => false,
                _ => {
                    return Err(RowErrorKind::Invalid { column: HEADER[2 + 2 * i], value: flag, expected: "boolean" })
                }
            };
        }
        Ok(MilestoneRow(f.text(0)?, row))
    }
}

pub fn read_milestones_csv(path: &Path) -> Result<MilestoneTable, MilestoneError> {
    let report = table::read_path::<MilestoneRow>(path, None)?.into_strict(&path.display().to_string())?;
    Ok(MilestoneTable { rows: report.records.into_iter().map(|MilestoneRow(r, e)| (r, e)).collect() })
}
