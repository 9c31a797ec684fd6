//! Input schemas, validation and Zip-to-region resolution.
//!
//! All inputs are UTF-8, comma-separated, with a header row and ISO-8601
//! dates:
//!
//! | file               | columns                                                 |
//! |--------------------|---------------------------------------------------------|
//! | `trips.csv`        | `date,origin_region,service_type,trip_count`            |
//! | `transactions.csv` | `date,zip,merchant_type,amount`                         |
//! | `overlaps.csv`     | `region,zip,overlap_area`                               |
//! | `adjacency.csv`    | `region_a,region_b`                                     |
//! | `attributes.csv`   | `region,flood_fraction,minority_fraction,per_capita_income` |
//!
//! Each table can be read strictly (`parse_*`, first bad row is a hard
//! error carrying its line number) or leniently (`read_*`, every bad row is
//! collected in the [`TableReport`]).

mod crosswalk;
pub(crate) mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::calendar::DateWindow;
use table::{Fields, TableRow};

pub use crosswalk::{broadcast_zip_to_regions, resolve_crosswalk, Broadcast, CrosswalkTable, RegionTransaction};
pub use table::TableReport;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is empty, expected a header row")]
    Empty { path: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: header mismatch: expected `{expected}`, found `{found}`")]
    Header { path: String, expected: String, found: String },
    #[error("{path}:{line}: {kind}")]
    Row { path: String, line: u64, kind: RowErrorKind },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RowErrorKind {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("column `{column}` is empty")]
    Empty { column: &'static str },
    #[error("column `{column}`: invalid date `{value}`, expected YYYY-MM-DD")]
    BadDate { column: &'static str, value: String },
    #[error("column `{column}`: `{value}` is negative")]
    Negative { column: &'static str, value: String },
    #[error("column `{column}`: `{value}` is not a {expected}")]
    Invalid { column: &'static str, value: String, expected: &'static str },
    #[error("column `{column}`: `{value}` outside {range}")]
    OutOfRange { column: &'static str, value: String, range: &'static str },
    #[error("duplicate key {key}, first seen on line {first_line}")]
    Duplicate { key: String, first_line: u64 },
    #[error("self-loop on region `{0}`")]
    SelfLoop(String),
    #[error("malformed row: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct RowError {
    pub line: u64,
    pub kind: RowErrorKind,
}

/// Daily trip count from one origin region to one service type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TripRecord {
    pub date: NaiveDate,
    pub origin_region: String,
    pub service_type: String,
    pub trip_count: u64,
}

impl TableRow for TripRecord {
    const HEADER: &'static [&'static str] = &["date", "origin_region", "service_type", "trip_count"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        Ok(TripRecord { date: f.date(0)?, origin_region: f.text(1)?, service_type: f.text(2)?, trip_count: f.count(3)? })
    }

    fn date(&self) -> Option<NaiveDate> {
        Some(self.date)
    }
}

/// Daily spend by cardholders of one Zip code at one merchant type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransactionRecord {
    pub date: NaiveDate,
    pub zip: String,
    pub merchant_type: String,
    pub amount: f64,
}

impl TableRow for TransactionRecord {
    const HEADER: &'static [&'static str] = &["date", "zip", "merchant_type", "amount"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        Ok(TransactionRecord { date: f.date(0)?, zip: f.text(1)?, merchant_type: f.text(2)?, amount: f.nonnegative(3)? })
    }

    fn date(&self) -> Option<NaiveDate> {
        Some(self.date)
    }
}

/// Area shared by one region and one Zip code, in any consistent unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapEntry {
    pub region: String,
    pub zip: String,
    pub overlap_area: f64,
}

impl OverlapEntry {
    pub fn new(region: impl Into<String>, zip: impl Into<String>, overlap_area: f64) -> Self {
        OverlapEntry { region: region.into(), zip: zip.into(), overlap_area }
    }
}

impl TableRow for OverlapEntry {
    const HEADER: &'static [&'static str] = &["region", "zip", "overlap_area"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        Ok(OverlapEntry { region: f.text(0)?, zip: f.text(1)?, overlap_area: f.positive(2)? })
    }
}

/// One undirected contiguity edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AdjacencyEdge {
    pub region_a: String,
    pub region_b: String,
}

impl TableRow for AdjacencyEdge {
    const HEADER: &'static [&'static str] = &["region_a", "region_b"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        let (a, b) = (f.text(0)?, f.text(1)?);
        if a == b {
            return Err(RowErrorKind::SelfLoop(a));
        }
        Ok(AdjacencyEdge { region_a: a, region_b: b })
    }
}

/// Symmetric neighbor sets without self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdjacencyList {
    neighbors: BTreeMap<String, BTreeSet<String>>,
}

impl AdjacencyList {
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut neighbors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (a, b) in edges {
            if a == b {
                continue;
            }
            neighbors.entry(a.to_string()).or_default().insert(b.to_string());
            neighbors.entry(b.to_string()).or_default().insert(a.to_string());
        }
        AdjacencyList { neighbors }
    }

    pub fn neighbors(&self, region: &str) -> impl Iterator<Item = &str> {
        self.neighbors.get(region).into_iter().flatten().map(String::as_str)
    }

    pub fn degree(&self, region: &str) -> usize {
        self.neighbors.get(region).map_or(0, BTreeSet::len)
    }

    /// Regions appearing in at least one edge.
    pub fn regions(&self) -> impl Iterator<Item = &str> {
        self.neighbors.keys().map(String::as_str)
    }

    /// Each undirected edge once, with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.neighbors
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (a.as_str(), b.as_str())))
    }
}

/// Per-region covariates for the association tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionAttributes {
    pub region: String,
    pub flood_fraction: f64,
    pub minority_fraction: f64,
    pub per_capita_income: f64,
}

impl TableRow for RegionAttributes {
    const HEADER: &'static [&'static str] = &["region", "flood_fraction", "minority_fraction", "per_capita_income"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        Ok(RegionAttributes {
            region: f.text(0)?,
            flood_fraction: f.fraction(1)?,
            minority_fraction: f.fraction(2)?,
            per_capita_income: f.nonnegative(3)?,
        })
    }
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

/// Flags later rows whose key was already seen.
fn reject_duplicates<T>(report: &mut TableReport<T>, key: impl Fn(&T) -> String) {
    let mut seen: BTreeMap<String, u64> = BTreeMap::new();
    report.reject_where(|rec, line| {
        let k = key(rec);
        match seen.get(&k) {
            Some(&first_line) => Some(RowErrorKind::Duplicate { key: k, first_line }),
            None => {
                seen.insert(k, line);
                None
            }
        }
    });
}

/// Reads `trips.csv`, collecting row errors instead of failing.
pub fn read_trips(path: &Path, window: &DateWindow) -> Result<TableReport<TripRecord>, IngestError> {
    table::read_path(path, Some(window))
}

/// Reads `trips.csv`; any invalid row is a hard error. Rows dated outside
/// `window` are dropped and counted.
pub fn parse_trips(path: &Path, window: &DateWindow) -> Result<TableReport<TripRecord>, IngestError> {
    read_trips(path, window)?.into_strict(&label(path))
}

pub fn read_transactions(path: &Path, window: &DateWindow) -> Result<TableReport<TransactionRecord>, IngestError> {
    table::read_path(path, Some(window))
}

pub fn parse_transactions(path: &Path, window: &DateWindow) -> Result<TableReport<TransactionRecord>, IngestError> {
    read_transactions(path, window)?.into_strict(&label(path))
}

pub fn read_overlaps(path: &Path) -> Result<TableReport<OverlapEntry>, IngestError> {
    let mut report = table::read_path(path, None)?;
    reject_duplicates(&mut report, |e: &OverlapEntry| format!("({}, {})", e.region, e.zip));
    Ok(report)
}

pub fn parse_overlaps(path: &Path) -> Result<TableReport<OverlapEntry>, IngestError> {
    read_overlaps(path)?.into_strict(&label(path))
}

pub fn read_adjacency(path: &Path) -> Result<TableReport<AdjacencyEdge>, IngestError> {
    table::read_path(path, None)
}

pub fn parse_adjacency(path: &Path) -> Result<AdjacencyList, IngestError> {
    let report = read_adjacency(path)?.into_strict(&label(path))?;
    Ok(AdjacencyList::from_edges(report.records.iter().map(|e| (e.region_a.as_str(), e.region_b.as_str()))))
}

pub fn read_attributes(path: &Path) -> Result<TableReport<RegionAttributes>, IngestError> {
    let mut report = table::read_path(path, None)?;
    reject_duplicates(&mut report, |a: &RegionAttributes| a.region.clone());
    Ok(report)
}

pub fn parse_attributes(path: &Path) -> Result<TableReport<RegionAttributes>, IngestError> {
    read_attributes(path)?.into_strict(&label(path))
}

/// In-memory variant of the table readers, used by tests and bindings.
pub fn read_trips_from(reader: impl std::io::Read, window: &DateWindow) -> Result<TableReport<TripRecord>, IngestError> {
    table::read_from(reader, "<memory>", Some(window))
}

pub fn read_transactions_from(
    reader: impl std::io::Read,
    window: &DateWindow,
) -> Result<TableReport<TransactionRecord>, IngestError> {
    table::read_from(reader, "<memory>", Some(window))
}

/// Writers producing exactly the schemas above.
pub mod write {
    use super::*;

    fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
        move |source| IngestError::Io { path: label(path), source }
    }

    fn emit(path: &Path, header: &[&str], rows: impl Iterator<Item = String>) -> Result<(), IngestError> {
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        let mut out = std::io::BufWriter::new(file);
        let body = || -> std::io::Result<()> {
            writeln!(out, "{}", header.join(","))?;
            for row in rows {
                writeln!(out, "{row}")?;
            }
            out.flush()
        };
        body().map_err(io_err(path))
    }

    pub fn trips(path: &Path, records: &[TripRecord]) -> Result<(), IngestError> {
        emit(
            path,
            TripRecord::HEADER,
            records.iter().map(|r| format!("{},{},{},{}", r.date, r.origin_region, r.service_type, r.trip_count)),
        )
    }

    pub fn transactions(path: &Path, records: &[TransactionRecord]) -> Result<(), IngestError> {
        emit(
            path,
            TransactionRecord::HEADER,
            records.iter().map(|r| format!("{},{},{},{:.2}", r.date, r.zip, r.merchant_type, r.amount)),
        )
    }

    pub fn overlaps(path: &Path, entries: &[OverlapEntry]) -> Result<(), IngestError> {
        emit(path, OverlapEntry::HEADER, entries.iter().map(|e| format!("{},{},{}", e.region, e.zip, e.overlap_area)))
    }

    pub fn adjacency(path: &Path, adjacency: &AdjacencyList) -> Result<(), IngestError> {
        emit(path, AdjacencyEdge::HEADER, adjacency.edges().map(|(a, b)| format!("{a},{b}")))
    }

    pub fn attributes(path: &Path, attrs: &[RegionAttributes]) -> Result<(), IngestError> {
        emit(
            path,
            RegionAttributes::HEADER,
            attrs.iter().map(|a| {
                format!("{},{},{},{}", a.region, a.flood_fraction, a.minority_fraction, a.per_capita_income)
            }),
        )
    }
}
