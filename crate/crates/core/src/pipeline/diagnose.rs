use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::{load_taxonomy, PipelineConfig};
use crate::aggregate::{build_daily_series, UnknownCodePolicy};
use crate::ingest::{self, broadcast_zip_to_regions, resolve_crosswalk, IngestError, TableReport};
use crate::keys::{Milestone, Source};
use crate::series::compute_baselines;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Config,
    Schema,
    Coverage,
    UnmatchedZip,
    UnknownCode,
    InsufficientBaseline,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::Config => "config",
            DiagnosticKind::Schema => "schema",
            DiagnosticKind::Coverage => "coverage",
            DiagnosticKind::UnmatchedZip => "unmatched_zip",
            DiagnosticKind::UnknownCode => "unknown_code",
            DiagnosticKind::InsufficientBaseline => "insufficient_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// File, region, zip or code the diagnostic is about.
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { kind, subject: subject.into(), message: message.into() }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.kind.as_str(), self.subject, self.message)
    }
}

/// Collects a table's row errors as diagnostics; `None` if the file itself
/// could not be read.
fn table<T>(
    out: &mut Vec<Diagnostic>,
    path: &Path,
    read: impl FnOnce(&Path) -> Result<TableReport<T>, IngestError>,
) -> Option<TableReport<T>> {
    let name = path.display().to_string();
    match read(path) {
        Ok(report) => {
            for e in &report.errors {
                out.push(Diagnostic::new(DiagnosticKind::Schema, &name, format!("line {}: {}", e.line, e.kind)));
            }
            Some(report)
        }
        Err(e) => {
            out.push(Diagnostic::new(DiagnosticKind::Schema, &name, e.to_string()));
            None
        }
    }
}

/// Checks a config and its inputs without running the pipeline. Problems are
/// reported, never raised; an empty list means the run should go through.
pub fn validate(config: &PipelineConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Err(e) = config.validate() {
        out.push(Diagnostic::new(DiagnosticKind::Config, "config", e.to_string()));
    }
    let window = config.analysis_window();
    let i = &config.inputs;
    let trips = table(&mut out, &i.trips, |p| ingest::read_trips(p, &window));
    let transactions = table(&mut out, &i.transactions, |p| ingest::read_transactions(p, &window));
    let overlaps = table(&mut out, &i.overlaps, ingest::read_overlaps);
    table(&mut out, &i.adjacency, ingest::read_adjacency);
    let attributes = table(&mut out, &i.attributes, ingest::read_attributes);
    let taxonomy = match load_taxonomy(config) {
        Ok(t) => Some(t),
        Err(e) => {
            let name = i.taxonomy.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "taxonomy".into());
            out.push(Diagnostic::new(DiagnosticKind::Schema, name, e.to_string()));
            None
        }
    };

    let Some(overlaps) = overlaps else { return out };
    let xwalk = resolve_crosswalk(&overlaps.records);
    if let Some(trips) = &trips {
        let referenced: BTreeSet<&str> = trips.records.iter().map(|t| t.origin_region.as_str()).collect();
        for r in xwalk.missing(referenced) {
            out.push(Diagnostic::new(DiagnosticKind::Coverage, r, "region has trips but no overlap entry"));
        }
    }
    if let Some(attrs) = &attributes {
        let have: BTreeSet<&str> = attrs.records.iter().map(|a| a.region.as_str()).collect();
        for r in xwalk.regions().filter(|r| !have.contains(r)) {
            out.push(Diagnostic::new(DiagnosticKind::Coverage, r, "region has no attributes"));
        }
    }
    let broadcast = transactions.as_ref().map(|t| broadcast_zip_to_regions(&t.records, &xwalk));
    if let Some(b) = &broadcast {
        for (zip, rows) in &b.unmatched_zips {
            out.push(Diagnostic::new(DiagnosticKind::UnmatchedZip, zip, format!("{rows} transaction rows match no region")));
        }
    }

    let Some(taxonomy) = taxonomy else { return out };
    let mut unknown: BTreeMap<(Source, &str), usize> = BTreeMap::new();
    if let Some(t) = &trips {
        for r in t.records.iter().filter(|r| taxonomy.get(&r.service_type).is_none()) {
            *unknown.entry((Source::Trip, r.service_type.as_str())).or_default() += 1;
        }
    }
    if let Some(t) = &transactions {
        for r in t.records.iter().filter(|r| taxonomy.get(&r.merchant_type).is_none()) {
            *unknown.entry((Source::Transaction, r.merchant_type.as_str())).or_default() += 1;
        }
    }
    for ((source, code), rows) in &unknown {
        out.push(Diagnostic::new(
            DiagnosticKind::UnknownCode,
            *code,
            format!("{rows} {} rows use a code missing from the taxonomy", source.as_str()),
        ));
    }

    let (Some(trips), Some(broadcast)) = (&trips, &broadcast) else { return out };
    let regions: BTreeSet<String> = xwalk.regions().map(str::to_string).collect();
    let Ok(series) = build_daily_series(
        &trips.records,
        &broadcast.records,
        &regions,
        &taxonomy,
        &window,
        UnknownCodePolicy::SkipWithWarning,
    ) else {
        return out;
    };
    if config.baseline_range().end() >= &window.len() {
        return out;
    }
    if let Ok(baselines) = compute_baselines(&series, config.baseline_range(), config.min_baseline) {
        let mut by_region: BTreeMap<&str, Vec<Milestone>> = BTreeMap::new();
        for key in baselines.insufficient() {
            by_region.entry(&key.region).or_default().push(key.milestone());
        }
        for (region, ms) in by_region {
            let names: Vec<&str> = ms.iter().map(|m| m.as_str()).collect();
            out.push(Diagnostic::new(
                DiagnosticKind::InsufficientBaseline,
                region,
                format!("insufficient baseline for {}", names.join(", ")),
            ));
        }
    }
    out
}
