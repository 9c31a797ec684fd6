//! End-to-end orchestration: inputs to report artifacts.
//!
//! Every artifact of a run is computed in memory first, then written into a
//! staging directory and moved into the output directory, so a failing run
//! leaves no partial outputs behind.

mod config;
mod diagnose;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

pub use config::{ConfigError, Inputs, PipelineConfig, StatsOptions};
pub use diagnose::{validate, Diagnostic, DiagnosticKind};
pub use report::{compute_stats, CoverageReport, StatsReport};

use crate::aggregate::{build_daily_series, DailySeriesSet, ServiceTaxonomy};
use crate::error::{Error, Result};
use crate::ingest::{
    self, broadcast_zip_to_regions, resolve_crosswalk, AdjacencyList, RegionAttributes, TableReport,
    TransactionRecord, TripRecord,
};
use crate::keys::Milestone;
use crate::metric::{build_metric_table_over, write_metric_csv, MetricTable};
use crate::milestones::{build_milestone_table, read_milestones_csv, write_milestones_csv, MilestoneTable};
use crate::series::{compute_baselines, compute_changes, write_changes_csv, BaselineTable, ChangeSet};

pub const MILESTONES_FILE: &str = "milestones.csv";
pub const METRIC_FILE: &str = "metric.csv";
pub const STATS_FILE: &str = "stats.json";
pub const LORENZ_FILE: &str = "lorenz.csv";
pub const COVERAGE_FILE: &str = "coverage_report.json";
pub const CHANGES_FILE: &str = "changes.csv";

/// A single stage for `--only` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Raw inputs to `milestones.csv`.
    Milestones,
    /// `milestones.csv` to `metric.csv`.
    Metric,
    /// `milestones.csv`, adjacency and attributes to `stats.json` and `lorenz.csv`.
    Stats,
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "milestones" => Ok(Stage::Milestones),
            "metric" => Ok(Stage::Metric),
            "stats" => Ok(Stage::Stats),
            other => Err(format!("unknown stage `{other}` (expected milestones, metric or stats)")),
        }
    }
}

pub fn load_taxonomy(config: &PipelineConfig) -> Result<ServiceTaxonomy> {
    let tax = match &config.inputs.taxonomy {
        Some(p) => ServiceTaxonomy::from_csv_path(p)?,
        None => ServiceTaxonomy::standard(),
    };
    Ok(if config.renormalize_weights { tax.renormalized() } else { tax })
}

fn label(p: &Path) -> String {
    p.display().to_string()
}

/// Trip and transaction tables, strictly parsed.
pub struct ActivityInputs {
    pub trips: TableReport<TripRecord>,
    pub transactions: TableReport<TransactionRecord>,
    pub overlaps: Vec<ingest::OverlapEntry>,
}

pub fn load_activity(config: &PipelineConfig) -> Result<ActivityInputs> {
    let window = config.analysis_window();
    let i = &config.inputs;
    let trips = ingest::read_trips(&i.trips, &window)?.into_strict(&label(&i.trips))?;
    let transactions = ingest::read_transactions(&i.transactions, &window)?.into_strict(&label(&i.transactions))?;
    let overlaps = ingest::read_overlaps(&i.overlaps)?.into_strict(&label(&i.overlaps))?.records;
    Ok(ActivityInputs { trips, transactions, overlaps })
}

pub fn load_spatial(config: &PipelineConfig) -> Result<(AdjacencyList, Vec<RegionAttributes>)> {
    let i = &config.inputs;
    let adjacency = ingest::parse_adjacency(&i.adjacency)?;
    let attributes = ingest::read_attributes(&i.attributes)?.into_strict(&label(&i.attributes))?.records;
    Ok((adjacency, attributes))
}

/// Everything upstream of the metric.
pub struct MilestoneStage {
    pub series: DailySeriesSet,
    pub baselines: BaselineTable,
    pub changes: ChangeSet,
    pub milestones: MilestoneTable,
    pub coverage: CoverageReport,
}

pub fn milestone_stage(config: &PipelineConfig, inputs: &ActivityInputs) -> Result<MilestoneStage> {
    let taxonomy = load_taxonomy(config)?;
    let window = config.analysis_window();
    let xwalk = resolve_crosswalk(&inputs.overlaps);
    let trip_regions: BTreeSet<&str> = inputs.trips.records.iter().map(|t| t.origin_region.as_str()).collect();
    let missing = xwalk.missing(trip_regions.iter().copied());
    let regions: BTreeSet<String> = xwalk.regions().map(str::to_string).collect();
    let broadcast = broadcast_zip_to_regions(&inputs.transactions.records, &xwalk);

    let series = build_daily_series(
        &inputs.trips.records,
        &broadcast.records,
        &regions,
        &taxonomy,
        &window,
        config.unknown_code_policy,
    )?;
    let baselines = compute_baselines(&series, config.baseline_range(), config.min_baseline)?;
    let changes = compute_changes(&series, &baselines, config.smoothing_half_width, config.boundary_mode)?;
    let build = build_milestone_table(
        &changes,
        regions.iter().map(String::as_str),
        config.event_index(),
        config.horizon_days,
        config.rule(),
    )?;

    let mut insufficient: BTreeMap<String, Vec<Milestone>> = BTreeMap::new();
    for key in baselines.insufficient() {
        insufficient.entry(key.region.clone()).or_default().push(key.milestone());
    }
    let coverage = CoverageReport {
        regions_in_crosswalk: regions.len(),
        regions_in_table: build.table.len(),
        missing_from_crosswalk: missing.into_iter().collect(),
        insufficient_baseline: insufficient,
        excluded: build.excluded.clone(),
        unmatched_zips: broadcast.unmatched_zips.clone(),
        unmatched_transaction_rows: broadcast.unmatched_rows,
        unknown_codes: series.unknown_codes.iter().map(|((s, c), n)| (format!("{}:{c}", s.as_str()), *n)).collect(),
        trips_out_of_window: inputs.trips.dropped_out_of_window,
        transactions_out_of_window: inputs.transactions.dropped_out_of_window,
    };
    Ok(MilestoneStage { series, baselines, changes, milestones: build.table, coverage })
}

pub fn metric_stage(config: &PipelineConfig, milestones: &MilestoneTable) -> Result<MetricTable> {
    Ok(build_metric_table_over(milestones, config.metric_divisor)?)
}

/// In-memory report bundle: file name to contents.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub files: BTreeMap<&'static str, Vec<u8>>,
}

/// Renders a file through one of the path-based writers.
fn render(scratch: &Path, name: &'static str, write: impl FnOnce(&Path) -> Result<()>) -> Result<Vec<u8>> {
    let path = scratch.join(name);
    write(&path)?;
    std::fs::read(&path).map_err(|e| Error::io(format!("reading back {}", path.display()), e))
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(parent: &Path) -> Result<Self> {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
        static NEXT: AtomicUsize = AtomicUsize::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let dir = parent.join(format!(".staging-{}-{n}", std::process::id()));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(format!("clearing {}", dir.display()), e))?;
        }
        std::fs::create_dir(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(Scratch(dir))
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// Computes the artifacts of a run (all stages, or one) without touching
/// the output directory.
pub fn compute_bundle(config: &PipelineConfig, only: Option<Stage>) -> Result<Bundle> {
    config.validate()?;
    let scratch = Scratch::new(&std::env::temp_dir())?;
    let dir = scratch.0.as_path();
    let mut bundle = Bundle::default();

    let milestones = match only {
        None | Some(Stage::Milestones) => {
            let inputs = load_activity(config)?;
            let stage = milestone_stage(config, &inputs)?;
            bundle.files.insert(
                MILESTONES_FILE,
                render(dir, MILESTONES_FILE, |p| Ok(write_milestones_csv(p, &stage.milestones)?))?,
            );
            if only.is_none() {
                bundle.files.insert(COVERAGE_FILE, stage.coverage.to_json().into_bytes());
                if config.export_changes {
                    bundle
                        .files
                        .insert(CHANGES_FILE, render(dir, CHANGES_FILE, |p| Ok(write_changes_csv(p, &stage.changes)?))?);
                }
            }
            stage.milestones
        }
        Some(Stage::Metric) | Some(Stage::Stats) => read_milestones_csv(&config.output_dir.join(MILESTONES_FILE))?,
    };
    if only == Some(Stage::Milestones) {
        return Ok(bundle);
    }

    // The metric is a pure function of the integer durations, so the stats
    // stage rebuilds it from milestones.csv rather than from rounded metric.csv.
    let metric = metric_stage(config, &milestones)?;
    if only != Some(Stage::Stats) {
        bundle.files.insert(METRIC_FILE, render(dir, METRIC_FILE, |p| Ok(write_metric_csv(p, &metric)?))?);
    }
    if only == Some(Stage::Metric) {
        return Ok(bundle);
    }

    let (adjacency, attributes) = load_spatial(config)?;
    let stats = compute_stats(config, &milestones, &metric, &adjacency, &attributes);
    bundle.files.insert(STATS_FILE, stats.to_json().into_bytes());
    bundle.files.insert(LORENZ_FILE, stats.lorenz_csv().into_bytes());
    Ok(bundle)
}

/// Moves a computed bundle into the output directory.
pub fn write_bundle(bundle: &Bundle, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let staging = Scratch::new(output_dir)?;
    for (name, bytes) in &bundle.files {
        let p = staging.0.join(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    }
    let mut written = Vec::new();
    for name in bundle.files.keys() {
        let dest = output_dir.join(name);
        std::fs::rename(staging.0.join(name), &dest)
            .map_err(|e| Error::io(format!("moving {} into place", dest.display()), e))?;
        written.push(dest);
    }
    Ok(written)
}

/// Runs the pipeline and writes its artifacts; returns the paths written.
pub fn run(config: &PipelineConfig, only: Option<Stage>) -> Result<Vec<PathBuf>> {
    let bundle = compute_bundle(config, only)?;
    write_bundle(&bundle, &config.output_dir)
}
