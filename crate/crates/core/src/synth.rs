//! Synthetic scenarios with planted disruption and recovery curves.
//!
//! Every region carries one curve per milestone. Before the event the curve
//! sits at its baseline; on the event day it drops by `drop` (a fraction of
//! baseline) and climbs back over `ramp_days`. Each region owns one zip, whose
//! transaction amounts follow the region's transaction curves. Multiplicative
//! noise is uniform on `[1 - noise, 1 + noise]`, drawn from a per-region stream.
//!
//! The ground truth is read off the noiseless curve: the first day `t*` at
//! which it is back to the threshold, plus the run offset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::ServiceTaxonomy;
use crate::ingest::{self, AdjacencyList, OverlapEntry, RegionAttributes, TransactionRecord, TripRecord};
use crate::keys::{Milestone, Source};
use crate::milestones::RecoveryRule;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("could not place parameters for region {region} after {attempts} attempts")]
    Placement { region: String, attempts: usize },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("scenario file {context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error("ground truth file {path}, line {line}: {reason}")]
    GroundTruth { path: String, line: usize, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SynthError {
    SynthError::InvalidField { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// Deficit closes linearly and is gone after `ramp_days`.
    #[default]
    Linear,
    /// Deficit decays as `exp(-k t)` with `k = ln(100) / ramp_days`, so 1% of
    /// the drop remains after `ramp_days`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub baseline: f64,
    pub drop: f64,
    pub ramp_days: f64,
}

impl Curve {
    /// Noiseless level as a fraction of baseline, `t` days after the event.
    pub fn level(&self, t: i64, shape: RampShape) -> f64 {
        if t < 0 || self.drop == 0.0 {
            return 1.0;
        }
        let t = t as f64;
        match shape {
            RampShape::Linear => {
                if t >= self.ramp_days {
                    1.0
                } else {
                    1.0 - self.drop * (1.0 - t / self.ramp_days)
                }
            }
            RampShape::Exponential => {
                if self.ramp_days == 0.0 {
                    return if t > 0.0 { 1.0 } else { 1.0 - self.drop };
                }
                let k = 100f64.ln() / self.ramp_days;
                1.0 - self.drop * (-k * t).exp()
            }
        }
    }
}

/// Per-milestone overrides of a region's default curve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveOverride {
    pub baseline: Option<f64>,
    pub drop: Option<f64>,
    pub ramp_days: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub flood_fraction: f64,
    pub minority_fraction: f64,
    pub per_capita_income: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub id: String,
    /// Defaults to `Z` followed by the region id.
    #[serde(default)]
    pub zip: Option<String>,
    /// Daily level per service type, in trips or dollars.
    pub baseline: f64,
    pub drop: f64,
    pub ramp_days: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub cluster: Option<u32>,
    #[serde(default)]
    pub curves: BTreeMap<Milestone, CurveOverride>,
    /// Sampled uniformly when absent.
    #[serde(default)]
    pub attributes: Option<AttributeSpec>,
}

impl RegionSpec {
    pub fn zip_code(&self) -> String {
        self.zip.clone().unwrap_or_else(|| format!("Z{}", self.id))
    }

    pub fn curve(&self, m: Milestone) -> Curve {
        let o = self.curves.get(&m).copied().unwrap_or_default();
        Curve {
            baseline: o.baseline.unwrap_or(self.baseline),
            drop: o.drop.unwrap_or(self.drop),
            ramp_days: o.ramp_days.unwrap_or(self.ramp_days),
        }
    }
}

/// An extra, smaller overlap between a region and another region's zip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondaryOverlap {
    pub region: String,
    pub zip: String,
    pub overlap_area: f64,
}

fn default_event() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 8, 27).expect("valid date")
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 8, 1).expect("valid date")
}

fn default_horizon() -> u32 {
    120
}

fn default_threshold() -> f64 {
    RecoveryRule::default().threshold
}

fn default_run_length() -> usize {
    RecoveryRule::default().run_length
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(default = "default_event")]
    pub event_date: NaiveDate,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    /// Defaults to `event_date + horizon_days + 3`, the last day a centered
    /// seven-day window needs.
    #[serde(default)]
    pub end_date: Option<NaiveDate>,
    #[serde(default = "default_horizon")]
    pub horizon_days: u32,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_run_length")]
    pub run_length: usize,
    #[serde(default)]
    pub ramp: RampShape,
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub adjacency: Vec<(String, String)>,
    #[serde(default)]
    pub secondary_overlaps: Vec<SecondaryOverlap>,
}

impl ScenarioSpec {
    pub fn end(&self) -> NaiveDate {
        self.end_date.unwrap_or(self.event_date + Duration::days(self.horizon_days as i64 + 3))
    }

    pub fn rule(&self) -> RecoveryRule {
        RecoveryRule { threshold: self.threshold, run_length: self.run_length }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.start_date >= self.event_date {
            return Err(invalid("start_date", "must be before event_date"));
        }
        if self.end() < self.event_date {
            return Err(invalid("end_date", "must not be before event_date"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(invalid("threshold", "must be in (0, 1]"));
        }
        if self.run_length == 0 {
            return Err(invalid("run_length", "must be at least 1"));
        }
        if self.regions.is_empty() {
            return Err(invalid("regions", "must not be empty"));
        }
        let mut ids = BTreeSet::new();
        let mut zips = BTreeSet::new();
        for (i, r) in self.regions.iter().enumerate() {
            let at = |f: &str| format!("regions[{i}].{f}");
            if r.id.is_empty() || r.id.contains(',') {
                return Err(invalid(at("id"), "must be non-empty and comma-free"));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(invalid(at("id"), format!("duplicate region `{}`", r.id)));
            }
            let zip = r.zip_code();
            if zip.is_empty() || zip.contains(',') {
                return Err(invalid(at("zip"), "must be non-empty and comma-free"));
            }
            if !zips.insert(zip) {
                return Err(invalid(at("zip"), "each region needs its own zip"));
            }
            if !(r.noise >= 0.0 && r.noise < 1.0) {
                return Err(invalid(at("noise"), "must be in [0, 1)"));
            }
            for m in Milestone::ALL {
                let c = r.curve(m);
                let field = |f: &str| {
                    if r.curves.contains_key(&m) {
                        format!("regions[{i}].curves.{}.{f}", m.as_str())
                    } else {
                        at(f)
                    }
                };
                if !(c.baseline > 0.0 && c.baseline.is_finite()) {
                    return Err(invalid(field("baseline"), "must be positive"));
                }
                if !(0.0..=1.0).contains(&c.drop) {
                    return Err(invalid(field("drop"), "must be in [0, 1]"));
                }
                if !(c.ramp_days >= 0.0 && c.ramp_days.is_finite()) {
                    return Err(invalid(field("ramp_days"), "must be nonnegative"));
                }
            }
            if let Some(a) = &r.attributes {
                if !(0.0..=1.0).contains(&a.flood_fraction) {
                    return Err(invalid(at("attributes.flood_fraction"), "must be in [0, 1]"));
                }
                if !(0.0..=1.0).contains(&a.minority_fraction) {
                    return Err(invalid(at("attributes.minority_fraction"), "must be in [0, 1]"));
                }
                if !(a.per_capita_income >= 0.0) {
                    return Err(invalid(at("attributes.per_capita_income"), "must be nonnegative"));
                }
            }
        }
        for (i, (a, b)) in self.adjacency.iter().enumerate() {
            for r in [a, b] {
                if !ids.contains(r.as_str()) {
                    return Err(invalid(format!("adjacency[{i}]"), format!("unknown region `{r}`")));
                }
            }
            if a == b {
                return Err(invalid(format!("adjacency[{i}]"), "self-loop"));
            }
        }
        let zip_of: BTreeMap<&str, String> = self.regions.iter().map(|r| (r.id.as_str(), r.zip_code())).collect();
        for (i, s) in self.secondary_overlaps.iter().enumerate() {
            let Some(own) = zip_of.get(s.region.as_str()) else {
                return Err(invalid(format!("secondary_overlaps[{i}].region"), "unknown region"));
            };
            if *own == s.zip {
                return Err(invalid(format!("secondary_overlaps[{i}].zip"), "is the region's own zip"));
            }
            // Must stay strictly below the primary overlap, which is 1.
            if !(s.overlap_area > 0.0 && s.overlap_area < 1.0) {
                return Err(invalid(format!("secondary_overlaps[{i}].overlap_area"), "must be in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// A gridded city whose regions and curves are sampled from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityParams {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_event")]
    pub event_date: NaiveDate,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    #[serde(default = "default_horizon")]
    pub horizon_days: u32,
    /// Share of cells planted to recover after the horizon.
    #[serde(default = "default_censored_fraction")]
    pub censored_fraction: f64,
    /// Share of cells with a drop too small to leave the recovery band.
    #[serde(default = "default_shallow_fraction")]
    pub shallow_fraction: f64,
}

fn default_censored_fraction() -> f64 {
    0.05
}

fn default_shallow_fraction() -> f64 {
    0.1
}

/// Either an explicit scenario or a city to sample one from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFile {
    City { city: CityParams },
    Explicit(ScenarioSpec),
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SynthError::Io { context: format!("reading {}", path.display()), source })?;
        serde_json::from_str(&text).map_err(|source| SynthError::Json { context: path.display().to_string(), source })
    }

    pub fn into_spec(self) -> Result<ScenarioSpec, SynthError> {
        match self {
            ScenarioFile::City { city } => city_scenario(&city),
            ScenarioFile::Explicit(spec) => Ok(spec),
        }
    }
}

/// Planted outcome for one region and milestone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruthCell {
    /// Last day of the first qualifying run, when within the horizon.
    pub recovery_date: Option<NaiveDate>,
    pub duration_days: u32,
    pub censored: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub cells: BTreeMap<(String, Milestone), TruthCell>,
}

const GROUND_TRUTH_HEADER: &str = "region,milestone,recovery_date,duration_days,censored";

impl GroundTruth {
    pub fn get(&self, region: &str, m: Milestone) -> Option<TruthCell> {
        self.cells.get(&(region.to_string(), m)).copied()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SynthError> {
        let mut out = String::from(GROUND_TRUTH_HEADER);
        out.push('\n');
        for ((region, m), c) in &self.cells {
            let date = c.recovery_date.map(|d| d.to_string()).unwrap_or_default();
            out.push_str(&format!("{region},{},{date},{},{}\n", m.as_str(), c.duration_days, c.censored));
        }
        std::fs::write(path, out).map_err(|source| SynthError::Io { context: format!("writing {}", path.display()), source })
    }

    pub fn read_csv(path: &Path) -> Result<Self, SynthError> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| SynthError::Io { context: format!("reading {label}"), source })?;
        let bad = |line: usize, reason: &str| SynthError::GroundTruth { path: label.clone(), line, reason: reason.into() };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == GROUND_TRUTH_HEADER => {}
            _ => return Err(bad(1, "unexpected header")),
        }
        let mut truth = GroundTruth::default();
        for (i, line) in lines {
            let n = i + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(n, "expected 5 fields"));
            }
            let m = Milestone::parse(f[1]).ok_or_else(|| bad(n, "unknown milestone"))?;
            let recovery_date = match f[2] {
                "" => None,
                s => Some(crate::calendar::parse_date(s).ok_or_else(|| bad(n, "bad date"))?),
            };
            let duration_days = f[3].parse().map_err(|_| bad(n, "bad duration"))?;
            let censored = match f[4] {
                "true" => true,
                "false" => false,
                _ => return Err(bad(n, "bad censored flag")),
            };
            truth.cells.insert((f[0].to_string(), m), TruthCell { recovery_date, duration_days, censored });
        }
        Ok(truth)
    }
}

/// First day offset `t >= 0` at which the noiseless curve is back to
/// `threshold`, searched up to `limit`.
pub fn first_recovered_offset(curve: &Curve, shape: RampShape, threshold: f64, limit: u32) -> Option<u32> {
    (0..=limit).find(|&t| curve.level(t as i64, shape) >= threshold - 1e-9)
}

/// Ground-truth cell for one curve.
pub fn planted_cell(curve: &Curve, spec: &ScenarioSpec) -> TruthCell {
    let horizon = spec.horizon_days;
    let offset = first_recovered_offset(curve, spec.ramp, spec.threshold, horizon)
        .map(|t| t + spec.run_length as u32 - 1)
        .filter(|&d| d <= horizon);
    match offset {
        Some(d) => TruthCell {
            recovery_date: Some(spec.event_date + Duration::days(d as i64)),
            duration_days: d,
            censored: false,
        },
        None => TruthCell { recovery_date: None, duration_days: horizon, censored: true },
    }
}

/// Generated tables.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub trips: Vec<TripRecord>,
    pub transactions: Vec<TransactionRecord>,
    pub overlaps: Vec<OverlapEntry>,
    pub adjacency: AdjacencyList,
    pub attributes: Vec<RegionAttributes>,
    pub ground_truth: GroundTruth,
}

fn region_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn jitter(rng: &mut ChaCha8Rng, noise: f64) -> f64 {
    if noise == 0.0 {
        1.0
    } else {
        rng.random_range(1.0 - noise..=1.0 + noise)
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let p = 10f64.powi(places);
    (x * p).round() / p
}

/// Builds every table for `spec`. Deterministic for a fixed spec.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, SynthError> {
    spec.validate()?;
    let taxonomy = ServiceTaxonomy::standard();
    let end = spec.end();
    let days = (end - spec.start_date).num_days() + 1;
    let mut trips = Vec::new();
    let mut transactions = Vec::new();
    let mut overlaps = Vec::new();
    let mut attributes = Vec::new();
    let mut truth = GroundTruth::default();

    for (index, region) in spec.regions.iter().enumerate() {
        let mut noise_rng = region_rng(spec.seed, 2 * index as u64);
        let zip = region.zip_code();
        for m in Milestone::ALL {
            truth.cells.insert((region.id.clone(), m), planted_cell(&region.curve(m), spec));
        }
        for day in 0..days {
            let date = spec.start_date + Duration::days(day);
            let t = (date - spec.event_date).num_days();
            for m in Milestone::ALL {
                let curve = region.curve(m);
                let level = curve.level(t, spec.ramp) * curve.baseline;
                for code in taxonomy.codes(m.category()) {
                    let value = level * jitter(&mut noise_rng, region.noise);
                    match m.source() {
                        Source::Trip => trips.push(TripRecord {
                            date,
                            origin_region: region.id.clone(),
                            service_type: code.to_string(),
                            trip_count: value.round().max(0.0) as u64,
                        }),
                        Source::Transaction => transactions.push(TransactionRecord {
                            date,
                            zip: zip.clone(),
                            merchant_type: code.to_string(),
                            amount: round_to(value.max(0.0), 2),
                        }),
                    }
                }
            }
        }
        overlaps.push(OverlapEntry::new(region.id.clone(), zip, 1.0));
        let a = match &region.attributes {
            Some(a) => a.clone(),
            None => {
                let mut rng = region_rng(spec.seed, 2 * index as u64 + 1);
                AttributeSpec {
                    flood_fraction: round_to(rng.random_range(0.0..1.0), 4),
                    minority_fraction: round_to(rng.random_range(0.0..1.0), 4),
                    per_capita_income: rng.random_range(15_000.0..90_000.0_f64).round(),
                }
            }
        };
        attributes.push(RegionAttributes {
            region: region.id.clone(),
            flood_fraction: a.flood_fraction,
            minority_fraction: a.minority_fraction,
            per_capita_income: a.per_capita_income,
        });
    }
    overlaps.extend(spec.secondary_overlaps.iter().map(|s| OverlapEntry::new(&*s.region, &*s.zip, s.overlap_area)));
    overlaps.sort_by(|a, b| (&a.region, &a.zip).cmp(&(&b.region, &b.zip)));
    trips.sort_by(|a, b| (a.date, &a.origin_region, &a.service_type).cmp(&(b.date, &b.origin_region, &b.service_type)));
    transactions.sort_by(|a, b| (a.date, &a.zip, &a.merchant_type).cmp(&(b.date, &b.zip, &b.merchant_type)));
    let adjacency = AdjacencyList::from_edges(spec.adjacency.iter().map(|(a, b)| (a.as_str(), b.as_str())));

    Ok(Scenario { trips, transactions, overlaps, adjacency, attributes, ground_truth: truth })
}

/// File names written by [`Scenario::write_dir`].
pub const TRIPS_FILE: &str = "trips.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const OVERLAPS_FILE: &str = "overlaps.csv";
pub const ADJACENCY_FILE: &str = "adjacency.csv";
pub const ATTRIBUTES_FILE: &str = "attributes.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

impl Scenario {
    pub fn write_dir(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)
            .map_err(|source| SynthError::Io { context: format!("creating {}", dir.display()), source })?;
        ingest::write::trips(&dir.join(TRIPS_FILE), &self.trips)?;
        ingest::write::transactions(&dir.join(TRANSACTIONS_FILE), &self.transactions)?;
        ingest::write::overlaps(&dir.join(OVERLAPS_FILE), &self.overlaps)?;
        ingest::write::adjacency(&dir.join(ADJACENCY_FILE), &self.adjacency)?;
        ingest::write::attributes(&dir.join(ATTRIBUTES_FILE), &self.attributes)?;
        self.ground_truth.write_csv(&dir.join(GROUND_TRUTH_FILE))
    }
}

// City sampling.

/// Distance kept between the smoothed noiseless curve and the threshold, so
/// integer rounding of counts cannot move a crossing.
const CITY_MARGIN: f64 = 0.005;
const CITY_HALF_WIDTH: i64 = 3;
const MAX_ATTEMPTS: usize = 10_000;

/// Centered moving average of the noiseless curve at offset `t`, truncated at
/// the end of the data. Written out directly rather than through the series
/// module so the check does not lean on the code under test.
fn smoothed_level(curve: &Curve, shape: RampShape, t: i64, last: i64) -> f64 {
    let lo = t - CITY_HALF_WIDTH;
    let hi = (t + CITY_HALF_WIDTH).min(last);
    let n = (hi - lo + 1) as f64;
    (lo..=hi).map(|s| curve.level(s, shape)).sum::<f64>() / n
}

/// True if detection on the smoothed curve agrees with the analytic truth and
/// no smoothed day within the horizon sits near the threshold.
fn smoothing_safe(curve: &Curve, spec: &ScenarioSpec) -> bool {
    let horizon = spec.horizon_days as i64;
    let last = (spec.end() - spec.event_date).num_days();
    let smoothed: Vec<f64> = (0..=horizon).map(|t| smoothed_level(curve, spec.ramp, t, last)).collect();
    if smoothed.iter().any(|s| (s - spec.threshold).abs() < CITY_MARGIN) {
        return false;
    }
    let run = spec.run_length;
    let mut streak = 0usize;
    let mut detected = None;
    for (t, s) in smoothed.iter().enumerate() {
        streak = if *s >= spec.threshold { streak + 1 } else { 0 };
        if streak == run {
            detected = Some(t as u32);
            break;
        }
    }
    detected == planted_cell(curve, spec).recovery_date.map(|d| (d - spec.event_date).num_days() as u32)
}

/// Rook-contiguity grid city with a slow-recovering cluster.
pub fn city_scenario(p: &CityParams) -> Result<ScenarioSpec, SynthError> {
    if p.rows == 0 || p.cols == 0 {
        return Err(invalid("city.rows", "grid must have at least one row and column"));
    }
    if !(0.0..1.0).contains(&p.noise) {
        return Err(invalid("city.noise", "must be in [0, 1)"));
    }
    for (name, v) in [("city.censored_fraction", p.censored_fraction), ("city.shallow_fraction", p.shallow_fraction)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, "must be in [0, 1]"));
        }
    }
    if p.censored_fraction + p.shallow_fraction > 1.0 {
        return Err(invalid("city.censored_fraction", "plus shallow_fraction must not exceed 1"));
    }
    if p.horizon_days < 20 {
        return Err(invalid("city.horizon_days", "must be at least 20"));
    }

    let mut rng = region_rng(p.seed, u64::MAX);
    let id = |r: usize, c: usize| format!("R{:03}{:03}", r, c);
    let center = (rng.random_range(0..p.rows) as f64, rng.random_range(0..p.cols) as f64);
    let radius = (p.rows.min(p.cols) as f64 / 3.0).max(1.0);

    let mut spec = ScenarioSpec {
        seed: p.seed,
        event_date: p.event_date,
        start_date: p.start_date,
        end_date: None,
        horizon_days: p.horizon_days,
        threshold: default_threshold(),
        run_length: default_run_length(),
        ramp: RampShape::Linear,
        regions: Vec::new(),
        adjacency: Vec::new(),
        secondary_overlaps: Vec::new(),
    };
    let horizon = p.horizon_days as f64;
    // Ramps keep the fast cells well inside the horizon.
    let fast_max = (horizon * 0.375).min(45.0);
    let fast = (8.0_f64.min(fast_max / 2.0), fast_max);

    for r in 0..p.rows {
        for c in 0..p.cols {
            let rid = id(r, c);
            let dist = ((r as f64 - center.0).powi(2) + (c as f64 - center.1).powi(2)).sqrt();
            let in_cluster = dist <= radius;
            let mut curves = BTreeMap::new();
            for m in Milestone::ALL {
                let mut placed = None;
                for _ in 0..MAX_ATTEMPTS {
                    let baseline = match m.source() {
                        Source::Trip => rng.random_range(500.0..3000.0_f64).round(),
                        Source::Transaction => round_to(rng.random_range(2_000.0..20_000.0), 2),
                    };
                    let u: f64 = rng.random_range(0.0..1.0);
                    let (drop, ramp_days) = if u < p.shallow_fraction {
                        (round_to(rng.random_range(0.0..0.05), 4), rng.random_range(1.0..fast.1).round())
                    } else if u < p.shallow_fraction + p.censored_fraction {
                        let drop = round_to(rng.random_range(0.5..0.8), 4);
                        // Crossing lands 5 to 30 days past the horizon.
                        let t_cross = horizon + rng.random_range(5.0..30.0);
                        (drop, (t_cross / (1.0 - (1.0 - spec.threshold) / drop)).round())
                    } else {
                        let drop = round_to(rng.random_range(0.3..0.8), 4);
                        let lo = if in_cluster { (fast.0 + fast.1) / 2.0 } else { fast.0 };
                        let hi = if in_cluster { fast.1 } else { (fast.0 + fast.1) / 2.0 + 4.0 };
                        (drop, rng.random_range(lo..hi).round())
                    };
                    let curve = Curve { baseline, drop, ramp_days };
                    if smoothing_safe(&curve, &spec) {
                        placed = Some(curve);
                        break;
                    }
                }
                let curve = placed.ok_or_else(|| SynthError::Placement { region: rid.clone(), attempts: MAX_ATTEMPTS })?;
                curves.insert(m, CurveOverride { baseline: Some(curve.baseline), drop: Some(curve.drop), ramp_days: Some(curve.ramp_days) });
            }
            let tilt: f64 = if in_cluster { 1.0 } else { 0.0 };
            let attributes = AttributeSpec {
                flood_fraction: round_to((0.15 + 0.5 * tilt + rng.random_range(-0.15..0.15)).clamp(0.0, 1.0), 4),
                minority_fraction: round_to((0.25 + 0.35 * tilt + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0), 4),
                per_capita_income: (55_000.0 - 25_000.0 * tilt + rng.random_range(-12_000.0..12_000.0)).round(),
            };
            let trip = curves[&Milestone::TripEssential];
            spec.regions.push(RegionSpec {
                id: rid,
                zip: Some(format!("Z{:03}{:03}", r, c)),
                baseline: trip.baseline.unwrap_or(1.0),
                drop: trip.drop.unwrap_or(0.0),
                ramp_days: trip.ramp_days.unwrap_or(0.0),
                noise: p.noise,
                cluster: in_cluster.then_some(1),
                curves,
                attributes: Some(attributes),
            });
        }
    }
    for r in 0..p.rows {
        for c in 0..p.cols {
            if c + 1 < p.cols {
                spec.adjacency.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < p.rows {
                spec.adjacency.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    // About a third of regions also touch a neighbor's zip.
    for r in 0..p.rows {
        for c in 0..p.cols {
            if c + 1 < p.cols && rng.random_range(0.0..1.0) < 0.33 {
                spec.secondary_overlaps.push(SecondaryOverlap {
                    region: id(r, c),
                    zip: format!("Z{:03}{:03}", r, c + 1),
                    overlap_area: round_to(rng.random_range(0.05..0.45), 4),
                });
            }
        }
    }
    Ok(spec)
}
