use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::UnknownCodePolicy;
use crate::calendar::DateWindow;
use crate::milestones::RecoveryRule;
use crate::series::{BoundaryMode, DEFAULT_MIN_BASELINE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("parsing config {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub trips: PathBuf,
    pub transactions: PathBuf,
    pub overlaps: PathBuf,
    pub adjacency: PathBuf,
    pub attributes: PathBuf,
    /// The bundled taxonomy is used when absent.
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsOptions {
    /// Permutation replicates for Moran's I; 0 disables the permutation test.
    #[serde(default)]
    pub permutations: usize,
    #[serde(default)]
    pub yates: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions { permutations: 0, yates: false, seed: default_seed() }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_event() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 8, 27).expect("valid date")
}

fn default_baseline_window() -> DateWindow {
    DateWindow {
        start: NaiveDate::from_ymd_opt(2017, 8, 1).expect("valid date"),
        end: NaiveDate::from_ymd_opt(2017, 8, 21).expect("valid date"),
    }
}

fn default_half_width() -> usize {
    3
}

fn default_threshold() -> f64 {
    RecoveryRule::default().threshold
}

fn default_run_length() -> usize {
    RecoveryRule::default().run_length
}

fn default_horizon() -> u32 {
    120
}

fn default_min_baseline() -> f64 {
    DEFAULT_MIN_BASELINE
}

fn default_divisor() -> f64 {
    4.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Inputs,
    #[serde(default = "default_event")]
    pub event_date: NaiveDate,
    #[serde(default = "default_baseline_window")]
    pub baseline_window: DateWindow,
    /// Last day of data used. Defaults to `event_date + horizon_days +
    /// smoothing_half_width` so every day in the horizon has a full window.
    #[serde(default)]
    pub analysis_end: Option<NaiveDate>,
    #[serde(default = "default_half_width")]
    pub smoothing_half_width: usize,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default = "default_threshold")]
    pub recovery_threshold: f64,
    #[serde(default = "default_run_length")]
    pub run_length: usize,
    #[serde(default = "default_horizon")]
    pub horizon_days: u32,
    #[serde(default = "default_min_baseline")]
    pub min_baseline: f64,
    /// The integrated metric is the sum of the four normalized durations over this.
    #[serde(default = "default_divisor")]
    pub metric_divisor: f64,
    #[serde(default)]
    pub unknown_code_policy: UnknownCodePolicy,
    /// Rescale taxonomy weights so each category sums to one.
    #[serde(default)]
    pub renormalize_weights: bool,
    /// Also write `changes.csv`.
    #[serde(default)]
    pub export_changes: bool,
    #[serde(default)]
    pub stats: StatsOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    /// A config with every default and the given inputs.
    pub fn with_inputs(inputs: Inputs) -> Self {
        PipelineConfig {
            inputs,
            event_date: default_event(),
            baseline_window: default_baseline_window(),
            analysis_end: None,
            smoothing_half_width: default_half_width(),
            boundary_mode: BoundaryMode::default(),
            recovery_threshold: default_threshold(),
            run_length: default_run_length(),
            horizon_days: default_horizon(),
            min_baseline: default_min_baseline(),
            metric_divisor: default_divisor(),
            unknown_code_policy: UnknownCodePolicy::default(),
            renormalize_weights: false,
            export_changes: false,
            stats: StatsOptions::default(),
            output_dir: default_output_dir(),
        }
    }

    /// Reads and validates a config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let config = Self::load_unchecked(path)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config without checking field invariants.
    pub fn load_unchecked(path: &Path) -> Result<Self, ConfigError> {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: label.clone(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base).map_err(|source| ConfigError::Parse { path: label, source })
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, serde_json::Error> {
        let mut config: PipelineConfig = serde_json::from_str(text)?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.inputs;
        for p in [&mut i.trips, &mut i.transactions, &mut i.overlaps, &mut i.adjacency, &mut i.attributes] {
            fix(p);
        }
        if let Some(p) = i.taxonomy.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = &self.baseline_window;
        if w.start > w.end {
            return Err(invalid("baseline_window", "start is after end"));
        }
        if w.end >= self.event_date {
            return Err(invalid("baseline_window", format!("must end before event_date {}", self.event_date)));
        }
        if !(self.recovery_threshold > 0.0 && self.recovery_threshold <= 1.0) {
            return Err(invalid("recovery_threshold", "must be in (0, 1]"));
        }
        if self.run_length == 0 {
            return Err(invalid("run_length", "must be at least 1"));
        }
        if !(self.min_baseline > 0.0) {
            return Err(invalid("min_baseline", "must be positive"));
        }
        if !(self.metric_divisor > 0.0 && self.metric_divisor.is_finite()) {
            return Err(invalid("metric_divisor", "must be positive"));
        }
        let needed = self.event_date + Duration::days(self.horizon_days as i64);
        if self.analysis_end() < needed {
            return Err(invalid("analysis_end", format!("must cover the horizon, through {needed}")));
        }
        Ok(())
    }

    pub fn analysis_end(&self) -> NaiveDate {
        self.analysis_end.unwrap_or(
            self.event_date + Duration::days(self.horizon_days as i64 + self.smoothing_half_width as i64),
        )
    }

    /// All days read, from the start of the baseline window.
    pub fn analysis_window(&self) -> DateWindow {
        DateWindow { start: self.baseline_window.start, end: self.analysis_end() }
    }

    pub fn event_index(&self) -> usize {
        (self.event_date - self.baseline_window.start).num_days() as usize
    }

    pub fn baseline_range(&self) -> std::ops::RangeInclusive<usize> {
        0..=(self.baseline_window.end - self.baseline_window.start).num_days() as usize
    }

    pub fn rule(&self) -> RecoveryRule {
        RecoveryRule { threshold: self.recovery_threshold, run_length: self.run_length }
    }
}
