//! Post-disaster population-activity recovery tracking.
//!
//! The pipeline turns daily trip counts (per origin region) and card
//! transaction amounts (per Zip code) into four recovery milestones per
//! region, folds them into a single integrated recovery metric, and runs
//! the exploratory statistics used to study how unevenly recovery is
//! distributed: global Moran's I, median-split chi-square tests and the
//! Gini index with its Lorenz curve.
//!
//! Stages, in data-flow order:
//!
//! - [`ingest`]: CSV parsing, validation and the Zip to region crosswalk.
//! - [`aggregate`]: service taxonomy and weighted daily series.
//! - [`series`]: baselines, centered smoothing and percent change.
//! - [`milestones`]: recovery-day detection and milestone durations.
//! - [`metric`]: min-max normalization, integrated metric, quartile labels.
//! - [`stats`]: spatial autocorrelation, chi-square, inequality.
//! - [`synth`]: synthetic cities with planted recovery curves.
//! - [`pipeline`]: configuration, orchestration and report artifacts.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod calendar;
pub mod error;
pub mod ingest;
pub mod keys;
pub mod metric;
pub mod milestones;
pub mod numfmt;
pub mod pipeline;
pub mod series;
pub mod stats;
pub mod synth;

pub use calendar::DateWindow;
pub use error::{Error, Result};
pub use keys::{Category, Milestone, SeriesKey, Source};
