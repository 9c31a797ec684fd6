//! Pre-event baselines, centered smoothing and percent change.
//!
//! A baseline is the arithmetic mean of a series over the baseline window,
//! with days lacking records counted as zero. The daily series is smoothed
//! with a centered moving average first; the change on day `d` is then
//! `(smoothed[d] - baseline) / baseline`.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::DailySeriesSet;
use crate::keys::SeriesKey;
use crate::numfmt::sig6;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("baseline window {start}..={end} lies outside the series (length {len})")]
    WindowOutOfRange { start: usize, end: usize, len: usize },
    #[error("baseline must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    pub value: f64,
    /// False when the mean falls below the configured minimum; such keys
    /// carry no usable baseline.
    pub sufficient: bool,
}

/// How the centered window behaves where it runs off either end of the series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Average over the days that exist.
    #[default]
    Truncate,
    /// Emit no value for days lacking a full window.
    Skip,
}

pub const DEFAULT_MIN_BASELINE: f64 = 1e-9;

pub fn compute_baseline(
    values: &[f64],
    window: RangeInclusive<usize>,
    min_baseline: f64,
) -> Result<Baseline, SeriesError> {
    let (start, end) = (*window.start(), *window.end());
    if start > end || end >= values.len() {
        return Err(SeriesError::WindowOutOfRange { start, end, len: values.len() });
    }
    let days = &values[start..=end];
    let value = days.iter().sum::<f64>() / days.len() as f64;
    Ok(Baseline { value, sufficient: value >= min_baseline && value > 0.0 })
}

/// Centered moving average over `[d - half_width, d + half_width]`.
pub fn moving_average(values: &[f64], half_width: usize, mode: BoundaryMode) -> Vec<Option<f64>> {
    let n = values.len();
    (0..n)
        .map(|d| {
            let lo = d.saturating_sub(half_width);
            let hi = (d + half_width).min(n - 1);
            let full = d >= half_width && d + half_width < n;
            if !full && mode == BoundaryMode::Skip {
                return None;
            }
            let window = &values[lo..=hi];
            Some(window.iter().sum::<f64>() / window.len() as f64)
        })
        .collect()
}

pub fn percent_change(smoothed: f64, baseline: f64) -> Result<f64, SeriesError> {
    if !(baseline > 0.0) {
        return Err(SeriesError::NonPositiveBaseline(baseline));
    }
    Ok((smoothed - baseline) / baseline)
}

#[derive(Debug, Clone, Default)]
pub struct BaselineTable {
    pub entries: BTreeMap<SeriesKey, Baseline>,
}

impl BaselineTable {
    pub fn get(&self, key: &SeriesKey) -> Option<&Baseline> {
        self.entries.get(key)
    }

    pub fn insufficient(&self) -> impl Iterator<Item = &SeriesKey> {
        self.entries.iter().filter(|(_, b)| !b.sufficient).map(|(k, _)| k)
    }
}

pub fn compute_baselines(
    set: &DailySeriesSet,
    window: RangeInclusive<usize>,
    min_baseline: f64,
) -> Result<BaselineTable, SeriesError> {
    let mut entries = BTreeMap::new();
    for (key, series) in &set.series {
        entries.insert(key.clone(), compute_baseline(&series.values, window.clone(), min_baseline)?);
    }
    Ok(BaselineTable { entries })
}

/// Day-indexed change relative to baseline; `None` where smoothing
/// produced no value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct ChangeSet {
    pub series: BTreeMap<SeriesKey, ChangeSeries>,
}

/// Smooths then converts to change, for every key with a sufficient baseline.
pub fn compute_changes(
    set: &DailySeriesSet,
    baselines: &BaselineTable,
    half_width: usize,
    mode: BoundaryMode,
) -> Result<ChangeSet, SeriesError> {
    let mut series = BTreeMap::new();
    for (key, daily) in &set.series {
        let Some(b) = baselines.get(key).filter(|b| b.sufficient) else { continue };
        let values = moving_average(&daily.values, half_width, mode)
            .into_iter()
            .map(|s| s.map(|s| percent_change(s, b.value)).transpose())
            .collect::<Result<_, _>>()?;
        series.insert(key.clone(), ChangeSeries { values });
    }
    Ok(ChangeSet { series })
}

/// Writes `region,source,category,day_index,change`.
pub fn write_changes_csv(path: &Path, changes: &ChangeSet) -> Result<(), SeriesError> {
    let io = |source| SeriesError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "region,source,category,day_index,change")?;
        for (key, s) in &changes.series {
            for (day, v) in s.values.iter().enumerate() {
                if let Some(v) = v {
                    writeln!(out, "{},{},{},{},{}", key.region, key.source, key.category, day, sig6(*v))?;
                }
            }
        }
        out.flush()
    };
    body().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn constant_baseline() {
        let b = compute_baseline(&[10.0; 30], 0..=20, DEFAULT_MIN_BASELINE).unwrap();
        assert_eq!(b, Baseline { value: 10.0, sufficient: true });
    }

    #[test]
    fn ramp_baseline_is_arithmetic_mean() {
        let v: Vec<f64> = (1..=21).map(f64::from).collect();
        // Oracle: (1 + 21) / 2.
        assert_eq!(compute_baseline(&v, 0..=20, DEFAULT_MIN_BASELINE).unwrap().value, 11.0);
    }

    #[test]
    fn zero_baseline_is_insufficient() {
        assert!(!compute_baseline(&[0.0; 21], 0..=20, DEFAULT_MIN_BASELINE).unwrap().sufficient);
        assert!(!compute_baseline(&[1e-12; 21], 0..=20, DEFAULT_MIN_BASELINE).unwrap().sufficient);
    }

    #[test]
    fn baseline_window_outside_series() {
        assert!(matches!(compute_baseline(&[1.0; 10], 0..=20, 1e-9), Err(SeriesError::WindowOutOfRange { .. })));
    }

    #[test]
    fn smoothing_examples() {
        assert!(moving_average(&[3.5; 12], 3, BoundaryMode::Truncate).iter().all(|v| *v == Some(3.5)));

        let v = [9.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0];
        // Neighborhood of index 4 is 1..=7, mean 4.
        assert_eq!(moving_average(&v, 3, BoundaryMode::Truncate)[4], Some(4.0));

        let head = [2.0, 4.0, 6.0, 8.0, 100.0];
        // First day sees itself and the next three: (2+4+6+8)/4.
        assert_eq!(moving_average(&head, 3, BoundaryMode::Truncate)[0], Some(5.0));
        assert_eq!(moving_average(&head, 3, BoundaryMode::Skip)[0], None);
    }

    #[test]
    fn zero_half_width_is_identity() {
        let v = [1.0, 5.0, 2.0];
        assert_eq!(moving_average(&v, 0, BoundaryMode::Skip), vec![Some(1.0), Some(5.0), Some(2.0)]);
    }

    #[test]
    fn change_examples() {
        assert_eq!(percent_change(100.0, 100.0).unwrap(), 0.0);
        assert!((percent_change(95.0, 100.0).unwrap() + 0.05).abs() < 1e-15);
        assert_eq!(percent_change(0.0, 50.0).unwrap(), -1.0);
        assert!(percent_change(1.0, 0.0).is_err());
        assert!(percent_change(1.0, -2.0).is_err());
    }

    proptest! {
        #[test]
        fn change_of_baseline_is_zero(b in 1e-6f64..1e9) {
            prop_assert_eq!(percent_change(b, b).unwrap(), 0.0);
        }

        #[test]
        fn change_floor_is_minus_one_at_zero(b in 1e-6f64..1e9) {
            prop_assert_eq!(percent_change(0.0, b).unwrap(), -1.0);
        }

        #[test]
        fn circular_padding_preserves_mean(xs in prop::collection::vec(0.0f64..1000.0, 7..80)) {
            let h = 3;
            let n = xs.len();
            let padded: Vec<f64> = xs[n - h..].iter().chain(&xs).chain(&xs[..h]).copied().collect();
            let smoothed = moving_average(&padded, h, BoundaryMode::Skip);
            let inner: Vec<f64> = smoothed[h..h + n].iter().map(|v| v.unwrap()).collect();
            prop_assert!(smoothed[..h].iter().chain(&smoothed[h + n..]).all(Option::is_none));
            prop_assert!((mean(&inner) - mean(&xs)).abs() <= 1e-12 * mean(&xs).max(1.0));
        }

        #[test]
        fn smoothing_commutes_with_change(
            xs in prop::collection::vec(0.0f64..10.0, 1..60),
            b in 0.5f64..10.0,
            truncate in any::<bool>(),
        ) {
            let mode = if truncate { BoundaryMode::Truncate } else { BoundaryMode::Skip };
            let smooth_then_change: Vec<Option<f64>> = moving_average(&xs, 3, mode)
                .into_iter()
                .map(|s| s.map(|s| percent_change(s, b).unwrap()))
                .collect();
            let raw_changes: Vec<f64> = xs.iter().map(|x| percent_change(*x, b).unwrap()).collect();
            let change_then_smooth = moving_average(&raw_changes, 3, mode);
            for (p, q) in smooth_then_change.iter().zip(&change_then_smooth) {
                match (p, q) {
                    (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-12, "{p} vs {q}"),
                    (None, None) => {}
                    _ => prop_assert!(false, "boundary mismatch"),
                }
            }
        }

        #[test]
        fn constant_series_is_fixed_point(c in 0.0f64..1e6, n in 1usize..50, h in 0usize..5) {
            let xs = vec![c; n];
            for v in moving_average(&xs, h, BoundaryMode::Truncate) {
                prop_assert!((v.unwrap() - c).abs() <= 1e-12 * c.max(1.0));
            }
        }
    }
}
