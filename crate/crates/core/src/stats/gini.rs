//! Lorenz curve and Gini coefficient.

use serde::Serialize;

use super::quantile::sorted_copy;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzCurve {
    /// `(population share, value share)` for `0..=n` smallest units.
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

/// Gini coefficient and Lorenz curve of nonnegative values with a positive mean.
pub fn gini(values: &[f64]) -> Result<LorenzCurve, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(&v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(StatsError::NegativeValue(v));
    }
    let x = sorted_copy(values);
    let n = x.len();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    let cums: Vec<f64> = x
        .iter()
        .map(|v| {
            cum += v;
            cum
        })
        .collect();
    let total = cum;
    if !(total > 0.0) {
        return Err(StatsError::NonPositiveMean);
    }
    for (k, c) in cums.iter().enumerate() {
        points.push(((k + 1) as f64 / n as f64, c / total));
    }
    points[n] = (1.0, 1.0);

    // sum_i (2i - n + 1) x_(i) over 0-based ranks, folded into symmetric pairs
    // so that equal values cancel exactly.
    let mut acc = 0.0;
    for i in 0..n / 2 {
        acc += (x[n - 1 - i] - x[i]) * (n - 1 - 2 * i) as f64;
    }
    let gini = acc / (n as f64 * total);
    Ok(LorenzCurve { points, gini })
}
