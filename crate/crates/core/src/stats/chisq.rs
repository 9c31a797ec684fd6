//! Pearson chi-square test of independence on a 2x2 table.

use serde::Serialize;

use super::quantile::median;
use super::special::chi_square_sf;
use super::StatsError;

/// Median split: `1` for values strictly above the (type-7) median.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianSplit {
    pub labels: Vec<u8>,
    pub median: f64,
    /// No value lies above the median, so the split puts every value in group 0.
    pub degenerate: bool,
}

pub fn dichotomize_by_median(values: &[f64]) -> MedianSplit {
    if values.is_empty() {
        return MedianSplit { labels: Vec::new(), median: f64::NAN, degenerate: true };
    }
    let m = median(values);
    let labels: Vec<u8> = values.iter().map(|&v| u8::from(v > m)).collect();
    let degenerate = labels.iter().all(|&l| l == 0);
    MedianSplit { labels, median: m, degenerate }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    /// `table[a][b]` counts units with first label `a` and second label `b`.
    pub table: [[u64; 2]; 2],
    pub yates: bool,
}

/// Cross-tabulates two binary label vectors and tests independence.
pub fn chi_square_2x2(group_a: &[u8], group_b: &[u8], yates: bool) -> Result<ChiSquareResult, StatsError> {
    if group_a.len() != group_b.len() {
        return Err(StatsError::LengthMismatch(group_a.len(), group_b.len()));
    }
    let mut table = [[0u64; 2]; 2];
    for (&a, &b) in group_a.iter().zip(group_b) {
        for l in [a, b] {
            if l > 1 {
                return Err(StatsError::NotBinary(l));
            }
        }
        table[a as usize][b as usize] += 1;
    }
    chi_square_table(table, yates)
}

/// Tests a given 2x2 table of counts.
pub fn chi_square_table(table: [[u64; 2]; 2], yates: bool) -> Result<ChiSquareResult, StatsError> {
    let [[a, b], [c, d]] = table.map(|r| r.map(|v| v as f64));
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0.0) {
        return Err(StatsError::DegenerateTable);
    }
    let n = a + b + c + d;
    let mut diff = (a * d - b * c).abs();
    if yates {
        diff = (diff - n / 2.0).max(0.0);
    }
    let statistic = n * diff * diff / margins.iter().product::<f64>();
    Ok(ChiSquareResult { statistic, dof: 1, p_value: chi_square_sf(statistic, 1), table, yates })
}
