//! Global Moran's I with row-standardized contiguity weights.
//!
//! The analytic z-score uses the moments under the randomization assumption;
//! a permutation p-value is available separately.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::special::normal_two_sided_p;
use super::weights::SpatialWeights;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranResult {
    /// Regions entering the statistic (non-isolated).
    pub n: usize,
    pub isolated: usize,
    #[serde(rename = "I")]
    pub i: f64,
    pub expected: f64,
    /// `None` below four regions, where the randomization variance is undefined.
    pub variance: Option<f64>,
    pub z_score: Option<f64>,
    pub p_value: Option<f64>,
}

/// Member values in member order, checked for length.
fn member_values(values: &[f64], weights: &SpatialWeights) -> Result<Vec<f64>, StatsError> {
    if values.len() != weights.total() {
        return Err(StatsError::LengthMismatch(values.len(), weights.total()));
    }
    if weights.is_empty() {
        return Err(StatsError::AllIsolated);
    }
    Ok(weights.members().iter().map(|&i| values[i]).collect())
}

/// `I` for member values `x`, given the deviations' sum of squares.
fn statistic(x: &[f64], mean: f64, m2: f64, weights: &SpatialWeights) -> f64 {
    let mut num = 0.0;
    for (k, &xk) in x.iter().enumerate() {
        let ns = weights.neighbors(k);
        let lag: f64 = ns.iter().map(|&l| x[l] - mean).sum::<f64>() / ns.len() as f64;
        num += (xk - mean) * lag;
    }
    let n = x.len() as f64;
    n / weights.s0() * num / m2
}

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, m2)
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Moran's I of `values` (indexed like the units the weights were built over).
pub fn morans_i(values: &[f64], weights: &SpatialWeights) -> Result<MoranResult, StatsError> {
    let x = member_values(values, weights)?;
    if is_constant(&x) {
        return Err(StatsError::ConstantField);
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewRegions { needed: 3, got: x.len() });
    }
    let (mean, m2) = moments(&x);
    let i = statistic(&x, mean, m2, weights);
    let n = x.len() as f64;
    let expected = -1.0 / (n - 1.0);

    let variance = if x.len() >= 4 {
        let s0 = weights.s0();
        let s1 = weights.s1();
        let s2 = weights.s2();
        let m4: f64 = x.iter().map(|v| (v - mean).powi(4)).sum();
        let b2 = n * m4 / (m2 * m2);
        let s02 = s0 * s0;
        let a = n * ((n * n - 3.0 * n + 3.0) * s1 - n * s2 + 3.0 * s02);
        let b = b2 * ((n * n - n) * s1 - 2.0 * n * s2 + 6.0 * s02);
        let v = (a - b) / ((n - 1.0) * (n - 2.0) * (n - 3.0) * s02) - expected * expected;
        (v > 0.0).then_some(v)
    } else {
        None
    };
    let z_score = variance.map(|v| (i - expected) / v.sqrt());
    let p_value = z_score.map(normal_two_sided_p);
    Ok(MoranResult { n: x.len(), isolated: weights.isolated().len(), i, expected, variance, z_score, p_value })
}

/// Two-sided permutation p-value: `(1 + #{|I_k - E| >= |I - E|}) / (K + 1)`
/// over `permutations` random relabelings of the member values.
pub fn permutation_p_value<R: Rng + ?Sized>(
    values: &[f64],
    weights: &SpatialWeights,
    permutations: usize,
    rng: &mut R,
) -> Result<f64, StatsError> {
    let observed = morans_i(values, weights)?;
    let mut x = member_values(values, weights)?;
    let (mean, m2) = moments(&x);
    let target = (observed.i - observed.expected).abs();
    // Guard against the observed labeling losing to itself through rounding.
    let tol = 1e-12 * target.max(1.0);
    let mut extreme = 0usize;
    for _ in 0..permutations {
        x.shuffle(rng);
        let ik = statistic(&x, mean, m2, weights);
        if (ik - observed.expected).abs() >= target - tol {
            extreme += 1;
        }
    }
    Ok((1 + extreme) as f64 / (permutations + 1) as f64)
}
