//! Exploratory statistics over per-region values.

pub mod chisq;
pub mod gini;
pub mod moran;
pub mod quantile;
pub mod special;
pub mod weights;

use thiserror::Error;

pub use chisq::{chi_square_2x2, chi_square_table, dichotomize_by_median, ChiSquareResult, MedianSplit};
pub use gini::{gini, LorenzCurve};
pub use moran::{morans_i, permutation_p_value, MoranResult};
pub use weights::SpatialWeights;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("constant field: Moran's I is undefined for zero variance")]
    ConstantField,
    #[error("all regions are isolated")]
    AllIsolated,
    #[error("need at least {needed} non-isolated regions, got {got}")]
    TooFewRegions { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels must be 0 or 1, found {0}")]
    NotBinary(u8),
    #[error("degenerate table: a row or column total is zero")]
    DegenerateTable,
    #[error("values must be nonnegative, found {0}")]
    NegativeValue(f64),
    #[error("mean must be positive")]
    NonPositiveMean,
    #[error("no values")]
    Empty,
}
