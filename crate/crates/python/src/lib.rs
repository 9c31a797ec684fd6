//! Python bindings for `recovery-core`.
//!
//! Plain functions over lists for the numerical building blocks, plus a
//! `PipelineConfig` class that drives whole runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recovery_core::aggregate::ServiceTaxonomy;
use recovery_core::metric;
use recovery_core::milestones::{self, Recovery};
use recovery_core::pipeline::{self, Stage};
use recovery_core::series::{self, BoundaryMode};
use recovery_core::stats::{self, SpatialWeights};
use recovery_core::synth::{self, ScenarioFile};
use recovery_core::Category;

create_exception!(recovery_track, RecoveryError, PyValueError);

fn py_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "None".to_string(), |v| v.to_string())
}

fn err(e: impl std::fmt::Display) -> PyErr {
    RecoveryError::new_err(e.to_string())
}

/// First day in `[d0, d0 + horizon]` ending a run of `run_length` changes at
/// or above `threshold`; `None` if censored. `None` entries in `changes`
/// never qualify.
#[pyfunction]
#[pyo3(signature = (changes, d0, horizon, threshold = -0.1, run_length = 3))]
fn detect_recovery_day(
    changes: Vec<Option<f64>>,
    d0: usize,
    horizon: usize,
    threshold: f64,
    run_length: usize,
) -> Option<usize> {
    match milestones::detect_recovery_day(&changes, threshold, run_length, d0, horizon) {
        Recovery::Day(d) => Some(d),
        Recovery::Censored => None,
    }
}

/// `(duration_days, censored)` for a recovery day (or `None`).
#[pyfunction]
fn recovery_duration(d0: usize, dn: Option<usize>, horizon: u32) -> PyResult<(u32, bool)> {
    let dn = dn.map_or(Recovery::Censored, Recovery::Day);
    let e = milestones::recovery_duration(d0, dn, horizon).map_err(err)?;
    Ok((e.duration_days, e.censored))
}

/// Weighted sum of per-type values using the standard taxonomy.
#[pyfunction]
fn weighted_measurement(values: BTreeMap<String, f64>, category: &str) -> PyResult<f64> {
    let category = Category::parse(category).ok_or_else(|| err(format!("unknown category `{category}`")))?;
    recovery_core::aggregate::weighted_measurement(&values, &ServiceTaxonomy::standard(), category).map_err(err)
}

/// `[(code, category, weight)]` of the standard taxonomy.
#[pyfunction]
fn standard_taxonomy() -> Vec<(String, String, f64)> {
    ServiceTaxonomy::standard()
        .iter()
        .map(|(code, e)| (code.to_string(), e.category.as_str().to_string(), e.weight))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (values, half_width = 3, skip_boundary = false))]
fn moving_average(values: Vec<f64>, half_width: usize, skip_boundary: bool) -> Vec<Option<f64>> {
    let mode = if skip_boundary { BoundaryMode::Skip } else { BoundaryMode::Truncate };
    series::moving_average(&values, half_width, mode)
}

#[pyfunction]
fn percent_change(smoothed: f64, baseline: f64) -> PyResult<f64> {
    series::percent_change(smoothed, baseline).map_err(err)
}

#[pyfunction]
fn min_max_normalize(values: Vec<f64>) -> PyResult<Vec<f64>> {
    metric::min_max_normalize(&values).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (normalized, divisor = 4.0))]
fn integrated_metric(normalized: Vec<f64>, divisor: f64) -> PyResult<f64> {
    metric::integrated_metric_over(&normalized, divisor).map_err(err)
}

/// `(labels, [q1, q2, q3])`.
#[pyfunction]
fn categorize(metrics: Vec<f64>) -> PyResult<(Vec<String>, [f64; 3])> {
    let (labels, q) = metric::categorize(&metrics).map_err(err)?;
    Ok((labels.iter().map(|c| c.as_str().to_string()).collect(), q))
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "recovery_track")]
#[derive(Clone)]
struct MoranResult {
    n: usize,
    isolated: usize,
    #[pyo3(name = "I")]
    i: f64,
    expected: f64,
    variance: Option<f64>,
    z_score: Option<f64>,
    p_value: Option<f64>,
    permutation_p_value: Option<f64>,
}

#[pymethods]
impl MoranResult {
    fn __repr__(&self) -> String {
        format!(
            "MoranResult(n={}, I={}, z_score={}, p_value={})",
            self.n,
            self.i,
            py_opt(self.z_score),
            py_opt(self.p_value)
        )
    }
}

/// Global Moran's I with row-standardized weights. `neighbors[k]` lists the
/// indices adjacent to region `k`; links are symmetrized.
#[pyfunction]
#[pyo3(signature = (values, neighbors, permutations = 0, seed = 42))]
fn morans_i(values: Vec<f64>, neighbors: Vec<Vec<usize>>, permutations: usize, seed: u64) -> PyResult<MoranResult> {
    if neighbors.len() != values.len() {
        return Err(err(format!("{} values but {} neighbor lists", values.len(), neighbors.len())));
    }
    if let Some(bad) = neighbors.iter().flatten().find(|&&j| j >= values.len()) {
        return Err(err(format!("neighbor index {bad} out of range")));
    }
    let w = SpatialWeights::from_neighbor_lists(&neighbors);
    let r = stats::morans_i(&values, &w).map_err(err)?;
    let permutation_p_value = if permutations > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(stats::permutation_p_value(&values, &w, permutations, &mut rng).map_err(err)?)
    } else {
        None
    };
    Ok(MoranResult {
        n: r.n,
        isolated: r.isolated,
        i: r.i,
        expected: r.expected,
        variance: r.variance,
        z_score: r.z_score,
        p_value: r.p_value,
        permutation_p_value,
    })
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "recovery_track")]
#[derive(Clone)]
struct ChiSquareResult {
    statistic: f64,
    dof: u32,
    p_value: f64,
    table: [[u64; 2]; 2],
    yates: bool,
}

#[pymethods]
impl ChiSquareResult {
    fn __repr__(&self) -> String {
        format!("ChiSquareResult(statistic={}, p_value={}, table={:?})", self.statistic, self.p_value, self.table)
    }
}

/// Pearson chi-square on two binary label vectors.
#[pyfunction]
#[pyo3(signature = (group_a, group_b, yates = false))]
fn chi_square(group_a: Vec<u8>, group_b: Vec<u8>, yates: bool) -> PyResult<ChiSquareResult> {
    let r = stats::chi_square_2x2(&group_a, &group_b, yates).map_err(err)?;
    Ok(ChiSquareResult { statistic: r.statistic, dof: r.dof, p_value: r.p_value, table: r.table, yates: r.yates })
}

/// `(labels, median, degenerate)`; values above the median are labeled 1.
#[pyfunction]
fn median_split(values: Vec<f64>) -> (Vec<u8>, f64, bool) {
    let s = stats::dichotomize_by_median(&values);
    (s.labels, s.median, s.degenerate)
}

/// `(gini, lorenz_points)`.
#[pyfunction]
fn gini(values: Vec<f64>) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let l = stats::gini(&values).map_err(err)?;
    Ok((l.gini, l.points))
}

type TruthMap = BTreeMap<(String, String), (Option<String>, u32, bool)>;

/// Generates a scenario from a spec file into `out_dir`. Returns the planted
/// truth as `{(region, milestone): (recovery_date, duration_days, censored)}`.
#[pyfunction]
fn synth_scenario(spec: PathBuf, out_dir: PathBuf) -> PyResult<TruthMap> {
    let spec = ScenarioFile::load(&spec).and_then(ScenarioFile::into_spec).map_err(err)?;
    let scenario = synth::generate(&spec).map_err(err)?;
    scenario.write_dir(&out_dir).map_err(err)?;
    Ok(scenario
        .ground_truth
        .cells
        .iter()
        .map(|((r, m), c)| {
            ((r.clone(), m.as_str().to_string()), (c.recovery_date.map(|d| d.to_string()), c.duration_days, c.censored))
        })
        .collect())
}

#[pyclass(module = "recovery_track")]
struct PipelineConfig {
    inner: pipeline::PipelineConfig,
}

fn stage(only: Option<&str>) -> PyResult<Option<Stage>> {
    only.map(|s| s.parse::<Stage>().map_err(err)).transpose()
}

#[pymethods]
impl PipelineConfig {
    /// Loads and validates a JSON config; relative paths resolve against
    /// the file's directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PipelineConfig { inner: pipeline::PipelineConfig::load(&path).map_err(err)? })
    }

    /// Like `load` but skips validation, so `validate` can report problems.
    #[staticmethod]
    fn load_unchecked(path: PathBuf) -> PyResult<Self> {
        Ok(PipelineConfig { inner: pipeline::PipelineConfig::load_unchecked(&path).map_err(err)? })
    }

    #[getter]
    fn output_dir(&self) -> PathBuf {
        self.inner.output_dir.clone()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: PathBuf) {
        self.inner.output_dir = dir;
    }

    #[getter]
    fn permutations(&self) -> usize {
        self.inner.stats.permutations
    }

    #[setter]
    fn set_permutations(&mut self, k: usize) {
        self.inner.stats.permutations = k;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.stats.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.stats.seed = seed;
    }

    /// Runs the pipeline (or one stage) and returns the paths written.
    #[pyo3(signature = (only = None))]
    fn run(&self, py: Python<'_>, only: Option<&str>) -> PyResult<Vec<PathBuf>> {
        let only = stage(only)?;
        let config = self.inner.clone();
        py.detach(move || pipeline::run(&config, only)).map_err(err)
    }

    /// `[(kind, subject, message)]`; empty when the inputs are clean.
    fn validate(&self, py: Python<'_>) -> Vec<(String, String, String)> {
        let config = self.inner.clone();
        py.detach(move || pipeline::validate(&config))
            .into_iter()
            .map(|d| (d.kind.as_str().to_string(), d.subject, d.message))
            .collect()
    }
}

#[pymodule]
fn recovery_track(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RecoveryError", m.py().get_type::<RecoveryError>())?;
    m.add_class::<MoranResult>()?;
    m.add_class::<ChiSquareResult>()?;
    m.add_class::<PipelineConfig>()?;
    m.add_function(wrap_pyfunction!(detect_recovery_day, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_duration, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_measurement, m)?)?;
    m.add_function(wrap_pyfunction!(standard_taxonomy, m)?)?;
    m.add_function(wrap_pyfunction!(moving_average, m)?)?;
    m.add_function(wrap_pyfunction!(percent_change, m)?)?;
    m.add_function(wrap_pyfunction!(min_max_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(integrated_metric, m)?)?;
    m.add_function(wrap_pyfunction!(categorize, m)?)?;
    m.add_function(wrap_pyfunction!(morans_i, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square, m)?)?;
    m.add_function(wrap_pyfunction!(median_split, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(synth_scenario, m)?)?;
    Ok(())
}
