use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::PipelineConfig;
use crate::ingest::{AdjacencyList, RegionAttributes};
use crate::keys::Milestone;
use crate::metric::{MetricTable, RecoveryCategory};
use crate::milestones::MilestoneTable;
use crate::numfmt::{round6, sig6};
use crate::stats::{
    chi_square_2x2, dichotomize_by_median, gini, morans_i, permutation_p_value, LorenzCurve, SpatialWeights,
    StatsError,
};

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round6(x))
    } else {
        Value::Null
    }
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Which regions went where, and why some did not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageReport {
    pub regions_in_crosswalk: usize,
    pub regions_in_table: usize,
    /// Regions with trips but no overlap entry; left out entirely.
    pub missing_from_crosswalk: Vec<String>,
    pub insufficient_baseline: BTreeMap<String, Vec<Milestone>>,
    /// Regions dropped from the milestone table, with the series they lacked.
    pub excluded: BTreeMap<String, Vec<Milestone>>,
    pub unmatched_zips: BTreeMap<String, usize>,
    pub unmatched_transaction_rows: usize,
    pub unknown_codes: BTreeMap<String, usize>,
    pub trips_out_of_window: usize,
    pub transactions_out_of_window: usize,
}

impl CoverageReport {
    pub fn to_json(&self) -> String {
        let names = |ms: &Vec<Milestone>| ms.iter().map(|m| m.as_str()).collect::<Vec<_>>();
        let v = json!({
            "regions_in_crosswalk": self.regions_in_crosswalk,
            "regions_in_table": self.regions_in_table,
            "missing_from_crosswalk": self.missing_from_crosswalk,
            "insufficient_baseline": self.insufficient_baseline.iter().map(|(r, m)| (r.clone(), json!(names(m)))).collect::<Map<_, _>>(),
            "excluded": self.excluded.iter().map(|(r, m)| (r.clone(), json!(names(m)))).collect::<Map<_, _>>(),
            "unmatched_zips": self.unmatched_zips,
            "unmatched_transaction_rows": self.unmatched_transaction_rows,
            "unknown_codes": self.unknown_codes,
            "rows_out_of_window": {
                "trips": self.trips_out_of_window,
                "transactions": self.transactions_out_of_window,
            },
        });
        pretty(&v)
    }
}

/// Results of the exploratory statistics, one entry per test; a test that
/// cannot be computed carries its error instead.
#[derive(Debug, Clone)]
pub struct StatsReport {
    pub regions: usize,
    /// Keyed by milestone name, plus `integrated`.
    pub moran: BTreeMap<String, Value>,
    /// Keyed by covariate.
    pub chi_square: BTreeMap<String, Value>,
    pub gini: Value,
    pub metric: Value,
    pub lorenz: Option<LorenzCurve>,
}

fn error_value(e: &StatsError) -> Value {
    json!({ "error": e.to_string() })
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        let v = json!({
            "regions": self.regions,
            "moran": self.moran,
            "chi_square": self.chi_square,
            "gini": self.gini,
            "metric": self.metric,
        });
        pretty(&v)
    }

    pub fn lorenz_csv(&self) -> String {
        let mut out = String::from("pop_share,metric_share\n");
        if let Some(l) = &self.lorenz {
            for (p, m) in &l.points {
                out.push_str(&format!("{},{}\n", sig6(*p), sig6(*m)));
            }
        }
        out
    }
}

/// Moran's I per milestone and for the integrated metric, chi-square tests
/// of each covariate against the fast/slow split, and the Gini index of the
/// integrated metric.
pub fn compute_stats(
    config: &PipelineConfig,
    milestones: &MilestoneTable,
    metric: &MetricTable,
    adjacency: &AdjacencyList,
    attributes: &[RegionAttributes],
) -> StatsReport {
    let regions: Vec<&str> = metric.rows.keys().map(String::as_str).collect();
    let weights = SpatialWeights::from_adjacency(adjacency, &regions);
    let isolated: Vec<&str> = weights.isolated().iter().map(|&i| regions[i]).collect();
    let integrated = metric.integrated();

    let mut fields: Vec<(String, Vec<f64>)> =
        Milestone::ALL.iter().map(|m| (m.as_str().to_string(), milestones.durations(*m))).collect();
    fields.push(("integrated".to_string(), integrated.clone()));

    let opts = &config.stats;
    let mut moran = BTreeMap::new();
    for (stream, (name, values)) in fields.iter().enumerate() {
        let entry = match morans_i(values, &weights) {
            Ok(r) => {
                let mut obj = json!({
                    "n": r.n,
                    "isolated": isolated,
                    "I": num(r.i),
                    "expected": num(r.expected),
                    "variance": opt(r.variance),
                    "z_score": opt(r.z_score),
                    "p_value": opt(r.p_value),
                });
                if opts.permutations > 0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(stream as u64);
                    obj["permutations"] = json!(opts.permutations);
                    obj["permutation_p_value"] = match permutation_p_value(values, &weights, opts.permutations, &mut rng) {
                        Ok(p) => num(p),
                        Err(e) => error_value(&e),
                    };
                }
                obj
            }
            Err(e) => error_value(&e),
        };
        moran.insert(name.clone(), entry);
    }

    let by_region: BTreeMap<&str, &RegionAttributes> = attributes.iter().map(|a| (a.region.as_str(), a)).collect();
    let covered: Vec<usize> = (0..regions.len()).filter(|&i| by_region.contains_key(regions[i])).collect();
    type Covariate = (&'static str, fn(&RegionAttributes) -> f64);
    let covariates: [Covariate; 3] = [
        ("income", |a| a.per_capita_income),
        ("minority", |a| a.minority_fraction),
        ("flood", |a| a.flood_fraction),
    ];
    let speed: Vec<f64> = covered.iter().map(|&i| integrated[i]).collect();
    let slow = dichotomize_by_median(&speed);
    let mut chi_square = BTreeMap::new();
    for (name, get) in covariates {
        let values: Vec<f64> = covered.iter().map(|&i| get(by_region[regions[i]])).collect();
        let high = dichotomize_by_median(&values);
        let entry = match chi_square_2x2(&high.labels, &slow.labels, opts.yates) {
            Ok(r) => json!({
                "n": covered.len(),
                "statistic": num(r.statistic),
                "dof": r.dof,
                "p_value": num(r.p_value),
                "yates": r.yates,
                "table": r.table,
                "rows": ["low", "high"],
                "columns": ["fast", "slow"],
                "covariate_median": num(high.median),
                "metric_median": num(slow.median),
            }),
            Err(e) => {
                let mut v = error_value(&e);
                v["covariate_degenerate"] = json!(high.degenerate);
                v["metric_degenerate"] = json!(slow.degenerate);
                v
            }
        };
        chi_square.insert(name.to_string(), entry);
    }

    let (gini_value, lorenz) = match gini(&integrated) {
        Ok(l) => (json!({ "value": num(l.gini), "n": integrated.len() }), Some(l)),
        Err(e) => (error_value(&e), None),
    };

    let mut counts: BTreeMap<&str, usize> = [
        RecoveryCategory::Early,
        RecoveryCategory::Mild,
        RecoveryCategory::Late,
        RecoveryCategory::Delayed,
    ]
    .iter()
    .map(|c| (c.as_str(), 0))
    .collect();
    for r in metric.rows.values() {
        *counts.get_mut(r.category.as_str()).expect("all categories listed") += 1;
    }
    let min = integrated.iter().copied().fold(f64::INFINITY, f64::min);
    let max = integrated.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let metric_summary = json!({
        "quartiles": metric.quartiles.iter().map(|q| num(*q)).collect::<Vec<_>>(),
        "categories": counts,
        "min": num(min),
        "max": num(max),
        "regions_without_attributes": regions.len() - covered.len(),
    });

    StatsReport { regions: regions.len(), moran, chi_square, gini: gini_value, metric: metric_summary, lorenz }
}
