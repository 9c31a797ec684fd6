#![allow(dead_code)]

use std::path::{Path, PathBuf};

use recovery_core::pipeline::{Inputs, PipelineConfig};
use recovery_core::synth::{
    city_scenario, generate, CityParams, Scenario, ScenarioFile, ScenarioSpec, ADJACENCY_FILE, ATTRIBUTES_FILE,
    OVERLAPS_FILE, TRANSACTIONS_FILE, TRIPS_FILE,
};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn city(seed: u64, rows: usize, cols: usize, noise: f64, horizon_days: u32) -> ScenarioSpec {
    let text = format!(r#"{{"city": {{"seed": {seed}, "rows": {rows}, "cols": {cols}, "noise": {noise}, "horizon_days": {horizon_days}}}}}"#);
    let file: ScenarioFile = serde_json::from_str(&text).expect("city params parse");
    match file {
        ScenarioFile::City { city } => city_scenario(&city).expect("city builds"),
        ScenarioFile::Explicit(_) => unreachable!("city form"),
    }
}

pub fn city_params(seed: u64, rows: usize, cols: usize) -> CityParams {
    match serde_json::from_str(&format!(r#"{{"city": {{"seed": {seed}, "rows": {rows}, "cols": {cols}}}}}"#)).unwrap() {
        ScenarioFile::City { city } => city,
        ScenarioFile::Explicit(_) => unreachable!(),
    }
}

/// Writes the scenario tables into `dir` and returns a default config over
/// them, with outputs in `dir/out`.
pub fn materialize(spec: &ScenarioSpec, dir: &Path) -> (Scenario, PipelineConfig) {
    let scenario = generate(spec).expect("scenario generates");
    scenario.write_dir(dir).expect("scenario writes");
    let mut config = PipelineConfig::with_inputs(Inputs {
        trips: dir.join(TRIPS_FILE),
        transactions: dir.join(TRANSACTIONS_FILE),
        overlaps: dir.join(OVERLAPS_FILE),
        adjacency: dir.join(ADJACENCY_FILE),
        attributes: dir.join(ATTRIBUTES_FILE),
        taxonomy: None,
    });
    config.event_date = spec.event_date;
    config.horizon_days = spec.horizon_days;
    config.output_dir = dir.join("out");
    (scenario, config)
}

/// Generates the golden scenario into `dir` and loads the golden config
/// against it.
pub fn golden_inputs(dir: &Path) -> (Scenario, PipelineConfig) {
    let spec = ScenarioFile::load(&golden_dir().join("scenario.json")).unwrap().into_spec().unwrap();
    let scenario = generate(&spec).unwrap();
    scenario.write_dir(dir).unwrap();
    let text = std::fs::read_to_string(golden_dir().join("config.json")).unwrap();
    let config = PipelineConfig::from_json(&text, dir).unwrap();
    (scenario, config)
}
