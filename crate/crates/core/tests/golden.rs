//! The committed golden bundle. Inputs are regenerated from
//! `golden/scenario.json`; outputs must match `golden/expected/` byte for
//! byte. Set `UPDATE_GOLDEN=1` to rewrite the expected files.

mod common;

use recovery_core::milestones::read_milestones_csv;
use recovery_core::pipeline;

#[test]
fn golden_bundle_matches() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, config) = common::golden_inputs(dir.path());
    pipeline::run(&config, None).unwrap();

    // Frozen outputs only make sense if they agree with the planted truth.
    let table = read_milestones_csv(&config.output_dir.join(pipeline::MILESTONES_FILE)).unwrap();
    for ((region, m), cell) in &scenario.ground_truth.cells {
        let got = table.get(region, *m).unwrap();
        assert_eq!((got.duration_days, got.censored), (cell.duration_days, cell.censored), "{region} {m:?}");
    }

    let expected_dir = common::golden_dir().join("expected");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1");
    let names = [
        pipeline::MILESTONES_FILE,
        pipeline::METRIC_FILE,
        pipeline::STATS_FILE,
        pipeline::LORENZ_FILE,
        pipeline::COVERAGE_FILE,
    ];
    for name in names {
        let got = std::fs::read(config.output_dir.join(name)).unwrap();
        let path = expected_dir.join(name);
        if update {
            std::fs::create_dir_all(&expected_dir).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
        assert!(got == want, "{name} differs from the golden copy");
    }
}
