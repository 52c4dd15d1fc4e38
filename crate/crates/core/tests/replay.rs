use std::path::PathBuf;
use std::sync::Arc;

use artkit::conjoint::{
    conjoint_uniform_policy, ingest_replay_dataset, parse_replay_dataset, replay_experiment, replay_experiment_traced,
    ConjointDesign, ConjointStatistic, ReplayDataset, ReplayRow, ReplayScenario, ReplaySchema,
};
use artkit::engine::{run_replications, PowerEstimate, Scenario};
use artkit::{derive_stream, Error, SeedPlan, StreamRole};
use rand::Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fixture16() -> (ReplaySchema, ReplayDataset) {
    let schema = ReplaySchema::load(&fixture("replay16_schema.json")).unwrap();
    let data = ingest_replay_dataset(&fixture("replay16.csv"), &schema).unwrap();
    (schema, data)
}

/// Population with `per_cell` rows in every (X pair, Z pair) cell.
fn population(k: usize, l: usize, per_cell: usize, seed: u64) -> ReplayDataset {
    let mut rng = derive_stream(SeedPlan::new(seed));
    let mut rows = Vec::new();
    for x_arm in 0..k * k {
        for z_arm in 0..l * l {
            for _ in 0..per_cell {
                let y = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
                rows.push(ReplayRow { x_arm, z_arm, y });
            }
        }
    }
    ReplayDataset::from_rows(k, l, rows).unwrap()
}

#[test]
fn fixture_parses_into_one_row_per_pool() {
    let (schema, data) = fixture16();
    assert_eq!((data.k, data.l, data.len()), (2, 2, 16));
    for x in 0..4 {
        for z in 0..4 {
            assert_eq!(data.pool_size(x, z), 1);
        }
    }
    // Left-major pair coding: (Female, Male) is arm 1 * 2 + 0.
    let summary = data.summary(&schema);
    assert_eq!(summary.len(), 16);
    assert!(summary.values().all(|&c| c == 1));
    assert!(summary.contains_key("Female|Male / Dem|Rep"), "{summary:?}");
    let row = data.rows[9];
    assert_eq!((row.x_arm, row.z_arm), (2, 1));
}

#[test]
fn consumption_audit() {
    let data = population(2, 3, 6, 1);
    let policy = conjoint_uniform_policy(2, 3);
    let n = 60;
    let (record, served) = replay_experiment_traced(&data, &policy, n, SeedPlan::new(4)).unwrap();
    assert_eq!(record.n(), n);
    assert_eq!(served.len(), n);
    let mut sorted = served.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), n, "a row was served twice");
    for (t, &row) in served.iter().enumerate() {
        let r = data.rows[row];
        assert_eq!((record.x[t], record.z[t], record.y[t]), (r.x_arm, r.z_arm, r.y), "step {t}");
    }
    // Same seed, same replay; the population itself is untouched.
    let again = replay_experiment(&data, &policy, n, SeedPlan::new(4)).unwrap();
    assert_eq!(again, record);
    assert_eq!(data.pools().total_remaining(), data.len());
}

#[test]
fn exhausted_pool_is_reported() {
    let (_, data) = fixture16();
    let policy = conjoint_uniform_policy(2, 2);
    // Sixteen draws with one row per cell almost surely revisit a cell.
    let err = replay_experiment(&data, &policy, 16, SeedPlan::new(0)).unwrap_err();
    match err {
        Error::EmptyPool { t, x_arm, z_arm } => {
            assert!((2..=16).contains(&t));
            assert!(x_arm < 4 && z_arm < 4);
        }
        other => panic!("expected EmptyPool, got {other}"),
    }
}

#[test]
fn failed_replications_are_counted() {
    let (_, data) = fixture16();
    let scenario = ReplayScenario::new(Arc::new(data), 8, ConjointDesign::Iid, ConjointStatistic::FStat, 9).unwrap();
    let outcomes = run_replications(&scenario, 40, SeedPlan::new(2), Some(1));
    let est = PowerEstimate::from_outcomes(&outcomes, 0.1, scenario.fingerprint());
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    assert!(failed > 0 && failed < 40, "{failed}");
    assert_eq!(est.failures, failed);
    assert_eq!(est.n_mc + est.failures, 40);
    for o in outcomes.iter().filter(|o| o.result.is_err()) {
        assert!(matches!(o.result, Err(Error::EmptyPool { .. })));
    }
}

#[test]
fn non_binary_response_is_rejected_with_line_number() {
    let schema: ReplaySchema = serde_json::from_str(r#"{"x_levels": ["a", "b"], "z_levels": ["c", "d"]}"#).unwrap();
    let text = "y,x_left,x_right,z_left,z_right\n1,a,b,c,d\n2,a,a,c,c\n0,b,q,c,d\n";
    let err = parse_replay_dataset(text.as_bytes(), &schema).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("not binary"), "{err}");
    assert!(err.contains("line 4") && err.contains("\"q\""), "{err}");
}

#[test]
fn schema_renames_columns_and_rejects_unknown_keys() {
    let schema: ReplaySchema = serde_json::from_str(
        r#"{"columns": {"y": "chosen", "x_left": "g1", "x_right": "g2", "z_left": "p1", "z_right": "p2"},
            "x_levels": ["m", "f"], "z_levels": ["d", "r"]}"#,
    )
    .unwrap();
    let text = "chosen,g1,g2,p1,p2\n1,m,f,d,r\n0,f,f,r,r\n";
    let data = parse_replay_dataset(text.as_bytes(), &schema).unwrap();
    assert_eq!(data.len(), 2);
    assert!(serde_json::from_str::<ReplaySchema>(r#"{"x_levels": [], "z_levels": [], "extra": 1}"#).is_err());
    let missing = parse_replay_dataset("y,x_left\n1,m\n".as_bytes(), &schema).unwrap_err();
    assert!(missing.to_string().contains("missing column"), "{missing}");
}

#[test]
fn replay_scenario_is_deterministic_and_tracks_the_dataset() {
    let data = Arc::new(population(2, 2, 10, 3));
    let s = ReplayScenario::new(data.clone(), 50, ConjointDesign::Adaptive { epsilon: 0.5 }, ConjointStatistic::FStat, 19)
        .unwrap();
    let plan = SeedPlan::new(6).child(StreamRole::Replication, 0);
    assert_eq!(s.replicate(plan).unwrap(), s.replicate(plan).unwrap());
    let other = Arc::new(population(2, 2, 10, 4));
    let t = ReplayScenario::new(other, 50, ConjointDesign::Adaptive { epsilon: 0.5 }, ConjointStatistic::FStat, 19)
        .unwrap();
    assert_ne!(s.fingerprint(), t.fingerprint());
    assert!(ReplayScenario::new(data, 500, ConjointDesign::Iid, ConjointStatistic::FStat, 19).is_err());
}
