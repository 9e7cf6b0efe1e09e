use std::fs;

use vi_kit::harness::{
    example1_spec, example2_spec, run_experiment, DimSpec, Generator, Scale, HISTORY_HEADER,
    TABLE_HEADER,
};
use vi_kit::{load_problem, make_hp_instance};

fn small_spec(out: Option<std::path::PathBuf>) -> vi_kit::harness::ExperimentSpec {
    let mut spec = example2_spec(Scale::Desk, out);
    spec.dims = vec![DimSpec { m: 6, k: Some(5) }];
    spec.seeds = vec![1, 2, 3];
    spec
}

#[test]
fn sweep_writes_instances_histories_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let table = run_experiment(&small_spec(Some(out.clone()))).unwrap();
    assert_eq!(table.rows.len(), 12);
    assert!(table.rows.iter().all(|r| r.converged && r.error.is_none()));
    assert!(table
        .rows
        .iter()
        .all(|r| r.final_x_norm <= 1e-3 && r.final_violation <= 1e-6));

    let inst = load_problem(&out.join("instances/m6_k5_s2.json")).unwrap();
    assert_eq!(inst, make_hp_instance(6, 5, 2).unwrap());

    let csv_text = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(csv_text.lines().next().unwrap(), TABLE_HEADER.join(","));
    assert_eq!(csv_text.lines().count(), 13);

    let hist = fs::read_to_string(out.join("histories/example2-m6-k5-s1-ALG1.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next().unwrap(), HISTORY_HEADER.join(","));
    let row = &table.rows[0];
    assert_eq!(lines.count(), row.iter);
    assert!(out.join("table.json").exists());
}

#[test]
fn sweep_is_deterministic() {
    let mut a = small_spec(None);
    a.threads = Some(1);
    let mut b = small_spec(None);
    b.threads = Some(4);
    let ta = run_experiment(&a).unwrap();
    let tb = run_experiment(&b).unwrap();
    assert!(ta.same_outcomes(&tb));
}

#[test]
fn empty_algorithm_list_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none");
    let mut spec = small_spec(Some(out.clone()));
    spec.algorithms.clear();
    let table = run_experiment(&spec).unwrap();
    assert!(table.rows.is_empty() && table.summary.is_empty());
    assert!(!out.exists());
}

#[test]
fn summary_has_medians_per_algorithm() {
    let table = run_experiment(&small_spec(None)).unwrap();
    assert_eq!(table.summary.len(), 4);
    let alg1 = table.summary_for(6, Some(5), "ALG1").unwrap();
    let mut iters: Vec<usize> = table
        .rows
        .iter()
        .filter(|r| r.algorithm == "ALG1")
        .map(|r| r.iter)
        .collect();
    iters.sort();
    assert_eq!(alg1.median_iter, iters[1] as f64);
    assert_eq!(alg1.runs, 3);
}

#[test]
fn pseudomonotone_generator_sweep() {
    let mut spec = small_spec(None);
    spec.generator = Generator::PseudomonotoneHp;
    spec.algorithms.truncate(1);
    let table = run_experiment(&spec).unwrap();
    assert!(table.rows.iter().all(|r| r.converged), "{:?}", table.rows);
}

#[test]
fn spec_json_round_trip() {
    let spec = example1_spec(None);
    let text = serde_json::to_string(&spec).unwrap();
    let back: vi_kit::harness::ExperimentSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small_spec(None);
    spec.dims = vec![DimSpec { m: 0, k: Some(3) }];
    assert!(run_experiment(&spec).is_err());
    let mut spec = small_spec(None);
    spec.eps = Some(-1.0);
    assert!(run_experiment(&spec).is_err());
}
