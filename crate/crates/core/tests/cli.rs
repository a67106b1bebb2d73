mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use mfl::model::{check_feasible, Instance, Solution};
use mfl::stats::StatReport;
use serde_json::Value;

fn mfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfl"))
        .args(args)
        .env("MFL_THREADS", "2")
        .output()
        .expect("run mfl")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_small(out: &Path, seed: &str) -> Output {
    mfl(&[
        "generate", "--levels", "5", "--R", "30", "--D", "8", "--W", "5", "--P", "4", "--S", "4",
        "--density", "medium", "--fixed", "small", "--seed", seed, "--out", path(out),
    ])
}

#[test]
fn generate_then_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(generate_small(&a, "17").status.success());
    assert!(generate_small(&b, "17").status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let inst = Instance::from_json(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(inst.num_levels(), 5);
    assert_eq!(inst.num_retailers(), 30);

    let out_dir = dir.path().join("run");
    let out = mfl(&[
        "solve", "--instance", path(&a), "--variant", "all", "--seed", "3", "--max-local", "4", "--clock", "evals",
        "--out", path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 4);
    for name in ["bvnd", "pvnd", "cvnd", "uvnd"] {
        let result: Value = serde_json::from_str(&fs::read_to_string(out_dir.join(format!("{name}.json"))).unwrap()).unwrap();
        let sol = Solution::from_json(&inst, &result).unwrap();
        assert!(check_feasible(&inst, &sol).is_empty());
        assert_eq!(sol.objective(), result["objective"].as_f64().unwrap());
        let trace = fs::read_to_string(out_dir.join(format!("{name}.trace.csv"))).unwrap();
        assert!(trace.starts_with("elapsed_s,objective"));
        let last: f64 = trace.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(last, sol.objective());
    }

    // same seed, evaluation clock: identical summaries
    let again = mfl(&[
        "solve", "--instance", path(&a), "--seed", "3", "--max-local", "4", "--clock", "evals",
    ]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn single_node_instance_solves_to_485() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t1.json");
    fs::write(&file, serde_json::to_string(&t1_data()).unwrap()).unwrap();
    let out = mfl(&["solve", "--instance", path(&file), "--variant", "uvnd", "--max-local", "2"]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary[0]["objective"].as_f64(), Some(485.0));
    assert_eq!(summary[0]["variant"], "uvnd");
}

#[test]
fn stats_on_identical_columns_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("same.csv");
    let mut text = String::from("problem_id,A_ofv,B_ofv,C_ofv\n");
    for i in 0..8 {
        let v = 100 + i * 7;
        text.push_str(&format!("p{i},{v},{v},{v}\n"));
    }
    fs::write(&csv, text).unwrap();
    let out_dir = dir.path().join("stats");
    let out = mfl(&["stats", "--input", path(&csv), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = StatReport::from_json(&fs::read_to_string(out_dir.join("stats-ofv.json")).unwrap()).unwrap();
    assert_eq!(report.friedman_chi2, 0.0);
    assert_eq!(report.friedman_p, 1.0);
    assert_eq!(report.labels, ["A", "B", "C"]);
    assert_eq!(report.row_ids.len(), 8);
    assert!(out_dir.join("stats-ofv.txt").exists());
}

#[test]
fn stats_json_round_trips_on_published_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfl(&[
        "stats", "--input", path(&data_file("table2.csv")), "--measure", "time", "--out", path(dir.path()),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("stats-time.json")).unwrap();
    let report = StatReport::from_json(&text).unwrap();
    assert_eq!(report.labels, ["BVND", "PVND", "CVND", "UVND"]);
    assert_eq!(report.row_ids.len(), 162);
    let reparsed: Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(reparsed, serde_json::from_str::<Value>(&text).unwrap());
}

#[test]
fn batch_writes_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("batch.csv");
    let out = mfl(&[
        "batch", "--levels", "4", "--R", "20", "--D", "6", "--W", "4", "--P", "3", "--density", "high",
        "--fixed", "small", "--replicates", "2", "--max-local", "2", "--clock", "evals", "--seed", "9",
        "--out", path(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("20-6-4-3-Hdens-SmFx-1,"));
    assert!(lines[2].starts_with("20-6-4-3-Hdens-SmFx-2,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // bad arguments
    assert_eq!(mfl(&["generate", "--levels", "6"]).status.code(), Some(2));
    assert_eq!(mfl(&["solve"]).status.code(), Some(2));
    // malformed instance
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{\"num_levels\": 4}").unwrap();
    assert_eq!(mfl(&["solve", "--instance", path(&junk)]).status.code(), Some(2));
    // missing file
    let missing = dir.path().join("nope.json");
    assert_eq!(mfl(&["solve", "--instance", path(&missing)]).status.code(), Some(4));
    // bounds leave no feasible assignment
    let infeasible = dir.path().join("infeasible.json");
    fs::write(&infeasible, serde_json::to_string(&infeasible_data()).unwrap()).unwrap();
    let out = mfl(&["solve", "--instance", path(&infeasible), "--variant", "bvnd", "--max-local", "1"]);
    assert_eq!(out.status.code(), Some(3));
    // bad thread cap
    let out = Command::new(env!("CARGO_BIN_EXE_mfl"))
        .args(["stats", "--input", path(&data_file("table1.csv"))])
        .env("MFL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
