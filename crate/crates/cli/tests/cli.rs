//! Runs the binary: pipelines, output shape and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn axyb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axyb"))
        .args(args)
        .current_dir(dir)
        .env_remove("AXYB_CONFIG")
        .output()
        .unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn generate_solve_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = json(&axyb(&["generate", "--scenario", "R-AU", "-n", "100", "--seed", "1", "-o", "d.json"], d));
    assert!(gen["digest"].as_str().unwrap().len() == 64);
    assert!(d.join("d.truth.json").exists());
    let before = std::fs::read(d.join("d.json")).unwrap();

    let est = json(&axyb(&["solve", "--method", "ual-hed", "-i", "d.json"], d));
    assert_eq!(est["estimate"]["method"], "ual-hed");
    assert!(est["input_digest"].is_string() && est["config_digest"].is_string());
    std::fs::write(d.join("e.json"), serde_json::to_vec(&est).unwrap()).unwrap();

    let ev = json(&axyb(&["evaluate", "--estimate", "e.json", "--truth", "d.truth.json", "-i", "d.json"], d));
    for side in ["x", "y"] {
        let t = ev["errors"][side]["err_total"].as_f64().unwrap();
        assert!(t.is_finite() && t < 5.0, "{side}: {t}");
    }
    assert_eq!(ev["residuals"].as_array().unwrap().len(), 5);
    // Reads never touch their inputs.
    assert_eq!(std::fs::read(d.join("d.json")).unwrap(), before);
}

#[test]
fn metric_and_select_work_on_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&axyb(&["generate", "-n", "30", "--seed", "2", "-o", "d.csv"], d));
    let m = json(&axyb(&["metric", "-i", "d.csv"], d));
    assert_eq!(m["report"]["per_pair_metric"].as_array().unwrap().len(), 30);
    let out = axyb(&["select", "-i", "d.csv", "--strategy", "5:14", "-o", "s.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(s["pairs"].as_array().unwrap().len(), 10);
}

#[test]
fn generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = json(&axyb(&["generate", "-n", "20", "--seed", "7", "-o", "a.json"], d));
    let b = json(&axyb(&["generate", "-n", "20", "--seed", "7", "-o", "b.json"], d));
    assert_eq!(a["digest"], b["digest"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn parallel_axis_pairs_exit_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Two pairs rotating about the same axis, consistent with X = Y = I.
    let pose = |c: f64, s: f64, tx: f64| {
        serde_json::json!({ "R": [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], "t": [tx, 0.0, 0.0] })
    };
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let data = serde_json::json!({ "pairs": [
        { "A": pose(1.0, 0.0, 0.0), "B": pose(1.0, 0.0, 0.0) },
        { "A": pose(c, s, 0.1), "B": pose(c, s, 0.1) },
    ]});
    std::fs::write(d.join("p.json"), data.to_string()).unwrap();
    let out = axyb(&["solve", "--method", "dq", "-i", "p.json"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank-deficient motion"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_and_data_errors_have_their_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(axyb(&["solve", "--method", "bogus", "-i", "x.json"], d).status.code(), Some(1));
    assert_eq!(axyb(&["solve", "--method", "dq", "-i", "missing.json"], d).status.code(), Some(1));
    assert_eq!(axyb(&["--help"], d).status.code(), Some(0));
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(axyb(&["solve", "--method", "dq", "-i", "bad.json"], d).status.code(), Some(2));
    json(&axyb(&["generate", "-n", "10", "-o", "d.json"], d));
    let out = axyb(&["--set", "nonsense=1", "solve", "--method", "dq", "-i", "d.json"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides_reach_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&axyb(&["generate", "-n", "30", "--seed", "3", "-o", "d.json"], d));
    std::fs::write(d.join("c.toml"), "alpha = 0.02\nmax_iter = 5000\n").unwrap();
    let plain = json(&axyb(&["--config", "c.toml", "solve", "--method", "l-hed", "-i", "d.json"], d));
    let over = json(&axyb(
        &["--config", "c.toml", "--set", "max_iter=400", "solve", "--method", "l-hed", "-i", "d.json"],
        d,
    ));
    assert_ne!(plain["config_digest"], over["config_digest"]);
    assert!(over["estimate"]["iterations"].as_u64().unwrap() <= 400);
}

#[test]
fn metric_ladder_csv_is_non_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = axyb(&["study", "--kind", "metric-ladder", "--steps", "10", "--seeds", "50"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "mean_metric").unwrap();
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 10);
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
}

#[test]
fn benchmark_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.json"),
        r#"{"scenarios": ["Low"], "methods": ["dq", "kron"], "trials": 3, "n_pairs": 20}"#,
    )
    .unwrap();
    let out = axyb(&["--summary", "benchmark", "--spec", "spec.json", "--csv", "r.csv", "--jobs", "1"], d);
    let v = json(&out);
    assert_eq!(v["records"].as_array().unwrap().len(), 6);
    assert_eq!(v["degraded"], false);
    assert!(!out.stderr.is_empty());
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);
}
