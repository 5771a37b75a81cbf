use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use debayes::sim::{ScenarioId, SimulationScenario};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    debayes_cli::run(std::iter::once("debayes").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn s1_csv(dir: &Path, n: usize, p: usize, seed: u64) -> PathBuf {
    let path = dir.join("data.csv");
    SimulationScenario::new(ScenarioId::S1, n, p)
        .generate(seed)
        .unwrap()
        .write_csv(&path, "y")
        .unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_s1_recovers_the_large_signal() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 100, 50, 1);
    let out = tmp.path().join("out");
    let code = run(&["analyze", "-i", s(&data), "-o", s(&out), "--draws", "1000", "--seed", "4", "--threads", "2"]);
    assert_eq!(code, 0);
    for f in ["intervals.csv", "intervals.json", "precision.json", "vb_state.json", "manifest.json", "timings.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let rows = read_json(&out.join("intervals.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 50);
    let big = &rows[4];
    assert_eq!(big["name"], "x5");
    let (lo, hi) = (big["lower"].as_f64().unwrap(), big["upper"].as_f64().unwrap());
    assert!(lo > 0.0 && lo < hi, "[{lo}, {hi}]");
    assert!((lo..=hi).contains(&2.0) || (hi - 2.0).abs() < 0.3, "[{lo}, {hi}]");
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["draws"], 1000);
    assert!(Path::new(manifest["input"].as_str().unwrap()).is_absolute());
}

#[test]
fn standardized_intervals_are_on_the_original_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("scaled.csv");
    let d = SimulationScenario::new(ScenarioId::S1, 120, 10).generate(2).unwrap();
    let x = d.design() * 10.0;
    let scaled = debayes::data::Dataset::new(x, d.response().clone()).unwrap();
    scaled.write_csv(&path, "y").unwrap();
    let out = tmp.path().join("out");
    let code = run(&["analyze", "-i", s(&path), "-o", s(&out), "--draws", "2000", "--standardize", "--precision", "direct"]);
    assert_eq!(code, 0);
    assert!(out.join("standardization.json").exists());
    let rows = read_json(&out.join("intervals.json"));
    // x scaled by 10 shrinks the coefficient of the largest signal to 0.2
    let m = rows[4]["mean"].as_f64().unwrap();
    assert!((m - 0.2).abs() < 0.08, "{m}");
}

#[test]
fn horseshoe_prior_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 80, 10, 3);
    let out = tmp.path().join("out");
    let code = run(&[
        "analyze", "-i", s(&data), "-o", s(&out), "--prior", "horseshoe", "--draws", "500", "--burn-in", "500",
        "--write-draws",
    ]);
    assert_eq!(code, 0);
    assert!(!out.join("vb_state.json").exists());
    let raw = fs::read_to_string(out.join("draws_raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 501);
}

#[test]
fn missing_input_is_a_data_error_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let code = run(&["analyze", "-i", s(&tmp.path().join("absent.csv")), "-o", s(&out)]);
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn malformed_csv_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.csv");
    fs::write(&path, "y,x0\n1,2\n3,abc\n").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["analyze", "-i", s(&path), "-o", s(&out)]), 2);
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 60, 8, 5);
    let out = tmp.path().join("out");
    assert_eq!(run(&["analyze", "-i", s(&data), "-o", s(&out), "--draws", "10"]), 1);
    assert_eq!(run(&["analyze", "-i", s(&data), "-o", s(&out), "--level", "1.5"]), 1);
    assert_eq!(run(&["analyze", "-i", s(&data), "-o", s(&out), "--prior", "cauchy"]), 1);
    assert_eq!(run(&["analyze", "-i", s(&data)]), 1);
    assert_eq!(run(&["simulate", "--scenario", "S9", "-o", s(&out)]), 1);
    assert_eq!(run(&["simulate", "--scenario", "S1", "-o", s(&out), "--methods", "frequentist"]), 1);
    assert_eq!(run(&["analyze", "--bogus"]), 1);
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "drawz = 500\n").unwrap();
    assert_eq!(run(&["analyze", "-i", s(&data), "-o", s(&out), "--config", s(&cfg)]), 1);
    assert!(!out.exists());
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 100, 20, 6);
    let first = tmp.path().join("first");
    let code = run(&["analyze", "-i", s(&data), "-o", s(&first), "--draws", "600", "--seed", "9", "--standardize"]);
    assert_eq!(code, 0);
    let again = tmp.path().join("again");
    let code = run(&["analyze", "--config", s(&first.join("manifest.json")), "-o", s(&again)]);
    assert_eq!(code, 0);
    assert_eq!(
        fs::read(first.join("intervals.csv")).unwrap(),
        fs::read(again.join("intervals.csv")).unwrap()
    );
}

#[test]
fn toml_config_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 80, 10, 7);
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("input = {:?}\ndraws = 300\nseed = 5\nlevel = 0.9\n", s(&data))).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["analyze", "--config", s(&cfg), "-o", s(&out), "--seed", "8"]), 0);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["draws"], 300);
    assert_eq!(m["seed"], 8);
    assert_eq!(m["level"], 0.9);
}

fn simulate(out: &Path, threads: &str, extra: &[&str]) -> i32 {
    let mut args = vec![
        "simulate", "--scenario", "s2", "--n", "60", "--p", "12", "--reps", "4", "--draws", "200", "--seed", "17",
        "--threads", threads, "-o", s(out),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_is_deterministic_and_writes_every_format() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(simulate(&a, "1", &[]), 0);
    assert_eq!(simulate(&b, "3", &[]), 0);
    for f in ["report.csv", "report.json", "report.dat", "manifest.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        if f == "manifest.json" {
            let (mut x, mut y): (Value, Value) =
                (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
            for m in [&mut x, &mut y] {
                m.as_object_mut().unwrap().remove("threads");
                m.as_object_mut().unwrap().remove("output");
            }
            assert_eq!(x, y);
        } else {
            assert_eq!(x, y, "{f} differs");
        }
    }
    let csv = fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "method,group,coverage,bias,rmse,replications,level");
    assert_eq!(csv.lines().count(), 1 + 3 * 6);
}

#[test]
fn method_filter_and_single_format() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(simulate(&out, "2", &["--methods", "debiased_lasso", "--formats", "plotdata"]), 0);
    assert!(!out.join("report.csv").exists());
    let dat = fs::read_to_string(out.join("report.dat")).unwrap();
    let headers: Vec<_> = dat.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(headers, ["# debiased_lasso"]);
}

#[test]
fn weights_report_matches_the_beta_marginal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["weights", "--n", "30", "--draws", "4000", "--seed", "2", "--write-weights", "-o", s(&out)]), 0);
    let r = read_json(&out.join("weights.json"));
    assert!(r["ks_p_value"].as_f64().unwrap() > 0.001);
    assert!(r["max_abs_sum_error"].as_f64().unwrap() < 1e-12);
    assert!(r["min_weight"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out.join("weights.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4001);
}

#[test]
fn precision_export() {
    let tmp = tempfile::tempdir().unwrap();
    let data = s1_csv(tmp.path(), 100, 6, 8);
    for method in ["nodewise", "clime", "direct"] {
        let out = tmp.path().join(method);
        assert_eq!(run(&["precision", "-i", s(&data), "-o", s(&out), "--method", method]), 0);
        let theta = fs::read_to_string(out.join("theta.csv")).unwrap();
        assert_eq!(theta.lines().count(), 7);
        let summary = read_json(&out.join("precision.json"));
        assert_eq!(summary["p"], 6);
    }
}

#[test]
fn binary_writes_only_inside_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tempfile::tempdir().unwrap();
    let data = s1_csv(data_dir.path(), 60, 8, 9);
    let status = Command::new(env!("CARGO_BIN_EXE_debayes"))
        .current_dir(tmp.path())
        .args(["analyze", "-i", s(&data), "-o", "results", "--draws", "200"])
        .status()
        .unwrap();
    assert!(status.success());
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, ["results"]);
    let data_entries = fs::read_dir(data_dir.path()).unwrap().count();
    assert_eq!(data_entries, 1);

    let status = Command::new(env!("CARGO_BIN_EXE_debayes"))
        .current_dir(tmp.path())
        .args(["analyze", "-i", "missing.csv", "-o", "other"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!tmp.path().join("other").exists());
}
