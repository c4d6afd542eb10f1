use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frankenfilter"))
        .args(args)
        .env_remove("FF_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["simulate", "--preset", "D50", "--seed", "1", "--out", dir_arg(&a)]);
    ok(&["simulate", "--preset", "D50", "--seed", "1", "--out", dir_arg(&b)]);
    for f in ["D50.csv", "D50.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert_eq!(json(&a.join("D50.json"))["seed"], 1);
}

#[test]
fn simulate_p30b_transition_estimates_match_reported_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["simulate", "--preset", "P30b", "--estimate-pt", "--out", dir_arg(tmp.path())]);
    let rows = stdout.lines().skip_while(|l| *l != "interval,p_hat").skip(1);
    let ps: Vec<f64> = rows
        .take_while(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ps.len(), 30);
    let mean = ps.iter().sum::<f64>() / 30.0;
    assert!(mean > 0.04 && mean < 0.16, "mean p {mean}");
}

#[test]
fn simulate_lv20_has_twenty_rows_and_two_columns() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["simulate", "--preset", "LV20", "--out", dir_arg(tmp.path())]);
    let text = fs::read_to_string(tmp.path().join("LV20.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,y1,y2");
    assert_eq!(lines.len(), 21);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
}

#[test]
fn simulate_explicit_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dir_arg(tmp.path());
    ok(&[
        "simulate", "--model", "lv", "--theta", "0.5,0.0025,0.3", "--x0", "50,50", "--dt", "2", "--t-max", "10",
        "--observed", "0", "--name", "prey", "--out", out,
    ]);
    let text = fs::read_to_string(tmp.path().join("prey.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("time,y1"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(json(&tmp.path().join("prey.json"))["F"], serde_json::json!([[1], [0]]));
    let bad = run(&["simulate", "--model", "lv", "--theta", "0.5", "--x0", "50,50", "--dt", "1", "--t-max", "2", "--out", out]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn filter_writes_ordered_replicates_and_footer() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |d: &Path| {
        vec![
            "filter".to_string(),
            "--preset".into(),
            "D10".into(),
            "--filter".into(),
            "ff".into(),
            "--s".into(),
            "10".into(),
            "--m-plus".into(),
            "200".into(),
            "--replicates".into(),
            "50".into(),
            "--seed".into(),
            "4".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let a_args = args(&a);
    ok(&a_args.iter().map(String::as_str).collect::<Vec<_>>());
    let b_args = args(&b);
    let out = Command::new(env!("CARGO_BIN_EXE_frankenfilter"))
        .args(&b_args)
        .env("FF_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(a.join("replicates.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(b.join("replicates.csv")).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("replicate,log_p_hat,total_simulations,m_1,"));
    assert!(lines[0].ends_with(",k_10"));
    for (i, l) in lines[1..51].iter().enumerate() {
        assert!(l.starts_with(&format!("{i},")));
    }
    let footer: Vec<&str> = lines[51..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(footer, ["# mean_p_hat", "# log_mean_p_hat", "# relative_variance", "# zero_fraction"]);
    let summary = json(&a.join("filter_summary.json"));
    assert_eq!(summary["replicates"], 50);
    assert_eq!(summary["estimator"], "FF(s=10, m+=200)");
}

#[test]
fn bootstrap_with_one_particle_on_impossible_data_is_always_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("rise.csv");
    fs::write(&csv, "time,y1\n1,90\n2,95\n").unwrap();
    fs::write(
        tmp.path().join("rise.json"),
        r#"{"model": "death", "theta_true": [0.01], "x0": [100], "F": [[1]], "seed": 0}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "filter", "--data", csv.to_str().unwrap(), "--filter", "bspf", "--n-particles", "1", "--replicates", "20",
        "--out", dir_arg(&out),
    ]);
    assert_eq!(json(&out.join("filter_summary.json"))["zero_fraction"], 1.0);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dir_arg(tmp.path());
    let bridge = run(&["filter", "--preset", "D10", "--filter", "ff", "--s", "5", "--proposal", "bridge", "--out", out]);
    assert_eq!(bridge.status.code(), Some(2));
    let low_s = run(&["filter", "--preset", "D10", "--filter", "ff", "--s", "1", "--out", out]);
    assert_eq!(low_s.status.code(), Some(2));
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"dataset": {"preset": "D10"}, "theta": [0.1, 0.2], "filter": {"kind": "bspf", "n_particles": 5}}"#).unwrap();
    let dim = run(&["filter", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(dim.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&dim.stderr).contains("theta has length 2"));
}

#[test]
fn config_file_drives_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"model": "death", "dataset": {{"preset": "D10"}}, "filter": {{"kind": "apf", "s_target": 5, "m_plus": 50}}, "seed": 9, "output": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    ok(&["filter", "--config", cfg.to_str().unwrap(), "--replicates", "10"]);
    let summary = json(&out.join("filter_summary.json"));
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["estimator"], "APF(s=5, m+=50)");
}

#[test]
fn tune_exact_obs_recommends_two_plus_t() {
    let tmp = tempfile::tempdir().unwrap();
    let v = std::f64::consts::E - 1.0;
    let stdout = ok(&["tune", "--preset", "D50", "--v-rel", &v.to_string(), "--out", dir_arg(tmp.path())]);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["s_recommended"], 52);
    assert_eq!(report["kappa"], 10.0);
    assert_eq!(report["method"], "exact-obs");
    assert_eq!(report["per_interval_p_estimates"].as_array().unwrap().len(), 50);
    assert_eq!(json(&tmp.path().join("tuning.json")), report);
}

#[test]
fn tune_partial_obs_on_complete_data_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "tune", "--preset", "D10", "--method", "partial-obs", "--vrel-replicates", "2", "--smoothing", "2", "--out",
        dir_arg(tmp.path()),
    ]);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["s_recommended"], 17);
    assert_eq!(report["method"], "partial-obs");
}

#[test]
fn pmmh_writes_trace_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dir_arg(tmp.path());
    ok(&[
        "pmmh", "--preset", "D50", "--filter", "direct", "--iterations", "4000", "--pilot-iterations", "500",
        "--seed", "2", "--out", out,
    ]);
    let trace = fs::read_to_string(tmp.path().join("chain.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,theta,log_lik,accepted,cost"));
    assert_eq!(trace.lines().count(), 4001);
    let s = json(&tmp.path().join("summary.json"));
    for key in [
        "posterior_mean", "posterior_sd", "ess", "multivariate_ess", "cpu_seconds", "ess_per_sec", "acceptance_rate",
        "mean_over_truth",
    ] {
        assert!(!s[key].is_null(), "missing {key}");
    }
    let ratio = s["mean_over_truth"][0].as_f64().unwrap();
    assert!(ratio > 0.8 && ratio < 1.4, "posterior mean / truth = {ratio}");

    let again = tempfile::tempdir().unwrap();
    ok(&[
        "pmmh", "--preset", "D50", "--filter", "direct", "--iterations", "4000", "--pilot-iterations", "500",
        "--seed", "2", "--out", dir_arg(again.path()),
    ]);
    assert_eq!(trace, fs::read_to_string(again.path().join("chain.csv")).unwrap());
}

#[test]
fn dead_estimator_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "pmmh", "--preset", "D50", "--filter", "bspf", "--n-particles", "1", "--theta0", "5", "--iterations", "10",
        "--out", dir_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_grids() {
    let stdout = ok(&["verify"]);
    assert!(stdout.contains("0 failures"));
    let stdout = ok(&["verify", "--include", "alg1"]);
    assert!(stdout.contains("XFAIL unbiasedness Alg1"));
    assert!(!stdout.lines().any(|l| l.starts_with("FAIL")));
    let stdout = ok(&["verify", "--grid", "empty"]);
    assert!(stdout.contains("total 0: 0 passed"));
}
