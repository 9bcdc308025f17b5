use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn npbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npbandit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_traces_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let res = npbandit(&[
        "run", "--scenario", "B", "--policy", "nonparametric", "--horizon", "30", "--reps", "3",
        "--seed", "11", "--out", path_str(&out),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("cumulative pseudo-regret"));

    let traces = fs::read_to_string(&out).unwrap();
    let agg = fs::read_to_string(dir.path().join("a.agg.csv")).unwrap();
    assert!(traces.contains("rep,t,arm,reward,realized_regret,pseudo_regret,cum_realized,cum_pseudo,sweeps_run"));
    assert_eq!(traces.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 30);
    assert_eq!(agg.lines().filter(|l| !l.starts_with('#')).count(), 1 + 30);
    assert!(agg.contains("# base_seed: 11"));
}

#[test]
fn defaults_are_recorded_in_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let res = npbandit(&["run", "--scenario", "A", "--horizon", "5", "--reps", "1", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    let agg = fs::read_to_string(dir.path().join("d.agg.csv")).unwrap();
    assert!(agg.contains("\"discount\":0.0"));
    assert!(agg.contains("\"concentration\":0.1"));
    assert!(agg.contains("\"max_iters\":10"));
    assert!(agg.contains("\"epsilon\":0.01"));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, par) in [(&a, "1"), (&b, "3")] {
        let res = npbandit(&[
            "run", "--scenario", "C", "--horizon", "20", "--reps", "4", "--parallelism", par,
            "--out", path_str(p),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
    }
    assert_eq!(
        fs::read(dir.path().join("a.agg.csv")).unwrap(),
        fs::read(dir.path().join("b.agg.csv")).unwrap()
    );
}

#[test]
fn unknown_scenario_exits_one_and_lists_names() {
    let res = npbandit(&["run", "--scenario", "Z"]);
    assert_eq!(res.status.code(), Some(1));
    let err = stderr(&res);
    for name in ["A", "B", "C", "linear_gaussian", "C_misspec_pair"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn malformed_flags_exit_one() {
    for args in [
        &["run", "--horizon", "abc"][..],
        &["run", "--bogus"],
        &["run", "--policy", "nope"],
        &["frobnicate"],
    ] {
        let res = npbandit(args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(stderr(&res).contains("Usage") || stderr(&res).contains("usage"), "{args:?}");
    }
}

#[test]
fn invalid_values_exit_one() {
    for args in [
        &["run", "--gamma", "-1"][..],
        &["run", "--discount", "1.5"],
        &["run", "--horizon", "0"],
        &["run", "--gibbs-max", "0"],
    ] {
        let res = npbandit(args);
        assert_eq!(res.status.code(), Some(1), "{args:?}: {}", stderr(&res));
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert!(npbandit(&["--help"]).status.success());
    assert!(npbandit(&["run", "--help"]).status.success());
    let v = npbandit(&["--version"]);
    assert!(v.status.success());
    assert!(stdout(&v).contains("npbandit"));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("a.csv");
    let res = npbandit(&["run", "--horizon", "3", "--reps", "1", "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"scenario": "A", "policy": {"kind": "linear_gaussian"}, "horizon": 7, "replications": 2, "base_seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("c.csv");
    let res = npbandit(&["run", "--config", path_str(&cfg), "--horizon", "4", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    let agg = fs::read_to_string(dir.path().join("c.agg.csv")).unwrap();
    assert!(agg.contains("# horizon: 4"));
    assert!(agg.contains("\"kind\":\"linear_gaussian\""));
    assert!(agg.contains("# base_seed: 3"));
}

#[test]
fn oracle_defaults_to_true_component_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let res = npbandit(&["run", "--scenario", "B", "--policy", "oracle", "--horizon", "5", "--reps", "1", "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    let agg = fs::read_to_string(dir.path().join("o.agg.csv")).unwrap();
    assert!(agg.contains("\"components\":[1,2,3]"), "{agg}");
}

#[test]
fn replay_reports_ctr() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    fs::write(&log, "context_0,context_1,arm,reward\n0.1,0.2,0,1\n0.3,0.4,0,0\n0.5,0.6,0,1\n").unwrap();
    let res = npbandit(&["replay", "--log-file", path_str(&log), "--policy", "linear"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let json: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(json["accepted_count"], 3);
    assert!((json["ctr"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn replay_with_nothing_accepted_reports_null_ctr() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    fs::write(&log, "context_0,arm,reward\n").unwrap();
    let res = npbandit(&["replay", "--log-file", path_str(&log), "--arms", "2"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let json: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert!(json["ctr"].is_null());
    assert_eq!(json["accepted_count"], 0);
}

#[test]
fn replay_rejects_malformed_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.csv");
    fs::write(&log, "context_0,arm,reward\n0.1,7,1\n").unwrap();
    let res = npbandit(&["replay", "--log-file", path_str(&log), "--arms", "2"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("line"));
}

#[test]
fn aggregate_combines_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let whole = dir.path().join("whole.csv");
    let res = npbandit(&["run", "--scenario", "A", "--horizon", "10", "--reps", "2", "--out", path_str(&whole)]);
    assert!(res.status.success(), "{}", stderr(&res));

    let merged = dir.path().join("merged.agg.csv");
    let res = npbandit(&["aggregate", "--inputs", path_str(&whole), "--out", path_str(&merged)]);
    assert!(res.status.success(), "{}", stderr(&res));

    let body = |p: &Path| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    };
    assert_eq!(body(&merged), body(&dir.path().join("whole.agg.csv")));
}
