use std::process::{Command, Output};

use serde_json::Value;

fn psml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psml")).args(args).env_remove("PSML_SEED").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Rows of a CSV output as (header, records).
fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(out);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    (header, lines.map(|l| l.split(',').map(str::to_owned).collect()).collect())
}

fn field(header: &[String], row: &[String], name: &str) -> String {
    row[header.iter().position(|h| h == name).unwrap()].clone()
}

fn structured(args: &[&str]) -> Value {
    let out = psml(&[args, &["--format", "structured"]].concat());
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn phi_example() {
    let (h, rows) = csv_rows(&psml(&["analytic", "phi", "--eps", "200", "--n", "20", "--beta", "0.01"]));
    let phi: f64 = field(&h, &rows[0], "phi").parse().unwrap();
    let oracle = (1.0 - 0.99f64.powi(200)).powi(19);
    assert!((phi - oracle).abs() < 1e-6, "{phi} vs {oracle}");
    assert!((phi - 0.0649).abs() < 2e-4);
}

#[test]
fn inflection_and_pr_examples() {
    let (h, rows) = csv_rows(&psml(&["analytic", "inflection", "--n", "2", "--beta", "0.5"]));
    assert_eq!(field(&h, &rows[0], "eps_p1"), "0");
    assert_eq!(field(&h, &rows[0], "eps_p2"), "0");
    let v = structured(&["analytic", "pr", "--eps-mon", "50", "--eps-app", "50", "--n", "10", "--beta", "0.1"]);
    assert_eq!(v["rows"][0]["precision"], 1.0);
    assert_eq!(v["rows"][0]["recall"], 1.0);
}

#[test]
fn simulate_tiny_example() {
    let (h, rows) =
        csv_rows(&psml(&["simulate", "--n", "2", "--beta", "1", "--alpha", "0", "--horizon", "10", "--eps", "5"]));
    assert!(!rows.is_empty());
    for row in &rows {
        assert!(field(&h, row, "y").parse::<u64>().unwrap() > 0);
        assert_eq!(field(&h, row, "fpr"), "0");
    }
}

#[test]
fn tune_examples() {
    let v = structured(&["tune", "--eps-app", "100", "--n", "20", "--beta", "0.05", "--eta", "1"]);
    let row = &v["rows"][0];
    assert!((row["eps_mon_lo"].as_f64().unwrap() - 100.0).abs() < 1e-6);
    assert!((row["eps_mon_hi"].as_f64().unwrap() - 100.0).abs() < 1e-6);

    let v = structured(&["tune", "--eps-app", "2000", "--n", "20", "--beta", "0.05", "--eta", "0.95"]);
    assert_eq!(v["rows"][0]["unbounded_hi"], 1);
    assert_eq!(v["rows"][0]["verdict"], "insensitive");

    let v = structured(&["tune", "--eps-app", "0", "--n", "20", "--beta", "0.05", "--eta", "0.9"]);
    assert_eq!(v["rows"][0]["verdict"], "hypersensitive");
}

#[test]
fn invalid_input_exits_2_with_one_line() {
    for args in [
        &["analytic", "phi", "--eps", "10", "--n", "1", "--beta", "0.1"][..],
        &["analytic", "phi", "--n", "5", "--beta", "0.1"],
        &["simulate", "--beta", "1.5"],
        &["simulate", "--n", "x"],
        &["sweep", "--preset", "fig-hlc"],
        &["analytic", "pr", "--eps-mon", "5", "--eps-app", "5", "--n", "4", "--beta", "0"],
    ] {
        let out = psml(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(psml(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn flag_beats_file_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# tiny run\nn = 3\nbeta=0.2\nhorizon = 500\nseed = 4\nreplicates = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = structured(&["simulate", "--config", cfg, "--beta", "0.3"]);
    assert_eq!(v["config"]["n"], "3");
    assert_eq!(v["config"]["beta"], "0.3");
    assert_eq!(v["config"]["horizon"], "500");
    assert_eq!(v["config"]["delta"], "10");
    assert_eq!(v["rows"][0]["seed"], 4);

    std::fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let out = psml(&["simulate", "--config", dir.path().join("bad.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_env_is_a_default() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_psml"));
        cmd.args(["simulate", "--n", "3", "--horizon", "300", "--replicates", "1", "--format", "structured"])
            .args(extra);
        match env {
            Some(s) => cmd.env("PSML_SEED", s),
            None => cmd.env_remove("PSML_SEED"),
        };
        let v: Value = serde_json::from_slice(&cmd.output().unwrap().stdout).unwrap();
        v["rows"][0]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, &[]), 0);
    assert_eq!(run(Some("17"), &[]), 17);
    assert_eq!(run(Some("17"), &["--seed", "5"]), 5);
}

#[test]
fn seed_changes_output() {
    let a = stdout(&psml(&["trace", "export", "--n", "3", "--horizon", "100", "--seed", "1"]));
    let b = stdout(&psml(&["trace", "export", "--n", "3", "--horizon", "100", "--seed", "2"]));
    assert_ne!(a, b);
    assert!(a.lines().all(|l| l.starts_with("kind=")));
}

#[test]
fn out_file_is_written_whole_or_not_at_all() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.csv");
    let out =
        psml(&["analytic", "phi", "--eps", "10,20", "--n", "5", "--beta", "0.1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "temporary file left behind");

    let missing = dir.path().join("no/such/dir/x.csv");
    let out =
        psml(&["analytic", "phi", "--eps", "10", "--n", "5", "--beta", "0.1", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!missing.exists());
}

#[test]
fn help_states_units() {
    let help = stdout(&psml(&["simulate", "--help"]));
    for flag in [
        "--n",
        "--eps-app",
        "--eps-mon",
        "--delta",
        "--alpha",
        "--beta",
        "--ell",
        "--interval-geom",
        "--horizon",
        "--seed",
        "--replicates",
        "--warmup",
        "--eta",
        "--p ",
        "--preset",
        "--out",
        "--jobs",
        "--format",
        "--config",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    assert!(help.contains("in ticks"));
    assert!(help.contains("in [0, 1]"));
}

#[test]
fn csv_echoes_config_on_stderr() {
    let out = psml(&["analytic", "phase", "--n", "10", "--beta", "0.1"]);
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(err.contains("# eta=0.95"));
    let (h, rows) = csv_rows(&out);
    assert_eq!(h.last().unwrap(), "unbounded_hi_from");
    assert_eq!(rows.len(), 1);
}

#[test]
fn partial_example() {
    let (h, rows) = csv_rows(&psml(&["partial", "--n", "5", "--p", "2"]));
    let fraction: f64 = field(&h, &rows[0], "fraction").parse().unwrap();
    assert!((fraction - 0.79).abs() <= 0.08, "{fraction}");
}
