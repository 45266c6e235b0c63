use std::fs;
use std::process::{Command, Output};

fn covertime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covertime"))
        .args(args)
        .env_remove("COVERTIME_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn estimate_json_is_reproducible() {
    let args = [
        "estimate",
        "--gen",
        "complete:16",
        "--seed",
        "7",
        "--format",
        "json",
        "--samples",
        "300",
        "--reps",
        "30",
    ];
    let a = covertime(&args);
    let b = covertime(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["graph"]["n"], 16);
    for key in [
        "gaussian",
        "gamma2",
        "pseudoroot",
        "sketch",
        "matthews_upper",
        "simulated",
    ] {
        assert!(!json["estimates"][key].is_null(), "missing {key}");
    }
    assert_eq!(json["durations_ms"], serde_json::json!({}));
    for key in ["graph", "estimates", "ratios", "seeds", "durations_ms"] {
        assert!(json[key].is_object(), "{key} is not an object");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let with_flag = covertime(&[
        "gff-sample",
        "--gen",
        "path:4",
        "--seed",
        "99",
        "--format",
        "csv",
    ]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_covertime"))
        .args(["gff-sample", "--gen", "path:4", "--format", "csv"])
        .env("COVERTIME_SEED", "99")
        .output()
        .unwrap();
    let default = covertime(&["gff-sample", "--gen", "path:4", "--format", "csv"]);
    assert_eq!(with_flag.stdout, with_env.stdout);
    assert_ne!(with_flag.stdout, default.stdout);
    assert_eq!(
        default.stdout,
        covertime(&["gff-sample", "--gen", "path:4", "--format", "csv"]).stdout
    );
}

#[test]
fn self_loop_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.edges");
    fs::write(&path, "0 1\n1 2\n2 2 1.5\n").unwrap();
    let out = covertime(&["estimate", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("self-loop at vertex 2"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbage.edges");
    fs::write(&path, "0 1 notanumber\n").unwrap();
    assert_eq!(
        covertime(&["info", "--input", path.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        covertime(&["info", "--gen", "blob:3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        covertime(&["info", "--input", "/nonexistent/file"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(covertime(&["info"]).status.code(), Some(2));
}

#[test]
fn disconnected_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.edges");
    fs::write(&path, "a b\nc d\n").unwrap();
    let out = covertime(&["info", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("disconnected"));
}

#[test]
fn numerical_failure_exits_four() {
    // One-row sketches cannot keep every pair of K_16 inside [1, 2].
    let out = covertime(&[
        "verify",
        "sketch",
        "--gen",
        "complete:16",
        "--rows",
        "1",
        "--attempts",
        "1",
        "--max-growths",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("sketch validation failed"));
}

#[test]
fn invalid_parameters_exit_three() {
    let out = covertime(&[
        "simulate",
        "--gen",
        "path:3",
        "--rule",
        "blanket-strong",
        "--delta",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = covertime(&["resistance", "--gen", "path:3", "--pair", "0,9"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_check_exits_one() {
    // A single escape replica cannot be within 3 standard errors of 3/4.
    let out = covertime(&["verify", "escape", "--gen", "complete:3", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("false"));
}

#[test]
fn verify_checks_pass_and_report() {
    for args in [
        vec!["verify", "foster", "--gen", "er:20,0.3,1"],
        vec!["verify", "commute", "--gen", "grid:4"],
        vec![
            "verify",
            "starmesh",
            "--gen",
            "er:20,0.3,1",
            "--vertex",
            "5",
        ],
        vec!["verify", "sketch", "--gen", "complete:32"],
        vec!["verify", "escape", "--gen", "complete:3", "--reps", "20000"],
        vec!["verify", "isometry", "--gen", "cycle:6"],
        vec![
            "verify",
            "rayknight",
            "--gen",
            "path:4",
            "--t",
            "1.0",
            "--reps",
            "50000",
        ],
    ] {
        let out = covertime(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).contains("true"));
    }
}

#[test]
fn verify_table_formats() {
    let out = covertime(&["verify", "foster", "--gen", "cycle:5", "--format", "csv"]);
    let text = stdout(&out);
    assert!(text.starts_with("check,statistic,threshold,pass\nfoster_residual,"));
    let out = covertime(&["verify", "foster", "--gen", "cycle:5", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows[0]["pass"], true);
}

#[test]
fn gamma2_certificate_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let out = covertime(&[
        "gamma2",
        "--gen",
        "path:6",
        "--certificate",
        cert.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["value"].as_f64().unwrap() > 0.0);
    assert!(summary["exact"].as_f64().unwrap() > 0.0);
    let tree: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert!(tree["nodes"].as_array().unwrap().len() > 1);
    assert!(tree["nodes"][0]["parent"].is_null());
}

#[test]
fn gamma2_from_metric_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "0,1,1\n1,0,1\n1,1,0\n").unwrap();
    let out = covertime(&[
        "gamma2",
        "--metric",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exact"], 1.0);
    fs::write(&path, "0,1\n1,0,2\n").unwrap();
    let out = covertime(&["gamma2", "--metric", path.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn simulate_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = covertime(&[
        "simulate",
        "--gen",
        "cycle:6",
        "--rule",
        "cover",
        "--reps",
        "50",
        "--start",
        "0",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("cover_and_return"));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("jump,vertex,holding\n0,0,"));
}

#[test]
fn resistance_pairs_and_text_rounding() {
    let out = covertime(&[
        "resistance",
        "--gen",
        "path:4",
        "--pair",
        "0,3",
        "--pair",
        "1,2",
        "--format",
        "csv",
    ]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,v,r_eff,commute"));
    for (line, want) in lines.zip([(0, 3, 3.0, 18.0), (1, 2, 1.0, 6.0)]) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(
            (f[0].parse().unwrap(), f[1].parse().unwrap()),
            (want.0, want.1)
        );
        assert!((f[2].parse::<f64>().unwrap() - want.2).abs() < 1e-12);
        assert!((f[3].parse::<f64>().unwrap() - want.3).abs() < 1e-12);
    }
    let out = covertime(&["resistance", "--gen", "complete:3", "--pair", "0,1"]);
    assert!(stdout(&out).contains("0.666667"), "{}", stdout(&out));
}

#[test]
fn info_and_asymptotics() {
    let out = covertime(&["info", "--gen", "grid:3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 9);
    assert_eq!(v["edges"], 12);
    let out = covertime(&[
        "asymptotics",
        "--family",
        "complete",
        "--sizes",
        "16,32",
        "--samples",
        "300",
        "--reps",
        "20",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
}

#[test]
fn threads_flag_keeps_results() {
    let a = covertime(&[
        "simulate", "--gen", "cycle:8", "--reps", "40", "--format", "csv",
    ]);
    let b = covertime(&[
        "simulate",
        "--gen",
        "cycle:8",
        "--reps",
        "40",
        "--format",
        "csv",
        "--threads",
        "3",
    ]);
    assert_eq!(a.stdout, b.stdout);
}
