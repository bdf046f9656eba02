//! Command-line behaviour: outputs, determinism, manifests and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use npfusion::bounds::poisson_right_tail;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_npfusion");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn scenario_report_json() {
    let v: Value = serde_json::from_str(&stdout_ok(&["scenario", "--preset", "paper-sec6", "--format", "json"])).unwrap();
    assert!((v["J_counts"].as_f64().unwrap() - 2559.74).abs() < 0.01);
    assert!((v["B_counts"].as_f64().unwrap() - 258.06).abs() < 0.01);
    assert_eq!(v["per_sensor"].as_array().unwrap().len(), 10);
    let checks = v["reference_checks"].as_array().unwrap();
    let d = checks.iter().find(|c| c["name"] == "D_minus_1").unwrap();
    assert_eq!(d["consistent"], false);
}

#[test]
fn scenario_from_config_without_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quiet.toml");
    std::fs::write(
        &path,
        "background = [3.0, 4.0]\nsource_kind = \"radiation\"\nspacing = 5.0\nsource_x0 = -2.0\n\
         source_offset = 0.5\nsource_speed = 3.0\nsource_strength = 0.0\n",
    )
    .unwrap();
    let v: Value = serde_json::from_str(&stdout_ok(&[
        "scenario",
        "--config",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]))
    .unwrap();
    assert_eq!(v["J_counts"].as_f64().unwrap(), 0.0);
    assert!((v["T_s"].as_f64().unwrap() - 3.0).abs() < 1e-15);
    assert!(v["reference_checks"].as_array().unwrap().is_empty());
}

#[test]
fn bounds_table() {
    let csv = stdout_ok(&["bounds", "--preset", "paper-sec6", "--gamma", "0.1718"]);
    assert_eq!(
        csv.lines().next().unwrap(),
        "k,gamma,count_threshold_C,count_threshold_D,detection_lower,false_alarm_upper"
    );
    assert_eq!(csv_column(&csv, "count_threshold_D"), vec!["338"]);
    let fa: f64 = csv_column(&csv, "false_alarm_upper")[0].parse().unwrap();
    assert!((fa / 8.5e-7) < 2.0 && (fa / 8.5e-7) > 0.5);

    let tiny = stdout_ok(&["bounds", "--preset", "paper-sec6", "--gamma", "1e-300"]);
    let n: u64 = csv_column(&tiny, "count_threshold_D")[0].parse().unwrap();
    let fa: f64 = csv_column(&tiny, "false_alarm_upper")[0].parse().unwrap();
    assert_eq!(fa, poisson_right_tail(4387.0 / 17.0, n).unwrap());

    let by_alpha = stdout_ok(&["bounds", "--preset", "paper-sec6", "--alpha", "1e-6"]);
    assert_eq!(csv_column(&by_alpha, "count_threshold_D"), vec!["339"]);
}

#[test]
fn sweep_modes() {
    let fixed = stdout_ok(&["bounds", "--gamma", "0.1718", "--sweep-k", "2:10"]);
    let k: Vec<String> = csv_column(&fixed, "k");
    assert_eq!(k, (2..=10).map(|i| i.to_string()).collect::<Vec<_>>());
    let recomputed = stdout_ok(&["bounds", "--gamma", "0.1718", "--sweep-k", "2:10", "--sweep-recompute"]);
    assert_ne!(fixed, recomputed);
    assert_eq!(run(&["bounds", "--gamma", "0.1718", "--sweep-k", "2:11"]).status.code(), Some(2));
}

#[test]
fn calibrate_commands() {
    let bound = stdout_ok(&["calibrate", "--preset", "paper-sec6", "--alpha", "1e-6", "--method", "bound"]);
    assert_eq!(csv_column(&bound, "count_threshold"), vec!["339"]);
    let mc = stdout_ok(&[
        "calibrate", "--preset", "toy-inhomogeneous", "--alpha", "0.5", "--method", "mc", "--trials", "2000",
    ]);
    assert_eq!(csv_column(&mc, "reliable"), vec!["true"]);
    let pfa: f64 = csv_column(&mc, "empirical_pfa")[0].parse().unwrap();
    assert!(pfa <= 0.5 && pfa > 0.3);
    let warned = run(&["calibrate", "--preset", "toy-single", "--alpha", "1e-6", "--method", "mc", "--trials", "1000"]);
    assert!(warned.status.success());
    assert!(String::from_utf8_lossy(&warned.stderr).contains("unreliable"));
}

#[test]
fn simulate_is_deterministic_and_calibrated() {
    let args = ["simulate", "--preset", "toy-constant", "--log-gamma", "0.5", "--trials", "300", "--seed", "17"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 601);

    // toy: three sensors, β = 5, ν = 1, T = 1; log L = −3 + N log 1.2 with N ~ Poisson(15)
    let n_star = (0u64..).find(|&n| poisson_right_tail(15.0, n).unwrap() <= 0.05).unwrap();
    let exact = poisson_right_tail(15.0, n_star).unwrap();
    let log_gamma = -3.0 + n_star as f64 * 0.2f64.ln_1p() - 1e-9;
    let lg = log_gamma.to_string();
    let out = run(&[
        "simulate", "--preset", "toy-constant", "--hypothesis", "h0", "--log-gamma", &lg, "--trials", "100000",
    ]);
    assert!(out.status.success());
    let decisions = csv_column(&String::from_utf8(out.stdout).unwrap(), "decision");
    let pfa = decisions.iter().filter(|d| *d == "H1").count() as f64 / 1e5;
    assert!((pfa - exact).abs() <= 3.0 * (exact * (1.0 - exact) / 1e5).sqrt(), "{pfa} vs {exact}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("pfa_hat"));
}

#[test]
fn simulate_over_tcp_matches_channel() {
    let base = ["simulate", "--preset", "toy-constant", "--gamma", "1", "--trials", "20"];
    let chan = stdout_ok(&base);
    let mut tcp_args = base.to_vec();
    tcp_args.extend(["--transport", "tcp"]);
    assert_eq!(chan, stdout_ok(&tcp_args));
}

#[test]
fn roc_columns_are_monotone() {
    let csv = stdout_ok(&["roc", "--preset", "toy-constant", "--grid=-4:3:21", "--trials", "3000"]);
    for col in ["pfa", "pd"] {
        let v: Vec<f64> = csv_column(&csv, col).iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(v.len(), 21);
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{col}: {v:?}");
    }
    let json = stdout_ok(&["roc", "--preset", "toy-constant", "--grid=-4:3:5", "--trials", "100", "--format", "json"]);
    for line in json.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["pfa"].is_number() && v["pd"].is_number());
    }
}

#[test]
fn output_file_gets_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let p = path.to_str().unwrap();
    stdout_ok(&["simulate", "--preset", "toy-single", "--gamma", "1", "--trials", "50", "--seed", "9", "--out", p]);
    let body = std::fs::read(&path).unwrap();
    let manifest = std::fs::read_to_string(format!("{p}.manifest")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
    let m: Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["trials"], 50);
    assert_eq!(m["source"], "preset:toy-single");
    let digest = m["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert_eq!(Path::new(m["outputs"][0]["path"].as_str().unwrap()), path.as_path());

    let again = dir.path().join("again.csv");
    stdout_ok(&["simulate", "--preset", "toy-single", "--gamma", "1", "--trials", "50", "--seed", "9", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&again).unwrap(), body);
    let m2: Value = serde_json::from_str(&std::fs::read_to_string(format!("{}.manifest", again.display())).unwrap()).unwrap();
    assert_eq!(m2["outputs"][0]["sha256"], m["outputs"][0]["sha256"]);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["simulate", "--gamma", "1", "--trials", "0"]), Some(2));
    assert_eq!(code(&["bounds", "--gamma=-1"]), Some(2));
    assert_eq!(code(&["bounds", "--gamma", "0.1718", "--alpha", "0.1"]), Some(2));
    assert_eq!(code(&["bounds"]), Some(2));
    assert_eq!(code(&["calibrate", "--alpha", "1.5"]), Some(2));
    assert_eq!(code(&["scenario", "--config", "/definitely/not/here.toml"]), Some(2));
    assert_eq!(code(&["scenario", "--preset", "unknown"]), Some(2));
    assert_eq!(code(&["roc", "--grid", "1:0:3"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "background = [1.0]\nsource_kind = \"constant\"\nunknown_key = 3\n").unwrap();
    assert_eq!(code(&["scenario", "--config", bad.to_str().unwrap()]), Some(2));

    // a table whose declared rates go negative is a model error at run time
    let neg = dir.path().join("neg.toml");
    std::fs::write(
        &neg,
        "background = [1.0]\nhorizon = 1.0\nsource_kind = \"tabulated\"\nsource_times = [0.0, 1.0]\nsource_table = [[1.0, -1.0]]\n",
    )
    .unwrap();
    let out = run(&["scenario", "--config", neg.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
}
