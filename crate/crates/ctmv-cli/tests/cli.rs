//! End-to-end tests of the `ctmv` binary: exit codes, artifact layout,
//! atomic output behavior, and byte-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BS_MARKET: &str = r#"{
  "horizon": 1.0,
  "breakpoints": [0.0, 1.0],
  "rate": [0.06],
  "mu": [[0.12]],
  "sigma": [[[0.15]]]
}
"#;

fn write_market(dir: &Path) -> PathBuf {
    let path = dir.join("market.json");
    fs::write(&path, BS_MARKET).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctmv"))
        .args(args)
        .env_remove("MVP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn example_reproduces_the_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["example", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("0.416546"), "{text}");
    assert!(text.contains("0.127497"), "{text}");
    assert!(text.contains("0.170080"), "{text}");
    assert!(text.contains("0.386055"), "{text}");
    assert!(text.contains("0.0789828"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("example.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["premium_tolerance"].as_f64().unwrap(), 1e-3);

    // Closed forms: a second run is byte-identical.
    let rerun_dir = dir.path().join("out2");
    let rerun = run(&["example", "--out", rerun_dir.to_str().unwrap()]);
    assert_eq!(rerun.status.code(), Some(0));
    assert_eq!(
        fs::read(out_dir.join("example.json")).unwrap(),
        fs::read(rerun_dir.join("example.json")).unwrap()
    );
}

#[test]
fn example_honors_a_tightened_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // The four-decimal references differ from the closed forms by more than
    // 1e-6, so the self-check must fail and leave no artifact behind.
    let out = run(&[
        "example",
        "--tolerance",
        "1e-6",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("self-check failed"));
    assert!(!out_dir.join("example.json").exists());
}

#[test]
fn frontier_writes_summary_and_collapses_to_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out_dir = dir.path().join("fr");
    let out = run(&[
        "frontier",
        "--market",
        market.to_str().unwrap(),
        "--z",
        "1.2",
        "--count",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("frontier.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "label,std_return,mean_return,se_std,se_mean,sharpe");
    assert_eq!(lines.len(), 6);
    // The z = 1.2 endpoint reproduces the closed-form minimum std.
    assert!(lines[5].contains("0.33168805765438886"), "{}", lines[5]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("frontier.json")).unwrap()).unwrap();
    assert_eq!(summary["slope"].as_f64().unwrap(), 0.41654636115540644);
    assert_eq!(summary["risk_free_return"].as_f64().unwrap(), 0.06183654654535964);

    // A range collapsed to the risk-free payoff yields a single point.
    let collapsed_dir = dir.path().join("fr1");
    let collapsed = run(&[
        "frontier",
        "--market",
        market.to_str().unwrap(),
        "--z",
        "1.0618365465453596",
        "--out",
        collapsed_dir.to_str().unwrap(),
    ]);
    assert_eq!(collapsed.status.code(), Some(0));
    let csv = fs::read_to_string(collapsed_dir.join("frontier.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert!(lines[1].ends_with(",0,0.06183654654535964,0,0,"), "{csv}");
}

#[test]
fn malformed_market_exits_2_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let market = dir.path().join("broken.json");
    fs::write(&market, "{\"horizon\": 1.0,").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "frontier",
        "--market",
        market.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("malformed market file"));
    assert!(!out_dir.join("frontier.csv").exists());
    assert!(!out_dir.join("frontier.json").exists());
}

#[test]
fn infeasible_market_exits_2_with_the_violated_condition() {
    let dir = tempfile::tempdir().unwrap();
    let market = dir.path().join("flat.json");
    // mu identical to the rate: no excess return anywhere.
    fs::write(
        &market,
        r#"{"horizon": 1.0, "breakpoints": [0.0, 1.0], "rate": [0.06],
            "mu": [[0.06]], "sigma": [[[0.15]]]}"#,
    )
    .unwrap();
    let out = run(&["frontier", "--market", market.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("infeasible market"), "{}", stderr(&out));
}

#[test]
fn simulate_rejects_exact_scheme_for_a_mix() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out = run(&[
        "simulate",
        "--market",
        market.to_str().unwrap(),
        "--mix",
        "1.0",
        "--scheme",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("scheme mismatch"));

    // --z and --mix are mutually exclusive, and one is required.
    let both = run(&[
        "simulate",
        "--market",
        market.to_str().unwrap(),
        "--z",
        "1.2",
        "--mix",
        "1.0",
    ]);
    assert_eq!(both.status.code(), Some(2));
    let neither = run(&["simulate", "--market", market.to_str().unwrap()]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn simulate_agrees_with_the_closed_form_echo() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--market",
        market.to_str().unwrap(),
        "--mix",
        "1.0",
        "--paths",
        "4000",
        "--steps",
        "100",
        "--seed",
        "7",
        "--dump-terminal",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("simulate.json")).unwrap()).unwrap();
    let stats = &report["stats"];
    let closed = &report["closed_form"];
    let mean = stats["mean_return"].as_f64().unwrap();
    let se_mean = stats["se_mean"].as_f64().unwrap();
    assert!((mean - closed["mean_return"].as_f64().unwrap()).abs() <= 3.0 * se_mean);
    assert_eq!(report["config"]["seed"].as_u64().unwrap(), 7);

    let csv = fs::read_to_string(out_dir.join("terminal_wealth.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "terminal_wealth");
    assert_eq!(lines.len(), 4001);
}

#[test]
fn region_contains_the_stock_point() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out_dir = dir.path().join("reg");
    let out = run(&[
        "region",
        "--market",
        market.to_str().unwrap(),
        "--strategies",
        "4",
        "--paths",
        "500",
        "--steps",
        "25",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("region.csv")).unwrap();
    // Single-stock market: the stock point (0.1701, 0.1275) in closed form.
    assert!(
        csv.contains("stock[0],0.17008032763105324,0.12749685157937574,0,0,"),
        "{csv}"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("region.json")).unwrap()).unwrap();
    assert_eq!(summary["separation"]["flags"], serde_json::json!([]));
}

#[test]
fn region_combination_pins_the_risk_free_point() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out_dir = dir.path().join("reg");
    let out = run(&[
        "region",
        "--market",
        market.to_str().unwrap(),
        "--strategies",
        "1",
        "--paths",
        "400",
        "--steps",
        "20",
        "--combine",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("combination.csv")).unwrap();
    // α ≡ 0 deleverages to the bond: exactly (0, R_f) with an empty sharpe.
    assert!(csv.contains("alpha[0],0,0.06183654654535964,0,0,\n"), "{csv}");
    assert!(csv.contains("alpha-threshold"), "{csv}");
    assert!(csv.contains("alpha-switch"), "{csv}");
}

#[test]
fn verify_is_byte_identical_across_reruns_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let run_verify = |out_dir: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_ctmv"))
            .args([
                "verify",
                "--market",
                market.to_str().unwrap(),
                "--paths",
                "2000",
                "--steps",
                "100",
                "--strategies",
                "4",
                "--lemma-grid",
                "25",
                "--draws",
                "500",
                "--seed",
                "4242",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .env_remove("MVP_SEED")
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains("overall: PASS"));
        fs::read(out_dir.join("verify_report.json")).unwrap()
    };
    let a = run_verify(&dir.path().join("v1"), "1");
    let b = run_verify(&dir.path().join("v2"), "4");
    let c = run_verify(&dir.path().join("v3"), "2");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn verify_failure_exits_4_but_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let out_dir = dir.path().join("v");
    // 0.9 is below the risk-free payoff: every per-target check fails.
    let out = run(&[
        "verify",
        "--market",
        market.to_str().unwrap(),
        "--z",
        "0.9",
        "--paths",
        "500",
        "--steps",
        "20",
        "--strategies",
        "4",
        "--lemma-grid",
        "10",
        "--draws",
        "50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stdout(&out).contains("overall: FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
}

#[test]
fn seed_falls_back_to_the_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let market = write_market(dir.path());
    let sim = |out_dir: &Path, seed_args: &[&str], env_seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctmv"));
        cmd.args([
            "simulate",
            "--market",
            market.to_str().unwrap(),
            "--mix",
            "1.0",
            "--paths",
            "200",
            "--steps",
            "20",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .args(seed_args)
        .env_remove("MVP_SEED");
        if let Some(seed) = env_seed {
            cmd.env("MVP_SEED", seed);
        }
        let out = cmd.output().expect("binary runs");
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        fs::read(out_dir.join("simulate.json")).unwrap()
    };
    let flagged = sim(&dir.path().join("a"), &["--seed", "777"], None);
    let from_env = sim(&dir.path().join("b"), &[], Some("777"));
    let default = sim(&dir.path().join("c"), &[], None);
    // Env fallback matches the explicit flag; the flag wins over the env.
    assert_eq!(flagged, from_env);
    assert_ne!(flagged, default);
    let flag_beats_env = sim(&dir.path().join("d"), &["--seed", "777"], Some("123"));
    assert_eq!(flag_beats_env, flagged);
}
