use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisy-interp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// JSON summary: the last line of stderr when CSV went to stdout.
fn summary(o: &Output) -> Value {
    serde_json::from_str(stderr(o).lines().last().unwrap()).unwrap()
}

#[test]
fn approx_csv_is_byte_identical_across_runs() {
    let args = ["approx", "--n", "3", "--h", "128", "--prime-bits", "64", "--delta-exp", "20", "--d", "12"];
    let args: Vec<&str> = args.iter().copied().chain(["--trials", "2", "--grid", "64", "--seed", "5"]).collect();
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.code().unwrap() <= 1, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# config: "));
    assert!(text.lines().nth(1).unwrap() == "trial,t,t_over_2h,error_over_p");
}

#[test]
fn gen_then_attack_recovers_the_polynomial() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    let inst = inst.to_str().unwrap();
    let g = run(&["gen", "--out", inst, "--seed", "3"]);
    assert!(g.status.success(), "{}", stderr(&g));
    for f in ["instance.cfg", "poly.txt", "observations.csv"] {
        assert!(Path::new(inst).join(f).exists(), "{f} missing");
    }
    let a = run(&["attack", "--instance", inst]);
    assert!(a.status.success(), "{}", stderr(&a));
    let v: Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    assert_eq!(v["matches_truth"], Value::Bool(true));
    assert_eq!(v["verified"], Value::Bool(true));
}

#[test]
fn zero_interval_is_a_config_error() {
    let o = run(&["attack", "--h", "0", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn malformed_observations_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().to_str().unwrap();
    assert!(run(&["gen", "--out", inst, "--seed", "1"]).status.success());
    let path = dir.path().join("observations.csv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("17,not-a-number\n");
    let bad_line = text.lines().count();
    std::fs::write(&path, text).unwrap();
    let o = run(&["attack", "--instance", inst]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("line {bad_line}")), "{}", stderr(&o));
}

#[test]
fn missing_instance_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["attack", "--instance", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn predict_reports_the_crossovers() {
    let o = run(&["predict", "--n", "5", "--h", "32768", "--delta-exp", "17", "--d-max", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(summary(&o)["first_positive_d"], 23);
    let o = run(&["predict", "--n", "26", "--h", "128", "--delta-exp", "33", "--d-max", "200"]);
    assert_eq!(summary(&o)["first_positive_d"], 73);
    let csv = stdout(&o);
    let row = csv.lines().find(|l| l.starts_with("73,")).unwrap();
    assert!(row.contains(",true,"), "{row}");
}

#[test]
fn nfij_counts_squares() {
    // t^2 in {1..100} for t in {1..100}: t = 1..10
    let o = run(&["nfij", "--prime", "10007", "--n", "2", "--poly", "power", "--h", "100", "--target-len", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    assert_eq!(row.split(',').nth(4), Some("10"));
    // K = p covers every residue
    let o = run(&["nfij", "--prime", "101", "--n", "3", "--h", "50", "--target-len", "101"]);
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    assert_eq!(row.split(',').nth(4), Some("50"));
}

#[test]
fn oscillate_identity_holds() {
    let o = run(&["oscillate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&o);
    assert_eq!(s["identity_holds"], Value::Bool(true));
    assert_eq!(s["points"], 201);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 4\nh = 50\n# comment\n").unwrap();
    let o = run(&["nfij", "--config", cfg.to_str().unwrap(), "--h", "30", "--prime", "10007"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.contains("n=4") && first.contains("h=30"), "{first}");
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    assert!(row.starts_with("0,4,30,"), "{row}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    let o = run(&["nfij", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_flag_writes_csv_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub").join("s.csv");
    let o = run(&["predict", "--d-max", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["command"], "predict");
    assert!(std::fs::read_to_string(&out).unwrap().contains("d,s,positive,in_derivation_regime"));
}
