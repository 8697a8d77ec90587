use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khintchine")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", path(&fixture("haar.json"))]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["valid"], true);

    let bad = run(&["validate", path(&fixture("mean_violation.json"))]);
    assert_eq!(code(&bad), 1);
    let report = json(&bad);
    assert_eq!(report["violations"][0]["kind"], "mean-zero");
    assert_eq!(report["violations"][0]["cell"], 0);
    assert!(stderr(&bad).contains("cell 0"));

    let malformed = run(&["validate", path(&fixture("bad_rational.json"))]);
    assert_eq!(code(&malformed), 2);
    assert_eq!(code(&run(&["validate", "/nonexistent/system.json"])), 2);
}

#[test]
fn unknown_flags_are_parse_errors() {
    assert_eq!(code(&run(&["validate", "--bogus"])), 2);
    assert_eq!(code(&run(&["verify", "c9"])), 2);
}

#[test]
fn norms_of_haar() {
    let o = run(&["norms", path(&fixture("haar.json")), "--p", "4"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["summary"]["sup_cww_sq"], "2/1");
    assert_eq!(v["khintchine_bound"]["sharp"]["holds"], true);
    let csv = run(&["norms", path(&fixture("haar.json")), "--format", "csv"]);
    assert!(stdout(&csv).starts_with("p,n,atoms,"));
}

#[test]
fn verify_suites() {
    let o = run(&["verify", "c1", "--p", "4", "--trials", "1000", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1000);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["trial"], i);
        assert_eq!(l["holds"], true);
        for key in ["suite", "p", "n", "seed", "lhs", "rhs", "slack"] {
            assert!(l.get(key).is_some(), "{key}");
        }
    }

    let o = run(&["verify", "c3", "--trials", "1000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = run(&["verify", "c1", "--p", "2.5"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("p >= 3"));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "ot2", "--trials", "40", "--seed", "11", "--format", "csv"];
    let a = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&run(&args)));
    assert!(stdout(&a).starts_with("suite,p,n,seed,trial,lambda,"));
}

#[test]
fn transform_r1_on_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r1.json");
    let o = run(&["transform", "r1", path(&fixture("thirds.json")), "--k", "1", "--p", "4", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&o);
    assert_eq!(report["cww_pointwise_relation"], "equal");
    assert!(report["pnorm_delta"].as_f64().unwrap() > 0.0);
    let v = run(&["validate", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0);
}

#[test]
fn transform_rademacherize_haar() {
    let o = run(&["transform", "rademacherize", path(&fixture("haar.json")), "--p", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["report"]["after"]["rademacher_level"], 1);
    assert_eq!(v["system"]["n"], 2);
}

#[test]
fn transform_preconditions() {
    let o = run(&["transform", "r2", path(&fixture("thirds.json")), "--k", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("IP"));

    let o = run(&["transform", "r1", path(&fixture("thirds.json"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--k"));

    let o = run(&["transform", "rademacherize", path(&fixture("thirds.json")), "--p", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dyadic"));
}

#[test]
fn constants_converge() {
    let o = run(&["constants", "--p", "4", "--n", "10", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,n,rademacher_pnorm,khintchine_constant"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 10);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!(values[9] < 1.316074 && 1.316074 - values[9] < 0.03);
    assert_eq!(code(&run(&["constants"])), 1);
}

#[test]
fn scan_flags_two_and_a_half() {
    let o = run(&["scan", "--p-min", "2.0", "--p-max", "3.0", "--step", "0.05", "--n-max", "6"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let flags = v["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| (f["p"].as_f64().unwrap() - 2.5).abs() < 1e-9 && f["n"] == 3));
    assert!(flags.iter().all(|f| f["p"].as_f64().unwrap() < 3.0));
}

#[test]
fn search_p4_n2() {
    let o = run(&["search", "--p", "4", "--n", "2", "--budget", "20000"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["best_value"].as_f64().unwrap() - 1.1892).abs() < 1e-4);
    assert_eq!(v["within_ceiling"], true);
    assert_eq!(code(&run(&["search", "--method", "simplex"])), 2);
}

#[test]
fn lemmas_hold() {
    let o = run(&["lemmas", "l6", "--trials", "100", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().skip(1).all(|l| l.contains(",true,")));
    assert_eq!(code(&run(&["lemmas", "l5"])), 2);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("constants.json");
    let o = run(&["constants", "--p", "3", "--n", "4", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}
