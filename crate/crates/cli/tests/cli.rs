use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subfactor")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn band_membership() {
    let o = run(&["band", "--index", "6", "--alpha", "1/3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["in_band"], true);
    assert_eq!(v["index"], "6/1");
    let o = run(&["band", "--index", "6", "--alpha", "1/10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["in_band"], false);
}

#[test]
fn enumerate_lists_rank_multiples() {
    let o = run(&["lambda-enumerate", "--model", "spin:4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"1/2\""));
    assert!(text.contains("\"1/4\""));
}

#[test]
fn hadamard_from_file_and_flip_failure() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("h.json");
    // the 2x2 Hadamard matrix, unnormalized
    std::fs::write(&f, r#"{"dim": 2, "entries": [[1,0],[1,0],[1,0],[-1,0]]}"#).unwrap();
    assert_eq!(run(&["verify-hadamard", path(&f)]).status.code(), Some(0));

    std::fs::write(&f, r#"{"dim": 2, "entries": [[1,0],[1,0],[1,0],[1,0]]}"#).unwrap();
    assert_eq!(run(&["verify-hadamard", path(&f)]).status.code(), Some(1));

    assert_eq!(run(&["verify-biunitary", "--example", "flip"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{ not json").unwrap();
    assert_eq!(run(&["verify-hadamard", path(&f)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["verify-hadamard", path(&missing)]).status.code(), Some(2));
}

#[test]
fn infeasible_sum_exits_one() {
    // 1/2 is not a sum of four projections in any dimension
    let o = run(&["solve-projections", "--r", "4", "--beta", "1/2", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numeric_solve_is_byte_identical_per_seed() {
    let args = ["--seed", "3", "solve-projections", "--r", "4", "--beta", "4/3", "--dim", "3", "--numeric"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn certificate_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = dir.path().join("tuple.json");
    let cert = dir.path().join("cert.json");
    let o = run(&["--out", path(&tuple), "solve-projections", "--r", "4", "--beta", "3/2", "--dim", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(tuple.exists());

    let o = run(&["--out", path(&cert), "certify", "--model", "spin:6", "--stage", "1", "--i", "1", "--base", path(&tuple)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    // α' = (β + i) / (2n) = (3/2 + 1) / 6
    assert_eq!(c["alpha"], "5/12");

    assert_eq!(run(&["certify", "--check", path(&cert)]).status.code(), Some(0));

    // tamper with one projection entry; the re-check must fail
    let mut tampered = c.clone();
    tampered["projections"][0]["entries"][0][0] = serde_json::json!(0.9);
    std::fs::write(&cert, serde_json::to_string(&tampered).unwrap()).unwrap();
    assert_eq!(run(&["certify", "--check", path(&cert)]).status.code(), Some(1));
}
