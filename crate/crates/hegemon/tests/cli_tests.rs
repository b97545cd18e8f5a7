//! Exit-code and output checks against the installed binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hegemon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hegemon")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn version_and_help_exit_zero() {
    let v = hegemon(&["--version"]);
    assert!(v.status.success());
    let text = String::from_utf8(v.stdout).unwrap();
    assert!(text.contains("schema 1"), "{text}");
    assert!(hegemon(&["--help"]).status.success());
    assert!(hegemon(&["spne", "--help"]).status.success());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hegemon(&["unknown-command"]).status.code(), Some(1));
    assert_eq!(hegemon(&["spne"]).status.code(), Some(1));
    assert_eq!(hegemon(&["phases", "--n", "13"]).status.code(), Some(1));
}

#[test]
fn domain_errors_exit_one_with_a_message() {
    let out = hegemon(&["spne", "--world", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");

    let out = hegemon(&["thresholds", "--n", "14"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn spne_then_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("spne.json");
    let out = hegemon(&["spne", "--world", &data("three_small.json"), "--out",
        trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let explain = hegemon(&["explain", "--trace", trace.to_str().unwrap()]);
    assert!(explain.status.success());
    let text = String::from_utf8(explain.stdout).unwrap();
    assert!(text.contains("formation at 1/2"), "{text}");
    assert!(text.contains("equilibrium: ell_a=1/2 ell_b=none"), "{text}");
}

#[test]
fn simulate_matches_the_golden_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = hegemon(&[
        "simulate", "--countries", &data("countries.csv"), "--globals", &data("globals.csv"),
        "--mode", "symmetric", "--grid", "100", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["memberships.csv", "summary.csv"] {
        let got = fs::read_to_string(out_dir.join(name)).unwrap();
        let want = fs::read_to_string(Path::new(&data(&format!("golden/symmetric/{name}")))).unwrap();
        assert_eq!(got, want, "{name} drifted");
    }
    assert!(out_dir.join("run_meta.json").exists());
}

#[test]
fn jobs_flag_does_not_change_results(){
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["phases", "--n", "13", "--case", "symmetric", "--g-min", "0.0", "--g-max",
        "0.1", "--g-step", "0.02"];
    let run = |jobs: &str, path: &Path| {
        let mut args: Vec<&str> = base.to_vec();
        let p = path.to_str().unwrap();
        args.extend_from_slice(&["--jobs", jobs, "--out", p]);
        assert!(hegemon(&args).status.success());
        // The meta line echoes jobs and wall time; only the data rows must agree.
        fs::read_to_string(path).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run("1", &a), run("4", &b));
}
