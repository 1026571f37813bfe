mod common;

use std::process::Command;

fn invlab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_invlab"))
        .args(args)
        .env_remove("INVLAB_SEED")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn path(name: &str) -> String {
    common::scenario_path(name).display().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(invlab(&["certify", &path("r1d"), "--checks", "a2"]).0, 0);
    let (code, out) = invlab(&["harness", &path("r1d_subcritical")]);
    assert_eq!(code, 2);
    assert!(out.contains("not instantiated (A2 fails)"), "{out}");
    assert!(out.contains("subcritical regime; Theorem 1 not instantiated"));
    assert_eq!(invlab(&["simulate", "missing.scenario"]).0, 3);
    assert_eq!(invlab(&["certify", &path("r1d"), "--checks", "a9"]).0, 3);
    assert_eq!(invlab(&["bogus"]).0, 3);
}

#[test]
fn harness_narrative() {
    let (code, out) = invlab(&["harness", &path("r1d")]);
    assert_eq!(code, 0);
    assert!(out.contains("externally enforced class fails on this instance; premises certified numerically"));
}

#[test]
fn threshold_prints_values() {
    let (code, out) = invlab(&["threshold", &path("r1d")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("kappa* = 1.0000"));
    assert!(out.contains("T_kappa = 0.1000"));
}

#[test]
fn simulate_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let rep = dir.path().join("r.json");
    let args = [
        "simulate",
        &path("r1d"),
        "--policy",
        "zero",
        "--out",
        csv.to_str().unwrap(),
        "--json",
        "--report",
        rep.to_str().unwrap(),
    ];
    assert_eq!(invlab(&args).0, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x_0,kappa,u_0,g\n"));
    assert!(text.lines().last().unwrap().starts_with("# event,"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(json["certificates"][0]["verdict"], "fail");
}

#[test]
fn seed_flag_and_env() {
    let (_, a) = invlab(&["certify", &path("disk2d"), "--checks", "h1", "--seed", "5", "--json"]);
    let out = Command::new(env!("CARGO_BIN_EXE_invlab"))
        .args(["certify", &path("disk2d"), "--checks", "h1", "--json"])
        .env("INVLAB_SEED", "5")
        .output()
        .unwrap();
    let b = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 5);
}

#[test]
fn sweep_over_rate() {
    let (code, out) = invlab(&["sweep", &path("r1d"), "--param", "capability.rate", "--values", "0.05,10"]);
    assert_eq!(code, 2);
    assert!(out.contains("capability.rate=0.05"));
    assert!(out.contains("horizon below T_kappa"));
}

#[test]
fn requirements_exit_codes() {
    assert_eq!(invlab(&["requirements", &path("contraction")]).0, 0);
    assert_eq!(invlab(&["requirements", &path("external_dependent")]).0, 2);
}
