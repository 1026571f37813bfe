mod common;

use approx::assert_abs_diff_eq;
use invlab::intrinsic::*;
use invlab::scenario::fingerprint_diff;
use invlab::simulator::simulate;
use invlab::{Error, Verdict};

fn zero_run(sc: &invlab::Scenario) -> invlab::Trajectory {
    let z = zero_policy_variant(sc).unwrap();
    simulate(&z, z.default_policy(), &z.initial_state, z.numerics.horizon, z.numerics.dt).unwrap()
}

#[test]
fn r3_drift_toy_leaves_phi_at_two() {
    let sc = common::load("drift_toy");
    let c = check_r3_invariance(&zero_run(&sc), &sc.partition, sc.phi.as_ref().unwrap()).unwrap();
    assert!(c.failed());
    let t = c.evidence["phi_exit"]["t"].as_f64().unwrap();
    assert_abs_diff_eq!(t, 2.0, epsilon = 1e-6);
}

#[test]
fn r3_constant_internal_state_passes() {
    let sc = common::load_with("drift_toy", &[("endogenous.h.rate", "[0.0]")]);
    let c = check_r3_invariance(&zero_run(&sc), &sc.partition, sc.phi.as_ref().unwrap()).unwrap();
    assert!(c.passed());
}

#[test]
fn r3_inward_then_through() {
    // x_int(t) = 0.1 - 0.05 t leaves the ball of radius 0.2 at t = 6
    let edits = [("endogenous.h.rate", "[-0.05]"), ("initial_state", "[0.0, 0.1]"), ("numerics.horizon", "4.0")];
    let sc = common::load_with("drift_toy", &edits);
    let phi = sc.phi.clone().unwrap();
    assert!(check_r3_invariance(&zero_run(&sc), &sc.partition, &phi).unwrap().passed());
    let long = sc.with_horizon(10.0);
    let c = check_r3_invariance(&zero_run(&long), &long.partition, &phi).unwrap();
    assert!(c.failed());
    assert_abs_diff_eq!(c.evidence["phi_exit"]["t"].as_f64().unwrap(), 6.0, epsilon = 1e-6);
}

#[test]
fn r3_rejects_controlled_runs() {
    let sc = common::load("r1d");
    let p = sc.policy("restoring-optimal").unwrap();
    let traj = simulate(&sc, p, &sc.initial_state, 0.1, 1e-3).unwrap();
    let phi = PhiPredicate::custom("any", std::sync::Arc::new(|_| true));
    let err = check_r3_invariance(&traj, &sc.partition, &phi).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn r2_examples() {
    let sc = common::load("drift_toy");
    let phi = sc.phi.as_ref().unwrap();
    assert!(check_r2_genesis(&sc.initial_state, &sc.partition, phi).unwrap().passed());
    let off = nalgebra::DVector::from_vec(vec![0.0, 0.3]);
    assert!(check_r2_genesis(&off, &sc.partition, phi).unwrap().failed());
    let edge = nalgebra::DVector::from_vec(vec![0.0, 0.2]);
    assert!(check_r2_genesis(&edge, &sc.partition, phi).unwrap().passed());
}

#[test]
fn r1_examples() {
    assert!(check_r1_no_external(&common::load("contraction")).unwrap().passed());
    assert!(check_r1_no_external(&common::load("external_dependent")).unwrap().failed());
    let still = common::load_with("drift_toy", &[("endogenous.h.rate", "[0.0]")]);
    assert!(check_r1_no_external(&still).unwrap().passed());
}

#[test]
fn r1_rerun_differs_only_in_policy() {
    let sc = common::load("r1d");
    let z = zero_policy_variant(&sc).unwrap();
    assert_eq!(fingerprint_diff(&sc, &z), vec!["policy"]);
}

#[test]
fn r4_examples() {
    let c = check_r4_scaling(&common::load("contraction"), &[0.0, 1.0, 10.0]).unwrap();
    assert!(c.passed());
    let c = check_r4_scaling(&common::load("r4_scaling"), &[0.5, 2.0]).unwrap();
    assert!(c.failed());
    assert_eq!(c.evidence["first_failing_level"].as_f64(), Some(2.0));
    let err = check_r4_scaling(&common::load("contraction"), &[1.0, 1.0]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn audit_reports_every_requirement() {
    let certs = requirements_audit(&common::load("drift_toy")).unwrap();
    let labels: Vec<String> = certs.iter().map(|c| c.label()).collect();
    assert_eq!(labels, ["R1", "R1 [classification]", "R2", "R3", "R4"]);
    let certs = requirements_audit(&common::load("r4_scaling")).unwrap();
    assert!(certs.iter().any(|c| c.verdict == Verdict::NotCheckable));
}

#[test]
fn classification_from_file() {
    let sc = common::load("external_dependent");
    let c = classify_strategy(sc.strategy.as_ref().unwrap());
    assert_eq!(c.class, StrategyClass::ExternallyEnforced);
    assert!(c.mismatch);
}
