mod common;

use approx::assert_abs_diff_eq;
use invlab::channels::ControlChannel;
use invlab::fixtures::{disk_2d, golden_1d};
use invlab::pipeline::{certify_a1, certify_h1, certify_h2, run_certify, Check};
use invlab::policies::restoring_optimal_control;
use invlab::state_model::CapabilitySchedule;
use invlab::supercritical::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_rate() -> CapabilitySchedule {
    CapabilitySchedule::linear(0.0, 1.0)
}

#[test]
fn threshold_is_authority_plus_drift() {
    for (u, m) in [(1.0, 0.0), (2.0, 0.5)] {
        for sc in [golden_1d(u, m, unit_rate()).unwrap(), disk_2d(u, m, unit_rate()).unwrap()] {
            let a = analyze_supercritical(&sc).unwrap();
            let th = a.threshold.unwrap();
            assert_abs_diff_eq!(th.kappa_star, u + m, epsilon = 1e-6);
            assert_abs_diff_eq!(th.t_kappa.unwrap(), th.kappa_star, epsilon = 1e-9);
            assert!(th.margin_monotone_on_bracket);
        }
    }
}

#[test]
fn threshold_errors() {
    let sc = golden_1d(1.0, 0.0, unit_rate()).unwrap();
    let db = sc.drift_bound().unwrap();
    let samples = sc.gamma_samples().unwrap();
    assert!(matches!(find_kappa_star(&sc, &db, &samples, [2.0, 5.0]), Err(invlab::Error::Bracket(_))));
    assert!(matches!(find_kappa_star(&sc, &db, &samples, [0.0, 0.5]), Err(invlab::Error::Bracket(_))));
}

#[test]
fn regimes() {
    let never = golden_1d(1.0, 0.0, CapabilitySchedule::constant(0.5)).unwrap();
    assert!(matches!(analyze_supercritical(&never).unwrap().regime, Regime::NeverReached));
    let late = golden_1d(1.0, 0.0, CapabilitySchedule::linear(0.0, 0.1)).unwrap();
    match analyze_supercritical(&late).unwrap().regime {
        Regime::HorizonBelowThreshold { t_kappa } => assert_abs_diff_eq!(t_kappa, 10.0, epsilon = 1e-5),
        r => panic!("{r:?}"),
    }
}

#[test]
fn lemma1_golden_margin() {
    let sc = golden_1d(1.0, 0.0, CapabilitySchedule::constant(1.5)).unwrap();
    let a = analyze_supercritical(&sc).unwrap();
    assert!(a.a2.passed());
    let grid = a.lemma1_time_grid(&sc).unwrap();
    let l1 = lemma1_certificate(&sc, &a.drift_bound, &a.a2, &a.gamma_samples, &grid).unwrap();
    assert!(l1.passed());
    assert_abs_diff_eq!(l1.evidence["min_outward"].as_f64().unwrap(), 0.5, epsilon = 1e-9);
}

#[test]
fn lemma1_needs_passed_a2() {
    let sc = golden_1d(1.0, 0.0, CapabilitySchedule::constant(0.5)).unwrap();
    let a = analyze_supercritical(&sc).unwrap();
    let err = lemma1_certificate(&sc, &a.drift_bound, &a.a2, &a.gamma_samples, &[0.0]).unwrap_err();
    assert!(matches!(err, invlab::Error::Ordering(_)));
}

#[test]
fn a2_margin_examples() {
    let sc = golden_1d(1.0, 0.0, unit_rate()).unwrap();
    let db = sc.drift_bound().unwrap();
    let x = DVector::from_vec(vec![1.0]);
    let m = a2_margin(&sc, &db, &x, 1.5).unwrap();
    assert_abs_diff_eq!(m.margin, 0.5, epsilon = 1e-12);
    assert!(m.is_consistent());
    assert!(a2_margin(&sc, &db, &x, 1.0).unwrap().margin.abs() < 1e-12);
    let c = certify_a2(&sc, &db, &[1.0], std::slice::from_ref(&x)).unwrap();
    assert!(c.failed());
    let c = certify_a2(&sc, &db, &[1.5, 2.0], &[x]).unwrap();
    assert!(c.passed());
}

#[test]
fn lemma1_dominates_every_admissible_control() {
    let sc = disk_2d(1.0, 0.0, CapabilitySchedule::constant(1.5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for x in sc.gamma_samples().unwrap().iter().take(16) {
        let n = sc.safe_set.outward_normal(x).unwrap();
        let u_star = restoring_optimal_control(&sc.control, &n, 1.0).unwrap();
        let best = outward_components(&sc, x, 0.0, &u_star).unwrap().total;
        for _ in 0..200 {
            let dir = DVector::from_fn(2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let u = dir.normalize() * rng.random::<f64>();
            assert!(outward_components(&sc, x, 0.0, &u).unwrap().total >= best - 1e-12);
        }
    }
}

fn random_admissible(b: &ControlChannel, u_max: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let m = b.control_dim();
    let u = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let norm = b.apply(&u).norm();
    if norm == 0.0 {
        return u;
    }
    u * (u_max * rng.random::<f64>() / norm)
}

#[test]
fn restoring_control_is_extremal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fixtures = [
        DMatrix::identity(2, 2),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1.0, 0.0, 0.3]),
        DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0]),
    ];
    for b in fixtures {
        let n_dim = b.nrows();
        let ch = ControlChannel::new(b).unwrap();
        for _ in 0..5 {
            let n = DVector::from_fn(n_dim, |_, _| rng.random::<f64>() * 2.0 - 1.0).normalize();
            let star = ch.apply(&restoring_optimal_control(&ch, &n, 1.0).unwrap()).dot(&n);
            for _ in 0..1000 {
                let u = random_admissible(&ch, 1.0, &mut rng);
                assert!(ch.apply(&u).dot(&n) >= star - 1e-9);
            }
        }
    }
}

#[test]
fn admissibility_probes_on_fixtures() {
    let sc = common::load("r1d");
    assert!(certify_h1(&sc).unwrap().passed());
    assert!(certify_h2(&sc).unwrap().passed());
    for c in certify_a1(&sc).unwrap() {
        assert!(c.passed(), "{}", c.label());
    }
}

#[test]
fn certify_pipeline_orders_checks() {
    let sc = common::load("r1d");
    let certs = run_certify(&sc, &[Check::Lemma1, Check::A2, Check::H2]).unwrap();
    let labels: Vec<String> = certs.iter().map(|c| c.label()).collect();
    assert_eq!(labels, ["A2", "H2", "Lemma1"]);
    assert!(certs.iter().all(|c| c.passed()));
    let sub = common::load("r1d_subcritical");
    let certs = run_certify(&sub, &[Check::Lemma1]).unwrap();
    assert_eq!(certs[0].verdict, invlab::Verdict::NotCheckable);
}
