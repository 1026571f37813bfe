//! Certificate builders for the admissibility probes and the check
//! pipelines driven by the command line.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde_json::json;

use crate::certificate::{CheckId, Certificate, Verdict};
use crate::channels::{check_h2_monotone, probe_h1_continuity};
use crate::error::{Error, Result};
use crate::policies::{verify_policy_bound, BoundLayer, Policy, PolicyContext, BOUND_EPS};
use crate::scenario::{linspace, Scenario};
use crate::seed::{stream_rng, Stream};
use crate::simulator::{certify_a3, default_candidates};
use crate::state_model::verify_schedule_monotone;
use crate::supercritical::{analyze_supercritical, find_kappa_star, lemma1_certificate, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    A1,
    A2,
    A3,
    H1,
    H2,
    Lemma1,
}

impl Check {
    pub const ALL: [Check; 6] = [Check::A1, Check::A2, Check::A3, Check::H1, Check::H2, Check::Lemma1];
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a1" => Ok(Check::A1),
            "a2" => Ok(Check::A2),
            "a3" => Ok(Check::A3),
            "h1" => Ok(Check::H1),
            "h2" => Ok(Check::H2),
            "lemma1" => Ok(Check::Lemma1),
            other => Err(Error::Config(format!("unknown check '{other}' (expected a1,a2,a3,h1,h2,lemma1)"))),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::A1 => "a1",
            Check::A2 => "a2",
            Check::A3 => "a3",
            Check::H1 => "h1",
            Check::H2 => "h2",
            Check::Lemma1 => "lemma1",
        })
    }
}

/// Interior samples plus Γ samples: the states the probes are evaluated at.
fn probe_states(sc: &Scenario) -> Result<Vec<DVector<f64>>> {
    let mut rng = stream_rng(sc.numerics.seed, Stream::ProbeSamples);
    let mut states = sc.safe_set.sample_interior(sc.numerics.probe_samples, &mut rng)?;
    states.extend(sc.gamma_samples()?);
    Ok(states)
}

/// Authority bound `‖B·u‖ ≤ u_max` of every suite member on interior samples.
pub fn certify_a1(sc: &Scenario) -> Result<Vec<Certificate>> {
    let mut rng = stream_rng(sc.numerics.seed, Stream::ProbeSamples);
    let states = sc.safe_set.sample_interior(sc.numerics.policy_audit_samples, &mut rng)?;
    let times = linspace(0.0, sc.numerics.horizon, 4);
    let ctx = PolicyContext {
        control: &sc.control,
        safe_set: &sc.safe_set,
    };
    sc.policies
        .iter()
        .map(|p| {
            let check = verify_policy_bound(p, ctx, &states, &times, BoundLayer::Enforced)?;
            let holds = check.max_norm <= p.u_max() + BOUND_EPS;
            let mut c = Certificate::new(
                CheckId::A1,
                if holds { Verdict::Pass } else { Verdict::Fail },
                format!("max |B u| = {:.6e} <= u_max = {} over {} evaluations", check.max_norm, p.u_max(), check.evaluations),
            )
            .with_subject(p.id());
            c.evidence("max_norm", check.max_norm)
                .evidence("evaluations", check.evaluations)
                .evidence("clip_events", check.clip_events);
            c.param("u_max", p.u_max()).param("slack", BOUND_EPS).param("seed", sc.numerics.seed);
            Ok(c)
        })
        .collect()
}

fn kappa_probe_grid(sc: &Scenario) -> Vec<f64> {
    let [lo, hi] = sc.numerics.kappa_bracket;
    linspace(lo, hi, sc.numerics.kappa_grid_points)
}

/// Falsification probe for joint continuity of `h`.
pub fn certify_h1(sc: &Scenario) -> Result<Certificate> {
    let states = probe_states(sc)?;
    let kappas = kappa_probe_grid(sc);
    let probe = probe_h1_continuity(&sc.endogenous, &states, &kappas, sc.numerics.h1_delta)?;
    let flagged = probe.flagged(sc.numerics.h1_flag_ratio);
    let mut c = Certificate::new(
        CheckId::H1,
        if flagged { Verdict::Fail } else { Verdict::Pass },
        if flagged {
            format!("possible discontinuity: variation {:.6e} over a step of {:e}", probe.max_variation, probe.delta)
        } else {
            format!("no discontinuity found (max variation {:.6e} over a step of {:e})", probe.max_variation, probe.delta)
        },
    );
    c.evidence("max_variation", probe.max_variation)
        .evidence("location", json!(probe.location));
    c.param("delta", probe.delta)
        .param("flag_ratio", sc.numerics.h1_flag_ratio)
        .param("samples", states.len())
        .param("kappa_grid", kappas)
        .param("seed", sc.numerics.seed);
    c.caveat("a probe can falsify continuity but cannot prove it");
    Ok(c)
}

/// Monotonicity of `‖h‖` in κ and of the schedule itself.
pub fn certify_h2(sc: &Scenario) -> Result<Certificate> {
    let states = probe_states(sc)?;
    let kappas = kappa_probe_grid(sc);
    let h2 = check_h2_monotone(&sc.endogenous, &states, &kappas)?;
    let schedule = verify_schedule_monotone(&sc.capability, &linspace(0.0, sc.numerics.horizon, 1001))?;
    let pass = h2.holds && schedule.monotone;
    let mut c = Certificate::new(
        CheckId::H2,
        if pass { Verdict::Pass } else { Verdict::Fail },
        match (h2.holds, schedule.monotone) {
            (true, true) => "|h| non-decreasing in kappa and schedule non-decreasing".to_string(),
            (false, _) => format!("|h| decreases in kappa at {:?}", h2.first_violation),
            (true, false) => format!("capability schedule decreases at {:?}", schedule.first_violation),
        },
    );
    c.evidence("h_monotone", h2.holds)
        .evidence("h_first_violation", json!(h2.first_violation))
        .evidence("schedule_monotone", schedule.monotone)
        .evidence("schedule_first_violation", json!(schedule.first_violation));
    c.param("kappa_grid", kappas).param("samples", states.len()).param("seed", sc.numerics.seed);
    c.caveat("monotonicity is checked on a finite grid");
    Ok(c)
}

/// Reachability for one policy, with κ* computed from that policy's bound.
pub fn certify_a3_policy(sc: &Scenario, policy: &Policy) -> Result<Certificate> {
    let scp = sc.with_u_max(policy.u_max());
    let db = scp.drift_bound()?;
    let samples = scp.gamma_samples()?;
    let t_kappa = match find_kappa_star(&scp, &db, &samples, scp.numerics.kappa_bracket) {
        Ok(th) => th.t_kappa,
        Err(Error::Bracket(_)) => None,
        Err(e) => return Err(e),
    };
    let cert = certify_a3(&scp, policy, t_kappa, &default_candidates(sc)?)?;
    let mut c = cert.to_certificate();
    c.param("u_max", policy.u_max()).param("seed", sc.numerics.seed);
    Ok(c)
}

/// Runs the requested checks in a fixed order.
pub fn run_certify(sc: &Scenario, checks: &[Check]) -> Result<Vec<Certificate>> {
    let mut checks = checks.to_vec();
    checks.sort();
    checks.dedup();
    let mut out = vec![];
    let mut analysis = None;
    for check in checks {
        match check {
            Check::A1 => out.extend(certify_a1(sc)?),
            Check::H1 => out.push(certify_h1(sc)?),
            Check::H2 => out.push(certify_h2(sc)?),
            Check::A3 => out.push(certify_a3_policy(sc, sc.default_policy())?),
            Check::A2 | Check::Lemma1 => {
                if analysis.is_none() {
                    analysis = Some(analyze_supercritical(sc)?);
                }
                let a = analysis.as_ref().expect("set above");
                if check == Check::A2 {
                    out.push(a.a2.clone());
                } else if let (true, Some(grid)) = (a.a2.passed(), a.lemma1_time_grid(sc)) {
                    out.push(lemma1_certificate(sc, &a.drift_bound, &a.a2, &a.gamma_samples, &grid)?);
                } else {
                    out.push(Certificate::new(
                        CheckId::Lemma1,
                        Verdict::NotCheckable,
                        "requires a passed A2 certificate",
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// κ*, T_κ and the regime, as a certificate-shaped record.
pub fn threshold_certificate(sc: &Scenario) -> Result<Certificate> {
    let a = analyze_supercritical(sc)?;
    let (verdict, summary) = match (&a.regime, &a.threshold) {
        (Regime::Supercritical { t_kappa }, Some(th)) => (
            Verdict::Pass,
            format!("kappa* = {:.9}, T_kappa = {:.9}", th.kappa_star, t_kappa),
        ),
        (Regime::HorizonBelowThreshold { t_kappa }, Some(th)) => (
            Verdict::Fail,
            format!("kappa* = {:.9}, T_kappa = {:.9} is after the horizon", th.kappa_star, t_kappa),
        ),
        (Regime::NeverReached, Some(th)) => (
            Verdict::Fail,
            format!("kappa* = {:.9} is never reached by the schedule", th.kappa_star),
        ),
        (Regime::NoThreshold(msg), _) => (Verdict::Fail, format!("no threshold: {msg}")),
        _ => unreachable!("threshold is present outside the no-threshold regime"),
    };
    let mut c = Certificate::new(CheckId::A2, verdict, summary).with_subject("threshold");
    c.evidence = a.a2.evidence.clone();
    c.parameters = a.a2.parameters.clone();
    if let Some(th) = &a.threshold {
        c.evidence("kappa_star", th.kappa_star)
            .evidence("iterations", th.iterations);
    }
    Ok(c)
}
