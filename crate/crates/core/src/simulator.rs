//! Fixed-step RK4 integration with the policy in the loop, boundary-exit
//! refinement, reachability search and the impossibility harness.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::{CheckId, Certificate, Verdict, STRICTNESS_EPS};
use crate::channels::total_velocity;
use crate::error::{Error, Result};
use crate::policies::{evaluate_policy, History, Policy, PolicyContext, BOUND_EPS};
use crate::safe_set::{classify_level, Membership, BOUNDARY_BAND};
use crate::scenario::Scenario;
use crate::seed::{stream_rng, Stream};
use crate::supercritical::{
    a2_margin, analyze_supercritical, find_kappa_star, lemma1_certificate, outward_components, Regime,
    SupercriticalAnalysis,
};

/// Time tolerance of crossing refinement.
pub const CROSSING_TIME_TOL: f64 = 1e-9;
const MAX_REFINE_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub kappa: f64,
    /// Control held over the step starting at `t`.
    pub u: Vec<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    BoundaryCrossing,
    GammaContact,
    PhiExit,
    Clip,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BoundaryCrossing => "boundary-crossing",
            EventKind::GammaContact => "gamma-contact",
            EventKind::PhiExit => "phi-exit",
            EventKind::Clip => "clip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::BoundaryCrossing, Self::GammaContact, Self::PhiExit, Self::Clip]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    Exit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub dt: f64,
    pub terminated: Termination,
    pub policy_id: String,
    /// The policy could only output zero control.
    pub zero_policy: bool,
}

impl Trajectory {
    pub fn exit_event(&self) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == EventKind::BoundaryCrossing)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are non-empty")
    }
}

fn rk4_step(sc: &Scenario, x: &DVector<f64>, t: f64, h: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    let rhs = |x: &DVector<f64>, t: f64| -> Result<DVector<f64>> {
        total_velocity(&sc.drift, &sc.control, &sc.endogenous, x, t, u, sc.kappa(t)?)
    };
    let k1 = rhs(x, t)?;
    let k2 = rhs(&(x + &k1 * (h / 2.0)), t + h / 2.0)?;
    let k3 = rhs(&(x + &k2 * (h / 2.0)), t + h / 2.0)?;
    let k4 = rhs(&(x + &k3 * h), t + h)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn context(sc: &Scenario) -> PolicyContext<'_> {
    PolicyContext {
        control: &sc.control,
        safe_set: &sc.safe_set,
    }
}

/// Policy evaluation with the authority bound asserted.
fn controlled(sc: &Scenario, policy: &Policy, t: f64, x: &DVector<f64>, history: &History) -> Result<(DVector<f64>, bool)> {
    let out = evaluate_policy(policy, context(sc), t, x, history.clone())?;
    let norm = sc.control.apply(&out.u).norm();
    if norm > policy.u_max() + BOUND_EPS {
        return Err(Error::BoundViolation {
            norm,
            bound: policy.u_max(),
        });
    }
    Ok((out.u, out.clipped))
}

/// Locates the exit time inside one step by bisection on the step length,
/// re-integrating from the step start with the held control.
fn refine_with_control(
    sc: &Scenario,
    u: &DVector<f64>,
    t1: f64,
    x1: &DVector<f64>,
    t2: f64,
) -> Result<(f64, DVector<f64>)> {
    let g1 = sc.safe_set.level(x1)?;
    let x2 = rk4_step(sc, x1, t1, t2 - t1, u)?;
    let g2 = sc.safe_set.level(&x2)?;
    if !(g1 < 0.0 && g2 > 0.0) {
        return Err(Error::Bracket(format!("no sign change of g: {g1:e} -> {g2:e}")));
    }
    let (mut lo, mut hi) = (0.0_f64, t2 - t1);
    let (mut x_lo, mut g_lo) = (x1.clone(), g1);
    let (mut x_hi, mut g_hi) = (x2, g2);
    for _ in 0..MAX_REFINE_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let xm = rk4_step(sc, x1, t1, mid, u)?;
        let gm = sc.safe_set.level(&xm)?;
        if gm > 0.0 {
            hi = mid;
            x_hi = xm;
            g_hi = gm;
        } else {
            lo = mid;
            x_lo = xm;
            g_lo = gm;
        }
        if hi - lo <= CROSSING_TIME_TOL && g_lo.abs().min(g_hi.abs()) <= BOUNDARY_BAND {
            break;
        }
    }
    if g_hi.abs() <= g_lo.abs() {
        Ok((t1 + hi, x_hi))
    } else {
        Ok((t1 + lo, x_lo))
    }
}

/// Refines a boundary crossing bracketed by `(t1, x1)` with `g < 0` and
/// `(t2, x2)` with `g > 0`; the control is the policy's output at `(t1, x1)`
/// held over the interval.
pub fn refine_crossing(
    sc: &Scenario,
    policy: &Policy,
    lo: (f64, &DVector<f64>),
    hi: (f64, &DVector<f64>),
) -> Result<(f64, DVector<f64>)> {
    let g1 = sc.safe_set.level(lo.1)?;
    let g2 = sc.safe_set.level(hi.1)?;
    if !(g1 < 0.0 && g2 > 0.0) || !(hi.0 > lo.0) {
        return Err(Error::Bracket(format!(
            "invalid crossing bracket: g = {g1:e} at t = {}, g = {g2:e} at t = {}",
            lo.0, hi.0
        )));
    }
    let (u, _) = controlled(sc, policy, lo.0, lo.1, &History::default())?;
    refine_with_control(sc, &u, lo.0, lo.1, hi.0)
}

/// Integrates from `x0` until `horizon` or the first exit from `S`.
pub fn simulate(sc: &Scenario, policy: &Policy, x0: &DVector<f64>, horizon: f64, dt: f64) -> Result<Trajectory> {
    simulate_from(sc, policy, x0, 0.0, horizon, dt)
}

fn simulate_from(sc: &Scenario, policy: &Policy, x0: &DVector<f64>, t0: f64, horizon: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !(horizon > t0 && horizon.is_finite()) {
        return Err(Error::Config(format!("horizon must exceed start time, got {horizon}")));
    }
    let g0 = sc.safe_set.level(x0)?;
    if g0 > BOUNDARY_BAND {
        return Err(Error::Precondition(format!("initial state is outside S (g = {g0:e})")));
    }
    let steps = ((horizon - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let time = |k: usize| if k >= steps { horizon } else { t0 + k as f64 * dt };

    let mut traj = Trajectory {
        samples: Vec::with_capacity(steps + 1),
        events: vec![],
        dt,
        terminated: Termination::Horizon,
        policy_id: policy.id().to_string(),
        zero_policy: policy.is_provably_zero(),
    };
    let mut history = History::default();
    let mut x = x0.clone();
    let mut g = g0;

    for k in 0..=steps {
        let t = time(k);
        let (u, clipped) = controlled(sc, policy, t, &x, &history)?;
        if clipped {
            history.clip_count += 1;
            traj.events.push(Event {
                kind: EventKind::Clip,
                t,
                state: x.as_slice().to_vec(),
            });
        }
        traj.samples.push(Sample {
            t,
            x: x.as_slice().to_vec(),
            kappa: sc.kappa(t)?,
            u: u.as_slice().to_vec(),
            g,
        });
        if k == steps {
            break;
        }
        let t_next = time(k + 1);
        let x_next = rk4_step(sc, &x, t, t_next - t, &u)?;
        if x_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: t_next,
                last_valid: x.as_slice().to_vec(),
            });
        }
        let g_next = sc.safe_set.level(&x_next)?;
        if g_next > BOUNDARY_BAND {
            let (t_star, x_star) = if g < 0.0 {
                refine_with_control(sc, &u, t, &x, t_next)?
            } else {
                // already inside the boundary band at the step start
                (t, x.clone())
            };
            let g_star = sc.safe_set.level(&x_star)?;
            if t_star > t {
                traj.samples.push(Sample {
                    t: t_star,
                    x: x_star.as_slice().to_vec(),
                    kappa: sc.kappa(t_star)?,
                    u: u.as_slice().to_vec(),
                    g: g_star,
                });
            }
            traj.events.push(Event {
                kind: EventKind::BoundaryCrossing,
                t: t_star,
                state: x_star.as_slice().to_vec(),
            });
            if sc.gamma.contains(&x_star) {
                traj.events.push(Event {
                    kind: EventKind::GammaContact,
                    t: t_star,
                    state: x_star.as_slice().to_vec(),
                });
            }
            traj.terminated = Termination::Exit;
            return Ok(traj);
        }
        history.steps += 1;
        history.last_control = Some(u);
        x = x_next;
        g = g_next;
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceAudit {
    pub invariant: bool,
    /// `min over samples of −g(x)`.
    pub min_margin: f64,
    pub min_margin_time: f64,
    pub violation_time: Option<f64>,
}

/// Forward-invariance verdict for a recorded trajectory.
pub fn invariance_audit(traj: &Trajectory) -> Result<InvarianceAudit> {
    if traj.samples.is_empty() {
        return Err(Error::Precondition("invariance audit of an empty trajectory".into()));
    }
    let (mut min_margin, mut at) = (f64::INFINITY, 0.0);
    let mut violation = None;
    for s in &traj.samples {
        if -s.g < min_margin {
            min_margin = -s.g;
            at = s.t;
        }
        if s.g > BOUNDARY_BAND && violation.is_none() {
            violation = Some(s.t);
        }
    }
    if let Some(e) = traj.exit_event() {
        violation = Some(violation.map_or(e.t, |v: f64| v.min(e.t)));
    }
    Ok(InvarianceAudit {
        invariant: violation.is_none(),
        min_margin,
        min_margin_time: at,
        violation_time: violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CandidateOutcome {
    NoContact,
    ContactOutsideGamma { t: f64 },
    ContactBeforeThreshold { t: f64 },
    LeftInterior { t: f64 },
    Certified { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityCertificate {
    pub policy_id: String,
    pub found: bool,
    pub x0: Option<Vec<f64>>,
    pub t_reach: Option<f64>,
    pub t_kappa: Option<f64>,
    pub interior_before: bool,
    pub gamma_contact: Option<Vec<f64>>,
    pub candidates: Vec<(Vec<f64>, CandidateOutcome)>,
}

impl ReachabilityCertificate {
    pub fn to_certificate(&self) -> Certificate {
        let verdict = if self.found { Verdict::Pass } else { Verdict::Fail };
        let summary = match (self.found, self.t_reach, &self.x0) {
            (true, Some(t), Some(x0)) => format!("from x0 = {x0:?} the boundary region is reached at t = {t:.9} >= T_kappa"),
            _ if self.t_kappa.is_none() => "not certified: T_kappa is not reached within the horizon".to_string(),
            _ => format!("not certified: no candidate out of {} reached the boundary region after T_kappa", self.candidates.len()),
        };
        let mut c = Certificate::new(CheckId::A3, verdict, summary).with_subject(self.policy_id.clone());
        c.evidence("found", self.found)
            .evidence("x0", json!(self.x0))
            .evidence("t_reach", json!(self.t_reach))
            .evidence("t_kappa", json!(self.t_kappa))
            .evidence("interior_before", self.interior_before)
            .evidence("gamma_contact", json!(self.gamma_contact))
            .evidence("candidates", serde_json::to_value(&self.candidates).unwrap_or_default());
        c.caveat("forward-simulation search over finitely many candidates: a semi-decision, failure means 'not certified'");
        c
    }
}

/// Explicit candidates from the scenario followed by seeded interior samples.
pub fn default_candidates(sc: &Scenario) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = sc
        .numerics
        .a3_candidates
        .iter()
        .map(|c| DVector::from_column_slice(c))
        .collect();
    if sc.numerics.a3_candidate_count > 0 {
        let mut rng = stream_rng(sc.numerics.seed, Stream::A3Candidates);
        out.extend(sc.safe_set.sample_interior(sc.numerics.a3_candidate_count, &mut rng)?);
    }
    Ok(out)
}

fn classify_candidate(sc: &Scenario, traj: &Trajectory, t_kappa: f64) -> CandidateOutcome {
    let Some(exit) = traj.exit_event() else {
        return CandidateOutcome::NoContact;
    };
    let before = traj.samples.iter().filter(|s| s.t < exit.t);
    if let Some(s) = before.clone().find(|s| classify_level(s.g) != Membership::Interior) {
        // the only permissible non-interior sample is the contact itself
        if s.t < exit.t {
            return CandidateOutcome::LeftInterior { t: s.t };
        }
    }
    let contact = DVector::from_column_slice(&exit.state);
    if !sc.gamma.contains(&contact) {
        return CandidateOutcome::ContactOutsideGamma { t: exit.t };
    }
    if exit.t < t_kappa {
        return CandidateOutcome::ContactBeforeThreshold { t: exit.t };
    }
    CandidateOutcome::Certified { t: exit.t }
}

/// Searches the candidates, in order, for a trajectory whose first boundary
/// contact lies in Γ at a time no earlier than `t_kappa`.
pub fn certify_a3(
    sc: &Scenario,
    policy: &Policy,
    t_kappa: Option<f64>,
    candidates: &[DVector<f64>],
) -> Result<ReachabilityCertificate> {
    for (i, x0) in candidates.iter().enumerate() {
        if sc.safe_set.contains(x0)? != Membership::Interior {
            return Err(Error::Config(format!("A3 candidate {i} {:?} is not in int(S)", x0.as_slice())));
        }
    }
    let mut cert = ReachabilityCertificate {
        policy_id: policy.id().to_string(),
        found: false,
        x0: None,
        t_reach: None,
        t_kappa,
        interior_before: false,
        gamma_contact: None,
        candidates: vec![],
    };
    let Some(t_kappa) = t_kappa else {
        return Ok(cert);
    };
    let outcomes: Vec<(DVector<f64>, Trajectory, CandidateOutcome)> = candidates
        .par_iter()
        .map(|x0| {
            let traj = simulate(sc, policy, x0, sc.numerics.horizon, sc.numerics.dt)?;
            let outcome = classify_candidate(sc, &traj, t_kappa);
            Ok((x0.clone(), traj, outcome))
        })
        .collect::<Result<_>>()?;
    for (x0, traj, outcome) in &outcomes {
        cert.candidates.push((x0.as_slice().to_vec(), outcome.clone()));
        if !cert.found {
            if let CandidateOutcome::Certified { t } = outcome {
                cert.found = true;
                cert.x0 = Some(x0.as_slice().to_vec());
                cert.t_reach = Some(*t);
                cert.interior_before = true;
                cert.gamma_contact = traj.exit_event().map(|e| e.state.clone());
            }
        }
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub policy_id: String,
    pub u_max: f64,
    pub kappa_star: Option<f64>,
    pub t_kappa: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub exited: bool,
    pub exit_time: Option<f64>,
    /// `⟨ẋ, n⟩` at the contact with this policy's control.
    pub outward_at_contact: Option<f64>,
    /// Gap margin at the contact for this policy's authority bound.
    pub margin_at_contact: Option<f64>,
    pub invariance_condition_violated: bool,
    pub exit_confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnessVerdict {
    TheoremInstantiated,
    NotInstantiated(String),
}

impl HarnessVerdict {
    pub fn describe(&self) -> String {
        match self {
            HarnessVerdict::TheoremInstantiated => "theorem-instantiated".into(),
            HarnessVerdict::NotInstantiated(r) => format!("not instantiated ({r})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessReport {
    pub outcomes: Vec<PolicyOutcome>,
    pub verdict: HarnessVerdict,
    pub a2: Certificate,
    pub lemma1: Option<Certificate>,
    pub a3: Vec<Certificate>,
}

impl HarnessReport {
    pub fn instantiated(&self) -> bool {
        self.verdict == HarnessVerdict::TheoremInstantiated
    }

    pub fn theorem_certificate(&self) -> Certificate {
        let mut c = Certificate::new(
            CheckId::Theorem1,
            if self.instantiated() { Verdict::Pass } else { Verdict::Fail },
            self.verdict.describe(),
        );
        c.evidence("policies", serde_json::to_value(&self.outcomes).unwrap_or_default());
        c.param("strictness_floor", STRICTNESS_EPS);
        c.declare("E1 (no permanent capability ceiling below the supercritical level): world-level premise, declared, not computed")
            .declare("E4 (at least one intrinsic candidate remains): world-level premise, declared, not computed");
        c.caveat("the invariance condition at the contact is checked numerically; the necessity argument itself is not re-derived");
        c
    }

    /// All certificates in pipeline order.
    pub fn certificates(&self) -> Vec<Certificate> {
        let mut out = vec![self.a2.clone()];
        out.extend(self.lemma1.clone());
        out.extend(self.a3.iter().cloned());
        out.push(self.theorem_certificate());
        out
    }
}

/// Ensures the suite contains a restoring-optimal member and an aggregate.
pub fn complete_suite(sc: &Scenario, suite: &[Policy]) -> Result<Vec<Policy>> {
    use crate::policies::{aggregate_policies, PolicyKind};
    if suite.is_empty() {
        return Err(Error::Config("policy suite is empty".into()));
    }
    let mut out = suite.to_vec();
    if !out.iter().any(|p| matches!(p.kind(), PolicyKind::RestoringOptimal)) {
        out.push(Policy::restoring_optimal(sc.u_max)?);
    }
    if !out.iter().any(|p| matches!(p.kind(), PolicyKind::Aggregate(_))) {
        out.push(aggregate_policies(out.clone())?);
    }
    Ok(out)
}

fn policy_outcome(sc: &Scenario, analysis: &SupercriticalAnalysis, policy: &Policy, candidates: &[DVector<f64>]) -> Result<(PolicyOutcome, Certificate)> {
    let scp = sc.with_u_max(policy.u_max());
    let mut outcome = PolicyOutcome {
        policy_id: policy.id().to_string(),
        u_max: policy.u_max(),
        kappa_star: None,
        t_kappa: None,
        x0: None,
        exited: false,
        exit_time: None,
        outward_at_contact: None,
        margin_at_contact: None,
        invariance_condition_violated: false,
        exit_confirmed: false,
    };
    let t_kappa = match find_kappa_star(&scp, &analysis.drift_bound, &analysis.gamma_samples, sc.numerics.kappa_bracket) {
        Ok(th) => {
            outcome.kappa_star = Some(th.kappa_star);
            th.t_kappa
        }
        Err(Error::Bracket(_)) => None,
        Err(e) => return Err(e),
    };
    outcome.t_kappa = t_kappa;
    let a3 = certify_a3(&scp, policy, t_kappa, candidates)?;
    let cert = a3.to_certificate();
    let (Some(t_reach), Some(contact), Some(x0)) = (a3.t_reach, a3.gamma_contact.as_ref(), a3.x0.as_ref()) else {
        return Ok((outcome, cert));
    };
    outcome.x0 = Some(x0.clone());
    outcome.exit_time = Some(t_reach);
    let x_b = DVector::from_column_slice(contact);
    let (u, _) = controlled(sc, policy, t_reach, &x_b, &History::default())?;
    let parts = outward_components(sc, &x_b, t_reach, &u)?;
    outcome.outward_at_contact = Some(parts.total);
    outcome.invariance_condition_violated = parts.total > 0.0;
    if sc.gamma.contains(&x_b) {
        outcome.margin_at_contact = Some(a2_margin(&scp, &analysis.drift_bound, &x_b, parts.kappa)?.margin);
    }

    // keep integrating past the contact to observe the exit
    let steps = sc.numerics.confirm_steps.max(1);
    let mut x = x_b;
    let mut t = t_reach;
    for _ in 0..steps {
        let (u, _) = controlled(sc, policy, t, &x, &History::default())?;
        x = rk4_step(sc, &x, t, sc.numerics.dt, &u)?;
        t += sc.numerics.dt;
        if sc.safe_set.level(&x)? > 0.0 {
            outcome.exit_confirmed = true;
            break;
        }
    }
    outcome.exited = outcome.exit_confirmed;
    Ok((outcome, cert))
}

/// Runs the full chain: threshold and A2, lemma 1, then per-policy
/// reachability and the boundary velocity check at each contact.
pub fn theorem1_harness(sc: &Scenario, suite: &[Policy]) -> Result<HarnessReport> {
    let suite = complete_suite(sc, suite)?;
    let analysis = analyze_supercritical(sc)?;
    let not = |reason: &str, analysis: SupercriticalAnalysis| HarnessReport {
        outcomes: vec![],
        verdict: HarnessVerdict::NotInstantiated(reason.to_string()),
        a2: analysis.a2,
        lemma1: None,
        a3: vec![],
    };
    match &analysis.regime {
        Regime::Supercritical { .. } => {}
        Regime::HorizonBelowThreshold { .. } => return Ok(not("horizon below T_kappa", analysis)),
        Regime::NeverReached | Regime::NoThreshold(_) => return Ok(not("A2 fails", analysis)),
    }
    if !analysis.a2.passed() {
        return Ok(not("A2 fails", analysis));
    }
    let t_grid = analysis.lemma1_time_grid(sc).expect("supercritical regime has a time grid");
    let lemma1 = lemma1_certificate(sc, &analysis.drift_bound, &analysis.a2, &analysis.gamma_samples, &t_grid)?;
    if !lemma1.passed() {
        return Ok(HarnessReport {
            outcomes: vec![],
            verdict: HarnessVerdict::NotInstantiated("lemma 1 fails".into()),
            a2: analysis.a2,
            lemma1: Some(lemma1),
            a3: vec![],
        });
    }
    let candidates = default_candidates(sc)?;
    let results: Vec<(PolicyOutcome, Certificate)> = suite
        .par_iter()
        .map(|p| policy_outcome(sc, &analysis, p, &candidates))
        .collect::<Result<_>>()?;
    let (outcomes, a3): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let verdict = match outcomes.iter().find(|o| !(o.exited && o.invariance_condition_violated)) {
        None => HarnessVerdict::TheoremInstantiated,
        Some(o) if o.x0.is_none() => HarnessVerdict::NotInstantiated(format!("A3 not certified for policy '{}'", o.policy_id)),
        Some(o) => HarnessVerdict::NotInstantiated(format!("policy '{}' did not exit", o.policy_id)),
    };
    Ok(HarnessReport {
        outcomes,
        verdict,
        a2: analysis.a2,
        lemma1: Some(lemma1),
        a3,
    })
}
