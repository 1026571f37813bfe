//! Internal-configuration predicate Φ, strategy classification and the
//! R1–R4 requirement audits.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::{CheckId, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::policies::Policy;
use crate::scenario::Scenario;
use crate::simulator::{invariance_audit, simulate, Event, EventKind, Trajectory};
use crate::state_model::{split_internal, CapabilitySchedule, StatePartition};

/// Time tolerance of Φ-exit refinement.
pub const PHI_EXIT_TOL: f64 = 1e-9;

const FINITE_HORIZON_CAVEAT: &str = "'for all t >= 0' is audited on the recorded samples of a finite horizon (finite-sample surrogate)";
const PHI_CAVEAT: &str = "Phi is an explicit predicate supplied with the scenario; whether membership in it is an adequate safety criterion is not assessed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiShape {
    /// Closed ball `‖x_int − reference‖ ≤ radius`.
    Ball { reference: Vec<f64>, radius: f64 },
    /// `⟨direction, x_int⟩ ≤ offset`.
    Halfspace { direction: Vec<f64>, offset: f64 },
}

pub type PhiFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum PhiPredicate {
    Builtin(PhiShape),
    Custom { label: String, f: PhiFn },
}

impl fmt::Debug for PhiPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin(s) => write!(f, "{s:?}"),
            Self::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl PhiPredicate {
    pub fn ball(reference: Vec<f64>, radius: f64) -> Result<Self> {
        Self::builtin(PhiShape::Ball { reference, radius })
    }

    pub fn halfspace(direction: Vec<f64>, offset: f64) -> Result<Self> {
        Self::builtin(PhiShape::Halfspace { direction, offset })
    }

    pub fn builtin(shape: PhiShape) -> Result<Self> {
        match &shape {
            PhiShape::Ball { reference, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Config(format!("phi ball radius must be > 0, got {radius}")));
                }
                if reference.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("phi reference must be finite".into()));
                }
            }
            PhiShape::Halfspace { direction, offset } => {
                if direction.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
                    return Err(Error::Config("phi halfspace must be finite".into()));
                }
                if direction.iter().all(|v| *v == 0.0) {
                    return Err(Error::Config("phi halfspace direction is zero".into()));
                }
            }
        }
        Ok(Self::Builtin(shape))
    }

    pub fn custom(label: impl Into<String>, f: PhiFn) -> Self {
        Self::Custom { label: label.into(), f }
    }

    /// Dimension of the internal block the predicate expects, if fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Builtin(PhiShape::Ball { reference, .. }) => Some(reference.len()),
            Self::Builtin(PhiShape::Halfspace { direction, .. }) => Some(direction.len()),
            Self::Custom { .. } => None,
        }
    }

    pub fn contains(&self, x_int: &[f64]) -> Result<bool> {
        if let Some(d) = self.dim() {
            if d != x_int.len() {
                return Err(Error::Dimension {
                    expected: d,
                    actual: x_int.len(),
                    context: "internal block vs phi",
                });
            }
        }
        Ok(match self {
            Self::Builtin(PhiShape::Ball { reference, radius }) => {
                let d2: f64 = x_int.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= *radius
            }
            Self::Builtin(PhiShape::Halfspace { direction, offset }) => {
                x_int.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() <= *offset
            }
            Self::Custom { f, .. } => f(x_int),
        })
    }

    fn contains_state(&self, x: &[f64], p: &StatePartition) -> Result<bool> {
        let (_, int) = split_internal(x, p)?;
        self.contains(int)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyClass {
    ExternallyEnforced,
    Intrinsic,
}

impl fmt::Display for StrategyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExternallyEnforced => "externally-enforced",
            Self::Intrinsic => "intrinsic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct StrategyDeclaration {
    pub sustain_policy: Option<Policy>,
    /// Free-text list of interventions applied before deployment.
    pub genesis_interventions: Vec<String>,
    pub claimed_class: StrategyClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: StrategyClass,
    pub claimed: StrategyClass,
    pub mismatch: bool,
    pub rationale: String,
}

/// Intrinsic iff no sustain-stage control is applied; genesis
/// interventions never change the class.
pub fn classify_strategy(d: &StrategyDeclaration) -> Classification {
    let (class, rationale) = match &d.sustain_policy {
        None => (
            StrategyClass::Intrinsic,
            "no sustain-stage policy is declared".to_string(),
        ),
        Some(p) if p.is_provably_zero() => (
            StrategyClass::Intrinsic,
            format!("sustain-stage policy '{}' is identically zero", p.id()),
        ),
        Some(p) => (
            StrategyClass::ExternallyEnforced,
            format!("sustain-stage policy '{}' applies nonzero external control", p.id()),
        ),
    };
    let rationale = if d.genesis_interventions.is_empty() {
        rationale
    } else {
        format!(
            "{rationale}; {} genesis intervention(s) do not affect the class",
            d.genesis_interventions.len()
        )
    };
    Classification {
        class,
        claimed: d.claimed_class,
        mismatch: class != d.claimed_class,
        rationale,
    }
}

pub fn classification_certificate(d: &StrategyDeclaration) -> Certificate {
    let c = classify_strategy(d);
    let mut cert = Certificate::new(
        CheckId::R1,
        if c.mismatch { Verdict::Fail } else { Verdict::Pass },
        format!("declared strategy classifies as {} (claimed {})", c.class, c.claimed),
    )
    .with_subject("classification");
    cert.evidence("class", c.class.to_string())
        .evidence("claimed_class", c.claimed.to_string())
        .evidence("mismatch", c.mismatch)
        .evidence("rationale", c.rationale)
        .evidence("genesis_interventions", d.genesis_interventions.clone());
    cert
}

/// `x_int(0) ∈ Φ`.
pub fn check_r2_genesis(x0: &DVector<f64>, p: &StatePartition, phi: &PhiPredicate) -> Result<Certificate> {
    let (_, int) = split_internal(x0.as_slice(), p)?;
    let inside = phi.contains(int)?;
    let mut c = Certificate::new(
        CheckId::R2,
        if inside { Verdict::Pass } else { Verdict::Fail },
        if inside {
            "initial internal configuration lies in Phi".to_string()
        } else {
            "initial internal configuration lies outside Phi".to_string()
        },
    );
    c.evidence("x_int0", int.to_vec());
    c.param("phi", format!("{phi:?}"));
    c.caveat(PHI_CAVEAT);
    Ok(c)
}

/// First time the internal block leaves Φ, refined by bisection on the
/// linear interpolant between the bracketing samples.
pub fn first_phi_exit(traj: &Trajectory, p: &StatePartition, phi: &PhiPredicate) -> Result<Option<Event>> {
    let mut prev: Option<(f64, &[f64])> = None;
    for s in &traj.samples {
        if !phi.contains_state(&s.x, p)? {
            let Some((t0, x0)) = prev else {
                return Ok(Some(Event {
                    kind: EventKind::PhiExit,
                    t: s.t,
                    state: s.x.clone(),
                }));
            };
            let lerp = |a: f64| -> Vec<f64> { x0.iter().zip(&s.x).map(|(u, v)| u + a * (v - u)).collect() };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let span = s.t - t0;
            while (hi - lo) * span > PHI_EXIT_TOL {
                let mid = 0.5 * (lo + hi);
                if phi.contains_state(&lerp(mid), p)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(Event {
                kind: EventKind::PhiExit,
                t: t0 + hi * span,
                state: lerp(hi),
            }));
        }
        prev = Some((s.t, &s.x));
    }
    Ok(None)
}

/// Φ holds at every recorded sample of a zero-control run.
pub fn check_r3_invariance(traj: &Trajectory, p: &StatePartition, phi: &PhiPredicate) -> Result<Certificate> {
    if !traj.zero_policy {
        return Err(Error::Precondition(format!(
            "R3 audits endogenous dynamics; trajectory was produced by nonzero policy '{}'",
            traj.policy_id
        )));
    }
    let exit = first_phi_exit(traj, p, phi)?;
    let mut c = match &exit {
        None => Certificate::new(
            CheckId::R3,
            Verdict::Pass,
            format!("internal configuration stays in Phi at all {} samples", traj.samples.len()),
        ),
        Some(e) => Certificate::new(CheckId::R3, Verdict::Fail, format!("internal configuration leaves Phi at t = {:.9}", e.t)),
    };
    c.evidence("samples", traj.samples.len())
        .evidence("horizon", traj.last().t)
        .evidence("phi_exit", json!(exit.as_ref().map(|e| json!({"t": e.t, "state": e.state}))));
    c.param("phi", format!("{phi:?}"))
        .param("dt", traj.dt)
        .param("phi_exit_tolerance", PHI_EXIT_TOL);
    c.caveat(FINITE_HORIZON_CAVEAT).caveat(PHI_CAVEAT);
    Ok(c)
}

/// Same scenario with the policy suite replaced by the zero policy.
pub fn zero_policy_variant(sc: &Scenario) -> Result<Scenario> {
    Ok(sc.with_policies(vec![Policy::zero(sc.u_max)?]))
}

fn zero_run(sc: &Scenario) -> Result<Trajectory> {
    let z = zero_policy_variant(sc)?;
    simulate(&z, z.default_policy(), &z.initial_state, z.numerics.horizon, z.numerics.dt)
}

/// Safety without continued enforcement: the zero-policy rerun stays in S.
pub fn check_r1_no_external(sc: &Scenario) -> Result<Certificate> {
    let traj = zero_run(sc)?;
    let audit = invariance_audit(&traj)?;
    let mut c = Certificate::new(
        CheckId::R1,
        if audit.invariant { Verdict::Pass } else { Verdict::Fail },
        match audit.violation_time {
            None => format!("zero-policy rerun stays in S over horizon {}", sc.numerics.horizon),
            Some(t) => format!("zero-policy rerun leaves S at t = {t:.9}"),
        },
    );
    c.evidence("invariant", audit.invariant)
        .evidence("min_margin", audit.min_margin)
        .evidence("min_margin_time", audit.min_margin_time)
        .evidence("violation_time", json!(audit.violation_time));
    c.param("horizon", sc.numerics.horizon)
        .param("dt", sc.numerics.dt)
        .param("substituted_policy", "zero");
    c.caveat(FINITE_HORIZON_CAVEAT);
    Ok(c)
}

/// Zero-policy invariance at each capability level, pinned constant.
pub fn check_r4_scaling(sc: &Scenario, levels: &[f64]) -> Result<Certificate> {
    if levels.len() < 2 {
        return Err(Error::Config("R4 needs at least two capability levels".into()));
    }
    if levels.iter().any(|k| !k.is_finite() || *k < 0.0) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("R4 levels must be finite, >= 0 and strictly increasing: {levels:?}")));
    }
    let results: Vec<(f64, bool, Option<f64>)> = levels
        .par_iter()
        .map(|&k| {
            let pinned = sc.with_capability(CapabilitySchedule::constant(k));
            let audit = invariance_audit(&zero_run(&pinned)?)?;
            Ok((k, audit.invariant, audit.violation_time))
        })
        .collect::<Result<_>>()?;
    let first_fail = results.iter().find(|r| !r.1).map(|r| r.0);
    let mut c = Certificate::new(
        CheckId::R4,
        if first_fail.is_none() { Verdict::Pass } else { Verdict::Fail },
        match first_fail {
            None => format!("zero-policy invariance holds at all {} capability levels", levels.len()),
            Some(k) => format!("zero-policy invariance first fails at kappa = {k}"),
        },
    );
    c.evidence("first_failing_level", json!(first_fail)).evidence(
        "levels",
        results
            .iter()
            .map(|(k, ok, t)| json!({"kappa": k, "invariant": ok, "violation_time": t}))
            .collect::<Vec<_>>(),
    );
    c.param("levels", levels.to_vec()).param("horizon", sc.numerics.horizon);
    c.caveat("unbounded capability growth is audited on a finite list of levels (finite surrogate)");
    Ok(c)
}

/// Levels used when the scenario does not list any: κ(0) and κ(horizon).
pub fn default_r4_levels(sc: &Scenario) -> Result<Vec<f64>> {
    match &sc.numerics.r4_levels {
        Some(l) => Ok(l.clone()),
        None => Ok(vec![sc.kappa(0.0)?, sc.kappa(sc.numerics.horizon)?]),
    }
}

fn not_checkable(check: CheckId, why: &str) -> Certificate {
    Certificate::new(check, Verdict::NotCheckable, why.to_string())
}

/// R1–R4 plus strategy classification, in that order.
pub fn requirements_audit(sc: &Scenario) -> Result<Vec<Certificate>> {
    let mut out = vec![check_r1_no_external(sc)?];
    if let Some(d) = &sc.strategy {
        out.push(classification_certificate(d));
    }
    match &sc.phi {
        Some(phi) => {
            out.push(check_r2_genesis(&sc.initial_state, &sc.partition, phi)?);
            if sc.partition.n_int() == 0 {
                out.push(not_checkable(CheckId::R3, "partition has no internal block"));
            } else {
                out.push(check_r3_invariance(&zero_run(sc)?, &sc.partition, phi)?);
            }
        }
        None => {
            out.push(not_checkable(CheckId::R2, "scenario declares no phi predicate"));
            out.push(not_checkable(CheckId::R3, "scenario declares no phi predicate"));
        }
    }
    let levels = default_r4_levels(sc)?;
    if levels.windows(2).all(|w| w[1] > w[0]) && levels.len() >= 2 {
        out.push(check_r4_scaling(sc, &levels)?);
    } else if sc.numerics.r4_levels.is_some() {
        return Err(Error::Config(format!("R4 levels must be strictly increasing: {levels:?}")));
    } else {
        out.push(not_checkable(CheckId::R4, "capability is constant over the horizon and no levels are given"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;

    fn decl(p: Option<Policy>, genesis: usize, claimed: StrategyClass) -> StrategyDeclaration {
        StrategyDeclaration {
            sustain_policy: p,
            genesis_interventions: (0..genesis).map(|i| format!("g{i}")).collect(),
            claimed_class: claimed,
        }
    }

    #[test]
    fn phi_ball_is_closed() {
        let phi = PhiPredicate::ball(vec![0.0], 0.2).unwrap();
        assert!(phi.contains(&[0.0]).unwrap());
        assert!(phi.contains(&[0.2]).unwrap());
        assert!(!phi.contains(&[0.3]).unwrap());
        assert!(phi.contains(&[0.0, 0.0]).is_err());
        assert!(PhiPredicate::ball(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn genesis_check() {
        let p = StatePartition::new(2, 1).unwrap();
        let phi = PhiPredicate::ball(vec![0.0], 0.2).unwrap();
        let at = |v: f64| check_r2_genesis(&DVector::from_vec(vec![0.5, v]), &p, &phi).unwrap();
        assert!(at(0.0).passed());
        assert!(at(0.2).passed());
        assert!(at(0.3).failed());
    }

    #[test]
    fn classification_examples() {
        let r = classify_strategy(&decl(Some(Policy::restoring_optimal(1.0).unwrap()), 0, StrategyClass::ExternallyEnforced));
        assert_eq!(r.class, StrategyClass::ExternallyEnforced);
        assert!(!r.mismatch);
        let r = classify_strategy(&decl(None, 3, StrategyClass::Intrinsic));
        assert_eq!(r.class, StrategyClass::Intrinsic);
        let r = classify_strategy(&decl(
            Some(Policy::constant(DVector::from_vec(vec![-1.0]), 1.0).unwrap()),
            0,
            StrategyClass::Intrinsic,
        ));
        assert_eq!(r.class, StrategyClass::ExternallyEnforced);
        assert!(r.mismatch);
    }

    #[test]
    fn classification_is_total() {
        let policies = [
            None,
            Some(Policy::zero(1.0).unwrap()),
            Some(Policy::constant(DVector::from_vec(vec![0.0]), 1.0).unwrap()),
            Some(Policy::constant(DVector::from_vec(vec![1.0]), 1.0).unwrap()),
            Some(Policy::restoring_optimal(1.0).unwrap()),
            Some(Policy::new("agg", PolicyKind::Aggregate(vec![Policy::zero(1.0).unwrap()]), 1.0).unwrap()),
        ];
        for p in policies {
            for g in 0..3 {
                for claimed in [StrategyClass::Intrinsic, StrategyClass::ExternallyEnforced] {
                    let r = classify_strategy(&decl(p.clone(), g, claimed));
                    let expect_intrinsic = p.as_ref().is_none_or(|p| p.is_provably_zero());
                    assert_eq!(r.class == StrategyClass::Intrinsic, expect_intrinsic);
                    assert_eq!(r.mismatch, r.class != claimed);
                }
            }
        }
    }
}
