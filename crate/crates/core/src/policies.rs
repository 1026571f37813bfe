//! Causal bounded external-control policies.
//!
//! A policy sees only the current time, the current state and a by-value
//! summary of the past; there is no way to reach a future state through
//! [`PolicyInput`]. Every output is forced into the authority ball
//! `‖B·u‖ ≤ u_max` by radial clipping.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::channels::ControlChannel;
use crate::error::{Error, Result};
use crate::safe_set::SafeSet;

/// Slack on `‖B·u‖ ≤ u_max` asserted for every evaluation.
pub const BOUND_EPS: f64 = 1e-12;
/// Below this, the projection of the normal onto `range(B)` is treated as zero.
pub const PROJECTION_FLOOR: f64 = 1e-12;
/// Allowed deviation of `‖n‖` from 1.
pub const UNIT_TOL: f64 = 1e-9;

/// Fixed environment a policy is evaluated in.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub control: &'a ControlChannel,
    pub safe_set: &'a SafeSet,
}

/// Summary of the past, passed by value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub steps: usize,
    pub last_control: Option<DVector<f64>>,
    pub clip_count: usize,
}

pub struct PolicyInput<'a> {
    pub t: f64,
    pub x: &'a DVector<f64>,
    pub history: &'a History,
    pub context: PolicyContext<'a>,
}

pub type PolicyFn = Arc<dyn Fn(&PolicyInput<'_>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub enum PolicyKind {
    Zero,
    Constant(DVector<f64>),
    /// Pointwise minimizer of `⟨B·u, n(x)⟩` with `n` the level-set normal at `x`.
    RestoringOptimal,
    Aggregate(Vec<Policy>),
    /// Arbitrary causal law; used for test doubles.
    Custom { label: String, f: PolicyFn },
}

impl fmt::Debug for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Zero => write!(f, "Zero"),
            PolicyKind::Constant(u) => write!(f, "Constant({:?})", u.as_slice()),
            PolicyKind::RestoringOptimal => write!(f, "RestoringOptimal"),
            PolicyKind::Aggregate(c) => f.debug_tuple("Aggregate").field(c).finish(),
            PolicyKind::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Policy {
    id: String,
    kind: PolicyKind,
    u_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub u: DVector<f64>,
    pub clipped: bool,
    /// `‖B·u‖` of the candidate before clipping.
    pub raw_norm: f64,
}

fn check_bound(u_max: f64) -> Result<()> {
    if !(u_max.is_finite() && u_max > 0.0) {
        return Err(Error::Config(format!("control authority u_max must be finite and > 0, got {u_max}")));
    }
    Ok(())
}

impl Policy {
    pub fn new(id: impl Into<String>, kind: PolicyKind, u_max: f64) -> Result<Self> {
        check_bound(u_max)?;
        if let PolicyKind::Aggregate(children) = &kind {
            if children.is_empty() {
                return Err(Error::Config("aggregate policy needs at least one child".into()));
            }
        }
        Ok(Self {
            id: id.into(),
            kind,
            u_max,
        })
    }

    pub fn zero(u_max: f64) -> Result<Self> {
        Self::new("zero", PolicyKind::Zero, u_max)
    }

    pub fn constant(u0: DVector<f64>, u_max: f64) -> Result<Self> {
        Self::new("constant", PolicyKind::Constant(u0), u_max)
    }

    pub fn restoring_optimal(u_max: f64) -> Result<Self> {
        Self::new("restoring-optimal", PolicyKind::RestoringOptimal, u_max)
    }

    pub fn custom(label: impl Into<String>, u_max: f64, f: PolicyFn) -> Result<Self> {
        let label = label.into();
        Self::new(label.clone(), PolicyKind::Custom { label, f }, u_max)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// True when the policy can only ever output zero control.
    pub fn is_provably_zero(&self) -> bool {
        match &self.kind {
            PolicyKind::Zero => true,
            PolicyKind::Constant(u) => u.iter().all(|v| *v == 0.0),
            PolicyKind::Aggregate(children) => children.iter().all(Policy::is_provably_zero),
            PolicyKind::RestoringOptimal | PolicyKind::Custom { .. } => false,
        }
    }
}

/// Finite aggregate: outputs add, and so do the authority bounds.
pub fn aggregate_policies(children: Vec<Policy>) -> Result<Policy> {
    if children.is_empty() {
        return Err(Error::Config("aggregate policy needs at least one child".into()));
    }
    let u_max = children.iter().map(|c| c.u_max).sum();
    let id = format!(
        "aggregate[{}]",
        children.iter().map(|c| c.id.as_str()).collect::<Vec<_>>().join("+")
    );
    Policy::new(id, PolicyKind::Aggregate(children), u_max)
}

/// The control minimizing `⟨B·u, n⟩` over `‖B·u‖ ≤ u_max`.
///
/// With `r` the projection of `n` onto `range(B)`, the minimizer has
/// `B·u = −u_max·r/‖r‖` and attains `−u_max·‖r‖`. When `r` vanishes every
/// admissible control is normal-neutral and zero is returned.
pub fn restoring_optimal_control(b: &ControlChannel, n: &DVector<f64>, u_max: f64) -> Result<DVector<f64>> {
    check_bound(u_max)?;
    if n.len() != b.state_dim() {
        return Err(Error::Dimension {
            expected: b.state_dim(),
            actual: n.len(),
            context: "restoring normal",
        });
    }
    if (n.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("normal must be unit length, |n| = {}", n.norm())));
    }
    let r = b.project(n);
    let rn = r.norm();
    if rn <= PROJECTION_FLOOR {
        return Ok(DVector::zeros(b.control_dim()));
    }
    let target = r * (-u_max / rn);
    Ok(clip(b, b.pseudo_inverse() * target, u_max).0)
}

/// Radially scales `u` so that `‖B·u‖ ≤ u_max`.
fn clip(b: &ControlChannel, u: DVector<f64>, u_max: f64) -> (DVector<f64>, bool, f64) {
    let raw = b.apply(&u).norm();
    if raw <= u_max {
        return (u, false, raw);
    }
    let mut scaled = &u * (u_max / raw);
    // shave rounding so the bound holds exactly
    while b.apply(&scaled).norm() > u_max {
        scaled *= 1.0 - 1e-15;
    }
    (scaled, true, raw)
}

/// Candidate control before the clipping layer.
pub fn raw_control(p: &Policy, ctx: PolicyContext<'_>, t: f64, x: &DVector<f64>, history: &History) -> Result<DVector<f64>> {
    let m = ctx.control.control_dim();
    let u = match &p.kind {
        PolicyKind::Zero => DVector::zeros(m),
        PolicyKind::Constant(u0) => {
            if u0.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    actual: u0.len(),
                    context: "constant policy control",
                });
            }
            u0.clone()
        }
        PolicyKind::RestoringOptimal => match ctx.safe_set.normal_direction(x) {
            Ok(n) => restoring_optimal_control(ctx.control, &n, p.u_max)?,
            Err(Error::DegenerateNormal { .. }) => DVector::zeros(m),
            Err(e) => return Err(e),
        },
        PolicyKind::Aggregate(children) => {
            let mut sum = DVector::zeros(m);
            for c in children {
                sum += evaluate_policy(c, ctx, t, x, history.clone())?.u;
            }
            sum
        }
        PolicyKind::Custom { f, .. } => f(&PolicyInput {
            t,
            x,
            history,
            context: ctx,
        }),
    };
    if u.len() != m {
        return Err(Error::Policy(format!("policy '{}' returned {} controls, expected {m}", p.id, u.len())));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Policy(format!("policy '{}' returned a non-finite control", p.id)));
    }
    Ok(u)
}

/// Evaluates the policy and enforces `‖B·u‖ ≤ u_max`.
pub fn evaluate_policy(p: &Policy, ctx: PolicyContext<'_>, t: f64, x: &DVector<f64>, history: History) -> Result<PolicyOutput> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("policy evaluated at negative time {t}")));
    }
    let u = raw_control(p, ctx, t, x, &history)?;
    let (u, clipped, raw_norm) = clip(ctx.control, u, p.u_max);
    Ok(PolicyOutput { u, clipped, raw_norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundLayer {
    /// Candidate controls before clipping.
    Raw,
    /// Controls as delivered to the plant.
    Enforced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    pub max_norm: f64,
    pub evaluations: usize,
    pub clip_events: usize,
}

/// Checks `max ‖B·u‖ ≤ u_max + 1e-9` over a grid of states and times.
pub fn verify_policy_bound(
    p: &Policy,
    ctx: PolicyContext<'_>,
    states: &[DVector<f64>],
    times: &[f64],
    layer: BoundLayer,
) -> Result<BoundCheck> {
    if states.is_empty() || times.is_empty() {
        return Err(Error::Config("policy bound check needs states and times".into()));
    }
    let mut check = BoundCheck {
        holds: true,
        max_norm: 0.0,
        evaluations: 0,
        clip_events: 0,
    };
    for x in states {
        for &t in times {
            let norm = match layer {
                BoundLayer::Raw => ctx.control.apply(&raw_control(p, ctx, t, x, &History::default())?).norm(),
                BoundLayer::Enforced => {
                    let out = evaluate_policy(p, ctx, t, x, History::default())?;
                    if out.clipped {
                        check.clip_events += 1;
                    }
                    ctx.control.apply(&out.u).norm()
                }
            };
            check.evaluations += 1;
            check.max_norm = check.max_norm.max(norm);
        }
    }
    check.holds = check.max_norm <= p.u_max + 1e-9;
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn disk() -> SafeSet {
        SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let b = ControlChannel::identity(2);
        let s = disk();
        let ctx = PolicyContext { control: &b, safe_set: &s };
        let x = v(&[0.2, 0.3]);

        let out = evaluate_policy(&Policy::zero(1.0).unwrap(), ctx, 0.0, &x, History::default()).unwrap();
        assert_eq!(out.u, v(&[0.0, 0.0]));

        let u0 = v(&[0.3, 0.4]);
        let out = evaluate_policy(&Policy::constant(u0.clone(), 1.0).unwrap(), ctx, 1.0, &x, History::default()).unwrap();
        assert_eq!(out.u, u0);
        assert!(!out.clipped);

        let u0 = v(&[1.8, 2.4]);
        let out = evaluate_policy(&Policy::constant(u0.clone(), 1.0).unwrap(), ctx, 1.0, &x, History::default()).unwrap();
        assert!(out.clipped);
        assert!((&out.u - &u0 / 3.0).amax() <= 1e-15);
        assert_eq!(out.raw_norm, 3.0);
    }

    #[test]
    fn nonfinite_control_is_policy_error() {
        let b = ControlChannel::identity(1);
        let s = SafeSet::ball(vec![0.0], 1.0).unwrap();
        let ctx = PolicyContext { control: &b, safe_set: &s };
        let p = Policy::custom("nan", 1.0, Arc::new(|_| v(&[f64::NAN]))).unwrap();
        assert!(matches!(
            evaluate_policy(&p, ctx, 0.0, &v(&[0.0]), History::default()),
            Err(Error::Policy(_))
        ));
    }

    #[test]
    fn restoring_examples() {
        let b = ControlChannel::identity(2);
        let u = restoring_optimal_control(&b, &v(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(b.apply(&u), v(&[0.0, -1.0]));

        let b1 = ControlChannel::identity(1);
        assert_eq!(restoring_optimal_control(&b1, &v(&[1.0]), 2.0).unwrap(), v(&[-2.0]));

        let narrow = ControlChannel::new(DMatrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_eq!(restoring_optimal_control(&narrow, &v(&[0.0, 1.0]), 1.0).unwrap(), v(&[0.0]));

        assert!(matches!(
            restoring_optimal_control(&b, &v(&[0.0, 2.0]), 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn aggregate_examples() {
        let agg = aggregate_policies(vec![Policy::zero(1.0).unwrap(), Policy::zero(2.0).unwrap()]).unwrap();
        assert_eq!(agg.u_max(), 3.0);
        assert!(agg.is_provably_zero());

        let b = ControlChannel::identity(2);
        let s = disk();
        let ctx = PolicyContext { control: &b, safe_set: &s };
        let out = evaluate_policy(&agg, ctx, 0.0, &v(&[0.5, 0.5]), History::default()).unwrap();
        assert_eq!(out.u, v(&[0.0, 0.0]));

        let three = aggregate_policies((0..3).map(|_| Policy::restoring_optimal(1.0).unwrap()).collect()).unwrap();
        let out = evaluate_policy(&three, ctx, 0.0, &v(&[0.0, 1.0]), History::default()).unwrap();
        assert!((b.apply(&out.u) - v(&[0.0, -3.0])).amax() <= 1e-12);
        assert_eq!(three.u_max(), 3.0);

        assert!(matches!(aggregate_policies(vec![]), Err(Error::Config(_))));
    }

    #[test]
    fn verify_bound_examples() {
        let b = ControlChannel::identity(2);
        let s = disk();
        let ctx = PolicyContext { control: &b, safe_set: &s };
        let states: Vec<DVector<f64>> = (0..16)
            .map(|i| {
                let a = i as f64 * 0.4;
                v(&[0.9 * a.cos(), 0.9 * a.sin()])
            })
            .collect();
        let times = [0.0, 1.0];

        let zero = verify_policy_bound(&Policy::zero(1.0).unwrap(), ctx, &states, &times, BoundLayer::Enforced).unwrap();
        assert!(zero.holds);
        assert_eq!(zero.max_norm, 0.0);

        let rest = verify_policy_bound(&Policy::restoring_optimal(1.0).unwrap(), ctx, &states, &times, BoundLayer::Enforced).unwrap();
        assert!(rest.holds);
        assert!((rest.max_norm - 1.0).abs() <= 1e-12);

        let adversary = Policy::custom(
            "adversary",
            1.0,
            Arc::new(|inp: &PolicyInput<'_>| {
                let n = inp.context.safe_set.normal_direction(inp.x).unwrap();
                n * 10.0
            }),
        )
        .unwrap();
        let raw = verify_policy_bound(&adversary, ctx, &states, &times, BoundLayer::Raw).unwrap();
        assert!(!raw.holds);
        assert!((raw.max_norm - 10.0).abs() <= 1e-12);
        let enforced = verify_policy_bound(&adversary, ctx, &states, &times, BoundLayer::Enforced).unwrap();
        assert!(enforced.holds);
        assert_eq!(enforced.clip_events, states.len() * times.len());
    }

    #[test]
    fn rejects_nonpositive_bound() {
        assert!(Policy::zero(0.0).is_err());
        assert!(Policy::restoring_optimal(-1.0).is_err());
    }
}
