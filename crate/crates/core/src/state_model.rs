//! State space, environment/internal partition and capability schedules.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance absorbing floating-point noise when checking that a schedule
/// is non-decreasing.
pub const MONOTONE_EPS: f64 = 1e-12;

/// A point in the coupled system's state space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("state coordinate {i} is not finite")));
        }
        Ok(Self(DVector::from_vec(coords)))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        Self::new(v.as_slice().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Contiguous split of the state into an environment block `[0, n_env)` and
/// an internal block `[n_env, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePartition {
    n: usize,
    n_env: usize,
}

impl StatePartition {
    pub fn new(n: usize, n_env: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("state dimension must be at least 1".into()));
        }
        if n_env > n {
            return Err(Error::Config(format!(
                "environment block size {n_env} exceeds dimension {n}"
            )));
        }
        Ok(Self { n, n_env })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn n_int(&self) -> usize {
        self.n - self.n_env
    }

    pub fn internal_range(&self) -> std::ops::Range<usize> {
        self.n_env..self.n
    }
}

/// Splits `x` into its environment and internal blocks.
pub fn split_internal<'a>(x: &'a [f64], p: &StatePartition) -> Result<(&'a [f64], &'a [f64])> {
    if x.len() != p.n {
        return Err(Error::Dimension {
            expected: p.n,
            actual: x.len(),
            context: "split_internal",
        });
    }
    Ok(x.split_at(p.n_env))
}

/// Closed-form capability schedule κ(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapabilitySchedule {
    Constant {
        level: f64,
    },
    /// `kappa0 + rate * t`, optionally saturated at `cap`.
    Linear {
        kappa0: f64,
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    /// `ceiling / (1 + exp(-steepness * (t - midpoint)))`.
    Logistic {
        ceiling: f64,
        steepness: f64,
        midpoint: f64,
    },
    /// Linear interpolation through `(t, kappa)` knots, held constant
    /// outside the knot range.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
}

impl CapabilitySchedule {
    pub fn constant(level: f64) -> Self {
        Self::Constant { level }
    }

    pub fn linear(kappa0: f64, rate: f64) -> Self {
        Self::Linear {
            kappa0,
            rate,
            cap: None,
        }
    }

    /// Checks parameter signs. Does not check monotonicity of piecewise
    /// knots; see [`verify_schedule_monotone`].
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let finite = |v: f64, name: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("capability {name} must be finite")))
            }
        };
        match self {
            Self::Constant { level } => {
                finite(*level, "level")?;
                if *level < 0.0 {
                    return bad("constant capability level must be >= 0".into());
                }
            }
            Self::Linear { kappa0, rate, cap } => {
                finite(*kappa0, "kappa0")?;
                finite(*rate, "rate")?;
                if *kappa0 < 0.0 || *rate < 0.0 {
                    return bad("linear capability needs kappa0 >= 0 and rate >= 0".into());
                }
                if let Some(c) = cap {
                    finite(*c, "cap")?;
                    if *c < 0.0 {
                        return bad("capability cap must be >= 0".into());
                    }
                }
            }
            Self::Logistic {
                ceiling,
                steepness,
                midpoint,
            } => {
                finite(*ceiling, "ceiling")?;
                finite(*steepness, "steepness")?;
                finite(*midpoint, "midpoint")?;
                if *ceiling < 0.0 || *steepness < 0.0 {
                    return bad("logistic capability needs ceiling >= 0 and steepness >= 0".into());
                }
            }
            Self::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear capability needs at least one knot".into());
                }
                for (i, [t, k]) in knots.iter().enumerate() {
                    finite(*t, "knot time")?;
                    finite(*k, "knot level")?;
                    if *t < 0.0 || *k < 0.0 {
                        return bad(format!("knot {i} must have t >= 0 and kappa >= 0"));
                    }
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return bad("piecewise-linear knot times must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// Smallest time in `[0, horizon]` at which κ(t) ≥ `level`, located by
    /// bisection to within `tol`. Returns `None` when the schedule stays
    /// below `level` over the whole horizon.
    pub fn first_time_reaching(&self, level: f64, horizon: f64, tol: f64) -> Result<Option<f64>> {
        if self.kappa_at(0.0)? >= level {
            return Ok(Some(0.0));
        }
        if self.kappa_at(horizon)? < level {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0_f64, horizon);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.kappa_at(mid)? >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// Like [`first_time_reaching`](Self::first_time_reaching) with no
    /// horizon: `None` only if the schedule never attains `level`.
    pub fn first_time_reaching_unbounded(&self, level: f64, tol: f64) -> Result<Option<f64>> {
        if self.kappa_at(0.0)? >= level {
            return Ok(Some(0.0));
        }
        if self.supremum() < level {
            return Ok(None);
        }
        let mut horizon = 1.0;
        while self.kappa_at(horizon)? < level {
            horizon *= 2.0;
            if horizon > 1e15 {
                return Ok(None);
            }
        }
        self.first_time_reaching(level, horizon, tol)
    }

    /// `sup_t κ(t)`, possibly infinite.
    pub fn supremum(&self) -> f64 {
        match self {
            Self::Constant { level } => *level,
            Self::Linear { kappa0, rate, cap } => match (cap, *rate > 0.0) {
                (Some(c), true) => c.max(kappa0.min(*c)),
                (Some(c), false) => kappa0.min(*c),
                (None, true) => f64::INFINITY,
                (None, false) => *kappa0,
            },
            Self::Logistic { ceiling, .. } => *ceiling,
            Self::PiecewiseLinear { knots } => knots.iter().map(|k| k[1]).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn kappa_at(&self, t: f64) -> Result<f64> {
        kappa_at(self, t)
    }
}

/// Evaluates κ(t). Negative or non-finite times are rejected.
pub fn kappa_at(schedule: &CapabilitySchedule, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("capability queried at invalid time {t}")));
    }
    let k = match schedule {
        CapabilitySchedule::Constant { level } => *level,
        CapabilitySchedule::Linear { kappa0, rate, cap } => {
            let k = kappa0 + rate * t;
            match cap {
                Some(c) => k.min(*c),
                None => k,
            }
        }
        CapabilitySchedule::Logistic {
            ceiling,
            steepness,
            midpoint,
        } => ceiling / (1.0 + (-steepness * (t - midpoint)).exp()),
        CapabilitySchedule::PiecewiseLinear { knots } => piecewise(knots, t),
    };
    Ok(k)
}

fn piecewise(knots: &[[f64; 2]], t: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first[0] {
        return first[1];
    }
    if t >= last[0] {
        return last[1];
    }
    let i = knots.partition_point(|k| k[0] <= t);
    let [t0, k0] = knots[i - 1];
    let [t1, k1] = knots[i];
    k0 + (k1 - k0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// First adjacent pair `(t_i, t_{i+1})` where κ decreased.
    pub first_violation: Option<(f64, f64)>,
}

/// Checks κ(t_{i+1}) ≥ κ(t_i) − 1e-12 over a strictly increasing grid.
pub fn verify_schedule_monotone(schedule: &CapabilitySchedule, grid: &[f64]) -> Result<MonotoneCheck> {
    if grid.is_empty() {
        return Err(Error::Config("monotonicity grid is empty".into()));
    }
    if grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config("monotonicity grid has negative times".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("monotonicity grid must be strictly increasing".into()));
    }
    let mut prev = kappa_at(schedule, grid[0])?;
    for w in grid.windows(2) {
        let next = kappa_at(schedule, w[1])?;
        if next < prev - MONOTONE_EPS {
            return Ok(MonotoneCheck {
                monotone: false,
                first_violation: Some((w[0], w[1])),
            });
        }
        prev = next;
    }
    Ok(MonotoneCheck {
        monotone: true,
        first_violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_at(&CapabilitySchedule::linear(0.0, 1.0), 2.0).unwrap(), 2.0);
        assert_eq!(kappa_at(&CapabilitySchedule::constant(1.5), 100.0).unwrap(), 1.5);
        let logistic = CapabilitySchedule::Logistic {
            ceiling: 4.0,
            steepness: 1.0,
            midpoint: 0.0,
        };
        // 4 / (1 + e^0) = 2
        assert_eq!(kappa_at(&logistic, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn negative_time_is_domain_error() {
        let err = kappa_at(&CapabilitySchedule::constant(1.0), -0.1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn linear_cap_saturates() {
        let s = CapabilitySchedule::Linear {
            kappa0: 0.0,
            rate: 2.0,
            cap: Some(0.5),
        };
        assert_eq!(s.kappa_at(0.1).unwrap(), 0.2);
        assert_eq!(s.kappa_at(10.0).unwrap(), 0.5);
    }

    #[test]
    fn monotone_examples() {
        let lin = CapabilitySchedule::linear(0.0, 1.0);
        assert!(verify_schedule_monotone(&lin, &[0.0, 1.0, 2.0]).unwrap().monotone);

        let pw = CapabilitySchedule::PiecewiseLinear {
            knots: vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]],
        };
        let check = verify_schedule_monotone(&pw, &[0.0, 1.0, 2.0]).unwrap();
        assert!(!check.monotone);
        assert_eq!(check.first_violation, Some((1.0, 2.0)));

        let zero = CapabilitySchedule::constant(0.0);
        assert!(verify_schedule_monotone(&zero, &[0.0, 5.0]).unwrap().monotone);

        assert!(matches!(
            verify_schedule_monotone(&zero, &[]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_examples() {
        let p = StatePartition::new(3, 2).unwrap();
        let (env, int) = split_internal(&[1.0, 2.0, 3.0], &p).unwrap();
        assert_eq!((env, int), (&[1.0, 2.0][..], &[3.0][..]));

        let p = StatePartition::new(1, 0).unwrap();
        let (env, int) = split_internal(&[7.0], &p).unwrap();
        assert!(env.is_empty());
        assert_eq!(int, &[7.0]);

        let p = StatePartition::new(2, 2).unwrap();
        let (env, int) = split_internal(&[1.0, 2.0], &p).unwrap();
        assert_eq!(env, &[1.0, 2.0]);
        assert!(int.is_empty());

        assert!(matches!(
            split_internal(&[1.0], &p),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn partition_rejects_bad_sizes() {
        assert!(StatePartition::new(0, 0).is_err());
        assert!(StatePartition::new(2, 3).is_err());
    }

    #[test]
    fn state_vector_rejects_nan() {
        assert!(StateVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(StateVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn first_time_reaching_linear() {
        let s = CapabilitySchedule::linear(0.0, 1.0);
        let t = s.first_time_reaching(1.0, 10.0, 1e-9).unwrap().unwrap();
        assert!((t - 1.0).abs() <= 1e-9);
        assert!(s.kappa_at(t).unwrap() >= 1.0);
        let flat = CapabilitySchedule::constant(0.5);
        assert_eq!(flat.first_time_reaching(1.0, 10.0, 1e-9).unwrap(), None);
        assert_eq!(flat.first_time_reaching_unbounded(1.0, 1e-9).unwrap(), None);

        let t = s.first_time_reaching_unbounded(40.0, 1e-9).unwrap().unwrap();
        assert!((t - 40.0).abs() <= 1e-9);
        let capped = CapabilitySchedule::Linear {
            kappa0: 0.0,
            rate: 1.0,
            cap: Some(0.5),
        };
        assert_eq!(capped.supremum(), 0.5);
        assert_eq!(capped.first_time_reaching_unbounded(1.0, 1e-9).unwrap(), None);
    }

    fn any_schedule() -> impl Strategy<Value = CapabilitySchedule> {
        prop_oneof![
            (0.0..10.0f64).prop_map(CapabilitySchedule::constant),
            (0.0..5.0f64, 0.0..5.0f64, proptest::option::of(0.0..20.0f64))
                .prop_map(|(kappa0, rate, cap)| CapabilitySchedule::Linear { kappa0, rate, cap }),
            (0.0..10.0f64, 0.0..5.0f64, -5.0..5.0f64).prop_map(|(ceiling, steepness, midpoint)| {
                CapabilitySchedule::Logistic {
                    ceiling,
                    steepness,
                    midpoint,
                }
            }),
            proptest::collection::vec((0.01..2.0f64, 0.0..2.0f64), 1..6).prop_map(|steps| {
                let (mut t, mut k) = (0.0, 0.0);
                let knots = steps
                    .into_iter()
                    .map(|(dt, dk)| {
                        t += dt;
                        k += dk;
                        [t, k]
                    })
                    .collect();
                CapabilitySchedule::PiecewiseLinear { knots }
            }),
        ]
    }

    proptest! {
        #[test]
        fn schedules_are_non_decreasing(s in any_schedule(), a in 0.0..50.0f64, b in 0.0..50.0f64) {
            let (t1, t2) = if a < b { (a, b) } else { (b, a) };
            let k1 = s.kappa_at(t1).unwrap();
            let k2 = s.kappa_at(t2).unwrap();
            prop_assert!(k1 >= 0.0);
            prop_assert!(k2 >= k1 - MONOTONE_EPS);
        }

        #[test]
        fn kappa_is_deterministic(s in any_schedule(), t in 0.0..50.0f64) {
            prop_assert_eq!(s.kappa_at(t).unwrap().to_bits(), s.kappa_at(t).unwrap().to_bits());
        }

        #[test]
        fn split_reconcatenates(v in proptest::collection::vec(-10.0..10.0f64, 1..8), frac in 0.0..=1.0f64) {
            let n = v.len();
            let n_env = ((n as f64) * frac).floor() as usize;
            let p = StatePartition::new(n, n_env).unwrap();
            let (env, int) = split_internal(&v, &p).unwrap();
            let joined: Vec<f64> = env.iter().chain(int).copied().collect();
            prop_assert_eq!(joined, v);
        }
    }
}
