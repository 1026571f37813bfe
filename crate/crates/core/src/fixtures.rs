//! Canonical toy instances with known closed-form behavior.

use nalgebra::{DMatrix, DVector};

use crate::channels::{ControlChannel, Drift, EffectFamily, EndogenousChannel};
use crate::error::Result;
use crate::policies::{aggregate_policies, Policy};
use crate::safe_set::{BoundaryRegion, SafeSet};
use crate::scenario::{Numerics, Scenario};
use crate::state_model::{CapabilitySchedule, StatePartition};

/// Standard suite: zero, constant(−1), restoring-optimal and their aggregate.
pub fn standard_suite(u_max: f64, m: usize) -> Result<Vec<Policy>> {
    let zero = Policy::zero(u_max)?;
    let constant = Policy::constant(DVector::from_element(m, -1.0 / (m as f64).sqrt()), u_max)?;
    let restoring = Policy::restoring_optimal(u_max)?;
    let agg = aggregate_policies(vec![zero.clone(), constant.clone(), restoring.clone()])?;
    Ok(vec![restoring, zero, constant, agg])
}

/// `S = [−1, 1]`, `f = 0` with declared bound `m_f`, `B = 1`, `h = κ·x`.
/// The boundary gap is `κ − (u_max + m_f)`, so `κ* = u_max + m_f`.
pub fn golden_1d(u_max: f64, m_f: f64, capability: CapabilitySchedule) -> Result<Scenario> {
    Ok(Scenario {
        name: "golden-1d".into(),
        partition: StatePartition::new(1, 1)?,
        safe_set: SafeSet::ball(vec![0.0], 1.0)?,
        gamma: BoundaryRegion::full(),
        drift: Drift::Zero { dim: 1 },
        declared_drift_bound: Some(m_f),
        control: ControlChannel::identity(1),
        u_max,
        endogenous: EndogenousChannel::with_identity(EffectFamily::LinearGain {
            gain: DMatrix::identity(1, 1),
        })?,
        capability,
        initial_state: DVector::from_vec(vec![0.9]),
        policies: standard_suite(u_max, 1)?,
        phi: None,
        strategy: None,
        numerics: Numerics {
            horizon: 3.0,
            a3_candidates: vec![vec![0.9]],
            a3_candidate_count: 0,
            ..Numerics::default()
        },
    })
}

/// Unit disk, `f = 0` with declared bound `m_f`, `B = I₂`, `h = κ·x`.
pub fn disk_2d(u_max: f64, m_f: f64, capability: CapabilitySchedule) -> Result<Scenario> {
    Ok(Scenario {
        name: "disk-2d".into(),
        partition: StatePartition::new(2, 2)?,
        safe_set: SafeSet::ball(vec![0.0, 0.0], 1.0)?,
        gamma: BoundaryRegion::full(),
        drift: Drift::Zero { dim: 2 },
        declared_drift_bound: Some(m_f),
        control: ControlChannel::identity(2),
        u_max,
        endogenous: EndogenousChannel::with_identity(EffectFamily::RadialOutward {
            center: DVector::zeros(2),
        })?,
        capability,
        initial_state: DVector::from_vec(vec![0.6, 0.6]),
        policies: standard_suite(u_max, 2)?,
        phi: None,
        strategy: None,
        numerics: Numerics {
            horizon: 3.0,
            gamma_samples: 256,
            a3_candidates: vec![vec![0.6, 0.6]],
            a3_candidate_count: 0,
            ..Numerics::default()
        },
    })
}
