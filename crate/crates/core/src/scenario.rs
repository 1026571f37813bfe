//! A fully resolved problem instance.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channels::{ControlChannel, Drift, EndogenousChannel};
use crate::error::{Error, Result};
use crate::intrinsic::{PhiPredicate, StrategyDeclaration};
use crate::policies::Policy;
use crate::safe_set::{estimate_drift_bound, sample_boundary_region, BoundaryRegion, DriftBound, SafeSet};
use crate::state_model::{CapabilitySchedule, StatePartition};

/// Numerical settings; every field has a default so scenario files only
/// need to override what they care about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Boundary samples drawn from Γ for margin checks.
    pub gamma_samples: usize,
    /// Interior samples for the sampled drift bound.
    pub drift_samples: usize,
    pub drift_time_points: usize,
    pub kappa_bracket: [f64; 2],
    pub kappa_grid_points: usize,
    pub t_grid_points: usize,
    /// Explicit initial-condition candidates for the reachability search,
    /// tried before any sampled candidates.
    pub a3_candidates: Vec<Vec<f64>>,
    pub a3_candidate_count: usize,
    /// Steps integrated past a contact to confirm the exit.
    pub confirm_steps: usize,
    pub h1_delta: f64,
    pub h1_flag_ratio: f64,
    pub probe_samples: usize,
    pub policy_audit_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r4_levels: Option<Vec<f64>>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            seed: 0,
            gamma_samples: 64,
            drift_samples: 1000,
            drift_time_points: 11,
            kappa_bracket: [0.0, 1000.0],
            kappa_grid_points: 16,
            t_grid_points: 16,
            a3_candidates: vec![],
            a3_candidate_count: 16,
            confirm_steps: 10,
            h1_delta: 1e-6,
            h1_flag_ratio: 1e4,
            probe_samples: 32,
            policy_audit_samples: 1000,
            r4_levels: None,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        let [lo, hi] = self.kappa_bracket;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::Config("kappa_bracket must satisfy 0 <= lo < hi".into()));
        }
        if self.gamma_samples == 0 || self.drift_samples == 0 || self.probe_samples == 0 {
            return Err(Error::Config("sample counts must be >= 1".into()));
        }
        if self.kappa_grid_points < 2 || self.t_grid_points < 2 || self.drift_time_points < 1 {
            return Err(Error::Config("grids need at least two points".into()));
        }
        if !(self.h1_delta > 0.0) || !(self.h1_flag_ratio > 0.0) {
            return Err(Error::Config("h1_delta and h1_flag_ratio must be > 0".into()));
        }
        Ok(())
    }
}

/// `count` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![a],
        _ => (0..count)
            .map(|i| if i == count - 1 { b } else { a + (b - a) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub partition: StatePartition,
    pub safe_set: SafeSet,
    pub gamma: BoundaryRegion,
    pub drift: Drift,
    /// Declared `M_f`; sampled from the drift when absent.
    pub declared_drift_bound: Option<f64>,
    pub control: ControlChannel,
    pub u_max: f64,
    pub endogenous: EndogenousChannel,
    pub capability: CapabilitySchedule,
    pub initial_state: DVector<f64>,
    /// Policy suite; the first entry is the default policy.
    pub policies: Vec<Policy>,
    pub phi: Option<PhiPredicate>,
    pub strategy: Option<StrategyDeclaration>,
    pub numerics: Numerics,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.partition.n()
    }

    /// Cross-checks dimensions of every component.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.dim();
        let dims = [
            (self.safe_set.dim(), "safe set"),
            (self.drift.dim(), "drift"),
            (self.control.state_dim(), "control rows"),
            (self.endogenous.state_dim(), "endogenous rows"),
            (self.initial_state.len(), "initial state"),
        ];
        for (d, context) in dims {
            if d != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: d,
                    context,
                });
            }
        }
        if self.policies.is_empty() {
            return Err(Error::Config("scenario needs at least one policy".into()));
        }
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::Config("u_max must be finite and > 0".into()));
        }
        self.numerics.validate()
    }

    pub fn kappa(&self, t: f64) -> Result<f64> {
        self.capability.kappa_at(t)
    }

    pub fn drift_bound(&self) -> Result<DriftBound> {
        match self.declared_drift_bound {
            Some(v) => DriftBound::declared(v),
            None => estimate_drift_bound(
                &self.drift,
                &self.safe_set,
                &linspace(0.0, self.numerics.horizon, self.numerics.drift_time_points),
                self.numerics.drift_samples,
                self.numerics.seed,
            ),
        }
    }

    pub fn gamma_samples(&self) -> Result<Vec<DVector<f64>>> {
        sample_boundary_region(&self.safe_set, &self.gamma, self.numerics.gamma_samples, self.numerics.seed)
    }

    pub fn default_policy(&self) -> &Policy {
        &self.policies[0]
    }

    pub fn policy(&self, id: &str) -> Result<&Policy> {
        self.policies
            .iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| Error::Config(format!("no policy with id '{id}'")))
    }

    pub fn with_u_max(&self, u_max: f64) -> Self {
        Self {
            u_max,
            ..self.clone()
        }
    }

    pub fn with_policies(&self, policies: Vec<Policy>) -> Self {
        Self {
            policies,
            ..self.clone()
        }
    }

    pub fn with_capability(&self, capability: CapabilitySchedule) -> Self {
        Self {
            capability,
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        let mut s = self.clone();
        s.numerics.horizon = horizon;
        s
    }

    /// Per-component digest used to show which parts of two scenarios differ.
    pub fn fingerprint(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("name", self.name.clone()),
            ("partition", format!("{:?}", self.partition)),
            ("safe_set", format!("{:?}", self.safe_set)),
            ("gamma", format!("{:?}", self.gamma)),
            ("drift", format!("{:?}/{:?}", self.drift, self.declared_drift_bound.map(f64::to_bits))),
            ("control", format!("{:?}/{}", self.control.matrix().as_slice(), self.u_max.to_bits())),
            ("endogenous", format!("{:?}", self.endogenous)),
            ("capability", format!("{:?}", self.capability)),
            ("initial_state", format!("{:?}", self.initial_state.iter().map(|v| v.to_bits()).collect::<Vec<_>>())),
            ("policy", format!("{:?}", self.policies)),
            ("phi", format!("{:?}", self.phi)),
            ("strategy", format!("{:?}", self.strategy)),
            ("numerics", format!("{:?}", self.numerics)),
        ])
    }
}

/// Keys whose fingerprint entries differ.
pub fn fingerprint_diff(a: &Scenario, b: &Scenario) -> Vec<&'static str> {
    let (fa, fb) = (a.fingerprint(), b.fingerprint());
    fa.iter().filter(|(k, v)| fb.get(*k) != Some(v)).map(|(k, _)| *k).collect()
}
