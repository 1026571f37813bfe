//! The three velocity channels of the control-affine model
//! `ẋ = f(x,t) + B·u + G·h(x,κ)` and the admissibility probes for `h`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values at or below this (relative to the largest) are treated
/// as zero when extracting the column space of `B`.
const RANK_TOL: f64 = 1e-12;

/// Slack allowed when comparing `‖h‖` across adjacent capability levels.
pub const H2_EPS: f64 = 1e-12;

pub type DriftFn = Arc<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
pub type EffectFn = Arc<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Send + Sync>;

/// Autonomous drift `f(x, t)`.
#[derive(Clone)]
pub enum Drift {
    Zero { dim: usize },
    Linear { a: DMatrix<f64> },
    Custom { dim: usize, label: String, f: DriftFn },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero { dim } => write!(f, "Drift::Zero({dim})"),
            Drift::Linear { a } => write!(f, "Drift::Linear({:?})", a.as_slice()),
            Drift::Custom { dim, label, .. } => write!(f, "Drift::Custom({dim}, {label})"),
        }
    }
}

impl Drift {
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Config(format!(
                "drift matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Drift::Linear { a })
    }

    pub fn custom(dim: usize, label: impl Into<String>, f: DriftFn) -> Self {
        Drift::Custom {
            dim,
            label: label.into(),
            f,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Drift::Zero { dim } | Drift::Custom { dim, .. } => *dim,
            Drift::Linear { a } => a.nrows(),
        }
    }

    pub fn eval(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            Drift::Zero { dim } => DVector::zeros(*dim),
            Drift::Linear { a } => a * x,
            Drift::Custom { f, .. } => f(x, t),
        }
    }
}

/// External-control channel `B·u` with a precomputed orthonormal basis of
/// `range(B)` and the pseudo-inverse used to synthesize controls.
#[derive(Debug, Clone)]
pub struct ControlChannel {
    b: DMatrix<f64>,
    basis: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl ControlChannel {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.ncols() == 0 || b.nrows() == 0 {
            return Err(Error::Config("control matrix B needs at least one row and column".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("control matrix B has non-finite entries".into()));
        }
        let svd = b.clone().svd(true, true);
        let u = svd.u.as_ref().expect("svd computed with u");
        let smax = svd.singular_values.max();
        let rank_cols: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > RANK_TOL * smax.max(f64::MIN_POSITIVE))
            .map(|(i, _)| i)
            .collect();
        let basis = DMatrix::from_fn(b.nrows(), rank_cols.len(), |r, c| u[(r, rank_cols[c])]);
        let pinv = svd
            .pseudo_inverse(RANK_TOL * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Config(format!("pseudo-inverse of B failed: {e}")))?;
        Ok(Self { b, basis, pinv })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is a valid control matrix")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Orthonormal basis of `range(B)`, one column per direction.
    pub fn column_space_basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn state_dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.b * u
    }

    /// Orthogonal projection of `v` onto `range(B)`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// `‖B - P·B‖_F`; zero up to rounding when the basis spans `range(B)`.
    pub fn reconstruction_residual(&self) -> f64 {
        let pb = &self.basis * (self.basis.transpose() * &self.b);
        (&self.b - pb).norm()
    }
}

/// Built-in families for the endogenous effect `h(x, κ)`.
#[derive(Clone)]
pub enum EffectFamily {
    /// `κ·(x − center)`.
    RadialOutward { center: DVector<f64> },
    /// `κ·K·x`.
    LinearGain { gain: DMatrix<f64> },
    /// `κ·(target − x)`.
    TargetSeeking { target: DVector<f64> },
    /// Constant `rate` on the internal block, zero on the environment block.
    InternalDrift { n_env: usize, rate: DVector<f64> },
    /// User-supplied `h`; admissibility (H1/H2) is not guaranteed.
    Custom { k: usize, label: String, h: EffectFn },
}

impl fmt::Debug for EffectFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RadialOutward { center } => write!(f, "RadialOutward({:?})", center.as_slice()),
            Self::LinearGain { gain } => write!(f, "LinearGain({:?})", gain.as_slice()),
            Self::TargetSeeking { target } => write!(f, "TargetSeeking({:?})", target.as_slice()),
            Self::InternalDrift { n_env, rate } => {
                write!(f, "InternalDrift({n_env}, {:?})", rate.as_slice())
            }
            Self::Custom { k, label, .. } => write!(f, "Custom({k}, {label})"),
        }
    }
}

impl EffectFamily {
    pub fn output_dim(&self) -> usize {
        match self {
            Self::RadialOutward { center } => center.len(),
            Self::LinearGain { gain } => gain.nrows(),
            Self::TargetSeeking { target } => target.len(),
            Self::InternalDrift { n_env, rate } => n_env + rate.len(),
            Self::Custom { k, .. } => *k,
        }
    }

    fn input_dim(&self) -> Option<usize> {
        match self {
            Self::RadialOutward { center } => Some(center.len()),
            Self::LinearGain { gain } => Some(gain.ncols()),
            Self::TargetSeeking { target } => Some(target.len()),
            Self::InternalDrift { n_env, rate } => Some(n_env + rate.len()),
            Self::Custom { .. } => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, Self::Custom { .. })
    }

    pub fn eval(&self, x: &DVector<f64>, kappa: f64) -> DVector<f64> {
        match self {
            Self::RadialOutward { center } => (x - center) * kappa,
            Self::LinearGain { gain } => (gain * x) * kappa,
            Self::TargetSeeking { target } => (target - x) * kappa,
            Self::InternalDrift { n_env, rate } => {
                let mut out = DVector::zeros(n_env + rate.len());
                out.rows_mut(*n_env, rate.len()).copy_from(rate);
                out
            }
            Self::Custom { h, .. } => h(x, kappa),
        }
    }
}

/// Endogenous channel `G·h(x, κ)`.
#[derive(Debug, Clone)]
pub struct EndogenousChannel {
    g: DMatrix<f64>,
    h: EffectFamily,
}

impl EndogenousChannel {
    pub fn new(g: DMatrix<f64>, h: EffectFamily) -> Result<Self> {
        if g.ncols() != h.output_dim() {
            return Err(Error::Dimension {
                expected: h.output_dim(),
                actual: g.ncols(),
                context: "columns of G vs output of h",
            });
        }
        if let Some(n) = h.input_dim() {
            if n != g.nrows() {
                return Err(Error::Dimension {
                    expected: g.nrows(),
                    actual: n,
                    context: "input dimension of h vs rows of G",
                });
            }
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("matrix G has non-finite entries".into()));
        }
        Ok(Self { g, h })
    }

    /// `G = I` with the given family.
    pub fn with_identity(h: EffectFamily) -> Result<Self> {
        let k = h.output_dim();
        Self::new(DMatrix::identity(k, k), h)
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn family(&self) -> &EffectFamily {
        &self.h
    }

    pub fn state_dim(&self) -> usize {
        self.g.nrows()
    }

    /// Raw `h(x, κ)` without the `G` map.
    pub fn h(&self, x: &DVector<f64>, kappa: f64) -> DVector<f64> {
        self.h.eval(x, kappa)
    }
}

/// `G·h(x, κ)`.
pub fn endogenous_effect(c: &EndogenousChannel, x: &DVector<f64>, kappa: f64) -> Result<DVector<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::Domain(format!("capability must be >= 0, got {kappa}")));
    }
    if x.len() != c.state_dim() {
        return Err(Error::Dimension {
            expected: c.state_dim(),
            actual: x.len(),
            context: "endogenous_effect",
        });
    }
    let h = c.h(x, kappa);
    if h.len() != c.g.ncols() {
        return Err(Error::Dimension {
            expected: c.g.ncols(),
            actual: h.len(),
            context: "output of custom h",
        });
    }
    Ok(&c.g * h)
}

/// Right-hand side `f(x,t) + B·u + G·h(x,κ)`.
pub fn total_velocity(
    f: &Drift,
    b: &ControlChannel,
    c: &EndogenousChannel,
    x: &DVector<f64>,
    t: f64,
    u: &DVector<f64>,
    kappa: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    for (dim, context) in [
        (f.dim(), "drift dimension"),
        (b.state_dim(), "control channel rows"),
        (c.state_dim(), "endogenous channel rows"),
    ] {
        if dim != n {
            return Err(Error::Dimension {
                expected: n,
                actual: dim,
                context,
            });
        }
    }
    if u.len() != b.control_dim() {
        return Err(Error::Dimension {
            expected: b.control_dim(),
            actual: u.len(),
            context: "control input",
        });
    }
    let drift = f.eval(x, t);
    if drift.len() != n || drift.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField { channel: "drift" });
    }
    let control = b.apply(u);
    if control.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField { channel: "control" });
    }
    let endo = endogenous_effect(c, x, kappa)?;
    if endo.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField {
            channel: "endogenous",
        });
    }
    Ok(drift + control + endo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct H2Check {
    pub holds: bool,
    /// `(sample index, κ_i, κ_{i+1})` of the first decrease in `‖h‖`.
    pub first_violation: Option<(usize, f64, f64)>,
}

/// Checks that `κ ↦ ‖h(x, κ)‖` is non-decreasing on the grid for every sample.
pub fn check_h2_monotone(
    c: &EndogenousChannel,
    x_samples: &[DVector<f64>],
    kappa_grid: &[f64],
) -> Result<H2Check> {
    if kappa_grid.len() < 2 {
        return Err(Error::Config("H2 grid needs at least two capability levels".into()));
    }
    if kappa_grid.windows(2).any(|w| w[1] <= w[0]) || kappa_grid[0] < 0.0 {
        return Err(Error::Config("H2 grid must be increasing and non-negative".into()));
    }
    if x_samples.is_empty() {
        return Err(Error::Config("H2 check needs at least one state sample".into()));
    }
    for (i, x) in x_samples.iter().enumerate() {
        let mut prev = c.h(x, kappa_grid[0]).norm();
        for w in kappa_grid.windows(2) {
            let next = c.h(x, w[1]).norm();
            if next < prev - H2_EPS {
                return Ok(H2Check {
                    holds: false,
                    first_violation: Some((i, w[0], w[1])),
                });
            }
            prev = next;
        }
    }
    Ok(H2Check {
        holds: true,
        first_violation: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct H1Probe {
    pub max_variation: f64,
    /// State and capability where the largest variation was observed.
    pub location: Option<(Vec<f64>, f64)>,
    pub delta: f64,
}

impl H1Probe {
    /// True when the observed variation exceeds `ratio · δ`, i.e. the local
    /// difference quotient is implausibly large for a continuous `h`.
    pub fn flagged(&self, ratio: f64) -> bool {
        self.max_variation > ratio * self.delta
    }
}

/// Falsification probe for joint continuity of `h`: the largest
/// `‖h(p + δe) − h(p)‖` over samples `p = (x, κ)` and coordinate directions
/// `e` of the joint `(x, κ)` space.
pub fn probe_h1_continuity(
    c: &EndogenousChannel,
    x_samples: &[DVector<f64>],
    kappa_samples: &[f64],
    delta: f64,
) -> Result<H1Probe> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("probe radius must be > 0, got {delta}")));
    }
    let mut best = H1Probe {
        max_variation: 0.0,
        location: None,
        delta,
    };
    for x in x_samples {
        for &kappa in kappa_samples {
            let base = c.h(x, kappa);
            let mut consider = |value: DVector<f64>| {
                let v = (value - &base).norm();
                if best.location.is_none() || v > best.max_variation {
                    best.max_variation = v;
                    best.location = Some((x.as_slice().to_vec(), kappa));
                }
            };
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += delta;
                consider(c.h(&xp, kappa));
            }
            consider(c.h(x, kappa + delta));
        }
    }
    Ok(best)
}
