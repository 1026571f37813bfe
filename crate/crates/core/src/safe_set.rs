//! Implicit-surface safe sets `S = {x : g(x) ≤ 0}`, outward normals, the
//! boundary region Γ, boundary/interior sampling and the drift bound `M_f`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::Drift;
use crate::error::{Error, Result};
use crate::seed::{stream_rng, Stream};

/// Half-width of the band `|g| ≤ BOUNDARY_BAND` classified as boundary.
pub const BOUNDARY_BAND: f64 = 1e-9;
/// Gradients with norm at or below this are treated as vanishing.
pub const GRADIENT_FLOOR: f64 = 1e-9;
/// Tolerance on `|g|` accepted by [`SafeSet::outward_normal`].
pub const NORMAL_LEVEL_TOL: f64 = 1e-6;
/// Rejection-sampling attempt budget.
pub const SAMPLE_BUDGET: usize = 1_000_000;
/// Multiplier applied to the sampled sup of `‖f‖`.
pub const DRIFT_SAFETY_FACTOR: f64 = 1.1;

/// Built-in safe-set shapes, all compact with smooth boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SafeSetShape {
    /// `g(x) = ‖x − c‖² − r²`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `g(x) = Σ ((x_i − c_i)/a_i)² − 1`.
    Ellipsoid { center: Vec<f64>, axes: Vec<f64> },
    /// `g(x) = Σ ((x_i − c_i)/r)^p − 1` for even `p ≥ 2`; smooth box surrogate.
    PNormBall { center: Vec<f64>, radius: f64, p: u32 },
}

impl SafeSetShape {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } | Self::Ellipsoid { center, .. } | Self::PNormBall { center, .. } => {
                center.len()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
        match self {
            Self::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Config("ball needs a finite center and radius > 0".into()));
                }
            }
            Self::Ellipsoid { center, axes } => {
                if center.is_empty() || !finite(center) {
                    return Err(Error::Config("ellipsoid needs a finite, non-empty center".into()));
                }
                if axes.len() != center.len() {
                    return Err(Error::Dimension {
                        expected: center.len(),
                        actual: axes.len(),
                        context: "ellipsoid axes",
                    });
                }
                if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::Config("ellipsoid axes must be finite and > 0".into()));
                }
            }
            Self::PNormBall { center, radius, p } => {
                if center.is_empty() || !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Config("p-norm ball needs a finite center and radius > 0".into()));
                }
                if *p < 2 || p % 2 != 0 {
                    return Err(Error::Config(format!("p-norm exponent must be even and >= 2, got {p}")));
                }
            }
        }
        Ok(())
    }
}

pub type LevelFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type BoundaryDrawFn = Arc<dyn Fn(&mut dyn RngCore) -> DVector<f64> + Send + Sync>;

/// User-supplied smooth safe set. Compactness cannot be checked and is
/// carried as a declaration.
#[derive(Clone)]
pub struct CustomSafeSet {
    pub dim: usize,
    pub label: String,
    pub level: LevelFn,
    pub gradient: GradientFn,
    /// Draws one point on `∂S`.
    pub draw_boundary: BoundaryDrawFn,
    /// Axis-aligned box containing `S`, used for interior rejection sampling.
    pub bounding_box: (Vec<f64>, Vec<f64>),
    /// A point with `g < 0`.
    pub interior_point: Vec<f64>,
    pub compact_declared: bool,
}

#[derive(Clone)]
pub enum SafeSet {
    Builtin(SafeSetShape),
    Custom(CustomSafeSet),
}

impl fmt::Debug for SafeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafeSet::Builtin(s) => write!(f, "{s:?}"),
            SafeSet::Custom(c) => write!(f, "CustomSafeSet({}, {})", c.dim, c.label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

impl SafeSet {
    pub fn builtin(shape: SafeSetShape) -> Result<Self> {
        shape.validate()?;
        Ok(SafeSet::Builtin(shape))
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::builtin(SafeSetShape::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            SafeSet::Builtin(s) => s.dim(),
            SafeSet::Custom(c) => c.dim,
        }
    }

    /// Declarations that must be echoed in certificates.
    pub fn declarations(&self) -> Vec<String> {
        match self {
            SafeSet::Builtin(_) => vec![],
            SafeSet::Custom(c) => vec![format!(
                "custom safe set '{}' declared compact: {}",
                c.label, c.compact_declared
            )],
        }
    }

    fn check_dim(&self, x: &DVector<f64>, context: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
                context,
            });
        }
        Ok(())
    }

    /// `g(x)`: negative inside, zero on the boundary, positive outside.
    pub fn level(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x, "safe-set level")?;
        Ok(self.level_unchecked(x))
    }

    pub(crate) fn level_unchecked(&self, x: &DVector<f64>) -> f64 {
        match self {
            SafeSet::Builtin(SafeSetShape::Ball { center, radius }) => {
                let d2: f64 = x.iter().zip(center).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                d2 - radius * radius
            }
            SafeSet::Builtin(SafeSetShape::Ellipsoid { center, axes }) => {
                let s: f64 = x
                    .iter()
                    .zip(center)
                    .zip(axes)
                    .map(|((xi, ci), ai)| ((xi - ci) / ai).powi(2))
                    .sum();
                s - 1.0
            }
            SafeSet::Builtin(SafeSetShape::PNormBall { center, radius, p }) => {
                let s: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| ((xi - ci) / radius).powi(*p as i32))
                    .sum();
                s - 1.0
            }
            SafeSet::Custom(c) => (c.level)(x),
        }
    }

    /// Analytic `∇g(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x, "safe-set gradient")?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SafeSet::Builtin(SafeSetShape::Ball { center, .. }) => {
                DVector::from_iterator(x.len(), x.iter().zip(center).map(|(xi, ci)| 2.0 * (xi - ci)))
            }
            SafeSet::Builtin(SafeSetShape::Ellipsoid { center, axes }) => DVector::from_iterator(
                x.len(),
                x.iter()
                    .zip(center)
                    .zip(axes)
                    .map(|((xi, ci), ai)| 2.0 * (xi - ci) / (ai * ai)),
            ),
            SafeSet::Builtin(SafeSetShape::PNormBall { center, radius, p }) => {
                let p = *p as i32;
                DVector::from_iterator(
                    x.len(),
                    x.iter()
                        .zip(center)
                        .map(|(xi, ci)| p as f64 * ((xi - ci) / radius).powi(p - 1) / radius),
                )
            }
            SafeSet::Custom(c) => (c.gradient)(x),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> Result<Membership> {
        let g = self.level(x)?;
        Ok(classify_level(g))
    }

    /// Unit outward normal `∇g/‖∇g‖` at a (near-)boundary point.
    pub fn outward_normal(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.level(x)?;
        if g.abs() > NORMAL_LEVEL_TOL {
            return Err(Error::Domain(format!(
                "outward normal requested off the boundary (g = {g:e})"
            )));
        }
        self.normal_direction(x)
    }

    /// `∇g/‖∇g‖` at any point; the outward level-set direction. Used by
    /// policies that act at interior states.
    pub fn normal_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x, "normal direction")?;
        let grad = self.gradient_unchecked(x);
        let norm = grad.norm();
        if !(norm > GRADIENT_FLOOR) {
            return Err(Error::DegenerateNormal {
                point: x.as_slice().to_vec(),
                grad_norm: norm,
            });
        }
        Ok(grad / norm)
    }

    /// One point on `∂S`, or `None` if the draw failed the boundary band.
    fn draw_boundary(&self, rng: &mut dyn RngCore) -> Option<DVector<f64>> {
        let x = match self {
            SafeSet::Builtin(shape) => {
                let n = shape.dim();
                let d = gaussian_direction(n, rng)?;
                match shape {
                    SafeSetShape::Ball { center, radius } => {
                        let norm = d.norm();
                        DVector::from_iterator(n, center.iter().zip(d.iter()).map(|(c, di)| c + radius * di / norm))
                    }
                    SafeSetShape::Ellipsoid { center, axes } => {
                        let norm = d.norm();
                        DVector::from_iterator(
                            n,
                            center
                                .iter()
                                .zip(axes)
                                .zip(d.iter())
                                .map(|((c, a), di)| c + a * di / norm),
                        )
                    }
                    SafeSetShape::PNormBall { center, radius, p } => {
                        let pn: f64 = d.iter().map(|di| di.abs().powi(*p as i32)).sum::<f64>().powf(1.0 / *p as f64);
                        DVector::from_iterator(n, center.iter().zip(d.iter()).map(|(c, di)| c + radius * di / pn))
                    }
                }
            }
            SafeSet::Custom(c) => (c.draw_boundary)(rng),
        };
        let g = self.level_unchecked(&x);
        (g.abs() <= BOUNDARY_BAND && x.iter().all(|v| v.is_finite())).then_some(x)
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SafeSet::Builtin(SafeSetShape::Ball { center, radius })
            | SafeSet::Builtin(SafeSetShape::PNormBall { center, radius, .. }) => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SafeSet::Builtin(SafeSetShape::Ellipsoid { center, axes }) => (
                center.iter().zip(axes).map(|(c, a)| c - a).collect(),
                center.iter().zip(axes).map(|(c, a)| c + a).collect(),
            ),
            SafeSet::Custom(c) => c.bounding_box.clone(),
        }
    }

    /// A canonical interior point (the center for built-in shapes).
    pub fn interior_point(&self) -> DVector<f64> {
        match self {
            SafeSet::Builtin(SafeSetShape::Ball { center, .. })
            | SafeSet::Builtin(SafeSetShape::Ellipsoid { center, .. })
            | SafeSet::Builtin(SafeSetShape::PNormBall { center, .. }) => DVector::from_column_slice(center),
            SafeSet::Custom(c) => DVector::from_column_slice(&c.interior_point),
        }
    }

    /// Uniform samples from `int(S)` by rejection from the bounding box.
    pub fn sample_interior(&self, count: usize, rng: &mut dyn RngCore) -> Result<Vec<DVector<f64>>> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            if attempts >= SAMPLE_BUDGET {
                return Err(Error::EmptyRegion {
                    requested: count,
                    accepted: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let x = DVector::from_iterator(
                lo.len(),
                lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()),
            );
            if self.level_unchecked(&x) < -BOUNDARY_BAND {
                out.push(x);
            }
        }
        Ok(out)
    }
}

pub fn classify_level(g: f64) -> Membership {
    if g.abs() <= BOUNDARY_BAND {
        Membership::Boundary
    } else if g < 0.0 {
        Membership::Interior
    } else {
        Membership::Exterior
    }
}

fn gaussian_direction(n: usize, rng: &mut dyn RngCore) -> Option<DVector<f64>> {
    let d = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    (d.norm() > 1e-12).then_some(d)
}

pub type GammaFn = Arc<dyn Fn(&DVector<f64>) -> bool + Send + Sync>;

/// Serializable boundary-region predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaShape {
    /// All of `∂S`.
    Full,
    /// Boundary points with `⟨direction, x⟩ > offset`.
    Halfspace { direction: Vec<f64>, offset: f64 },
}

#[derive(Clone)]
pub enum GammaPredicate {
    Builtin(GammaShape),
    Custom(GammaFn),
}

/// Boundary region `Γ ⊆ ∂S` where the supercritical gap is asserted.
#[derive(Clone)]
pub struct BoundaryRegion {
    pub predicate: GammaPredicate,
    pub description: String,
}

impl fmt::Debug for BoundaryRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.predicate {
            GammaPredicate::Builtin(s) => write!(f, "BoundaryRegion({s:?})"),
            GammaPredicate::Custom(_) => write!(f, "BoundaryRegion(custom: {})", self.description),
        }
    }
}

impl BoundaryRegion {
    pub fn full() -> Self {
        Self::from_shape(GammaShape::Full)
    }

    pub fn halfspace(direction: Vec<f64>, offset: f64) -> Self {
        Self::from_shape(GammaShape::Halfspace { direction, offset })
    }

    pub fn from_shape(shape: GammaShape) -> Self {
        let description = match &shape {
            GammaShape::Full => "entire boundary".to_string(),
            GammaShape::Halfspace { direction, offset } => {
                format!("boundary points with <{direction:?}, x> > {offset}")
            }
        };
        Self {
            predicate: GammaPredicate::Builtin(shape),
            description,
        }
    }

    pub fn custom(description: impl Into<String>, f: GammaFn) -> Self {
        Self {
            predicate: GammaPredicate::Custom(f),
            description: description.into(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match &self.predicate {
            GammaPredicate::Builtin(GammaShape::Full) => true,
            GammaPredicate::Builtin(GammaShape::Halfspace { direction, offset }) => {
                direction.iter().zip(x.iter()).map(|(d, xi)| d * xi).sum::<f64>() > *offset
            }
            GammaPredicate::Custom(f) => f(x),
        }
    }
}

/// Exactly `count` boundary points satisfying Γ, deterministic in `seed`.
pub fn sample_boundary_region(
    s: &SafeSet,
    gamma: &BoundaryRegion,
    count: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    if count == 0 {
        return Err(Error::Config("boundary sample count must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, Stream::BoundarySamples);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= SAMPLE_BUDGET {
            return Err(Error::EmptyRegion {
                requested: count,
                accepted: out.len(),
                attempts,
            });
        }
        attempts += 1;
        if let Some(x) = s.draw_boundary(&mut rng) {
            if gamma.contains(&x) {
                out.push(x);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Declared,
    Sampled,
}

/// Upper bound `M_f` on `‖f(x,t)‖` over `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBound {
    pub value: f64,
    pub method: BoundMethod,
    pub sample_count: usize,
    pub safety_factor: f64,
}

impl DriftBound {
    pub fn declared(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Config(format!("declared drift bound must be finite and >= 0, got {value}")));
        }
        Ok(Self {
            value,
            method: BoundMethod::Declared,
            sample_count: 0,
            safety_factor: 1.0,
        })
    }
}

fn max_drift_norm(f: &Drift, samples: &[DVector<f64>], time_grid: &[f64]) -> Result<f64> {
    let mut sup = 0.0_f64;
    for x in samples {
        for &t in time_grid {
            let v = f.eval(x, t);
            let n = v.norm();
            if !n.is_finite() {
                return Err(Error::InvalidDrift {
                    point: x.as_slice().to_vec(),
                });
            }
            sup = sup.max(n);
        }
    }
    Ok(sup)
}

/// `1.1 × max ‖f(x,t)‖` over seeded interior samples × the time grid.
pub fn estimate_drift_bound(
    f: &Drift,
    s: &SafeSet,
    time_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<DriftBound> {
    if sample_count == 0 {
        return Err(Error::Config("drift-bound sample count must be >= 1".into()));
    }
    if time_grid.is_empty() {
        return Err(Error::Config("drift-bound time grid is empty".into()));
    }
    let mut rng = stream_rng(seed, Stream::DriftEstimate);
    let samples = s.sample_interior(sample_count, &mut rng)?;
    let sup = max_drift_norm(f, &samples, time_grid)?;
    Ok(DriftBound {
        value: DRIFT_SAFETY_FACTOR * sup,
        method: BoundMethod::Sampled,
        sample_count,
        safety_factor: DRIFT_SAFETY_FACTOR,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftAudit {
    pub samples: usize,
    pub violations: usize,
    pub worst_norm: f64,
}

impl DriftAudit {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.samples.max(1) as f64
    }
}

/// Counts fresh interior samples whose drift norm exceeds `bound`.
pub fn audit_drift_bound(
    f: &Drift,
    s: &SafeSet,
    bound: &DriftBound,
    time_grid: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<DriftAudit> {
    let mut rng = stream_rng(seed, Stream::DriftAudit);
    let samples = s.sample_interior(sample_count, &mut rng)?;
    let mut audit = DriftAudit {
        samples: 0,
        violations: 0,
        worst_norm: 0.0,
    };
    for x in &samples {
        for &t in time_grid {
            let n = f.eval(x, t).norm();
            if !n.is_finite() {
                return Err(Error::InvalidDrift {
                    point: x.as_slice().to_vec(),
                });
            }
            audit.samples += 1;
            audit.worst_norm = audit.worst_norm.max(n);
            if n > bound.value {
                audit.violations += 1;
            }
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn builtin_shapes() -> Vec<SafeSet> {
        vec![
            SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            SafeSet::ball(vec![0.5, -1.0, 2.0], 0.7).unwrap(),
            SafeSet::builtin(SafeSetShape::Ellipsoid {
                center: vec![0.0, 0.0],
                axes: vec![1.0, 2.0],
            })
            .unwrap(),
            SafeSet::builtin(SafeSetShape::PNormBall {
                center: vec![0.0, 0.0],
                radius: 1.0,
                p: 4,
            })
            .unwrap(),
            SafeSet::builtin(SafeSetShape::PNormBall {
                center: vec![1.0, 0.0, -1.0],
                radius: 2.0,
                p: 8,
            })
            .unwrap(),
        ]
    }

    #[test]
    fn level_examples() {
        let interval = SafeSet::ball(vec![0.0], 1.0).unwrap();
        assert_eq!(interval.level(&v(&[0.5])).unwrap(), -0.75);
        assert_eq!(interval.level(&v(&[1.0])).unwrap(), 0.0);
        let ell = SafeSet::builtin(SafeSetShape::Ellipsoid {
            center: vec![0.0, 0.0],
            axes: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(ell.level(&v(&[0.0, 2.0])).unwrap(), 0.0);
        assert!(matches!(interval.level(&v(&[0.0, 1.0])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn contains_examples() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(disk.contains(&v(&[0.0, 0.0])).unwrap(), Membership::Interior);
        assert_eq!(disk.contains(&v(&[1.0, 0.0])).unwrap(), Membership::Boundary);
        assert_eq!(disk.contains(&v(&[2.0, 0.0])).unwrap(), Membership::Exterior);
    }

    #[test]
    fn normal_examples() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(disk.outward_normal(&v(&[0.0, 1.0])).unwrap(), v(&[0.0, 1.0]));
        let interval = SafeSet::ball(vec![0.0], 1.0).unwrap();
        assert_eq!(interval.outward_normal(&v(&[1.0])).unwrap(), v(&[1.0]));
        let ell = SafeSet::builtin(SafeSetShape::Ellipsoid {
            center: vec![0.0, 0.0],
            axes: vec![1.0, 2.0],
        })
        .unwrap();
        // analytic gradient (2, 0) normalized
        assert_eq!(ell.outward_normal(&v(&[1.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn degenerate_normal() {
        let flat = SafeSet::Custom(CustomSafeSet {
            dim: 1,
            label: "cusp".into(),
            level: Arc::new(|x| x[0].powi(3)),
            gradient: Arc::new(|x| v(&[3.0 * x[0] * x[0]])),
            draw_boundary: Arc::new(|_| v(&[0.0])),
            bounding_box: (vec![-1.0], vec![1.0]),
            interior_point: vec![-0.5],
            compact_declared: false,
        });
        assert!(matches!(
            flat.outward_normal(&v(&[0.0])),
            Err(Error::DegenerateNormal { .. })
        ));
    }

    #[test]
    fn boundary_sampling_examples() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let pts = sample_boundary_region(&disk, &BoundaryRegion::full(), 4, 1).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((p.norm() - 1.0).abs() <= 1e-9);
        }

        let interval = SafeSet::ball(vec![0.0], 1.0).unwrap();
        let pos = BoundaryRegion::halfspace(vec![1.0], 0.0);
        let pts = sample_boundary_region(&interval, &pos, 3, 1).unwrap();
        assert_eq!(pts, vec![v(&[1.0]); 3]);

        let never = BoundaryRegion::halfspace(vec![0.0, 1.0], 2.0);
        assert!(matches!(
            sample_boundary_region(&disk, &never, 1, 1),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn sampler_is_deterministic() {
        for s in builtin_shapes() {
            let a = sample_boundary_region(&s, &BoundaryRegion::full(), 50, 99).unwrap();
            let b = sample_boundary_region(&s, &BoundaryRegion::full(), 50, 99).unwrap();
            let bits = |v: &[DVector<f64>]| -> Vec<u64> { v.iter().flat_map(|x| x.iter().map(|c| c.to_bits())).collect() };
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn normals_match_finite_differences() {
        let h = 1e-6;
        for s in builtin_shapes() {
            let pts = sample_boundary_region(&s, &BoundaryRegion::full(), 100, 3).unwrap();
            for p in pts {
                let g = s.level(&p).unwrap();
                assert!(g.abs() <= BOUNDARY_BAND);
                let grad = s.gradient(&p).unwrap();
                assert!(grad.norm() > GRADIENT_FLOOR);
                let fd = DVector::from_iterator(
                    p.len(),
                    (0..p.len()).map(|i| {
                        let mut a = p.clone();
                        let mut b = p.clone();
                        a[i] += h;
                        b[i] -= h;
                        (s.level(&a).unwrap() - s.level(&b).unwrap()) / (2.0 * h)
                    }),
                );
                let n = s.outward_normal(&p).unwrap();
                assert!((n.norm() - 1.0).abs() <= 1e-12);
                let fd_n = &fd / fd.norm();
                assert!((&n - &fd_n).norm() <= 1e-4, "{s:?} at {p:?}: {n:?} vs {fd_n:?}");
                assert!(s.level(&(&p + &n * 1e-6)).unwrap() > g);
            }
        }
    }

    #[test]
    fn interior_samples_are_interior() {
        let mut rng = stream_rng(5, Stream::InteriorSamples);
        for s in builtin_shapes() {
            for x in s.sample_interior(200, &mut rng).unwrap() {
                assert_eq!(s.contains(&x).unwrap(), Membership::Interior);
            }
        }
    }

    #[test]
    fn drift_bound_examples() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let zero = Drift::Zero { dim: 2 };
        let b = estimate_drift_bound(&zero, &disk, &[0.0], 100, 1).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.method, BoundMethod::Sampled);

        // Dense polar-grid oracle for sup ‖-0.3 x‖ on the closed unit disk.
        let oracle_sup = (0..=200)
            .flat_map(|i| (0..64).map(move |j| (i as f64 / 200.0, j as f64 * std::f64::consts::TAU / 64.0)))
            .map(|(r, a)| 0.3 * (r * a.cos()).hypot(r * a.sin()))
            .fold(0.0_f64, f64::max);
        let contraction = Drift::linear(DMatrix::identity(2, 2) * -0.3).unwrap();
        let b = estimate_drift_bound(&contraction, &disk, &[0.0], 4000, 1).unwrap();
        assert_relative_eq!(b.value, 1.1 * oracle_sup, max_relative = 0.02);

        let d = DriftBound::declared(0.5).unwrap();
        assert_eq!(d.value, 0.5);
        assert_eq!(d.method, BoundMethod::Declared);
    }

    #[test]
    fn drift_bound_rejects_nonfinite() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let bad = Drift::custom(2, "nan", Arc::new(|_, _| DVector::from_element(2, f64::NAN)));
        assert!(matches!(
            estimate_drift_bound(&bad, &disk, &[0.0], 10, 1),
            Err(Error::InvalidDrift { .. })
        ));
    }

    #[test]
    fn sampled_bound_dominates_fresh_samples() {
        let disk = SafeSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let f = Drift::custom(
            2,
            "rotating",
            Arc::new(|x, t| DVector::from_column_slice(&[-x[1] * (1.0 + 0.1 * t.sin()), x[0]])),
        );
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
        let bound = estimate_drift_bound(&f, &disk, &grid, 500, 11).unwrap();
        let audit = audit_drift_bound(&f, &disk, &bound, &grid, 1000, 11).unwrap();
        assert_eq!(audit.samples, 5000);
        assert!(audit.violation_rate() <= 0.01, "{audit:?}");
    }
}
