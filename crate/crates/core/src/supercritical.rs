//! Boundary control-authority gap: margins on Γ, the threshold κ* and the
//! time T_κ it is reached, and the outward-normal certificate that follows.

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::json;

use crate::certificate::{CheckId, Certificate, MarginSample, OutwardSample, Verdict, STRICTNESS_EPS};
use crate::channels::{check_h2_monotone, endogenous_effect};
use crate::error::{Error, Result};
use crate::policies::restoring_optimal_control;
use crate::safe_set::{DriftBound, BOUNDARY_BAND, GRADIENT_FLOOR};
use crate::scenario::{linspace, Scenario};

/// Width at which κ* bisection stops.
pub const KAPPA_TOL: f64 = 1e-6;
/// Time tolerance for locating T_κ on the schedule.
pub const T_KAPPA_TOL: f64 = 1e-9;
/// Points used to spot-check monotonicity of the margin over a bracket.
const MONOTONE_PROBE_POINTS: usize = 33;

fn check_gamma_point(sc: &Scenario, x_b: &DVector<f64>) -> Result<DVector<f64>> {
    if !sc.gamma.contains(x_b) {
        return Err(Error::Precondition(format!(
            "{:?} is not in the boundary region ({})",
            x_b.as_slice(),
            sc.gamma.description
        )));
    }
    sc.safe_set.outward_normal(x_b)
}

/// `⟨G·h(x_b, κ), n(x_b)⟩ − (U_max + M_f)`.
pub fn a2_margin(sc: &Scenario, drift_bound: &DriftBound, x_b: &DVector<f64>, kappa: f64) -> Result<MarginSample> {
    let n = check_gamma_point(sc, x_b)?;
    let outward = endogenous_effect(&sc.endogenous, x_b, kappa)?.dot(&n);
    Ok(MarginSample::new(
        x_b.as_slice().to_vec(),
        kappa,
        sc.u_max + drift_bound.value,
        outward,
    ))
}

fn margins_at(sc: &Scenario, db: &DriftBound, samples: &[DVector<f64>], kappa: f64) -> Result<Vec<MarginSample>> {
    samples.par_iter().map(|x| a2_margin(sc, db, x, kappa)).collect()
}

/// Minimum margin over the samples at one capability level, with its index.
pub fn min_margin(sc: &Scenario, db: &DriftBound, samples: &[DVector<f64>], kappa: f64) -> Result<(f64, usize)> {
    let margins = margins_at(sc, db, samples, kappa)?;
    let mut best = (f64::INFINITY, 0);
    for (i, m) in margins.iter().enumerate() {
        if m.margin < best.0 {
            best = (m.margin, i);
        }
    }
    Ok(best)
}

fn common_parameters(c: &mut Certificate, sc: &Scenario, db: &DriftBound, samples: usize) {
    c.param("u_max", sc.u_max)
        .param("drift_bound", db.value)
        .param("drift_bound_method", serde_json::to_value(db.method).unwrap_or_default())
        .param("drift_bound_samples", db.sample_count)
        .param("drift_safety_factor", db.safety_factor)
        .param("gamma_samples", samples)
        .param("gamma", sc.gamma.description.clone())
        .param("boundary_band", BOUNDARY_BAND)
        .param("gradient_floor", GRADIENT_FLOOR)
        .param("seed", sc.numerics.seed);
    for d in sc.safe_set.declarations() {
        c.declare(d);
    }
}

/// Checks the gap at every `(sample, κ)` pair of a finite grid.
pub fn certify_a2(
    sc: &Scenario,
    drift_bound: &DriftBound,
    kappa_grid: &[f64],
    gamma_samples: &[DVector<f64>],
) -> Result<Certificate> {
    if gamma_samples.is_empty() {
        return Err(Error::Config("A2 certification needs at least one boundary sample".into()));
    }
    if kappa_grid.is_empty() {
        return Err(Error::Config("A2 certification needs a capability grid".into()));
    }
    let per_kappa: Vec<Vec<MarginSample>> = kappa_grid
        .iter()
        .map(|&k| margins_at(sc, drift_bound, gamma_samples, k))
        .collect::<Result<_>>()?;

    // margin should not decrease with κ at any sample
    let monotone = (0..gamma_samples.len()).all(|i| {
        per_kappa
            .windows(2)
            .all(|w| w[1][i].margin >= w[0][i].margin - 1e-12 * w[0][i].margin.abs().max(1.0))
    });

    let margins: Vec<MarginSample> = per_kappa.into_iter().flatten().collect();
    let worst = margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
        .map(|(i, m)| (i, m.clone()))
        .expect("non-empty");

    let mut c = Certificate::from_margins(
        CheckId::A2,
        margins,
        format!(
            "min margin {:.6e} at kappa = {} over {} boundary samples x {} capability levels",
            worst.1.margin,
            worst.1.kappa,
            gamma_samples.len(),
            kappa_grid.len()
        ),
    );
    common_parameters(&mut c, sc, drift_bound, gamma_samples.len());
    c.param("kappa_grid", kappa_grid.to_vec());
    c.evidence("min_margin", worst.1.margin)
        .evidence("min_margin_kappa", worst.1.kappa)
        .evidence("min_margin_point", worst.1.x_b.clone())
        .evidence("margin_monotone_in_kappa", monotone);
    c.caveat("'for all t >= T_kappa' is checked on a finite capability grid (finite-grid surrogate)")
        .caveat("'positive surface measure' of the boundary region is replaced by: the sampler found at least one point");
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub kappa_star: f64,
    /// First time in `[0, horizon]` with κ(t) ≥ κ*.
    pub t_kappa: Option<f64>,
    /// First time in `[0, ∞)` with κ(t) ≥ κ*.
    pub t_kappa_unbounded: Option<f64>,
    pub bracket: [f64; 2],
    pub iterations: usize,
    pub margin_monotone_on_bracket: bool,
}

/// Bisection on `κ ↦ min_Γ a2_margin(κ)` over a sign-changing bracket.
pub fn find_kappa_star(
    sc: &Scenario,
    drift_bound: &DriftBound,
    gamma_samples: &[DVector<f64>],
    bracket: [f64; 2],
) -> Result<Threshold> {
    let [mut lo, mut hi] = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Bracket(format!("invalid bracket [{lo}, {hi}]")));
    }
    if gamma_samples.is_empty() {
        return Err(Error::Config("threshold search needs boundary samples".into()));
    }
    let probe = linspace(lo, hi, MONOTONE_PROBE_POINTS);
    let h2 = check_h2_monotone(&sc.endogenous, gamma_samples, &probe)?;
    if !h2.holds {
        return Err(Error::Precondition(format!(
            "endogenous channel fails H2 on the bracket grid at {:?}",
            h2.first_violation
        )));
    }
    let m_lo = min_margin(sc, drift_bound, gamma_samples, lo)?.0;
    let m_hi = min_margin(sc, drift_bound, gamma_samples, hi)?.0;
    if !(m_lo <= 0.0 && m_hi > 0.0) {
        return Err(Error::Bracket(format!(
            "min margin does not change sign on [{lo}, {hi}]: {m_lo:e} -> {m_hi:e}"
        )));
    }
    let probe_margins: Vec<f64> = probe
        .iter()
        .map(|&k| min_margin(sc, drift_bound, gamma_samples, k).map(|m| m.0))
        .collect::<Result<_>>()?;
    let monotone = probe_margins
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));

    let mut iterations = 0;
    while hi - lo > KAPPA_TOL {
        let mid = 0.5 * (lo + hi);
        if min_margin(sc, drift_bound, gamma_samples, mid)?.0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let kappa_star = hi;
    Ok(Threshold {
        kappa_star,
        t_kappa: sc
            .capability
            .first_time_reaching(kappa_star, sc.numerics.horizon, T_KAPPA_TOL)?,
        t_kappa_unbounded: sc.capability.first_time_reaching_unbounded(kappa_star, T_KAPPA_TOL)?,
        bracket,
        iterations,
        margin_monotone_on_bracket: monotone,
    })
}

/// Decomposes `⟨f + B·u + G·h, n⟩` at a boundary point.
pub fn outward_components(sc: &Scenario, x_b: &DVector<f64>, t: f64, u: &DVector<f64>) -> Result<OutwardSample> {
    let n = sc.safe_set.outward_normal(x_b)?;
    let kappa = sc.kappa(t)?;
    let drift_component = sc.drift.eval(x_b, t).dot(&n);
    let control_component = sc.control.apply(u).dot(&n);
    let endogenous_component = endogenous_effect(&sc.endogenous, x_b, kappa)?.dot(&n);
    Ok(OutwardSample {
        x_b: x_b.as_slice().to_vec(),
        t,
        kappa,
        drift_component,
        control_component,
        endogenous_component,
        total: drift_component + control_component + endogenous_component,
    })
}

/// Total outward normal velocity under the worst admissible control, at
/// every `(x_b, t)`. Requires a passed A2 certificate.
pub fn lemma1_certificate(
    sc: &Scenario,
    drift_bound: &DriftBound,
    a2: &Certificate,
    gamma_samples: &[DVector<f64>],
    t_grid: &[f64],
) -> Result<Certificate> {
    if a2.check != CheckId::A2 || !a2.passed() {
        return Err(Error::Ordering(
            "lemma 1 certificate requires a passed A2 certificate".into(),
        ));
    }
    if gamma_samples.is_empty() || t_grid.is_empty() {
        return Err(Error::Config("lemma 1 certificate needs boundary samples and a time grid".into()));
    }
    let pairs: Vec<(usize, f64)> = (0..gamma_samples.len())
        .flat_map(|i| t_grid.iter().map(move |&t| (i, t)))
        .collect();
    let outward: Vec<OutwardSample> = pairs
        .par_iter()
        .map(|&(i, t)| {
            let x = &gamma_samples[i];
            let n = sc.safe_set.outward_normal(x)?;
            let u = restoring_optimal_control(&sc.control, &n, sc.u_max)?;
            outward_components(sc, x, t, &u)
        })
        .collect::<Result<_>>()?;

    let bound = -sc.u_max - drift_bound.value;
    let chain_holds = outward
        .iter()
        .all(|o| o.drift_component + o.control_component >= bound - 1e-12);
    let pass = outward.iter().all(|o| o.total > STRICTNESS_EPS);
    let worst = outward
        .iter()
        .min_by(|a, b| a.total.total_cmp(&b.total))
        .cloned()
        .expect("non-empty");

    let mut c = Certificate::new(
        CheckId::Lemma1,
        if pass { Verdict::Pass } else { Verdict::Fail },
        format!(
            "min total outward normal velocity {:.6e} under the worst admissible control ({} points)",
            worst.total,
            outward.len()
        ),
    );
    common_parameters(&mut c, sc, drift_bound, gamma_samples.len());
    c.param("strictness_floor", STRICTNESS_EPS)
        .param("t_grid", t_grid.to_vec());
    c.evidence("min_outward", worst.total)
        .evidence("min_outward_point", worst.x_b.clone())
        .evidence("min_outward_time", worst.t)
        .evidence("drift_plus_control_lower_bound", bound)
        .evidence("drift_plus_control_bound_holds", chain_holds);
    c.caveat("worst-case control is the pointwise restoring-optimal control; the bound -U_max - M_f covers every admissible control");
    c.outward = outward;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// κ* is reached at `t_kappa` within the horizon.
    Supercritical { t_kappa: f64 },
    /// κ* is reached, but only after the horizon.
    HorizonBelowThreshold { t_kappa: f64 },
    /// The schedule never reaches κ*.
    NeverReached,
    /// No sign change of the margin in the bracket.
    NoThreshold(String),
}

#[derive(Debug, Clone)]
pub struct SupercriticalAnalysis {
    pub drift_bound: DriftBound,
    pub gamma_samples: Vec<DVector<f64>>,
    pub threshold: Option<Threshold>,
    pub regime: Regime,
    pub a2: Certificate,
}

impl SupercriticalAnalysis {
    pub fn t_kappa(&self) -> Option<f64> {
        match self.regime {
            Regime::Supercritical { t_kappa } => Some(t_kappa),
            _ => None,
        }
    }

    /// Time grid `[T_κ, horizon]` for lemma 1, if the regime is entered.
    pub fn lemma1_time_grid(&self, sc: &Scenario) -> Option<Vec<f64>> {
        self.t_kappa()
            .map(|t| linspace(t, sc.numerics.horizon, sc.numerics.t_grid_points))
    }
}

/// Threshold search followed by A2 certification over `[κ(T_κ), κ(horizon)]`.
pub fn analyze_supercritical(sc: &Scenario) -> Result<SupercriticalAnalysis> {
    let drift_bound = sc.drift_bound()?;
    let gamma_samples = sc.gamma_samples()?;
    let threshold = match find_kappa_star(sc, &drift_bound, &gamma_samples, sc.numerics.kappa_bracket) {
        Ok(t) => Some(t),
        Err(Error::Bracket(msg)) => {
            let mut a2 = Certificate::new(CheckId::A2, Verdict::Fail, format!("no threshold in bracket: {msg}"));
            common_parameters(&mut a2, sc, &drift_bound, gamma_samples.len());
            a2.param("kappa_bracket", sc.numerics.kappa_bracket.to_vec());
            return Ok(SupercriticalAnalysis {
                drift_bound,
                gamma_samples,
                threshold: None,
                regime: Regime::NoThreshold(msg),
                a2,
            });
        }
        Err(e) => return Err(e),
    };
    let th = threshold.expect("set above");
    let regime = match (th.t_kappa, th.t_kappa_unbounded) {
        (Some(t), _) => Regime::Supercritical { t_kappa: t },
        (None, Some(t)) => Regime::HorizonBelowThreshold { t_kappa: t },
        (None, None) => Regime::NeverReached,
    };
    let mut a2 = match &regime {
        Regime::Supercritical { t_kappa } => {
            let mut grid: Vec<f64> = linspace(*t_kappa, sc.numerics.horizon, sc.numerics.kappa_grid_points)
                .into_iter()
                .map(|t| sc.kappa(t))
                .collect::<Result<_>>()?;
            grid.dedup();
            certify_a2(sc, &drift_bound, &grid, &gamma_samples)?
        }
        Regime::HorizonBelowThreshold { t_kappa } => {
            let mut c = Certificate::new(
                CheckId::A2,
                Verdict::Fail,
                format!("kappa* = {} is reached at t = {t_kappa}, after the horizon", th.kappa_star),
            );
            common_parameters(&mut c, sc, &drift_bound, gamma_samples.len());
            c
        }
        _ => {
            let mut c = Certificate::new(
                CheckId::A2,
                Verdict::Fail,
                format!(
                    "capability schedule never reaches kappa* = {} (supremum {})",
                    th.kappa_star,
                    sc.capability.supremum()
                ),
            );
            common_parameters(&mut c, sc, &drift_bound, gamma_samples.len());
            c
        }
    };
    a2.evidence("kappa_star", th.kappa_star)
        .evidence("t_kappa", json!(th.t_kappa))
        .evidence("t_kappa_unbounded", json!(th.t_kappa_unbounded))
        .evidence("margin_monotone_on_bracket", th.margin_monotone_on_bracket);
    a2.param("kappa_bracket", th.bracket.to_vec())
        .param("kappa_tolerance", KAPPA_TOL)
        .param("t_kappa_tolerance", T_KAPPA_TOL);
    Ok(SupercriticalAnalysis {
        drift_bound,
        gamma_samples,
        threshold: Some(th),
        regime,
        a2,
    })
}
