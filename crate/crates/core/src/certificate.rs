//! Outcome records for assumption, lemma and requirement checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Strictness floor interpreting strict inequalities in floating point.
pub const STRICTNESS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    A1,
    A2,
    A3,
    H1,
    H2,
    Lemma1,
    Theorem1,
    R1,
    R2,
    R3,
    R4,
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckId::A1 => "A1",
            CheckId::A2 => "A2",
            CheckId::A3 => "A3",
            CheckId::H1 => "H1",
            CheckId::H2 => "H2",
            CheckId::Lemma1 => "Lemma1",
            CheckId::Theorem1 => "Theorem1",
            CheckId::R1 => "R1",
            CheckId::R2 => "R2",
            CheckId::R3 => "R3",
            CheckId::R4 => "R4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotCheckable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotCheckable => "not-checkable",
        })
    }
}

/// One evaluation of the boundary gap `⟨G·h(x_b,κ), n(x_b)⟩ − (U_max + M_f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub x_b: Vec<f64>,
    pub kappa: f64,
    pub inward_authority: f64,
    pub outward_component: f64,
    pub margin: f64,
}

impl MarginSample {
    pub fn new(x_b: Vec<f64>, kappa: f64, inward_authority: f64, outward_component: f64) -> Self {
        Self {
            x_b,
            kappa,
            inward_authority,
            outward_component,
            margin: outward_component - inward_authority,
        }
    }

    pub fn is_consistent(&self) -> bool {
        ((self.outward_component - self.inward_authority) - self.margin).abs() <= 1e-12
    }
}

/// Decomposition of the total outward normal velocity at a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutwardSample {
    pub x_b: Vec<f64>,
    pub t: f64,
    pub kappa: f64,
    pub drift_component: f64,
    pub control_component: f64,
    pub endogenous_component: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub check: CheckId,
    /// Distinguishes several certificates for the same check (e.g. one A3
    /// certificate per policy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub verdict: Verdict,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub margins: Vec<MarginSample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outward: Vec<OutwardSample>,
    #[serde(default)]
    pub evidence: BTreeMap<String, Value>,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default)]
    pub declarations: Vec<String>,
    #[serde(default)]
    pub caveats: Vec<String>,
}

impl Certificate {
    pub fn new(check: CheckId, verdict: Verdict, summary: impl Into<String>) -> Self {
        Self {
            check,
            subject: None,
            verdict,
            summary: summary.into(),
            margins: vec![],
            outward: vec![],
            evidence: BTreeMap::new(),
            parameters: BTreeMap::new(),
            declarations: vec![],
            caveats: vec![],
        }
    }

    /// Certificate whose verdict is pass iff every margin exceeds the floor.
    pub fn from_margins(check: CheckId, margins: Vec<MarginSample>, summary: impl Into<String>) -> Self {
        let pass = !margins.is_empty() && margins.iter().all(|m| m.margin > STRICTNESS_EPS);
        let mut c = Self::new(check, if pass { Verdict::Pass } else { Verdict::Fail }, summary);
        c.margins = margins;
        c.param("strictness_floor", STRICTNESS_EPS);
        c
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn evidence(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.evidence.insert(key.to_string(), value.into());
        self
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn declare(&mut self, text: impl Into<String>) -> &mut Self {
        self.declarations.push(text.into());
        self
    }

    pub fn caveat(&mut self, text: impl Into<String>) -> &mut Self {
        self.caveats.push(text.into());
        self
    }

    pub fn label(&self) -> String {
        match &self.subject {
            Some(s) => format!("{} [{}]", self.check, s),
            None => self.check.to_string(),
        }
    }

    /// Smallest recorded margin, if any.
    pub fn min_margin(&self) -> Option<f64> {
        self.margins.iter().map(|m| m.margin).reduce(f64::min)
    }
}
