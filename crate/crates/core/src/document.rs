//! Scenario files: a strict TOML schema, validation that reports every
//! problem with its schema path, and conversion to a [`Scenario`].
//!
//! ```toml
//! schema_version = 1
//! name = "example"
//! dimension = 1
//! initial_state = [0.9]
//!
//! [partition]
//! n_env = 1
//!
//! [safe_set]
//! kind = "ball"
//! center = [0.0]
//! radius = 1.0
//!
//! [gamma]
//! kind = "full"
//!
//! [drift]
//! kind = "zero"
//! bound = 0.0
//!
//! [control]
//! b = [[1.0]]
//! u_max = 1.0
//!
//! [endogenous.h]
//! kind = "linear_gain"
//! gain = [[1.0]]
//!
//! [capability]
//! kind = "linear"
//! kappa0 = 0.0
//! rate = 1.0
//!
//! [[policies]]
//! kind = "restoring_optimal"
//! ```

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channels::{ControlChannel, Drift, EffectFamily, EndogenousChannel};
use crate::error::{Error, Result};
use crate::intrinsic::{PhiPredicate, PhiShape, StrategyClass, StrategyDeclaration};
use crate::policies::{aggregate_policies, Policy};
use crate::safe_set::{BoundaryRegion, GammaShape, SafeSet, SafeSetShape, BOUNDARY_BAND};
use crate::scenario::{Numerics, Scenario};
use crate::state_model::{CapabilitySchedule, StatePartition};

pub const SCHEMA_VERSION: u32 = 1;

/// Row-major matrix.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBlock {
    pub n_env: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Zero,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftBlock {
    pub kind: DriftKind,
    /// `f(x) = A·x` for the linear kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    /// Declared `M_f`; estimated by sampling when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBlock {
    pub b: Matrix,
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EffectShape {
    RadialOutward { center: Vec<f64> },
    LinearGain { gain: Matrix },
    TargetSeeking { target: Vec<f64> },
    /// Constant velocity on the internal block.
    InternalDrift { rate: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndogenousBlock {
    /// Defaults to the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Matrix>,
    pub h: EffectShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindName {
    Zero,
    Constant,
    RestoringOptimal,
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: PolicyKindName,
    /// Defaults to `control.u_max`; aggregates use the sum of their members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    /// Control value of the constant kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    /// Ids of earlier policies combined by the aggregate kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sustain_policy: Option<String>,
    #[serde(default)]
    pub genesis_interventions: Vec<String>,
    pub claimed_class: StrategyClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub name: String,
    pub dimension: usize,
    pub initial_state: Vec<f64>,
    pub partition: PartitionBlock,
    pub safe_set: SafeSetShape,
    pub gamma: GammaShape,
    pub drift: DriftBlock,
    pub control: ControlBlock,
    pub endogenous: EndogenousBlock,
    pub capability: CapabilitySchedule,
    pub policies: Vec<PolicyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyBlock>,
    pub numerics: Numerics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Io,
    Parse,
    Schema,
    Consistency,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssueKind::Io => "io",
            IssueKind::Parse => "parse",
            IssueKind::Schema => "schema",
            IssueKind::Consistency => "consistency",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    /// Dotted schema path, empty for the document root.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "{} error at {}: {}", self.kind, path, self.message)
    }
}

/// Every problem found in a document.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<Issue>);

impl ValidationErrors {
    pub fn has_path(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl From<ValidationErrors> for Error {
    fn from(e: ValidationErrors) -> Self {
        match e.0.first() {
            Some(Issue { kind: IssueKind::Io, message, .. }) => Error::Io(message.clone()),
            _ => Error::Config(e.to_string()),
        }
    }
}

struct Collector(Vec<Issue>);

impl Collector {
    fn push(&mut self, kind: IssueKind, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Issue {
            kind,
            path: path.into(),
            message: message.into(),
        });
    }

    fn consistency(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.push(IssueKind::Consistency, path, message);
    }

    fn take<T: DeserializeOwned>(&mut self, table: &mut toml::Table, key: &str) -> Option<T> {
        match table.remove(key) {
            None => {
                self.push(IssueKind::Schema, key, "missing required key");
                None
            }
            Some(v) => self.parse(key, v),
        }
    }

    fn take_or<T: DeserializeOwned>(&mut self, table: &mut toml::Table, key: &str, default: T) -> Option<T> {
        match table.remove(key) {
            None => Some(default),
            Some(v) => self.parse(key, v),
        }
    }

    fn parse<T: DeserializeOwned>(&mut self, path: &str, v: toml::Value) -> Option<T> {
        match v.try_into::<T>() {
            Ok(t) => Some(t),
            Err(e) => {
                self.push(IssueKind::Schema, path, e.message().trim().to_string());
                None
            }
        }
    }
}

const KEYS: [&str; 15] = [
    "schema_version",
    "name",
    "dimension",
    "initial_state",
    "partition",
    "safe_set",
    "gamma",
    "drift",
    "control",
    "endogenous",
    "capability",
    "policies",
    "phi",
    "strategy",
    "numerics",
];

/// Reads and validates a scenario file.
pub fn load_validate(path: impl AsRef<Path>) -> std::result::Result<ScenarioDocument, ValidationErrors> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        ValidationErrors(vec![Issue {
            kind: IssueKind::Io,
            path: String::new(),
            message: format!("{}: {e}", path.display()),
        }])
    })?;
    parse_validate(&text)
}

pub fn parse_table(text: &str) -> std::result::Result<toml::Table, ValidationErrors> {
    text.parse::<toml::Table>().map_err(|e| {
        ValidationErrors(vec![Issue {
            kind: IssueKind::Parse,
            path: String::new(),
            message: e.to_string().trim().to_string(),
        }])
    })
}

pub fn parse_validate(text: &str) -> std::result::Result<ScenarioDocument, ValidationErrors> {
    validate_table(parse_table(text)?)
}

/// Validates an already parsed TOML table.
pub fn validate_table(mut table: toml::Table) -> std::result::Result<ScenarioDocument, ValidationErrors> {
    let mut c = Collector(vec![]);
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            c.push(IssueKind::Schema, key.clone(), "unknown key");
        }
    }
    let schema_version = c.take::<u32>(&mut table, "schema_version");
    let name = c.take_or(&mut table, "name", String::new());
    let dimension = c.take::<usize>(&mut table, "dimension");
    let initial_state = c.take::<Vec<f64>>(&mut table, "initial_state");
    let partition = c.take::<PartitionBlock>(&mut table, "partition");
    let safe_set = c.take::<SafeSetShape>(&mut table, "safe_set");
    let gamma = c.take_or(&mut table, "gamma", GammaShape::Full);
    let drift = c.take::<DriftBlock>(&mut table, "drift");
    let control = c.take::<ControlBlock>(&mut table, "control");
    let endogenous = c.take::<EndogenousBlock>(&mut table, "endogenous");
    let capability = c.take::<CapabilitySchedule>(&mut table, "capability");
    let policies = c.take::<Vec<PolicyBlock>>(&mut table, "policies");
    let phi = c.take_or::<Option<PhiShape>>(&mut table, "phi", None);
    let strategy = c.take_or::<Option<StrategyBlock>>(&mut table, "strategy", None);
    let numerics = c.take_or(&mut table, "numerics", Numerics::default());

    let (
        Some(schema_version),
        Some(name),
        Some(dimension),
        Some(initial_state),
        Some(partition),
        Some(safe_set),
        Some(gamma),
        Some(drift),
        Some(control),
        Some(endogenous),
        Some(capability),
        Some(policies),
        Some(phi),
        Some(strategy),
        Some(numerics),
    ) = (
        schema_version,
        name,
        dimension,
        initial_state,
        partition,
        safe_set,
        gamma,
        drift,
        control,
        endogenous,
        capability,
        policies,
        phi,
        strategy,
        numerics,
    )
    else {
        return Err(ValidationErrors(c.0));
    };
    let doc = ScenarioDocument {
        schema_version,
        name,
        dimension,
        initial_state,
        partition,
        safe_set,
        gamma,
        drift,
        control,
        endogenous,
        capability,
        policies,
        phi,
        strategy,
        numerics,
    };
    check_consistency(&doc, &mut c);
    if !c.0.is_empty() {
        return Err(ValidationErrors(c.0));
    }
    // anything that slipped past the field checks surfaces here
    if let Err(e) = doc.build() {
        c.consistency("", e.to_string());
        return Err(ValidationErrors(c.0));
    }
    Ok(doc)
}

fn matrix_shape(m: &Matrix) -> Option<(usize, usize)> {
    let cols = m.first()?.len();
    (cols > 0 && m.iter().all(|r| r.len() == cols)).then_some((m.len(), cols))
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    let (r, c) = matrix_shape(m).expect("validated matrix");
    DMatrix::from_fn(r, c, |i, j| m[i][j])
}

fn check_matrix(c: &mut Collector, path: &str, m: &Matrix, rows: Option<usize>, cols: Option<usize>) -> Option<(usize, usize)> {
    let Some((r, k)) = matrix_shape(m) else {
        c.consistency(path, "matrix must be a non-empty list of equal-length rows");
        return None;
    };
    if m.iter().flatten().any(|v| !v.is_finite()) {
        c.consistency(path, "matrix entries must be finite");
    }
    if let Some(n) = rows {
        if r != n {
            c.consistency(path, format!("expected {n} rows, got {r}"));
        }
    }
    if let Some(n) = cols {
        if k != n {
            c.consistency(path, format!("expected {n} columns, got {k}"));
        }
    }
    Some((r, k))
}

fn check_len(c: &mut Collector, path: &str, v: &[f64], n: usize) {
    if v.len() != n {
        c.consistency(path, format!("expected length {n}, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        c.consistency(path, "entries must be finite");
    }
}

fn check_consistency(doc: &ScenarioDocument, c: &mut Collector) {
    let n = doc.dimension;
    if doc.schema_version != SCHEMA_VERSION {
        c.consistency("schema_version", format!("unsupported version {}, expected {SCHEMA_VERSION}", doc.schema_version));
    }
    if n == 0 {
        c.consistency("dimension", "must be >= 1");
        return;
    }
    if doc.partition.n_env > n {
        c.consistency("partition.n_env", format!("n_env = {} exceeds dimension {n}", doc.partition.n_env));
    }
    check_len(c, "initial_state", &doc.initial_state, n);

    if doc.safe_set.dim() != n {
        c.consistency("safe_set.center", format!("expected length {n}, got {}", doc.safe_set.dim()));
    } else if let Err(e) = doc.safe_set.validate() {
        c.consistency("safe_set", e.to_string());
    } else if doc.initial_state.len() == n {
        let s = SafeSet::Builtin(doc.safe_set.clone());
        if let Ok(g) = s.level(&DVector::from_column_slice(&doc.initial_state)) {
            if g > BOUNDARY_BAND {
                c.consistency("initial_state", format!("initial state lies outside the safe set (g = {g:e})"));
            }
        }
    }
    if let GammaShape::Halfspace { direction, offset } = &doc.gamma {
        check_len(c, "gamma.direction", direction, n);
        if !offset.is_finite() {
            c.consistency("gamma.offset", "must be finite");
        }
    }

    match (doc.drift.kind, &doc.drift.a) {
        (DriftKind::Linear, Some(a)) => {
            check_matrix(c, "drift.a", a, Some(n), Some(n));
        }
        (DriftKind::Linear, None) => c.consistency("drift.a", "linear drift needs a matrix"),
        (DriftKind::Zero, Some(_)) => c.consistency("drift.a", "zero drift takes no matrix"),
        (DriftKind::Zero, None) => {}
    }
    if let Some(m) = doc.drift.bound {
        if !(m.is_finite() && m >= 0.0) {
            c.consistency("drift.bound", format!("must be finite and >= 0, got {m}"));
        }
    }

    let m = check_matrix(c, "control.b", &doc.control.b, Some(n), None).map(|(_, k)| k);
    if !(doc.control.u_max.is_finite() && doc.control.u_max > 0.0) {
        c.consistency("control.u_max", format!("must be finite and > 0, got {}", doc.control.u_max));
    }

    let h_out = match &doc.endogenous.h {
        EffectShape::RadialOutward { center } => {
            check_len(c, "endogenous.h.center", center, n);
            n
        }
        EffectShape::TargetSeeking { target } => {
            check_len(c, "endogenous.h.target", target, n);
            n
        }
        EffectShape::LinearGain { gain } => check_matrix(c, "endogenous.h.gain", gain, None, Some(n)).map_or(n, |s| s.0),
        EffectShape::InternalDrift { rate } => {
            check_len(c, "endogenous.h.rate", rate, n.saturating_sub(doc.partition.n_env));
            n
        }
    };
    match &doc.endogenous.g {
        Some(g) => {
            check_matrix(c, "endogenous.g", g, Some(n), Some(h_out));
        }
        None if h_out != n => c.consistency("endogenous.g", format!("identity G needs h of length {n}, got {h_out}")),
        None => {}
    }

    if let Err(e) = doc.capability.validate() {
        c.consistency("capability", e.to_string());
    }

    check_policies(doc, m, c);

    if let Some(phi) = &doc.phi {
        let n_int = n.saturating_sub(doc.partition.n_env);
        let path = match phi {
            PhiShape::Ball { reference, .. } => {
                check_len(c, "phi.reference", reference, n_int);
                "phi"
            }
            PhiShape::Halfspace { direction, .. } => {
                check_len(c, "phi.direction", direction, n_int);
                "phi"
            }
        };
        if let Err(e) = PhiPredicate::builtin(phi.clone()) {
            c.consistency(path, e.to_string());
        }
    }
    if let Some(s) = &doc.strategy {
        if let Some(id) = &s.sustain_policy {
            if !policy_ids(doc).contains(id) {
                c.consistency("strategy.sustain_policy", format!("no policy with id '{id}'"));
            }
        }
    }
    for (i, cand) in doc.numerics.a3_candidates.iter().enumerate() {
        check_len(c, &format!("numerics.a3_candidates[{i}]"), cand, n);
    }
    if let Err(e) = doc.numerics.validate() {
        c.consistency("numerics", e.to_string());
    }
}

fn default_id(kind: PolicyKindName) -> &'static str {
    match kind {
        PolicyKindName::Zero => "zero",
        PolicyKindName::Constant => "constant",
        PolicyKindName::RestoringOptimal => "restoring-optimal",
        PolicyKindName::Aggregate => "aggregate",
    }
}

fn policy_ids(doc: &ScenarioDocument) -> Vec<String> {
    doc.policies
        .iter()
        .map(|p| p.id.clone().unwrap_or_else(|| default_id(p.kind).to_string()))
        .collect()
}

fn check_policies(doc: &ScenarioDocument, m: Option<usize>, c: &mut Collector) {
    if doc.policies.is_empty() {
        c.consistency("policies", "at least one policy is required");
    }
    let ids = policy_ids(doc);
    for (i, p) in doc.policies.iter().enumerate() {
        let path = format!("policies[{i}]");
        if ids[..i].contains(&ids[i]) {
            c.consistency(format!("{path}.id"), format!("duplicate policy id '{}'", ids[i]));
        }
        if let Some(u) = p.u_max {
            if !(u.is_finite() && u > 0.0) {
                c.consistency(format!("{path}.u_max"), format!("must be finite and > 0, got {u}"));
            }
        }
        match (p.kind, &p.u) {
            (PolicyKindName::Constant, None) => c.consistency(format!("{path}.u"), "constant policy needs u"),
            (PolicyKindName::Constant, Some(u)) => {
                if let Some(m) = m {
                    check_len(c, &format!("{path}.u"), u, m);
                }
            }
            (_, Some(_)) => c.consistency(format!("{path}.u"), "only constant policies take u"),
            _ => {}
        }
        match (p.kind, &p.members) {
            (PolicyKindName::Aggregate, None) => c.consistency(format!("{path}.members"), "aggregate needs members"),
            (PolicyKindName::Aggregate, Some(members)) => {
                if members.is_empty() {
                    c.consistency(format!("{path}.members"), "aggregate needs members");
                }
                for id in members {
                    if !ids[..i].contains(id) {
                        c.consistency(format!("{path}.members"), format!("'{id}' is not an earlier policy id"));
                    }
                }
                if p.u_max.is_some() {
                    c.consistency(format!("{path}.u_max"), "aggregate bound is the sum of member bounds");
                }
            }
            (_, Some(_)) => c.consistency(format!("{path}.members"), "only aggregate policies take members"),
            _ => {}
        }
    }
}

impl ScenarioDocument {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("documents serialize")
    }

    pub fn build_policies(&self) -> Result<Vec<Policy>> {
        let ids = policy_ids(self);
        let mut out: Vec<Policy> = vec![];
        for (p, id) in self.policies.iter().zip(&ids) {
            let u_max = p.u_max.unwrap_or(self.control.u_max);
            let policy = match p.kind {
                PolicyKindName::Zero => Policy::zero(u_max)?,
                PolicyKindName::RestoringOptimal => Policy::restoring_optimal(u_max)?,
                PolicyKindName::Constant => {
                    Policy::constant(DVector::from_vec(p.u.clone().unwrap_or_default()), u_max)?
                }
                PolicyKindName::Aggregate => {
                    let members = p.members.clone().unwrap_or_default();
                    let children = members
                        .iter()
                        .map(|m| {
                            out.iter()
                                .find(|q| q.id() == m)
                                .cloned()
                                .ok_or_else(|| Error::Config(format!("unknown aggregate member '{m}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    aggregate_policies(children)?
                }
            };
            out.push(policy.with_id(id.clone()));
        }
        Ok(out)
    }

    /// Resolves the document into a runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.dimension;
        let partition = StatePartition::new(n, self.partition.n_env)?;
        let drift = match (self.drift.kind, &self.drift.a) {
            (DriftKind::Zero, _) => Drift::Zero { dim: n },
            (DriftKind::Linear, Some(a)) => Drift::linear(to_dmatrix(a))?,
            (DriftKind::Linear, None) => return Err(Error::Config("linear drift needs a matrix".into())),
        };
        let h = match &self.endogenous.h {
            EffectShape::RadialOutward { center } => EffectFamily::RadialOutward {
                center: DVector::from_column_slice(center),
            },
            EffectShape::LinearGain { gain } => EffectFamily::LinearGain { gain: to_dmatrix(gain) },
            EffectShape::TargetSeeking { target } => EffectFamily::TargetSeeking {
                target: DVector::from_column_slice(target),
            },
            EffectShape::InternalDrift { rate } => EffectFamily::InternalDrift {
                n_env: self.partition.n_env,
                rate: DVector::from_column_slice(rate),
            },
        };
        let endogenous = match &self.endogenous.g {
            Some(g) => EndogenousChannel::new(to_dmatrix(g), h)?,
            None => EndogenousChannel::with_identity(h)?,
        };
        let policies = self.build_policies()?;
        let strategy = match &self.strategy {
            None => None,
            Some(s) => Some(StrategyDeclaration {
                sustain_policy: match &s.sustain_policy {
                    None => None,
                    Some(id) => Some(
                        policies
                            .iter()
                            .find(|p| p.id() == id)
                            .cloned()
                            .ok_or_else(|| Error::Config(format!("no policy with id '{id}'")))?,
                    ),
                },
                genesis_interventions: s.genesis_interventions.clone(),
                claimed_class: s.claimed_class,
            }),
        };
        let sc = Scenario {
            name: self.name.clone(),
            partition,
            safe_set: SafeSet::builtin(self.safe_set.clone())?,
            gamma: BoundaryRegion::from_shape(self.gamma.clone()),
            drift,
            declared_drift_bound: self.drift.bound,
            control: ControlChannel::new(to_dmatrix(&self.control.b))?,
            u_max: self.control.u_max,
            endogenous,
            capability: self.capability.clone(),
            initial_state: DVector::from_column_slice(&self.initial_state),
            policies,
            phi: self.phi.clone().map(PhiPredicate::builtin).transpose()?,
            strategy,
            numerics: self.numerics.clone(),
        };
        sc.check_consistency()?;
        Ok(sc)
    }
}

/// Loads, validates and builds in one step.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    load_validate(path)?.build()
}

/// Sets the value at a dotted path (`control.u_max`, `policies.0.u_max`).
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let (last, init) = parts.split_last().ok_or_else(|| Error::Config("empty parameter path".into()))?;
    let mut cur: &mut toml::Value = table
        .get_mut(init.first().copied().unwrap_or(last))
        .ok_or_else(|| Error::Config(format!("no key '{path}' in scenario")))?;
    if init.is_empty() {
        *cur = value;
        return Ok(());
    }
    for part in &init[1..] {
        cur = step(cur, part).ok_or_else(|| Error::Config(format!("no key '{path}' in scenario")))?;
    }
    match cur {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| Error::Config(format!("'{last}' is not an index in '{path}'")))?;
            *a.get_mut(i).ok_or_else(|| Error::Config(format!("index {i} out of range in '{path}'")))? = value;
        }
        _ => return Err(Error::Config(format!("'{path}' does not name a table entry"))),
    }
    Ok(())
}

fn step<'a>(v: &'a mut toml::Value, part: &str) -> Option<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => t.get_mut(part),
        toml::Value::Array(a) => a.get_mut(part.parse::<usize>().ok()?),
        _ => None,
    }
}

/// Parses a single TOML value such as `1.5`, `"linear"` or `[0.0, 1.0]`.
pub fn parse_value(text: &str) -> Result<toml::Value> {
    let t: toml::Table = format!("v = {text}")
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("cannot parse value '{text}': {}", e.message())))?;
    Ok(t["v"].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const R1D: &str = include_str!("../scenarios/r1d.scenario");

    #[test]
    fn fixture_loads() {
        let doc = parse_validate(R1D).unwrap();
        assert_eq!(doc.dimension, 1);
        let sc = doc.build().unwrap();
        assert_eq!(sc.dim(), 1);
        assert!(sc.policies.len() >= 4);
    }

    #[test]
    fn round_trip_is_identity() {
        let doc = parse_validate(R1D).unwrap();
        let again = parse_validate(&doc.to_toml()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn negative_authority_reports_path() {
        let text = R1D.replace("u_max = 1.0", "u_max = -1.0");
        let err = parse_validate(&text).unwrap_err();
        assert!(err.has_path("control.u_max"), "{err}");
    }

    #[test]
    fn collects_several_errors() {
        let text = R1D.replace("u_max = 1.0", "u_max = -1.0").replace("dimension = 1", "dimension = 1\nbogus = 3");
        let err = parse_validate(&text).unwrap_err();
        assert!(err.has_path("bogus") && err.has_path("control.u_max"), "{err}");
        let text = R1D.replace("[numerics]", "[numerics]\ntypo_dt = 1.0").replace("[control]", "[control]\nextra = 1");
        let err = parse_validate(&text).unwrap_err();
        assert!(err.has_path("numerics") && err.has_path("control"), "{err}");
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        let err = parse_validate("dimension = = 1").unwrap_err();
        assert_eq!(err.0[0].kind, IssueKind::Parse);
    }

    #[test]
    fn set_path_edits_nested_values() {
        let mut t = parse_table(R1D).unwrap();
        set_path(&mut t, "control.u_max", parse_value("2.5").unwrap()).unwrap();
        let doc = validate_table(t).unwrap();
        assert_eq!(doc.control.u_max, 2.5);
        let mut t = parse_table(R1D).unwrap();
        assert!(set_path(&mut t, "nope.x", parse_value("1").unwrap()).is_err());
    }
}
