//! Scenario configuration (TOML).
//!
//! Loading is two-pass: a schema walk over the raw TOML table collects
//! every problem it can find (missing key, wrong type, unknown key, bound
//! violation) so the user gets an itemised list; only a clean document is
//! then deserialised into [`ScenarioConfig`].

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::control::{
    Controller, ControllerKind, EnergyAwareController, EnergyAwareParams, HybridController, HybridParams,
    ImpedanceController, ImpedanceParams, TankParams,
};
use crate::error::{Error, Result};
use crate::robot::{ChainModel, JointSpec};
use crate::sim::{DisturbanceEntry, DisturbanceSchedule, ScrewParams, WorkbenchParams};
use crate::spring::StiffnessSet;

/// One problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// Dotted key path, e.g. `tank.e_lower`.
    pub key: String,
    pub kind: IssueKind,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Missing,
    Type,
    Unknown,
    Bound,
    Parse,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            IssueKind::Missing => "missing",
            IssueKind::Type => "type",
            IssueKind::Unknown => "unknown",
            IssueKind::Bound => "bound",
            IssueKind::Parse => "parse",
        };
        write!(f, "{} [{tag}]: {}", self.key, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Panda7,
    Planar3,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Initial joint configuration [rad].
    pub q0: Vec<f64>,
    /// Tool length beyond the flange (panda7) [m].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_length: Option<f64>,
    /// Joint list (custom).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<JointSpec>>,
    /// Tool offset in the last joint frame (custom) [m].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_xyz: Option<[f64; 3]>,
    /// Gravity vector (custom) [m/s²].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<[f64; 3]>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ChainModel> {
        match self.kind {
            ModelKind::Panda7 => Ok(ChainModel::panda7(self.tool_length.unwrap_or(0.0))),
            ModelKind::Planar3 => Ok(ChainModel::planar3()),
            ModelKind::Custom => ChainModel::from_specs(
                "custom",
                self.joints.as_deref().unwrap_or_default(),
                self.tool_xyz.unwrap_or_default(),
                self.gravity.unwrap_or([0.0, 0.0, -crate::robot::STANDARD_GRAVITY]),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// `B_init = b_init · I` [N·m·s/rad].
    pub b_init: f64,
}

/// Diagonal spring stiffnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpringConfig {
    pub translational: [f64; 3],
    pub rotational: [f64; 3],
    pub coupling: [f64; 3],
}

impl SpringConfig {
    pub fn build(&self) -> Result<StiffnessSet> {
        StiffnessSet::diagonal(self.translational, self.rotational, self.coupling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub translational: [f64; 3],
    pub rotational: [f64; 3],
    pub coupling: [f64; 3],
    /// Desired force the tool exerts along z [N].
    pub desired_force_z: f64,
    /// Proportional force-error gain.
    pub force_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyAwareConfig {
    pub translational: [f64; 3],
    pub rotational: [f64; 3],
    pub coupling: [f64; 3],
    /// `Ē_total` [J].
    pub e_total_max: f64,
    /// `P̄_motion` [W].
    pub p_motion_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankConfig {
    pub e_upper: f64,
    pub e_lower: f64,
    pub p_lower: f64,
    pub e_initial: f64,
}

impl TankConfig {
    pub fn params(&self) -> TankParams {
        TankParams { e_upper: self.e_upper, e_lower: self.e_lower, p_lower: self.p_lower }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    /// Engagement force [N].
    pub f_engage: f64,
    /// Desired-pose lowering per control step during engagement [m].
    pub engage_step: f64,
    /// Give up if engagement takes longer [s].
    pub engage_timeout: f64,
    /// Time between contact loss and the disturbance phase [s].
    pub settle_time: f64,
    /// Time after the last release [s].
    pub recovery_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrewConfig {
    pub pitch: f64,
    pub speed: f64,
    pub nominal_length: f64,
    pub actual_length: f64,
    /// Head top above the workbench surface at the start [m].
    pub head_height: f64,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    #[serde(default)]
    pub entries: Vec<DisturbanceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub max_joint_velocity: f64,
    /// Reserved; scenarios are deterministic.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub controllers: Vec<ControllerKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub controller: ControllerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impedance: Option<SpringConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<HybridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_aware: Option<EnergyAwareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tank: Option<TankConfig>,
    pub task: TaskConfig,
    pub screw: ScrewConfig,
    pub workbench: WorkbenchParams,
    #[serde(default)]
    pub disturbance: DisturbanceConfig,
    pub sim: SimConfig,
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

// ---------------------------------------------------------------------------
// Schema

#[derive(Clone, Copy)]
enum Ty {
    Float,
    Int,
    Str(&'static [&'static str]),
    Floats(Option<usize>),
    Tables,
}

#[derive(Clone, Copy)]
enum Bound {
    None,
    Positive,
    NonNegative,
    NonPositive,
}

struct Field {
    key: &'static str,
    ty: Ty,
    required: bool,
    bound: Bound,
}

const fn req(key: &'static str, ty: Ty, bound: Bound) -> Field {
    Field { key, ty, required: true, bound }
}

const fn opt(key: &'static str, ty: Ty, bound: Bound) -> Field {
    Field { key, ty, required: false, bound }
}

const KINDS: &[&str] = &["impedance", "hybrid", "energy_aware"];
const MODELS: &[&str] = &["panda7", "planar3", "custom"];
const V3: Ty = Ty::Floats(Some(3));

const MODEL: &[Field] = &[
    req("kind", Ty::Str(MODELS), Bound::None),
    req("q0", Ty::Floats(None), Bound::None),
    opt("tool_length", Ty::Float, Bound::NonNegative),
    opt("joints", Ty::Tables, Bound::None),
    opt("tool_xyz", V3, Bound::None),
    opt("gravity", V3, Bound::None),
];
const CONTROLLER: &[Field] =
    &[req("kind", Ty::Str(KINDS), Bound::None), req("b_init", Ty::Float, Bound::Positive)];
const SPRING: &[Field] = &[
    req("translational", V3, Bound::NonNegative),
    req("rotational", V3, Bound::NonNegative),
    req("coupling", V3, Bound::None),
];
const HYBRID: &[Field] = &[
    req("translational", V3, Bound::NonNegative),
    req("rotational", V3, Bound::NonNegative),
    req("coupling", V3, Bound::None),
    req("desired_force_z", Ty::Float, Bound::None),
    req("force_gain", Ty::Float, Bound::NonNegative),
];
const ENERGY_AWARE: &[Field] = &[
    req("translational", V3, Bound::NonNegative),
    req("rotational", V3, Bound::NonNegative),
    req("coupling", V3, Bound::None),
    req("e_total_max", Ty::Float, Bound::Positive),
    req("p_motion_max", Ty::Float, Bound::NonNegative),
];
const TANK: &[Field] = &[
    req("e_upper", Ty::Float, Bound::Positive),
    req("e_lower", Ty::Float, Bound::NonNegative),
    req("p_lower", Ty::Float, Bound::NonPositive),
    req("e_initial", Ty::Float, Bound::NonNegative),
];
const TASK: &[Field] = &[
    req("f_engage", Ty::Float, Bound::Positive),
    req("engage_step", Ty::Float, Bound::Positive),
    req("engage_timeout", Ty::Float, Bound::Positive),
    req("settle_time", Ty::Float, Bound::NonNegative),
    req("recovery_time", Ty::Float, Bound::NonNegative),
];
const SCREW: &[Field] = &[
    req("pitch", Ty::Float, Bound::Positive),
    req("speed", Ty::Float, Bound::Positive),
    req("nominal_length", Ty::Float, Bound::Positive),
    req("actual_length", Ty::Float, Bound::Positive),
    req("head_height", Ty::Float, Bound::NonNegative),
    req("stiffness", Ty::Float, Bound::Positive),
    req("damping", Ty::Float, Bound::NonNegative),
];
const WORKBENCH: &[Field] =
    &[req("stiffness", Ty::Float, Bound::Positive), req("damping", Ty::Float, Bound::NonNegative)];
const DISTURBANCE: &[Field] = &[opt("entries", Ty::Tables, Bound::None)];
const SIM: &[Field] = &[
    req("dt", Ty::Float, Bound::Positive),
    req("max_joint_velocity", Ty::Float, Bound::Positive),
    opt("seed", Ty::Int, Bound::NonNegative),
];
const OUTPUT: &[Field] = &[req("dir", Ty::Str(&[]), Bound::None)];
const COMPARE: &[Field] = &[req("controllers", Ty::Tables, Bound::None)];

const GRAB: &[Field] = &[
    req("kind", Ty::Str(&["grab"]), Bound::None),
    req("start", Ty::Float, Bound::NonNegative),
    req("direction", V3, Bound::None),
    req("distance", Ty::Float, Bound::NonNegative),
    req("ramp", Ty::Float, Bound::Positive),
    req("hold", Ty::Float, Bound::NonNegative),
    req("stiffness", Ty::Float, Bound::Positive),
    req("damping", Ty::Float, Bound::NonNegative),
];
const TRACE: &[Field] = &[
    req("kind", Ty::Str(&["trace"]), Bound::None),
    req("start", Ty::Float, Bound::NonNegative),
    req("times", Ty::Floats(None), Bound::NonNegative),
    req("forces", Ty::Tables, Bound::None),
];

const ALWAYS: &[(&str, &[Field])] = &[
    ("model", MODEL),
    ("controller", CONTROLLER),
    ("task", TASK),
    ("screw", SCREW),
    ("workbench", WORKBENCH),
    ("sim", SIM),
    ("output", OUTPUT),
];
const OPTIONAL: &[(&str, &[Field])] = &[
    ("impedance", SPRING),
    ("hybrid", HYBRID),
    ("energy_aware", ENERGY_AWARE),
    ("tank", TANK),
    ("disturbance", DISTURBANCE),
    ("compare", COMPARE),
];

struct Walker {
    issues: Vec<ConfigIssue>,
}

impl Walker {
    fn push(&mut self, key: String, kind: IssueKind, reason: impl Into<String>) {
        self.issues.push(ConfigIssue { key, kind, reason: reason.into() });
    }

    fn as_float(v: &Value) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn check_bound(&mut self, key: &str, x: f64, bound: Bound) {
        let ok = match bound {
            Bound::None => x.is_finite(),
            Bound::Positive => x > 0.0,
            Bound::NonNegative => x >= 0.0,
            Bound::NonPositive => x <= 0.0,
        };
        if !ok || x.is_nan() {
            let what = match bound {
                Bound::None => "must be finite",
                Bound::Positive => "must be > 0",
                Bound::NonNegative => "must be ≥ 0",
                Bound::NonPositive => "must be ≤ 0",
            };
            self.push(key.to_string(), IssueKind::Bound, format!("{what}, got {x}"));
        }
    }

    fn section(&mut self, prefix: &str, table: &Table, fields: &[Field]) {
        for f in fields {
            let key = format!("{prefix}.{}", f.key);
            match table.get(f.key) {
                None if f.required => self.push(key, IssueKind::Missing, "required key is missing"),
                None => {}
                Some(v) => self.value(&key, v, f),
            }
        }
        for k in table.keys() {
            if !fields.iter().any(|f| f.key == k) {
                self.push(format!("{prefix}.{k}"), IssueKind::Unknown, "unknown key");
            }
        }
    }

    fn value(&mut self, key: &str, v: &Value, f: &Field) {
        match f.ty {
            Ty::Float => match Self::as_float(v) {
                Some(x) => self.check_bound(key, x, f.bound),
                None => self.push(key.into(), IssueKind::Type, format!("expected a number, found {}", v.type_str())),
            },
            Ty::Int => match v {
                Value::Integer(i) => self.check_bound(key, *i as f64, f.bound),
                _ => self.push(key.into(), IssueKind::Type, format!("expected an integer, found {}", v.type_str())),
            },
            Ty::Str(allowed) => match v {
                Value::String(s) if allowed.is_empty() || allowed.contains(&s.as_str()) => {}
                Value::String(s) => {
                    self.push(key.into(), IssueKind::Bound, format!("`{s}` is not one of {}", allowed.join(", ")))
                }
                _ => self.push(key.into(), IssueKind::Type, format!("expected a string, found {}", v.type_str())),
            },
            Ty::Floats(len) => match v {
                Value::Array(a) => {
                    if let Some(n) = len {
                        if a.len() != n {
                            self.push(key.into(), IssueKind::Type, format!("expected {n} numbers, found {}", a.len()));
                            return;
                        }
                    }
                    for (i, x) in a.iter().enumerate() {
                        match Self::as_float(x) {
                            Some(x) => self.check_bound(&format!("{key}[{i}]"), x, f.bound),
                            None => self.push(
                                format!("{key}[{i}]"),
                                IssueKind::Type,
                                format!("expected a number, found {}", x.type_str()),
                            ),
                        }
                    }
                }
                _ => self.push(key.into(), IssueKind::Type, format!("expected an array, found {}", v.type_str())),
            },
            Ty::Tables => {
                if !matches!(v, Value::Array(_)) {
                    self.push(key.into(), IssueKind::Type, format!("expected an array, found {}", v.type_str()));
                }
            }
        }
    }

    fn entries(&mut self, entries: &Value) {
        let Value::Array(list) = entries else { return };
        for (i, e) in list.iter().enumerate() {
            let prefix = format!("disturbance.entries[{i}]");
            let Value::Table(t) = e else {
                self.push(prefix, IssueKind::Type, "expected a table");
                continue;
            };
            match t.get("kind").and_then(Value::as_str) {
                Some("grab") => self.section(&prefix, t, GRAB),
                Some("trace") => self.section(&prefix, t, TRACE),
                Some(other) => {
                    self.push(format!("{prefix}.kind"), IssueKind::Bound, format!("`{other}` is not one of grab, trace"))
                }
                None => self.push(format!("{prefix}.kind"), IssueKind::Missing, "required key is missing"),
            }
        }
    }
}

fn f(table: &Table, section: &str, key: &str) -> Option<f64> {
    table.get(section)?.as_table()?.get(key).and_then(Walker::as_float)
}

fn selected_kinds(doc: &Table) -> Vec<&'static str> {
    let mut out = Vec::new();
    let kind = doc.get("controller").and_then(Value::as_table).and_then(|c| c.get("kind")).and_then(Value::as_str);
    if let Some(k) = kind.and_then(|k| KINDS.iter().find(|x| **x == k)) {
        out.push(*k);
    }
    let listed = doc
        .get("compare")
        .and_then(Value::as_table)
        .and_then(|c| c.get("controllers"))
        .and_then(Value::as_array);
    for v in listed.into_iter().flatten() {
        if let Some(k) = v.as_str().and_then(|k| KINDS.iter().find(|x| **x == k)) {
            if !out.contains(k) {
                out.push(*k);
            }
        }
    }
    out
}

/// Schema walk; returns every issue found.
pub fn check_document(doc: &Table) -> Vec<ConfigIssue> {
    let mut w = Walker { issues: Vec::new() };
    let kinds = selected_kinds(doc);

    for (name, fields) in ALWAYS.iter().chain(OPTIONAL) {
        let always = ALWAYS.iter().any(|(n, _)| n == name);
        let needed = always
            || kinds.contains(name)
            || (*name == "tank" && kinds.iter().any(|k| *k != "impedance"));
        match doc.get(*name) {
            Some(Value::Table(t)) => w.section(name, t, fields),
            Some(v) => w.push(name.to_string(), IssueKind::Type, format!("expected a table, found {}", v.type_str())),
            None if needed && (always || !kinds.is_empty()) => {
                for fld in fields.iter().filter(|f| f.required) {
                    w.push(format!("{name}.{}", fld.key), IssueKind::Missing, "required key is missing");
                }
            }
            None => {}
        }
    }
    for k in doc.keys() {
        if !ALWAYS.iter().chain(OPTIONAL).any(|(n, _)| n == k) {
            w.push(k.clone(), IssueKind::Unknown, "unknown section");
        }
    }
    if let Some(entries) = doc.get("disturbance").and_then(Value::as_table).and_then(|t| t.get("entries")) {
        w.entries(entries);
    }
    if let Some(list) =
        doc.get("compare").and_then(Value::as_table).and_then(|t| t.get("controllers")).and_then(Value::as_array)
    {
        for (i, v) in list.iter().enumerate() {
            match v.as_str() {
                Some(s) if KINDS.contains(&s) => {}
                _ => w.push(format!("compare.controllers[{i}]"), IssueKind::Bound, "expected impedance, hybrid or energy_aware"),
            }
        }
    }

    // cross-field bounds
    if let (Some(lo), Some(hi)) = (f(doc, "tank", "e_lower"), f(doc, "tank", "e_upper")) {
        if lo > hi {
            w.push("tank.e_lower".into(), IssueKind::Bound, format!("e_lower = {lo} exceeds e_upper = {hi}"));
        } else if let Some(e0) = f(doc, "tank", "e_initial") {
            if !(lo..=hi).contains(&e0) {
                w.push("tank.e_initial".into(), IssueKind::Bound, format!("{e0} outside [{lo}, {hi}]"));
            }
        }
    }
    if let (Some(a), Some(n)) = (f(doc, "screw", "actual_length"), f(doc, "screw", "nominal_length")) {
        if a > n {
            w.push("screw.actual_length".into(), IssueKind::Bound, format!("{a} exceeds nominal_length = {n}"));
        }
    }
    if let Some(kind) = doc.get("model").and_then(Value::as_table).and_then(|m| m.get("kind")).and_then(Value::as_str) {
        let model = doc.get("model").and_then(Value::as_table).unwrap();
        if kind == "custom" && !model.contains_key("joints") {
            w.push("model.joints".into(), IssueKind::Missing, "required for a custom model");
        }
        if kind != "custom" {
            for k in ["joints", "tool_xyz", "gravity"] {
                if model.contains_key(k) {
                    w.push(format!("model.{k}"), IssueKind::Unknown, format!("only valid for a custom model, not {kind}"));
                }
            }
        }
    }
    w.issues
}

fn issue(key: &str, kind: IssueKind, reason: impl Into<String>) -> Error {
    Error::Config(vec![ConfigIssue { key: key.into(), kind, reason: reason.into() }])
}

impl ScenarioConfig {
    /// Parse and validate TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| issue("<document>", IssueKind::Parse, e.to_string()))?;
        let issues = check_document(&doc);
        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| issue("<document>", IssueKind::Parse, e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(format!("cannot serialise config: {e}")))
    }

    /// Checks that need the typed form (model dimensions, disturbance
    /// windows, controller sections).
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        match self.model.build() {
            Ok(m) if m.dof() != self.model.q0.len() => issues.push(ConfigIssue {
                key: "model.q0".into(),
                kind: IssueKind::Bound,
                reason: format!("expected {} joint values, found {}", m.dof(), self.model.q0.len()),
            }),
            Ok(_) => {}
            Err(e) => issues.push(ConfigIssue { key: "model".into(), kind: IssueKind::Bound, reason: e.to_string() }),
        }
        if let Err(e) = DisturbanceSchedule::new(self.disturbance.entries.clone()) {
            issues.push(ConfigIssue { key: "disturbance.entries".into(), kind: IssueKind::Bound, reason: e.to_string() });
        }
        for kind in self.controller_kinds() {
            if let Err(Error::Config(mut more)) = self.check_controller(kind) {
                issues.append(&mut more);
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    fn check_controller(&self, kind: ControllerKind) -> Result<()> {
        let missing = |section: &str| issue(section, IssueKind::Missing, format!("section required for controller {kind}"));
        match kind {
            ControllerKind::Impedance if self.impedance.is_none() => return Err(missing("impedance")),
            ControllerKind::Hybrid if self.hybrid.is_none() => return Err(missing("hybrid")),
            ControllerKind::EnergyAware if self.energy_aware.is_none() => return Err(missing("energy_aware")),
            _ => {}
        }
        if kind.uses_tank() && self.tank.is_none() {
            return Err(missing("tank"));
        }
        Ok(())
    }

    /// The selected controller followed by any extra comparison members.
    pub fn controller_kinds(&self) -> Vec<ControllerKind> {
        let mut out = vec![self.controller.kind];
        for k in self.compare.iter().flat_map(|c| c.controllers.iter()) {
            if !out.contains(k) {
                out.push(*k);
            }
        }
        out
    }

    /// Copy with a different controller selected.
    pub fn with_controller(&self, kind: ControllerKind) -> Result<Self> {
        self.check_controller(kind)?;
        let mut c = self.clone();
        c.controller.kind = kind;
        Ok(c)
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(issue("sim.dt", IssueKind::Bound, format!("must be > 0, got {dt}")));
        }
        let mut c = self.clone();
        c.sim.dt = dt;
        Ok(c)
    }

    pub fn chain_model(&self) -> Result<ChainModel> {
        self.model.build()
    }

    pub fn screw_params(&self) -> ScrewParams {
        let s = &self.screw;
        ScrewParams {
            pitch: s.pitch,
            speed: s.speed,
            f_engage: self.task.f_engage,
            nominal_length: s.nominal_length,
            actual_length: s.actual_length,
            stiffness: s.stiffness,
            damping: s.damping,
        }
    }

    pub fn damping_matrix(&self, n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n) * self.controller.b_init
    }

    /// Build the selected controller for an `n`-joint robot.
    pub fn build_controller(&self, n: usize) -> Result<Controller> {
        let kind = self.controller.kind;
        self.check_controller(kind)?;
        let damping = self.damping_matrix(n);
        Ok(match kind {
            ControllerKind::Impedance => {
                let s = self.impedance.as_ref().unwrap();
                Controller::Impedance(ImpedanceController::new(ImpedanceParams { stiffness: s.build()?, damping })?)
            }
            ControllerKind::Hybrid => {
                let h = self.hybrid.as_ref().unwrap();
                let tank = self.tank.unwrap();
                Controller::Hybrid(HybridController::new(HybridParams {
                    stiffness: StiffnessSet::diagonal(h.translational, h.rotational, h.coupling)?,
                    desired_wrench: Vector6::new(0.0, 0.0, h.desired_force_z, 0.0, 0.0, 0.0),
                    selection: [false, false, true, false, false, false],
                    force_gain: h.force_gain,
                    damping,
                    tank: tank.params(),
                    e_tank0: tank.e_initial,
                })?)
            }
            ControllerKind::EnergyAware => {
                let e = self.energy_aware.as_ref().unwrap();
                let tank = self.tank.unwrap();
                Controller::EnergyAware(EnergyAwareController::new(EnergyAwareParams {
                    stiffness: StiffnessSet::diagonal(e.translational, e.rotational, e.coupling)?,
                    e_limit: e.e_total_max,
                    p_limit: e.p_motion_max,
                    damping,
                    tank: tank.params(),
                    e_tank0: tank.e_initial,
                })?)
            }
        })
    }

    pub fn initial_q(&self) -> DVector<f64> {
        DVector::from_vec(self.model.q0.clone())
    }
}

/// Read, walk and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_names_required_keys() {
        let issues = check_document(&Table::new());
        let keys: Vec<_> = issues.iter().map(|i| i.key.as_str()).collect();
        for k in ["controller.kind", "controller.b_init", "model.q0", "task.f_engage", "screw.pitch", "sim.dt", "output.dir"] {
            assert!(keys.contains(&k), "{k} not in {keys:?}");
        }
        assert!(issues.iter().all(|i| i.kind == IssueKind::Missing));
    }

    #[test]
    fn type_and_unknown_keys_are_reported() {
        let doc: Table = "[sim]\ndt = \"fast\"\nmax_joint_velocity = 20\nbogus = 1\n".parse().unwrap();
        let issues = check_document(&doc);
        assert!(issues.iter().any(|i| i.key == "sim.dt" && i.kind == IssueKind::Type));
        assert!(issues.iter().any(|i| i.key == "sim.bogus" && i.kind == IssueKind::Unknown));
        assert!(!issues.iter().any(|i| i.key == "sim.max_joint_velocity"));
    }
}
