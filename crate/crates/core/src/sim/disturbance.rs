//! Scheduled human disturbances acting on the tool point.
//!
//! Entry times are relative to the moment the schedule is armed, so the
//! interaction phase can start on an event rather than a fixed clock time.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hand that grabs the tool, drags the grab point along `direction` by
/// `distance` over `ramp` seconds, holds for `hold` seconds, then lets go.
/// The hand is a spring-damper between grab point and tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrabProfile {
    pub start: f64,
    pub direction: [f64; 3],
    pub distance: f64,
    pub ramp: f64,
    pub hold: f64,
    pub stiffness: f64,
    pub damping: f64,
}

/// Recorded force trace `[fx, fy, fz]`, linearly interpolated; zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceProfile {
    pub start: f64,
    /// Sample times relative to `start`, strictly increasing, first = 0.
    pub times: Vec<f64>,
    pub forces: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceEntry {
    Grab(GrabProfile),
    Trace(TraceProfile),
}

impl DisturbanceEntry {
    pub fn start(&self) -> f64 {
        match self {
            DisturbanceEntry::Grab(g) => g.start,
            DisturbanceEntry::Trace(t) => t.start,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            DisturbanceEntry::Grab(g) => g.ramp + g.hold,
            DisturbanceEntry::Trace(t) => t.times.last().copied().unwrap_or(0.0),
        }
    }

    pub fn end(&self) -> f64 {
        self.start() + self.duration()
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let bad = |what: String| Err(Error::Scenario(format!("disturbance entry {idx}: {what}")));
        if !(self.start().is_finite() && self.start() >= 0.0) {
            return bad(format!("start {} must be ≥ 0", self.start()));
        }
        match self {
            DisturbanceEntry::Grab(g) => {
                let n = Vector3::from(g.direction).norm();
                if (n - 1.0).abs() > 1e-9 {
                    return bad(format!("direction must be unit length, norm is {n}"));
                }
                if !(g.ramp > 0.0 && g.hold >= 0.0 && g.distance >= 0.0) {
                    return bad("ramp must be > 0, hold and distance ≥ 0".into());
                }
                if !(g.stiffness > 0.0 && g.damping >= 0.0) {
                    return bad("stiffness must be > 0 and damping ≥ 0".into());
                }
            }
            DisturbanceEntry::Trace(t) => {
                if t.times.is_empty() || t.times.len() != t.forces.len() {
                    return bad("times and forces must be non-empty and equally long".into());
                }
                if t.times[0] != 0.0 || t.times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("times must start at 0 and increase strictly".into());
                }
                if t.forces.iter().flatten().any(|f| !f.is_finite()) {
                    return bad("forces must be finite".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSchedule {
    entries: Vec<DisturbanceEntry>,
    armed_at: Option<f64>,
    anchors: Vec<Option<Vector3<f64>>>,
}

impl DisturbanceSchedule {
    /// Entries must have non-overlapping windows.
    pub fn new(mut entries: Vec<DisturbanceEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            e.validate(i)?;
        }
        entries.sort_by(|a, b| a.start().total_cmp(&b.start()));
        for w in entries.windows(2) {
            if w[1].start() < w[0].end() {
                return Err(Error::Scenario(format!(
                    "disturbance windows overlap: [{}, {}) and [{}, {})",
                    w[0].start(),
                    w[0].end(),
                    w[1].start(),
                    w[1].end()
                )));
            }
        }
        let anchors = vec![None; entries.len()];
        Ok(DisturbanceSchedule { entries, armed_at: None, anchors })
    }

    pub fn empty() -> Self {
        DisturbanceSchedule { entries: Vec::new(), armed_at: None, anchors: Vec::new() }
    }

    pub fn entries(&self) -> &[DisturbanceEntry] {
        &self.entries
    }

    /// Start the schedule clock at absolute time `t`.
    pub fn arm(&mut self, t: f64) {
        self.armed_at = Some(t);
        self.anchors.iter_mut().for_each(|a| *a = None);
    }

    pub fn armed_at(&self) -> Option<f64> {
        self.armed_at
    }

    /// Length of the schedule from arming to the last release [s].
    pub fn span(&self) -> f64 {
        self.entries.iter().map(DisturbanceEntry::end).fold(0.0, f64::max)
    }

    /// Absolute time at which the last entry releases, once armed.
    pub fn release_time(&self) -> Option<f64> {
        self.armed_at.map(|t0| t0 + self.span())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.active_index(t).is_some()
    }

    fn active_index(&self, t: f64) -> Option<usize> {
        let t0 = self.armed_at?;
        let rel = t - t0;
        self.entries.iter().position(|e| rel >= e.start() && rel < e.end())
    }

    /// Force on the tool at absolute time `t` for a tool point at `p` moving
    /// with `v`.
    pub fn force(&mut self, t: f64, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        let Some(i) = self.active_index(t) else {
            return Vector3::zeros();
        };
        let rel = t - self.armed_at.unwrap_or(0.0) - self.entries[i].start();
        match &self.entries[i] {
            DisturbanceEntry::Grab(g) => {
                let anchor = *self.anchors[i].get_or_insert(*p);
                let s = (rel / g.ramp).min(1.0);
                let grab = anchor + Vector3::from(g.direction) * (g.distance * s);
                (grab - p) * g.stiffness - v * g.damping
            }
            DisturbanceEntry::Trace(tr) => {
                let k = tr.times.partition_point(|&x| x <= rel);
                if k >= tr.times.len() {
                    return Vector3::from(*tr.forces.last().unwrap());
                }
                let (t0, t1) = (tr.times[k - 1], tr.times[k]);
                let a = (rel - t0) / (t1 - t0);
                Vector3::from(tr.forces[k - 1]) * (1.0 - a) + Vector3::from(tr.forces[k]) * a
            }
        }
    }
}
