//! Screw-removal process: engagement, thread progress, and a scripted
//! length deficit that ends in sudden contact loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrewState {
    /// Bit not seated in the head.
    Idle,
    /// Bit seated; waiting for drill and engagement force.
    Engaged,
    Unscrewing,
    /// Shaft gave out before the planned travel; absorbing.
    ContactLost,
    /// Full planned travel completed.
    Done,
}

impl ScrewState {
    pub fn as_str(self) -> &'static str {
        match self {
            ScrewState::Idle => "idle",
            ScrewState::Engaged => "engaged",
            ScrewState::Unscrewing => "unscrewing",
            ScrewState::ContactLost => "contact_lost",
            ScrewState::Done => "done",
        }
    }

    /// Whether the head can push back on the tool.
    pub fn bears_load(self) -> bool {
        matches!(self, ScrewState::Engaged | ScrewState::Unscrewing)
    }
}

impl fmt::Display for ScrewState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScrewState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [
            ScrewState::Idle,
            ScrewState::Engaged,
            ScrewState::Unscrewing,
            ScrewState::ContactLost,
            ScrewState::Done,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| format!("unknown screw state `{s}`"))
    }
}

/// Geometry and process parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrewParams {
    /// Thread pitch [m/rev].
    pub pitch: f64,
    /// Drill speed [rev/s].
    pub speed: f64,
    /// Axial push needed to keep the bit seated [N].
    pub f_engage: f64,
    /// Thread length the motion planner expects [m].
    pub nominal_length: f64,
    /// Thread length actually present [m]; shorter than nominal models the flaw.
    pub actual_length: f64,
    /// Axial contact stiffness of the seated bit [N/m].
    pub stiffness: f64,
    /// Axial contact damping [N·s/m].
    pub damping: f64,
}

impl ScrewParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pitch", self.pitch),
            ("speed", self.speed),
            ("f_engage", self.f_engage),
            ("nominal_length", self.nominal_length),
            ("actual_length", self.actual_length),
            ("stiffness", self.stiffness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Scenario(format!("screw {name} must be positive, got {v}")));
            }
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::Scenario(format!("screw damping must be ≥ 0, got {}", self.damping)));
        }
        if self.actual_length > self.nominal_length {
            return Err(Error::Scenario("screw actual length exceeds nominal length".into()));
        }
        Ok(())
    }

    /// Axial rise rate while unscrewing [m/s].
    pub fn rise_rate(&self) -> f64 {
        self.pitch * self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewProcess {
    pub params: ScrewParams,
    pub state: ScrewState,
    /// Height of the head's contact surface [m].
    pub head_z: f64,
    /// Axial travel since unscrewing began [m].
    pub travel: f64,
}

impl ScrewProcess {
    pub fn new(params: ScrewParams, head_z: f64, state: ScrewState) -> Result<Self> {
        params.validate()?;
        Ok(ScrewProcess { params, state, head_z, travel: 0.0 })
    }

    /// Current head velocity along +z [m/s].
    pub fn head_velocity(&self, drill_on: bool) -> f64 {
        if self.state == ScrewState::Unscrewing && drill_on {
            self.params.rise_rate()
        } else {
            0.0
        }
    }

    /// Reaction on the tool (+z pushes the tool up) for a tool tip at height
    /// `tip_z` moving at `tip_vz`. Zero once the screw no longer bears load.
    pub fn reaction(&self, tip_z: f64, tip_vz: f64, drill_on: bool) -> f64 {
        if !self.state.bears_load() {
            return 0.0;
        }
        let pen = self.head_z - tip_z;
        if pen <= 0.0 {
            return 0.0;
        }
        let rel_v = tip_vz - self.head_velocity(drill_on);
        (self.params.stiffness * pen - self.params.damping * rel_v).max(0.0)
    }
}

/// Advance the process by `dt`. `axial_force` is the force the tool applies
/// to the screw along +z (pressing down is negative).
pub fn screw_step(screw: &ScrewProcess, axial_force: f64, drill_on: bool, dt: f64) -> ScrewProcess {
    let mut next = *screw;
    match screw.state {
        ScrewState::Engaged if drill_on && axial_force <= -screw.params.f_engage => {
            next.state = ScrewState::Unscrewing;
        }
        ScrewState::Unscrewing if drill_on => {
            let step = screw.params.rise_rate() * dt;
            next.travel += step;
            next.head_z += step;
            if next.travel >= screw.params.actual_length - 1e-12 {
                next.state = if screw.params.actual_length < screw.params.nominal_length {
                    ScrewState::ContactLost
                } else {
                    ScrewState::Done
                };
            }
        }
        _ => {}
    }
    next
}
