//! Unilateral penalty contact between the tool tip and a horizontal workbench.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchParams {
    /// Penalty stiffness [N/m].
    pub stiffness: f64,
    /// Penalty damping [N·s/m].
    pub damping: f64,
}

impl Default for WorkbenchParams {
    fn default() -> Self {
        WorkbenchParams { stiffness: 1e5, damping: 300.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    /// Surface height [m].
    pub z_wb: f64,
    pub params: WorkbenchParams,
    /// Penetration at the last evaluation [m] (positive inside the bench).
    pub penetration: f64,
    /// Force at the last evaluation [N], along +z.
    pub force: f64,
}

impl ContactState {
    pub fn new(z_wb: f64, params: WorkbenchParams) -> Result<Self> {
        if !(params.stiffness.is_finite() && params.stiffness > 0.0) {
            return Err(Error::Scenario(format!("workbench stiffness must be positive, got {}", params.stiffness)));
        }
        if !(params.damping.is_finite() && params.damping >= 0.0) {
            return Err(Error::Scenario(format!("workbench damping must be ≥ 0, got {}", params.damping)));
        }
        Ok(ContactState { z_wb, params, penetration: 0.0, force: 0.0 })
    }

    /// Update for a tip at `tip_z` moving at `tip_vz`; returns the force.
    pub fn evaluate(&mut self, tip_z: f64, tip_vz: f64) -> f64 {
        self.penetration = self.z_wb - tip_z;
        self.force = penalty_force(self.penetration, tip_vz, &self.params);
        self.force
    }
}

/// `max(0, k·δ − c·v)` for `δ > 0`, else `0`.
pub fn penalty_force(penetration: f64, tip_vz: f64, params: &WorkbenchParams) -> f64 {
    if penetration <= 0.0 {
        return 0.0;
    }
    (params.stiffness * penetration - params.damping * tip_vz).max(0.0)
}
