//! Bounded, power-limited energy tank.
//!
//! Gates are evaluated from the raw task power and the *pre-update* tank
//! level, then the level is integrated and clamped. That ordering keeps the
//! bounds exact at every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static tank limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankParams {
    /// Upper level [J].
    pub e_upper: f64,
    /// Lower level [J].
    pub e_lower: f64,
    /// Largest allowed extraction rate [W], `≤ 0`.
    pub p_lower: f64,
}

impl TankParams {
    pub fn new(e_lower: f64, e_upper: f64, p_lower: f64) -> Result<Self> {
        let p = TankParams { e_upper, e_lower, p_lower };
        p.validate()?;
        Ok(p)
    }

    /// Limits that never bind. Used to collapse a tank-based controller onto
    /// its unconstrained counterpart.
    pub fn unbounded() -> Self {
        TankParams { e_upper: f64::INFINITY, e_lower: f64::NEG_INFINITY, p_lower: f64::NEG_INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_lower.is_nan() || self.e_upper.is_nan() || self.p_lower.is_nan() {
            return Err(Error::Scenario("tank limits must not be NaN".into()));
        }
        if self.e_lower > self.e_upper {
            return Err(Error::Scenario(format!(
                "tank lower level {} exceeds upper level {}",
                self.e_lower, self.e_upper
            )));
        }
        if self.p_lower > 0.0 {
            return Err(Error::Scenario(format!("tank extraction limit {} must be ≤ 0", self.p_lower)));
        }
        Ok(())
    }
}

/// Tank level plus the gate values produced by the most recent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankState {
    pub energy: f64,
    pub params: TankParams,
    pub k: u8,
    pub j: u8,
    pub gamma: f64,
}

impl TankState {
    /// `energy` must lie within the limits.
    pub fn new(energy: f64, params: TankParams) -> Result<Self> {
        params.validate()?;
        if !(params.e_lower..=params.e_upper).contains(&energy) {
            return Err(Error::Scenario(format!(
                "initial tank level {energy} outside [{}, {}]",
                params.e_lower, params.e_upper
            )));
        }
        Ok(TankState { energy, params, k: 1, j: 1, gamma: 1.0 })
    }

    pub fn is_empty(&self) -> bool {
        self.energy <= self.params.e_lower
    }
}

/// Result of one [`tank_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankGates {
    pub k: u8,
    pub j: u8,
    pub gamma: f64,
    /// Power actually exchanged with the tank [W].
    pub p_effective: f64,
}

/// Gate values for a raw task power at a given (pre-update) level.
pub fn gates(params: &TankParams, energy: f64, p_task: f64) -> (u8, u8, f64) {
    let k = if p_task <= 0.0 && energy <= params.e_lower { 0 } else { 1 };
    let j = if p_task >= 0.0 && energy >= params.e_upper { 0 } else { 1 };
    let gamma = if p_task < params.p_lower && params.p_lower <= 0.0 { params.p_lower / p_task } else { 1.0 };
    (k, j, gamma)
}

/// Advance the tank by one step of length `dt`.
pub fn tank_step(tank: &TankState, p_task: f64, dt: f64) -> (TankState, TankGates) {
    debug_assert!(dt > 0.0);
    let (k, j, gamma) = gates(&tank.params, tank.energy, p_task);
    let p_effective = if p_task <= 0.0 { gamma * k as f64 * p_task } else { j as f64 * p_task };
    let energy = (tank.energy + p_effective * dt).clamp(tank.params.e_lower, tank.params.e_upper);
    let next = TankState { energy, params: tank.params, k, j, gamma };
    (next, TankGates { k, j, gamma, p_effective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TankParams {
        TankParams::new(0.5, 5.0, -0.175).unwrap()
    }

    #[test]
    fn power_limiter_halves_a_double_rate_drain() {
        let t = TankState::new(3.0, table()).unwrap();
        let (next, g) = tank_step(&t, -0.35, 1e-3);
        assert!((g.gamma - 0.5).abs() < 1e-15);
        assert!((g.p_effective + 0.175).abs() < 1e-15);
        assert_eq!((g.k, g.j), (1, 1));
        assert!((next.energy - (3.0 - 0.175e-3)).abs() < 1e-15);
    }

    #[test]
    fn empty_tank_blocks_extraction() {
        let t = TankState::new(0.5, table()).unwrap();
        let (next, g) = tank_step(&t, -0.1, 1e-3);
        assert_eq!(g.k, 0);
        assert_eq!(g.p_effective, 0.0);
        assert_eq!(next.energy, 0.5);
    }

    #[test]
    fn full_tank_blocks_inflow() {
        let t = TankState::new(5.0, table()).unwrap();
        let (next, g) = tank_step(&t, 0.2, 1e-3);
        assert_eq!(g.j, 0);
        assert_eq!(g.p_effective, 0.0);
        assert_eq!(next.energy, 5.0);
    }

    #[test]
    fn inflow_refills_and_small_drain_passes() {
        let t = TankState::new(3.0, table()).unwrap();
        let (n1, g1) = tank_step(&t, 0.2, 0.01);
        assert_eq!(g1.gamma, 1.0);
        assert!((n1.energy - 3.002).abs() < 1e-12);
        let (_, g2) = tank_step(&t, -0.1, 0.01);
        assert_eq!(g2.gamma, 1.0);
        assert_eq!(g2.p_effective, -0.1);
    }

    #[test]
    fn bounds_are_clamped() {
        let t = TankState::new(0.5001, table()).unwrap();
        let (n, _) = tank_step(&t, -0.175, 1.0);
        assert_eq!(n.energy, 0.5);
        let t = TankState::new(4.9999, table()).unwrap();
        let (n, _) = tank_step(&t, 10.0, 1.0);
        assert_eq!(n.energy, 5.0);
    }

    #[test]
    fn invalid_limits_rejected() {
        assert!(TankParams::new(6.0, 5.0, -0.175).is_err());
        assert!(TankParams::new(0.5, 5.0, 0.1).is_err());
        assert!(TankState::new(7.0, table()).is_err());
    }

    #[test]
    fn unbounded_tank_never_gates() {
        let t = TankState::new(1e9, TankParams::unbounded()).unwrap();
        for p in [-1e6, -1.0, 0.0, 1.0, 1e6] {
            let (_, g) = tank_step(&t, p, 1e-3);
            assert_eq!((g.k, g.j, g.gamma), (1, 1, 1.0));
        }
    }
}
