//! Per-row invariant checks. Everything here needs only the CSV columns
//! plus configuration limits, so a written log can be re-audited offline.

use crate::control::{ControllerKind, TankParams};
use crate::sim::LogRecord;

use super::config::ScenarioConfig;

/// Slack on the energy cap [J].
pub const ENERGY_CAP_TOL: f64 = 1e-3;
/// Slack on the tank extraction rate [W].
pub const EXTRACTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantLimits {
    pub kind: ControllerKind,
    pub tank: Option<TankParams>,
    pub e_tank0: Option<f64>,
    /// `Ē_total` (energy-aware only).
    pub e_total_max: Option<f64>,
}

impl InvariantLimits {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let kind = cfg.controller.kind;
        let tank = cfg.tank.filter(|_| kind.uses_tank());
        InvariantLimits {
            kind,
            tank: tank.map(|t| t.params()),
            e_tank0: tank.map(|t| t.e_initial),
            e_total_max: cfg.energy_aware.as_ref().filter(|_| kind == ControllerKind::EnergyAware).map(|e| e.e_total_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub what: String,
}

#[derive(Debug, Clone)]
pub struct InvariantMonitor {
    limits: InvariantLimits,
    lambda_prev: f64,
    u_initial: Option<f64>,
    count: usize,
    first: Option<Violation>,
}

impl InvariantMonitor {
    pub fn new(limits: InvariantLimits) -> Self {
        InvariantMonitor { limits, lambda_prev: 1.0, u_initial: None, count: 0, first: None }
    }

    /// Number of rows with at least one violation so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn first(&self) -> Option<&Violation> {
        self.first.as_ref()
    }

    /// Check one row; returns the violations it carries.
    pub fn check(&mut self, r: &LogRecord) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut fail = |what: String| out.push(Violation { t: r.t, what });

        if !(0.0..=1.0).contains(&r.lambda) {
            fail(format!("lambda = {} outside [0, 1]", r.lambda));
        }
        if !(r.beta >= 1.0) {
            fail(format!("beta = {} below 1", r.beta));
        }
        if !(r.gamma > 0.0 && r.gamma <= 1.0) {
            fail(format!("gamma = {} outside (0, 1]", r.gamma));
        }
        if r.k > 1 || r.j > 1 {
            fail(format!("gates k = {}, j = {} not binary", r.k, r.j));
        }
        if !(r.f_contact_z >= 0.0) {
            fail(format!("workbench force {} pulls", r.f_contact_z));
        }
        if let Some(tank) = &self.limits.tank {
            if !(r.e_tank >= tank.e_lower && r.e_tank <= tank.e_upper) {
                fail(format!("E_tank = {} outside [{}, {}]", r.e_tank, tank.e_lower, tank.e_upper));
            }
            if r.p_task <= 0.0 {
                let eff = r.gamma * f64::from(r.k) * r.p_task;
                if eff < tank.p_lower - EXTRACTION_TOL {
                    fail(format!("tank extraction {eff} W below {} W", tank.p_lower));
                }
            }
        }
        if let Some(cap) = self.limits.e_total_max {
            if r.k == 0 && r.p_task <= 0.0 && r.lambda > self.lambda_prev {
                fail(format!("lambda rose from {} to {} while holding", self.lambda_prev, r.lambda));
            }
            if r.lambda < 1.0 && r.e_total > cap + ENERGY_CAP_TOL {
                fail(format!("E_total = {} exceeds cap {cap}", r.e_total));
            }
            let u0 = *self.u_initial.get_or_insert(r.u_total);
            let budget = cap + self.limits.e_tank0.unwrap_or(0.0) + u0;
            if r.t_total > budget {
                fail(format!("kinetic energy {} exceeds global budget {budget}", r.t_total));
            }
        }
        self.lambda_prev = r.lambda;
        if !out.is_empty() {
            self.count += 1;
            if self.first.is_none() {
                self.first = Some(out[0].clone());
            }
        }
        out
    }
}
