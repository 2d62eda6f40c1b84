//! Energy-aware Cartesian impedance controller with an augmented,
//! power-limited energy tank: `τ = γ Jᵀ w_K(λ) − β B q̇`.
//!
//! Per step:
//! 1. `T` and the unscaled spring potential `U`;
//! 2. provisional task power with the previous `λ` and its tank gate `k`;
//! 3. `λ` from the energy-scaling rule;
//! 4. rescaled spring wrench, task power, tank update (`γ`, `k`, `j`) — if
//!    the tank turns out empty while still draining, `λ` is not allowed to
//!    rise above its previous value;
//! 5. motion power and damping injection `β`.

use nalgebra::DMatrix;

use super::energy::{self, LambdaBranch};
use super::impedance::check_damping;
use super::tank::{self, TankParams, TankState};
use super::{ControlContext, ControlOutput, Diagnostics};
use crate::error::{Error, Result};
use crate::lie::Wrench;
use crate::spring::{self, SpringState, StiffnessSet};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAwareParams {
    /// Unscaled spring.
    pub stiffness: StiffnessSet,
    /// `Ē_total` [J].
    pub e_limit: f64,
    /// `P̄_motion` [W].
    pub p_limit: f64,
    /// `B_init`.
    pub damping: DMatrix<f64>,
    pub tank: TankParams,
    /// Initial tank level [J].
    pub e_tank0: f64,
}

impl EnergyAwareParams {
    /// Limits that never bind; the controller then behaves as the fixed-gain
    /// impedance controller with the same spring and damping.
    pub fn unconstrained(stiffness: StiffnessSet, damping: DMatrix<f64>) -> Self {
        EnergyAwareParams {
            stiffness,
            e_limit: f64::INFINITY,
            p_limit: f64::INFINITY,
            damping,
            tank: TankParams::unbounded(),
            e_tank0: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyAwareController {
    params: EnergyAwareParams,
    lambda: f64,
    tank: TankState,
}

struct Spring {
    w: Wrench,
    p_task: f64,
}

impl EnergyAwareController {
    pub fn new(params: EnergyAwareParams) -> Result<Self> {
        check_damping(&params.damping)?;
        if params.e_limit.is_nan() || params.e_limit < 0.0 {
            return Err(Error::Scenario(format!("energy limit {} must be ≥ 0", params.e_limit)));
        }
        if params.p_limit.is_nan() {
            return Err(Error::Scenario("motion power limit must not be NaN".into()));
        }
        let tank = TankState::new(params.e_tank0, params.tank)?;
        Ok(Self { params, lambda: 1.0, tank })
    }

    pub fn params(&self) -> &EnergyAwareParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tank(&self) -> &TankState {
        &self.tank
    }

    fn spring_at(&self, ctx: &ControlContext<'_>, sp: &SpringState, lambda: f64) -> Result<Spring> {
        let k = self.params.stiffness.apply_energy_scale(lambda)?;
        let w = spring::wrench_to_base(&spring::elastic_wrench(sp, &k), &sp.current)?;
        let p_task = energy::compute_task_power(&w, &ctx.twist());
        Ok(Spring { w, p_task })
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<ControlOutput> {
        let p = &self.params;
        let n = ctx.model.dof();
        if p.damping.nrows() != n {
            return Err(Error::Dimension { expected: n, got: p.damping.nrows() });
        }
        let qdot = &ctx.state.qdot;
        let sp = SpringState::new(ctx.pose, ctx.desired);

        // (1) energies with the unscaled spring
        let t = ctx.kinetic_energy();
        let u = spring::potential_energy(&sp, &p.stiffness);
        let e_unscaled = t + u;

        // (2) provisional gate from the previous scale
        let lambda_prev = self.lambda;
        let provisional = self.spring_at(ctx, &sp, lambda_prev)?;
        let (k_prov, _, _) = tank::gates(&p.tank, self.tank.energy, provisional.p_task);

        // (3) energy scaling
        let update = energy::compute_lambda(e_unscaled, t, u, p.e_limit, k_prov, provisional.p_task, lambda_prev);
        let mut lambda = update.lambda;
        let mut branch = update.branch;

        // (4) rescaled wrench and tank
        let mut s = if lambda == lambda_prev { provisional } else { self.spring_at(ctx, &sp, lambda)? };
        let (mut next_tank, mut gates) = tank::tank_step(&self.tank, s.p_task, ctx.dt);
        if gates.k == 0 && s.p_task <= 0.0 && lambda > lambda_prev {
            lambda = lambda_prev;
            branch = LambdaBranch::Hold;
            s = self.spring_at(ctx, &sp, lambda)?;
            (next_tank, gates) = tank::tank_step(&self.tank, s.p_task, ctx.dt);
        }

        // (5) motion power and damping injection
        let gamma = gates.gamma;
        let spring_power = energy::spring_power(&ctx.jacobian, &s.w, qdot);
        let damping_power = energy::damping_power(&p.damping, qdot);
        let p_motion = gamma * spring_power - damping_power;
        let beta = energy::compute_beta(p_motion, p.p_limit, &ctx.jacobian, &s.w, &p.damping, qdot, gamma);

        // (6) control law
        let tau = ctx.torque(&s.w) * gamma - &p.damping * qdot * beta.beta;

        self.lambda = lambda;
        self.tank = next_tank;

        let diagnostics = Diagnostics {
            lambda,
            beta: beta.beta,
            gamma,
            k: gates.k,
            j: gates.j,
            e_total: t + lambda * u,
            t_total: t,
            u_total: lambda * u,
            p_task: s.p_task,
            p_task_effective: gates.p_effective,
            p_motion,
            spring_power: gamma * spring_power,
            damping_power,
            p_dissipation: beta.beta * damping_power,
            e_tank: next_tank.energy,
            lambda_branch: Some(branch),
            lambda_degenerate: update.degenerate,
            beta_degenerate: beta.degenerate,
            applied_wrench: s.w.scale(gamma),
        };
        Ok(ControlOutput { tau, diagnostics })
    }
}
