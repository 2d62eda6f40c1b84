//! Fixed-gain Cartesian impedance controller, `τ = Jᵀ w_K − B q̇`.

use nalgebra::DMatrix;

use super::{energy, ControlContext, ControlOutput, Diagnostics};
use crate::error::{Error, Result};
use crate::spring::{self, SpringState, StiffnessSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceParams {
    pub stiffness: StiffnessSet,
    /// Joint damping `B_init`.
    pub damping: DMatrix<f64>,
}

pub(crate) fn check_damping(b: &DMatrix<f64>) -> Result<()> {
    if !b.is_square() {
        return Err(Error::Scenario("joint damping must be square".into()));
    }
    if (b - b.transpose()).norm() > 1e-12 * (1.0 + b.norm()) || b.clone().cholesky().is_none() {
        return Err(Error::Scenario("joint damping must be symmetric positive definite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ImpedanceController {
    params: ImpedanceParams,
}

impl ImpedanceController {
    pub fn new(params: ImpedanceParams) -> Result<Self> {
        check_damping(&params.damping)?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &ImpedanceParams {
        &self.params
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<ControlOutput> {
        let b = &self.params.damping;
        if b.nrows() != ctx.model.dof() {
            return Err(Error::Dimension { expected: ctx.model.dof(), got: b.nrows() });
        }
        let qdot = &ctx.state.qdot;
        let sp = SpringState::new(ctx.pose, ctx.desired);
        let w = spring::wrench_to_base(&spring::elastic_wrench(&sp, &self.params.stiffness), &sp.current)?;
        let u = spring::potential_energy(&sp, &self.params.stiffness);
        let t = ctx.kinetic_energy();

        let tau = ctx.torque(&w) - b * qdot;
        let p_task = energy::compute_task_power(&w, &ctx.twist());
        let spring_power = energy::spring_power(&ctx.jacobian, &w, qdot);
        let damping_power = energy::damping_power(b, qdot);
        let diagnostics = Diagnostics {
            e_total: t + u,
            t_total: t,
            u_total: u,
            p_task,
            p_task_effective: p_task,
            p_motion: spring_power - damping_power,
            spring_power,
            damping_power,
            p_dissipation: damping_power,
            applied_wrench: w,
            ..Diagnostics::neutral()
        };
        Ok(ControlOutput { tau, diagnostics })
    }
}
