//! Hybrid force-impedance controller with a power-limited tank.
//!
//! Wrench components are selected per axis (tool point, base orientation):
//! selected axes track a desired force with feed-forward plus a proportional
//! loop on the measured external wrench; the others follow a spatial spring.
//! The combined task wrench is metered through the energy tank.

use nalgebra::{DMatrix, Vector3, Vector6};

use super::impedance::check_damping;
use super::tank::{self, TankParams, TankState};
use super::{energy, ControlContext, ControlOutput, Diagnostics};
use crate::error::{Error, Result};
use crate::lie::{Frame, Wrench};
use crate::spring::{self, SpringState, StiffnessSet};

#[derive(Debug, Clone, PartialEq)]
pub struct HybridParams {
    pub stiffness: StiffnessSet,
    /// Desired wrench the robot exerts, `[f; m]` at the tool point in base orientation.
    pub desired_wrench: Vector6<f64>,
    /// Diagonal 0/1 selection of force-controlled axes.
    pub selection: [bool; 6],
    /// Proportional gain on the force error (dimensionless).
    pub force_gain: f64,
    pub damping: DMatrix<f64>,
    pub tank: TankParams,
    pub e_tank0: f64,
}

impl HybridParams {
    /// Selection as a matrix; idempotent by construction.
    pub fn selection_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            6,
            self.selection.iter().map(|&s| if s { 1.0 } else { 0.0 }),
        ))
    }
}

#[derive(Debug, Clone)]
pub struct HybridController {
    params: HybridParams,
    tank: TankState,
}

impl HybridController {
    pub fn new(params: HybridParams) -> Result<Self> {
        check_damping(&params.damping)?;
        if !params.force_gain.is_finite() || params.force_gain < 0.0 {
            return Err(Error::Scenario(format!("force gain {} must be finite and ≥ 0", params.force_gain)));
        }
        let tank = TankState::new(params.e_tank0, params.tank)?;
        Ok(Self { params, tank })
    }

    pub fn params(&self) -> &HybridParams {
        &self.params
    }

    pub fn tank(&self) -> &TankState {
        &self.tank
    }

    /// Task wrench at the tool point before tank metering.
    pub fn commanded_wrench(&self, ctx: &ControlContext<'_>) -> Vector6<f64> {
        let p = &self.params;
        let sp = SpringState::new(ctx.pose, ctx.desired);
        let w_ee = spring::elastic_wrench(&sp, &p.stiffness);
        let r = ctx.pose.rotation;
        let spring_pt = Wrench::new(r * w_ee.force, r * w_ee.moment, Frame::Base).to_vector();
        let measured = ctx.measured_wrench.to_vector();
        Vector6::from_fn(|i, _| {
            if p.selection[i] {
                let des = p.desired_wrench[i];
                des + p.force_gain * (des + measured[i])
            } else {
                spring_pt[i]
            }
        })
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<ControlOutput> {
        let p = &self.params;
        let n = ctx.model.dof();
        if p.damping.nrows() != n {
            return Err(Error::Dimension { expected: n, got: p.damping.nrows() });
        }
        let qdot = &ctx.state.qdot;
        let cmd = self.commanded_wrench(ctx);
        let force: Vector3<f64> = cmd.fixed_rows::<3>(0).into_owned();
        let moment: Vector3<f64> = cmd.fixed_rows::<3>(3).into_owned();
        let w = Wrench::new(force, moment + ctx.pose.translation.cross(&force), Frame::Base);

        let p_task = energy::compute_task_power(&w, &ctx.twist());
        let (next, gates) = tank::tank_step(&self.tank, p_task, ctx.dt);
        let scale = if p_task <= 0.0 { gates.gamma * gates.k as f64 } else { 1.0 };
        let w_eff = w.scale(scale);
        let tau = ctx.torque(&w_eff) - &p.damping * qdot;
        self.tank = next;

        let sp = SpringState::new(ctx.pose, ctx.desired);
        let u = spring::potential_energy(&sp, &p.stiffness);
        let t = ctx.kinetic_energy();
        let spring_power = energy::spring_power(&ctx.jacobian, &w_eff, qdot);
        let damping_power = energy::damping_power(&p.damping, qdot);
        let diagnostics = Diagnostics {
            gamma: gates.gamma,
            k: gates.k,
            j: gates.j,
            e_total: t + u,
            t_total: t,
            u_total: u,
            p_task,
            p_task_effective: gates.p_effective,
            p_motion: spring_power - damping_power,
            spring_power,
            damping_power,
            p_dissipation: damping_power,
            e_tank: next.energy,
            applied_wrench: w_eff,
            ..Diagnostics::neutral()
        };
        Ok(ControlOutput { tau, diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{self, ChainModel, RobotState};
    use nalgebra::DVector;

    fn ready() -> DVector<f64> {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        DVector::from_vec(vec![0.0, -FRAC_PI_4, 0.0, -3.0 * FRAC_PI_4, 0.0, FRAC_PI_2, FRAC_PI_4])
    }

    fn params(fz: f64) -> HybridParams {
        HybridParams {
            stiffness: StiffnessSet::diagonal([100.0; 3], [10.0; 3], [0.0; 3]).unwrap(),
            desired_wrench: Vector6::new(0.0, 0.0, fz, 0.0, 0.0, 0.0),
            selection: [false, false, true, false, false, false],
            force_gain: 0.5,
            damping: DMatrix::identity(7, 7) * 5.0,
            tank: TankParams::new(0.5, 5.0, -0.175).unwrap(),
            e_tank0: 3.0,
        }
    }

    #[test]
    fn selection_is_idempotent() {
        let s = params(-15.0).selection_matrix();
        assert_eq!(&s * &s, s);
    }

    #[test]
    fn zero_force_at_equilibrium() {
        let m = ChainModel::panda7(0.1);
        let s = RobotState::at_rest(ready());
        let pose = robot::forward_kinematics(&m, &s.q);
        let mut c = HybridController::new(params(0.0)).unwrap();
        let ctx = ControlContext::new(&m, &s, pose, Wrench::zero(Frame::Base), 1e-3);
        assert!(c.compute(&ctx).unwrap().tau.norm() < 1e-12);
    }

    #[test]
    fn balanced_contact_commands_desired_force() {
        let m = ChainModel::panda7(0.1);
        let s = RobotState::at_rest(ready());
        let pose = robot::forward_kinematics(&m, &s.q);
        let c = HybridController::new(params(-15.0)).unwrap();
        let reaction = Wrench::new(Vector3::new(0.0, 0.0, 15.0), Vector3::zeros(), Frame::Base);
        let ctx = ControlContext::new(&m, &s, pose, reaction, 1e-3);
        assert!((c.commanded_wrench(&ctx)[2] + 15.0).abs() < 1e-12);
        // lost reaction: feed-forward plus loop push harder
        let ctx = ControlContext::new(&m, &s, pose, Wrench::zero(Frame::Base), 1e-3);
        assert!((c.commanded_wrench(&ctx)[2] + 22.5).abs() < 1e-12);
    }

    #[test]
    fn drain_is_rate_limited() {
        let m = ChainModel::panda7(0.1);
        let q = ready();
        let jg = robot::jacobian(&m, &q);
        // joint velocity that moves the tool straight down at 0.1 m/s
        let jjt = &jg * jg.transpose();
        let v = DVector::from_vec(vec![0.0, 0.0, -0.1, 0.0, 0.0, 0.0]);
        let qdot = jg.transpose() * jjt.cholesky().unwrap().solve(&v);
        let s = RobotState { q, qdot };
        let pose = robot::forward_kinematics(&m, &s.q);
        let mut c = HybridController::new(params(-15.0)).unwrap();
        let ctx = ControlContext::new(&m, &s, pose, Wrench::zero(Frame::Base), 1e-3);
        let d = c.compute(&ctx).unwrap().diagnostics;
        // raw: 22.5 N × 0.1 m/s = 2.25 W > 0.175 W
        assert!((d.p_task + 2.25).abs() < 1e-9);
        assert!((d.p_task_effective + 0.175).abs() < 1e-12);
        assert!((d.gamma - 0.175 / 2.25).abs() < 1e-9);
    }
}
