//! Fixed-step closed-loop world: plant, screw, workbench and disturbances.
//!
//! One step: sense (pose, tip velocity, contact forces at the current
//! state) → controller → [`SimWorld::advance`] with semi-implicit Euler.

use nalgebra::{DVector, Vector3};

use super::contact::ContactState;
use super::disturbance::DisturbanceSchedule;
use super::screw::{screw_step, ScrewProcess};
use crate::error::{Error, Result};
use crate::lie::{Frame, Transform, Wrench};
use crate::robot::{self, ChainModel, RobotState};

/// External forces on the tool point, base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalForces {
    /// Screw reaction along +z [N].
    pub screw: f64,
    /// Workbench penalty force along +z [N].
    pub contact: f64,
    /// Human disturbance [N].
    pub disturbance: Vector3<f64>,
}

impl ExternalForces {
    pub fn zero() -> Self {
        ExternalForces { screw: 0.0, contact: 0.0, disturbance: Vector3::zeros() }
    }

    pub fn force(&self) -> Vector3<f64> {
        self.disturbance + Vector3::new(0.0, 0.0, self.screw + self.contact)
    }

    /// Total wrench at the tool point (base orientation, no moment).
    pub fn wrench(&self) -> Wrench {
        Wrench::new(self.force(), Vector3::zeros(), Frame::Base)
    }
}

/// What the world looks like at the start of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensed {
    pub pose: Transform,
    /// Linear velocity of the tool point [m/s].
    pub tip_velocity: Vector3<f64>,
    pub forces: ExternalForces,
}

#[derive(Debug, Clone)]
pub struct SimWorld {
    pub model: ChainModel,
    pub robot: RobotState,
    pub screw: ScrewProcess,
    pub contact: ContactState,
    pub disturbances: DisturbanceSchedule,
    pub drill_on: bool,
    step: u64,
    dt: f64,
    max_joint_velocity: f64,
}

impl SimWorld {
    pub fn new(
        model: ChainModel,
        robot: RobotState,
        screw: ScrewProcess,
        contact: ContactState,
        disturbances: DisturbanceSchedule,
        dt: f64,
        max_joint_velocity: f64,
    ) -> Result<Self> {
        if robot.q.len() != model.dof() || robot.qdot.len() != model.dof() {
            return Err(Error::Dimension { expected: model.dof(), got: robot.q.len() });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Scenario(format!("time step must be positive, got {dt}")));
        }
        if !(max_joint_velocity > 0.0) {
            return Err(Error::Scenario("joint velocity guard must be positive".into()));
        }
        Ok(SimWorld {
            model,
            robot,
            screw,
            contact,
            disturbances,
            drill_on: false,
            step: 0,
            dt,
            max_joint_velocity,
        })
    }

    /// `step_count · dt`.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Pose, tip velocity and external forces at the current state.
    pub fn sense(&mut self) -> Sensed {
        let pose = robot::forward_kinematics(&self.model, &self.robot.q);
        let jac = robot::jacobian(&self.model, &self.robot.q);
        let v = &jac * &self.robot.qdot;
        let tip_velocity = Vector3::new(v[0], v[1], v[2]);
        let p = pose.translation;
        let forces = ExternalForces {
            screw: self.screw.reaction(p.z, tip_velocity.z, self.drill_on),
            contact: self.contact.evaluate(p.z, tip_velocity.z),
            disturbance: self.disturbances.force(self.time(), &p, &tip_velocity),
        };
        Sensed { pose, tip_velocity, forces }
    }

    /// Sum of screw reaction, workbench force and active disturbance.
    pub fn external_wrench(&mut self) -> Wrench {
        self.sense().forces.wrench()
    }

    /// Integrate one step under the controller torque (gravity compensation
    /// and external forces are added here).
    pub fn advance(&mut self, tau_control: &DVector<f64>, sensed: &Sensed) -> Result<()> {
        let n = self.model.dof();
        if tau_control.len() != n {
            return Err(Error::Dimension { expected: n, got: tau_control.len() });
        }
        if tau_control.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { time: self.time(), reason: "non-finite control torque".into() });
        }
        let jac = robot::jacobian(&self.model, &self.robot.q);
        let ext = sensed.forces.wrench();
        let tau = tau_control
            + robot::gravity_vector(&self.model, &self.robot.q)
            + robot::wrench_to_torque(&jac, &ext);
        let qddot = robot::forward_dynamics(&self.model, &self.robot, &tau)?;
        self.robot.qdot += &qddot * self.dt;
        self.robot.q += &self.robot.qdot * self.dt;
        let clamped = self.model.clamp_to_limits(&mut self.robot);
        if clamped > 0 {
            log::warn!("t = {:.3} s: {clamped} joint(s) clamped to their limits", self.time());
        }
        if let Some((i, v)) =
            self.robot.qdot.iter().enumerate().find(|(_, v)| !v.is_finite() || v.abs() > self.max_joint_velocity)
        {
            return Err(Error::Divergence {
                time: self.time() + self.dt,
                reason: format!("joint {i} velocity {v:.3} rad/s exceeds {} rad/s", self.max_joint_velocity),
            });
        }
        self.screw = screw_step(&self.screw, -sensed.forces.screw, self.drill_on, self.dt);
        self.step += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::contact::WorkbenchParams;
    use crate::sim::screw::{ScrewParams, ScrewState};

    fn screw() -> ScrewProcess {
        let p = ScrewParams {
            pitch: 0.0008,
            speed: 5.0,
            f_engage: 15.0,
            nominal_length: 0.022,
            actual_length: 0.012,
            stiffness: 1e5,
            damping: 300.0,
        };
        ScrewProcess::new(p, -10.0, ScrewState::Idle).unwrap()
    }

    fn world(model: ChainModel, q: Vec<f64>, dt: f64) -> SimWorld {
        let n = model.dof();
        assert_eq!(q.len(), n);
        SimWorld::new(
            model,
            RobotState::at_rest(DVector::from_vec(q)),
            screw(),
            ContactState::new(-10.0, WorkbenchParams::default()).unwrap(),
            DisturbanceSchedule::empty(),
            dt,
            20.0,
        )
        .unwrap()
    }

    #[test]
    fn rest_without_forces_stays_put() {
        let mut w = world(ChainModel::planar3().with_gravity(Vector3::zeros()), vec![0.1, 0.2, 0.3], 1e-3);
        let q0 = w.robot.q.clone();
        for _ in 0..100 {
            let s = w.sense();
            w.advance(&DVector::zeros(3), &s).unwrap();
        }
        assert_eq!(w.robot.q, q0);
        assert!((w.time() - 0.1).abs() < 1e-15);
        assert_eq!(w.steps(), 100);
    }

    #[test]
    fn gravity_is_compensated() {
        let mut w = world(ChainModel::panda7(0.1), vec![0.0, -0.5, 0.0, -2.0, 0.0, 1.5, 0.7], 1e-3);
        for _ in 0..200 {
            let s = w.sense();
            w.advance(&DVector::zeros(7), &s).unwrap();
        }
        assert!(w.robot.qdot.norm() < 1e-9);
    }

    #[test]
    fn no_contact_no_wrench() {
        let mut w = world(ChainModel::panda7(0.1), vec![0.0, -0.5, 0.0, -2.0, 0.0, 1.5, 0.7], 1e-3);
        assert_eq!(w.external_wrench().to_vector(), nalgebra::Vector6::zeros());
    }

    #[test]
    fn divergence_is_reported() {
        let mut w = world(ChainModel::planar3().with_gravity(Vector3::zeros()), vec![0.1, 0.2, 0.3], 1e-3);
        let s = w.sense();
        let err = w.advance(&DVector::from_element(3, 1e6), &s).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }
}
