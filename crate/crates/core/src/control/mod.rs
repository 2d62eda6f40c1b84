//! Torque controllers and the energy/passivity machinery they share.
//!
//! Every controller returns the *task* torque only; gravity compensation is
//! added by the plant and is excluded from all energy accounting.

pub mod energy;
pub mod energy_aware;
pub mod hybrid;
pub mod impedance;
pub mod tank;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::lie::{Frame, Transform, Twist, Wrench};
use crate::robot::{self, ChainModel, RobotState};

pub use energy::{
    compute_beta, compute_lambda, compute_motion_power, compute_task_power, damping_power, spring_power,
    BetaUpdate, LambdaBranch, LambdaUpdate,
};
pub use energy_aware::{EnergyAwareController, EnergyAwareParams};
pub use hybrid::{HybridController, HybridParams};
pub use impedance::{ImpedanceController, ImpedanceParams};
pub use tank::{tank_step, TankGates, TankParams, TankState};

/// Everything a controller needs for one step, with kinematics evaluated once.
#[derive(Debug, Clone)]
pub struct ControlContext<'a> {
    pub model: &'a ChainModel,
    pub state: &'a RobotState,
    /// `H^0_EE`.
    pub pose: Transform,
    /// `H^0_d`.
    pub desired: Transform,
    /// Jacobian pairing with base-origin wrenches.
    pub jacobian: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// Measured external force/moment on the end-effector at the tool point,
    /// base orientation.
    pub measured_wrench: Wrench,
    pub dt: f64,
}

impl<'a> ControlContext<'a> {
    pub fn new(
        model: &'a ChainModel,
        state: &'a RobotState,
        desired: Transform,
        measured_wrench: Wrench,
        dt: f64,
    ) -> Self {
        let pose = robot::forward_kinematics(model, &state.q);
        let jacobian = robot::dynamics::shift_to_origin(robot::jacobian(model, &state.q), &pose.translation);
        let mass = robot::mass_matrix(model, &state.q);
        ControlContext { model, state, pose, desired, jacobian, mass, measured_wrench, dt }
    }

    /// Spatial end-effector velocity `J q̇` (base frame, base-origin reference).
    pub fn twist(&self) -> Twist {
        robot::ee_twist(&self.jacobian, &self.state.qdot)
    }

    /// `½ q̇ᵀ M q̇`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.state.qdot.dot(&(&self.mass * &self.state.qdot))
    }

    /// `Jᵀ w` for a base-origin wrench.
    pub fn torque(&self, w: &Wrench) -> DVector<f64> {
        robot::wrench_to_torque(&self.jacobian, w)
    }
}

/// Per-step quantities reported by every controller. Entries that do not
/// apply to a controller hold their neutral value (`1` for scales and gates,
/// `NaN` for the tank level when there is no tank).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: u8,
    pub j: u8,
    pub e_total: f64,
    pub t_total: f64,
    pub u_total: f64,
    pub p_task: f64,
    pub p_task_effective: f64,
    /// `(γ Jᵀw − B q̇)ᵀ q̇` before damping injection.
    pub p_motion: f64,
    /// `γ (Jᵀw)ᵀ q̇`.
    pub spring_power: f64,
    /// `q̇ᵀ B q̇`.
    pub damping_power: f64,
    /// `β q̇ᵀ B q̇`.
    pub p_dissipation: f64,
    pub e_tank: f64,
    pub lambda_branch: Option<LambdaBranch>,
    pub lambda_degenerate: bool,
    pub beta_degenerate: bool,
    /// Task wrench actually applied (base frame, base-origin reference).
    pub applied_wrench: Wrench,
}

impl Diagnostics {
    fn neutral() -> Self {
        Diagnostics {
            lambda: 1.0,
            beta: 1.0,
            gamma: 1.0,
            k: 1,
            j: 1,
            e_total: 0.0,
            t_total: 0.0,
            u_total: 0.0,
            p_task: 0.0,
            p_task_effective: 0.0,
            p_motion: 0.0,
            spring_power: 0.0,
            damping_power: 0.0,
            p_dissipation: 0.0,
            e_tank: f64::NAN,
            lambda_branch: None,
            lambda_degenerate: false,
            beta_degenerate: false,
            applied_wrench: Wrench::zero(Frame::Base),
        }
    }

    /// `P_motion` recomputed with the injected damping.
    pub fn p_motion_injected(&self) -> f64 {
        self.spring_power - self.beta * self.damping_power
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub tau: DVector<f64>,
    pub diagnostics: Diagnostics,
}

/// Controller kind as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Impedance,
    Hybrid,
    EnergyAware,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] =
        [ControllerKind::Impedance, ControllerKind::Hybrid, ControllerKind::EnergyAware];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Impedance => "impedance",
            ControllerKind::Hybrid => "hybrid",
            ControllerKind::EnergyAware => "energy_aware",
        }
    }

    pub fn uses_tank(self) -> bool {
        !matches!(self, ControllerKind::Impedance)
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown controller `{s}` (expected impedance, hybrid or energy_aware)"))
    }
}

/// Any of the three controllers.
#[derive(Debug, Clone)]
pub enum Controller {
    Impedance(ImpedanceController),
    Hybrid(HybridController),
    EnergyAware(EnergyAwareController),
}

impl Controller {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Impedance(_) => ControllerKind::Impedance,
            Controller::Hybrid(_) => ControllerKind::Hybrid,
            Controller::EnergyAware(_) => ControllerKind::EnergyAware,
        }
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<ControlOutput> {
        match self {
            Controller::Impedance(c) => c.compute(ctx),
            Controller::Hybrid(c) => c.compute(ctx),
            Controller::EnergyAware(c) => c.compute(ctx),
        }
    }

    /// Tank state, when the controller has one.
    pub fn tank(&self) -> Option<&TankState> {
        match self {
            Controller::Impedance(_) => None,
            Controller::Hybrid(c) => Some(c.tank()),
            Controller::EnergyAware(c) => Some(c.tank()),
        }
    }
}
