//! Serial-chain kinematics and dynamics.

pub mod dynamics;
pub mod model;

pub use dynamics::{
    coriolis_vector, ee_twist, forward_dynamics, forward_kinematics, gravity_potential, gravity_vector,
    inverse_dynamics, jacobian, joint_frames, kinetic_coenergy, mass_matrix, spatial_jacobian, wrench_to_torque,
};
pub use model::{ChainModel, Joint, JointSpec, Link, RobotState, STANDARD_GRAVITY};
