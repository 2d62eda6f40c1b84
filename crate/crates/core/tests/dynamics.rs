//! Plant oracles: closed-form single-link motion, mass-matrix structure and
//! inverse/forward dynamics consistency.

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;

use eaimp_core::robot::{self, ChainModel, RobotState};

#[test]
fn constant_torque_spins_up_linearly() {
    // no gravity: q̈ = τ / I about the joint
    let (m, d, izz) = (1.2, 0.4, 0.02);
    let model = ChainModel::pendulum(m, d, izz, 0.8).unwrap().with_gravity(Vector3::zeros());
    let inertia = izz + m * d * d;
    let tau = DVector::from_element(1, 0.3);
    let dt = 1e-3;
    let mut s = RobotState::at_rest(DVector::zeros(1));
    for _ in 0..1000 {
        let qdd = robot::forward_dynamics(&model, &s, &tau).unwrap();
        s.qdot += qdd * dt;
        s.q += &s.qdot * dt;
    }
    let expected = 0.3 / inertia * 1.0;
    assert!((s.qdot[0] - expected).abs() / expected < 1e-3, "{} vs {expected}", s.qdot[0]);
}

#[test]
fn gravity_compensated_arm_stays_put() {
    let model = ChainModel::panda7(0.1);
    let q0 = DVector::from_vec(vec![0.0, -0.3, 0.0, -2.2, 0.0, 1.9, 0.785]);
    let mut s = RobotState::at_rest(q0.clone());
    for _ in 0..1000 {
        let tau = robot::gravity_vector(&model, &s.q);
        let qdd = robot::forward_dynamics(&model, &s, &tau).unwrap();
        s.qdot += qdd * 1e-3;
        s.q += &s.qdot * 1e-3;
    }
    assert!((s.q - q0).norm() < 1e-9);
}

fn panda_state() -> impl Strategy<Value = RobotState> {
    (prop::collection::vec(-1.5..1.5f64, 7), prop::collection::vec(-1.0..1.0f64, 7))
        .prop_map(|(q, qd)| RobotState { q: DVector::from_vec(q), qdot: DVector::from_vec(qd) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mass_matrix_is_symmetric_positive_definite(s in panda_state()) {
        let m = robot::mass_matrix(&ChainModel::panda7(0.1), &s.q);
        prop_assert!((&m - m.transpose()).norm() < 1e-12);
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn inverse_dynamics_inverts_forward_dynamics(s in panda_state(), tau in prop::collection::vec(-5.0..5.0f64, 7)) {
        let model = ChainModel::panda7(0.1);
        let tau = DVector::from_vec(tau);
        let qdd = robot::forward_dynamics(&model, &s, &tau).unwrap();
        let back = robot::inverse_dynamics(&model, &s.q, &s.qdot, &qdd, model.gravity());
        prop_assert!((back - &tau).norm() < 1e-8 * (1.0 + tau.norm()));
    }

    #[test]
    fn kinetic_energy_matches_twist_energy(s in panda_state()) {
        let model = ChainModel::panda7(0.1);
        let t = robot::kinetic_coenergy(&model, &s);
        // ½q̇ᵀMq̇ equals the power of the velocity-product torques: q̇ᵀ(M q̇) = 2T
        let m = robot::mass_matrix(&model, &s.q);
        prop_assert!((2.0 * t - s.qdot.dot(&(m * &s.qdot))).abs() < 1e-12);
        prop_assert!(t >= 0.0);
    }
}
