//! Property tests for the spring, the scaling/injection rules and the tank.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use proptest::prelude::*;

use eaimp_core::control::{
    compute_beta, compute_lambda, compute_motion_power, tank_step, LambdaBranch, TankParams, TankState,
};
use eaimp_core::lie::{Frame, Rotation, Transform, Twist, Wrench};
use eaimp_core::spring::{elastic_wrench, potential_energy, SpringState, StiffnessSet};

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-r..r).prop_map(Vector3::from)
}

fn pose(r: f64, a: f64) -> impl Strategy<Value = Transform> {
    (vec3(a), vec3(r)).prop_map(|(w, p)| Transform::new(Rotation::exp(&w), p))
}

fn stiffness() -> impl Strategy<Value = StiffnessSet> {
    (prop::array::uniform3(1.0..2000.0), prop::array::uniform3(0.5..80.0))
        .prop_map(|(kt, kr)| StiffnessSet::diagonal(kt, kr, [0.0; 3]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wrench_is_negative_energy_gradient(k in stiffness(), desired in pose(0.5, 1.0), offset in pose(0.15, 0.4)) {
        let current = desired * offset;
        let w = elastic_wrench(&SpringState::new(current, desired), &k).to_vector();
        let u = |c: Transform| potential_energy(&SpringState::new(c, desired), &k);
        let h = 1e-6;
        let fd = Vector6::from_fn(|j, _| {
            let mut e = Vector6::zeros();
            e[j] = h;
            -(u(current * Transform::exp(&e)) - u(current * Transform::exp(&-e))) / (2.0 * h)
        });
        prop_assert!((w - fd).norm() <= 1e-4 * w.norm().max(1e-6), "{w} vs {fd}");
    }

    #[test]
    fn energy_is_nonnegative_and_zero_at_rest(k in stiffness(), desired in pose(0.5, 1.0), offset in pose(0.2, 1.0)) {
        prop_assert!(potential_energy(&SpringState::new(desired * offset, desired), &k) >= 0.0);
        prop_assert!(potential_energy(&SpringState::new(desired, desired), &k).abs() < 1e-12);
    }

    #[test]
    fn scaling_is_linear_and_never_compounds(k in stiffness(), l1 in 0.0..1.0f64, l2 in 0.0..1.0f64, offset in pose(0.2, 0.5)) {
        let s = SpringState::new(offset, Transform::identity());
        let once = k.apply_energy_scale(l2).unwrap();
        let twice = k.apply_energy_scale(l1).unwrap().apply_energy_scale(l2).unwrap();
        let u = potential_energy(&s, &k);
        prop_assert!((potential_energy(&s, &twice) - potential_energy(&s, &once)).abs() <= 1e-12 * u.max(1.0));
        prop_assert!((potential_energy(&s, &once) - l2 * u).abs() <= 1e-9 * u.max(1.0));
        let dw = elastic_wrench(&s, &once).to_vector() - elastic_wrench(&s, &k).to_vector() * l2;
        prop_assert!(dw.norm() < 1e-9 * (1.0 + elastic_wrench(&s, &k).to_vector().norm()));
    }

    #[test]
    fn energy_is_invariant_to_a_common_base_change(k in stiffness(), g in pose(1.0, 3.0), desired in pose(0.5, 1.0), offset in pose(0.2, 0.5)) {
        let current = desired * offset;
        let a = potential_energy(&SpringState::new(current, desired), &k);
        let b = potential_energy(&SpringState::new(g * current, g * desired), &k);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn power_is_frame_independent(h in pose(1.0, 3.0), f in vec3(10.0), m in vec3(10.0), v in vec3(1.0), w in vec3(1.0)) {
        let wrench = Wrench::new(f, m, Frame::EndEffector);
        let twist = Twist::new(v, w, Frame::EndEffector);
        let h = h.labelled(Frame::Base, Frame::EndEffector);
        let p_ee = wrench.power(&twist);
        let p_base = h.wrench_to_base(&wrench).power(&h.twist_to_base(&twist));
        prop_assert!((p_ee - p_base).abs() <= 1e-9 * (1.0 + p_ee.abs()));
    }

    #[test]
    fn lambda_stays_in_unit_interval(
        t in 0.0..5.0f64, u in 0.0..5.0f64, e_limit in 0.0..3.0f64,
        k in 0u8..=1, p_task in -2.0..2.0f64, prev in 0.0..=1.0f64,
    ) {
        let up = compute_lambda(t + u, t, u, e_limit, k, p_task, prev);
        prop_assert!((0.0..=1.0).contains(&up.lambda));
        if up.branch == LambdaBranch::Hold {
            prop_assert!(up.lambda <= prev);
        }
        if k == 0 && p_task <= 0.0 {
            prop_assert_eq!(up.branch, LambdaBranch::Hold);
        }
        if up.branch == LambdaBranch::Scaled && !up.degenerate && up.lambda > 0.0 && up.lambda < 1.0 {
            prop_assert!((t + up.lambda * u - e_limit).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_brings_motion_power_to_the_limit(
        jac in prop::collection::vec(-1.0..1.0f64, 18),
        wv in prop::array::uniform6(-20.0..20.0f64),
        qdot in prop::collection::vec(-1.0..1.0f64, 3),
        b in 0.5..10.0f64, gamma in 0.05..=1.0f64, p_limit in 0.0..1.0f64,
    ) {
        let jac = DMatrix::from_vec(6, 3, jac);
        let w = Wrench::from_vector(&Vector6::from(wv), Frame::Base);
        let bm = DMatrix::identity(3, 3) * b;
        let qdot = DVector::from_vec(qdot);
        let p = compute_motion_power(&jac, &w, &bm, &qdot, gamma);
        let up = compute_beta(p, p_limit, &jac, &w, &bm, &qdot, gamma);
        prop_assert!(up.beta >= 1.0);
        if !up.degenerate {
            let injected = compute_motion_power(&jac, &w, &(&bm * up.beta), &qdot, gamma);
            prop_assert!(injected <= p_limit + 1e-9, "{injected} > {p_limit}");
        }
    }

    #[test]
    fn tank_respects_bounds_and_extraction_rate(
        e0 in 0.5..=5.0f64,
        powers in prop::collection::vec(-5.0..5.0f64, 1..300),
        dt in 1e-4..1e-2f64,
    ) {
        let params = TankParams::new(0.5, 5.0, -0.175).unwrap();
        let mut tank = TankState::new(e0, params).unwrap();
        for p in powers {
            let (next, g) = tank_step(&tank, p, dt);
            prop_assert!((0.5..=5.0).contains(&next.energy));
            prop_assert!(g.p_effective >= -0.175 - 1e-12);
            prop_assert!(g.gamma > 0.0 && g.gamma <= 1.0);
            if p <= 0.0 && tank.energy <= 0.5 {
                prop_assert_eq!(g.k, 0);
                prop_assert!(next.energy == tank.energy);
            }
            tank = next;
        }
    }
}
