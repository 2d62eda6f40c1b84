//! Kinematics and rigid-body dynamics of a [`ChainModel`].
//!
//! The mass matrix uses the composite-rigid-body algorithm with spatial
//! inertias referred to the base origin. Bias forces (Coriolis/centrifugal and
//! gravity) use recursive Newton–Euler in base coordinates. The two are
//! independent code paths and are cross-checked in the tests.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use super::model::{ChainModel, RobotState};
use crate::error::{Error, Result};
use crate::lie::{skew, Frame, Rotation, Transform, Twist, Wrench};

/// Base-frame pose of every joint frame (after its rotation).
pub fn joint_frames(model: &ChainModel, q: &DVector<f64>) -> Vec<Transform> {
    let mut frames = Vec::with_capacity(model.dof());
    let mut acc = Transform::identity();
    for (joint, &qi) in model.joints().iter().zip(q.iter()) {
        let spin = Rotation::exp(&(joint.axis * qi));
        acc = acc * joint.offset * Transform::from_rotation(spin);
        frames.push(acc);
    }
    frames
}

/// `H^0_EE`.
pub fn forward_kinematics(model: &ChainModel, q: &DVector<f64>) -> Transform {
    let frames = joint_frames(model, q);
    (*frames.last().expect("chain has at least one joint") * *model.tool())
        .labelled(Frame::Base, Frame::EndEffector)
}

fn axes_and_origins(model: &ChainModel, frames: &[Transform]) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    frames
        .iter()
        .zip(model.joints())
        .map(|(f, j)| (f.rotation * j.axis, f.translation))
        .collect()
}

/// Geometric Jacobian in base coordinates: rows `[v_EE; ω]`, where `v_EE` is
/// the velocity of the end-effector point.
pub fn jacobian(model: &ChainModel, q: &DVector<f64>) -> DMatrix<f64> {
    let frames = joint_frames(model, q);
    let p_ee = (*frames.last().unwrap() * *model.tool()).translation;
    let mut j = DMatrix::zeros(6, model.dof());
    for (i, (z, o)) in axes_and_origins(model, &frames).into_iter().enumerate() {
        let lin = z.cross(&(p_ee - o));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    j
}

/// Jacobian whose linear rows give the velocity of the body point passing
/// through the base origin. Pairs with wrenches whose moment is taken about
/// the base origin (the output of [`crate::spring::wrench_to_base`]).
pub fn spatial_jacobian(model: &ChainModel, q: &DVector<f64>) -> DMatrix<f64> {
    let p_ee = forward_kinematics(model, q).translation;
    shift_to_origin(jacobian(model, q), &p_ee)
}

pub(crate) fn shift_to_origin(mut j: DMatrix<f64>, p_ee: &Vector3<f64>) -> DMatrix<f64> {
    let shift = skew(p_ee);
    for c in 0..j.ncols() {
        let w = Vector3::new(j[(3, c)], j[(4, c)], j[(5, c)]);
        let add = shift * w;
        for r in 0..3 {
            j[(r, c)] += add[r];
        }
    }
    j
}

/// End-effector twist `J q̇` (geometric form).
pub fn ee_twist(jac: &DMatrix<f64>, qdot: &DVector<f64>) -> Twist {
    let v = jac * qdot;
    Twist::from_vector(&Vector6::from_column_slice(v.as_slice()), Frame::Base)
}

/// Joint torques `Jᵀ w` for a base-origin wrench and the matching spatial Jacobian.
pub fn wrench_to_torque(spatial_jac: &DMatrix<f64>, w: &Wrench) -> DVector<f64> {
    let v = w.to_vector();
    spatial_jac.transpose() * DVector::from_column_slice(v.as_slice())
}

struct LinkWorld {
    com: Vector3<f64>,
    inertia: Matrix3<f64>,
}

fn links_in_world(model: &ChainModel, frames: &[Transform]) -> Vec<LinkWorld> {
    frames
        .iter()
        .zip(model.links())
        .map(|(f, l)| {
            let r = f.rotation.matrix();
            LinkWorld { com: f.transform_point(&l.com), inertia: r * l.inertia * r.transpose() }
        })
        .collect()
}

/// Composite-rigid-body mass matrix.
pub fn mass_matrix(model: &ChainModel, q: &DVector<f64>) -> DMatrix<f64> {
    let n = model.dof();
    let frames = joint_frames(model, q);
    let world = links_in_world(model, &frames);

    // Spatial inertia about the base origin, ordering (angular; linear).
    let spatial: Vec<Matrix6<f64>> = world
        .iter()
        .zip(model.links())
        .map(|(lw, l)| {
            let c = skew(&lw.com);
            let mut i = Matrix6::zeros();
            i.fixed_view_mut::<3, 3>(0, 0).copy_from(&(lw.inertia - l.mass * c * c));
            i.fixed_view_mut::<3, 3>(0, 3).copy_from(&(l.mass * c));
            i.fixed_view_mut::<3, 3>(3, 0).copy_from(&(l.mass * c.transpose()));
            i.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * l.mass));
            i
        })
        .collect();

    let motion: Vec<Vector6<f64>> = axes_and_origins(model, &frames)
        .into_iter()
        .map(|(z, o)| {
            let mut s = Vector6::zeros();
            s.fixed_rows_mut::<3>(0).copy_from(&z);
            s.fixed_rows_mut::<3>(3).copy_from(&o.cross(&z));
            s
        })
        .collect();

    let mut composite = vec![Matrix6::zeros(); n];
    let mut acc = Matrix6::zeros();
    for i in (0..n).rev() {
        acc += spatial[i];
        composite[i] = acc;
    }

    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = motion[i].dot(&(composite[j] * motion[j]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Recursive Newton–Euler inverse dynamics with an explicit gravity vector.
pub fn inverse_dynamics(
    model: &ChainModel,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    qddot: &DVector<f64>,
    gravity: &Vector3<f64>,
) -> DVector<f64> {
    let n = model.dof();
    let frames = joint_frames(model, q);
    let world = links_in_world(model, &frames);
    let axes = axes_and_origins(model, &frames);

    let mut omega = vec![Vector3::zeros(); n];
    let mut alpha = vec![Vector3::zeros(); n];
    let mut acc_com = vec![Vector3::zeros(); n];

    let mut w_prev = Vector3::zeros();
    let mut a_prev = Vector3::zeros();
    let mut acc_origin_prev = -gravity;
    let mut origin_prev = Vector3::zeros();
    for i in 0..n {
        let (z, o) = axes[i];
        let d = o - origin_prev;
        let acc_origin = acc_origin_prev + a_prev.cross(&d) + w_prev.cross(&w_prev.cross(&d));
        let w = w_prev + z * qdot[i];
        let a = a_prev + z * qddot[i] + w_prev.cross(&(z * qdot[i]));
        let r = world[i].com - o;
        acc_com[i] = acc_origin + a.cross(&r) + w.cross(&w.cross(&r));
        omega[i] = w;
        alpha[i] = a;
        w_prev = w;
        a_prev = a;
        acc_origin_prev = acc_origin;
        origin_prev = o;
    }

    let mut tau = DVector::zeros(n);
    let mut f_next = Vector3::zeros();
    let mut n_next = Vector3::zeros();
    let mut origin_next = Vector3::zeros();
    for i in (0..n).rev() {
        let (z, o) = axes[i];
        let m = model.links()[i].mass;
        let f_body = acc_com[i] * m;
        let inertia = world[i].inertia;
        let r = world[i].com - o;
        let f = f_body + f_next;
        let lever = if i + 1 < n { origin_next - o } else { Vector3::zeros() };
        let moment = inertia * alpha[i]
            + omega[i].cross(&(inertia * omega[i]))
            + r.cross(&f_body)
            + n_next
            + lever.cross(&f_next);
        tau[i] = z.dot(&moment);
        f_next = f;
        n_next = moment;
        origin_next = o;
    }
    tau
}

/// `g(q)`.
pub fn gravity_vector(model: &ChainModel, q: &DVector<f64>) -> DVector<f64> {
    let z = DVector::zeros(model.dof());
    inverse_dynamics(model, q, &z, &z, model.gravity())
}

/// `C(q, q̇) q̇`.
pub fn coriolis_vector(model: &ChainModel, q: &DVector<f64>, qdot: &DVector<f64>) -> DVector<f64> {
    let z = DVector::zeros(model.dof());
    inverse_dynamics(model, q, qdot, &z, &Vector3::zeros())
}

/// Potential energy of the links in the model's gravity field.
pub fn gravity_potential(model: &ChainModel, q: &DVector<f64>) -> f64 {
    let frames = joint_frames(model, q);
    links_in_world(model, &frames)
        .iter()
        .zip(model.links())
        .map(|(lw, l)| -l.mass * model.gravity().dot(&lw.com))
        .sum()
}

/// `½ q̇ᵀ M q̇`.
pub fn kinetic_coenergy(model: &ChainModel, state: &RobotState) -> f64 {
    let m = mass_matrix(model, &state.q);
    0.5 * state.qdot.dot(&(m * &state.qdot))
}

/// `q̈ = M⁻¹ (τ − C q̇ − g)`.
pub fn forward_dynamics(model: &ChainModel, state: &RobotState, tau: &DVector<f64>) -> Result<DVector<f64>> {
    if tau.len() != model.dof() {
        return Err(Error::Dimension { expected: model.dof(), got: tau.len() });
    }
    let m = mass_matrix(model, &state.q);
    let bias = inverse_dynamics(model, &state.q, &state.qdot, &DVector::zeros(model.dof()), model.gravity());
    solve_spd(m, tau - bias).ok_or_else(|| Error::SingularMassMatrix(state.q.iter().copied().collect()))
}

pub(crate) fn solve_spd(m: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    m.cholesky().map(|c| c.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::model::STANDARD_GRAVITY;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_PI_2;

    fn rand_q(rng: &mut StdRng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.5..1.5))
    }

    #[test]
    fn zero_configuration_is_product_of_offsets() {
        let m = ChainModel::panda7(0.1);
        let q = DVector::zeros(7);
        let mut acc = Transform::identity();
        for j in m.joints() {
            acc = acc * j.offset;
        }
        acc = acc * *m.tool();
        let fk = forward_kinematics(&m, &q);
        assert!((fk.translation - acc.translation).norm() < 1e-14);
        assert!((fk.rotation.matrix() - acc.rotation.matrix()).norm() < 1e-14);
    }

    #[test]
    fn planar_two_link_hand_value() {
        let m = ChainModel::planar(&[1.0, 1.0], &[1.0, 1.0], Vector3::zeros()).unwrap();
        let fk = forward_kinematics(&m, &DVector::from_vec(vec![FRAC_PI_2, 0.0]));
        assert!((fk.translation - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pendulum_jacobian_is_tangent() {
        let l = 0.8;
        let m = ChainModel::pendulum(2.0, 0.4, 0.05, l).unwrap();
        for &q in &[0.0, 0.3, -1.2, 2.5] {
            let j = jacobian(&m, &DVector::from_element(1, q));
            // tip at (l sin q, -l cos q); velocity l q̇ (cos q, sin q)
            let v = Vector3::new(j[(0, 0)], j[(1, 0)], j[(2, 0)]);
            assert!((v - Vector3::new(l * q.cos(), l * q.sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(11);
        let m = ChainModel::panda7(0.1);
        let h = 1e-6;
        for _ in 0..20 {
            let q = rand_q(&mut rng, 7);
            let j = jacobian(&m, &q);
            let base = forward_kinematics(&m, &q);
            for i in 0..7 {
                let mut qp = q.clone();
                qp[i] += h;
                let mut qm = q.clone();
                qm[i] -= h;
                let tp = forward_kinematics(&m, &qp);
                let tm = forward_kinematics(&m, &qm);
                let dp = (tp.translation - tm.translation) / (2.0 * h);
                let dr = (tp.rotation.matrix() - tm.rotation.matrix()) / (2.0 * h);
                let w_hat = dr * base.rotation.matrix().transpose();
                let w = crate::lie::asy(&w_hat);
                for r in 0..3 {
                    assert!((j[(r, i)] - dp[r]).abs() < 1e-6);
                    assert!((j[(r + 3, i)] - w[r]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_velocity_zero_twist() {
        let m = ChainModel::planar3();
        let j = jacobian(&m, &DVector::from_vec(vec![0.2, 0.3, -0.4]));
        assert_eq!(ee_twist(&j, &DVector::zeros(3)).to_vector(), Vector6::zeros());
    }

    #[test]
    fn position_matches_path_integral_of_jacobian() {
        let mut rng = StdRng::seed_from_u64(12);
        let m = ChainModel::panda7(0.1);
        for _ in 0..5 {
            let q1 = rand_q(&mut rng, 7);
            let q0 = DVector::zeros(7);
            let dq = &q1 - &q0;
            // RK4 along the straight joint-space path
            let steps = 200;
            let h = 1.0 / steps as f64;
            let vel = |s: f64| {
                let q = &q0 + &dq * s;
                let j = jacobian(&m, &q);
                let v = &j * &dq;
                Vector3::new(v[0], v[1], v[2])
            };
            let mut p = forward_kinematics(&m, &q0).translation;
            for k in 0..steps {
                let s = k as f64 * h;
                let k1 = vel(s);
                let k2 = vel(s + 0.5 * h);
                let k4 = vel(s + h);
                p += (k1 + 4.0 * k2 + k4) * (h / 6.0);
            }
            assert!((p - forward_kinematics(&m, &q1).translation).norm() < 1e-6);
        }
    }

    #[test]
    fn pendulum_inertia_and_gravity() {
        let (mass, lc, izz) = (2.0, 0.4, 0.05);
        let m = ChainModel::pendulum(mass, lc, izz, 0.8).unwrap();
        for &q in &[0.0, 1.0, -2.0] {
            let mm = mass_matrix(&m, &DVector::from_element(1, q));
            assert!((mm[(0, 0)] - (mass * lc * lc + izz)).abs() < 1e-12);
        }
        let g0 = gravity_vector(&m, &DVector::from_element(1, 0.0));
        assert!(g0[0].abs() < 1e-12);
        let g90 = gravity_vector(&m, &DVector::from_element(1, FRAC_PI_2));
        assert!((g90[0] - mass * STANDARD_GRAVITY * lc).abs() < 1e-12);
        let state = RobotState { q: DVector::from_element(1, 0.7), qdot: DVector::from_element(1, 1.3) };
        let t = kinetic_coenergy(&m, &state);
        assert!((t - 0.5 * (mass * lc * lc + izz) * 1.3 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn horizontal_chain_feels_no_gravity_torque() {
        let m = ChainModel::planar(&[1.0, 0.5, 0.7], &[1.0, 2.0, 0.3], Vector3::new(0.0, 0.0, -9.81))
            .unwrap();
        let g = gravity_vector(&m, &DVector::from_vec(vec![0.3, -1.0, 2.0]));
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn gravity_is_gradient_of_potential() {
        let mut rng = StdRng::seed_from_u64(13);
        let m = ChainModel::panda7(0.1);
        let h = 1e-6;
        for _ in 0..10 {
            let q = rand_q(&mut rng, 7);
            let g = gravity_vector(&m, &q);
            for i in 0..7 {
                let mut qp = q.clone();
                qp[i] += h;
                let mut qm = q.clone();
                qm[i] -= h;
                let fd = (gravity_potential(&m, &qp) - gravity_potential(&m, &qm)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "joint {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn mass_matrix_spd_and_matches_rnea_columns() {
        let mut rng = StdRng::seed_from_u64(14);
        let m = ChainModel::panda7(0.1);
        for _ in 0..10 {
            let q = rand_q(&mut rng, 7);
            let mm = mass_matrix(&m, &q);
            assert!((&mm - mm.transpose()).norm() < 1e-9);
            for _ in 0..100 {
                let x = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
                assert!(x.dot(&(&mm * &x)) > 0.0);
            }
            let zero = DVector::zeros(7);
            for c in 0..7 {
                let mut e = DVector::zeros(7);
                e[c] = 1.0;
                let col = inverse_dynamics(&m, &q, &zero, &e, &Vector3::zeros());
                assert!((col - mm.column(c)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn mdot_minus_two_c_is_skew() {
        let mut rng = StdRng::seed_from_u64(15);
        let m = ChainModel::panda7(0.1);
        let h = 1e-5;
        for _ in 0..20 {
            let q = rand_q(&mut rng, 7);
            let qd = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
            let mdot = (mass_matrix(&m, &(&q + &qd * h)) - mass_matrix(&m, &(&q - &qd * h))) / (2.0 * h);
            let c = coriolis_vector(&m, &q, &qd);
            let val = qd.dot(&(&mdot * &qd)) - 2.0 * qd.dot(&c);
            assert!(val.abs() < 1e-8, "{val}");
        }
    }

    #[test]
    fn free_rest_has_no_acceleration() {
        let m = ChainModel::planar3().with_gravity(Vector3::zeros());
        let s = RobotState::at_rest(DVector::from_vec(vec![0.1, 0.2, 0.3]));
        let qdd = forward_dynamics(&m, &s, &DVector::zeros(3)).unwrap();
        assert!(qdd.norm() < 1e-14);
        assert!(forward_dynamics(&m, &s, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn jacobian_transpose_duality() {
        let mut rng = StdRng::seed_from_u64(16);
        let m = ChainModel::panda7(0.1);
        for _ in 0..50 {
            let q = rand_q(&mut rng, 7);
            let js = spatial_jacobian(&m, &q);
            let qd = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
            let w = Wrench::new(
                Vector3::new(rng.random_range(-5.0..5.0), 1.0, -2.0),
                Vector3::new(0.3, rng.random_range(-1.0..1.0), 0.1),
                Frame::Base,
            );
            let lhs = wrench_to_torque(&js, &w).dot(&qd);
            let rhs = w.power(&ee_twist(&js, &qd));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_and_geometric_jacobians_agree_on_power() {
        let m = ChainModel::panda7(0.1);
        let q = DVector::from_vec(vec![0.1, -0.7, 0.2, -2.3, 0.1, 1.6, 0.7]);
        let qd = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.5, -0.4, 0.2, 0.9]);
        let pose = forward_kinematics(&m, &q);
        let f = Vector3::new(1.0, -2.0, 3.0);
        let w_point = Wrench::new(f, Vector3::new(0.1, 0.2, -0.3), Frame::Free);
        let w_origin = Transform::from_translation(pose.translation).wrench_to_base(&w_point);
        let p1 = w_point.power(&ee_twist(&jacobian(&m, &q), &qd));
        let p2 = w_origin.power(&ee_twist(&spatial_jacobian(&m, &q), &qd));
        assert!((p1 - p2).abs() < 1e-12);
    }
}
