//! Energy scaling `λ`, damping injection `β`, and the power terms they use.

use nalgebra::{DMatrix, DVector};

use crate::lie::{Twist, Wrench};

/// Below this potential the scaling formula is treated as degenerate [J].
pub const DEGENERATE_POTENTIAL: f64 = 1e-12;
/// Below this dissipation rate damping injection is skipped [W].
pub const DEGENERATE_DISSIPATION: f64 = 1e-9;

/// Which rule produced `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaBranch {
    /// Under the energy limit with energy available: full stiffness.
    Unscaled,
    /// Tank empty and the task still draining: `λ` may not grow.
    Hold,
    /// `λ = (Ē − T) / U`.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaUpdate {
    pub lambda: f64,
    pub branch: LambdaBranch,
    /// The scaling formula hit `U ≈ 0` and the previous value was kept.
    pub degenerate: bool,
}

fn scaled(t: f64, u: f64, e_limit: f64, lambda_prev: f64) -> (f64, bool) {
    if u < DEGENERATE_POTENTIAL {
        (lambda_prev, true)
    } else {
        (((e_limit - t) / u).clamp(0.0, 1.0), false)
    }
}

/// Energy-scaling rule.
///
/// `u` is the *unscaled* spring potential and `e_total = t + u`. In the hold
/// case the previous value is kept, but it may still shrink if the energy
/// limit would otherwise be exceeded.
pub fn compute_lambda(
    e_total: f64,
    t: f64,
    u: f64,
    e_limit: f64,
    k: u8,
    p_task: f64,
    lambda_prev: f64,
) -> LambdaUpdate {
    if k != 0 && e_total <= e_limit {
        return LambdaUpdate { lambda: 1.0, branch: LambdaBranch::Unscaled, degenerate: false };
    }
    if k == 0 && p_task <= 0.0 {
        let (lambda, degenerate) = if e_total > e_limit {
            let (cap, degenerate) = scaled(t, u, e_limit, lambda_prev);
            (lambda_prev.min(cap), degenerate)
        } else {
            (lambda_prev, false)
        };
        return LambdaUpdate { lambda, branch: LambdaBranch::Hold, degenerate };
    }
    let (lambda, degenerate) = scaled(t, u, e_limit, lambda_prev);
    LambdaUpdate { lambda, branch: LambdaBranch::Scaled, degenerate }
}

/// `(Jᵀ w)ᵀ q̇`, the power the spring wrench delivers to the joints.
pub fn spring_power(jac: &DMatrix<f64>, w: &Wrench, qdot: &DVector<f64>) -> f64 {
    let wv = w.to_vector();
    let tau = jac.transpose() * DVector::from_column_slice(wv.as_slice());
    tau.dot(qdot)
}

/// `q̇ᵀ B q̇`.
pub fn damping_power(b: &DMatrix<f64>, qdot: &DVector<f64>) -> f64 {
    qdot.dot(&(b * qdot))
}

/// `P_motion = (γ Jᵀ w − B q̇)ᵀ q̇`.
pub fn compute_motion_power(
    jac: &DMatrix<f64>,
    w: &Wrench,
    b: &DMatrix<f64>,
    qdot: &DVector<f64>,
    gamma: f64,
) -> f64 {
    gamma * spring_power(jac, w, qdot) - damping_power(b, qdot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaUpdate {
    pub beta: f64,
    /// The limit was exceeded but `q̇ᵀBq̇` was too small to act on.
    pub degenerate: bool,
}

/// Damping scale that brings `P_motion` down to `p_limit`.
pub fn compute_beta(
    p_motion: f64,
    p_limit: f64,
    jac: &DMatrix<f64>,
    w: &Wrench,
    b: &DMatrix<f64>,
    qdot: &DVector<f64>,
    gamma: f64,
) -> BetaUpdate {
    if p_motion <= p_limit {
        return BetaUpdate { beta: 1.0, degenerate: false };
    }
    let d = damping_power(b, qdot);
    if d < DEGENERATE_DISSIPATION {
        return BetaUpdate { beta: 1.0, degenerate: true };
    }
    let beta = (gamma * spring_power(jac, w, qdot) - p_limit) / d;
    BetaUpdate { beta: beta.max(1.0), degenerate: false }
}

/// `P_task = −wᵀ ẋ`. Negative when the spring does work on the robot.
pub fn compute_task_power(w: &Wrench, xdot: &Twist) -> f64 {
    debug_assert!(w.frame.compatible(xdot.frame), "{} vs {}", w.frame, xdot.frame);
    -w.power(xdot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Frame;
    use nalgebra::Vector3;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lambda_cases() {
        assert_eq!(compute_lambda(0.5, 0.1, 0.4, 0.7, 1, -1.0, 0.3).lambda, 1.0);
        let l = compute_lambda(1.3, 0.1, 1.2, 0.7, 1, -1.0, 1.0);
        assert!((l.lambda - 0.5).abs() < 1e-15);
        assert_eq!(l.branch, LambdaBranch::Scaled);
        let h = compute_lambda(0.5, 0.1, 0.4, 0.7, 0, -0.1, 0.4);
        assert_eq!((h.lambda, h.branch), (0.4, LambdaBranch::Hold));
    }

    #[test]
    fn hold_may_still_shrink() {
        let h = compute_lambda(1.3, 0.1, 1.2, 0.7, 0, -0.1, 0.9);
        assert!((h.lambda - 0.5).abs() < 1e-15);
        assert_eq!(h.branch, LambdaBranch::Hold);
        let h = compute_lambda(1.3, 0.1, 1.2, 0.7, 0, -0.1, 0.2);
        assert_eq!(h.lambda, 0.2);
    }

    #[test]
    fn lambda_clamped_and_degenerate() {
        // kinetic energy alone over the limit
        assert_eq!(compute_lambda(1.0, 0.9, 0.1, 0.7, 1, 0.0, 0.5).lambda, 0.0);
        // empty tank but absorbing: formula, clamped to 1
        assert_eq!(compute_lambda(0.3, 0.1, 0.2, 0.7, 0, 0.5, 0.5).lambda, 1.0);
        let d = compute_lambda(0.9, 0.9, 0.0, 0.7, 1, 0.0, 0.6);
        assert!(d.degenerate);
        assert_eq!(d.lambda, 0.6);
    }

    #[test]
    fn task_power_sign() {
        let w = Wrench::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros(), Frame::Base);
        let x = Twist::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros(), Frame::Base);
        assert_eq!(compute_task_power(&w, &x), -1.0);
        assert_eq!(compute_task_power(&w, &Twist::zero(Frame::Base)), 0.0);
        // spring pulls +x toward the goal and the end-effector moves +x
        let pull = Wrench::new(Vector3::new(9.0, 0.0, 0.0), Vector3::zeros(), Frame::Base);
        let toward = Twist::new(Vector3::new(0.02, 0.0, 0.0), Vector3::zeros(), Frame::Base);
        assert!(compute_task_power(&pull, &toward) < 0.0);
    }

    fn random_problem(rng: &mut StdRng) -> (DMatrix<f64>, Wrench, DMatrix<f64>, DVector<f64>) {
        let n = 7;
        let j = DMatrix::from_fn(6, n, |_, _| rng.random_range(-1.0..1.0));
        let w = Wrench::new(
            Vector3::from_fn(|_, _| rng.random_range(-20.0..20.0)),
            Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0)),
            Frame::Base,
        );
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let b = &a * a.transpose() + DMatrix::identity(n, n);
        let qd = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        (j, w, b, qd)
    }

    #[test]
    fn motion_power_matches_reevaluation() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..200 {
            let (j, w, b, qd) = random_problem(&mut rng);
            let gamma = rng.random_range(0.1..1.0);
            let wv = w.to_vector();
            let mut expected = 0.0;
            for c in 0..7 {
                let mut col = 0.0;
                for r in 0..6 {
                    col += j[(r, c)] * wv[r];
                }
                let mut damp = 0.0;
                for k in 0..7 {
                    damp += b[(c, k)] * qd[k];
                }
                expected += (gamma * col - damp) * qd[c];
            }
            let got = compute_motion_power(&j, &w, &b, &qd, gamma);
            assert!((got - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn motion_power_trivial_cases() {
        let mut rng = StdRng::seed_from_u64(22);
        let (j, _, b, qd) = random_problem(&mut rng);
        let w = Wrench::zero(Frame::Base);
        assert!(compute_motion_power(&j, &w, &b, &qd, 1.0) <= 0.0);
        assert_eq!(compute_motion_power(&j, &w, &b, &DVector::zeros(7), 1.0), 0.0);
    }

    #[test]
    fn beta_restores_limit() {
        let mut rng = StdRng::seed_from_u64(23);
        let p_limit = 0.5;
        let mut hits = 0;
        for _ in 0..500 {
            let (j, w, b, qd) = random_problem(&mut rng);
            let pm = compute_motion_power(&j, &w, &b, &qd, 1.0);
            let bu = compute_beta(pm, p_limit, &j, &w, &b, &qd, 1.0);
            assert!(bu.beta >= 1.0);
            if pm > p_limit {
                hits += 1;
                let post = spring_power(&j, &w, &qd) - bu.beta * damping_power(&b, &qd);
                assert!(post <= p_limit + 1e-9, "{post}");
            } else {
                assert_eq!(bu.beta, 1.0);
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn beta_for_twice_the_limit() {
        // single joint, J = [1,0,...], B = 1, q̇ = 1: P_motion = f − 1
        let j = DMatrix::from_fn(6, 1, |r, _| if r == 0 { 1.0 } else { 0.0 });
        let b = DMatrix::identity(1, 1);
        let qd = DVector::from_element(1, 1.0);
        let w = Wrench::new(Vector3::new(2.0, 0.0, 0.0), Vector3::zeros(), Frame::Base);
        let pm = compute_motion_power(&j, &w, &b, &qd, 1.0);
        assert_eq!(pm, 1.0);
        let bu = compute_beta(pm, 0.5, &j, &w, &b, &qd, 1.0);
        assert!((bu.beta - 1.5).abs() < 1e-15);
        assert!((2.0 - bu.beta - 0.5).abs() < 1e-9);
        assert_eq!(compute_beta(0.3, 0.5, &j, &w, &b, &qd, 1.0).beta, 1.0);
        let zero = Wrench::zero(Frame::Base);
        let pm0 = compute_motion_power(&j, &zero, &b, &qd, 1.0);
        assert_eq!(compute_beta(pm0, 0.5, &j, &zero, &b, &qd, 1.0).beta, 1.0);
    }

    #[test]
    fn beta_degenerate_at_rest() {
        let j = DMatrix::from_fn(6, 1, |r, _| if r == 0 { 1.0 } else { 0.0 });
        let b = DMatrix::identity(1, 1);
        let qd = DVector::from_element(1, 1e-6);
        let w = Wrench::new(Vector3::new(1e6, 0.0, 0.0), Vector3::zeros(), Frame::Base);
        let pm = compute_motion_power(&j, &w, &b, &qd, 1.0);
        let bu = compute_beta(pm, 0.5, &j, &w, &b, &qd, 1.0);
        assert!(bu.degenerate);
        assert_eq!(bu.beta, 1.0);
    }
}
