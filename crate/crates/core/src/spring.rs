//! Variable spatial spring between the end-effector frame and a desired frame.
//!
//! The spring is parameterised by translational, rotational and coupling
//! stiffnesses `K_t`, `K_r`, `K_c` and works with their co-stiffnesses
//! `G = ½ tr(K) I − K`. With `R = R^d_EE`, `p = p^d_EE` (end-effector pose
//! seen from the desired frame) and `s = Rᵀ p`, the stored energy is
//!
//! ```text
//! U = −¼ tr(p̂ G_t p̂) − ¼ tr(ŝ G_t ŝ) + tr(G_r (I − R)) − tr(G_c p̂ R)
//! ```
//!
//! and the wrench it exerts on the end-effector, expressed in the
//! end-effector frame, is `w = −∂U/∂η` for a body-twist displacement `η`:
//!
//! ```text
//! f = −Rᵀ asy(G_t p̂) − asy(G_t ŝ) − 2 asy(G_c R)
//! m = −2 asy(G_r R) − asy(G_t ŝ ŝ) − 2 asy(G_c p̂ R)
//! ```
//!
//! Energy scaling multiplies all three co-stiffnesses by `λ`, so both `U`
//! and `w` are exactly linear in `λ`.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::lie::{asy, skew, Frame, Transform, Wrench};

/// `G = ½ tr(K) I − K`.
pub fn co_stiffness(k: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::identity() * (0.5 * k.trace()) - k
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSet {
    translational: Matrix3<f64>,
    rotational: Matrix3<f64>,
    coupling: Matrix3<f64>,
    scale: f64,
    co_translational: Matrix3<f64>,
    co_rotational: Matrix3<f64>,
    co_coupling: Matrix3<f64>,
}

impl StiffnessSet {
    /// Unscaled (`λ = 1`) spring. `K_t` and `K_r` must be symmetric.
    pub fn new(
        translational: Matrix3<f64>,
        rotational: Matrix3<f64>,
        coupling: Matrix3<f64>,
    ) -> Result<Self> {
        for (name, k) in [("translational", &translational), ("rotational", &rotational)] {
            if !k.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidStiffness(format!("{name} stiffness is not finite")));
            }
            if (k - k.transpose()).norm() > 1e-12 * (1.0 + k.norm()) {
                return Err(Error::InvalidStiffness(format!("{name} stiffness is not symmetric")));
            }
        }
        if !coupling.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidStiffness("coupling stiffness is not finite".into()));
        }
        Ok(Self {
            translational,
            rotational,
            coupling,
            scale: 1.0,
            co_translational: co_stiffness(&translational),
            co_rotational: co_stiffness(&rotational),
            co_coupling: co_stiffness(&coupling),
        })
    }

    /// Diagonal stiffnesses, the form used by every bundled preset.
    pub fn diagonal(kt: [f64; 3], kr: [f64; 3], kc: [f64; 3]) -> Result<Self> {
        let d = |v: [f64; 3]| Matrix3::from_diagonal(&v.into());
        Self::new(d(kt), d(kr), d(kc))
    }

    /// Returns a copy whose co-stiffnesses are `λ` times the *unscaled*
    /// baseline; repeated calls never compound.
    pub fn apply_energy_scale(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::ScaleOutOfRange(lambda));
        }
        Ok(Self {
            scale: lambda,
            co_translational: co_stiffness(&self.translational) * lambda,
            co_rotational: co_stiffness(&self.rotational) * lambda,
            co_coupling: co_stiffness(&self.coupling) * lambda,
            ..self.clone()
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn translational(&self) -> &Matrix3<f64> {
        &self.translational
    }

    pub fn rotational(&self) -> &Matrix3<f64> {
        &self.rotational
    }

    pub fn coupling(&self) -> &Matrix3<f64> {
        &self.coupling
    }

    /// Scaled co-stiffnesses `(G_t, G_r, G_c)`.
    pub fn co_stiffnesses(&self) -> (&Matrix3<f64>, &Matrix3<f64>, &Matrix3<f64>) {
        (&self.co_translational, &self.co_rotational, &self.co_coupling)
    }
}

/// Current and desired end-effector poses, both `H^0_·`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringState {
    pub current: Transform,
    pub desired: Transform,
}

impl SpringState {
    pub fn new(current: Transform, desired: Transform) -> Self {
        Self {
            current: current.labelled(Frame::Base, Frame::EndEffector),
            desired: desired.labelled(Frame::Base, Frame::Desired),
        }
    }

    /// `H^d_EE`.
    pub fn relative(&self) -> Transform {
        self.desired.inverse() * self.current
    }
}

/// Elastic wrench on the end-effector, expressed in the end-effector frame.
pub fn elastic_wrench(state: &SpringState, stiffness: &StiffnessSet) -> Wrench {
    let rel = state.relative();
    let r = *rel.rotation.matrix();
    let rt = r.transpose();
    let p_hat = skew(&rel.translation);
    let s_hat = skew(&(rt * rel.translation));
    let (gt, gr, gc) = stiffness.co_stiffnesses();

    let force = -(rt * asy(&(gt * p_hat))) - asy(&(gt * s_hat)) - 2.0 * asy(&(gc * r));
    let moment =
        -2.0 * asy(&(gr * r)) - asy(&(gt * s_hat * s_hat)) - 2.0 * asy(&(gc * p_hat * r));
    Wrench::new(force, moment, Frame::EndEffector)
}

/// `w^{0,EE} = Adᵀ_{H^EE_0} w^{EE,EE}`; the result's moment is about the base origin.
pub fn wrench_to_base(w_ee: &Wrench, current: &Transform) -> Result<Wrench> {
    let current = if current.target == Frame::Free {
        current.labelled(Frame::Base, Frame::EndEffector)
    } else {
        *current
    };
    if !w_ee.frame.compatible(current.target) {
        return Err(Error::FrameMismatch { left: w_ee.frame, right: current.target });
    }
    Ok(current.wrench_to_base(w_ee))
}

/// Energy stored in the (scaled) spring.
pub fn potential_energy(state: &SpringState, stiffness: &StiffnessSet) -> f64 {
    let rel = state.relative();
    let r = *rel.rotation.matrix();
    let p_hat = skew(&rel.translation);
    let s_hat = skew(&(r.transpose() * rel.translation));
    let (gt, gr, gc) = stiffness.co_stiffnesses();

    let translational = -0.25 * (p_hat * gt * p_hat).trace() - 0.25 * (s_hat * gt * s_hat).trace();
    let rotational = (gr * (Matrix3::identity() - r)).trace();
    let coupling = -(gc * p_hat * r).trace();
    translational + rotational + coupling
}
