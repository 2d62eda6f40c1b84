//! Frame-explicit SE(3)/SO(3) arithmetic.
//!
//! Conventions used throughout the crate:
//!
//! * vectors are column vectors;
//! * a [`Twist`] stacks as `[linear; angular]` and a [`Wrench`] as
//!   `[force; moment]`, so `wrench.to_vector().dot(&twist.to_vector())` is
//!   the power exchanged;
//! * a `Transform` labelled `(base, target)` is the pose of `target` seen
//!   from `base`, i.e. `H^base_target`.
//!
//! Frame labels are metadata. They are compared with `debug_assert!` at the
//! places where two quantities are combined and never inspected by the
//! numeric paths in release builds.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

const UNIT_AXIS_TOL: f64 = 1e-9;

/// Label attached to poses, twists and wrenches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Base,
    EndEffector,
    Desired,
    Link(u16),
    /// Matches any other label; used for scratch values in tests and helpers.
    Free,
}

impl Frame {
    pub fn compatible(self, other: Frame) -> bool {
        self == other || self == Frame::Free || other == Frame::Free
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Base => write!(f, "base"),
            Frame::EndEffector => write!(f, "ee"),
            Frame::Desired => write!(f, "desired"),
            Frame::Link(i) => write!(f, "link{i}"),
            Frame::Free => write!(f, "free"),
        }
    }
}

/// The hat operator: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Axial vector of the antisymmetric part of `m`, i.e. the `v` with
/// `skew(v) == (m - mᵀ) / 2`.
pub fn asy(m: &Matrix3<f64>) -> Vector3<f64> {
    0.5 * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps a matrix after checking `R Rᵀ = I` and `det R = 1` to `1e-9`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m * m.transpose() - Matrix3::identity()).norm();
        let det = m.determinant();
        if !m.iter().all(|x| x.is_finite()) || orth > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRotation { orthogonality: orth, determinant: det });
        }
        Ok(Self(m))
    }

    /// Rodrigues' formula. The axis must be unit length to `1e-9`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let norm = axis.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_AXIS_TOL {
            return Err(Error::NonUnitAxis(norm));
        }
        Ok(Self::exp(&(axis * angle)))
    }

    /// Exponential map from a rotation vector.
    pub fn exp(omega: &Vector3<f64>) -> Self {
        let theta = omega.norm();
        let k = skew(omega);
        let (a, b) = if theta < 1e-8 {
            (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Self(Matrix3::identity() + a * k + b * k * k)
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::exp(&(Vector3::x() * angle))
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::exp(&(Vector3::z() * angle))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Rigid pose `H^base_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
    pub base: Frame,
    pub target: Frame,
}

impl Transform {
    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vector3::zeros())
    }

    /// Unlabelled transform (both ends [`Frame::Free`]).
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Self { rotation, translation, base: Frame::Free, target: Frame::Free }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Rotation::identity(), translation)
    }

    pub fn from_rotation(rotation: Rotation) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    pub fn labelled(mut self, base: Frame, target: Frame) -> Self {
        self.base = base;
        self.target = target;
        self
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
            base: self.target,
            target: self.base,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * *p + self.translation
    }

    /// Twist adjoint for `[linear; angular]` ordering: maps a twist expressed
    /// in `target` to the same motion expressed in `base`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = *self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(&self.translation) * r));
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad
    }

    /// `Adᵀ_{T⁻¹}`: maps a wrench expressed in `target` to the same force
    /// screw expressed in `base`.
    pub fn adjoint_transpose(&self) -> Matrix6<f64> {
        self.inverse().adjoint().transpose()
    }

    /// Moves a wrench from the `target` frame to the `base` frame.
    pub fn wrench_to_base(&self, w: &Wrench) -> Wrench {
        debug_assert!(
            w.frame.compatible(self.target),
            "wrench in {} applied to transform ending in {}",
            w.frame,
            self.target
        );
        Wrench::from_vector(&(self.adjoint_transpose() * w.to_vector()), self.base)
    }

    /// Moves a twist from the `target` frame to the `base` frame.
    pub fn twist_to_base(&self, t: &Twist) -> Twist {
        debug_assert!(t.frame.compatible(self.target));
        Twist::from_vector(&(self.adjoint() * t.to_vector()), self.base)
    }

    /// SE(3) exponential of a twist `[v; ω]` (unlabelled result).
    pub fn exp(twist: &Vector6<f64>) -> Self {
        let v = twist.fixed_rows::<3>(0).into_owned();
        let w = twist.fixed_rows::<3>(3).into_owned();
        let theta = w.norm();
        let k = skew(&w);
        let (b, c) = if theta < 1e-8 {
            (0.5 - theta * theta / 24.0, 1.0 / 6.0 - theta * theta / 120.0)
        } else {
            let t2 = theta * theta;
            ((1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
        };
        let jl = Matrix3::identity() + b * k + c * k * k;
        Self::new(Rotation::exp(&w), jl * v)
    }
}

impl Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        debug_assert!(
            self.target.compatible(rhs.base),
            "composing {}->{} with {}->{}",
            self.base,
            self.target,
            rhs.base,
            rhs.target
        );
        Transform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
            base: self.base,
            target: rhs.target,
        }
    }
}

/// Spatial velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
    pub frame: Frame,
}

impl Twist {
    pub fn zero(frame: Frame) -> Self {
        Self { angular: Vector3::zeros(), linear: Vector3::zeros(), frame }
    }

    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>, frame: Frame) -> Self {
        Self { angular, linear, frame }
    }

    pub fn from_vector(v: &Vector6<f64>, frame: Frame) -> Self {
        Self {
            linear: v.fixed_rows::<3>(0).into_owned(),
            angular: v.fixed_rows::<3>(3).into_owned(),
            frame,
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut out = Vector6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        out.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        out
    }
}

/// Force/moment pair. The moment is taken about the origin of `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
    pub frame: Frame,
}

impl Wrench {
    pub fn zero(frame: Frame) -> Self {
        Self { force: Vector3::zeros(), moment: Vector3::zeros(), frame }
    }

    pub fn new(force: Vector3<f64>, moment: Vector3<f64>, frame: Frame) -> Self {
        Self { force, moment, frame }
    }

    pub fn from_vector(v: &Vector6<f64>, frame: Frame) -> Self {
        Self {
            force: v.fixed_rows::<3>(0).into_owned(),
            moment: v.fixed_rows::<3>(3).into_owned(),
            frame,
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut out = Vector6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.force);
        out.fixed_rows_mut::<3>(3).copy_from(&self.moment);
        out
    }

    /// Power delivered by this wrench along `twist`.
    pub fn power(&self, twist: &Twist) -> f64 {
        debug_assert!(self.frame.compatible(twist.frame));
        self.force.dot(&twist.linear) + self.moment.dot(&twist.angular)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { force: self.force * s, moment: self.moment * s, frame: self.frame }
    }

    /// Addition that refuses mismatched frames in every build profile.
    pub fn checked_add(&self, rhs: &Wrench) -> Result<Wrench> {
        if !self.frame.compatible(rhs.frame) {
            return Err(Error::FrameMismatch { left: self.frame, right: rhs.frame });
        }
        let frame = if self.frame == Frame::Free { rhs.frame } else { self.frame };
        Ok(Wrench { force: self.force + rhs.force, moment: self.moment + rhs.moment, frame })
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        debug_assert!(self.frame.compatible(rhs.frame), "adding {} to {}", self.frame, rhs.frame);
        let frame = if self.frame == Frame::Free { rhs.frame } else { self.frame };
        Wrench { force: self.force + rhs.force, moment: self.moment + rhs.moment, frame }
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        self + (-rhs)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        self.scale(-1.0)
    }
}
