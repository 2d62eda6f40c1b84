use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{Rotation, Transform};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// One revolute joint. `offset` places the joint frame in its parent
/// (previous joint frame, or the base for joint 0) at `q = 0`; the joint then
/// rotates about `axis`, given in its own frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub offset: Transform,
    pub axis: Vector3<f64>,
    pub limits: (f64, f64),
}

/// Inertial data of the body carried by a joint, in that joint's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub mass: f64,
    pub com: Vector3<f64>,
    /// Rotational inertia about the centre of mass.
    pub inertia: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    name: String,
    joints: Vec<Joint>,
    links: Vec<Link>,
    tool: Transform,
    gravity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
}

impl RobotState {
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self { q, qdot: DVector::zeros(n) }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|x| x.is_finite())
    }
}

/// Per-joint entry of a chain loaded from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub axis: [f64; 3],
    /// Translation of the joint frame in its parent at `q = 0` [m].
    pub offset_xyz: [f64; 3],
    /// Fixed roll-pitch-yaw (x, then y, then z; extrinsic) of the joint frame in its parent [rad].
    #[serde(default)]
    pub offset_rpy: [f64; 3],
    pub mass: f64,
    pub com: [f64; 3],
    /// `[ixx, iyy, izz, ixy, ixz, iyz]` about the centre of mass [kg·m²].
    pub inertia: [f64; 6],
    #[serde(default = "default_limits")]
    pub limits: [f64; 2],
}

fn default_limits() -> [f64; 2] {
    [-std::f64::consts::PI, std::f64::consts::PI]
}

impl JointSpec {
    fn to_parts(&self) -> Result<(Joint, Link)> {
        let [r, p, y] = self.offset_rpy;
        let rot = Rotation::rot_z(y)
            * Rotation::from_axis_angle(&Vector3::y(), p)?
            * Rotation::rot_x(r);
        let axis = Vector3::from(self.axis);
        let norm = axis.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidModel("joint axis must be non-zero".into()));
        }
        let [ixx, iyy, izz, ixy, ixz, iyz] = self.inertia;
        let inertia = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
        Ok((
            Joint {
                offset: Transform::new(rot, self.offset_xyz.into()),
                axis: axis / norm,
                limits: (self.limits[0], self.limits[1]),
            },
            Link { mass: self.mass, com: self.com.into(), inertia },
        ))
    }
}

impl ChainModel {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<Joint>,
        links: Vec<Link>,
        tool: Transform,
        gravity: Vector3<f64>,
    ) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidModel("a chain needs at least one joint".into()));
        }
        if joints.len() != links.len() {
            return Err(Error::InvalidModel(format!(
                "{} joints but {} links",
                joints.len(),
                links.len()
            )));
        }
        for (i, j) in joints.iter().enumerate() {
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!("joint {i}: axis is not unit length")));
            }
            if !(j.limits.0 < j.limits.1) {
                return Err(Error::InvalidModel(format!("joint {i}: empty limit interval")));
            }
        }
        for (i, l) in links.iter().enumerate() {
            if !(l.mass > 0.0) || !l.mass.is_finite() {
                return Err(Error::InvalidModel(format!("link {i}: mass must be positive")));
            }
            if (l.inertia - l.inertia.transpose()).norm() > 1e-12 {
                return Err(Error::InvalidModel(format!("link {i}: inertia is not symmetric")));
            }
            if l.inertia.cholesky().is_none() {
                return Err(Error::InvalidModel(format!(
                    "link {i}: inertia is not positive definite"
                )));
            }
        }
        Ok(Self { name: name.into(), joints, links, tool, gravity })
    }

    pub fn from_specs(
        name: impl Into<String>,
        specs: &[JointSpec],
        tool_xyz: [f64; 3],
        gravity: [f64; 3],
    ) -> Result<Self> {
        let (joints, links) = specs
            .iter()
            .map(JointSpec::to_parts)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Self::new(name, joints, links, Transform::from_translation(tool_xyz.into()), gravity.into())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn tool(&self) -> &Transform {
        &self.tool
    }

    pub fn gravity(&self) -> &Vector3<f64> {
        &self.gravity
    }

    pub fn with_gravity(mut self, gravity: Vector3<f64>) -> Self {
        self.gravity = gravity;
        self
    }

    /// Clamps `q` into the joint limits, zeroing any velocity that pushes
    /// further out. Returns the number of joints that were clamped.
    pub fn clamp_to_limits(&self, state: &mut RobotState) -> usize {
        let mut clamped = 0;
        for (i, j) in self.joints.iter().enumerate() {
            let (lo, hi) = j.limits;
            if state.q[i] < lo {
                state.q[i] = lo;
                state.qdot[i] = state.qdot[i].max(0.0);
                clamped += 1;
            } else if state.q[i] > hi {
                state.q[i] = hi;
                state.qdot[i] = state.qdot[i].min(0.0);
                clamped += 1;
            }
        }
        clamped
    }

    /// Single revolute link swinging about `z` under gravity along `-y`; it
    /// hangs straight down at `q = 0`.
    pub fn pendulum(mass: f64, com_distance: f64, inertia_zz: f64, length: f64) -> Result<Self> {
        let link = Link {
            mass,
            com: Vector3::new(0.0, -com_distance, 0.0),
            inertia: Matrix3::from_diagonal(&Vector3::new(inertia_zz, 1e-4, inertia_zz)),
        };
        let joint = Joint { offset: Transform::identity(), axis: Vector3::z(), limits: (-10.0, 10.0) };
        Self::new(
            "pendulum",
            vec![joint],
            vec![link],
            Transform::from_translation(Vector3::new(0.0, -length, 0.0)),
            Vector3::new(0.0, -STANDARD_GRAVITY, 0.0),
        )
    }

    /// Planar chain in the x–y plane with joints about `z` and links along
    /// their local `x`. Uniform slender rods.
    pub fn planar(lengths: &[f64], masses: &[f64], gravity: Vector3<f64>) -> Result<Self> {
        if lengths.len() != masses.len() || lengths.is_empty() {
            return Err(Error::InvalidModel("planar chain needs matching lengths/masses".into()));
        }
        let mut joints = Vec::new();
        let mut links = Vec::new();
        let mut prev_len = 0.0;
        for (&l, &m) in lengths.iter().zip(masses) {
            joints.push(Joint {
                offset: Transform::from_translation(Vector3::new(prev_len, 0.0, 0.0)),
                axis: Vector3::z(),
                limits: (-10.0, 10.0),
            });
            let rod = m * l * l / 12.0;
            links.push(Link {
                mass: m,
                com: Vector3::new(0.5 * l, 0.0, 0.0),
                inertia: Matrix3::from_diagonal(&Vector3::new(1e-3 * m, rod, rod)),
            });
            prev_len = l;
        }
        Self::new(
            format!("planar{}", lengths.len()),
            joints,
            links,
            Transform::from_translation(Vector3::new(prev_len, 0.0, 0.0)),
            gravity,
        )
    }

    /// 3-DOF planar arm in a vertical plane (gravity along `-y`).
    pub fn planar3() -> Self {
        Self::planar(
            &[1.0, 0.8, 0.6],
            &[1.0, 0.8, 0.6],
            Vector3::new(0.0, -STANDARD_GRAVITY, 0.0),
        )
        .expect("bundled planar3 parameters are valid")
    }

    /// 7-DOF arm with the kinematic layout (modified DH) and identified
    /// inertial parameters of a Franka Emika Panda, plus a straight tool of
    /// `tool_length` metres beyond the flange.
    pub fn panda7(tool_length: f64) -> Self {
        use std::f64::consts::FRAC_PI_2;
        // (a, d, alpha) per joint, modified DH.
        const DH: [(f64, f64, f64); 7] = [
            (0.0, 0.333, 0.0),
            (0.0, 0.0, -FRAC_PI_2),
            (0.0, 0.316, FRAC_PI_2),
            (0.0825, 0.0, FRAC_PI_2),
            (-0.0825, 0.384, -FRAC_PI_2),
            (0.0, 0.0, FRAC_PI_2),
            (0.088, 0.0, FRAC_PI_2),
        ];
        const LIMITS: [(f64, f64); 7] = [
            (-2.8973, 2.8973),
            (-1.7628, 1.7628),
            (-2.8973, 2.8973),
            (-3.0718, -0.0698),
            (-2.8973, 2.8973),
            (-0.0175, 3.7525),
            (-2.8973, 2.8973),
        ];
        // mass, com, diagonal inertia
        const INERTIAL: [(f64, [f64; 3], [f64; 3]); 7] = [
            (4.970684, [0.003875, 0.002081, -0.04762], [0.70337, 0.70661, 0.0091170]),
            (0.646926, [-0.003141, -0.02872, 0.003495], [0.0079620, 0.028110, 0.025995]),
            (3.228604, [0.027518, 0.039252, -0.066502], [0.037242, 0.036155, 0.010830]),
            (3.587895, [-0.05317, 0.104419, 0.027454], [0.025853, 0.019552, 0.028323]),
            (1.225946, [-0.011953, 0.041065, -0.038437], [0.035549, 0.029474, 0.0086270]),
            (1.666555, [0.060149, -0.014117, -0.010517], [0.0019640, 0.0043540, 0.0054330]),
            (0.735522, [0.010517, -0.004252, 0.061597], [0.012516, 0.010027, 0.0048150]),
        ];
        let mut joints = Vec::with_capacity(7);
        let mut links = Vec::with_capacity(7);
        for i in 0..7 {
            let (a, d, alpha) = DH[i];
            let offset = Transform::from_rotation(Rotation::rot_x(alpha))
                * Transform::from_translation(Vector3::new(a, 0.0, d));
            joints.push(Joint { offset, axis: Vector3::z(), limits: LIMITS[i] });
            let (mass, com, diag) = INERTIAL[i];
            links.push(Link {
                mass,
                com: com.into(),
                inertia: Matrix3::from_diagonal(&diag.into()),
            });
        }
        Self::new(
            "panda7",
            joints,
            links,
            Transform::from_translation(Vector3::new(0.0, 0.0, 0.107 + tool_length)),
            Vector3::new(0.0, 0.0, -STANDARD_GRAVITY),
        )
        .expect("bundled panda7 parameters are valid")
    }
}
