//! Planar articulated rigid-body dynamics in generalized coordinates.
//!
//! The robot is a floating pelvis that translates in the sagittal plane
//! (horizontal `x`, vertical `z`; pitch is not a coordinate at all) carrying
//! two serial legs of revolute joints. Generalized coordinates are
//! `[x, z, joint_0, .., joint_{n-1}]`.
//!
//! Link orientation is an absolute angle `phi` measured from the downward
//! vertical, positive when the distal end moves forward (+x). A link's
//! direction is `u(phi) = (sin phi, -cos phi)`. Each joint contributes
//! `axis_sign * q + angle_offset` to its child's absolute angle, so all
//! joint angles zero is the straight vertical reference pose.

mod energy;
mod integrate;
mod kinematics;
mod mass;

use nalgebra::{SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use energy::{gravitational_energy, kinetic_energy, total_energy, ElasticElement};
pub use integrate::{step, step_refined, GeneralizedForces, Refinement};
pub use kinematics::{
    attachment_kinematics, forward_kinematics, point_jacobian, point_velocity, BodyFrames,
    PointKinematics,
};
pub use mass::{bias_forces, forward_dynamics, mass_matrix, mass_matrix_without_armature};

/// Number of base coordinates (pelvis x and z).
pub const BASE_DOF: usize = 2;
/// Revolute joints in the biped (hip, knee, ankle, foot per leg).
pub const JOINT_COUNT: usize = 8;
/// Total generalized coordinates.
pub const NDOF: usize = BASE_DOF + JOINT_COUNT;

pub const BASE_X: usize = 0;
pub const BASE_Z: usize = 1;

pub type DofVector = SVector<f64, NDOF>;
pub type DofMatrix = SMatrix<f64, NDOF, NDOF>;
pub type PointJacobian = SMatrix<f64, 2, NDOF>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    /// Distance between the proximal and distal joint, meters.
    pub length: f64,
    pub mass: f64,
    /// Rotational inertia about the center of mass, kg m^2.
    pub inertia: f64,
    /// Center of mass position along the link axis from the proximal joint.
    pub com_offset: f64,
}

impl LinkSpec {
    /// Link with the center of mass at mid-length.
    pub fn centered(name: &str, length: f64, mass: f64, inertia: f64) -> Self {
        Self {
            name: name.to_string(),
            length,
            mass,
            inertia,
            com_offset: length / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("link `{}`: {what}", self.name)));
        if !(self.length.is_finite() && self.mass.is_finite() && self.inertia.is_finite())
            || !self.com_offset.is_finite()
        {
            return bad("non-finite parameter");
        }
        if self.mass <= 0.0 {
            return bad("mass must be positive");
        }
        if self.inertia < 0.0 {
            return bad("inertia must be non-negative");
        }
        if self.length < 0.0 {
            return bad("length must be non-negative");
        }
        if self.com_offset < 0.0 || self.com_offset > self.length {
            return bad("com_offset must lie within [0, length]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// Parent link index; `None` attaches the joint to the pelvis.
    pub parent: Option<usize>,
    pub child: usize,
    /// +1 or -1: how the joint angle maps onto the child's absolute angle.
    pub axis_sign: f64,
    /// Constant added to the child's absolute angle (e.g. the toe points forward).
    #[serde(default)]
    pub angle_offset: f64,
    /// Reflected motor rotor inertia (armature), kg m^2.
    #[serde(default)]
    pub rotor_inertia: f64,
    /// N m s / rad.
    #[serde(default)]
    pub viscous_damping: f64,
    #[serde(default)]
    pub limits: Option<JointLimits>,
}

/// A named point fixed on a link, `distance` along its axis from the proximal joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub name: String,
    pub link: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    /// The pelvis translates only; its rotational inertia never enters.
    pub pelvis: LinkSpec,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    /// Magnitude of gravitational acceleration, m/s^2 (acts along -z).
    pub gravity: f64,
    pub contact_points: Vec<Attachment>,
}

impl RobotSpec {
    pub fn validate(&self) -> Result<()> {
        self.pelvis.validate()?;
        for link in &self.links {
            link.validate()?;
        }
        if self.links.len() != JOINT_COUNT || self.joints.len() != JOINT_COUNT {
            return Err(Error::InvalidSpec(format!(
                "expected {JOINT_COUNT} links and joints, got {} and {}",
                self.links.len(),
                self.joints.len()
            )));
        }
        let mut seen = [false; JOINT_COUNT];
        for (j, joint) in self.joints.iter().enumerate() {
            let bad = |what: &str| Err(Error::InvalidSpec(format!("joint `{}`: {what}", joint.name)));
            if joint.child != j {
                return bad("joint i must drive link i");
            }
            if let Some(p) = joint.parent {
                // Parents precede children, which also rules out cycles.
                if p >= j {
                    return bad("parent must precede child");
                }
            }
            if joint.axis_sign != 1.0 && joint.axis_sign != -1.0 {
                return bad("axis_sign must be +1 or -1");
            }
            if !joint.angle_offset.is_finite() {
                return bad("non-finite angle offset");
            }
            if !(joint.rotor_inertia >= 0.0) {
                return bad("rotor_inertia must be non-negative");
            }
            if !(joint.viscous_damping >= 0.0) {
                return bad("viscous_damping must be non-negative");
            }
            if let Some(l) = &joint.limits {
                if !(l.lower < l.upper) {
                    return bad("lower limit must be below upper limit");
                }
            }
            seen[j] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidSpec("kinematic tree is not connected".into()));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::InvalidSpec("gravity must be finite and non-negative".into()));
        }
        for point in &self.contact_points {
            let Some(link) = self.links.get(point.link) else {
                return Err(Error::InvalidSpec(format!("point `{}`: unknown link", point.name)));
            };
            if !(point.distance >= 0.0 && point.distance <= link.length) {
                return Err(Error::InvalidSpec(format!(
                    "point `{}`: distance outside link",
                    point.name
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.pelvis.mass + self.links.iter().map(|l| l.mass).sum::<f64>()
    }

    /// Joint indices from the root down to (and including) `joint`.
    pub fn chain(&self, joint: usize) -> ChainIter<'_> {
        ChainIter {
            spec: self,
            next: Some(joint),
        }
    }

    /// Generalized-coordinate index of a joint.
    pub const fn coord(joint: usize) -> usize {
        BASE_DOF + joint
    }

    pub fn contact_point(&self, name: &str) -> Result<&Attachment> {
        self.contact_points
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownPoint(name.to_string()))
    }

    /// Diagonal armature terms in coordinate order.
    pub fn armature(&self) -> DofVector {
        let mut a = DofVector::zeros();
        for (j, joint) in self.joints.iter().enumerate() {
            a[Self::coord(j)] = joint.rotor_inertia;
        }
        a
    }
}

/// Walks a joint's ancestry from the joint itself up to the pelvis.
pub struct ChainIter<'a> {
    spec: &'a RobotSpec,
    next: Option<usize>,
}

impl Iterator for ChainIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let current = self.next?;
        self.next = self.spec.joints[current].parent;
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub q: DofVector,
    pub qdot: DofVector,
    pub t: f64,
}

impl SimState {
    pub fn new(q: DofVector, qdot: DofVector) -> Self {
        Self { q, qdot, t: 0.0 }
    }

    pub fn at_rest(q: DofVector) -> Self {
        Self::new(q, DofVector::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    pub fn pelvis(&self) -> Vector2<f64> {
        Vector2::new(self.q[BASE_X], self.q[BASE_Z])
    }
}

pub(crate) fn ensure_finite(v: &DofVector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[inline]
pub(crate) fn direction(phi: f64) -> Vector2<f64> {
    let (s, c) = phi.sin_cos();
    Vector2::new(s, -c)
}

/// d/dphi of [`direction`].
#[inline]
pub(crate) fn direction_derivative(phi: f64) -> Vector2<f64> {
    let (s, c) = phi.sin_cos();
    Vector2::new(c, s)
}
