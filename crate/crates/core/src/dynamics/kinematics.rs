use nalgebra::Vector2;

use super::{
    direction, Attachment, direction_derivative, DofVector, PointJacobian, RobotSpec, BASE_X, BASE_Z,
    JOINT_COUNT,
};
use crate::error::Result;

/// Absolute link angles and joint positions for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyFrames {
    pub pelvis: Vector2<f64>,
    /// Absolute angle of each link.
    pub angle: [f64; JOINT_COUNT],
    /// Proximal joint position of each link.
    pub origin: [Vector2<f64>; JOINT_COUNT],
    /// Distal end of each link.
    pub tip: [Vector2<f64>; JOINT_COUNT],
    pub com: [Vector2<f64>; JOINT_COUNT],
    /// Named contact points, in `RobotSpec::contact_points` order.
    pub points: Vec<(String, Vector2<f64>)>,
}

impl BodyFrames {
    pub fn point(&self, name: &str) -> Option<Vector2<f64>> {
        self.points.iter().find(|(n, _)| n == name).map(|(_, p)| *p)
    }

    pub fn position_on_link(&self, link: usize, distance: f64) -> Vector2<f64> {
        self.origin[link] + direction(self.angle[link]) * distance
    }
}

pub fn forward_kinematics(spec: &RobotSpec, q: &DofVector) -> BodyFrames {
    let pelvis = Vector2::new(q[BASE_X], q[BASE_Z]);
    let mut angle = [0.0; JOINT_COUNT];
    let mut origin = [Vector2::zeros(); JOINT_COUNT];
    let mut tip = [Vector2::zeros(); JOINT_COUNT];
    let mut com = [Vector2::zeros(); JOINT_COUNT];
    for (j, joint) in spec.joints.iter().enumerate() {
        let (parent_angle, start) = match joint.parent {
            Some(p) => (angle[p], tip[p]),
            None => (0.0, pelvis),
        };
        let phi = parent_angle + joint.axis_sign * q[RobotSpec::coord(j)] + joint.angle_offset;
        let link = &spec.links[j];
        let u = direction(phi);
        angle[j] = phi;
        origin[j] = start;
        tip[j] = start + u * link.length;
        com[j] = start + u * link.com_offset;
    }
    let mut frames = BodyFrames {
        pelvis,
        angle,
        origin,
        tip,
        com,
        points: Vec::with_capacity(spec.contact_points.len()),
    };
    for p in &spec.contact_points {
        let pos = frames.position_on_link(p.link, p.distance);
        frames.points.push((p.name.clone(), pos));
    }
    frames
}

/// Absolute angular rate of every link.
pub(crate) fn link_rates(spec: &RobotSpec, qdot: &DofVector) -> [f64; JOINT_COUNT] {
    let mut rate = [0.0; JOINT_COUNT];
    for (j, joint) in spec.joints.iter().enumerate() {
        let parent = joint.parent.map_or(0.0, |p| rate[p]);
        rate[j] = parent + joint.axis_sign * qdot[RobotSpec::coord(j)];
    }
    rate
}

/// Jacobian of a point `distance` along `link`.
pub(crate) fn link_point_jacobian(
    spec: &RobotSpec,
    frames: &BodyFrames,
    link: usize,
    distance: f64,
) -> PointJacobian {
    let mut jac = PointJacobian::zeros();
    jac[(0, BASE_X)] = 1.0;
    jac[(1, BASE_Z)] = 1.0;
    // Column k sums the lever contributions of every link from k down to `link`.
    let mut lever = direction_derivative(frames.angle[link]) * distance;
    let mut current = Some(link);
    while let Some(j) = current {
        let col = RobotSpec::coord(j);
        let s = spec.joints[j].axis_sign;
        jac[(0, col)] = s * lever.x;
        jac[(1, col)] = s * lever.y;
        current = spec.joints[j].parent;
        if let Some(p) = current {
            lever += direction_derivative(frames.angle[p]) * spec.links[p].length;
        }
    }
    jac
}

/// Velocity-product acceleration `Jdot * qdot` of a point on a link.
pub(crate) fn link_point_bias(
    spec: &RobotSpec,
    frames: &BodyFrames,
    rates: &[f64; JOINT_COUNT],
    link: usize,
    distance: f64,
) -> Vector2<f64> {
    let mut acc = -direction(frames.angle[link]) * (distance * rates[link] * rates[link]);
    let mut current = spec.joints[link].parent;
    while let Some(p) = current {
        acc -= direction(frames.angle[p]) * (spec.links[p].length * rates[p] * rates[p]);
        current = spec.joints[p].parent;
    }
    acc
}

/// Jacobian of a named contact point: `v_point = J * qdot`.
pub fn point_jacobian(spec: &RobotSpec, q: &DofVector, point: &str) -> Result<PointJacobian> {
    let attachment = spec.contact_point(point)?;
    let frames = forward_kinematics(spec, q);
    Ok(link_point_jacobian(
        spec,
        &frames,
        attachment.link,
        attachment.distance,
    ))
}

/// Position, velocity and Jacobian of every contact point at once.
#[derive(Debug, Clone)]
pub struct PointKinematics {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub jacobian: PointJacobian,
}

pub fn point_velocity(
    spec: &RobotSpec,
    frames: &BodyFrames,
    qdot: &DofVector,
) -> Vec<PointKinematics> {
    attachment_kinematics(spec, frames, qdot, &spec.contact_points)
}

/// Same as [`point_velocity`] for an arbitrary list of attachments.
pub fn attachment_kinematics(
    spec: &RobotSpec,
    frames: &BodyFrames,
    qdot: &DofVector,
    points: &[Attachment],
) -> Vec<PointKinematics> {
    points
        .iter()
        .map(|p| {
            let jacobian = link_point_jacobian(spec, frames, p.link, p.distance);
            PointKinematics {
                position: frames.position_on_link(p.link, p.distance),
                velocity: jacobian * qdot,
                jacobian,
            }
        })
        .collect()
}
