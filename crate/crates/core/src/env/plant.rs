//! Total generalized force on the robot at one physics tick.

use crate::actuation::{
    joint_limit_torque, muscle_force, muscle_linearization, ActuatorKind, LegCommands,
};
use crate::contact::{contact_forces_in, ContactReport, GroundSpec, SlopeFrame};
use crate::dynamics::{
    attachment_kinematics, forward_kinematics, point_velocity, step_refined, DofMatrix, GeneralizedForces, Refinement, RobotSpec, SimState,
};
use crate::error::Result;
use crate::models::ModelBundle;

/// Everything the force model learned about one tick besides the forces.
#[derive(Debug, Clone, Default)]
pub struct TickDetails {
    pub contacts: Vec<ContactReport>,
    pub tensions: Vec<f64>,
    /// Absolute mechanical power of each actuator's own force, W.
    pub actuator_power: Vec<f64>,
    /// Generalized actuation from motors and muscle demand only.
    pub actuation: crate::dynamics::DofVector,
}

#[derive(Debug, Clone)]
pub struct Plant {
    pub bundle: ModelBundle,
    pub ground: GroundSpec,
    frame: SlopeFrame,
}

impl Plant {
    pub fn new(bundle: ModelBundle, ground: GroundSpec) -> Result<Self> {
        ground.validate()?;
        let frame = ground.frame();
        Ok(Self {
            bundle,
            ground,
            frame,
        })
    }

    pub fn frame(&self) -> &SlopeFrame {
        &self.frame
    }

    pub fn robot(&self) -> &RobotSpec {
        &self.bundle.robot
    }

    /// Forces for a state under held commands.
    pub fn forces(&self, state: &SimState, commands: &LegCommands) -> (GeneralizedForces, TickDetails) {
        let b = &self.bundle;
        let robot = &b.robot;
        let q = &state.q;
        let qdot = &state.qdot;
        let mut tau = crate::dynamics::DofVector::zeros();
        let mut stiffness = DofMatrix::zeros();
        let mut damping = DofMatrix::zeros();

        let frames = forward_kinematics(robot, q);
        let mut contacts = Vec::with_capacity(robot.contact_points.len());
        let feet = point_velocity(robot, &frames, qdot);
        let body = attachment_kinematics(robot, &frames, qdot, &b.body_contacts);
        for (i, pk) in feet.iter().chain(&body).enumerate() {
            let c = contact_forces_in(&self.ground, &self.frame, &pk.position, &pk.velocity);
            if c.report.in_contact {
                let jt = pk.jacobian.transpose();
                tau += jt * c.force;
                stiffness += jt * c.stiffness * pk.jacobian;
                damping += jt * c.damping * pk.jacobian;
            }
            if i < feet.len() {
                contacts.push(c.report);
            }
        }

        for (j, joint) in robot.joints.iter().enumerate() {
            let c = RobotSpec::coord(j);
            if joint.viscous_damping > 0.0 {
                tau[c] -= joint.viscous_damping * qdot[c];
                damping[(c, c)] += joint.viscous_damping;
            }
            if let Some(l) = &joint.limits {
                let t = joint_limit_torque(q[c], l.lower, l.upper, b.limit_stiffness);
                if t != 0.0 {
                    tau[c] += t;
                    stiffness[(c, c)] += b.limit_stiffness;
                }
            }
        }
        for s in &b.joint_springs {
            let c = RobotSpec::coord(s.joint);
            tau[c] += crate::actuation::joint_spring_torque(s, q[c], qdot[c]);
            stiffness[(c, c)] += s.stiffness;
            damping[(c, c)] += s.damping;
        }

        let mut demand = vec![0.0; b.muscles.len()];
        let mut actuation = crate::dynamics::DofVector::zeros();
        let mut actuator_power = Vec::with_capacity(b.actuators.len());
        for a in &b.actuators {
            let value = commands.leg(a.leg)[a.channel];
            match a.kind {
                ActuatorKind::Muscle { muscle } => {
                    let m = &b.muscles[muscle];
                    demand[muscle] = value;
                    let d = m.tension_demand(value);
                    actuation += m.direction() * d;
                    actuator_power.push((d * m.path_velocity(qdot)).abs());
                }
                ActuatorKind::Motor { joint } => {
                    let c = RobotSpec::coord(joint);
                    tau[c] += value;
                    actuation[c] += value;
                    actuator_power.push((value * qdot[c]).abs());
                }
            }
        }
        let mut tensions = Vec::with_capacity(b.muscles.len());
        for (m, &value) in b.muscles.iter().zip(&demand) {
            let dir = m.direction();
            let length = m.reference_length - dir.dot(q);
            let rate = -dir.dot(qdot);
            let t = muscle_force(m, length, rate, value);
            tau += dir * t;
            if let Some((k, d)) = muscle_linearization(m, t) {
                stiffness += k;
                damping += d;
            }
            tensions.push(t);
        }

        (
            GeneralizedForces {
                tau,
                damping: Some(damping),
                stiffness: Some(stiffness),
            },
            TickDetails {
                contacts,
                tensions,
                actuator_power,
                actuation,
            },
        )
    }

    /// One physics substep under held commands. Violent steps are split
    /// into smaller ones; `TickDetails` describes the state at the start.
    pub fn substep(
        &self,
        state: &SimState,
        commands: &LegCommands,
        dt: f64,
    ) -> Result<(SimState, TickDetails)> {
        let mut details = None;
        let mut forces = |s: &SimState| {
            let (f, d) = self.forces(s, commands);
            details.get_or_insert(d);
            Ok(f)
        };
        let (next, _) = step_refined(&self.bundle.robot, state, &mut forces, dt, Refinement::default())?;
        Ok((next, details.unwrap_or_default()))
    }

    /// Contact reports at a state without integrating.
    pub fn contacts(&self, state: &SimState) -> Vec<ContactReport> {
        let robot = &self.bundle.robot;
        let frames = forward_kinematics(robot, &state.q);
        point_velocity(robot, &frames, &state.qdot)
            .iter()
            .map(|pk| contact_forces_in(&self.ground, &self.frame, &pk.position, &pk.velocity).report)
            .collect()
    }
}
