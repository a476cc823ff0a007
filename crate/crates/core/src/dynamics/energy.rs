use super::kinematics::forward_kinematics;
use super::mass::mass_matrix;
use super::{DofVector, RobotSpec, SimState, BASE_Z};
use crate::error::Result;

/// Anything that stores potential energy as a function of configuration.
pub trait ElasticElement {
    fn elastic_energy(&self, q: &DofVector) -> f64;
}

pub fn kinetic_energy(spec: &RobotSpec, state: &SimState) -> Result<f64> {
    let m = mass_matrix(spec, &state.q)?;
    Ok(0.5 * state.qdot.dot(&(m * state.qdot)))
}

/// Potential energy with the zero level at z = 0.
pub fn gravitational_energy(spec: &RobotSpec, q: &DofVector) -> f64 {
    let frames = forward_kinematics(spec, q);
    let links: f64 = spec
        .links
        .iter()
        .zip(frames.com.iter())
        .map(|(link, com)| link.mass * com.y)
        .sum();
    spec.gravity * (links + spec.pelvis.mass * q[BASE_Z])
}

/// Kinetic + gravitational + elastic energy, joules.
pub fn total_energy(
    spec: &RobotSpec,
    state: &SimState,
    elastic: &[&dyn ElasticElement],
) -> Result<f64> {
    let springs: f64 = elastic.iter().map(|e| e.elastic_energy(&state.q)).sum();
    Ok(kinetic_energy(spec, state)? + gravitational_energy(spec, &state.q) + springs)
}
