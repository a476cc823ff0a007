use super::kinematics::{forward_kinematics, link_point_bias, link_point_jacobian, link_rates};
use super::{ensure_finite, DofMatrix, DofVector, RobotSpec, SimState, BASE_X, BASE_Z, NDOF};
use crate::error::{Error, Result};

fn assemble(spec: &RobotSpec, q: &DofVector, armature: bool) -> DofMatrix {
    let frames = forward_kinematics(spec, q);
    let mut m = DofMatrix::zeros();
    m[(BASE_X, BASE_X)] = spec.pelvis.mass;
    m[(BASE_Z, BASE_Z)] = spec.pelvis.mass;
    for (link_index, link) in spec.links.iter().enumerate() {
        let jac = link_point_jacobian(spec, &frames, link_index, link.com_offset);
        m += jac.tr_mul(&jac) * link.mass;
        // Angular Jacobian is the constant axis-sign pattern along the chain.
        for a in spec.chain(link_index) {
            for b in spec.chain(link_index) {
                let (ca, cb) = (RobotSpec::coord(a), RobotSpec::coord(b));
                m[(ca, cb)] +=
                    link.inertia * spec.joints[a].axis_sign * spec.joints[b].axis_sign;
            }
        }
    }
    if armature {
        for (j, joint) in spec.joints.iter().enumerate() {
            let c = RobotSpec::coord(j);
            m[(c, c)] += joint.rotor_inertia;
        }
    }
    m
}

/// Joint-space inertia matrix including rotor armature on the joint diagonal.
pub fn mass_matrix(spec: &RobotSpec, q: &DofVector) -> Result<DofMatrix> {
    ensure_finite(q, "q")?;
    Ok(assemble(spec, q, true))
}

/// Rigid-body inertia only, without reflected rotor inertia.
pub fn mass_matrix_without_armature(spec: &RobotSpec, q: &DofVector) -> Result<DofMatrix> {
    ensure_finite(q, "q")?;
    Ok(assemble(spec, q, false))
}

/// Coriolis, centrifugal and gravity terms `h` in `M qddot + h = tau`.
pub fn bias_forces(spec: &RobotSpec, q: &DofVector, qdot: &DofVector) -> Result<DofVector> {
    ensure_finite(q, "q")?;
    ensure_finite(qdot, "qdot")?;
    Ok(bias_unchecked(spec, q, qdot))
}

pub(crate) fn bias_unchecked(spec: &RobotSpec, q: &DofVector, qdot: &DofVector) -> DofVector {
    let frames = forward_kinematics(spec, q);
    let rates = link_rates(spec, qdot);
    let g = spec.gravity;
    let mut h = DofVector::zeros();
    h[BASE_Z] += spec.pelvis.mass * g;
    for (link_index, link) in spec.links.iter().enumerate() {
        let jac = link_point_jacobian(spec, &frames, link_index, link.com_offset);
        let mut acc = link_point_bias(spec, &frames, &rates, link_index, link.com_offset);
        // Gravity enters as a constant upward-resisted acceleration.
        acc.y += g;
        h += jac.transpose() * (acc * link.mass);
    }
    h
}

/// Solves `M qddot = tau - h`.
pub fn forward_dynamics(spec: &RobotSpec, state: &SimState, tau: &DofVector) -> Result<DofVector> {
    ensure_finite(&state.q, "q")?;
    ensure_finite(&state.qdot, "qdot")?;
    ensure_finite(tau, "applied forces")?;
    let m = assemble(spec, &state.q, true);
    let rhs = tau - bias_unchecked(spec, &state.q, &state.qdot);
    solve_spd(m, &rhs, &state.q)
}

pub(crate) fn solve_spd(m: DofMatrix, rhs: &DofVector, q: &DofVector) -> Result<DofVector> {
    let chol = m.cholesky().ok_or_else(|| Error::SingularMassMatrix {
        q: q.iter().copied().collect(),
    })?;
    let x = chol.solve(rhs);
    debug_assert_eq!(x.len(), NDOF);
    Ok(x)
}

/// LU solve for the integrator, whose linearized force terms need not be
/// symmetric.
pub(crate) fn solve_general(m: DofMatrix, rhs: &DofVector, q: &DofVector) -> Result<DofVector> {
    m.lu().solve(rhs).ok_or_else(|| Error::SingularMassMatrix {
        q: q.iter().copied().collect(),
    })
}
