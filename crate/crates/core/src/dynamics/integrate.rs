use super::mass::{bias_unchecked, mass_matrix, solve_general};
use super::{DofMatrix, DofVector, RobotSpec, SimState};
use crate::error::{Error, Result};

/// Total generalized force at a state, plus optional local linearization of
/// its stiff parts.
///
/// `damping` is `-d(tau)/d(qdot)` and `stiffness` is `-d(tau)/d(q)`. When
/// present they are folded into the velocity update (linearly implicit Euler),
/// which keeps stiff contact and heavily damped light links stable at the
/// control substep. When both are zero the update is plain semi-implicit Euler.
#[derive(Debug, Clone)]
pub struct GeneralizedForces {
    pub tau: DofVector,
    pub damping: Option<DofMatrix>,
    pub stiffness: Option<DofMatrix>,
}

impl GeneralizedForces {
    pub fn explicit(tau: DofVector) -> Self {
        Self {
            tau,
            damping: None,
            stiffness: None,
        }
    }

    pub fn zero() -> Self {
        Self::explicit(DofVector::zeros())
    }
}

/// Advances one physics substep:
/// `qdot <- qdot + dt * qddot`, then `q <- q + dt * qdot`.
pub fn step<F>(spec: &RobotSpec, state: &SimState, mut forces: F, dt: f64) -> Result<SimState>
where
    F: FnMut(&SimState) -> Result<GeneralizedForces>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let fault = |reason: &str, s: &SimState| Error::SimulationFault {
        t: s.t,
        reason: reason.to_string(),
        q: s.q.iter().copied().collect(),
        qdot: s.qdot.iter().copied().collect(),
    };
    if !state.is_finite() {
        return Err(fault("non-finite state", state));
    }
    let applied = forces(state)?;
    if !applied.tau.iter().all(|v| v.is_finite()) {
        return Err(fault("non-finite applied force", state));
    }

    let mut lhs = mass_matrix(spec, &state.q)?;
    let mut rhs = applied.tau - bias_unchecked(spec, &state.q, &state.qdot);
    if let Some(d) = &applied.damping {
        lhs += d * dt;
    }
    if let Some(k) = &applied.stiffness {
        lhs += k * (dt * dt);
        rhs -= k * state.qdot * dt;
    }
    let qddot = solve_general(lhs, &rhs, &state.q)?;

    let qdot = state.qdot + qddot * dt;
    let q = state.q + qdot * dt;
    let next = SimState {
        q,
        qdot,
        t: state.t + dt,
    };
    if !next.is_finite() {
        return Err(fault("integration produced NaN", state));
    }
    Ok(next)
}

/// Guard rails for [`step_refined`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    /// Largest accepted velocity change of any coordinate in one step.
    pub max_velocity_jump: f64,
    /// Maximum number of halvings.
    pub max_depth: u32,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            max_velocity_jump: 100.0,
            max_depth: 6,
        }
    }
}

/// [`step`], except that a step whose velocity change exceeds the guard (or
/// which fails) is retried as two half steps, recursively. Returns the new
/// state and the number of elementary steps taken.
pub fn step_refined<F>(
    spec: &RobotSpec,
    state: &SimState,
    forces: &mut F,
    dt: f64,
    guard: Refinement,
) -> Result<(SimState, u32)>
where
    F: FnMut(&SimState) -> Result<GeneralizedForces>,
{
    let attempt = step(spec, state, &mut *forces, dt);
    let accepted = match &attempt {
        Ok(next) => (next.qdot - state.qdot).amax() <= guard.max_velocity_jump,
        Err(_) => false,
    };
    if accepted || guard.max_depth == 0 {
        return attempt.map(|s| (s, 1));
    }
    let inner = Refinement {
        max_depth: guard.max_depth - 1,
        ..guard
    };
    let (mid, a) = step_refined(spec, state, forces, dt / 2.0, inner)?;
    let (end, b) = step_refined(spec, &mid, forces, dt / 2.0, inner)?;
    Ok((end, a + b))
}
