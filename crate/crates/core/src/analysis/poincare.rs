//! Return map sampled at right-foot touchdown.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BASE_DOF, NDOF};
use crate::env::{Trajectory, TrajectoryRow};

/// Joint angles, joint rates, and the two pelvis velocities.
pub const SECTION_DIM: usize = 2 * (NDOF - BASE_DOF) + 2;

const PERIODIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareSequence {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Distances between consecutive normalized section states.
    pub distances: Vec<f64>,
}

pub fn section_state(row: &TrajectoryRow) -> Vec<f64> {
    let mut s = Vec::with_capacity(SECTION_DIM);
    s.extend(row.q.iter().skip(BASE_DOF));
    s.extend(row.qdot.iter().skip(BASE_DOF));
    s.push(row.qdot[0]);
    s.push(row.qdot[1]);
    s
}

/// Per-dimension standard deviation of the section variables over every row
/// of `trajs`; zero spreads are replaced by one.
pub fn section_scale(trajs: &[&Trajectory]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = trajs.iter().flat_map(|t| t.rows.iter().map(section_state)).collect();
    let n = rows.len().max(1) as f64;
    (0..SECTION_DIM)
        .map(|k| {
            let m = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let s = (rows.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

/// Distances between consecutive section states, each dimension divided by
/// `scale`.
pub fn from_states(times: Vec<f64>, states: Vec<Vec<f64>>, scale: &[f64]) -> PoincareSequence {
    let distances = states
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .zip(scale)
                .map(|((a, b), s)| ((b - a) / s).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    PoincareSequence {
        times,
        states,
        distances,
    }
}

/// Samples the row at (or first after) each touchdown time.
pub fn poincare_sequence(traj: &Trajectory, touchdowns: &[f64], scale: &[f64]) -> PoincareSequence {
    let mut times = Vec::new();
    let mut states = Vec::new();
    for &t in touchdowns {
        let k = traj.rows.partition_point(|r| r.t < t);
        if let Some(row) = traj.rows.get(k) {
            times.push(row.t);
            states.push(section_state(row));
        }
    }
    from_states(times, states, scale)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

impl PoincareSequence {
    /// Median of the last five distances over the median of the first five;
    /// zero for an exactly periodic sequence and `None` without distances.
    pub fn convergence(&self) -> Option<f64> {
        let d = &self.distances;
        if d.is_empty() {
            return None;
        }
        if d.iter().all(|&x| x < PERIODIC_TOL) {
            return Some(0.0);
        }
        let k = d.len().min(5);
        let first = median(&d[..k]);
        let last = median(&d[d.len() - k..]);
        Some(if first > 0.0 { last / first } else { f64::INFINITY })
    }
}
