use serde::{Deserialize, Serialize};

use super::gait::mean_std;
use crate::env::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Total actuator work, J.
    pub total: f64,
    pub per_actuator: Vec<(String, f64)>,
}

/// Work done by each actuator over the rows in `range`.
pub fn work_over(traj: &Trajectory, range: std::ops::Range<usize>) -> EnergyReport {
    let mut per: Vec<(String, f64)> = traj.actuators.iter().map(|a| (a.clone(), 0.0)).collect();
    for row in &traj.rows[range] {
        for ((_, w), dw) in per.iter_mut().zip(&row.work) {
            *w += dw;
        }
    }
    EnergyReport {
        total: per.iter().map(|(_, w)| w).sum(),
        per_actuator: per,
    }
}

pub fn actuator_work(traj: &Trajectory) -> EnergyReport {
    work_over(traj, 0..traj.rows.len())
}

/// `sum |force * rate| * dt` for sampled force and velocity.
pub fn absolute_work(forces: &[f64], rates: &[f64], dt: f64) -> f64 {
    forces.iter().zip(rates).map(|(f, v)| (f * v).abs() * dt).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkSummary {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

pub fn summarize(reports: &[EnergyReport]) -> WorkSummary {
    let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
    let (mean, std) = mean_std(&totals);
    WorkSummary {
        mean,
        std,
        runs: totals.len(),
    }
}
