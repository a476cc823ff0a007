use serde::{Deserialize, Serialize};

use super::gait::mean_std;
use crate::agent::{evaluate, Checkpoint};
use crate::env::{Env, Trajectory};
use crate::error::Result;
use crate::models::ModelBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    /// Degrees; positive ascends in +x.
    pub alpha: f64,
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub std_x: Vec<f64>,
    /// Final horizontal displacement per trial, m.
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SlopeTrial {
    pub alpha: f64,
    pub trial: u64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct SlopeReport {
    /// Flat ground first, then `alphas` in the order given.
    pub profiles: Vec<SlopeProfile>,
    pub trials: Vec<SlopeTrial>,
}

impl SlopeReport {
    pub fn profile(&self, alpha: f64) -> Option<&SlopeProfile> {
        self.profiles.iter().find(|p| p.alpha == alpha)
    }
}

/// Environment for frozen evaluation of `ckpt` on a plane tilted by `alpha`.
pub fn slope_env(ckpt: &Checkpoint, bundle: &ModelBundle, alpha: f64) -> Result<Env> {
    let mut episode = ckpt.episode.clone();
    episode.ground = episode.ground.with_slope(alpha);
    Env::new(bundle.clone(), episode, ckpt.reward.clone())
}

/// One frozen-policy episode per `(alpha, trial)`, plus a flat-ground
/// baseline, aggregated into mean and spread of pelvis `x(t)`.
pub fn slope_eval(
    ckpt: &Checkpoint,
    bundle: &ModelBundle,
    alphas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SlopeReport> {
    let mut set = vec![0.0];
    set.extend(alphas.iter().copied().filter(|a| *a != 0.0));
    let mut profiles = Vec::with_capacity(set.len());
    let mut out = Vec::new();
    for &alpha in &set {
        let mut env = slope_env(ckpt, bundle, alpha)?;
        let mut xs: Vec<Vec<f64>> = Vec::new();
        let mut distances = Vec::new();
        let mut times = Vec::new();
        for trial in 0..trials {
            let record = evaluate(&mut env, ckpt, seed, trial)?;
            times = record.trajectory.rows.iter().map(|r| r.t).collect();
            xs.push(record.trajectory.rows.iter().map(|r| r.q[0]).collect());
            distances.push(record.distance);
            out.push(SlopeTrial {
                alpha,
                trial,
                trajectory: record.trajectory,
            });
        }
        let mut mean_x = Vec::with_capacity(times.len());
        let mut std_x = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            let col: Vec<f64> = xs.iter().map(|x| x[k]).collect();
            let (m, s) = mean_std(&col);
            mean_x.push(m);
            std_x.push(s);
        }
        profiles.push(SlopeProfile {
            alpha,
            times,
            mean_x,
            std_x,
            distances,
        });
    }
    Ok(SlopeReport {
        profiles,
        trials: out,
    })
}
