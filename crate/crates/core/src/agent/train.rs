//! Warmup collection, the model-learning loop, and frozen evaluation.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{EpisodeSplit, ReplayBuffer, Transition};
use super::model::{train_model, DynamicsModel, ModelConfig, TrainConfig, TrainReport};
use super::planner::{ModelPredictor, Planner, PlannerConfig};
use crate::env::{Env, EpisodeConfig, Observation, RewardConfig, Trajectory, TrajectoryRow, OBS_DIM};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::rng::{derive_seed, stream, SimRng};

/// Linear decay from `start` to `end` over `episodes`, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub episodes: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 0.3,
            end: 0.05,
            episodes: 100,
        }
    }
}

impl EpsilonSchedule {
    /// Exploration rate for the zero-based planner episode `k`.
    pub fn at(&self, k: usize) -> f64 {
        if self.episodes == 0 || k >= self.episodes {
            return self.end;
        }
        self.start + (self.end - self.start) * k as f64 / self.episodes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub seed: u64,
    pub warmup_episodes: usize,
    /// Planner episodes after the warmup.
    pub episodes: usize,
    pub epsilon: EpsilonSchedule,
    pub model: ModelConfig,
    /// Gradient steps after the warmup.
    pub warmup_train: TrainConfig,
    /// Gradient steps before each planner episode.
    pub train: TrainConfig,
    pub validation_fraction: f64,
    pub planner: PlannerConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            warmup_episodes: 40,
            episodes: 300,
            epsilon: EpsilonSchedule::default(),
            model: ModelConfig::default(),
            warmup_train: TrainConfig {
                steps: 4000,
                ..TrainConfig::default()
            },
            train: TrainConfig::default(),
            validation_fraction: 0.1,
            planner: PlannerConfig::default(),
        }
    }
}

impl AgentConfig {
    /// Smaller ensemble and search budget so a few hundred episodes train
    /// on one CPU core in tens of minutes.
    pub fn desk() -> Self {
        let mut cfg = Self::default();
        cfg.model.ensemble = 3;
        cfg.model.hidden = 64;
        cfg.planner.horizon = 8;
        cfg.planner.candidates = 100;
        cfg.planner.iterations = 2;
        cfg.train.steps = 300;
        cfg.warmup_train.steps = 3000;
        cfg
    }

    pub fn split(&self) -> EpisodeSplit {
        EpisodeSplit {
            seed: self.seed,
            validation_fraction: self.validation_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        if self.warmup_episodes == 0 {
            return Err(Error::Config("at least one warmup episode is required".into()));
        }
        Ok(())
    }
}

/// Everything logged about one episode.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub cumulative_reward: f64,
    /// Pelvis displacement over the episode divided by its duration, m/s.
    pub mean_speed: f64,
    pub distance: f64,
    /// Total work per actuator, J.
    pub work: Vec<f64>,
    pub trajectory: Trajectory,
}

impl EpisodeRecord {
    pub fn total_work(&self) -> f64 {
        self.work.iter().sum()
    }
}

/// Runs one full episode from a seeded reset. When `buffer` is given the
/// transitions are appended under a fresh episode id.
pub fn run_episode(
    env: &mut Env,
    reset_rng: &mut SimRng,
    policy: &mut dyn FnMut(&Observation) -> Result<usize>,
    mut buffer: Option<&mut ReplayBuffer>,
) -> Result<EpisodeRecord> {
    let space = env.bundle().action_space.clone();
    let channels = space.channels.iter().map(|c| c.name.clone()).collect();
    let actuators = env.bundle().actuators.iter().map(|a| a.name.clone()).collect();
    let mut trajectory = Trajectory::new(channels, actuators);
    let mut obs = env.reset(reset_rng);
    let x0 = env.state().q[0];
    let episode = buffer.as_deref_mut().map(ReplayBuffer::begin_episode);
    let mut work = vec![0.0; env.bundle().actuators.len()];
    let mut total = 0.0;
    while !env.is_done() {
        let flat = policy(&obs)?;
        let action = space.from_flat(flat)?;
        let out = env.step(&action)?;
        total += out.reward;
        for (w, dw) in work.iter_mut().zip(&out.info.work) {
            *w += dw;
        }
        trajectory.rows.push(TrajectoryRow::from_step(env.state(), &action, &out));
        if let (Some(b), Some(e)) = (buffer.as_deref_mut(), episode) {
            b.push(Transition {
                observation: obs,
                action: action.indices.clone(),
                action_index: flat,
                next_observation: out.observation,
                reward: out.reward,
                episode: e,
            });
        }
        obs = out.observation;
    }
    let distance = env.state().q[0] - x0;
    let duration = env.config.duration();
    Ok(EpisodeRecord {
        cumulative_reward: total,
        mean_speed: distance / duration,
        distance,
        work,
        trajectory,
    })
}

/// Uniform random actions for `episodes` episodes.
pub fn collect_random(env: &mut Env, episodes: usize, seed: u64, buffer: &mut ReplayBuffer) -> Result<Vec<EpisodeRecord>> {
    let n = env.n_actions();
    let mut records = Vec::with_capacity(episodes);
    for k in 0..episodes {
        let index = u64::from(buffer.episodes());
        let mut reset = stream(seed, "reset", index);
        let mut actions = stream(seed, "random-actions", index);
        let mut policy = |_: &Observation| Ok(actions.random_range(0..n));
        records.push(run_episode(env, &mut reset, &mut policy, Some(buffer))?);
        debug_assert_eq!(records.len(), k + 1);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    /// One-based planner episode number.
    pub episode: usize,
    pub cumulative_reward: f64,
    /// Mean per-dimension held-out RMSE relative to the zero-delta baseline.
    pub validation_rmse: f64,
    pub epsilon: f64,
    pub mean_speed: f64,
}

pub struct TrainOutcome {
    pub model: DynamicsModel,
    pub warmup_returns: Vec<f64>,
    pub warmup_report: TrainReport,
    pub last_report: TrainReport,
    pub curve: Vec<CurveRow>,
    pub buffer: ReplayBuffer,
}

impl TrainOutcome {
    pub fn warmup_mean(&self) -> f64 {
        mean(&self.warmup_returns)
    }

    /// Mean return over the final `k` planner episodes.
    pub fn final_mean(&self, k: usize) -> f64 {
        let tail: Vec<f64> = self
            .curve
            .iter()
            .rev()
            .take(k)
            .map(|r| r.cumulative_reward)
            .collect();
        mean(&tail)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Called after the warmup (`None`) and after every planner episode.
pub type Progress<'a> = dyn FnMut(Option<&CurveRow>, &EpisodeRecord, &DynamicsModel) -> Result<()> + 'a;

/// Warmup, then alternate model fitting with one planner episode.
pub fn train_agent(env: &mut Env, cfg: &AgentConfig, progress: &mut Progress) -> Result<TrainOutcome> {
    cfg.validate()?;
    let split = cfg.split();
    let mut buffer = ReplayBuffer::new();
    let warmup = collect_random(env, cfg.warmup_episodes, cfg.seed, &mut buffer)?;
    let warmup_returns: Vec<f64> = warmup.iter().map(|r| r.cumulative_reward).collect();

    let mut init = stream(cfg.seed, "model-init", 0);
    let mut model = DynamicsModel::new(cfg.model, OBS_DIM, env.n_actions(), &mut init)?;
    let warmup_report = train_model(
        &buffer,
        &mut model,
        &cfg.warmup_train,
        &split,
        derive_seed(cfg.seed, "train", 0),
    )?;
    if let Some(last) = warmup.last() {
        progress(None, last, &model)?;
    }

    let mut planner = Planner::new(cfg.planner)?;
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut last_report = warmup_report.clone();
    for k in 0..cfg.episodes {
        if k > 0 {
            last_report = train_model(
                &buffer,
                &mut model,
                &cfg.train,
                &split,
                derive_seed(cfg.seed, "train", k as u64),
            )?;
        }
        let epsilon = cfg.epsilon.at(k);
        let index = u64::from(buffer.episodes());
        let mut reset = stream(cfg.seed, "reset", index);
        let mut plan_rng = stream(cfg.seed, "planner", index);
        planner.reset();
        let record = {
            let predictor = ModelPredictor {
                model: &model,
                reward_config: &env.reward_config.clone(),
                reward_source: cfg.planner.reward_source,
                disagreement_penalty: cfg.planner.disagreement_penalty,
            };
            let mut policy =
                |obs: &Observation| Ok(planner.plan(&predictor, obs.as_slice(), epsilon, &mut plan_rng).action);
            run_episode(env, &mut reset, &mut policy, Some(&mut buffer))?
        };
        let row = CurveRow {
            episode: k + 1,
            cumulative_reward: record.cumulative_reward,
            validation_rmse: last_report.relative_rmse(),
            epsilon,
            mean_speed: record.mean_speed,
        };
        progress(Some(&row), &record, &model)?;
        curve.push(row);
    }
    Ok(TrainOutcome {
        model,
        warmup_returns,
        warmup_report,
        last_report,
        curve,
        buffer,
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Frozen policy: model weights plus every configuration needed to act.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model_kind: ModelKind,
    pub seed: u64,
    pub episodes_trained: usize,
    pub reward: RewardConfig,
    pub episode: EpisodeConfig,
    pub planner: PlannerConfig,
    pub model: DynamicsModel,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(CHECKPOINT_VERSION)) {
            return Err(Error::Config(format!(
                "{}: unsupported checkpoint version {version:?} (expected {CHECKPOINT_VERSION})",
                path.display()
            )));
        }
        let ckpt: Self = serde_json::from_value(value)?;
        if !ckpt.model.is_finite() {
            return Err(Error::Config(format!("{}: checkpoint weights are not finite", path.display())));
        }
        Ok(ckpt)
    }
}

/// Runs the frozen planner greedily (no exploration, no model updates).
pub fn evaluate(env: &mut Env, ckpt: &Checkpoint, seed: u64, trial: u64) -> Result<EpisodeRecord> {
    let mut planner = Planner::new(ckpt.planner)?;
    let mut reset = stream(seed, "eval-reset", trial);
    let mut plan_rng = stream(seed, "eval-planner", trial);
    let predictor = ModelPredictor {
        model: &ckpt.model,
        reward_config: &ckpt.reward,
        reward_source: ckpt.planner.reward_source,
        disagreement_penalty: ckpt.planner.disagreement_penalty,
    };
    let mut policy = |obs: &Observation| Ok(planner.plan(&predictor, obs.as_slice(), 0.0, &mut plan_rng).action);
    run_episode(env, &mut reset, &mut policy, None)
}
