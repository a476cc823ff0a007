//! Learned one-step dynamics: an ensemble of MLPs mapping (standardized
//! observation, one-hot action) to (standardized observation delta, reward).

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::buffer::{EpisodeSplit, ReplayBuffer};
use super::mlp::{sample_rows, AdamConfig, AdamState, Mlp};
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Column statistics of `rows`; near-constant columns get unit scale.
    pub fn fit<'a>(dim: usize, rows: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut n = 0.0;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for r in rows {
            n += 1.0;
            for i in 0..dim {
                sum[i] += r[i];
                sq[i] += r[i] * r[i];
            }
        }
        let n = f64::max(n, 1.0);
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub ensemble: usize,
    pub hidden: usize,
    pub hidden_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            ensemble: 5,
            hidden: 128,
            hidden_layers: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Minibatch gradient steps per member per call.
    pub steps: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsModel {
    pub config: ModelConfig,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub input_norm: Normalizer,
    pub delta_norm: Normalizer,
    pub members: Vec<Mlp>,
    #[serde(skip)]
    optim: Vec<AdamState>,
}

/// Held-out prediction quality after a training call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_transitions: usize,
    pub validation_transitions: usize,
    /// Mean minibatch loss over the last 10% of steps, averaged over members.
    pub final_loss: f64,
    /// Per observation dimension, in observation units.
    pub rmse: Vec<f64>,
    /// RMSE of predicting no change.
    pub baseline_rmse: Vec<f64>,
    pub reward_rmse: f64,
    /// Validation episode ids, for auditing the split.
    pub validation_episodes: Vec<u32>,
}

impl TrainReport {
    /// Fraction of dimensions where the model beats the zero-delta baseline.
    pub fn beats_baseline_fraction(&self) -> f64 {
        if self.rmse.is_empty() {
            return 0.0;
        }
        let wins = self
            .rmse
            .iter()
            .zip(&self.baseline_rmse)
            .filter(|(m, b)| m < b)
            .count();
        wins as f64 / self.rmse.len() as f64
    }

    /// RMSE in units of each dimension's baseline, averaged.
    pub fn relative_rmse(&self) -> f64 {
        let terms: Vec<f64> = self
            .rmse
            .iter()
            .zip(&self.baseline_rmse)
            .filter(|(_, b)| **b > 0.0)
            .map(|(m, b)| m / b)
            .collect();
        if terms.is_empty() {
            f64::NAN
        } else {
            terms.iter().sum::<f64>() / terms.len() as f64
        }
    }
}

impl DynamicsModel {
    pub fn new(config: ModelConfig, obs_dim: usize, n_actions: usize, rng: &mut SimRng) -> Result<Self> {
        if config.ensemble == 0 || config.hidden == 0 {
            return Err(Error::Config(format!("invalid model configuration: {config:?}")));
        }
        let mut sizes = vec![obs_dim + n_actions];
        sizes.extend(std::iter::repeat_n(config.hidden, config.hidden_layers));
        sizes.push(obs_dim + 1);
        let members = (0..config.ensemble).map(|_| Mlp::new(&sizes, rng)).collect();
        Ok(Self {
            config,
            obs_dim,
            n_actions,
            input_norm: Normalizer::identity(obs_dim),
            delta_norm: Normalizer::identity(obs_dim),
            members,
            optim: Vec::new(),
        })
    }

    fn encode(&self, obs: ArrayView2<f64>, actions: &[usize]) -> Array2<f32> {
        let d = self.obs_dim;
        let mut x = Array2::<f32>::zeros((obs.nrows(), d + self.n_actions));
        for (r, (row, &a)) in obs.outer_iter().zip(actions).enumerate() {
            for i in 0..d {
                x[(r, i)] = ((row[i] - self.input_norm.mean[i]) / self.input_norm.std[i]) as f32;
            }
            x[(r, d + a)] = 1.0;
        }
        x
    }

    /// Raw outputs of every member for a batch.
    pub fn member_outputs(&self, obs: ArrayView2<f64>, actions: &[usize]) -> Vec<Array2<f32>> {
        let x = self.encode(obs, actions);
        self.members.iter().map(|m| m.forward(x.view())).collect()
    }

    /// Ensemble-mean next observation and reward. Contact flags are clamped
    /// to [0, 1].
    pub fn predict(&self, obs: ArrayView2<f64>, actions: &[usize]) -> (Array2<f64>, Array1<f64>) {
        let outs = self.member_outputs(obs, actions);
        let e = outs.len() as f64;
        let d = self.obs_dim;
        let mut next = obs.to_owned();
        let mut reward = Array1::zeros(obs.nrows());
        for out in &outs {
            for (r, row) in out.outer_iter().enumerate() {
                for i in 0..d {
                    let delta = f64::from(row[i]) * self.delta_norm.std[i] + self.delta_norm.mean[i];
                    next[(r, i)] += delta / e;
                }
                reward[r] += f64::from(row[d]) / e;
            }
        }
        for i in crate::env::OBS_CONTACTS..d.min(crate::env::OBS_DIM) {
            next.column_mut(i).mapv_inplace(|v| v.clamp(0.0, 1.0));
        }
        (next, reward)
    }

    /// Mean over the batch of the ensemble's per-row spread in standardized
    /// delta units.
    pub fn disagreement(outs: &[Array2<f32>], d: usize) -> Array1<f64> {
        let rows = outs[0].nrows();
        let e = outs.len() as f64;
        let mut spread = Array1::zeros(rows);
        if outs.len() < 2 {
            return spread;
        }
        for r in 0..rows {
            let mut total = 0.0;
            for i in 0..d {
                let mean = outs.iter().map(|o| f64::from(o[(r, i)])).sum::<f64>() / e;
                total += outs.iter().map(|o| (f64::from(o[(r, i)]) - mean).powi(2)).sum::<f64>() / e;
            }
            spread[r] = (total / d as f64).sqrt();
        }
        spread
    }

    pub fn is_finite(&self) -> bool {
        self.members.iter().all(Mlp::is_finite)
    }
}

fn gather(buffer: &ReplayBuffer, rows: &[usize], d: usize) -> (Array2<f64>, Vec<usize>, Array2<f64>, Array1<f64>) {
    let t = buffer.transitions();
    let mut obs = Array2::zeros((rows.len(), d));
    let mut delta = Array2::zeros((rows.len(), d));
    let mut reward = Array1::zeros(rows.len());
    let mut actions = Vec::with_capacity(rows.len());
    for (r, &i) in rows.iter().enumerate() {
        let tr = &t[i];
        let dl = tr.delta();
        for k in 0..d {
            obs[(r, k)] = tr.observation.0[k];
            delta[(r, k)] = dl[k];
        }
        reward[r] = tr.reward;
        actions.push(tr.action_index);
    }
    (obs, actions, delta, reward)
}

/// Fits every member on its own bootstrap resample of the training episodes and
/// scores the ensemble mean on the held-out episodes.
pub fn train_model(
    buffer: &ReplayBuffer,
    model: &mut DynamicsModel,
    cfg: &TrainConfig,
    split: &EpisodeSplit,
    seed: u64,
) -> Result<TrainReport> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let d = model.obs_dim;
    let (train, val) = split.partition(buffer);
    if train.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let t = buffer.transitions();
    model.input_norm = Normalizer::fit(d, train.iter().map(|&i| t[i].observation.as_slice()));
    let deltas: Vec<[f64; crate::env::OBS_DIM]> = train.iter().map(|&i| t[i].delta()).collect();
    model.delta_norm = Normalizer::fit(d, deltas.iter().map(|r| &r[..]));

    let (obs, actions, delta, reward) = gather(buffer, &train, d);
    let x = model.encode(obs.view(), &actions);
    let mut y = Array2::<f32>::zeros((train.len(), d + 1));
    for r in 0..train.len() {
        for k in 0..d {
            y[(r, k)] = ((delta[(r, k)] - model.delta_norm.mean[k]) / model.delta_norm.std[k]) as f32;
        }
        y[(r, d)] = reward[r] as f32;
    }

    if model.optim.len() != model.members.len() {
        model.optim = model.members.iter().map(AdamState::new).collect();
    }
    let pool: Vec<usize> = (0..train.len()).collect();
    let tail = (cfg.steps / 10).max(1);
    let mut final_loss = 0.0;
    for (m, (net, adam)) in model.members.iter_mut().zip(model.optim.iter_mut()).enumerate() {
        let mut rng = stream(seed, "bootstrap", m as u64);
        let subset = sample_rows(&pool, pool.len(), &mut rng);
        let mut tail_loss = 0.0;
        for step in 0..cfg.steps {
            let rows = sample_rows(&subset, cfg.batch_size.min(train.len()).max(1), &mut rng);
            let xb = x.select(Axis(0), &rows);
            let yb = y.select(Axis(0), &rows);
            let loss = net.train_step(xb.view(), yb.view(), adam, &cfg.adam);
            if !loss.is_finite() || !net.is_finite() {
                return Err(Error::Divergence(format!(
                    "member {m} loss {loss} at step {step} (batch {}, lr {})",
                    rows.len(),
                    cfg.adam.learning_rate
                )));
            }
            if step + tail >= cfg.steps {
                tail_loss += f64::from(loss);
            }
        }
        final_loss += tail_loss / tail as f64;
    }
    final_loss /= model.members.len() as f64;

    let mut report = TrainReport {
        train_transitions: train.len(),
        validation_transitions: val.len(),
        final_loss,
        rmse: Vec::new(),
        baseline_rmse: Vec::new(),
        reward_rmse: f64::NAN,
        validation_episodes: Vec::new(),
    };
    if !val.is_empty() {
        let (vobs, vact, vdelta, vreward) = gather(buffer, &val, d);
        let (next, pr) = model.predict(vobs.view(), &vact);
        let pred_delta = &next - &vobs;
        let n = val.len() as f64;
        for k in 0..d {
            let actual = vdelta.column(k);
            let err = (&pred_delta.column(k) - &actual).mapv(|e| e * e).sum() / n;
            report.rmse.push(err.sqrt());
            report.baseline_rmse.push((actual.mapv(|v| v * v).sum() / n).sqrt());
        }
        report.reward_rmse = ((&pr - &vreward).mapv(|e| e * e).sum() / n).sqrt();
        let mut eps: Vec<u32> = val.iter().map(|&i| t[i].episode).collect();
        eps.dedup();
        report.validation_episodes = eps;
    }
    Ok(report)
}
