//! Receding-horizon search over discrete action sequences: exhaustive when
//! the tree is small enough, otherwise the cross-entropy method on
//! independent per-step categorical distributions.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::DynamicsModel;
use crate::env::{reward, RewardConfig, OBS_VX, OBS_Z};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Anything that can roll a batch of states forward one control step.
pub trait Predictor {
    fn n_actions(&self) -> usize;

    /// Advances each row of `states` under the matching action in place and
    /// returns the per-row reward of that step.
    fn advance(&self, states: &mut Array2<f64>, actions: &[usize]) -> Array1<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSource {
    /// The model's own reward head.
    Learned,
    /// The task reward evaluated on the predicted next observation.
    Analytic,
}

/// Ensemble-mean rollouts of a learned model.
pub struct ModelPredictor<'a> {
    pub model: &'a DynamicsModel,
    pub reward_config: &'a RewardConfig,
    pub reward_source: RewardSource,
    /// Weight on ensemble spread subtracted from each step's reward.
    pub disagreement_penalty: f64,
}

impl Predictor for ModelPredictor<'_> {
    fn n_actions(&self) -> usize {
        self.model.n_actions
    }

    fn advance(&self, states: &mut Array2<f64>, actions: &[usize]) -> Array1<f64> {
        let (next, learned) = self.model.predict(states.view(), actions);
        let mut r = match self.reward_source {
            RewardSource::Learned => learned,
            RewardSource::Analytic => next
                .outer_iter()
                .map(|row| reward(row[OBS_VX], row[OBS_Z], self.reward_config).total)
                .collect(),
        };
        if self.disagreement_penalty > 0.0 {
            let outs = self.model.member_outputs(states.view(), actions);
            r -= &(DynamicsModel::disagreement(&outs, self.model.obs_dim) * self.disagreement_penalty);
        }
        *states = next;
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub candidates: usize,
    pub iterations: usize,
    pub elite_fraction: f64,
    /// Weight kept on the previous distribution at each refinement.
    pub smoothing: f64,
    /// Enumerate every sequence when `n_actions^horizon <= candidates`.
    pub exhaustive: bool,
    pub reward_source: RewardSource,
    pub disagreement_penalty: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 15,
            candidates: 400,
            iterations: 4,
            elite_fraction: 0.1,
            smoothing: 0.1,
            exhaustive: true,
            reward_source: RewardSource::Analytic,
            disagreement_penalty: 0.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon >= 1
            && self.candidates >= 1
            && self.iterations >= 1
            && self.elite_fraction > 0.0
            && self.elite_fraction <= 1.0
            && (0.0..1.0).contains(&self.smoothing)
            && self.disagreement_penalty >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid planner configuration: {self:?}")))
        }
    }

    fn tree_size(&self, n_actions: usize) -> Option<usize> {
        let mut size: usize = 1;
        for _ in 0..self.horizon {
            size = size.checked_mul(n_actions)?;
        }
        Some(size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub action: usize,
    /// Predicted return of the best sequence found.
    pub value: f64,
    pub sequence: Vec<usize>,
    /// True when the action was drawn uniformly instead of planned.
    pub explored: bool,
}

/// Stateful planner; keeps the previous best sequence as a warm start.
#[derive(Debug, Clone)]
pub struct Planner {
    pub config: PlannerConfig,
    previous: Option<Vec<usize>>,
}

/// Sum of per-step rewards for each candidate sequence (rows of `seqs`).
pub fn score_sequences(predictor: &dyn Predictor, start: ArrayView1<f64>, seqs: &[Vec<usize>]) -> Vec<f64> {
    let n = seqs.len();
    let horizon = seqs.first().map_or(0, Vec::len);
    let mut states = Array2::zeros((n, start.len()));
    for mut row in states.outer_iter_mut() {
        row.assign(&start);
    }
    let mut total = Array1::<f64>::zeros(n);
    let mut actions = vec![0; n];
    for t in 0..horizon {
        for (a, s) in actions.iter_mut().zip(seqs) {
            *a = s[t];
        }
        total += &predictor.advance(&mut states, &actions);
    }
    total.to_vec()
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            previous: None,
        })
    }

    /// Forgets the warm start, e.g. at an episode boundary.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn plan(
        &mut self,
        predictor: &dyn Predictor,
        observation: &[f64],
        epsilon: f64,
        rng: &mut SimRng,
    ) -> Plan {
        let n_actions = predictor.n_actions();
        let explore = rng.random::<f64>() < epsilon;
        let random_action = rng.random_range(0..n_actions);
        let start = ArrayView1::from(observation);
        let cfg = self.config;

        let (sequence, value) = match cfg.tree_size(n_actions) {
            Some(size) if cfg.exhaustive && size <= cfg.candidates => {
                let seqs: Vec<Vec<usize>> = (0..size)
                    .map(|mut k| {
                        let mut s = vec![0; cfg.horizon];
                        for slot in s.iter_mut().rev() {
                            *slot = k % n_actions;
                            k /= n_actions;
                        }
                        s
                    })
                    .collect();
                let scores = score_sequences(predictor, start, &seqs);
                let best = argmax_first(&scores);
                (seqs[best].clone(), scores[best])
            }
            _ => self.cross_entropy(predictor, start, rng),
        };
        self.previous = Some(sequence.clone());
        if explore {
            Plan {
                action: random_action,
                value,
                sequence,
                explored: true,
            }
        } else {
            Plan {
                action: sequence[0],
                value,
                sequence,
                explored: false,
            }
        }
    }

    fn cross_entropy(
        &self,
        predictor: &dyn Predictor,
        start: ArrayView1<f64>,
        rng: &mut SimRng,
    ) -> (Vec<usize>, f64) {
        let cfg = self.config;
        let n_actions = predictor.n_actions();
        let h = cfg.horizon;
        let mut probs = vec![vec![1.0 / n_actions as f64; n_actions]; h];
        let elites = ((cfg.elite_fraction * cfg.candidates as f64).ceil() as usize).clamp(1, cfg.candidates);
        let mut best: (Vec<usize>, f64) = (vec![0; h], f64::NEG_INFINITY);

        for iter in 0..cfg.iterations {
            let mut seqs: Vec<Vec<usize>> = Vec::with_capacity(cfg.candidates);
            if iter == 0 {
                if let Some(prev) = &self.previous {
                    let mut shifted: Vec<usize> = prev.iter().skip(1).copied().take(h).collect();
                    while shifted.len() < h {
                        shifted.push(*shifted.last().unwrap_or(&0));
                    }
                    seqs.push(shifted);
                }
            } else {
                seqs.push(best.0.clone());
            }
            while seqs.len() < cfg.candidates {
                seqs.push(probs.iter().map(|p| sample_categorical(p, rng)).collect());
            }
            let scores = score_sequences(predictor, start, &seqs);
            let mut order: Vec<usize> = (0..seqs.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            if scores[order[0]] > best.1 {
                best = (seqs[order[0]].clone(), scores[order[0]]);
            }
            for (t, p) in probs.iter_mut().enumerate() {
                let mut freq = vec![0.0; n_actions];
                for &i in &order[..elites] {
                    freq[seqs[i][t]] += 1.0 / elites as f64;
                }
                for (pi, f) in p.iter_mut().zip(freq) {
                    *pi = cfg.smoothing * *pi + (1.0 - cfg.smoothing) * f;
                }
            }
        }
        best
    }
}

fn sample_categorical(p: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}
