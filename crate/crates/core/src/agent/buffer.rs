use serde::{Deserialize, Serialize};

use crate::env::{Observation, OBS_DIM};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    /// Per-channel indices of the right-leg command.
    pub action: Vec<usize>,
    /// Flat index of `action` in the action space.
    pub action_index: usize,
    pub next_observation: Observation,
    pub reward: f64,
    pub episode: u32,
}

impl Transition {
    pub fn delta(&self) -> [f64; OBS_DIM] {
        std::array::from_fn(|i| self.next_observation.0[i] - self.observation.0[i])
    }
}

/// Append-only transition store keyed by episode.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReplayBuffer {
    transitions: Vec<Transition>,
    episodes: u32,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn episodes(&self) -> u32 {
        self.episodes
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Starts a new episode and returns its id.
    pub fn begin_episode(&mut self) -> u32 {
        self.episodes += 1;
        self.episodes - 1
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn action_histogram(&self, n_actions: usize) -> Vec<usize> {
        let mut h = vec![0; n_actions];
        for t in &self.transitions {
            h[t.action_index] += 1;
        }
        h
    }
}

/// Episode-level train/validation assignment. Membership depends only on the
/// seed and episode id, so it is stable as the buffer grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSplit {
    pub seed: u64,
    /// Fraction of episodes held out for validation.
    pub validation_fraction: f64,
}

impl EpisodeSplit {
    pub fn is_validation(&self, episode: u32) -> bool {
        let u = (derive_seed(self.seed, "split", u64::from(episode)) >> 11) as f64 / (1u64 << 53) as f64;
        u < self.validation_fraction
    }

    /// Row indices of the training and validation transitions.
    pub fn partition(&self, buffer: &ReplayBuffer) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, t) in buffer.transitions.iter().enumerate() {
            if self.is_validation(t.episode) {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_by_episode() {
        let mut b = ReplayBuffer::new();
        for _ in 0..200 {
            let e = b.begin_episode();
            for k in 0..3 {
                b.push(Transition {
                    observation: Observation([0.0; OBS_DIM]),
                    action: vec![k],
                    action_index: k,
                    next_observation: Observation([1.0; OBS_DIM]),
                    reward: 0.0,
                    episode: e,
                });
            }
        }
        let split = EpisodeSplit {
            seed: 3,
            validation_fraction: 0.1,
        };
        let (train, val) = split.partition(&b);
        assert_eq!(train.len() + val.len(), b.len());
        let ep = |i: &usize| b.transitions()[*i].episode;
        let val_eps: std::collections::BTreeSet<u32> = val.iter().map(ep).collect();
        assert!(train.iter().all(|i| !val_eps.contains(&ep(i))));
        assert!((8..=35).contains(&val_eps.len()), "{} held-out episodes", val_eps.len());
    }
}
