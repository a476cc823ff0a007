use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sha256_hex;
use crate::agent::AgentConfig;
use crate::env::{EpisodeConfig, RewardConfig};
use crate::error::{Error, Result};
use crate::models::{build_model, ModelBundle, ModelKind};

/// Everything a training run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub reward: RewardConfig,
    pub episode: EpisodeConfig,
    pub agent: AgentConfig,
    /// Replaces the built-in parameters of `model` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<ModelBundle>,
}

const SECTION_NOTES: [(&str, &str); 9] = [
    ("[reward]", "Per-step reward: velocity tracking toward target_velocity plus a fall penalty below height_threshold."),
    ("[episode]", "500 control steps of 50 ms make a 25 s episode; each control step is split into physics substeps."),
    ("[episode.ground]", "Penalty contact: normal spring/damper and smoothed Coulomb friction; slope in degrees."),
    ("[agent]", "Random warmup episodes, then alternate model fitting with one planner episode."),
    ("[agent.epsilon]", "Exploration rate, decayed linearly over the first planner episodes."),
    ("[agent.model]", "Ensemble of MLPs predicting the standardized observation change and the reward."),
    ("[agent.warmup_train]", "Gradient steps after the warmup."),
    ("[agent.train]", "Gradient steps before every planner episode."),
    ("[agent.planner]", "Receding-horizon search over action sequences (cross-entropy method)."),
];

impl RunConfig {
    pub fn new(model: ModelKind, target_velocity: f64) -> Self {
        Self {
            model,
            reward: RewardConfig::new(target_velocity),
            episode: EpisodeConfig::default(),
            agent: AgentConfig::default(),
            bundle: None,
        }
    }

    /// Config with the full robot parameter set written out.
    pub fn with_bundle(mut self) -> Self {
        self.bundle = Some(build_model(self.model));
        self
    }

    pub fn model_bundle(&self) -> ModelBundle {
        self.bundle.clone().unwrap_or_else(|| build_model(self.model))
    }

    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        self.episode.validate()?;
        self.agent.validate()?;
        if let Some(b) = &self.bundle {
            if b.kind != self.model {
                return Err(Error::Config(format!(
                    "bundle is a {} model but the config selects {}",
                    b.kind, self.model
                )));
            }
        }
        Ok(())
    }

    /// Canonical TOML without comments.
    pub fn to_toml_plain(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// TOML with a comment above each section.
    pub fn to_toml(&self) -> Result<String> {
        let plain = self.to_toml_plain()?;
        let mut out = String::with_capacity(plain.len() + 1024);
        for line in plain.lines() {
            if let Some((_, note)) = SECTION_NOTES.iter().find(|(h, _)| *h == line) {
                out.push_str("# ");
                out.push_str(note);
                out.push('\n');
            }
            out.push_str(line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml_plain()?.as_bytes()))
    }
}
