//! Browser bindings: step the biped, decode actions and score states.

use wasm_bindgen::prelude::*;

use biped_core::actuation::decode_action;
use biped_core::dynamics::forward_kinematics;
use biped_core::env::{reward, Env, EpisodeConfig, RewardConfig};
use biped_core::models::{build_model, ModelKind};
use biped_core::rng;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn parse_model(model: &str) -> Result<ModelKind, JsValue> {
    model.parse().map_err(js_err)
}

/// One robot on flat ground, advanced one control step at a time.
#[wasm_bindgen]
pub struct Sim {
    env: Env,
    last_reward: f64,
    total_reward: f64,
}

#[wasm_bindgen]
impl Sim {
    #[wasm_bindgen(constructor)]
    pub fn new(model: &str, target_velocity: f64, seed: u32) -> Result<Sim, JsValue> {
        let kind = parse_model(model)?;
        let mut env = Env::new(build_model(kind), EpisodeConfig::default(), RewardConfig::new(target_velocity))
            .map_err(js_err)?;
        env.reset(&mut rng::stream(seed as u64, "reset", 0));
        Ok(Sim {
            env,
            last_reward: 0.0,
            total_reward: 0.0,
        })
    }

    #[wasm_bindgen(js_name = actionCount)]
    pub fn action_count(&self) -> usize {
        self.env.n_actions()
    }

    /// Advances one control step with a flat action index; returns the reward.
    pub fn step(&mut self, action: usize) -> Result<f64, JsValue> {
        let out = self.env.step_flat(action).map_err(js_err)?;
        self.last_reward = out.reward;
        self.total_reward += out.reward;
        Ok(out.reward)
    }

    /// Advances one control step with every actuator commanded to zero.
    pub fn coast(&mut self) -> Result<f64, JsValue> {
        let channels = self.env.bundle().action_space.channels.len();
        let out = self
            .env
            .step_commands(biped_core::actuation::LegCommands::zeros(channels))
            .map_err(js_err)?;
        self.last_reward = out.reward;
        self.total_reward += out.reward;
        Ok(out.reward)
    }

    pub fn time(&self) -> f64 {
        self.env.state().t
    }

    pub fn done(&self) -> bool {
        self.env.is_done()
    }

    #[wasm_bindgen(js_name = totalReward)]
    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    #[wasm_bindgen(js_name = lastReward)]
    pub fn last_reward(&self) -> f64 {
        self.last_reward
    }

    /// `[z, xdot, zdot, 8 angles, 8 rates, 4 contact flags]`.
    pub fn observation(&self) -> Vec<f64> {
        self.env.observation().0.to_vec()
    }

    /// Pelvis position, then the proximal and distal end of every link:
    /// `[px, pz, x0, z0, x1, z1, ...]` with four coordinates per link.
    pub fn frame(&self) -> Vec<f64> {
        let f = forward_kinematics(&self.env.bundle().robot, &self.env.state().q);
        let mut out = vec![f.pelvis.x, f.pelvis.y];
        for (o, t) in f.origin.iter().zip(&f.tip) {
            out.extend([o.x, o.y, t.x, t.y]);
        }
        out
    }
}

/// Right and left leg commands of a flat action index, as JSON.
#[wasm_bindgen(js_name = decodeAction)]
pub fn decode(model: &str, flat: usize) -> Result<String, JsValue> {
    let bundle = build_model(parse_model(model)?);
    let space = &bundle.action_space;
    let action = space.from_flat(flat).map_err(js_err)?;
    let cmd = decode_action(space, &action).map_err(js_err)?;
    let names: Vec<String> = space.channels.iter().map(|c| format!("{:?}", c.name)).collect();
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    Ok(format!(
        "{{\"indices\":[{}],\"channels\":[{}],\"right\":[{}],\"left\":[{}]}}",
        action.indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        names.join(","),
        list(&cmd.right),
        list(&cmd.left)
    ))
}

/// Per-step reward for a forward speed and pelvis height.
#[wasm_bindgen(js_name = stepReward)]
pub fn step_reward(forward_velocity: f64, height: f64, target_velocity: f64) -> f64 {
    reward(forward_velocity, height, &RewardConfig::new(target_velocity)).total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coasting_keeps_the_robot_up() {
        let mut sim = Sim::new("passive", 1.5, 0).unwrap();
        assert_eq!(sim.action_count(), 24);
        for _ in 0..10 {
            sim.coast().unwrap();
        }
        assert!((sim.time() - 0.5).abs() < 1e-9);
        assert!(sim.observation()[0] > 0.7);
        assert_eq!(sim.frame().len(), 2 + 4 * 8);
    }

    #[test]
    fn decodes_the_passive_origin() {
        let json = decode("passive", 0).unwrap();
        assert!(json.contains("\"right\":[400,0,24]"), "{json}");
        assert!(json.contains("\"left\":[-400,-400,-24]"), "{json}");
    }

    #[test]
    fn reward_matches_the_core() {
        assert_eq!(step_reward(1.5, 0.8, 1.5), 1.0);
        assert_eq!(step_reward(0.2, 0.5, 1.5), -1.0);
    }
}
