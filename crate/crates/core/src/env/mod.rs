//! Learning environment: 50 ms control steps held over physics substeps,
//! proprioceptive observations, the speed/height reward, and seeded resets.

mod plant;
mod trajectory;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::actuation::{decode_action, Action, Leg, LegCommands};
use crate::contact::GroundSpec;
use crate::dynamics::{forward_kinematics, DofVector, RobotSpec, SimState, BASE_X, BASE_Z, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::models::{joint_index, ModelBundle, ANKLE_JOINT, HIP};
use crate::rng::SimRng;

pub use plant::{Plant, TickDetails};
pub use trajectory::{Trajectory, TrajectoryRow, TRAJECTORY_SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Target forward speed, m/s.
    pub target_velocity: f64,
    /// Speeds below this are penalized.
    pub stall_velocity: f64,
    /// Pelvis heights below this are penalized.
    pub height_threshold: f64,
    pub height_weight: f64,
}

impl RewardConfig {
    pub fn new(target_velocity: f64) -> Self {
        Self {
            target_velocity,
            stall_velocity: 0.2,
            height_threshold: 0.7,
            height_weight: 1.0,
        }
    }

    /// Chosen so that the best possible step earns exactly 1.
    pub fn velocity_weight(&self) -> f64 {
        1.0 / (self.target_velocity - self.stall_velocity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_velocity > self.stall_velocity && self.height_weight >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "target velocity {} must exceed the stall threshold {}",
                self.target_velocity, self.stall_velocity
            )))
        }
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::new(1.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub total: f64,
    pub velocity: f64,
    pub height: f64,
}

/// Speed term peaks at the target and falls off linearly on both sides;
/// the height term is -1 below the threshold.
pub fn reward(forward_velocity: f64, height: f64, config: &RewardConfig) -> RewardTerms {
    let vd = config.target_velocity;
    let v0 = config.stall_velocity;
    let velocity = if forward_velocity <= vd {
        forward_velocity - v0
    } else {
        2.0 * vd - forward_velocity - v0
    };
    let height_term = if height < config.height_threshold { -1.0 } else { 0.0 };
    RewardTerms {
        total: config.velocity_weight() * velocity + config.height_weight * height_term,
        velocity,
        height: height_term,
    }
}

pub const OBS_DIM: usize = 23;
pub const OBS_Z: usize = 0;
pub const OBS_VX: usize = 1;
pub const OBS_VZ: usize = 2;
pub const OBS_ANGLES: usize = 3;
pub const OBS_RATES: usize = OBS_ANGLES + JOINT_COUNT;
pub const OBS_CONTACTS: usize = OBS_RATES + JOINT_COUNT;

/// `[z, xdot, zdot, 8 joint angles, 8 joint rates, 4 contact flags]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn names() -> Vec<String> {
        let mut names = vec!["z".to_string(), "vx".into(), "vz".into()];
        let joints = [
            "hip_r", "knee_r", "ankle_r", "foot_r", "hip_l", "knee_l", "ankle_l", "foot_l",
        ];
        names.extend(joints.iter().map(|j| format!("q_{j}")));
        names.extend(joints.iter().map(|j| format!("dq_{j}")));
        names.extend(["c_heel_r", "c_toe_r", "c_heel_l", "c_toe_l"].map(String::from));
        names
    }

    pub fn height(&self) -> f64 {
        self.0[OBS_Z]
    }

    pub fn forward_velocity(&self) -> f64 {
        self.0[OBS_VX]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_state(state: &SimState, contacts: &[bool]) -> Self {
        let mut o = [0.0; OBS_DIM];
        o[OBS_Z] = state.q[BASE_Z];
        o[OBS_VX] = state.qdot[BASE_X];
        o[OBS_VZ] = state.qdot[BASE_Z];
        for j in 0..JOINT_COUNT {
            o[OBS_ANGLES + j] = state.q[RobotSpec::coord(j)];
            o[OBS_RATES + j] = state.qdot[RobotSpec::coord(j)];
        }
        for (slot, &c) in o[OBS_CONTACTS..].iter_mut().zip(contacts) {
            *slot = if c { 1.0 } else { 0.0 };
        }
        Self(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Control step, s.
    pub control_dt: f64,
    pub steps_per_episode: usize,
    pub substeps: usize,
    /// Std-dev of the joint-angle perturbation at reset, rad.
    pub init_noise: f64,
    pub ground: GroundSpec,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.05,
            steps_per_episode: 500,
            substeps: 50,
            init_noise: 0.01,
            ground: GroundSpec::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn physics_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }

    pub fn duration(&self) -> f64 {
        self.control_dt * self.steps_per_episode as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.ground.validate()?;
        if self.control_dt > 0.0 && self.substeps > 0 && self.steps_per_episode > 0 && self.init_noise >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid episode configuration: {self:?}")))
        }
    }
}

/// Standing pose with both feet flat and the lowest contact point on the ground.
pub fn standing_pose(bundle: &ModelBundle, ground: &GroundSpec, perturbation: &[f64]) -> DofVector {
    let mut q = DofVector::zeros();
    let split = bundle.initial_pose.hip_split;
    for (leg, sign) in [(Leg::Right, 1.0), (Leg::Left, -1.0)] {
        q[RobotSpec::coord(joint_index(leg, HIP))] = sign * split;
        q[RobotSpec::coord(joint_index(leg, ANKLE_JOINT))] = -sign * split;
    }
    for (j, dq) in perturbation.iter().enumerate().take(JOINT_COUNT) {
        q[RobotSpec::coord(j)] += dq;
    }
    let frame = ground.frame();
    let frames = forward_kinematics(&bundle.robot, &q);
    let lowest = frames
        .points
        .iter()
        .map(|(_, p)| frame.distance(p))
        .fold(f64::INFINITY, f64::min);
    // Shift vertically so the lowest point just touches the plane.
    q[BASE_Z] -= lowest / frame.normal.y;
    q
}

#[derive(Debug, Clone)]
pub struct StepInfo {
    pub commands: LegCommands,
    pub reward: RewardTerms,
    /// Actuator work done during this control step, per actuator, J.
    pub work: Vec<f64>,
    pub contacts: Vec<bool>,
    /// Smallest muscle tension seen during the step.
    pub min_unilateral_tension: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub info: StepInfo,
}

pub struct Env {
    pub plant: Plant,
    pub config: EpisodeConfig,
    pub reward_config: RewardConfig,
    state: SimState,
    steps: usize,
    contacts: Vec<bool>,
}

impl Env {
    pub fn new(bundle: ModelBundle, config: EpisodeConfig, reward_config: RewardConfig) -> Result<Self> {
        config.validate()?;
        reward_config.validate()?;
        let report = crate::models::validate(&bundle);
        if !report.is_ok() {
            return Err(Error::InvalidSpec(report.errors.join("; ")));
        }
        let plant = Plant::new(bundle, config.ground.clone())?;
        let q = standing_pose(&plant.bundle, &config.ground, &[]);
        let n = plant.robot().contact_points.len();
        Ok(Self {
            plant,
            config,
            reward_config,
            state: SimState::at_rest(q),
            steps: 0,
            contacts: vec![false; n],
        })
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.plant.bundle
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.config.steps_per_episode
    }

    pub fn n_actions(&self) -> usize {
        self.plant.bundle.action_space.cardinality()
    }

    /// Standing pose plus Gaussian joint noise from `rng`.
    pub fn reset(&mut self, rng: &mut SimRng) -> Observation {
        let noise: Vec<f64> = if self.config.init_noise > 0.0 {
            let normal = Normal::new(0.0, self.config.init_noise).expect("finite std-dev");
            (0..JOINT_COUNT).map(|_| normal.sample(rng)).collect()
        } else {
            Vec::new()
        };
        let q = standing_pose(&self.plant.bundle, &self.config.ground, &noise);
        self.reset_to(SimState::at_rest(q))
    }

    pub fn reset_to(&mut self, state: SimState) -> Observation {
        self.state = state;
        self.steps = 0;
        self.contacts = self.plant.contacts(&self.state).iter().map(|c| c.in_contact).collect();
        self.observation()
    }

    pub fn observation(&self) -> Observation {
        Observation::from_state(&self.state, &self.contacts)
    }

    /// Holds the decoded commands for one control step.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let commands = decode_action(&self.plant.bundle.action_space, action)?;
        self.step_commands(commands)
    }

    pub fn step_flat(&mut self, action: usize) -> Result<StepOutcome> {
        let a = self.plant.bundle.action_space.from_flat(action)?;
        self.step(&a)
    }

    pub fn step_commands(&mut self, commands: LegCommands) -> Result<StepOutcome> {
        let dt = self.config.physics_dt();
        let mut work = vec![0.0; self.plant.bundle.actuators.len()];
        let mut min_tension = f64::INFINITY;
        for _ in 0..self.config.substeps {
            let (next, details) = self.plant.substep(&self.state, &commands, dt)?;
            for (w, p) in work.iter_mut().zip(&details.actuator_power) {
                *w += p * dt;
            }
            for (m, t) in self.plant.bundle.muscles.iter().zip(&details.tensions) {
                if m.unilateral {
                    min_tension = min_tension.min(*t);
                }
            }
            self.state = next;
        }
        self.contacts = self.plant.contacts(&self.state).iter().map(|c| c.in_contact).collect();
        self.steps += 1;
        let obs = self.observation();
        let terms = reward(obs.forward_velocity(), obs.height(), &self.reward_config);
        Ok(StepOutcome {
            observation: obs,
            reward: terms.total,
            info: StepInfo {
                commands,
                reward: terms,
                work,
                contacts: self.contacts.clone(),
                min_unilateral_tension: min_tension,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reward_examples() {
        let walk = RewardConfig::new(1.5);
        assert_relative_eq!(reward(1.5, 0.8, &walk).total, 1.0, epsilon = 1e-15);
        assert_eq!(reward(0.2, 0.8, &walk).velocity, 0.0);
        assert_eq!(reward(0.2, 0.8, &walk).total, 0.0);

        let run = RewardConfig::new(2.5);
        let r = reward(2.8, 0.65, &run);
        assert_relative_eq!(r.velocity, 2.0, epsilon = 1e-12);
        assert_eq!(r.height, -1.0);
        assert_relative_eq!(r.total, 2.0 / 2.3 - 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.total, -0.1304, epsilon = 1e-4);
    }

    #[test]
    fn reward_rejects_target_below_stall() {
        assert!(RewardConfig::new(0.1).validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn reward_never_exceeds_one(v in -5.0f64..5.0, z in 0.0f64..1.2, vd in 0.3f64..4.0) {
            let c = RewardConfig::new(vd);
            let r = reward(v, z, &c).total;
            proptest::prop_assert!(r <= 1.0 + 1e-12);
            if (v - vd).abs() > 1e-9 || z < 0.7 {
                proptest::prop_assert!(r < 1.0);
            }
        }

        #[test]
        fn reward_continuous_at_target(vd in 0.3f64..4.0) {
            let c = RewardConfig::new(vd);
            let below = reward(vd - 1e-9, 1.0, &c).total;
            let above = reward(vd + 1e-9, 1.0, &c).total;
            proptest::prop_assert!((below - above).abs() < 1e-7);
        }
    }

    #[test]
    fn episode_timing() {
        let c = EpisodeConfig::default();
        assert_relative_eq!(c.duration(), 25.0, epsilon = 1e-12);
        assert_relative_eq!(c.physics_dt(), 1e-3, epsilon = 1e-15);
    }
}
