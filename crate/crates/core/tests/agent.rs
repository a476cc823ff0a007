use biped_core::agent::*;
use biped_core::env::{reward, Env, EpisodeConfig, Observation, RewardConfig, OBS_DIM, OBS_VX, OBS_Z};
use biped_core::models::{build_model, ModelKind};
use biped_core::rng::stream;
use biped_core::Error;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Unit point mass pushed by one of three forces; rewarded for tracking a
/// target speed.
struct PointMass {
    dt: f64,
    target: f64,
}

impl PointMass {
    fn step(&self, x: f64, v: f64, a: usize) -> (f64, f64, f64) {
        let f = [-1.0, 0.0, 1.0][a];
        let v2 = v + self.dt * f;
        let x2 = x + self.dt * v2;
        (x2, v2, -(v2 - self.target).powi(2) - 0.01 * x2 * x2)
    }

    /// Best first action and return by full enumeration, first maximizer wins.
    /// Returns are accumulated front to back.
    fn tree_search(&self, x: f64, v: f64, depth: usize, acc: f64) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..3 {
            let (x2, v2, r) = self.step(x, v, a);
            let total = if depth == 1 {
                acc + r
            } else {
                self.tree_search(x2, v2, depth - 1, acc + r).1
            };
            if total > best.1 {
                best = (a, total);
            }
        }
        best
    }
}

impl Predictor for PointMass {
    fn n_actions(&self) -> usize {
        3
    }

    fn advance(&self, states: &mut Array2<f64>, actions: &[usize]) -> Array1<f64> {
        let mut r = Array1::zeros(actions.len());
        for (i, (mut row, &a)) in states.outer_iter_mut().zip(actions).enumerate() {
            let (x, v, rew) = self.step(row[0], row[1], a);
            row[0] = x;
            row[1] = v;
            r[i] = rew;
        }
        r
    }
}

/// Fixed reward per action, independent of the state.
struct Bandit(Vec<f64>);

impl Predictor for Bandit {
    fn n_actions(&self) -> usize {
        self.0.len()
    }

    fn advance(&self, _: &mut Array2<f64>, actions: &[usize]) -> Array1<f64> {
        actions.iter().map(|&a| self.0[a]).collect()
    }
}

fn exhaustive(horizon: usize, candidates: usize) -> PlannerConfig {
    PlannerConfig {
        horizon,
        candidates,
        exhaustive: true,
        ..PlannerConfig::default()
    }
}

#[test]
fn planner_matches_tree_search_on_point_mass() {
    let toy = PointMass { dt: 0.1, target: 0.5 };
    let mut planner = Planner::new(exhaustive(3, 27)).unwrap();
    let mut rng = stream(11, "starts", 0);
    let mut plan_rng = stream(11, "planner", 0);
    for _ in 0..100 {
        let x = rng.random_range(-2.0..2.0);
        let v = rng.random_range(-2.0..2.0);
        planner.reset();
        let plan = planner.plan(&toy, &[x, v], 0.0, &mut plan_rng);
        let (action, value) = toy.tree_search(x, v, 3, 0.0);
        assert_eq!(plan.action, action, "start ({x}, {v})");
        assert_eq!(plan.value, value);
    }
}

#[test]
fn single_step_horizon_is_argmax() {
    let rewards: Vec<f64> = (0..24).map(|a| ((a * 7) % 24) as f64 * 0.1 - 1.0).collect();
    let best = (0..24).max_by(|&a, &b| rewards[a].total_cmp(&rewards[b])).unwrap();
    let bandit = Bandit(rewards);
    let mut planner = Planner::new(exhaustive(1, 24)).unwrap();
    let plan = planner.plan(&bandit, &[0.0], 0.0, &mut stream(0, "planner", 0));
    assert_eq!(plan.action, best);
    assert!(!plan.explored);
}

fn chi_square(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

// 99th percentile of chi-square with 23 degrees of freedom.
const CHI2_23_99: f64 = 41.638;

#[test]
fn full_exploration_is_uniform() {
    let bandit = Bandit((0..24).map(f64::from).collect());
    let mut planner = Planner::new(exhaustive(1, 24)).unwrap();
    let mut rng = stream(4, "planner", 0);
    let mut counts = vec![0; 24];
    for _ in 0..24_000 {
        let p = planner.plan(&bandit, &[0.0], 1.0, &mut rng);
        assert!(p.explored);
        counts[p.action] += 1;
    }
    assert!(chi_square(&counts) < CHI2_23_99, "{counts:?}");
}

#[test]
fn random_warmup_fills_the_buffer_uniformly() {
    let mut env = Env::new(build_model(ModelKind::Passive), EpisodeConfig::default(), RewardConfig::default()).unwrap();
    let mut buffer = ReplayBuffer::new();
    let records = collect_random(&mut env, 40, 3, &mut buffer).unwrap();
    assert_eq!(records.len(), 40);
    assert_eq!(buffer.len(), 20_000);
    assert_eq!(buffer.episodes(), 40);
    let h = buffer.action_histogram(24);
    assert!(chi_square(&h) < CHI2_23_99, "{h:?}");

    let mut again = ReplayBuffer::new();
    collect_random(&mut env, 2, 3, &mut again).unwrap();
    assert_eq!(again.transitions(), &buffer.transitions()[..1000]);
}

fn small_model(obs_dim: usize, n_actions: usize) -> DynamicsModel {
    let cfg = ModelConfig {
        ensemble: 2,
        hidden: 32,
        hidden_layers: 2,
    };
    DynamicsModel::new(cfg, obs_dim, n_actions, &mut stream(0, "model-init", 0)).unwrap()
}

fn split() -> EpisodeSplit {
    EpisodeSplit {
        seed: 0,
        validation_fraction: 0.2,
    }
}

#[test]
fn training_needs_data() {
    let mut model = small_model(OBS_DIM, 24);
    let err = train_model(&ReplayBuffer::new(), &mut model, &TrainConfig::default(), &split(), 0).unwrap_err();
    assert!(matches!(err, Error::EmptyBuffer));
}

/// Scalar linear plant in the forward-speed slot: v' = a v + b u + noise.
struct Linear {
    a: f64,
    b: f64,
    noise: f64,
}

impl Linear {
    fn force(action: usize) -> f64 {
        (action as f64 - 11.5) / 11.5 * 4.0
    }

    fn obs(v: f64) -> Observation {
        let mut o = [0.0; OBS_DIM];
        o[OBS_Z] = 0.8;
        o[OBS_VX] = v;
        Observation(o)
    }

    fn buffer(&self, episodes: u32, steps: usize, seed: u64) -> ReplayBuffer {
        let mut rng = stream(seed, "linear", 0);
        let noise = Normal::new(0.0, self.noise).unwrap();
        let cfg = RewardConfig::new(1.5);
        let mut buffer = ReplayBuffer::new();
        for _ in 0..episodes {
            let episode = buffer.begin_episode();
            let mut v = rng.random_range(-1.0..2.0);
            for _ in 0..steps {
                let a = rng.random_range(0..24);
                let v2 = self.a * v + self.b * Self::force(a) + noise.sample(&mut rng);
                buffer.push(Transition {
                    observation: Self::obs(v),
                    action: vec![a],
                    action_index: a,
                    next_observation: Self::obs(v2),
                    reward: reward(v2, 0.8, &cfg).total,
                    episode,
                });
                v = v2;
            }
        }
        buffer
    }
}

impl Predictor for Linear {
    fn n_actions(&self) -> usize {
        24
    }

    fn advance(&self, states: &mut Array2<f64>, actions: &[usize]) -> Array1<f64> {
        let cfg = RewardConfig::new(1.5);
        let mut r = Array1::zeros(actions.len());
        for (i, (mut row, &a)) in states.outer_iter_mut().zip(actions).enumerate() {
            row[OBS_VX] = self.a * row[OBS_VX] + self.b * Self::force(a);
            r[i] = reward(row[OBS_VX], row[OBS_Z], &cfg).total;
        }
        r
    }
}

fn linear_fit() -> (Linear, DynamicsModel, TrainReport) {
    let plant = Linear {
        a: 0.8,
        b: 0.1,
        noise: 0.02,
    };
    let buffer = plant.buffer(60, 50, 1);
    let mut model = small_model(OBS_DIM, 24);
    let cfg = TrainConfig {
        steps: 3000,
        batch_size: 128,
        ..TrainConfig::default()
    };
    let report = train_model(&buffer, &mut model, &cfg, &split(), 5).unwrap();
    (plant, model, report)
}

#[test]
fn linear_plant_is_learned_to_the_noise_floor_and_regulated() {
    let (plant, model, report) = linear_fit();
    assert!(report.validation_transitions > 0);
    assert!(report.rmse[OBS_VX] < 1.5 * plant.noise, "rmse {}", report.rmse[OBS_VX]);
    assert!(report.rmse[OBS_VX] < 0.2 * report.baseline_rmse[OBS_VX]);

    let cfg = RewardConfig::new(1.5);
    let pcfg = PlannerConfig {
        horizon: 3,
        candidates: 200,
        iterations: 3,
        ..PlannerConfig::default()
    };
    let learned = ModelPredictor {
        model: &model,
        reward_config: &cfg,
        reward_source: RewardSource::Analytic,
        disagreement_penalty: 0.0,
    };
    let run = |predictor: &dyn Predictor| {
        let mut planner = Planner::new(pcfg).unwrap();
        let mut rng = stream(2, "planner", 0);
        let mut v = 0.0;
        let mut total = 0.0;
        for _ in 0..40 {
            let a = planner.plan(predictor, Linear::obs(v).as_slice(), 0.0, &mut rng).action;
            v = plant.a * v + plant.b * Linear::force(a);
            total += reward(v, 0.8, &cfg).total;
        }
        (total, v)
    };
    let (oracle, _) = run(&plant);
    let (achieved, v_end) = run(&learned);
    assert!((v_end - 1.5).abs() < 0.1, "final speed {v_end}");
    assert!(achieved > oracle - 0.05 * oracle.abs(), "{achieved} vs {oracle}");
}

#[test]
fn validation_episodes_never_touch_the_weights() {
    let plant = Linear {
        a: 0.8,
        b: 0.1,
        noise: 0.02,
    };
    let clean = plant.buffer(20, 20, 1);
    let mut poisoned = ReplayBuffer::new();
    let s = split();
    let mut current = None;
    for t in clean.transitions() {
        if current != Some(t.episode) {
            current = Some(poisoned.begin_episode());
        }
        let mut t = t.clone();
        if s.is_validation(t.episode) {
            t.next_observation.0[OBS_VX] = 1e6;
            t.reward = -1e6;
        }
        poisoned.push(t);
    }
    let cfg = TrainConfig {
        steps: 50,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let mut a = small_model(OBS_DIM, 24);
    let mut b = small_model(OBS_DIM, 24);
    let ra = train_model(&clean, &mut a, &cfg, &s, 3).unwrap();
    let rb = train_model(&poisoned, &mut b, &cfg, &s, 3).unwrap();
    assert!(!ra.validation_episodes.is_empty());
    assert_eq!(ra.validation_episodes, rb.validation_episodes);
    assert!(ra.validation_episodes.iter().all(|&e| s.is_validation(e)));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(rb.rmse[OBS_VX] > 1e3);
}

#[test]
fn non_finite_targets_abort_training() {
    let plant = Linear {
        a: 0.8,
        b: 0.1,
        noise: 0.02,
    };
    let mut buffer = plant.buffer(5, 10, 2);
    let mut nan = buffer.transitions()[3].clone();
    nan.reward = f64::NAN;
    let e = buffer.begin_episode();
    nan.episode = e;
    for _ in 0..50 {
        buffer.push(nan.clone());
    }
    let s = EpisodeSplit {
        seed: 0,
        validation_fraction: 0.0,
    };
    let mut model = small_model(OBS_DIM, 24);
    let err = train_model(&buffer, &mut model, &TrainConfig::default(), &s, 0).unwrap_err();
    assert!(matches!(err, Error::Divergence(_)), "{err}");
}

fn tiny_agent(seed: u64) -> (Env, AgentConfig) {
    let episode = EpisodeConfig {
        steps_per_episode: 20,
        ..EpisodeConfig::default()
    };
    let env = Env::new(build_model(ModelKind::Passive), episode, RewardConfig::new(1.5)).unwrap();
    let mut cfg = AgentConfig::desk();
    cfg.seed = seed;
    cfg.warmup_episodes = 3;
    cfg.episodes = 4;
    cfg.warmup_train.steps = 60;
    cfg.train.steps = 10;
    cfg.planner.candidates = 20;
    cfg.planner.horizon = 3;
    (env, cfg)
}

fn checkpoint(env: &Env, cfg: &AgentConfig, model: DynamicsModel) -> Checkpoint {
    Checkpoint {
        version: CHECKPOINT_VERSION,
        model_kind: ModelKind::Passive,
        seed: cfg.seed,
        episodes_trained: cfg.episodes,
        reward: env.reward_config.clone(),
        episode: env.config.clone(),
        planner: cfg.planner,
        model,
    }
}

#[test]
fn training_loop_is_deterministic_and_checkpoints_roundtrip() {
    let train = |seed| {
        let (mut env, cfg) = tiny_agent(seed);
        let mut calls = 0;
        let mut progress = |_: Option<&CurveRow>, _: &EpisodeRecord, _: &DynamicsModel| {
            calls += 1;
            Ok(())
        };
        let out = train_agent(&mut env, &cfg, &mut progress).unwrap();
        assert_eq!(calls, cfg.episodes + 1);
        (env, cfg, out)
    };
    let (mut env, cfg, a) = train(1);
    let (_, _, b) = train(1);
    assert_eq!(a.curve.len(), cfg.episodes);
    assert_eq!(format!("{:?}", a.curve), format!("{:?}", b.curve));
    assert_eq!(a.buffer.len(), (cfg.warmup_episodes + cfg.episodes) * 20);
    assert_eq!(a.warmup_returns.len(), cfg.warmup_episodes);
    let (_, _, c) = train(2);
    assert_ne!(format!("{:?}", a.curve), format!("{:?}", c.curve));

    let ckpt = checkpoint(&env, &cfg, a.model);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let before = serde_json::to_string(&loaded).unwrap();
    assert_eq!(before, serde_json::to_string(&ckpt).unwrap());

    let first = evaluate(&mut env, &loaded, 0, 0).unwrap();
    let second = evaluate(&mut env, &loaded, 0, 0).unwrap();
    assert_eq!(first.cumulative_reward, second.cumulative_reward);
    assert_eq!(first.trajectory.rows.len(), second.trajectory.rows.len());
    for (x, y) in first.trajectory.rows.iter().zip(&second.trajectory.rows) {
        assert_eq!(x.q, y.q);
    }
    assert_eq!(serde_json::to_string(&loaded).unwrap(), before);

    let mut value: serde_json::Value = serde_json::from_str(&before).unwrap();
    value["version"] = serde_json::json!(CHECKPOINT_VERSION + 1);
    std::fs::write(&path, value.to_string()).unwrap();
    let err = Checkpoint::load(&path).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
}
