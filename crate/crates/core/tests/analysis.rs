use approx::assert_relative_eq;
use biped_core::actuation::LegCommands;
use biped_core::agent::{evaluate, Checkpoint, DynamicsModel, ModelConfig, PlannerConfig, CHECKPOINT_VERSION};
use biped_core::analysis::*;
use biped_core::dynamics::DofVector;
use biped_core::env::{Env, EpisodeConfig, RewardConfig, Trajectory, TrajectoryRow, OBS_DIM};
use biped_core::models::{build_model, ModelKind};
use biped_core::rng::stream;
use proptest::prelude::*;

const DT: f64 = 0.05;

fn row(t: f64, q: DofVector, qdot: DofVector, contacts: [bool; 4], work: Vec<f64>) -> TrajectoryRow {
    TrajectoryRow {
        t,
        q,
        qdot,
        action: vec![0, 0, 0],
        commands_right: vec![0.0; 3],
        commands_left: vec![0.0; 3],
        reward: 0.0,
        r_v: 0.0,
        r_h: 0.0,
        contacts,
        work,
    }
}

/// Synthetic walk: constant forward speed, right foot down for the first
/// half of every period of `n` control steps, left foot in antiphase.
fn square_gait(steps: usize, n: usize, speed: f64, offset: f64) -> Trajectory {
    let mut traj = Trajectory::new(vec!["a".into()], vec!["m1".into(), "m2".into()]);
    for k in 0..steps {
        let t = offset + k as f64 * DT;
        let right = 2 * (k % n) < n;
        let mut q = DofVector::zeros();
        q[0] = speed * t;
        q[1] = 0.8;
        let mut qd = DofVector::zeros();
        qd[0] = speed;
        traj.rows.push(row(t, q, qd, [right, right, !right, !right], vec![0.1 * k as f64, 1.0]));
    }
    traj
}

#[test]
fn square_wave_touchdowns_every_period() {
    let traj = square_gait(200, 8, 1.0, 0.0);
    let ev = detect_gait_events(&traj, DEFAULT_DEBOUNCE);
    let td = &ev.right.touchdowns;
    assert!(td.len() >= 20);
    for w in td.windows(2) {
        assert_relative_eq!(w[1] - w[0], 0.4, epsilon = 1e-9);
    }
    assert_eq!(ev.left.touchdowns.len(), ev.left.liftoffs.len() + usize::from(ev.left.touchdowns.len() > ev.left.liftoffs.len()));
    let m = gait_metrics(&traj, &ev);
    assert_relative_eq!(m.period.unwrap(), 0.4, epsilon = 1e-9);
    assert!(m.period_std.unwrap() < 1e-9);
    // Constant speed: step length is speed times period.
    assert_relative_eq!(m.step_length.unwrap(), 0.4, epsilon = 1e-9);
    assert_relative_eq!(m.duty_factor.unwrap(), 0.5, epsilon = 1e-9);
    assert_eq!(m.flight_time, 0.0);
    assert_eq!(m.double_support_time, 0.0);
    // Zero ankle and toe angles give a zero foot angle.
    assert_eq!(m.foot_angle.strides, 5);
    assert!(m.foot_angle.mean.iter().chain(&m.foot_angle.std).all(|v| *v == 0.0));
}

#[test]
fn touchdowns_and_liftoffs_alternate() {
    let traj = square_gait(137, 7, 0.7, 0.0);
    let ev = detect_gait_events(&traj, DEFAULT_DEBOUNCE);
    for foot in [&ev.right, &ev.left] {
        for (k, td) in foot.touchdowns.iter().enumerate() {
            if let Some(lo) = foot.liftoffs.get(k) {
                assert!(lo > td);
            }
            if let Some(next) = foot.touchdowns.get(k + 1) {
                assert!(foot.liftoffs[k] < *next);
            }
        }
        assert!(foot.touchdowns.iter().all(|t| *t <= traj.duration() + 1e-9));
    }
}

#[test]
fn constant_contact_is_one_touchdown() {
    let t: Vec<f64> = (0..100).map(|k| k as f64 * DT).collect();
    let ev = events_from_flags(&t, &[true; 100], &[false; 100], DEFAULT_DEBOUNCE);
    assert_eq!(ev.right.touchdowns, vec![0.0]);
    assert!(ev.right.liftoffs.is_empty());
    assert!(ev.left.touchdowns.is_empty());
}

#[test]
fn chatter_inside_the_window_is_one_event() {
    let dt = 0.005;
    let t: Vec<f64> = (0..200).map(|k| k as f64 * dt).collect();
    // Flicker for 30 ms around the real touchdown at 0.5 s.
    let flags: Vec<bool> = t
        .iter()
        .enumerate()
        .map(|(k, &ti)| if (0.47..0.5).contains(&ti) { k % 2 == 0 } else { ti >= 0.5 })
        .collect();
    let ev = events_from_flags(&t, &flags, &flags, DEFAULT_DEBOUNCE);
    assert_eq!(ev.right.touchdowns.len(), 1);
    assert!(ev.right.liftoffs.is_empty());
    assert!((ev.right.touchdowns[0] - 0.5).abs() <= 0.03 + 1e-9);
}

#[test]
fn energy_examples() {
    let n = 1000;
    let w = absolute_work(&vec![10.0; n], &vec![2.0; n], 1.0 / n as f64);
    assert_relative_eq!(w, 20.0, epsilon = 1e-9);
    assert_relative_eq!(absolute_work(&[-10.0], &[2.0], 1.0), 20.0);

    let traj = square_gait(100, 8, 1.0, 0.0);
    let whole = actuator_work(&traj);
    assert_relative_eq!(whole.per_actuator[1].1, 100.0, epsilon = 1e-9);
    for cut in [0, 1, 37, 99, 100] {
        let a = work_over(&traj, 0..cut);
        let b = work_over(&traj, cut..100);
        assert_eq!(a.total + b.total, whole.total);
    }
    let s = summarize(&[whole.clone(), whole]);
    assert_eq!(s.runs, 2);
    assert_eq!(s.std, 0.0);
}

#[test]
fn zero_command_coast_does_no_actuator_work() {
    let cfg = EpisodeConfig {
        steps_per_episode: 60,
        ..EpisodeConfig::default()
    };
    let mut env = Env::new(build_model(ModelKind::Passive), cfg, RewardConfig::default()).unwrap();
    env.reset(&mut stream(0, "reset", 0));
    let mut total = 0.0;
    while !env.is_done() {
        let out = env.step_commands(LegCommands::zeros(3)).unwrap();
        total += out.info.work.iter().sum::<f64>();
    }
    assert_eq!(total, 0.0);
}

fn section_sequence(states: Vec<Vec<f64>>) -> PoincareSequence {
    let times = (0..states.len()).map(|k| k as f64 * 0.4).collect();
    from_states(times, states, &[1.0; SECTION_DIM])
}

#[test]
fn poincare_examples() {
    let periodic = section_sequence(vec![vec![0.3; SECTION_DIM]; 12]);
    assert!(periodic.distances.iter().all(|d| *d == 0.0));
    assert_eq!(periodic.convergence(), Some(0.0));

    let drift = section_sequence((0..12).map(|k| vec![0.1 * k as f64; SECTION_DIM]).collect());
    let d0 = 0.1 * (SECTION_DIM as f64).sqrt();
    for d in &drift.distances {
        assert_relative_eq!(*d, d0, epsilon = 1e-9);
    }
    assert_relative_eq!(drift.convergence().unwrap(), 1.0, epsilon = 1e-9);

    // x_k = 0.8^k * (-1)^k toward the fixed point 0.
    let damped = section_sequence((0..15).map(|k| vec![(-0.8f64).powi(k); SECTION_DIM]).collect());
    let c = damped.convergence().unwrap();
    assert!(c < 1.0);
    assert_relative_eq!(c, 0.8f64.powi(9), epsilon = 1e-9);

    assert_eq!(section_sequence(vec![vec![0.0; SECTION_DIM]]).convergence(), None);
}

#[test]
fn poincare_samples_right_touchdowns() {
    let traj = square_gait(200, 8, 1.0, 0.0);
    let ev = detect_gait_events(&traj, DEFAULT_DEBOUNCE);
    let scale = section_scale(&[&traj]);
    assert_eq!(scale.len(), SECTION_DIM);
    let seq = poincare_sequence(&traj, &ev.right.touchdowns, &scale);
    assert_eq!(seq.states.len(), ev.right.touchdowns.len());
    assert!(seq.times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(seq.convergence(), Some(0.0));
}

fn rotation6(seed: u64) -> Vec<Vec<f64>> {
    // Orthonormal basis by Gram-Schmidt on seeded random vectors.
    use rand::Rng;
    let mut rng = stream(seed, "basis", 0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < 2 {
        let mut v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|x| x / n).collect());
    }
    basis
}

#[test]
fn circle_in_six_dimensions_is_recovered() {
    let basis = rotation6(3);
    let pts: Vec<Vec<f64>> = (0..200)
        .map(|k| {
            let th = k as f64 * std::f64::consts::TAU / 200.0;
            (0..6).map(|i| 2.0 * (th.cos() * basis[0][i] + th.sin() * basis[1][i]) + 0.5).collect()
        })
        .collect();
    let pca = Pca::fit(&pts, 2);
    assert!(pca.explained_ratio.iter().sum::<f64>() > 0.99);
    for p in &pts {
        let r = pca.project(p).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(r, 2.0, epsilon = 1e-6);
    }
    let emb = embed_series(&[pts.clone()], 1, 1);
    assert_eq!(emb.points[0].len(), 200);
    assert_eq!(emb, embed_series(&[pts], 1, 1));
}

#[test]
fn constant_trajectory_embeds_to_one_point() {
    let series = vec![vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]; 50];
    let emb = embed_series(&[series], DEFAULT_WINDOW, 1);
    let first = emb.points[0][0];
    assert!(emb.points[0].iter().all(|p| *p == first));
}

proptest! {
    #[test]
    fn window_count_formula(lens in proptest::collection::vec(0usize..80, 1..5), window in 1usize..15, stride in 1usize..6) {
        let episodes: Vec<Vec<Vec<f64>>> = lens
            .iter()
            .map(|&n| (0..n).map(|k| vec![(k as f64).sin(); 6]).collect())
            .collect();
        let emb = embed_series(&episodes, window, stride);
        let expected: usize = lens.iter().map(|&t| if t >= window { (t - window) / stride + 1 } else { 0 }).sum();
        let got: usize = emb.points.iter().map(Vec::len).sum();
        prop_assert_eq!(got, expected);
        for w in emb.windows.iter().flatten() {
            prop_assert_eq!(w.len(), 6 * window);
        }
    }

    #[test]
    fn events_ignore_time_translation(offset in -50.0f64..50.0, n in 4usize..20) {
        let a = square_gait(150, n, 1.0, 0.0);
        let b = square_gait(150, n, 1.0, offset);
        let ea = detect_gait_events(&a, DEFAULT_DEBOUNCE);
        let eb = detect_gait_events(&b, DEFAULT_DEBOUNCE);
        prop_assert_eq!(ea.right.touchdowns.len(), eb.right.touchdowns.len());
        prop_assert_eq!(ea.left.liftoffs.len(), eb.left.liftoffs.len());
        for (x, y) in ea.right.touchdowns.iter().zip(&eb.right.touchdowns) {
            prop_assert!((y - x - offset).abs() < 1e-9);
        }
    }
}

fn untrained_checkpoint() -> Checkpoint {
    let episode = EpisodeConfig {
        steps_per_episode: 30,
        ..EpisodeConfig::default()
    };
    let cfg = ModelConfig {
        ensemble: 1,
        hidden: 16,
        hidden_layers: 1,
    };
    Checkpoint {
        version: CHECKPOINT_VERSION,
        model_kind: ModelKind::Passive,
        seed: 0,
        episodes_trained: 0,
        reward: RewardConfig::new(1.5),
        episode,
        planner: PlannerConfig {
            horizon: 2,
            candidates: 10,
            iterations: 1,
            ..PlannerConfig::default()
        },
        model: DynamicsModel::new(cfg, OBS_DIM, 24, &mut stream(0, "model-init", 0)).unwrap(),
    }
}

#[test]
fn flat_slope_run_reproduces_evaluation() {
    let ckpt = untrained_checkpoint();
    let before = serde_json::to_string(&ckpt.model).unwrap();
    let bundle = build_model(ModelKind::Passive);
    let report = slope_eval(&ckpt, &bundle, &[-3.0], 2, 5).unwrap();
    assert_eq!(serde_json::to_string(&ckpt.model).unwrap(), before);
    assert_eq!(report.profiles.len(), 2);
    assert_eq!(report.trials.len(), 4);

    let mut env = Env::new(bundle.clone(), ckpt.episode.clone(), ckpt.reward.clone()).unwrap();
    let direct = evaluate(&mut env, &ckpt, 5, 0).unwrap();
    let flat = &report.trials.iter().find(|t| t.alpha == 0.0 && t.trial == 0).unwrap().trajectory;
    assert_eq!(flat, &direct.trajectory);
    let tilted = &report.trials.iter().find(|t| t.alpha == -3.0 && t.trial == 0).unwrap().trajectory;
    assert_ne!(flat, tilted);

    let p = report.profile(-3.0).unwrap();
    assert_eq!(p.times.len(), 30);
    assert_eq!(p.distances.len(), 2);
    assert!(p.std_x.iter().all(|s| *s >= 0.0));

    let again = slope_eval(&ckpt, &bundle, &[-3.0], 2, 5).unwrap();
    assert_eq!(format!("{:?}", again.profiles), format!("{:?}", report.profiles));
}
