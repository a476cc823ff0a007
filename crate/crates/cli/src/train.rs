use anyhow::{Context, Result};
use serde::Serialize;

use biped_core::agent::{evaluate, train_agent, AgentConfig, Checkpoint, CHECKPOINT_VERSION};
use biped_core::env::Env;
use biped_core::io::{write_learning_curve, RunConfig, RunManifest};
use biped_core::models::ModelKind;

use crate::{run_dir, Preset, TrainArgs};

pub const CURVE_FILE: &str = "learning_curve.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize)]
struct Summary {
    warmup_mean: f64,
    final10_mean: f64,
    warmup_validation_beats_baseline: f64,
    warmup_relative_rmse: f64,
    final_relative_rmse: f64,
    eval_return: f64,
    eval_distance: f64,
    eval_speed: f64,
    eval_work: f64,
    transitions: usize,
}

fn build_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(ModelKind::Passive, 1.5),
    };
    if let Some(m) = a.model {
        cfg.model = m.into();
        if cfg.bundle.as_ref().is_some_and(|b| b.kind != cfg.model) {
            cfg.bundle = None;
        }
    }
    if let Some(p) = a.preset {
        let sized = match p {
            Preset::Full => AgentConfig::default(),
            Preset::Desk => AgentConfig::desk(),
        };
        cfg.agent.model = sized.model;
        cfg.agent.planner = sized.planner;
        cfg.agent.train.steps = sized.train.steps;
        cfg.agent.warmup_train.steps = sized.warmup_train.steps;
    }
    if let Some(v) = a.vd {
        cfg.reward.target_velocity = v;
    }
    if let Some(n) = a.episodes {
        cfg.agent.episodes = n;
    }
    if let Some(s) = a.seed {
        cfg.agent.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(a: TrainArgs, argv: Vec<String>) -> Result<()> {
    let cfg = build_config(&a)?;
    let name = format!(
        "train-{}-vd{}-seed{}",
        cfg.model, cfg.reward.target_velocity, cfg.agent.seed
    );
    let dir = run_dir::resolve(a.out.out.clone(), &name);
    run_dir::prepare(&dir, a.out.force)?;

    let mut manifest = RunManifest::begin("train", argv, Some(cfg.model));
    manifest.config_hashes.insert("run".into(), cfg.hash()?);
    manifest.seeds.insert("root".into(), cfg.agent.seed);
    if let Some(p) = &a.config {
        manifest.add_input(p)?;
    }
    manifest.write(&dir)?;
    cfg.save(&dir.join("config.toml"))?;
    manifest.add_output("config.toml");

    let traj_dir = run_dir::subdir(&dir, "trajectories")?;
    let mut env = Env::new(cfg.model_bundle(), cfg.episode.clone(), cfg.reward.clone())?;
    let total = cfg.agent.episodes;
    let every = a.log_every.max(1);
    let mut written = Vec::new();
    let mut progress = |row: Option<&biped_core::agent::CurveRow>,
                        record: &biped_core::agent::EpisodeRecord,
                        _: &biped_core::agent::DynamicsModel|
     -> biped_core::Result<()> {
        let file = match row {
            None => {
                eprintln!("warmup done, last return {:.1}", record.cumulative_reward);
                Some("warmup_last.csv".to_string())
            }
            Some(r) => {
                eprintln!(
                    "episode {:>4}/{total} return {:8.1} speed {:6.3} rmse {:.3} eps {:.3}",
                    r.episode, r.cumulative_reward, r.mean_speed, r.validation_rmse, r.epsilon
                );
                (r.episode % every == 0 || r.episode == total).then(|| format!("episode_{:04}.csv", r.episode))
            }
        };
        if let Some(f) = file {
            record.trajectory.write_csv(&traj_dir.join(&f))?;
            written.push(format!("trajectories/{f}"));
        }
        Ok(())
    };
    let outcome = train_agent(&mut env, &cfg.agent, &mut progress).context("training failed")?;
    for w in written {
        manifest.add_output(w);
    }

    write_learning_curve(&dir.join(CURVE_FILE), &outcome.curve)?;
    manifest.add_output(CURVE_FILE);
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        model_kind: cfg.model,
        seed: cfg.agent.seed,
        episodes_trained: total,
        reward: cfg.reward.clone(),
        episode: cfg.episode.clone(),
        planner: cfg.agent.planner,
        model: outcome.model.clone(),
    };
    ckpt.save(&dir.join(CHECKPOINT_FILE))?;
    manifest.add_output(CHECKPOINT_FILE);

    let eval = evaluate(&mut env, &ckpt, cfg.agent.seed, 0)?;
    let eval_dir = run_dir::subdir(&dir, "eval")?;
    eval.trajectory.write_csv(&eval_dir.join("trial_000.csv"))?;
    manifest.add_output("eval/trial_000.csv");
    let summary = Summary {
        warmup_mean: outcome.warmup_mean(),
        final10_mean: outcome.final_mean(10),
        warmup_validation_beats_baseline: outcome.warmup_report.beats_baseline_fraction(),
        warmup_relative_rmse: outcome.warmup_report.relative_rmse(),
        final_relative_rmse: outcome.last_report.relative_rmse(),
        eval_return: eval.cumulative_reward,
        eval_distance: eval.distance,
        eval_speed: eval.mean_speed,
        eval_work: eval.total_work(),
        transitions: outcome.buffer.len(),
    };
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(dir.join(SUMMARY_FILE), text)?;
    manifest.add_output(SUMMARY_FILE);
    eprintln!(
        "warmup mean {:.1}, final-10 mean {:.1}, evaluation speed {:.3} m/s",
        summary.warmup_mean, summary.final10_mean, summary.eval_speed
    );
    manifest.finish("ok");
    manifest.write(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
