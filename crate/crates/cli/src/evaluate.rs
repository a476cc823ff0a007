use anyhow::{Context, Result};

use biped_core::agent::{evaluate, Checkpoint};
use biped_core::analysis::{slope_eval, summarize, EnergyReport};
use biped_core::env::Env;
use biped_core::io::{write_table, RunManifest};
use biped_core::models::build_model;

use crate::{run_dir, RolloutArgs, SlopeArgs};

fn load(path: &std::path::Path, manifest: &mut RunManifest) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    manifest.add_input(path)?;
    manifest.model = Some(ckpt.model_kind);
    Ok(ckpt)
}

fn g(v: f64) -> String {
    v.to_string()
}

pub fn rollout(a: RolloutArgs, argv: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::begin("rollout", argv, None);
    let ckpt = load(&a.checkpoint, &mut manifest)?;
    let dir = run_dir::resolve(a.out.out, &format!("rollout-{}-seed{}", ckpt.model_kind, a.seed));
    run_dir::prepare(&dir, a.out.force)?;
    manifest.seeds.insert("root".into(), a.seed);
    manifest.write(&dir)?;

    let traj_dir = run_dir::subdir(&dir, "trajectories")?;
    let mut env = Env::new(build_model(ckpt.model_kind), ckpt.episode.clone(), ckpt.reward.clone())?;
    let mut rows = Vec::new();
    for trial in 0..a.episodes {
        let rec = evaluate(&mut env, &ckpt, a.seed, trial)?;
        let name = format!("trial_{trial:03}.csv");
        rec.trajectory.write_csv(&traj_dir.join(&name))?;
        manifest.add_output(format!("trajectories/{name}"));
        eprintln!(
            "trial {trial}: return {:.1}, distance {:.2} m, work {:.1} J",
            rec.cumulative_reward,
            rec.distance,
            rec.total_work()
        );
        rows.push(vec![
            trial.to_string(),
            g(rec.cumulative_reward),
            g(rec.distance),
            g(rec.mean_speed),
            g(rec.total_work()),
        ]);
    }
    let header = ["trial", "cumulative_reward", "distance", "mean_speed", "work"].map(String::from);
    write_table(&dir.join("rollout.csv"), &header, &rows)?;
    manifest.add_output("rollout.csv");
    manifest.finish("ok");
    manifest.write(&dir)?;
    println!("{}", dir.display());
    Ok(())
}

fn alpha_tag(alpha: f64) -> String {
    format!("alpha{alpha:+}")
}

pub fn slope(a: SlopeArgs, argv: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::begin("eval-slope", argv, None);
    let ckpt = load(&a.checkpoint, &mut manifest)?;
    let dir = run_dir::resolve(a.out.out, &format!("slope-{}-seed{}", ckpt.model_kind, a.seed));
    run_dir::prepare(&dir, a.out.force)?;
    manifest.seeds.insert("root".into(), a.seed);
    manifest.write(&dir)?;

    let bundle = build_model(ckpt.model_kind);
    let report = slope_eval(&ckpt, &bundle, &a.alphas, a.trials, a.seed)?;
    let slope_dir = run_dir::subdir(&dir, "slope")?;
    let base_dir = run_dir::subdir(&dir, "baseline")?;
    for t in &report.trials {
        let (sub, folder) = if t.alpha == 0.0 && !a.alphas.contains(&0.0) {
            (&base_dir, "baseline")
        } else {
            (&slope_dir, "slope")
        };
        let name = format!("{}_trial{:02}.csv", alpha_tag(t.alpha), t.trial);
        t.trajectory.write_csv(&sub.join(&name))?;
        manifest.add_output(format!("{folder}/{name}"));
    }

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for p in &report.profiles {
        for k in 0..p.times.len() {
            rows.push(vec![g(p.alpha), g(p.times[k]), g(p.mean_x[k]), g(p.std_x[k]), p.distances.len().to_string()]);
        }
        let works: Vec<EnergyReport> = report
            .trials
            .iter()
            .filter(|t| t.alpha == p.alpha)
            .map(|t| biped_core::analysis::actuator_work(&t.trajectory))
            .collect();
        let (dm, ds) = biped_core::analysis::mean_std(&p.distances);
        let w = summarize(&works);
        summary.push(vec![g(p.alpha), g(dm), g(ds), g(w.mean), g(w.std), p.distances.len().to_string()]);
        eprintln!("alpha {:+}: distance {dm:.2} ± {ds:.2} m", p.alpha);
    }
    let header = ["alpha", "t", "mean_x", "std_x", "trials"].map(String::from);
    write_table(&dir.join("slope_profiles.csv"), &header, &rows)?;
    let header = ["alpha", "mean_distance", "std_distance", "mean_work", "std_work", "trials"].map(String::from);
    write_table(&dir.join("slope_summary.csv"), &header, &summary)?;
    manifest.add_output("slope_profiles.csv");
    manifest.add_output("slope_summary.csv");
    manifest.finish("ok");
    manifest.write(&dir)?;
    println!("{}", dir.display());
    Ok(())
}
