use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Deserialize;

use biped_core::analysis::{detect_gait_events, stride_profile, FootEvents, DEFAULT_DEBOUNCE};
use biped_core::env::Trajectory;
use biped_core::io::svg::{interval_diagram, Chart, Series};
use biped_core::io::{find_trajectories, read_learning_curve, read_rows};

use crate::analyze::ANALYSIS_DIR;
use crate::train::CURVE_FILE;
use crate::{run_dir, Figure, PlotArgs};

#[derive(Deserialize)]
struct ProfileRow {
    alpha: f64,
    t: f64,
    mean_x: f64,
    std_x: f64,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    file: String,
    pc1: f64,
    pc2: f64,
}

fn moving_average(v: &[f64], k: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(k);
            v[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

fn curve(run: &Path) -> Result<Option<String>> {
    let path = run.join(CURVE_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let rows = read_learning_curve(&path)?;
    let x: Vec<f64> = rows.iter().map(|r| r.episode as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.cumulative_reward).collect();
    let mut c = Chart::new("Learning curve", "episode", "cumulative reward");
    c.push(Series::line("episode", x.clone(), y.clone()));
    c.push(Series::line("10-episode mean", x, moving_average(&y, 10)));
    Ok(Some(c.render()))
}

fn slope(run: &Path) -> Result<Option<String>> {
    let path = run.join("slope_profiles.csv");
    if !path.exists() {
        return Ok(None);
    }
    let rows: Vec<ProfileRow> = read_rows(&path)?;
    let mut by_alpha: Vec<(f64, Vec<&ProfileRow>)> = Vec::new();
    for r in &rows {
        match by_alpha.iter_mut().find(|(a, _)| *a == r.alpha) {
            Some((_, v)) => v.push(r),
            None => by_alpha.push((r.alpha, vec![r])),
        }
    }
    let mut c = Chart::new("Horizontal position on slopes", "time [s]", "x [m]");
    for (alpha, v) in by_alpha {
        let s = Series::line(
            format!("{alpha:+} deg"),
            v.iter().map(|r| r.t).collect(),
            v.iter().map(|r| r.mean_x).collect(),
        )
        .with_band(v.iter().map(|r| r.std_x).collect());
        c.push(s);
    }
    Ok(Some(c.render()))
}

/// Evaluation trajectory if present, otherwise the last logged one.
fn representative(run: &Path) -> Result<Option<(PathBuf, Trajectory)>> {
    let eval = run.join("eval").join("trial_000.csv");
    let path = if eval.exists() {
        Some(eval)
    } else {
        find_trajectories(run)?.pop()
    };
    path.map(|p| Trajectory::read_csv(&p).map(|t| (p, t)))
        .transpose()
        .map_err(Into::into)
}

fn joints(traj: &Trajectory) -> String {
    let ev = detect_gait_events(traj, DEFAULT_DEBOUNCE);
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let mut c = Chart::new("Right-leg joint angles (mean ± std over 5 strides)", "gait phase", "angle [rad]");
    let series: [(&str, Box<dyn Fn(&biped_core::env::TrajectoryRow) -> f64>); 4] = [
        ("hip", Box::new(|r| r.q[2])),
        ("knee", Box::new(|r| r.q[3])),
        ("ankle", Box::new(|r| r.q[4])),
        ("foot (ankle + toe)", Box::new(|r| r.q[4] + r.q[5])),
    ];
    for (name, f) in series {
        let values: Vec<f64> = traj.rows.iter().map(|r| f(r)).collect();
        let p = stride_profile(&times, &values, &ev.right.touchdowns, 5, 50);
        if p.strides > 0 {
            c.push(Series::line(name, p.phase, p.mean).with_band(p.std));
        }
    }
    c.render()
}

fn stance(ev: &FootEvents, end: f64) -> Vec<(f64, f64)> {
    ev.touchdowns
        .iter()
        .map(|&t| {
            let off = ev.liftoffs.iter().copied().find(|&l| l > t).unwrap_or(end);
            (t, off)
        })
        .collect()
}

fn footprint(traj: &Trajectory) -> String {
    let ev = detect_gait_events(traj, DEFAULT_DEBOUNCE);
    let end = traj.duration();
    let start = traj.rows.first().map_or(0.0, |r| r.t);
    let rows = vec![
        ("right".to_string(), stance(&ev.right, end)),
        ("left".to_string(), stance(&ev.left, end)),
    ];
    interval_diagram("Foot contact", "time [s]", &rows, (start, end))
}

fn embedding(run: &Path) -> Result<Option<String>> {
    let path = run.join(ANALYSIS_DIR).join("embedding.csv");
    if !path.exists() {
        return Ok(None);
    }
    let rows: Vec<EmbeddingRow> = read_rows(&path)?;
    let mut by_file: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &rows {
        let e = by_file.entry(&r.file).or_default();
        e.0.push(r.pc1);
        e.1.push(r.pc2);
    }
    let files: Vec<_> = by_file.into_iter().collect();
    let n = files.len();
    let keep = 8.min(n);
    let mut c = Chart::new("Joint-angle embedding", "PC 1", "PC 2");
    for k in 0..keep {
        let i = if keep > 1 { k * (n - 1) / (keep - 1) } else { 0 };
        let (name, (x, y)) = &files[i];
        c.push(Series::points(*name, x.clone(), y.clone()));
    }
    Ok(Some(c.render()))
}

pub fn run(a: PlotArgs) -> Result<()> {
    if !a.run.is_dir() {
        bail!("{} is not a directory", a.run.display());
    }
    let out = run_dir::subdir(&a.run, "plots")?;
    let traj = if a.figures.iter().any(|f| matches!(f, Figure::Joints | Figure::Footprint)) {
        representative(&a.run)?
    } else {
        None
    };
    let mut made = 0;
    for fig in &a.figures {
        let (name, svg) = match fig {
            Figure::Curve => ("learning_curve.svg", curve(&a.run)?),
            Figure::Slope => ("slope_x.svg", slope(&a.run)?),
            Figure::Joints => ("joint_angles.svg", traj.as_ref().map(|(_, t)| joints(t))),
            Figure::Footprint => ("footprint.svg", traj.as_ref().map(|(_, t)| footprint(t))),
            Figure::Embedding => ("embedding.svg", embedding(&a.run)?),
        };
        match svg {
            Some(text) => {
                let path = out.join(name);
                std::fs::write(&path, text)?;
                println!("{}", path.display());
                made += 1;
            }
            None => eprintln!("skipping {name}: input not found in {}", a.run.display()),
        }
    }
    if made == 0 {
        bail!("no figures could be made from {}", a.run.display());
    }
    Ok(())
}
