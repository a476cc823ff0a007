use anyhow::Result;

use biped_core::analysis::{
    actuator_work, detect_gait_events, embed_trajectories, gait_metrics, poincare_sequence, section_scale,
};
use biped_core::env::Trajectory;
use biped_core::io::{find_trajectories, write_table, RunManifest};
use biped_core::Error;

use crate::{run_dir, AnalyzeArgs, Metric};

pub const ANALYSIS_DIR: &str = "analysis";

fn g(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, g)
}

fn strings<const N: usize>(v: [&str; N]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn run(a: AnalyzeArgs, argv: Vec<String>) -> Result<()> {
    let files: Vec<_> = find_trajectories(&a.run)?
        .into_iter()
        .filter(|p| !p.starts_with(a.run.join(ANALYSIS_DIR)))
        .collect();
    if files.is_empty() {
        return Err(Error::NoTrajectories(a.run.clone()).into());
    }
    let out = a.run.join(ANALYSIS_DIR);
    run_dir::prepare(&out, a.force)?;
    let mut manifest = RunManifest::begin("analyze", argv, None);
    let mut trajs = Vec::with_capacity(files.len());
    let mut names = Vec::with_capacity(files.len());
    for f in &files {
        manifest.add_input(f)?;
        trajs.push(Trajectory::read_csv(f)?);
        names.push(f.strip_prefix(&a.run).unwrap_or(f).display().to_string());
    }
    let refs: Vec<&Trajectory> = trajs.iter().collect();
    let events: Vec<_> = trajs.iter().map(|t| detect_gait_events(t, a.debounce)).collect();
    let has = |m: Metric| a.metrics.contains(&m);
    let mut write = |name: &str, header: Vec<String>, rows: Vec<Vec<String>>| -> Result<()> {
        write_table(&out.join(name), &header, &rows)?;
        manifest.add_output(format!("{ANALYSIS_DIR}/{name}"));
        Ok(())
    };

    if has(Metric::Gait) {
        let mut rows = Vec::new();
        let mut profile = Vec::new();
        for ((name, t), ev) in names.iter().zip(&trajs).zip(&events) {
            let m = gait_metrics(t, ev);
            rows.push(vec![
                name.clone(),
                ev.right.touchdowns.len().to_string(),
                ev.left.touchdowns.len().to_string(),
                opt(m.period),
                opt(m.period_std),
                opt(m.step_length),
                opt(m.duty_factor),
                g(m.double_support_time),
                g(m.flight_time),
            ]);
            for k in 0..m.foot_angle.mean.len() {
                profile.push(vec![
                    name.clone(),
                    g(m.foot_angle.phase[k]),
                    g(m.foot_angle.mean[k]),
                    g(m.foot_angle.std[k]),
                    m.foot_angle.strides.to_string(),
                ]);
            }
        }
        write(
            "gait.csv",
            strings([
                "file",
                "touchdowns_r",
                "touchdowns_l",
                "period",
                "period_std",
                "step_length",
                "duty_factor",
                "double_support_time",
                "flight_time",
            ]),
            rows,
        )?;
        write("foot_angle.csv", strings(["file", "phase", "mean", "std", "strides"]), profile)?;
    }

    if has(Metric::Energy) {
        let mut rows = Vec::new();
        for (name, t) in names.iter().zip(&trajs) {
            let r = actuator_work(t);
            for (act, w) in &r.per_actuator {
                rows.push(vec![name.clone(), act.clone(), g(*w)]);
            }
            rows.push(vec![name.clone(), "total".into(), g(r.total)]);
        }
        write("energy.csv", strings(["file", "actuator", "work"]), rows)?;
    }

    if has(Metric::Poincare) {
        let scale = section_scale(&refs);
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        for ((name, t), ev) in names.iter().zip(&trajs).zip(&events) {
            let seq = poincare_sequence(t, &ev.right.touchdowns, &scale);
            for (k, d) in seq.distances.iter().enumerate() {
                rows.push(vec![name.clone(), (k + 1).to_string(), g(seq.times[k + 1]), g(*d)]);
            }
            summary.push(vec![name.clone(), seq.states.len().to_string(), opt(seq.convergence())]);
        }
        write("poincare.csv", strings(["file", "k", "t", "distance"]), rows)?;
        write("poincare_summary.csv", strings(["file", "crossings", "convergence"]), summary)?;
    }

    if has(Metric::Embedding) {
        let emb = embed_trajectories(&refs, a.window, a.stride);
        let mut points = Vec::new();
        let mut windows = Vec::new();
        for (name, (pts, ws)) in names.iter().zip(emb.points.iter().zip(&emb.windows)) {
            for (k, (p, w)) in pts.iter().zip(ws).enumerate() {
                points.push(vec![name.clone(), k.to_string(), g(p[0]), g(p[1])]);
                let mut row = vec![name.clone(), k.to_string()];
                row.extend(w.iter().map(|v| g(*v)));
                windows.push(row);
            }
        }
        let width = emb.pca.mean.len();
        let mut header = strings(["file", "index"]);
        header.extend((0..width).map(|i| format!("w{i}")));
        write("embedding.csv", strings(["file", "index", "pc1", "pc2"]), points)?;
        write("embedding_windows.csv", header, windows)?;
        let mut pca = Vec::new();
        for (i, (c, r)) in emb.pca.components.iter().zip(&emb.pca.explained_ratio).enumerate() {
            let mut row = vec![format!("pc{}", i + 1), g(*r)];
            row.extend(c.iter().map(|v| g(*v)));
            pca.push(row);
        }
        let mut header = strings(["component", "explained_ratio"]);
        header.extend((0..width).map(|i| format!("w{i}")));
        write("embedding_pca.csv", header, pca)?;
    }

    manifest.finish("ok");
    manifest.write(&out)?;
    println!("{}", out.display());
    Ok(())
}
