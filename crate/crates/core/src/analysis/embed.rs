//! Delay embedding of joint-angle series and a two-component PCA.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::env::Trajectory;

pub const DEFAULT_WINDOW: usize = 10;

/// Hip, knee and ankle of both legs.
pub const EMBED_COORDS: [usize; 6] = [2, 3, 4, 6, 7, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// One row per component, unit length.
    pub components: Vec<Vec<f64>>,
    pub explained_ratio: Vec<f64>,
}

impl Pca {
    /// Principal axes of `rows`. Each axis is signed so its largest loading
    /// is positive, which makes the result deterministic.
    pub fn fit(rows: &[Vec<f64>], k: usize) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Self {
                mean: Vec::new(),
                components: Vec::new(),
                explained_ratio: Vec::new(),
            };
        }
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for r in rows {
            let c = DVector::from_iterator(dim, r.iter().zip(&mean).map(|(v, m)| v - m));
            cov.ger(1.0 / n, &c, &c, 1.0);
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut components = Vec::new();
        let mut explained_ratio = Vec::new();
        for &i in order.iter().take(k) {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            explained_ratio.push(if total > 0.0 { eig.eigenvalues[i].max(0.0) / total } else { 0.0 });
        }
        Self {
            mean,
            components,
            explained_ratio,
        }
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect()
    }
}

/// Flattened windows of `window` consecutive samples, started every `stride`.
pub fn delay_windows(series: &[Vec<f64>], window: usize, stride: usize) -> Vec<Vec<f64>> {
    if window == 0 || stride == 0 || series.len() < window {
        return Vec::new();
    }
    (0..=series.len() - window)
        .step_by(stride)
        .map(|s| series[s..s + window].iter().flatten().copied().collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub pca: Pca,
    /// Raw delay windows per episode.
    pub windows: Vec<Vec<Vec<f64>>>,
    /// Two-dimensional projection per episode.
    pub points: Vec<Vec<[f64; 2]>>,
}

/// Pools the windows of every episode, fits PCA and projects each episode.
pub fn embed_series(episodes: &[Vec<Vec<f64>>], window: usize, stride: usize) -> Embedding {
    let windows: Vec<Vec<Vec<f64>>> = episodes.iter().map(|e| delay_windows(e, window, stride)).collect();
    let pooled: Vec<Vec<f64>> = windows.iter().flatten().cloned().collect();
    let pca = Pca::fit(&pooled, 2);
    let points = windows
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|w| {
                    let p = pca.project(w);
                    [p.first().copied().unwrap_or(0.0), p.get(1).copied().unwrap_or(0.0)]
                })
                .collect()
        })
        .collect();
    Embedding { pca, windows, points }
}

pub fn joint_angle_series(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.rows
        .iter()
        .map(|r| EMBED_COORDS.iter().map(|&c| r.q[c]).collect())
        .collect()
}

pub fn embed_trajectories(trajs: &[&Trajectory], window: usize, stride: usize) -> Embedding {
    let series: Vec<Vec<Vec<f64>>> = trajs.iter().map(|t| joint_angle_series(t)).collect();
    embed_series(&series, window, stride)
}
