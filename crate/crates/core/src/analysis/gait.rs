//! Foot contact events and per-stride gait statistics.

use serde::{Deserialize, Serialize};

use crate::env::Trajectory;

pub const DEFAULT_DEBOUNCE: f64 = 0.04;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FootEvents {
    pub touchdowns: Vec<f64>,
    pub liftoffs: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaitEvents {
    pub right: FootEvents,
    pub left: FootEvents,
    /// `[start, end)` intervals with both feet down.
    pub double_support: Vec<(f64, f64)>,
    /// `[start, end)` intervals with neither foot down.
    pub flight: Vec<(f64, f64)>,
}

/// Contact state with runs shorter than `debounce` absorbed into the
/// preceding state. The foot is assumed airborne before the first sample.
pub fn debounce(times: &[f64], flags: &[bool], debounce: f64) -> Vec<bool> {
    let n = times.len().min(flags.len());
    let mut out = vec![false; n];
    let period = if n >= 2 { times[n - 1] - times[n - 2] } else { 0.0 };
    let mut state = false;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && flags[j] == flags[i] {
            j += 1;
        }
        let end = if j < n { times[j] } else { times[n - 1] + period };
        if flags[i] != state && end - times[i] >= debounce {
            state = flags[i];
        }
        out[i..j].fill(state);
        i = j;
    }
    out
}

/// Rising and falling edges of a debounced contact series.
pub fn foot_events(times: &[f64], state: &[bool]) -> FootEvents {
    let mut ev = FootEvents::default();
    let mut prev = false;
    for (&t, &s) in times.iter().zip(state) {
        match (prev, s) {
            (false, true) => ev.touchdowns.push(t),
            (true, false) => ev.liftoffs.push(t),
            _ => {}
        }
        prev = s;
    }
    ev
}

fn intervals(times: &[f64], mask: impl Iterator<Item = bool>) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut last = 0.0;
    for (&t, m) in times.iter().zip(mask) {
        match (start, m) {
            (None, true) => start = Some(t),
            (Some(s), false) => {
                out.push((s, t));
                start = None;
            }
            _ => {}
        }
        last = t;
    }
    if let Some(s) = start {
        out.push((s, last));
    }
    out
}

/// Events from explicit per-foot flag series.
pub fn events_from_flags(times: &[f64], right: &[bool], left: &[bool], window: f64) -> GaitEvents {
    let r = debounce(times, right, window);
    let l = debounce(times, left, window);
    GaitEvents {
        right: foot_events(times, &r),
        left: foot_events(times, &l),
        double_support: intervals(times, r.iter().zip(&l).map(|(a, b)| *a && *b)),
        flight: intervals(times, r.iter().zip(&l).map(|(a, b)| !*a && !*b)),
    }
}

/// A foot is down when its heel or toe is in contact.
pub fn detect_gait_events(traj: &Trajectory, window: f64) -> GaitEvents {
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let right: Vec<bool> = traj.rows.iter().map(|r| r.right_foot_down()).collect();
    let left: Vec<bool> = traj.rows.iter().map(|r| r.left_foot_down()).collect();
    events_from_flags(&times, &right, &left, window)
}

/// Mean and standard deviation at each normalized gait phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub phase: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub strides: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitMetrics {
    /// Mean right-foot touchdown interval, s.
    pub period: Option<f64>,
    pub period_std: Option<f64>,
    /// Mean pelvis displacement per right-foot stride, m.
    pub step_length: Option<f64>,
    /// Fraction of complete strides the right foot spends in stance.
    pub duty_factor: Option<f64>,
    pub double_support_time: f64,
    pub flight_time: f64,
    /// Right ankle + foot angle over the last strides.
    pub foot_angle: PhaseProfile,
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.partition_point(|&s| s < t) {
        0 => values[0],
        k if k >= times.len() => values[times.len() - 1],
        k => {
            let (t0, t1) = (times[k - 1], times[k]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            values[k - 1] + w * (values[k] - values[k - 1])
        }
    }
}

/// Resamples `values` over each of the last `strides` complete touchdown
/// intervals onto `samples` phase points in `[0, 1)`.
pub fn stride_profile(times: &[f64], values: &[f64], touchdowns: &[f64], strides: usize, samples: usize) -> PhaseProfile {
    let phase: Vec<f64> = (0..samples).map(|k| k as f64 / samples as f64).collect();
    if touchdowns.len() < 2 || times.is_empty() || samples == 0 {
        return PhaseProfile {
            phase,
            ..PhaseProfile::default()
        };
    }
    let first = touchdowns.len().saturating_sub(strides + 1);
    let windows: Vec<(f64, f64)> = touchdowns[first..].windows(2).map(|w| (w[0], w[1])).collect();
    let mut mean = Vec::with_capacity(samples);
    let mut std = Vec::with_capacity(samples);
    for &p in &phase {
        let at: Vec<f64> = windows
            .iter()
            .map(|(a, b)| interpolate(times, values, a + p * (b - a)))
            .collect();
        let (m, s) = mean_std(&at);
        mean.push(m);
        std.push(s);
    }
    PhaseProfile {
        phase,
        mean,
        std,
        strides: windows.len(),
    }
}

pub fn gait_metrics(traj: &Trajectory, events: &GaitEvents) -> GaitMetrics {
    let td = &events.right.touchdowns;
    let periods: Vec<f64> = td.windows(2).map(|w| w[1] - w[0]).collect();
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let x: Vec<f64> = traj.rows.iter().map(|r| r.q[0]).collect();
    let foot: Vec<f64> = traj.rows.iter().map(|r| r.q[4] + r.q[5]).collect();
    let steps: Vec<f64> = if times.is_empty() {
        Vec::new()
    } else {
        td.windows(2)
            .map(|w| interpolate(&times, &x, w[1]) - interpolate(&times, &x, w[0]))
            .collect()
    };
    let duty = if periods.is_empty() {
        None
    } else {
        let (start, end) = (td[0], td[td.len() - 1]);
        let stance: f64 = td
            .windows(2)
            .map(|w| {
                let off = events.right.liftoffs.iter().find(|&&l| l > w[0]).copied().unwrap_or(w[1]);
                off.min(w[1]) - w[0]
            })
            .sum();
        Some(stance / (end - start))
    };
    let total = |iv: &[(f64, f64)]| iv.iter().map(|(a, b)| b - a).sum();
    let opt = |v: &[f64]| (!v.is_empty()).then(|| mean_std(v));
    GaitMetrics {
        period: opt(&periods).map(|p| p.0),
        period_std: opt(&periods).map(|p| p.1),
        step_length: opt(&steps).map(|s| s.0),
        duty_factor: duty,
        double_support_time: total(&events.double_support),
        flight_time: total(&events.flight),
        foot_angle: stride_profile(&times, &foot, td, 5, 50),
    }
}
