//! Gait events, limit-cycle convergence, trajectory embedding, actuator
//! work, and slope evaluation. Everything here is a pure function of logged
//! trajectories except [`slope_eval`], which runs frozen-policy episodes.

mod embed;
mod energy;
mod gait;
mod poincare;
mod slope;

pub use embed::{
    delay_windows, embed_series, embed_trajectories, joint_angle_series, Embedding, Pca, DEFAULT_WINDOW,
    EMBED_COORDS,
};
pub use energy::{absolute_work, actuator_work, summarize, work_over, EnergyReport, WorkSummary};
pub use gait::{
    debounce, detect_gait_events, events_from_flags, foot_events, gait_metrics, mean_std, stride_profile,
    FootEvents, GaitEvents, GaitMetrics, PhaseProfile, DEFAULT_DEBOUNCE,
};
pub use poincare::{from_states, poincare_sequence, section_scale, section_state, PoincareSequence, SECTION_DIM};
pub use slope::{slope_env, slope_eval, SlopeProfile, SlopeReport, SlopeTrial};
