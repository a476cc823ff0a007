//! Model-based learning: replay buffer, learned ensemble dynamics, a
//! receding-horizon planner over the discrete actions, and the training loop.

mod buffer;
mod mlp;
mod model;
mod planner;
mod train;

pub use buffer::{EpisodeSplit, ReplayBuffer, Transition};
pub use mlp::{AdamConfig, Mlp};
pub use model::{train_model, DynamicsModel, ModelConfig, Normalizer, TrainConfig, TrainReport};
pub use planner::{score_sequences, ModelPredictor, Plan, Planner, PlannerConfig, Predictor, RewardSource};
pub use train::{
    collect_random, evaluate, run_episode, train_agent, AgentConfig, Checkpoint, CurveRow,
    EpisodeRecord, EpsilonSchedule, Progress, TrainOutcome, CHECKPOINT_VERSION,
};
