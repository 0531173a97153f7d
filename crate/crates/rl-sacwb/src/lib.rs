//! Soft Actor-Critic with baseline-controller guidance (SACwB).
//!
//! Twin critics with polyak-averaged targets, a tanh-squashed Gaussian
//! actor, uniform replay, and three guidance mechanisms driven by a
//! decaying factor λ: baseline actions during rollout, a widened bootstrap
//! target taking the better of the actor's and the baseline's soft value,
//! and a behavior-clone loss on the actor mean. Networks are small fixed
//! architectures with exact reverse-mode gradients implemented in-repo.

pub mod augment;
pub mod buffer;
pub mod envs;
pub mod nn;
pub mod obs;
pub mod sac;
pub mod schedule;
pub mod train;

pub use augment::{augment_observation, AugmentConfig};
pub use buffer::{ReplayBuffer, Transition};
pub use obs::{Obs, ObsSpec};
pub use sac::{ActorCriticParams, SacConfig};
pub use schedule::{DecayMode, GuidanceSchedule};
pub use train::{
    evaluate_policy, train, write_metrics_csv, Checkpoint, EvalRow, GymEnv, MetricsRow,
    TrainConfig, TrainResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("empty batch")]
    EmptyBatch,

    #[error("buffer holds {have} transitions, need {need} to sample")]
    BufferTooSmall { have: usize, need: usize },

    #[error("observation layout mismatch: {0}")]
    ObsMismatch(String),

    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Sim(#[from] tabletop_sim::SimError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RlError>;
