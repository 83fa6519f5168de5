//! Proximal policy optimization: GAE, the clipped surrogate, and the
//! collect/update trainer shared with the teacher.

mod agent;
mod buffer;
mod gae;
mod loss;
mod metrics;
mod trainer;

pub use agent::{probs3, run_update, sample_action, ActOutput, ActorCritic, UpdateStats};
pub use buffer::{EpisodeStats, EpisodeTracker, Origin, RolloutBuffer, Transition};
pub use gae::{compute_gae, normalize};
pub use loss::{clipped_surrogate, ppo_loss, HyperParams, LossOutput, PpoSample, MAX_LOG_RATIO};
pub use metrics::{read_metrics_csv, write_metrics_csv, PhaseMetrics};
pub use trainer::{train_ppo, PpoTrainer};
