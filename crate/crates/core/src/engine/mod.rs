//! Teacher-guided student training: Q-gated intervention, dual-source
//! collection, adaptive clipping with a fading KL pull toward the teacher.

mod collect;
mod loss;
mod schedule;
mod trainer;

pub use collect::{augment, collect_dual, AugmentedObservation, CollectStats, DualBuffer, DualTransition, AUG_DIM};
pub use loss::{s2cd_loss, AblationFlags, S2cdHyper, S2cdSample};
pub use schedule::{adaptive_epsilon, clip_interval, decay_tau, kl_penalty, switch_action, Choice, SwitchConfig};
pub use trainer::{load_student, save_student, train_s2cd, Gate, S2cdTrainer, StudentPolicy};
