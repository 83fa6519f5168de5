//! Teacher training: PPO in the Simple world plus supervised Return and
//! Q-Value predictors fitted on the visited state-action pairs.

mod bundle;
mod heads;

pub use bundle::{
    load_bundle, save_bundle, teacher_advise, train_teacher, Advice, TeacherBundle, TeacherManifest,
    TeacherQuality, TeacherTraining,
};
pub use heads::{fit_value_heads, FitOptions, FitReport, SupervisedRow, ValueHeads};
