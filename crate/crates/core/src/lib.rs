//! Teacher-student reinforcement learning for highway lane changes.
//!
//! A policy trained cheaply in a kinematic highway world advises a student
//! learning in a higher-fidelity world: the teacher intervenes when its
//! Q-value estimate beats the student's by a decaying tolerance, its
//! alternative actions are added to the student's batch, and the student
//! is optimized with an adaptive-clip PPO objective plus a KL pull toward
//! the teacher that fades as training proceeds.
//!
//! Module map:
//! - [`sim`]: two-fidelity highway simulator with IDM/MOBIL traffic.
//! - [`control`]: spline lane-change planner, IDM, PID.
//! - [`mdp`]: observation, action, reward and the episodic environment.
//! - [`nn`]: dense networks with exact gradients and AdamW.
//! - [`ppo`]: GAE, clipped surrogate and the baseline trainer.
//! - [`teacher`]: teacher training and the Return / Q-Value predictors.
//! - [`engine`]: intervention switch, dual-source collection and the
//!   student objective.
//! - [`theory`]: exact tabular checks of the mixed-policy bounds.
//! - [`eval`] and [`config`]: evaluation protocol and run configuration.

pub mod commands;
pub mod config;
pub mod control;
pub mod engine;
pub mod error;
pub mod eval;
pub mod mdp;
pub mod nn;
pub mod ppo;
pub mod sim;
pub mod teacher;
pub mod theory;

pub use error::{Error, Result};
