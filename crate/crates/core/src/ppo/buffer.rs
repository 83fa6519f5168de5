use serde::{Deserialize, Serialize};

use super::gae::{compute_gae, normalize};
use crate::error::Result;
use crate::mdp::EnvStep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Student,
    Teacher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub logprob_old: f64,
    pub reward: f64,
    /// V(s_t) at collection time.
    pub value: f64,
    pub done: bool,
    pub origin: Origin,
    pub teacher_probs: Option<[f64; 3]>,
    /// Behavior distribution at collection time.
    pub probs_old: [f64; 3],
}

/// Transitions of one collection phase plus their GAE outputs.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// V(s_{t+1}) as used by the estimator (0 after a terminal step).
    pub next_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.advantages.clear();
        self.returns.clear();
        self.next_values.clear();
    }

    /// Runs GAE over the stored trajectory; `last_value` bootstraps the
    /// state after the final transition.
    pub fn finish(&mut self, last_value: f64, gamma: f64, lambda: f64) -> Result<()> {
        let r: Vec<f64> = self.transitions.iter().map(|t| t.reward).collect();
        let v: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        let d: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let (adv, ret) = compute_gae(&r, &v, &d, last_value, gamma, lambda)?;
        self.advantages = adv;
        self.returns = ret;
        let n = self.transitions.len();
        self.next_values = (0..n)
            .map(|t| {
                if d[t] {
                    0.0
                } else if t + 1 < n {
                    v[t + 1]
                } else {
                    last_value
                }
            })
            .collect();
        Ok(())
    }

    pub fn normalized_advantages(&self) -> Vec<f64> {
        let mut a = self.advantages.clone();
        normalize(&mut a);
        a
    }
}

/// Undiscounted per-episode aggregates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episodic_return: f64,
    pub episodic_reward: f64,
    pub episodic_cost: f64,
    pub speed_sum: f64,
    pub steps: usize,
    pub collided: bool,
    pub success: bool,
}

impl EpisodeStats {
    pub fn mean_speed(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.speed_sum / self.steps as f64
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeTracker {
    current: EpisodeStats,
}

impl EpisodeTracker {
    /// Adds one step; returns the finished episode when `step` ends it.
    pub fn record(&mut self, step: &EnvStep) -> Option<EpisodeStats> {
        let c = &mut self.current;
        c.episodic_return += step.reward.total;
        c.episodic_reward += step.reward.efficiency;
        c.episodic_cost += step.reward.cost;
        c.speed_sum += step.speed;
        c.steps += 1;
        c.collided |= step.events.collision;
        c.success |= step.events.success;
        if step.done() {
            Some(std::mem::take(&mut self.current))
        } else {
            None
        }
    }
}
