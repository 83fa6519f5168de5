use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::kl_divergence;
use crate::ppo::Origin;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitchConfig {
    /// Intervention tolerance ε on the Q gap.
    pub tolerance_eps: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            tolerance_eps: 0.5,
            q1: 3.0,
            q2: 10.0,
        }
    }
}

impl SwitchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_eps > 0.0 && self.q1 > 0.0 && self.q2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "switch needs tolerance_eps > 0 and q1 > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// τ = 1 / (1 + exp(n_e/q1 − q2)).
pub fn decay_tau(episodes: u64, cfg: &SwitchConfig) -> f64 {
    1.0 / (1.0 + (episodes as f64 / cfg.q1 - cfg.q2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Teacher,
    Student,
}

/// Teacher acts iff `q_teacher − q_student > (1 − τ)·ε`.
pub fn switch_action(q_teacher: f64, q_student: f64, tau: f64, cfg: &SwitchConfig) -> (Choice, bool) {
    if q_teacher - q_student > (1.0 - tau) * cfg.tolerance_eps {
        (Choice::Teacher, true)
    } else {
        (Choice::Student, false)
    }
}

/// ε′ = ψ·((p_s − p_t) + 1)/2, both probabilities from the student.
pub fn adaptive_epsilon(p_student: f64, p_teacher: f64, psi: f64) -> f64 {
    psi * ((p_student - p_teacher) + 1.0) / 2.0
}

/// Ratio clip interval for a sample of the given origin, where `shift` is τ·ε′.
pub fn clip_interval(origin: Origin, eps: f64, shift: f64) -> (f64, f64) {
    match origin {
        Origin::Student => (1.0 - (eps + shift), 1.0 + (eps - shift)),
        Origin::Teacher => (1.0 - (eps - shift), 1.0 + (eps + shift)),
    }
}

/// KL(teacher ‖ student), student side floored.
pub fn kl_penalty(teacher: &[f64], student: &[f64]) -> f64 {
    kl_divergence(teacher, student)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_values() {
        let c = SwitchConfig::default();
        assert_eq!(decay_tau(30, &c), 0.5);
        assert!((decay_tau(0, &c) - 0.999_954_602_131_297_6).abs() < 1e-12);
        assert!(decay_tau(300, &c) < 1e-30);
    }

    #[test]
    fn switch_threshold_edges() {
        let c = SwitchConfig::default();
        assert!(switch_action(0.1, 0.0, 1.0, &c).1);
        assert!(!switch_action(0.0, 0.0, 1.0, &c).1);
        assert!(!switch_action(0.3, 0.0, 0.0, &c).1);
        assert!(switch_action(0.250_000_1, 0.0, 0.5, &c).1);
        assert!(!switch_action(0.249_999_9, 0.0, 0.5, &c).1);
        assert_eq!(switch_action(1.0, 0.0, 0.5, &c).0, Choice::Teacher);
    }

    #[test]
    fn epsilon_and_intervals() {
        assert_eq!(adaptive_epsilon(0.4, 0.4, 0.2), 0.1);
        assert_eq!(adaptive_epsilon(1.0, 0.0, 0.2), 0.2);
        assert!((adaptive_epsilon(0.2, 0.6, 0.2) - 0.06).abs() < 1e-15);
        let (lo, hi) = clip_interval(Origin::Teacher, 0.2, 0.1);
        assert!((lo - 0.9).abs() < 1e-15 && (hi - 1.3).abs() < 1e-15);
        let (lo, hi) = clip_interval(Origin::Student, 0.2, 0.1);
        assert!((lo - 0.7).abs() < 1e-15 && (hi - 1.1).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_penalty(&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3]), 0.0);
        assert!((kl_penalty(&[1.0, 0.0, 0.0], &[1.0 / 3.0; 3]) - 3f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn epsilon_stays_in_range(ps in 0.0..=1.0f64, pt in 0.0..=1.0f64, psi in 0.0..=0.2f64) {
            let e = adaptive_epsilon(ps, pt, psi);
            prop_assert!((0.0..=psi).contains(&e));
        }

        #[test]
        fn threshold_is_monotone_in_episodes(n in 0u64..400, gap in -1.0..1.0f64) {
            let c = SwitchConfig::default();
            let later = switch_action(gap, 0.0, decay_tau(n + 1, &c), &c).1;
            let now = switch_action(gap, 0.0, decay_tau(n, &c), &c).1;
            prop_assert!(!later || now);
        }
    }
}
