use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schedule::{clip_interval, SwitchConfig};
use crate::error::{Error, Result};
use crate::nn::{entropy_with_grad, kl_with_grad, log_softmax, DenseNet};
use crate::ppo::{clipped_surrogate, HyperParams, LossOutput, Origin, MAX_LOG_RATIO};

/// Components that can be switched off for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationFlags {
    pub dual_source: bool,
    pub adaptive_clip: bool,
    pub kl_constraint: bool,
    pub intervention_decay: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self::all_on()
    }
}

impl AblationFlags {
    pub fn all_on() -> Self {
        Self {
            dual_source: true,
            adaptive_clip: true,
            kl_constraint: true,
            intervention_decay: true,
        }
    }

    pub fn all_off() -> Self {
        Self {
            dual_source: false,
            adaptive_clip: false,
            kl_constraint: false,
            intervention_decay: false,
        }
    }

    /// Every combination of the four flags.
    pub fn combinations() -> Vec<Self> {
        (0..16u8)
            .map(|m| Self {
                dual_source: m & 1 != 0,
                adaptive_clip: m & 2 != 0,
                kl_constraint: m & 4 != 0,
                intervention_decay: m & 8 != 0,
            })
            .collect()
    }

    /// Short label such as `no-kl+no-decay`, or `full`.
    pub fn label(&self) -> String {
        let mut off = Vec::new();
        if !self.dual_source {
            off.push("no-dual-source");
        }
        if !self.adaptive_clip {
            off.push("no-adaptive-clip");
        }
        if !self.kl_constraint {
            off.push("no-kl");
        }
        if !self.intervention_decay {
            off.push("no-decay");
        }
        if off.is_empty() {
            "full".into()
        } else {
            off.join("+")
        }
    }
}

impl FromStr for AblationFlags {
    type Err = Error;

    /// Comma-separated list of `no-dual-source`, `no-adaptive-clip`, `no-kl`,
    /// `no-decay`; `full` or an empty string keeps everything on.
    fn from_str(s: &str) -> Result<Self> {
        let mut f = Self::all_on();
        for tok in s.split([',', '+']).map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "full" => {}
                "no-dual-source" => f.dual_source = false,
                "no-adaptive-clip" => f.adaptive_clip = false,
                "no-kl" => f.kl_constraint = false,
                "no-decay" => f.intervention_decay = false,
                other => return Err(Error::InvalidInput(format!("unknown ablation flag `{other}`"))),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct S2cdHyper {
    pub ppo: HyperParams,
    /// Adaptive clip scale ψ.
    pub psi: f64,
    /// Fixed Lagrange multiplier ξ on the KL term.
    pub xi: f64,
    pub switch: SwitchConfig,
    pub flags: AblationFlags,
    /// Sample the student's action during training (argmax otherwise).
    pub student_sampling: bool,
}

impl Default for S2cdHyper {
    fn default() -> Self {
        Self {
            ppo: HyperParams {
                total_steps: 60_000,
                ..Default::default()
            },
            psi: 0.2,
            xi: 0.01,
            switch: SwitchConfig::default(),
            flags: AblationFlags::default(),
            student_sampling: true,
        }
    }
}

impl S2cdHyper {
    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.switch.validate()?;
        if !(0.0..=self.ppo.clip_eps).contains(&self.psi) {
            return Err(Error::InvalidConfig(format!(
                "psi must lie in [0, clip_eps = {}], got {}",
                self.ppo.clip_eps, self.psi
            )));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidConfig(format!("xi must be nonnegative, got {}", self.xi)));
        }
        Ok(())
    }
}

/// One entry of the student's batch.
#[derive(Debug, Clone, PartialEq)]
pub struct S2cdSample {
    pub obs: Vec<f64>,
    pub action: usize,
    pub logprob_old: f64,
    pub advantage: f64,
    /// Value regression target; only executed entries carry one.
    pub value_target: Option<f64>,
    pub origin: Origin,
    /// Adaptive clip factor ε′ stored at collection.
    pub eps_prime: f64,
    /// Teacher distribution for the KL term; only executed entries carry one.
    pub teacher_probs: Option<[f64; 3]>,
}

/// Mean student loss over `batch` with gradients:
/// `−min(r·A, clip(r, lo, hi)·A) − β·H` over every entry, with the interval
/// set by origin and τ·ε′, plus `c_v·(V − target)² + τ·ξ·KL(π_t ‖ π_s)` over
/// executed entries.
pub fn s2cd_loss(
    batch: &[S2cdSample],
    policy: &DenseNet,
    value: &DenseNet,
    hp: &S2cdHyper,
    tau: f64,
) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty S2CD batch".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must be in [0, 1], got {tau}")));
    }
    let ppo = &hp.ppo;
    let n = batch.len() as f64;
    let n_value = batch.iter().filter(|s| s.value_target.is_some()).count().max(1) as f64;
    let n_kl = batch.iter().filter(|s| s.teacher_probs.is_some()).count().max(1) as f64;
    let kl_weight = if hp.flags.kl_constraint { tau * hp.xi } else { 0.0 };
    let mut out = LossOutput {
        policy_grad: policy.zero_grad(),
        value_grad: value.zero_grad(),
        ..Default::default()
    };
    let mut clipped_count = 0usize;
    for s in batch {
        let (_, pcache) = policy.forward(&s.obs)?;
        let logits = pcache.raw();
        let lp = log_softmax(logits);
        let eps_prime = if hp.flags.adaptive_clip { s.eps_prime } else { 0.0 };
        let (lo, hi) = clip_interval(s.origin, ppo.clip_eps, tau * eps_prime);
        let log_ratio = lp[s.action] - s.logprob_old;
        let (surr, dsurr, was_clipped, was_clamped) = clipped_surrogate(log_ratio, s.advantage, lo, hi);
        clipped_count += usize::from(was_clipped);
        out.clamped += usize::from(was_clamped);
        let (h, dh) = entropy_with_grad(logits);
        let lr = log_ratio.clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO);
        out.approx_kl += (lr.exp() - 1.0 - lr) / n;

        let mut dz = vec![0.0; logits.len()];
        for (i, d) in dz.iter_mut().enumerate() {
            let p = lp[i].exp();
            let dlogp = if i == s.action { 1.0 - p } else { -p };
            *d = (-dsurr * dlogp - ppo.entropy_beta * dh[i]) / n;
        }
        if let Some(tp) = &s.teacher_probs {
            let (kl, dkl) = kl_with_grad(tp, logits);
            out.kl_penalty += kl / n_kl;
            if kl_weight > 0.0 {
                for (d, g) in dz.iter_mut().zip(&dkl) {
                    *d += kl_weight * g / n_kl;
                }
            }
        }
        policy.backward_raw(&pcache, &dz, &mut out.policy_grad)?;

        if let Some(target) = s.value_target {
            let (v, vcache) = value.forward(&s.obs)?;
            let err = v[0] - target;
            value.backward(&vcache, &[2.0 * ppo.value_coef * err / n_value], &mut out.value_grad)?;
            out.value_loss += err * err / n_value;
        }
        out.surrogate += surr / n;
        out.entropy += h / n;
    }
    out.clip_fraction = clipped_count as f64 / n;
    out.loss = -out.surrogate + ppo.value_coef * out.value_loss - ppo.entropy_beta * out.entropy
        + kl_weight * out.kl_penalty;
    if !out.loss.is_finite() {
        return Err(Error::NonFinite(format!("S2CD loss {}", out.loss)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nets() -> (DenseNet, DenseNet) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (
            DenseNet::new(NetSpec::policy(4).with_hidden(vec![8]), &mut rng).unwrap(),
            DenseNet::new(NetSpec::value(4).with_hidden(vec![8]), &mut rng).unwrap(),
        )
    }

    #[test]
    fn flag_parsing() {
        let f: AblationFlags = "no-kl,no-decay".parse().unwrap();
        assert!(f.dual_source && f.adaptive_clip && !f.kl_constraint && !f.intervention_decay);
        assert_eq!(f.label(), "no-kl+no-decay");
        assert_eq!("".parse::<AblationFlags>().unwrap(), AblationFlags::all_on());
        assert!("no-teacher".parse::<AblationFlags>().is_err());
        assert_eq!(AblationFlags::combinations().len(), 16);
    }

    #[test]
    fn psi_above_clip_is_rejected() {
        let hp = S2cdHyper { psi: 0.3, ..Default::default() };
        assert!(hp.validate().is_err());
        assert!(S2cdHyper::default().validate().is_ok());
    }

    #[test]
    fn teacher_copy_allows_larger_positive_updates() {
        let (policy, value) = nets();
        let obs = vec![0.1, 0.2, 0.3, 0.4];
        let lp = log_softmax(policy.forward(&obs).unwrap().1.raw());
        // behavior probability chosen so that the current ratio is 1.15
        let sample = |origin| S2cdSample {
            obs: obs.clone(),
            action: 1,
            logprob_old: lp[1] - 1.15f64.ln(),
            advantage: 1.0,
            value_target: None,
            origin,
            eps_prime: 0.1,
            teacher_probs: None,
        };
        let mut hp = S2cdHyper::default();
        hp.ppo.entropy_beta = 0.0;
        let norm = |o: &LossOutput| o.policy_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let st = s2cd_loss(&[sample(Origin::Student)], &policy, &value, &hp, 1.0).unwrap();
        let te = s2cd_loss(&[sample(Origin::Teacher)], &policy, &value, &hp, 1.0).unwrap();
        assert_eq!(norm(&st), 0.0);
        assert!(norm(&te) > 0.0);
        assert_eq!(st.clip_fraction, 1.0);
    }

    #[test]
    fn kl_weight_fades_with_tau() {
        let (policy, value) = nets();
        let s = S2cdSample {
            obs: vec![0.5; 4],
            action: 0,
            logprob_old: -1.0,
            advantage: 0.0,
            value_target: Some(0.0),
            origin: Origin::Student,
            eps_prime: 0.0,
            teacher_probs: Some([0.9, 0.05, 0.05]),
        };
        let hp = S2cdHyper::default();
        let a = s2cd_loss(&[s.clone()], &policy, &value, &hp, 1.0).unwrap();
        let b = s2cd_loss(&[s], &policy, &value, &hp, 0.0).unwrap();
        assert!(a.kl_penalty > 0.0);
        assert!((a.loss - b.loss - hp.xi * a.kl_penalty).abs() < 1e-12);
    }
}
