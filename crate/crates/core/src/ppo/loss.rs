use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{entropy_with_grad, log_softmax, DenseNet};

/// Log-ratio magnitude beyond which the ratio is clamped (and its gradient cut).
pub const MAX_LOG_RATIO: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub entropy_beta: f64,
    pub minibatch: usize,
    pub update_epochs: usize,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub lr_decay: bool,
    pub max_grad_norm: f64,
    pub steps_per_phase: usize,
    pub total_steps: usize,
    pub hidden: Vec<usize>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.96,
            gae_lambda: 0.98,
            clip_eps: 0.2,
            entropy_beta: 0.01,
            minibatch: 64,
            update_epochs: 8,
            value_coef: 0.5,
            learning_rate: 0.0005,
            lr_decay: true,
            max_grad_norm: 0.5,
            steps_per_phase: 5000,
            total_steps: 100_000,
            hidden: vec![64, 64],
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad(format!("clip_eps must be in (0, 1), got {}", self.clip_eps));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda must be in [0, 1], got {}", self.gae_lambda));
        }
        if self.minibatch == 0 || self.update_epochs == 0 || self.steps_per_phase == 0 {
            return bad("minibatch, update_epochs and steps_per_phase must be positive".into());
        }
        if self.total_steps < self.steps_per_phase {
            return bad(format!(
                "total_steps {} is smaller than one phase ({})",
                self.total_steps, self.steps_per_phase
            ));
        }
        if !(self.learning_rate > 0.0 && self.max_grad_norm > 0.0 && self.value_coef >= 0.0 && self.entropy_beta >= 0.0) {
            return bad("learning_rate and max_grad_norm must be positive; coefficients nonnegative".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden widths must be positive, got {:?}", self.hidden));
        }
        Ok(())
    }

    pub fn phases(&self) -> usize {
        self.total_steps / self.steps_per_phase
    }
}

/// One policy-gradient sample with frozen behavior log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub obs: Vec<f64>,
    pub action: usize,
    pub logprob_old: f64,
    pub advantage: f64,
    pub value_target: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Samples whose log-ratio was clamped at ±[`MAX_LOG_RATIO`].
    pub clamped: usize,
    /// Mean KL(teacher ‖ student) over constrained samples; 0 for plain PPO.
    pub kl_penalty: f64,
    pub policy_grad: Vec<f64>,
    pub value_grad: Vec<f64>,
}

/// Clipped surrogate `min(r·A, clip(r, lo, hi)·A)` as a function of the log
/// ratio. Returns `(surrogate, d surrogate / d logratio, clipped, clamped)`.
pub fn clipped_surrogate(log_ratio: f64, advantage: f64, lo: f64, hi: f64) -> (f64, f64, bool, bool) {
    let clamped = log_ratio.abs() > MAX_LOG_RATIO;
    let r = log_ratio.clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO).exp();
    let unclipped = r * advantage;
    let clipped = r.clamp(lo, hi) * advantage;
    let outside = r < lo || r > hi;
    if unclipped <= clipped {
        (unclipped, if clamped { 0.0 } else { unclipped }, false, clamped)
    } else {
        (clipped, if outside || clamped { 0.0 } else { unclipped }, outside, clamped)
    }
}

/// Mean PPO loss over `batch`:
/// `−min(r·A, clip(r, 1−ε, 1+ε)·A) + c_v·(V − target)² − β·H(π)`,
/// with gradients for both networks.
pub fn ppo_loss(batch: &[PpoSample], policy: &DenseNet, value: &DenseNet, hp: &HyperParams) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty PPO batch".into()));
    }
    let n = batch.len() as f64;
    let mut out = LossOutput {
        policy_grad: policy.zero_grad(),
        value_grad: value.zero_grad(),
        ..Default::default()
    };
    let (lo, hi) = (1.0 - hp.clip_eps, 1.0 + hp.clip_eps);
    let mut clipped_count = 0usize;
    for s in batch {
        let (_, pcache) = policy.forward(&s.obs)?;
        let logits = pcache.raw();
        let lp = log_softmax(logits);
        let log_ratio = lp[s.action] - s.logprob_old;
        let (surr, dsurr, was_clipped, was_clamped) = clipped_surrogate(log_ratio, s.advantage, lo, hi);
        clipped_count += usize::from(was_clipped);
        out.clamped += usize::from(was_clamped);
        let (h, dh) = entropy_with_grad(logits);
        let r = log_ratio.clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO).exp();
        out.approx_kl += ((r - 1.0) - log_ratio.clamp(-MAX_LOG_RATIO, MAX_LOG_RATIO)) / n;

        let mut dz = vec![0.0; logits.len()];
        for (i, d) in dz.iter_mut().enumerate() {
            let p = lp[i].exp();
            let dlogp = if i == s.action { 1.0 - p } else { -p };
            *d = (-dsurr * dlogp - hp.entropy_beta * dh[i]) / n;
        }
        policy.backward_raw(&pcache, &dz, &mut out.policy_grad)?;

        let (v, vcache) = value.forward(&s.obs)?;
        let err = v[0] - s.value_target;
        value.backward(&vcache, &[2.0 * hp.value_coef * err / n], &mut out.value_grad)?;

        out.surrogate += surr / n;
        out.value_loss += err * err / n;
        out.entropy += h / n;
    }
    out.clip_fraction = clipped_count as f64 / n;
    out.loss = -out.surrogate + hp.value_coef * out.value_loss - hp.entropy_beta * out.entropy;
    if !out.loss.is_finite() {
        return Err(Error::NonFinite(format!("PPO loss {}", out.loss)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturated_clip_has_zero_gradient() {
        let (s, d, clipped, _) = clipped_surrogate(1.5f64.ln(), 2.0, 0.8, 1.2);
        assert!((s - 2.4).abs() < 1e-12);
        assert_eq!(d, 0.0);
        assert!(clipped);
        // inside the interval the surrogate is the plain ratio term
        let (s, d, clipped, _) = clipped_surrogate(1.1f64.ln(), -1.0, 0.8, 1.2);
        assert!((s + 1.1).abs() < 1e-12 && (d + 1.1).abs() < 1e-12 && !clipped);
    }

    #[test]
    fn huge_log_ratio_is_clamped_and_counted() {
        let (s, d, _, clamped) = clipped_surrogate(100.0, -1.0, 0.8, 1.2);
        assert!(clamped && s.is_finite() && d == 0.0);
    }

    #[test]
    fn identity_policy_gives_mean_advantage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let policy = DenseNet::new(NetSpec::policy(4), &mut rng).unwrap();
        let value = DenseNet::new(NetSpec::value(4), &mut rng).unwrap();
        let mut advs: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        crate::ppo::normalize(&mut advs);
        let batch: Vec<PpoSample> = advs
            .iter()
            .map(|a| {
                let obs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let action = rng.gen_range(0..3);
                let lp = log_softmax(policy.forward(&obs).unwrap().1.raw())[action];
                PpoSample { obs, action, logprob_old: lp, advantage: *a, value_target: 0.0 }
            })
            .collect();
        let out = ppo_loss(&batch, &policy, &value, &HyperParams::default()).unwrap();
        assert!(out.surrogate.abs() < 1e-12);
        assert!(out.approx_kl.abs() < 1e-15);
        assert_eq!(out.clip_fraction, 0.0);
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(HyperParams::default().validate().is_ok());
        assert!(HyperParams { gamma: 1.0, ..Default::default() }.validate().is_err());
        assert!(HyperParams { clip_eps: 0.0, ..Default::default() }.validate().is_err());
        assert!(HyperParams { total_steps: 10, ..Default::default() }.validate().is_err());
        assert!(serde_json::from_str::<HyperParams>(r#"{"gama": 0.9}"#).is_err());
    }
}
