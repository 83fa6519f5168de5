use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::loss::{HyperParams, LossOutput};
use crate::error::{Error, Result};
use crate::nn::{argmax, clip_grad_norm, kl_divergence, log_softmax, AdamW, DenseNet, NetSpec};

/// Actor and critic with their optimizers.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub policy: DenseNet,
    pub value: DenseNet,
    pub policy_opt: AdamW,
    pub value_opt: AdamW,
}

/// What the actor did at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActOutput {
    pub action: usize,
    pub logprob: f64,
    pub probs: [f64; 3],
    pub value: f64,
}

pub fn probs3(p: &[f64]) -> [f64; 3] {
    [p[0], p[1], p[2]]
}

pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(probs)
        .expect("softmax output is a valid weight vector")
        .sample(rng)
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hp: &HyperParams, rng: &mut R) -> Result<Self> {
        let policy = DenseNet::new(NetSpec::policy(obs_dim).with_hidden(hp.hidden.clone()), rng)?;
        let value = DenseNet::new(NetSpec::value(obs_dim).with_hidden(hp.hidden.clone()), rng)?;
        Ok(Self::from_nets(policy, value, hp))
    }

    pub fn from_nets(policy: DenseNet, value: DenseNet, hp: &HyperParams) -> Self {
        let mut policy_opt = AdamW::new(policy.param_count(), hp.learning_rate);
        let mut value_opt = AdamW::new(value.param_count(), hp.learning_rate);
        policy_opt.lr_decay = hp.lr_decay;
        value_opt.lr_decay = hp.lr_decay;
        Self {
            policy,
            value,
            policy_opt,
            value_opt,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.spec().input_dim
    }

    /// Samples from the policy and evaluates the critic.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<ActOutput> {
        let (p, cache) = self.policy.forward(obs)?;
        let action = sample_action(&p, rng);
        Ok(ActOutput {
            action,
            logprob: log_softmax(cache.raw())[action],
            probs: probs3(&p),
            value: self.value.predict(obs)?[0],
        })
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.policy.predict(obs)?))
    }

    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.value.predict(obs)?[0])
    }

    /// Mean KL(old ‖ current) over stored behavior distributions.
    pub fn mean_kl_from(&self, samples: &[(&[f64], [f64; 3])]) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (obs, old) in samples {
            total += kl_divergence(old, &self.policy.predict(obs)?);
        }
        Ok(total / samples.len() as f64)
    }
}

/// Aggregates over one update phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub minibatches: usize,
    pub mean_loss: f64,
    pub mean_clip_fraction: f64,
    pub clamped: usize,
}

/// Minibatched epochs over `n_samples` indices. `loss_fn` evaluates one
/// minibatch of indices against the current networks; gradients are
/// norm-clipped and applied with AdamW at schedule position `progress`.
pub fn run_update<R, F>(
    agent: &mut ActorCritic,
    n_samples: usize,
    hp: &HyperParams,
    progress: f64,
    rng: &mut R,
    mut loss_fn: F,
) -> Result<UpdateStats>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize], &DenseNet, &DenseNet) -> Result<LossOutput>,
{
    let mut idx: Vec<usize> = (0..n_samples).collect();
    let mut stats = UpdateStats::default();
    for epoch in 0..hp.update_epochs {
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
        for (k, chunk) in idx.chunks(hp.minibatch).enumerate() {
            let abort = |e: Error, out: Option<&LossOutput>| {
                Error::TrainingAborted(format!(
                    "epoch {epoch} minibatch {k}: {e}; diagnostics: {}",
                    out.map(|o| format!(
                        "loss={} surrogate={} value_loss={} entropy={} approx_kl={} clamped={}",
                        o.loss, o.surrogate, o.value_loss, o.entropy, o.approx_kl, o.clamped
                    ))
                    .unwrap_or_else(|| "loss not computed".into())
                ))
            };
            let mut out = loss_fn(chunk, &agent.policy, &agent.value).map_err(|e| abort(e, None))?;
            clip_grad_norm(&mut out.policy_grad, hp.max_grad_norm);
            clip_grad_norm(&mut out.value_grad, hp.max_grad_norm);
            agent
                .policy_opt
                .step(agent.policy.params_mut(), &out.policy_grad, progress)
                .map_err(|e| abort(e, Some(&out)))?;
            agent
                .value_opt
                .step(agent.value.params_mut(), &out.value_grad, progress)
                .map_err(|e| abort(e, Some(&out)))?;
            stats.minibatches += 1;
            stats.mean_loss += out.loss;
            stats.mean_clip_fraction += out.clip_fraction;
            stats.clamped += out.clamped;
        }
    }
    if stats.minibatches > 0 {
        stats.mean_loss /= stats.minibatches as f64;
        stats.mean_clip_fraction /= stats.minibatches as f64;
    }
    Ok(stats)
}
