use rand::Rng;

use super::loss::{S2cdHyper, S2cdSample};
use super::schedule::{adaptive_epsilon, kl_penalty, switch_action, Choice};
use crate::error::{Error, Result};
use crate::mdp::{Action, Environment, Observation, OBS_DIM};
use crate::nn::{argmax, log_softmax};
use crate::ppo::{normalize, sample_action, ActorCritic, EpisodeStats, EpisodeTracker, Origin, RolloutBuffer, Transition};
use crate::teacher::{teacher_advise, Advice, TeacherBundle};

/// Student input: the observation plus the teacher's action one-hot.
pub const AUG_DIM: usize = OBS_DIM + 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedObservation {
    pub base: Observation,
    pub teacher_action: Action,
}

impl AugmentedObservation {
    pub fn to_array(&self) -> [f64; AUG_DIM] {
        let mut x = [0.0; AUG_DIM];
        x[..OBS_DIM].copy_from_slice(&self.base.to_array());
        x[OBS_DIM + self.teacher_action.index()] = 1.0;
        x
    }
}

pub fn augment(obs: &Observation, teacher_action: Action) -> AugmentedObservation {
    AugmentedObservation {
        base: *obs,
        teacher_action,
    }
}

/// One buffer entry. Executed entries come from the environment; teacher
/// entries pair the same state with the teacher's action and the Return
/// network's predicted reward.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTransition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub origin: Origin,
    pub executed: bool,
    /// Index of the decision step in the executed trajectory.
    pub step: usize,
    pub logprob_old: f64,
    pub teacher_probs: [f64; 3],
    pub eps_prime: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollectStats {
    pub steps: usize,
    pub intervened: usize,
    pub teacher_entries: usize,
    pub collisions: usize,
    pub kl_sum: f64,
    pub speed_sum: f64,
    pub entropy_sum: f64,
}

impl CollectStats {
    pub fn intervention_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.intervened as f64 / self.steps as f64
        }
    }
}

/// Entries of one phase plus the executed trajectory used for GAE.
#[derive(Debug, Clone, Default)]
pub struct DualBuffer {
    pub entries: Vec<DualTransition>,
    pub trajectory: RolloutBuffer,
    pub stats: CollectStats,
    pub episodes: Vec<EpisodeStats>,
}

impl DualBuffer {
    /// Fraction of entries with teacher origin.
    pub fn teacher_sample_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| e.origin == Origin::Teacher).count() as f64 / self.entries.len() as f64
    }

    /// Raw advantages: GAE for executed entries, a one-step residual with the
    /// predicted reward for teacher entries.
    pub fn advantages(&self, gamma: f64) -> Result<Vec<f64>> {
        let t = &self.trajectory;
        if t.advantages.len() != t.len() {
            return Err(Error::InvalidInput("trajectory GAE has not been computed".into()));
        }
        Ok(self
            .entries
            .iter()
            .map(|e| {
                if e.executed {
                    t.advantages[e.step]
                } else {
                    e.reward + gamma * t.next_values[e.step] - t.transitions[e.step].value
                }
            })
            .collect())
    }

    /// Loss samples with advantages normalized over all entries.
    pub fn samples(&self, gamma: f64) -> Result<Vec<S2cdSample>> {
        let mut adv = self.advantages(gamma)?;
        normalize(&mut adv);
        Ok(self
            .entries
            .iter()
            .zip(adv)
            .map(|(e, a)| S2cdSample {
                obs: e.obs.clone(),
                action: e.action,
                logprob_old: e.logprob_old,
                advantage: a,
                value_target: e.executed.then(|| self.trajectory.returns[e.step]),
                origin: e.origin,
                eps_prime: e.eps_prime,
                teacher_probs: e.executed.then_some(e.teacher_probs),
            })
            .collect())
    }
}

/// Student forward pass on an augmented input.
struct StudentView {
    logprobs: Vec<f64>,
    probs: [f64; 3],
    value: f64,
}

fn student_view(agent: &ActorCritic, x: &[f64]) -> Result<StudentView> {
    let (_, cache) = agent.policy.forward(x)?;
    let logprobs = log_softmax(cache.raw());
    let probs = [logprobs[0].exp(), logprobs[1].exp(), logprobs[2].exp()];
    Ok(StudentView {
        logprobs,
        probs,
        value: agent.value_of(x)?,
    })
}

/// Collects `steps` decisions under the mixed policy at fixed `tau`.
/// `obs` is the current observation and is advanced in place; finished
/// episodes reset the environment.
#[allow(clippy::too_many_arguments)]
pub fn collect_dual<E: Environment, R: Rng + ?Sized>(
    env: &mut E,
    obs: &mut Observation,
    tracker: &mut EpisodeTracker,
    agent: &ActorCritic,
    bundle: &TeacherBundle,
    hp: &S2cdHyper,
    tau: f64,
    steps: usize,
    rng: &mut R,
) -> Result<DualBuffer> {
    let mut buf = DualBuffer::default();
    for k in 0..steps {
        let advice: Advice = teacher_advise(bundle, obs)?;
        let a_t = advice.action.index();
        let x = augment(obs, advice.action).to_array();
        let sv = student_view(agent, &x)?;
        let a_s = if hp.student_sampling {
            sample_action(&sv.probs, rng)
        } else {
            argmax(&sv.probs)
        };
        let (choice, intervened) = switch_action(advice.q_pred[a_t], advice.q_pred[a_s], tau, &hp.switch);
        let a = match choice {
            Choice::Teacher => a_t,
            Choice::Student => a_s,
        };
        let eps_prime = if hp.flags.adaptive_clip {
            adaptive_epsilon(sv.probs[a_s], sv.probs[a_t], hp.psi)
        } else {
            0.0
        };
        let kl = kl_penalty(&advice.probs, &sv.probs);

        let step = env.step(Action::from_index(a).expect("three actions"))?;
        let s = &mut buf.stats;
        s.steps += 1;
        s.intervened += usize::from(intervened);
        s.collisions += usize::from(step.events.collision);
        s.kl_sum += kl;
        s.speed_sum += step.speed;
        s.entropy_sum -= sv.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();

        let origin = if intervened { Origin::Teacher } else { Origin::Student };
        buf.entries.push(DualTransition {
            obs: x.to_vec(),
            action: a,
            reward: step.reward.total,
            origin,
            executed: true,
            step: k,
            logprob_old: sv.logprobs[a],
            teacher_probs: advice.probs,
            eps_prime,
        });
        if hp.flags.dual_source && a_t != a {
            buf.stats.teacher_entries += 1;
            buf.entries.push(DualTransition {
                obs: x.to_vec(),
                action: a_t,
                reward: advice.r_pred,
                origin: Origin::Teacher,
                executed: false,
                step: k,
                logprob_old: sv.logprobs[a_t],
                teacher_probs: advice.probs,
                eps_prime,
            });
        }
        buf.trajectory.transitions.push(Transition {
            obs: x.to_vec(),
            action: a,
            logprob_old: sv.logprobs[a],
            reward: step.reward.total,
            value: sv.value,
            done: step.done(),
            origin,
            teacher_probs: Some(advice.probs),
            probs_old: sv.probs,
        });
        if let Some(ep) = tracker.record(&step) {
            buf.episodes.push(ep);
        }
        *obs = if step.done() { env.reset()? } else { step.obs };
    }
    let advice = teacher_advise(bundle, obs)?;
    let last_value = agent.value_of(&augment(obs, advice.action).to_array())?;
    buf.trajectory.finish(last_value, hp.ppo.gamma, hp.ppo.gae_lambda)?;
    Ok(buf)
}
