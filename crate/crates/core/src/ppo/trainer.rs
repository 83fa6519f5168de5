use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::agent::{run_update, ActorCritic, UpdateStats};
use super::buffer::{EpisodeStats, EpisodeTracker, Origin, RolloutBuffer, Transition};
use super::loss::{ppo_loss, HyperParams, PpoSample};
use super::metrics::PhaseMetrics;
use crate::error::Result;
use crate::mdp::{Action, Environment, Observation, OBS_DIM};

/// Plain PPO: alternate a fixed-length collection phase with minibatched
/// clipped-surrogate epochs.
pub struct PpoTrainer<E: Environment> {
    pub env: E,
    pub hp: HyperParams,
    pub agent: ActorCritic,
    rng: ChaCha8Rng,
    obs: Observation,
    tracker: EpisodeTracker,
    steps_done: usize,
    phase: usize,
    buffer: RolloutBuffer,
    last_update: UpdateStats,
}

impl<E: Environment> PpoTrainer<E> {
    pub fn new(mut env: E, hp: HyperParams, seed: u64) -> Result<Self> {
        hp.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = ActorCritic::new(OBS_DIM, &hp, &mut rng)?;
        let obs = env.reset()?;
        Ok(Self {
            env,
            hp,
            agent,
            rng,
            obs,
            tracker: EpisodeTracker::default(),
            steps_done: 0,
            phase: 0,
            buffer: RolloutBuffer::default(),
            last_update: UpdateStats::default(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn is_finished(&self) -> bool {
        self.phase >= self.hp.phases()
    }

    /// Buffer of the most recent phase, with GAE outputs filled in.
    pub fn last_buffer(&self) -> &RolloutBuffer {
        &self.buffer
    }

    pub fn last_update(&self) -> UpdateStats {
        self.last_update
    }

    /// Collects one phase, updates the networks and reports the phase.
    pub fn run_phase(&mut self) -> Result<PhaseMetrics> {
        let hp = self.hp.clone();
        self.buffer.clear();
        let mut finished: Vec<EpisodeStats> = Vec::new();
        let mut collisions = 0;
        let mut speed_sum = 0.0;
        let mut entropy_sum = 0.0;
        for _ in 0..hp.steps_per_phase {
            let x = self.obs.to_array();
            let act = self.agent.act(&x, &mut self.rng)?;
            let step = self.env.step(Action::from_index(act.action).expect("policy has 3 outputs"))?;
            collisions += usize::from(step.events.collision);
            speed_sum += step.speed;
            entropy_sum -= act.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
            self.buffer.transitions.push(Transition {
                obs: x.to_vec(),
                action: act.action,
                logprob_old: act.logprob,
                reward: step.reward.total,
                value: act.value,
                done: step.done(),
                origin: Origin::Student,
                teacher_probs: None,
                probs_old: act.probs,
            });
            if let Some(ep) = self.tracker.record(&step) {
                finished.push(ep);
            }
            self.obs = if step.done() { self.env.reset()? } else { step.obs };
            self.steps_done += 1;
        }
        let last_value = self.agent.value_of(&self.obs.to_array())?;
        self.buffer.finish(last_value, hp.gamma, hp.gae_lambda)?;

        let adv = self.buffer.normalized_advantages();
        let samples: Vec<PpoSample> = self
            .buffer
            .transitions
            .iter()
            .zip(&adv)
            .zip(&self.buffer.returns)
            .map(|((t, a), r)| PpoSample {
                obs: t.obs.clone(),
                action: t.action,
                logprob_old: t.logprob_old,
                advantage: *a,
                value_target: *r,
            })
            .collect();
        let progress = (self.phase as f64 / hp.phases() as f64).min(1.0);
        self.last_update = run_update(&mut self.agent, samples.len(), &hp, progress, &mut self.rng, |idx, policy, value| {
            let batch: Vec<PpoSample> = idx.iter().map(|&i| samples[i].clone()).collect();
            ppo_loss(&batch, policy, value, &hp)
        })?;
        let old: Vec<(&[f64], [f64; 3])> = self
            .buffer
            .transitions
            .iter()
            .map(|t| (t.obs.as_slice(), t.probs_old))
            .collect();
        let kl = self.agent.mean_kl_from(&old)?;

        let n = hp.steps_per_phase as f64;
        let row = PhaseMetrics {
            phase: self.phase,
            step: self.steps_done,
            mean_speed: speed_sum / n,
            collisions,
            entropy: entropy_sum / n,
            kl,
            ..Default::default()
        }
        .with_episodes(&finished);
        self.phase += 1;
        Ok(row)
    }

    /// Runs every remaining phase.
    pub fn train(&mut self) -> Result<Vec<PhaseMetrics>> {
        let mut rows = Vec::new();
        while !self.is_finished() {
            rows.push(self.run_phase()?);
        }
        Ok(rows)
    }
}

/// Trains from scratch and returns the final networks with one metrics row
/// per phase.
pub fn train_ppo<E: Environment>(env: E, hp: HyperParams, seed: u64) -> Result<(ActorCritic, Vec<PhaseMetrics>)> {
    let mut t = PpoTrainer::new(env, hp, seed)?;
    let rows = t.train()?;
    Ok((t.agent, rows))
}
