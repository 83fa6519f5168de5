use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::collect::{augment, collect_dual, DualBuffer, AUG_DIM};
use super::loss::{s2cd_loss, S2cdHyper, S2cdSample};
use super::schedule::{decay_tau, switch_action, Choice, SwitchConfig};
use crate::error::{Error, Result};
use crate::mdp::{Action, Environment, Observation, OBS_DIM};
use crate::nn::{argmax, load_net, save_net, DenseNet};
use crate::ppo::{run_update, ActorCritic, EpisodeTracker, PhaseMetrics, UpdateStats};
use crate::sim::Fidelity;
use crate::teacher::{load_bundle, save_bundle, teacher_advise, TeacherBundle};

/// Student trainer over a Complex environment with a frozen teacher.
pub struct S2cdTrainer<E: Environment> {
    pub env: E,
    pub hp: S2cdHyper,
    pub agent: ActorCritic,
    pub bundle: TeacherBundle,
    rng: ChaCha8Rng,
    obs: Observation,
    tracker: EpisodeTracker,
    steps_done: usize,
    phase: usize,
    episodes_done: u64,
    buffer: DualBuffer,
    last_update: UpdateStats,
}

impl<E: Environment> S2cdTrainer<E> {
    pub fn new(mut env: E, bundle: TeacherBundle, hp: S2cdHyper, seed: u64) -> Result<Self> {
        hp.validate()?;
        bundle.validate()?;
        if env.fidelity() != Fidelity::Complex {
            return Err(Error::InvalidConfig("the student trains in the Complex world".into()));
        }
        if bundle.manifest.input_dim != OBS_DIM {
            return Err(Error::DimensionMismatch {
                expected: OBS_DIM,
                got: bundle.manifest.input_dim,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = ActorCritic::new(AUG_DIM, &hp.ppo, &mut rng)?;
        let obs = env.reset()?;
        Ok(Self {
            env,
            hp,
            agent,
            bundle,
            rng,
            obs,
            tracker: EpisodeTracker::default(),
            steps_done: 0,
            phase: 0,
            episodes_done: 0,
            buffer: DualBuffer::default(),
            last_update: UpdateStats::default(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    pub fn is_finished(&self) -> bool {
        self.phase >= self.hp.ppo.phases()
    }

    pub fn last_buffer(&self) -> &DualBuffer {
        &self.buffer
    }

    pub fn last_update(&self) -> UpdateStats {
        self.last_update
    }

    /// τ for the next phase, fixed from the episode count at phase start.
    pub fn current_tau(&self) -> f64 {
        if self.hp.flags.intervention_decay {
            decay_tau(self.episodes_done, &self.hp.switch)
        } else {
            1.0
        }
    }

    pub fn run_phase(&mut self) -> Result<PhaseMetrics> {
        let hp = self.hp.clone();
        let tau = self.current_tau();
        self.buffer = collect_dual(
            &mut self.env,
            &mut self.obs,
            &mut self.tracker,
            &self.agent,
            &self.bundle,
            &hp,
            tau,
            hp.ppo.steps_per_phase,
            &mut self.rng,
        )?;
        self.steps_done += hp.ppo.steps_per_phase;
        self.episodes_done += self.buffer.episodes.len() as u64;

        let samples: Vec<S2cdSample> = self.buffer.samples(hp.ppo.gamma)?;
        let progress = (self.phase as f64 / hp.ppo.phases() as f64).min(1.0);
        self.last_update = run_update(&mut self.agent, samples.len(), &hp.ppo, progress, &mut self.rng, |idx, p, v| {
            let batch: Vec<S2cdSample> = idx.iter().map(|&i| samples[i].clone()).collect();
            s2cd_loss(&batch, p, v, &hp, tau)
        })?;
        let old: Vec<(&[f64], [f64; 3])> = self
            .buffer
            .trajectory
            .transitions
            .iter()
            .map(|t| (t.obs.as_slice(), t.probs_old))
            .collect();
        let kl = self.agent.mean_kl_from(&old)?;

        let st = self.buffer.stats;
        let n = st.steps as f64;
        let row = PhaseMetrics {
            phase: self.phase,
            step: self.steps_done,
            mean_speed: st.speed_sum / n,
            collisions: st.collisions,
            entropy: st.entropy_sum / n,
            kl,
            intervention_rate: st.intervention_rate(),
            tau,
            mean_kl: st.kl_sum / n,
            teacher_sample_fraction: self.buffer.teacher_sample_fraction(),
            ..Default::default()
        }
        .with_episodes(&self.buffer.episodes);
        self.phase += 1;
        Ok(row)
    }

    pub fn train(&mut self) -> Result<Vec<PhaseMetrics>> {
        let mut rows = Vec::new();
        while !self.is_finished() {
            rows.push(self.run_phase()?);
        }
        Ok(rows)
    }

    /// Greedy student bound to its teacher, gated by the switch at the
    /// current τ.
    pub fn policy(&self) -> StudentPolicy {
        StudentPolicy {
            policy: self.agent.policy.clone(),
            value: self.agent.value.clone(),
            teacher: Some(self.bundle.clone()),
            gate: Some(Gate {
                switch: self.hp.switch,
                tau: self.current_tau(),
            }),
        }
    }
}

pub fn train_s2cd<E: Environment>(
    env: E,
    bundle: TeacherBundle,
    hp: S2cdHyper,
    seed: u64,
) -> Result<(StudentPolicy, Vec<PhaseMetrics>)> {
    let mut t = S2cdTrainer::new(env, bundle, hp, seed)?;
    let rows = t.train()?;
    Ok((t.policy(), rows))
}

/// Intervention switch applied on top of the student's argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub switch: SwitchConfig,
    pub tau: f64,
}

/// A trained decision policy. With a teacher the input is the augmented
/// observation; without one it is the plain observation (PPO baseline).
/// With a gate the teacher may still override, as during training.
#[derive(Debug, Clone)]
pub struct StudentPolicy {
    pub policy: DenseNet,
    pub value: DenseNet,
    pub teacher: Option<TeacherBundle>,
    pub gate: Option<Gate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudentManifest {
    kind: String,
    input_dim: usize,
    gate: Option<Gate>,
}

impl StudentPolicy {
    pub fn baseline(agent: &ActorCritic) -> Self {
        Self {
            policy: agent.policy.clone(),
            value: agent.value.clone(),
            teacher: None,
            gate: None,
        }
    }

    /// The same student with the teacher's override removed.
    pub fn ungated(&self) -> Self {
        Self {
            gate: None,
            ..self.clone()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.policy.spec().input_dim
    }

    /// Argmax action for `obs`, passed through the gate if there is one.
    pub fn act(&self, obs: &Observation) -> Result<Action> {
        let Some(b) = &self.teacher else {
            let p = self.policy.predict(&obs.to_array())?;
            return Ok(Action::from_index(argmax(&p)).expect("three outputs"));
        };
        let advice = teacher_advise(b, obs)?;
        let a_s = argmax(&self.policy.predict(&augment(obs, advice.action).to_array())?);
        let a_t = advice.action.index();
        let a = match self.gate {
            Some(g) => match switch_action(advice.q_pred[a_t], advice.q_pred[a_s], g.tau, &g.switch).0 {
                Choice::Teacher => a_t,
                Choice::Student => a_s,
            },
            None => a_s,
        };
        Ok(Action::from_index(a).expect("three outputs"))
    }

    fn validate(&self) -> Result<()> {
        let expected = if self.teacher.is_some() { AUG_DIM } else { OBS_DIM };
        if self.gate.is_some() && self.teacher.is_none() {
            return Err(Error::Checkpoint("a gate needs a teacher".into()));
        }
        if self.input_dim() != expected || self.value.spec().input_dim != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.input_dim(),
            });
        }
        Ok(())
    }
}

pub fn save_student(student: &StudentPolicy, dir: &Path) -> Result<()> {
    student.validate()?;
    fs::create_dir_all(dir)?;
    save_net(&student.policy, &dir.join("policy.json"))?;
    save_net(&student.value, &dir.join("value.json"))?;
    let manifest = StudentManifest {
        kind: if student.teacher.is_some() { "s2cd" } else { "ppo" }.into(),
        input_dim: student.input_dim(),
        gate: student.gate,
    };
    fs::write(dir.join("student.json"), serde_json::to_string_pretty(&manifest)?)?;
    if let Some(b) = &student.teacher {
        save_bundle(b, &dir.join("teacher"))?;
    }
    Ok(())
}

pub fn load_student(dir: &Path) -> Result<StudentPolicy> {
    let path = dir.join("student.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    let manifest: StudentManifest = serde_json::from_str(&text)?;
    let teacher = match manifest.kind.as_str() {
        "s2cd" => Some(load_bundle(&dir.join("teacher"))?),
        "ppo" => None,
        other => return Err(Error::Checkpoint(format!("unknown student kind `{other}`"))),
    };
    let student = StudentPolicy {
        policy: load_net(&dir.join("policy.json"))?,
        value: load_net(&dir.join("value.json"))?,
        teacher,
        gate: manifest.gate,
    };
    student.validate()?;
    if student.input_dim() != manifest.input_dim {
        return Err(Error::DimensionMismatch {
            expected: manifest.input_dim,
            got: student.input_dim(),
        });
    }
    Ok(student)
}
