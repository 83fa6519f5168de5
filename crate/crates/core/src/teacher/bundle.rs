use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::heads::{FitOptions, FitReport, SupervisedRow, ValueHeads};
use crate::error::{Error, Result};
use crate::mdp::{Action, Environment, Observation, OBS_DIM};
use crate::nn::{argmax, load_net, save_net, softmax, DenseNet};
use crate::ppo::{HyperParams, PhaseMetrics, PpoTrainer};
use crate::sim::Fidelity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TeacherQuality {
    High,
    Low,
    /// Trained directly in the Complex world.
    Complex,
}

impl TeacherQuality {
    /// Training steps given the High budget; Low gets half.
    pub fn budget(self, high_steps: usize) -> usize {
        match self {
            TeacherQuality::Low => high_steps / 2,
            _ => high_steps,
        }
    }

    pub fn fidelity(self) -> Fidelity {
        match self {
            TeacherQuality::Complex => Fidelity::Complex,
            _ => Fidelity::Simple,
        }
    }
}

impl fmt::Display for TeacherQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TeacherQuality::High => "high",
            TeacherQuality::Low => "low",
            TeacherQuality::Complex => "complex",
        };
        f.write_str(s)
    }
}

impl FromStr for TeacherQuality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(TeacherQuality::High),
            "low" => Ok(TeacherQuality::Low),
            "complex" => Ok(TeacherQuality::Complex),
            _ => Err(Error::InvalidInput(format!("unknown teacher quality `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherManifest {
    pub quality_tag: TeacherQuality,
    pub training_steps: usize,
    pub seed: u64,
    /// Success rate on the teacher's own world, filled in by the caller.
    pub eval_success: Option<f64>,
    pub input_dim: usize,
    pub gamma: f64,
}

/// Frozen teacher: actor, critic and the two per-action predictors.
#[derive(Debug, Clone)]
pub struct TeacherBundle {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub return_net: DenseNet,
    pub qvalue_net: DenseNet,
    pub manifest: TeacherManifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub action: Action,
    pub probs: [f64; 3],
    /// Predicted immediate reward of `action`.
    pub r_pred: f64,
    pub q_pred: [f64; 3],
}

impl TeacherBundle {
    pub fn validate(&self) -> Result<()> {
        for (name, net) in [
            ("actor", &self.actor),
            ("critic", &self.critic),
            ("return_net", &self.return_net),
            ("qvalue_net", &self.qvalue_net),
        ] {
            if net.spec().input_dim != OBS_DIM {
                return Err(Error::DimensionMismatch { expected: OBS_DIM, got: net.spec().input_dim })
                    .map_err(|e| Error::Checkpoint(format!("{name}: {e}")));
            }
        }
        for net in [&self.actor, &self.return_net, &self.qvalue_net] {
            if net.spec().output_dim != 3 {
                return Err(Error::Checkpoint("teacher heads must have 3 outputs".into()));
            }
        }
        Ok(())
    }

    /// Combined checksum of all four networks.
    pub fn checksum(&self) -> u64 {
        [&self.actor, &self.critic, &self.return_net, &self.qvalue_net]
            .iter()
            .fold(0u64, |acc, n| acc.rotate_left(17) ^ n.checksum())
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.actor.predict(obs)?))
    }
}

pub fn teacher_advise(bundle: &TeacherBundle, obs: &Observation) -> Result<Advice> {
    if !obs.normalized {
        return Err(Error::InvalidInput("teacher expects a normalized observation".into()));
    }
    let x = obs.to_array();
    if x.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0 + 1e-9) {
        return Err(Error::InvalidInput("observation outside the normalized range".into()));
    }
    let p = softmax(&bundle.actor.predict(&x)?);
    let probs = [p[0], p[1], p[2]];
    let a = argmax(&probs);
    let r = bundle.return_net.predict(&x)?;
    let q = bundle.qvalue_net.predict(&x)?;
    Ok(Advice {
        action: Action::from_index(a).expect("three outputs"),
        probs,
        r_pred: r[a],
        q_pred: [q[0], q[1], q[2]],
    })
}

/// Training output: the bundle plus per-phase logs.
#[derive(Debug, Clone)]
pub struct TeacherTraining {
    pub bundle: TeacherBundle,
    pub metrics: Vec<PhaseMetrics>,
    pub fits: Vec<FitReport>,
    pub rows: usize,
}

/// Trains the teacher with PPO for the quality's budget, collecting
/// (s, a, r, r + γV(s')) rows and refitting the predictors on each phase's
/// rows. Older rows are not replayed: their targets used an older critic.
pub fn train_teacher<E: Environment>(
    env: E,
    hp: &HyperParams,
    quality: TeacherQuality,
    seed: u64,
) -> Result<TeacherTraining> {
    if env.fidelity() != quality.fidelity() {
        return Err(Error::InvalidConfig(format!(
            "{quality} teacher needs a {:?} environment, got {:?}",
            quality.fidelity(),
            env.fidelity()
        )));
    }
    // the schedule always spans the High budget; Low stops halfway through it
    let budget = quality.budget(hp.total_steps);
    let hp = hp.clone();
    hp.validate()?;
    let gamma = hp.gamma;
    let mut trainer = PpoTrainer::new(env, hp.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e4c_8e12);
    let opts = FitOptions::default();
    let mut heads = ValueHeads::new(&hp.hidden, &opts, &mut rng)?;
    let mut rows = 0;
    let mut metrics = Vec::new();
    let mut fits = Vec::new();
    while !trainer.is_finished() && trainer.steps_done() < budget {
        metrics.push(trainer.run_phase()?);
        let buf = trainer.last_buffer();
        let phase_rows: Vec<SupervisedRow> = buf
            .transitions
            .iter()
            .zip(&buf.next_values)
            .map(|(t, nv)| SupervisedRow::new(t.obs.clone(), t.action, t.reward, *nv, t.done, gamma))
            .collect();
        fits.push(heads.fit(&phase_rows, &opts, &mut rng)?);
        rows += phase_rows.len();
    }

    let bundle = TeacherBundle {
        actor: trainer.agent.policy.clone(),
        critic: trainer.agent.value.clone(),
        return_net: heads.return_net,
        qvalue_net: heads.qvalue_net,
        manifest: TeacherManifest {
            quality_tag: quality,
            training_steps: trainer.steps_done(),
            seed,
            eval_success: None,
            input_dim: OBS_DIM,
            gamma,
        },
    };
    Ok(TeacherTraining {
        bundle,
        metrics,
        fits,
        rows,
    })
}

const FILES: [&str; 4] = ["actor.json", "critic.json", "return_net.json", "qvalue_net.json"];

pub fn save_bundle(bundle: &TeacherBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let nets = [&bundle.actor, &bundle.critic, &bundle.return_net, &bundle.qvalue_net];
    for (net, file) in nets.iter().zip(FILES) {
        save_net(net, &dir.join(file))?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&bundle.manifest)?)?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<TeacherBundle> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: TeacherManifest = serde_json::from_str(&text)?;
    let bundle = TeacherBundle {
        actor: load_net(&dir.join(FILES[0]))?,
        critic: load_net(&dir.join(FILES[1]))?,
        return_net: load_net(&dir.join(FILES[2]))?,
        qvalue_net: load_net(&dir.join(FILES[3]))?,
        manifest,
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::HighwayEnv;
    use crate::nn::NetSpec;
    use crate::sim::Density;

    fn tiny_bundle(seed: u64) -> TeacherBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TeacherBundle {
            actor: DenseNet::new(NetSpec::policy(OBS_DIM).with_hidden(vec![8]), &mut rng).unwrap(),
            critic: DenseNet::new(NetSpec::value(OBS_DIM).with_hidden(vec![8]), &mut rng).unwrap(),
            return_net: DenseNet::new(NetSpec::vector(OBS_DIM, 3).with_hidden(vec![8]), &mut rng).unwrap(),
            qvalue_net: DenseNet::new(NetSpec::vector(OBS_DIM, 3).with_hidden(vec![8]), &mut rng).unwrap(),
            manifest: TeacherManifest {
                quality_tag: TeacherQuality::High,
                training_steps: 0,
                seed,
                eval_success: Some(0.5),
                input_dim: OBS_DIM,
                gamma: 0.96,
            },
        }
    }

    fn sample_obs() -> Observation {
        Observation::empty(20.0, 50.0).normalize(25.0, 50.0)
    }

    #[test]
    fn uniform_actor_advises_follow() {
        let mut b = tiny_bundle(1);
        b.actor.zero_output_layer();
        let adv = teacher_advise(&b, &sample_obs()).unwrap();
        assert_eq!(adv.action, Action::Follow);
        assert!(adv.probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn advice_is_pure() {
        let b = tiny_bundle(2);
        let before = b.checksum();
        let a1 = teacher_advise(&b, &sample_obs()).unwrap();
        let a2 = teacher_advise(&b, &sample_obs()).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.r_pred, b.return_net.predict(&sample_obs().to_array()).unwrap()[a1.action.index()]);
        assert_eq!(before, b.checksum());
    }

    #[test]
    fn raw_observation_is_rejected() {
        let b = tiny_bundle(3);
        assert!(teacher_advise(&b, &Observation::empty(20.0, 50.0)).is_err());
    }

    #[test]
    fn bundle_round_trips_through_a_directory() {
        let b = tiny_bundle(4);
        let dir = std::env::temp_dir().join(format!("s2cd-bundle-{}", std::process::id()));
        save_bundle(&b, &dir).unwrap();
        let c = load_bundle(&dir).unwrap();
        assert_eq!(b.checksum(), c.checksum());
        assert_eq!(b.manifest, c.manifest);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn quality_budgets() {
        assert_eq!(TeacherQuality::High.budget(100_000), 2 * TeacherQuality::Low.budget(100_000));
        assert_eq!("LOW".parse::<TeacherQuality>().unwrap(), TeacherQuality::Low);
    }

    #[test]
    fn short_training_is_deterministic_and_bellman_consistent() {
        let hp = HyperParams {
            steps_per_phase: 256,
            total_steps: 512,
            minibatch: 64,
            update_epochs: 1,
            ..Default::default()
        };
        let run = || {
            let env = HighwayEnv::single(Fidelity::Simple, Density::Medium, 9).unwrap();
            train_teacher(env, &hp, TeacherQuality::High, 9).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.bundle.checksum(), b.bundle.checksum());
        assert_eq!(a.rows, 512);
        assert_eq!(a.fits.len(), 2);
        let env = HighwayEnv::single(Fidelity::Complex, Density::Medium, 9).unwrap();
        assert!(train_teacher(env, &hp, TeacherQuality::High, 9).is_err());
    }
}
