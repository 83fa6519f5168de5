//! Strict JSON run configuration shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::S2cdHyper;
use crate::error::{Error, Result};
use crate::mdp::RewardConfig;
use crate::ppo::HyperParams;
use crate::sim::{Density, Fidelity, SimConfig};
use crate::teacher::TeacherQuality;
use crate::theory::TheoryConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeacherConfig {
    pub quality: TeacherQuality,
    /// Schedule of the High budget; Low stops halfway through it.
    pub ppo: HyperParams,
    /// Bundle directory used by `train-student` and `ablate`.
    pub bundle: Option<PathBuf>,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            quality: TeacherQuality::High,
            ppo: HyperParams::default(),
            bundle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub train_densities: Vec<Density>,
    pub eval_densities: Vec<Density>,
    pub eval_seeds: Vec<u64>,
    /// Episodes per evaluation seed.
    pub eval_episodes: usize,
    pub simple_sim: SimConfig,
    pub complex_sim: SimConfig,
    pub reward: RewardConfig,
    pub teacher: TeacherConfig,
    pub student: S2cdHyper,
    /// Plain PPO in the Complex world.
    pub baseline: HyperParams,
    pub theory: TheoryConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3],
            out_dir: None,
            train_densities: vec![Density::Medium],
            eval_densities: vec![Density::Medium],
            eval_seeds: vec![1000, 1001, 1002],
            eval_episodes: 50,
            simple_sim: SimConfig::simple(Density::Medium, 0),
            complex_sim: SimConfig::complex(Density::Medium, 0),
            reward: RewardConfig::default(),
            teacher: TeacherConfig::default(),
            student: S2cdHyper::default(),
            baseline: HyperParams::default(),
            theory: TheoryConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.seeds.is_empty() || self.eval_seeds.is_empty() {
            return bad("seeds and eval_seeds must be non-empty");
        }
        if self.train_densities.is_empty() || self.eval_densities.is_empty() {
            return bad("train_densities and eval_densities must be non-empty");
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be positive");
        }
        if self.simple_sim.fidelity != Fidelity::Simple || self.complex_sim.fidelity != Fidelity::Complex {
            return bad("simple_sim / complex_sim fidelity does not match its slot");
        }
        self.simple_sim.validate()?;
        self.complex_sim.validate()?;
        self.reward.validate()?;
        if self.teacher.quality == TeacherQuality::Complex {
            return bad("a Complex-world teacher is out of scope for train-teacher");
        }
        self.teacher.ppo.validate()?;
        self.student.validate()?;
        self.baseline.validate()?;
        self.theory.validate()
    }

    pub fn sim(&self, fidelity: Fidelity) -> SimConfig {
        match fidelity {
            Fidelity::Simple => self.simple_sim,
            Fidelity::Complex => self.complex_sim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_bad_tags_are_rejected() {
        assert!(RunConfig::from_json(r#"{"seedz": [1]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"student": {"psy": 0.2}}"#).is_err());
        let err = RunConfig::from_json(r#"{"train_densities": ["rush-hour"]}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn semantic_checks() {
        assert!(RunConfig::from_json(r#"{"seeds": []}"#).is_err());
        assert!(RunConfig::from_json(r#"{"eval_episodes": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"student": {"psi": 0.5}}"#).is_err());
        let mut cfg = RunConfig::default();
        cfg.simple_sim = SimConfig::complex(Density::Low, 0);
        assert!(cfg.validate().is_err());
    }
}
