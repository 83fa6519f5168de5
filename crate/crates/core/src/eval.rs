//! Greedy-policy evaluation over seeded episodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Action, Environment, HighwayEnv, Observation, RewardConfig};
use crate::ppo::{EpisodeStats, EpisodeTracker};
use crate::sim::{Density, SimConfig};

/// Means over episodes; `success_rate` is a percentage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub episodes: usize,
    pub episodic_return: f64,
    pub episodic_reward: f64,
    pub episodic_cost: f64,
    pub episodic_speed: f64,
    pub success_rate: f64,
    pub collisions: usize,
}

impl EvalStats {
    pub fn from_episodes(eps: &[EpisodeStats]) -> Self {
        if eps.is_empty() {
            return Self::default();
        }
        let n = eps.len() as f64;
        let mean = |f: &dyn Fn(&EpisodeStats) -> f64| eps.iter().map(f).sum::<f64>() / n;
        Self {
            episodes: eps.len(),
            episodic_return: mean(&|e| e.episodic_return),
            episodic_reward: mean(&|e| e.episodic_reward),
            episodic_cost: mean(&|e| e.episodic_cost),
            episodic_speed: mean(&|e| e.mean_speed()),
            success_rate: 100.0 * eps.iter().filter(|e| e.success).count() as f64 / n,
            collisions: eps.iter().filter(|e| e.collided).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    #[serde(flatten)]
    pub stats: EvalStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    #[serde(flatten)]
    pub overall: EvalStats,
    pub per_seed: Vec<SeedEval>,
}

/// One evaluated episode with its seed, for the per-episode CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub episode: usize,
    pub density: Density,
    pub episodic_return: f64,
    pub episodic_reward: f64,
    pub episodic_cost: f64,
    pub mean_speed: f64,
    pub steps: usize,
    pub collided: bool,
    pub success: bool,
}

pub fn run_episodes<E, P>(env: &mut E, episodes: usize, mut policy: P) -> Result<Vec<EpisodeStats>>
where
    E: Environment,
    P: FnMut(&Observation) -> Result<Action>,
{
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset()?;
        let mut tracker = EpisodeTracker::default();
        loop {
            let step = env.step(policy(&obs)?)?;
            if let Some(ep) = tracker.record(&step) {
                out.push(ep);
                break;
            }
            obs = step.obs;
        }
    }
    Ok(out)
}

/// Evaluation protocol: for each seed, `episodes_per_seed` episodes cycling
/// through `densities`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub densities: Vec<Density>,
    pub seeds: Vec<u64>,
    pub episodes_per_seed: usize,
}

impl EvalProtocol {
    pub fn run<P>(&self, mut policy: P) -> Result<(EvalSummary, Vec<EpisodeRecord>)>
    where
        P: FnMut(&Observation) -> Result<Action>,
    {
        if self.seeds.is_empty() || self.episodes_per_seed == 0 {
            return Err(Error::InvalidConfig("evaluation needs at least one seed and one episode".into()));
        }
        let mut all = Vec::new();
        let mut per_seed = Vec::new();
        let mut records = Vec::new();
        for &seed in &self.seeds {
            let mut env = HighwayEnv::new(self.sim, self.reward, self.densities.clone(), seed)?;
            let eps = run_episodes(&mut env, self.episodes_per_seed, &mut policy)?;
            // the env cycles densities in order from its first reset
            let densities: Vec<Density> = (0..eps.len()).map(|k| self.densities[k % self.densities.len()]).collect();
            for (k, (e, d)) in eps.iter().zip(&densities).enumerate() {
                records.push(EpisodeRecord {
                    seed,
                    episode: k,
                    density: *d,
                    episodic_return: e.episodic_return,
                    episodic_reward: e.episodic_reward,
                    episodic_cost: e.episodic_cost,
                    mean_speed: e.mean_speed(),
                    steps: e.steps,
                    collided: e.collided,
                    success: e.success,
                });
            }
            per_seed.push(SeedEval {
                seed,
                stats: EvalStats::from_episodes(&eps),
            });
            all.extend(eps);
        }
        Ok((
            EvalSummary {
                overall: EvalStats::from_episodes(&all),
                per_seed,
            },
            records,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Fidelity;

    #[test]
    fn always_follow_on_an_empty_road_always_succeeds() {
        let mut env = HighwayEnv::single(Fidelity::Simple, Density::Low, 0).unwrap();
        let mut eps = Vec::new();
        for _ in 0..3 {
            env.reset().unwrap();
            env.world_mut().unwrap().vehicles.retain(|v| v.is_ego);
            let mut tracker = EpisodeTracker::default();
            loop {
                let s = env.step(Action::Follow).unwrap();
                if let Some(e) = tracker.record(&s) {
                    eps.push(e);
                    break;
                }
            }
        }
        let st = EvalStats::from_episodes(&eps);
        assert_eq!(st.success_rate, 100.0);
        assert_eq!(st.episodic_cost, 0.0);
    }

    #[test]
    fn return_identity_holds_in_aggregates() {
        let proto = EvalProtocol {
            sim: SimConfig::simple(Density::High, 0),
            reward: RewardConfig::default(),
            densities: Density::ALL.to_vec(),
            seeds: vec![1, 2],
            episodes_per_seed: 3,
        };
        let mut k = 0usize;
        let (summary, records) = proto
            .run(|_| {
                k += 1;
                Ok(Action::from_index(k % 3).unwrap())
            })
            .unwrap();
        let o = &summary.overall;
        assert!((o.episodic_return - (o.episodic_reward - o.episodic_cost)).abs() < 1e-9);
        assert_eq!(records.len(), 6);
        assert_eq!(records[4].density, Density::Medium);
        assert!((0.0..=100.0).contains(&o.success_rate));
    }
}
