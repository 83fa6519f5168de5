use std::path::Path;

use serde::{Deserialize, Serialize};

use super::buffer::EpisodeStats;
use crate::error::Result;

/// One row per collection phase. Plain PPO leaves the teacher columns at 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetrics {
    pub phase: usize,
    pub step: usize,
    pub episodes: usize,
    pub mean_return: f64,
    pub mean_cost: f64,
    pub mean_speed: f64,
    pub success_rate: f64,
    pub collisions: usize,
    pub entropy: f64,
    pub kl: f64,
    pub intervention_rate: f64,
    pub tau: f64,
    pub mean_kl: f64,
    pub teacher_sample_fraction: f64,
}

impl PhaseMetrics {
    /// Fills the episode-derived columns from episodes finished this phase.
    pub fn with_episodes(mut self, episodes: &[EpisodeStats]) -> Self {
        self.episodes = episodes.len();
        if !episodes.is_empty() {
            let n = episodes.len() as f64;
            self.mean_return = episodes.iter().map(|e| e.episodic_return).sum::<f64>() / n;
            self.mean_cost = episodes.iter().map(|e| e.episodic_cost).sum::<f64>() / n;
            self.success_rate = episodes.iter().filter(|e| e.success).count() as f64 / n;
        }
        self
    }
}

pub fn write_metrics_csv(path: &Path, rows: &[PhaseMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<PhaseMetrics>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(rows)
}
