use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::LaneGeometry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Kinematic world, 10 Hz integration, 2 Hz decisions.
    Simple,
    /// Spline/PID execution stack, 20 Hz integration and decisions.
    Complex,
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(Fidelity::Simple),
            "complex" => Ok(Fidelity::Complex),
            other => Err(Error::InvalidConfig(format!("unknown fidelity '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Low,
    Medium,
    High,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Low, Density::Medium, Density::High];

    /// Center-to-center spacing range between consecutive same-lane vehicles, m.
    pub fn spacing_range(self) -> (f64, f64) {
        match self {
            Density::Low => (90.0, 120.0),
            Density::Medium => (50.0, 90.0),
            Density::High => (20.0, 50.0),
        }
    }

    pub fn sample_spacing<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let (lo, hi) = self.spacing_range();
        rng.gen_range(lo..=hi)
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Density::Low => "low",
            Density::Medium => "medium",
            Density::High => "high",
        };
        f.write_str(s)
    }
}

impl FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Density::Low),
            "medium" => Ok(Density::Medium),
            "high" => Ok(Density::High),
            other => Err(Error::InvalidConfig(format!("unknown density tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub fidelity: Fidelity,
    pub lanes_count: usize,
    pub lane_width: f64,
    pub speed_limit: f64,
    pub sim_dt: f64,
    pub decisions_per_second: f64,
    pub density: Density,
    /// Distance the ego must cover for a successful episode, m.
    pub episode_length: f64,
    pub sensor_range: f64,
    /// Simulated-time cap after which an episode is truncated, s.
    pub max_episode_time: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn simple(density: Density, seed: u64) -> Self {
        Self {
            fidelity: Fidelity::Simple,
            lanes_count: 3,
            lane_width: 3.75,
            speed_limit: 25.0,
            sim_dt: 0.1,
            decisions_per_second: 2.0,
            density,
            episode_length: 1000.0,
            sensor_range: 50.0,
            max_episode_time: 150.0,
            seed,
        }
    }

    pub fn complex(density: Density, seed: u64) -> Self {
        Self {
            fidelity: Fidelity::Complex,
            sim_dt: 0.05,
            decisions_per_second: 20.0,
            ..Self::simple(density, seed)
        }
    }

    pub fn for_fidelity(fidelity: Fidelity, density: Density, seed: u64) -> Self {
        match fidelity {
            Fidelity::Simple => Self::simple(density, seed),
            Fidelity::Complex => Self::complex(density, seed),
        }
    }

    pub fn geometry(&self) -> LaneGeometry {
        LaneGeometry {
            lanes_count: self.lanes_count,
            lane_width: self.lane_width,
        }
    }

    /// Integration substeps per decision step.
    pub fn substeps(&self) -> usize {
        (1.0 / (self.decisions_per_second * self.sim_dt)).round() as usize
    }

    pub fn decision_dt(&self) -> f64 {
        self.substeps() as f64 * self.sim_dt
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "lanes_count must be at least 2, got {}",
                self.lanes_count
            )));
        }
        let positive = [
            ("lane_width", self.lane_width),
            ("speed_limit", self.speed_limit),
            ("sim_dt", self.sim_dt),
            ("decisions_per_second", self.decisions_per_second),
            ("episode_length", self.episode_length),
            ("sensor_range", self.sensor_range),
            ("max_episode_time", self.max_episode_time),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let ratio = 1.0 / (self.decisions_per_second * self.sim_dt);
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "decision interval {} s is not an integer multiple of sim_dt {} s",
                1.0 / self.decisions_per_second,
                self.sim_dt
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_presets() {
        let s = SimConfig::simple(Density::Medium, 1);
        assert_eq!(s.substeps(), 5);
        assert!((s.decision_dt() - 0.5).abs() < 1e-12);
        let c = SimConfig::complex(Density::Medium, 1);
        assert_eq!(c.substeps(), 1);
        s.validate().unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = SimConfig::simple(Density::Low, 0);
        c.lanes_count = 1;
        assert!(c.validate().is_err());
        let mut c = SimConfig::simple(Density::Low, 0);
        c.decisions_per_second = 3.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::simple(Density::Low, 0);
        c.sensor_range = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn density_tags() {
        assert_eq!("High".parse::<Density>().unwrap(), Density::High);
        assert!("gridlock".parse::<Density>().is_err());
        assert!(serde_json::from_str::<Density>("\"gridlock\"").is_err());
    }
}
