//! The decision problem seen by the agents: 11-number observation, three
//! discrete commands, efficiency reward minus safety cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Density, Fidelity, SimConfig, StepEvents, WorldState};

pub use crate::sim::Action;

pub const OBS_DIM: usize = 11;

/// Neighbor slots in observation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Front = 0,
    FrontLeft = 1,
    RearLeft = 2,
    FrontRight = 3,
    RearRight = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub v_e: f64,
    /// `(speed, distance)` per [`Slot`].
    pub neighbors: [(f64, f64); 5],
    pub normalized: bool,
}

impl Observation {
    /// Observation of an empty road around an ego at `v_e`.
    pub fn empty(v_e: f64, sensor_range: f64) -> Self {
        Self {
            v_e,
            neighbors: [(v_e, sensor_range); 5],
            normalized: false,
        }
    }

    pub fn slot(&self, slot: Slot) -> (f64, f64) {
        self.neighbors[slot as usize]
    }

    /// Speeds over `speed_scale`, distances over `range`.
    pub fn normalize(&self, speed_scale: f64, range: f64) -> Self {
        if self.normalized {
            return *self;
        }
        let mut out = *self;
        out.v_e /= speed_scale;
        for n in &mut out.neighbors {
            *n = (n.0 / speed_scale, n.1 / range);
        }
        out.normalized = true;
        out
    }

    /// Flat layout `[v_e, v_f, d_f, v_fl, d_fl, v_rl, d_rl, v_fr, d_fr, v_rr, d_rr]`.
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let mut a = [0.0; OBS_DIM];
        a[0] = self.v_e;
        for (k, (v, d)) in self.neighbors.iter().enumerate() {
            a[1 + 2 * k] = *v;
            a[2 + 2 * k] = *d;
        }
        a
    }

    pub fn from_array(a: &[f64], normalized: bool) -> Result<Self> {
        if a.len() != OBS_DIM {
            return Err(Error::DimensionMismatch {
                expected: OBS_DIM,
                got: a.len(),
            });
        }
        let mut neighbors = [(0.0, 0.0); 5];
        for (k, n) in neighbors.iter_mut().enumerate() {
            *n = (a[1 + 2 * k], a[2 + 2 * k]);
        }
        Ok(Self {
            v_e: a[0],
            neighbors,
            normalized,
        })
    }
}

/// Raw observation of `world`: nearest vehicle per slot within sensor range,
/// absent slots filled with `(v_e, sensor_range)`. Distances are
/// center-to-center along the road.
pub fn build_observation(world: &WorldState) -> Observation {
    let cfg = &world.config;
    let ego = world.ego();
    let lane = ego.lane_index;
    let mut obs = Observation::empty(ego.speed, cfg.sensor_range);
    let mut best = [f64::INFINITY; 5];
    let left = lane.checked_sub(1);
    let right = (lane + 1 < cfg.lanes_count).then_some(lane + 1);
    for o in world.vehicles.iter().filter(|o| !o.is_ego) {
        let dx = o.longitudinal_pos - ego.longitudinal_pos;
        let dist = dx.abs();
        if dist > cfg.sensor_range {
            continue;
        }
        let ahead = dx >= 0.0;
        let mut slots = [None; 3];
        if o.occupies(lane) && ahead {
            slots[0] = Some(Slot::Front);
        }
        if left.is_some_and(|l| o.occupies(l)) {
            slots[1] = Some(if ahead { Slot::FrontLeft } else { Slot::RearLeft });
        }
        if right.is_some_and(|l| o.occupies(l)) {
            slots[2] = Some(if ahead { Slot::FrontRight } else { Slot::RearRight });
        }
        for s in slots.into_iter().flatten() {
            let k = s as usize;
            if dist < best[k] {
                best[k] = dist;
                obs.neighbors[k] = (o.speed, dist);
            }
        }
    }
    obs
}

/// Normalized observation as consumed by the networks.
pub fn observe(world: &WorldState) -> Observation {
    let cfg = &world.config;
    build_observation(world).normalize(cfg.speed_limit, cfg.sensor_range)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.5,
            alpha2: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reward weights must be positive, got alpha1={} alpha2={}",
                self.alpha1, self.alpha2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub efficiency: f64,
    pub cost: f64,
    pub total: f64,
}

pub fn efficiency_reward(v_e: f64, cfg: &RewardConfig) -> f64 {
    if v_e < 12.5 {
        0.0
    } else if v_e < 25.0 {
        cfg.alpha1 * (v_e / 12.5 - 1.0)
    } else {
        cfg.alpha1
    }
}

/// Collision dominates every distance branch.
pub fn safety_cost(d_safe: f64, collided: bool, cfg: &RewardConfig) -> f64 {
    if collided {
        1.0
    } else if d_safe < 5.0 {
        cfg.alpha2
    } else if d_safe < 10.0 {
        cfg.alpha2 * (1.0 - (d_safe - 5.0) / 5.0)
    } else {
        0.0
    }
}

pub fn step_reward(events: &StepEvents, world: &WorldState, cfg: &RewardConfig) -> RewardBreakdown {
    let efficiency = efficiency_reward(world.ego().speed, cfg);
    let cost = safety_cost(events.safe_distance(), events.collision, cfg);
    RewardBreakdown {
        efficiency,
        cost,
        total: efficiency - cost,
    }
}

/// One environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub obs: Observation,
    pub reward: RewardBreakdown,
    pub events: StepEvents,
    pub speed: f64,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.events.episode_done
    }
}

/// Episodic discrete-action environment over normalized observations.
pub trait Environment {
    fn reset(&mut self) -> Result<Observation>;
    fn step(&mut self, action: Action) -> Result<EnvStep>;
    fn fidelity(&self) -> Fidelity;
}

/// The highway world wrapped as an [`Environment`]. Each reset draws a fresh
/// world seed from the env's own generator and cycles through `densities`.
#[derive(Debug, Clone)]
pub struct HighwayEnv {
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub densities: Vec<Density>,
    episodes_started: u64,
    seeder: ChaCha8Rng,
    world: Option<WorldState>,
}

impl HighwayEnv {
    pub fn new(sim: SimConfig, reward: RewardConfig, densities: Vec<Density>, seed: u64) -> Result<Self> {
        sim.validate()?;
        reward.validate()?;
        if densities.is_empty() {
            return Err(Error::InvalidConfig("at least one density is required".into()));
        }
        Ok(Self {
            sim,
            reward,
            densities,
            episodes_started: 0,
            seeder: ChaCha8Rng::seed_from_u64(seed),
            world: None,
        })
    }

    /// Env for a single fidelity/density with default rewards.
    pub fn single(fidelity: Fidelity, density: Density, seed: u64) -> Result<Self> {
        Self::new(
            SimConfig::for_fidelity(fidelity, density, 0),
            RewardConfig::default(),
            vec![density],
            seed,
        )
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    pub fn world_mut(&mut self) -> Option<&mut WorldState> {
        self.world.as_mut()
    }

    pub fn episodes_started(&self) -> u64 {
        self.episodes_started
    }

    /// Density the next reset will use.
    pub fn next_density(&self) -> Density {
        self.densities[(self.episodes_started % self.densities.len() as u64) as usize]
    }
}

impl Environment for HighwayEnv {
    fn reset(&mut self) -> Result<Observation> {
        let mut cfg = self.sim;
        cfg.density = self.next_density();
        cfg.seed = self.seeder.gen();
        self.episodes_started += 1;
        let world = WorldState::spawn(cfg)?;
        let obs = observe(&world);
        self.world = Some(world);
        Ok(obs)
    }

    fn step(&mut self, action: Action) -> Result<EnvStep> {
        let world = self
            .world
            .as_mut()
            .ok_or_else(|| Error::InvalidInput("step called before reset".into()))?;
        if world.detect_collision().episode_done {
            return Err(Error::InvalidInput("step called on a finished episode".into()));
        }
        let events = world.step(action);
        let reward = step_reward(&events, world, &self.reward);
        Ok(EnvStep {
            obs: observe(world),
            reward,
            events,
            speed: world.ego().speed,
        })
    }

    fn fidelity(&self) -> Fidelity {
        self.sim.fidelity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{VehicleState, VEHICLE_LENGTH};
    use proptest::prelude::*;

    fn world_with(others: &[(usize, f64, f64)]) -> WorldState {
        let mut w = WorldState::spawn(SimConfig::simple(Density::Medium, 0)).unwrap();
        w.vehicles.retain(|v| v.is_ego);
        w.ego_mut().speed = 22.0;
        for (k, &(lane, x, v)) in others.iter().enumerate() {
            w.vehicles.push(VehicleState {
                id: k as u32 + 1,
                longitudinal_pos: x,
                lane_index: lane,
                lateral_offset: 0.0,
                speed: v,
                target_speed: 20.0,
                length: VEHICLE_LENGTH,
                is_ego: false,
                lane_change: None,
                next_lane_decision: f64::INFINITY,
            });
        }
        w
    }

    #[test]
    fn empty_road_uses_sentinels() {
        let obs = build_observation(&world_with(&[]));
        for n in obs.neighbors {
            assert_eq!(n, (22.0, 50.0));
        }
    }

    #[test]
    fn front_slot_and_normalization() {
        let obs = build_observation(&world_with(&[(1, 30.0, 20.0)]));
        assert_eq!(obs.slot(Slot::Front), (20.0, 30.0));
        let n = obs.normalize(25.0, 50.0);
        assert!((n.slot(Slot::Front).0 - 0.8).abs() < 1e-15);
        assert!((n.slot(Slot::Front).1 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn nearest_candidate_wins() {
        let obs = build_observation(&world_with(&[(0, 40.0, 18.0), (0, 12.0, 19.0), (2, -20.0, 24.0)]));
        assert_eq!(obs.slot(Slot::FrontLeft), (19.0, 12.0));
        assert_eq!(obs.slot(Slot::RearRight), (24.0, 20.0));
        assert_eq!(obs.slot(Slot::RearLeft), (22.0, 50.0));
    }

    #[test]
    fn out_of_range_vehicles_ignored() {
        let obs = build_observation(&world_with(&[(1, 51.0, 10.0)]));
        assert_eq!(obs.slot(Slot::Front), (22.0, 50.0));
    }

    #[test]
    fn reward_values() {
        let c = RewardConfig::default();
        assert_eq!(efficiency_reward(10.0, &c), 0.0);
        assert_eq!(efficiency_reward(25.0, &c), 0.5);
        assert!((efficiency_reward(18.75, &c) - 0.25).abs() < 1e-15);
        assert_eq!(safety_cost(3.0, false, &c), 1.0);
        assert!((safety_cost(7.5, false, &c) - 0.5).abs() < 1e-15);
        assert_eq!(safety_cost(40.0, true, &c), 1.0);
        assert_eq!(safety_cost(10.0, false, &c), 0.0);
    }

    #[test]
    fn step_reward_compositions() {
        let c = RewardConfig::default();
        let mut w = world_with(&[]);
        w.ego_mut().speed = 25.0;
        let ev = StepEvents {
            min_gap_front: 40.0,
            min_gap_rear: 50.0,
            ..Default::default()
        };
        assert_eq!(step_reward(&ev, &w, &c).total, 0.5);
        w.ego_mut().speed = 0.0;
        let ev = StepEvents {
            collision: true,
            ..Default::default()
        };
        assert_eq!(step_reward(&ev, &w, &c).total, -1.0);
        w.ego_mut().speed = 12.5;
        let ev = StepEvents {
            min_gap_front: 10.0,
            min_gap_rear: 10.0,
            ..Default::default()
        };
        assert_eq!(step_reward(&ev, &w, &c).total, 0.0);
    }

    #[test]
    fn env_requires_reset_and_is_seeded() {
        let mut a = HighwayEnv::single(Fidelity::Simple, Density::High, 5).unwrap();
        assert!(a.step(Action::Follow).is_err());
        let mut b = a.clone();
        let oa = a.reset().unwrap();
        let ob = b.reset().unwrap();
        assert_eq!(oa, ob);
        for _ in 0..20 {
            let sa = a.step(Action::RightLaneChange).unwrap();
            assert_eq!(sa, b.step(Action::RightLaneChange).unwrap());
            if sa.done() {
                assert!(a.step(Action::Follow).is_err());
                break;
            }
        }
    }

    proptest! {
        #[test]
        fn efficiency_is_monotone(a in 0.0..25.0f64, b in 0.0..25.0f64) {
            let c = RewardConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(efficiency_reward(lo, &c) <= efficiency_reward(hi, &c));
        }

        #[test]
        fn cost_is_monotone_and_total_bounded(a in 0.0..60.0f64, b in 0.0..60.0f64, v in 0.0..=25.0f64, hit: bool) {
            let c = RewardConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(safety_cost(lo, false, &c) >= safety_cost(hi, false, &c));
            let total = efficiency_reward(v, &c) - safety_cost(a, hit, &c);
            prop_assert!((-1.0..=0.5).contains(&total));
        }

        #[test]
        fn normalized_observations_in_unit_box(seed in 0u64..500, steps in 0usize..40, cmd in 0usize..3) {
            let mut env = HighwayEnv::single(Fidelity::Simple, Density::High, seed).unwrap();
            let mut obs = env.reset().unwrap();
            for _ in 0..steps {
                prop_assert!(obs.to_array().iter().all(|x| (0.0..=1.0).contains(x)));
                let s = env.step(Action::from_index(cmd).unwrap()).unwrap();
                obs = s.obs;
                if s.done() { break; }
            }
            prop_assert!(obs.to_array().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
