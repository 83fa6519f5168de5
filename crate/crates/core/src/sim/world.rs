//! Multi-lane highway world: spawning, integration, rule-driven traffic and
//! collision bookkeeping.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Fidelity, SimConfig};
use super::vehicle::{Action, LaneChange, ManeuverMode, VehicleState, VEHICLE_LENGTH, VEHICLE_WIDTH};
use crate::control::{
    idm_accel, pid_step, plan_lane_change, IdmParams, PidGains, PidState, IDM_BRAKE_FLOOR,
};
use crate::error::{Error, Result};

/// Minimum center distance between the ego and the first vehicle ahead in
/// its lane at spawn (30 m bumper gap).
const EGO_SPAWN_FRONT_CLEARANCE: f64 = 30.0 + VEHICLE_LENGTH;
/// Traffic is spawned from this far behind the ego start...
const SPAWN_BEHIND: f64 = 120.0;
/// ...to this far beyond the finish line.
const SPAWN_BEYOND_FINISH: f64 = 300.0;
const TRAFFIC_MIN_TARGET_SPEED: f64 = 15.0;
const TRAFFIC_MAX_TARGET_SPEED: f64 = 25.0;

/// Seconds a traffic lane change takes.
const TRAFFIC_LANE_CHANGE_TIME: f64 = 1.0;
/// Decision steps a Simple-fidelity ego lane change takes.
const SIMPLE_LANE_CHANGE_DECISIONS: u32 = 2;
const MOBIL_GAIN_THRESHOLD: f64 = 0.2;
const MOBIL_SAFETY_GAP: f64 = 10.0;
const MOBIL_SAFE_BRAKING: f64 = -4.0;
const MOBIL_RECHECK_INTERVAL: f64 = 1.0;
const MOBIL_COOLDOWN: f64 = 4.0;
/// Gap used for IDM when bodies already overlap longitudinally.
const MIN_IDM_GAP: f64 = 0.1;

/// Lateral PID error is measured against the planned path this far ahead, m.
const LATERAL_LOOKAHEAD: f64 = 2.0;
const LATERAL_SPEED_LIMIT: f64 = 5.0;
const LATERAL_ACTUATOR_LAG: f64 = 0.1;
const LATERAL_DISTURBANCE: f64 = 0.05;
const LONGITUDINAL_ACTUATOR_LAG: f64 = 0.1;
/// Maneuver completes once inside this band around the target centerline.
const LANE_CHANGE_COMPLETION_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub collision: bool,
    pub min_gap_front: f64,
    pub min_gap_rear: f64,
    pub episode_done: bool,
    pub success: bool,
    /// Episode hit the simulated-time cap without success or collision.
    pub truncated: bool,
    /// The lane-change command pointed off the road and was executed as Follow.
    pub invalid_command: bool,
}

impl StepEvents {
    /// Distance used by the safety cost: the closer of the two gaps.
    pub fn safe_distance(&self) -> f64 {
        self.min_gap_front.min(self.min_gap_rear)
    }
}

/// Execution-layer memory of the ego at Complex fidelity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoController {
    pub lateral_pid: PidState,
    pub longitudinal_pid: PidState,
    pub lateral_velocity: f64,
    pub applied_accel: f64,
    pub speed_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub id: u32,
    pub lane: usize,
    pub pos: f64,
    pub speed: f64,
}

/// Debug/replay record of a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sim_time: f64,
    pub vehicles: Vec<VehicleSnapshot>,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub config: SimConfig,
    /// Sorted by `(lane_index, longitudinal_pos)`.
    pub vehicles: Vec<VehicleState>,
    pub sim_time: f64,
    pub ego_distance_travelled: f64,
    pub decision_steps: u64,
    pub ego_controller: EgoController,
    ego_start: f64,
    collided: bool,
    rng: ChaCha8Rng,
}

/// Per-lane occupancy, sorted by position, for neighbor queries.
struct LaneIndex {
    lanes: Vec<Vec<(f64, usize)>>,
}

impl LaneIndex {
    fn build(vehicles: &[VehicleState], lanes_count: usize) -> Self {
        let mut lanes = vec![Vec::new(); lanes_count];
        for (i, v) in vehicles.iter().enumerate() {
            let (a, b) = v.occupied_lanes();
            lanes[a].push((v.longitudinal_pos, i));
            if let Some(b) = b {
                lanes[b].push((v.longitudinal_pos, i));
            }
        }
        for lane in &mut lanes {
            lane.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        }
        Self { lanes }
    }

    /// Nearest vehicle strictly ahead of `x` in `lane`, other than `exclude`.
    fn ahead(&self, lane: usize, x: f64, exclude: usize) -> Option<usize> {
        let list = &self.lanes[lane];
        let start = list.partition_point(|p| p.0 <= x);
        list[start..].iter().find(|p| p.1 != exclude).map(|p| p.1)
    }

    /// Nearest vehicle at or behind `x` in `lane`, other than `exclude`.
    fn behind(&self, lane: usize, x: f64, exclude: usize) -> Option<usize> {
        let list = &self.lanes[lane];
        let end = list.partition_point(|p| p.0 <= x);
        list[..end].iter().rev().find(|p| p.1 != exclude).map(|p| p.1)
    }

    fn leader(&self, vehicles: &[VehicleState], i: usize) -> Option<usize> {
        let v = &vehicles[i];
        let (a, b) = v.occupied_lanes();
        let la = self.ahead(a, v.longitudinal_pos, i);
        let lb = b.and_then(|b| self.ahead(b, v.longitudinal_pos, i));
        match (la, lb) {
            (Some(p), Some(q)) => {
                if vehicles[q].longitudinal_pos < vehicles[p].longitudinal_pos {
                    Some(q)
                } else {
                    Some(p)
                }
            }
            (p, q) => p.or(q),
        }
    }
}

fn idm_params_for(v: &VehicleState) -> IdmParams {
    if v.is_ego {
        IdmParams::default()
    } else {
        IdmParams::default().with_desired_speed(v.target_speed)
    }
}

/// IDM acceleration of `follower` behind `leader` (free road when `None`).
fn follow_accel(follower: &VehicleState, leader: Option<&VehicleState>) -> f64 {
    let p = idm_params_for(follower);
    let result = match leader {
        Some(l) => {
            let gap = (l.rear() - follower.front()).max(MIN_IDM_GAP);
            idm_accel(follower.speed, l.speed, gap, &p)
        }
        None => idm_accel(follower.speed, follower.speed, f64::INFINITY, &p),
    };
    result.expect("IDM gap is clamped positive")
}

impl WorldState {
    /// Spawns the ego at rest in the center lane with rest-state traffic in
    /// every lane, spaced by independent draws from the density's range.
    pub fn spawn(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let ego_lane = config.lanes_count / 2;
        let mut vehicles = vec![VehicleState {
            id: 0,
            longitudinal_pos: 0.0,
            lane_index: ego_lane,
            lateral_offset: 0.0,
            speed: 0.0,
            target_speed: config.speed_limit,
            length: VEHICLE_LENGTH,
            is_ego: true,
            lane_change: None,
            next_lane_decision: f64::INFINITY,
        }];
        let far_end = config.episode_length + SPAWN_BEYOND_FINISH;
        let mut next_id = 1u32;
        let mut push = |vehicles: &mut Vec<VehicleState>, rng: &mut ChaCha8Rng, lane: usize, x: f64| {
            let target = rng.gen_range(TRAFFIC_MIN_TARGET_SPEED..=TRAFFIC_MAX_TARGET_SPEED);
            let stagger = rng.gen_range(0.0..MOBIL_RECHECK_INTERVAL);
            vehicles.push(VehicleState {
                id: next_id,
                longitudinal_pos: x,
                lane_index: lane,
                lateral_offset: 0.0,
                speed: 0.0,
                target_speed: target,
                length: VEHICLE_LENGTH,
                is_ego: false,
                lane_change: None,
                next_lane_decision: stagger,
            });
            next_id += 1;
        };
        for lane in 0..config.lanes_count {
            if lane == ego_lane {
                let mut x = -config.density.sample_spacing(&mut rng);
                while x > -SPAWN_BEHIND {
                    push(&mut vehicles, &mut rng, lane, x);
                    x -= config.density.sample_spacing(&mut rng);
                }
                let mut x = config.density.sample_spacing(&mut rng).max(EGO_SPAWN_FRONT_CLEARANCE);
                while x < far_end {
                    push(&mut vehicles, &mut rng, lane, x);
                    x += config.density.sample_spacing(&mut rng);
                }
            } else {
                let mut x = -SPAWN_BEHIND + rng.gen_range(0.0..config.density.spacing_range().0);
                while x < far_end {
                    push(&mut vehicles, &mut rng, lane, x);
                    x += config.density.sample_spacing(&mut rng);
                }
            }
        }
        let mut world = WorldState {
            config,
            vehicles,
            sim_time: 0.0,
            ego_distance_travelled: 0.0,
            decision_steps: 0,
            ego_controller: EgoController::default(),
            ego_start: 0.0,
            collided: false,
            rng,
        };
        world.sort_vehicles();
        Ok(world)
    }

    fn sort_vehicles(&mut self) {
        self.vehicles.sort_by(|a, b| {
            a.lane_index
                .cmp(&b.lane_index)
                .then(a.longitudinal_pos.total_cmp(&b.longitudinal_pos))
                .then(a.id.cmp(&b.id))
        });
    }

    pub fn ego_index(&self) -> usize {
        self.vehicles
            .iter()
            .position(|v| v.is_ego)
            .expect("world always holds exactly one ego")
    }

    pub fn ego(&self) -> &VehicleState {
        &self.vehicles[self.ego_index()]
    }

    pub fn ego_mut(&mut self) -> &mut VehicleState {
        let i = self.ego_index();
        &mut self.vehicles[i]
    }

    pub fn vehicle(&self, id: u32) -> Option<&VehicleState> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn is_sorted(&self) -> bool {
        self.vehicles.windows(2).all(|w| {
            (w[0].lane_index, w[0].longitudinal_pos) <= (w[1].lane_index, w[1].longitudinal_pos)
        })
    }

    /// Advances one decision step under the ego command.
    pub fn step(&mut self, ego_command: Action) -> StepEvents {
        let invalid_command = self.apply_command(ego_command);
        if !self.collided {
            for _ in 0..self.config.substeps() {
                self.substep();
                if self.detect_collision_now() {
                    self.collided = true;
                    break;
                }
            }
        }
        self.decision_steps += 1;
        let ego = self.ego_mut();
        if let Some(lc) = ego.lane_change.as_mut() {
            lc.decision_steps += 1;
        }
        let mut events = self.detect_collision();
        events.invalid_command = invalid_command;
        events
    }

    /// Starts an ego maneuver if the command asks for one. Returns whether the
    /// command pointed off the road. Ignored while a maneuver is in progress.
    fn apply_command(&mut self, cmd: Action) -> bool {
        let cfg = self.config;
        let geometry = cfg.geometry();
        let ego = self.ego_mut();
        if ego.lane_change.is_some() {
            return false;
        }
        let source = ego.lane_index;
        let Some(target) = cmd.target_lane(source, cfg.lanes_count) else {
            return true;
        };
        if target == source {
            return false;
        }
        let y = ego.lateral_position(cfg.lane_width);
        let mode = match cfg.fidelity {
            Fidelity::Simple => ManeuverMode::Linear {
                substeps_total: SIMPLE_LANE_CHANGE_DECISIONS * cfg.substeps() as u32,
                substeps_done: 0,
                start_offset: y - geometry.center(target),
            },
            Fidelity::Complex => ManeuverMode::Tracked {
                path: plan_lane_change((ego.longitudinal_pos, y), source, target, &geometry)
                    .expect("target lane validated above"),
            },
        };
        ego.lane_index = target;
        ego.lateral_offset = y - geometry.center(target);
        ego.lane_change = Some(LaneChange {
            source_lane: source,
            target_lane: target,
            progress: 0.0,
            decision_steps: 0,
            mode,
        });
        false
    }

    fn substep(&mut self) {
        let cfg = self.config;
        let dt = cfg.sim_dt;
        let index = LaneIndex::build(&self.vehicles, cfg.lanes_count);
        let n = self.vehicles.len();

        let accels: Vec<f64> = (0..n)
            .map(|i| {
                let leader = index.leader(&self.vehicles, i).map(|j| &self.vehicles[j]);
                follow_accel(&self.vehicles[i], leader)
            })
            .collect();

        // Traffic lane decisions, evaluated against the pre-move snapshot.
        let mut lane_moves = Vec::new();
        for i in 0..n {
            let v = &self.vehicles[i];
            if v.is_ego || v.lane_change.is_some() || self.sim_time < v.next_lane_decision {
                continue;
            }
            lane_moves.push((i, self.mobil_decision(&index, i, accels[i])));
        }
        for (i, decision) in lane_moves {
            let geometry = cfg.geometry();
            let v = &mut self.vehicles[i];
            match decision.target_lane(v.lane_index, cfg.lanes_count) {
                Some(target) if target != v.lane_index => {
                    let offset = geometry.center(v.lane_index) - geometry.center(target);
                    v.lane_change = Some(LaneChange {
                        source_lane: v.lane_index,
                        target_lane: target,
                        progress: 0.0,
                        decision_steps: 0,
                        mode: ManeuverMode::Linear {
                            substeps_total: (TRAFFIC_LANE_CHANGE_TIME / dt).round().max(1.0) as u32,
                            substeps_done: 0,
                            start_offset: offset,
                        },
                    });
                    v.lane_index = target;
                    v.lateral_offset = offset;
                    v.next_lane_decision = self.sim_time + MOBIL_COOLDOWN;
                }
                _ => v.next_lane_decision = self.sim_time + MOBIL_RECHECK_INTERVAL,
            }
        }

        let complex = cfg.fidelity == Fidelity::Complex;
        for i in 0..n {
            if complex && self.vehicles[i].is_ego {
                self.integrate_complex_ego(i, accels[i]);
                continue;
            }
            let v = &mut self.vehicles[i];
            v.longitudinal_pos += v.speed * dt;
            v.speed = (v.speed + accels[i] * dt).clamp(0.0, cfg.speed_limit);
            advance_linear_maneuver(v);
        }

        self.sim_time += dt;
        let start = self.ego_start;
        self.ego_distance_travelled = self.ego().longitudinal_pos - start;
        self.sort_vehicles();
    }

    fn integrate_complex_ego(&mut self, i: usize, idm_accel_cmd: f64) {
        let cfg = self.config;
        let dt = cfg.sim_dt;
        let geometry = cfg.geometry();
        let disturbance = self.rng.gen_range(-1.0..=1.0) * LATERAL_DISTURBANCE;
        let ctrl = &mut self.ego_controller;
        let v = &mut self.vehicles[i];
        let idm = IdmParams::default();

        // Longitudinal: track the IDM speed reference through a lagged actuator.
        let speed_error = ctrl.speed_reference - v.speed;
        let correction = pid_step(&PidGains::LONGITUDINAL, speed_error, &mut ctrl.longitudinal_pid, dt);
        let accel_cmd = (idm_accel_cmd + correction).clamp(IDM_BRAKE_FLOOR, idm.a_max);
        ctrl.applied_accel += dt * (accel_cmd - ctrl.applied_accel) / LONGITUDINAL_ACTUATOR_LAG;
        ctrl.speed_reference = (v.speed + idm_accel_cmd * dt).clamp(0.0, cfg.speed_limit);
        v.longitudinal_pos += v.speed * dt;
        v.speed = (v.speed + ctrl.applied_accel * dt).clamp(0.0, cfg.speed_limit);

        // Lateral: PID on the offset from the planned path at a short lookahead.
        let y = v.lateral_position(cfg.lane_width);
        let lookahead_x = v.longitudinal_pos + LATERAL_LOOKAHEAD;
        let y_ref = match &v.lane_change {
            Some(LaneChange {
                mode: ManeuverMode::Tracked { path },
                ..
            }) => path.lateral_at(lookahead_x),
            _ => geometry.center(v.lane_index),
        };
        let u = pid_step(&PidGains::LATERAL, y_ref - y, &mut ctrl.lateral_pid, dt);
        let v_lat_cmd = (u * v.speed).clamp(-LATERAL_SPEED_LIMIT, LATERAL_SPEED_LIMIT);
        ctrl.lateral_velocity += dt * (v_lat_cmd - ctrl.lateral_velocity) / LATERAL_ACTUATOR_LAG;
        ctrl.lateral_velocity += disturbance;
        v.lateral_offset += ctrl.lateral_velocity * dt;

        let mut done = false;
        if let Some(lc) = v.lane_change.as_mut() {
            if let ManeuverMode::Tracked { path } = &lc.mode {
                let span = path.x_end() - path.x_start();
                lc.progress = ((v.longitudinal_pos - path.x_start()) / span).clamp(0.0, 1.0);
                done = lookahead_x >= path.x_end() && v.lateral_offset.abs() < LANE_CHANGE_COMPLETION_TOL;
            }
        }
        if done {
            v.lane_change = None;
        }
    }

    /// MOBIL-style lane choice for traffic vehicle `i` given its current
    /// acceleration. Zero politeness; requires 10 m gaps on both sides and a
    /// bounded braking demand on the new follower.
    fn mobil_decision(&self, index: &LaneIndex, i: usize, current_accel: f64) -> Action {
        let v = &self.vehicles[i];
        if v.is_ego || v.lane_change.is_some() {
            return Action::Follow;
        }
        let mut best = (Action::Follow, MOBIL_GAIN_THRESHOLD);
        for action in [Action::LeftLaneChange, Action::RightLaneChange] {
            let Some(target) = action.target_lane(v.lane_index, self.config.lanes_count) else {
                continue;
            };
            let leader = index.ahead(target, v.longitudinal_pos, i).map(|j| &self.vehicles[j]);
            let follower = index.behind(target, v.longitudinal_pos, i).map(|j| &self.vehicles[j]);
            if leader.is_some_and(|l| l.rear() - v.front() <= MOBIL_SAFETY_GAP) {
                continue;
            }
            if follower.is_some_and(|f| v.rear() - f.front() <= MOBIL_SAFETY_GAP) {
                continue;
            }
            if follower.is_some_and(|f| follow_accel(f, Some(v)) < MOBIL_SAFE_BRAKING) {
                continue;
            }
            let gain = follow_accel(v, leader) - current_accel;
            if gain > best.1 {
                best = (action, gain);
            }
        }
        best.0
    }

    /// Acceleration and lane decision the traffic model produces for vehicle
    /// `vehicle_id` in the current world.
    pub fn traffic_policy(&self, vehicle_id: u32) -> Result<(f64, Action)> {
        let i = self
            .vehicles
            .iter()
            .position(|v| v.id == vehicle_id)
            .ok_or_else(|| Error::InvalidInput(format!("no vehicle with id {vehicle_id}")))?;
        if self.vehicles[i].is_ego {
            return Err(Error::InvalidInput("traffic policy queried for the ego".into()));
        }
        let index = LaneIndex::build(&self.vehicles, self.config.lanes_count);
        let leader = index.leader(&self.vehicles, i).map(|j| &self.vehicles[j]);
        let accel = follow_accel(&self.vehicles[i], leader);
        Ok((accel, self.mobil_decision(&index, i, accel)))
    }

    fn detect_collision_now(&self) -> bool {
        let w = self.config.lane_width;
        let ego = self.ego();
        let y = ego.lateral_position(w);
        let half = 0.5 * VEHICLE_WIDTH;
        if y - half < 0.0 || y + half > self.config.geometry().road_width() {
            return true;
        }
        self.vehicles.iter().any(|o| {
            !o.is_ego
                && (o.longitudinal_pos - ego.longitudinal_pos).abs() < 0.5 * (o.length + ego.length)
                && (o.lateral_position(w) - y).abs() < VEHICLE_WIDTH
        })
    }

    /// Collision flag plus bumper-to-bumper gaps to the nearest front and
    /// rear vehicles in the lanes the ego occupies, capped at sensor range.
    pub fn detect_collision(&self) -> StepEvents {
        let cfg = &self.config;
        let collision = self.collided || self.detect_collision_now();
        let ego = self.ego();
        let mut front = cfg.sensor_range;
        let mut rear = cfg.sensor_range;
        for o in self.vehicles.iter().filter(|o| !o.is_ego && o.shares_lane_with(ego)) {
            if o.longitudinal_pos >= ego.longitudinal_pos {
                front = front.min((o.rear() - ego.front()).max(0.0));
            } else {
                rear = rear.min((ego.rear() - o.front()).max(0.0));
            }
        }
        let reached = self.ego_distance_travelled >= cfg.episode_length;
        let success = reached && !collision;
        let timed_out = self.sim_time >= cfg.max_episode_time - 1e-9;
        StepEvents {
            collision,
            min_gap_front: front,
            min_gap_rear: rear,
            episode_done: collision || reached || timed_out,
            success,
            truncated: timed_out && !collision && !reached,
            invalid_command: false,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            sim_time: self.sim_time,
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleSnapshot {
                    id: v.id,
                    lane: v.lane_index,
                    pos: v.longitudinal_pos,
                    speed: v.speed,
                })
                .collect(),
        }
    }

    /// Hash of the full kinematic state, for determinism checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.sim_time.to_bits().hash(&mut h);
        self.decision_steps.hash(&mut h);
        for v in &self.vehicles {
            v.id.hash(&mut h);
            v.lane_index.hash(&mut h);
            v.longitudinal_pos.to_bits().hash(&mut h);
            v.lateral_offset.to_bits().hash(&mut h);
            v.speed.to_bits().hash(&mut h);
            v.lane_change.is_some().hash(&mut h);
        }
        h.finish()
    }
}

fn advance_linear_maneuver(v: &mut VehicleState) {
    let Some(lc) = v.lane_change.as_mut() else {
        return;
    };
    let ManeuverMode::Linear {
        substeps_total,
        substeps_done,
        start_offset,
    } = &mut lc.mode
    else {
        return;
    };
    *substeps_done += 1;
    if *substeps_done >= *substeps_total {
        v.lateral_offset = 0.0;
        v.lane_change = None;
    } else {
        let frac = *substeps_done as f64 / *substeps_total as f64;
        v.lateral_offset = *start_offset * (1.0 - frac);
        lc.progress = frac;
    }
}
