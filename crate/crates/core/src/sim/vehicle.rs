use serde::{Deserialize, Serialize};

use crate::control::LaneChangePath;

pub const VEHICLE_LENGTH: f64 = 5.0;
pub const VEHICLE_WIDTH: f64 = 2.0;

/// High-level driving command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Follow = 0,
    LeftLaneChange = 1,
    RightLaneChange = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Follow, Action::LeftLaneChange, Action::RightLaneChange];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Lane reached by this command from `lane`, if it exists on a road with
    /// `lanes_count` lanes. Lane 0 is leftmost.
    pub fn target_lane(self, lane: usize, lanes_count: usize) -> Option<usize> {
        match self {
            Action::Follow => Some(lane),
            Action::LeftLaneChange => lane.checked_sub(1),
            Action::RightLaneChange => (lane + 1 < lanes_count).then_some(lane + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ManeuverMode {
    /// Lateral offset shrinks linearly to zero over a fixed number of substeps.
    Linear {
        substeps_total: u32,
        substeps_done: u32,
        start_offset: f64,
    },
    /// Lateral motion tracks a planned spline through the PID loop.
    Tracked { path: LaneChangePath },
}

/// An in-progress lane change. `lane_index` of the vehicle already points at
/// the target lane; the vehicle still physically occupies `source_lane`
/// until the maneuver completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    pub source_lane: usize,
    pub target_lane: usize,
    pub progress: f64,
    pub decision_steps: u32,
    pub mode: ManeuverMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub longitudinal_pos: f64,
    pub lane_index: usize,
    pub lateral_offset: f64,
    pub speed: f64,
    pub target_speed: f64,
    pub length: f64,
    pub is_ego: bool,
    pub lane_change: Option<LaneChange>,
    /// Next simulated time at which a traffic vehicle reconsiders its lane.
    pub next_lane_decision: f64,
}

impl VehicleState {
    /// Lanes the vehicle body may overlap: its lane plus the source lane of
    /// an ongoing maneuver.
    pub fn occupied_lanes(&self) -> (usize, Option<usize>) {
        match &self.lane_change {
            Some(lc) if lc.source_lane != self.lane_index => (self.lane_index, Some(lc.source_lane)),
            _ => (self.lane_index, None),
        }
    }

    pub fn occupies(&self, lane: usize) -> bool {
        let (a, b) = self.occupied_lanes();
        a == lane || b == Some(lane)
    }

    pub fn shares_lane_with(&self, other: &VehicleState) -> bool {
        let (a, b) = self.occupied_lanes();
        other.occupies(a) || b.is_some_and(|l| other.occupies(l))
    }

    /// Absolute lateral coordinate of the vehicle center.
    pub fn lateral_position(&self, lane_width: f64) -> f64 {
        (self.lane_index as f64 + 0.5) * lane_width + self.lateral_offset
    }

    pub fn front(&self) -> f64 {
        self.longitudinal_pos + 0.5 * self.length
    }

    pub fn rear(&self) -> f64 {
        self.longitudinal_pos - 0.5 * self.length
    }
}
