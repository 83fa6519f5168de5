//! Lane-change path planning for the high-fidelity execution stack.

use serde::{Deserialize, Serialize};

use super::spline::{fit_cubic_spline, CubicSpline};
use crate::error::{Error, Result};

/// Longitudinal distance from the vehicle to the target-lane waypoint, m.
pub const LANE_CHANGE_HORIZON: f64 = 10.0;

/// Straight multi-lane road; lane 0 is the leftmost lane and lateral
/// coordinates grow to the right starting at the left road edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub lanes_count: usize,
    pub lane_width: f64,
}

impl LaneGeometry {
    pub fn center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    pub fn road_width(&self) -> f64 {
        self.lanes_count as f64 * self.lane_width
    }
}

/// A planned maneuver: spline between the start pose and the target-lane
/// waypoint, constant target centerline beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneChangePath {
    pub spline: CubicSpline,
    pub target_lane: usize,
    pub target_y: f64,
}

impl LaneChangePath {
    pub fn x_start(&self) -> f64 {
        self.spline.x_start()
    }

    pub fn x_end(&self) -> f64 {
        self.spline.x_end()
    }

    /// Planned lateral coordinate at longitudinal position `x`.
    pub fn lateral_at(&self, x: f64) -> f64 {
        if x >= self.x_end() {
            self.target_y
        } else if x <= self.x_start() {
            self.spline.value(self.x_start())
        } else {
            self.spline.value(x)
        }
    }

    /// Waypoints the spline was fitted through.
    pub fn waypoints(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.spline.segments().iter().map(|s| (s.x, s.a)).collect();
        pts.push((self.x_end(), self.target_y));
        pts
    }
}

/// Plans a path from pose `(x, y)` to the centerline of `target_lane`,
/// `LANE_CHANGE_HORIZON` meters ahead. A midpoint at half the lateral offset
/// is inserted between the two ends; keeping the current lane yields a
/// single straight segment.
pub fn plan_lane_change(
    pose: (f64, f64),
    current_lane: usize,
    target_lane: usize,
    geometry: &LaneGeometry,
) -> Result<LaneChangePath> {
    if target_lane >= geometry.lanes_count {
        return Err(Error::InvalidInput(format!(
            "target lane {target_lane} does not exist ({} lanes)",
            geometry.lanes_count
        )));
    }
    if current_lane.abs_diff(target_lane) > 1 {
        return Err(Error::InvalidInput(format!(
            "lane change {current_lane} -> {target_lane} is not to an adjacent lane"
        )));
    }
    let (x0, y0) = pose;
    let target_y = geometry.center(target_lane);
    let x1 = x0 + LANE_CHANGE_HORIZON;
    let knots: Vec<(f64, f64)> = if current_lane == target_lane {
        vec![(x0, y0), (x1, target_y)]
    } else {
        vec![(x0, y0), (x0 + 0.5 * LANE_CHANGE_HORIZON, 0.5 * (y0 + target_y)), (x1, target_y)]
    };
    Ok(LaneChangePath {
        spline: fit_cubic_spline(&knots)?,
        target_lane,
        target_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEOM: LaneGeometry = LaneGeometry {
        lanes_count: 3,
        lane_width: 3.75,
    };

    #[test]
    fn end_waypoint_is_target_centerline_ten_meters_ahead() {
        let path = plan_lane_change((100.0, GEOM.center(1)), 1, 0, &GEOM).unwrap();
        let end = *path.waypoints().last().unwrap();
        assert_eq!(end, (110.0, GEOM.center(0)));
        assert_eq!((GEOM.center(1) - GEOM.center(0)), 3.75);
    }

    #[test]
    fn same_lane_is_single_straight_segment() {
        let path = plan_lane_change((5.0, GEOM.center(2)), 2, 2, &GEOM).unwrap();
        assert_eq!(path.spline.segments().len(), 1);
        let seg = path.spline.segments()[0];
        assert_eq!(seg.b, 0.0);
        assert_eq!(seg.c, 0.0);
        assert_eq!(seg.d, 0.0);
    }

    #[test]
    fn rejects_non_adjacent_or_missing_lane() {
        assert!(plan_lane_change((0.0, GEOM.center(0)), 0, 2, &GEOM).is_err());
        assert!(plan_lane_change((0.0, GEOM.center(2)), 2, 3, &GEOM).is_err());
    }

    #[test]
    fn heading_stays_bounded() {
        for (from, to) in [(1, 0), (1, 2), (0, 1), (2, 1)] {
            let path = plan_lane_change((0.0, GEOM.center(from)), from, to, &GEOM).unwrap();
            let n = 1000;
            for k in 0..=n {
                let x = 10.0 * k as f64 / n as f64;
                assert!(path.spline.slope(x).abs() < 0.8);
            }
        }
    }
}
