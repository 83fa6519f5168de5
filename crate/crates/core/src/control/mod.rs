//! Low-level execution stack: spline lane-change paths, IDM longitudinal
//! law, and PID tracking.

pub mod idm;
pub mod pid;
pub mod planner;
pub mod spline;

pub use idm::{idm_accel, idm_accel_raw, IdmParams, IDM_BRAKE_FLOOR};
pub use pid::{pid_step, PidGains, PidState};
pub use planner::{plan_lane_change, LaneChangePath, LaneGeometry, LANE_CHANGE_HORIZON};
pub use spline::{fit_cubic_spline, CubicSpline, SplineSegment};
