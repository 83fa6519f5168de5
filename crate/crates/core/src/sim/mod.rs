//! Deterministic multi-lane highway simulator with a Simple (kinematic,
//! 2 Hz decisions) and a Complex (spline/PID execution, 20 Hz) fidelity.

mod config;
mod vehicle;
mod world;

pub use config::{Density, Fidelity, SimConfig};
pub use vehicle::{Action, LaneChange, ManeuverMode, VehicleState, VEHICLE_LENGTH, VEHICLE_WIDTH};
pub use world::{EgoController, Snapshot, StepEvents, VehicleSnapshot, WorldState};

/// Spawns a scenario; see [`WorldState::spawn`].
pub fn spawn_scenario(config: SimConfig) -> crate::Result<WorldState> {
    WorldState::spawn(config)
}
