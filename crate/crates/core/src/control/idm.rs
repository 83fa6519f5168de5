//! Intelligent Driver Model car-following law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard floor on commanded deceleration, m/s². Unbounded IDM braking at
/// tiny gaps destabilizes fixed-step integration.
pub const IDM_BRAKE_FLOOR: f64 = -9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Acceleration exponent ζ.
    pub zeta: f64,
    /// Desired speed v0, m/s.
    pub v0: f64,
    /// Desired time headway T, s.
    pub time_gap: f64,
    /// Jam distance s0, m.
    pub s0: f64,
    /// Maximum acceleration a, m/s².
    pub a_max: f64,
    /// Comfortable deceleration b, m/s².
    pub b_comf: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            zeta: 4.0,
            v0: 25.0,
            time_gap: 0.6,
            s0: 2.0,
            a_max: 2.0,
            b_comf: 2.0,
        }
    }
}

impl IdmParams {
    pub fn with_desired_speed(self, v0: f64) -> Self {
        Self { v0, ..self }
    }

    /// Dynamic desired gap s*(v, Δv), clipped at zero.
    pub fn desired_gap(&self, v: f64, v_lead: f64) -> f64 {
        let dyn_term = v * (v - v_lead) / (2.0 * (self.a_max * self.b_comf).sqrt());
        (self.s0 + v * self.time_gap + dyn_term).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.zeta, self.v0, self.time_gap, self.s0, self.a_max, self.b_comf];
        if all.iter().all(|p| p.is_finite() && *p > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("IDM parameters must be positive: {self:?}")))
        }
    }
}

/// Unclamped IDM acceleration. `gap` is the bumper-to-bumper distance to the
/// leader; pass `f64::INFINITY` (with `v_lead = v`) when there is no leader.
pub fn idm_accel_raw(v: f64, v_lead: f64, gap: f64, p: &IdmParams) -> Result<f64> {
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::InvalidInput(format!("IDM gap must be positive, got {gap}")));
    }
    let free = 1.0 - (v / p.v0).powf(p.zeta);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        let ratio = p.desired_gap(v, v_lead) / gap;
        ratio * ratio
    };
    Ok(p.a_max * (free - interaction))
}

/// IDM acceleration limited to `[IDM_BRAKE_FLOOR, a_max]`.
pub fn idm_accel(v: f64, v_lead: f64, gap: f64, p: &IdmParams) -> Result<f64> {
    Ok(idm_accel_raw(v, v_lead, gap, p)?.clamp(IDM_BRAKE_FLOOR, p.a_max))
}
