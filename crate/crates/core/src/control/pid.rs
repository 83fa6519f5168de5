use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Symmetric bound on the accumulated integral ∫e·dt.
    pub integral_clamp: f64,
}

impl PidGains {
    /// Lateral tracking gains.
    pub const LATERAL: PidGains = PidGains {
        kp: 0.75,
        ki: 0.2,
        kd: 0.01,
        integral_clamp: 2.0,
    };

    /// Longitudinal speed-tracking gains.
    pub const LONGITUDINAL: PidGains = PidGains {
        kp: 0.37,
        ki: 0.016,
        kd: 0.012,
        integral_clamp: 10.0,
    };
}

/// Integral and previous-error memory of one controller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
}

impl PidState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// One controller update: `kp·e + ki·∫e·dt + kd·Δe/dt`. A fresh state has
/// `prev_error = 0`, so the first derivative term is `e/dt`.
pub fn pid_step(gains: &PidGains, error: f64, state: &mut PidState, dt: f64) -> f64 {
    debug_assert!(dt > 0.0, "pid_step needs dt > 0");
    state.integral = (state.integral + error * dt).clamp(-gains.integral_clamp, gains.integral_clamp);
    let derivative = (error - state.prev_error) / dt;
    state.prev_error = error;
    gains.kp * error + gains.ki * state.integral + gains.kd * derivative
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_zero_output() {
        let mut st = PidState::default();
        for _ in 0..10 {
            assert_eq!(pid_step(&PidGains::LATERAL, 0.0, &mut st, 0.05), 0.0);
        }
    }

    #[test]
    fn first_step_closed_form() {
        let g = PidGains::LATERAL;
        let mut st = PidState::default();
        let (e, dt) = (0.3, 0.05);
        let out = pid_step(&g, e, &mut st, dt);
        let expected = g.kp * e + g.ki * e * dt + g.kd * e / dt;
        assert!((out - expected).abs() < 1e-15);
    }

    #[test]
    fn integral_is_clamped() {
        let g = PidGains::LATERAL;
        let mut st = PidState::default();
        for _ in 0..10_000 {
            pid_step(&g, 5.0, &mut st, 0.05);
        }
        assert_eq!(st.integral, g.integral_clamp);
    }

    #[test]
    fn first_order_lag_plant_converges() {
        // Lateral plant: position integrates a velocity that lags the command
        // through a first-order actuator, v' = (u - v) / tau_p.
        let g = PidGains::LATERAL;
        let dt = 0.05;
        let tau_p = 0.2;
        let mut st = PidState::default();
        let (mut x, mut v) = (0.0, 0.0);
        let mut max_abs: f64 = 0.0;
        for _ in 0..200 {
            let e = 1.0 - x;
            let u = pid_step(&g, e, &mut st, dt);
            v += dt * (u - v) / tau_p;
            x += dt * v;
            max_abs = max_abs.max(x.abs());
        }
        assert!(max_abs < 2.0, "diverged: {max_abs}");
        assert!((1.0 - x).abs() < 0.05, "residual error {}", 1.0 - x);
    }
}
