use serde::{Deserialize, Serialize};

pub use crate::fixtures::PidGains;

/// Back-calculation tracking time constant.
pub const TRACKING_TIME: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub derivative: f64,
    pub prev_error: f64,
}

/// One sample of the parallel PID with a filtered derivative (pole `n`,
/// backward Euler). Returns the unsaturated output and the new state.
pub fn pid_step(g: &PidGains, error: f64, s: &PidState, dt: f64) -> (f64, PidState) {
    let integral = s.integral + error * dt;
    let derivative = if g.kd == 0.0 {
        0.0
    } else {
        (s.derivative + g.kd * g.n * (error - s.prev_error)) / (1.0 + g.n * dt)
    };
    let u = g.kp * error + g.ki * integral + derivative;
    (
        u,
        PidState {
            integral,
            derivative,
            prev_error: error,
        },
    )
}

/// PID with optional output limits and back-calculation anti-windup.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    pub gains: PidGains,
    pub limits: Option<(f64, f64)>,
    pub state: PidState,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        PidController {
            gains,
            limits: None,
            state: PidState::default(),
        }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.limits = Some((lo, hi));
        self
    }

    /// `clipped` reports downstream saturation from the last sample; the
    /// integrator is then held.
    pub fn step(&mut self, error: f64, dt: f64, clipped: bool) -> f64 {
        let before = self.state.integral;
        let (u, mut next) = pid_step(&self.gains, error, &self.state, dt);
        let mut out = u;
        if let Some((lo, hi)) = self.limits {
            out = u.clamp(lo, hi);
            if out != u && self.gains.ki > 0.0 {
                next.integral += (out - u) * dt / (self.gains.ki * TRACKING_TIME);
            }
        }
        if clipped {
            next.integral = before;
        }
        self.state = next;
        out
    }
}

/// Inner attitude loop `v = kp·(β·r − θ) − kd·θ̇`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
    pub beta: f64,
}

impl PdGains {
    pub fn output(&self, reference: f64, angle: f64, rate: f64) -> f64 {
        self.kp * (self.beta * reference - angle) - self.kd * rate
    }
}

/// Inner-loop gains for all three axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerLoop {
    pub roll: PdGains,
    pub pitch: PdGains,
    pub yaw: PdGains,
}

impl Default for InnerLoop {
    fn default() -> Self {
        InnerLoop {
            roll: PdGains {
                kp: 2.8149,
                kd: 0.47382,
                beta: 0.71104,
            },
            pitch: PdGains {
                kp: 2.2478,
                kd: 0.47662,
                beta: 0.73770,
            },
            yaw: PdGains {
                kp: 10.0,
                kd: 4.0,
                beta: 1.0,
            },
        }
    }
}
