use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorCommands {
    pub u: [f64; 4],
    pub clipped: bool,
}

/// Squared motor inputs for `U1 = u4² − u2²`, `U2 = u3² − u1²`,
/// `U3 = u1² + u3² − u2² − u4²` and `Σuᵢ² = 4·bias²`.
pub fn squared_inputs(u1: f64, u2: f64, u3: f64, thrust_bias: f64) -> [f64; 4] {
    let total = 4.0 * thrust_bias * thrust_bias;
    let s13 = (total + u3) / 2.0;
    let s24 = (total - u3) / 2.0;
    [(s13 - u2) / 2.0, (s24 - u1) / 2.0, (s13 + u2) / 2.0, (s24 + u1) / 2.0]
}

/// Inverts the allocation map; fails when a square would be negative.
pub fn mixer(u1: f64, u2: f64, u3: f64, thrust_bias: f64, u_max: f64) -> Result<MotorCommands> {
    let sq = squared_inputs(u1, u2, u3, thrust_bias);
    if let Some(i) = sq.iter().position(|&v| v < 0.0) {
        return Err(Error::InfeasibleAllocation(format!("motor {} needs u² = {:.4}", i + 1, sq[i])));
    }
    Ok(clip(sq, u_max, false))
}

/// As [`mixer`], but negative squares are clipped to zero and flagged.
pub fn mixer_saturating(u1: f64, u2: f64, u3: f64, thrust_bias: f64, u_max: f64) -> MotorCommands {
    let sq = squared_inputs(u1, u2, u3, thrust_bias);
    let neg = sq.iter().any(|&v| v < 0.0);
    clip(sq.map(|v| v.max(0.0)), u_max, neg)
}

fn clip(sq: [f64; 4], u_max: f64, mut clipped: bool) -> MotorCommands {
    let mut u = [0.0; 4];
    for i in 0..4 {
        let v = sq[i].sqrt();
        if v > u_max {
            clipped = true;
            u[i] = u_max;
        } else {
            u[i] = v;
        }
    }
    MotorCommands { u, clipped }
}
