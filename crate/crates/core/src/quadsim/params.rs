use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;
/// Largest accepted relative difference between `Ixx` and `Iyy`.
pub const SYMMETRY_TOL: f64 = 0.2;

/// Airframe and rotor constants. Motor inputs are normalized to
/// `[0, u_max]`; a rotor settles at `Ω = (T1/T2)·u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrotorParams {
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub jr: f64,
    pub b: f64,
    pub d: f64,
    pub l: f64,
    pub t1: f64,
    pub t2: f64,
    pub mass: f64,
    pub u_max: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        QuadrotorParams {
            ixx: 4.1e-3,
            iyy: 4.5e-3,
            izz: 8.0e-3,
            jr: 3.0e-5,
            b: 3.258e-6,
            d: 7.5e-8,
            l: 0.13,
            t1: 12394.4,
            t2: 15.493,
            mass: 0.57,
            u_max: 1.0,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.ixx, self.iyy, self.izz, self.jr, self.b, self.d, self.l, self.t1, self.t2, self.mass, self.u_max,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("quadrotor parameters must be positive".into()));
        }
        if (self.ixx - self.iyy).abs() > SYMMETRY_TOL * self.ixx.max(self.iyy) {
            return Err(Error::InvalidConfig(format!(
                "Ixx {} and Iyy {} differ by more than {}%",
                self.ixx,
                self.iyy,
                SYMMETRY_TOL * 100.0
            )));
        }
        if self.hover_input() >= self.u_max {
            return Err(Error::InvalidConfig("rotors cannot lift the airframe".into()));
        }
        Ok(())
    }

    /// Steady rotor speed per unit input.
    pub fn rotor_gain(&self) -> f64 {
        self.t1 / self.t2
    }

    pub fn hover_speed(&self) -> f64 {
        (self.mass * GRAVITY / (4.0 * self.b)).sqrt()
    }

    pub fn hover_input(&self) -> f64 {
        self.hover_speed() / self.rotor_gain()
    }

    /// Gain `K` of the linearized map from the mixer input `U2` (squared
    /// motor units) to pitch: `θ/U2 = K / (s²(s + T2))`.
    pub fn pitch_gain(&self) -> f64 {
        self.b * self.l * self.rotor_gain() * self.t1 / self.iyy
    }

    pub fn roll_gain(&self) -> f64 {
        self.b * self.l * self.rotor_gain() * self.t1 / self.ixx
    }

    pub fn yaw_gain(&self) -> f64 {
        self.d * self.rotor_gain() * self.t1 / self.izz
    }

    /// Multiplies inertias, thrust factor and rotor constants by independent
    /// factors in `[1 − frac, 1 + frac]`.
    pub fn jittered(&self, frac: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = |k: f64| 1.0 + k * frac * rng.random_range(-1.0..=1.0);
        // roll and pitch inertia move together; the asymmetry varies less
        let frame = f(1.0);
        QuadrotorParams {
            ixx: self.ixx * frame * f(0.25),
            iyy: self.iyy * frame * f(0.25),
            izz: self.izz * f(1.0),
            b: self.b * f(1.0),
            t1: self.t1 * f(1.0),
            t2: self.t2 * f(1.0),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_airframe() {
        let p = QuadrotorParams::default();
        p.validate().unwrap();
        // hover at 570 of 850 g
        assert!((p.hover_input().powi(2) - 0.6706).abs() < 1e-3);
        assert!((p.pitch_gain() - 933.2).abs() < 0.5);
        assert!((p.roll_gain() - 1024.2).abs() < 0.5);
        let bad = QuadrotorParams { ixx: 2.0 * p.iyy, ..p };
        assert!(bad.validate().is_err());
        assert!(QuadrotorParams { b: -1.0, ..p }.validate().is_err());
        let j = p.jittered(0.1, 4);
        assert_ne!(j, p);
        assert_eq!(j, p.jittered(0.1, 4));
        assert!((j.iyy / p.iyy - 1.0).abs() <= 0.1);
    }
}
