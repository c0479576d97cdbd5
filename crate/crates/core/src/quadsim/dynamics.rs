use serde::{Deserialize, Serialize};

use super::params::QuadrotorParams;
use crate::error::{Error, Result};

pub const STATE_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttitudeState {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub phi_dot: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub omega_rotors: [f64; 4],
}

impl AttitudeState {
    /// Level attitude with all rotors at hover speed.
    pub fn hover(p: &QuadrotorParams) -> Self {
        AttitudeState {
            omega_rotors: [p.hover_speed(); 4],
            ..Default::default()
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let o = self.omega_rotors;
        [self.phi, self.theta, self.psi, self.phi_dot, self.theta_dot, self.psi_dot, o[0], o[1], o[2], o[3]]
    }

    pub fn from_array(x: &[f64; STATE_DIM]) -> Self {
        AttitudeState {
            phi: x[0],
            theta: x[1],
            psi: x[2],
            phi_dot: x[3],
            theta_dot: x[4],
            psi_dot: x[5],
            omega_rotors: [x[6], x[7], x[8], x[9]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of the attitude and rotor state for motor inputs `u`.
pub fn quad_dynamics(s: &AttitudeState, u: &[f64; 4], p: &QuadrotorParams) -> Result<AttitudeState> {
    if !s.is_finite() || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let [w1, w2, w3, w4] = s.omega_rotors;
    let wr = w1 + w3 - w2 - w4;
    let (pd, td, yd) = (s.phi_dot, s.theta_dot, s.psi_dot);
    let phi_dd = p.jr * td * wr / p.ixx + (p.iyy - p.izz) / p.ixx * yd * td + p.b * p.l * (w2 * w2 - w4 * w4) / p.ixx;
    let theta_dd =
        -p.jr * pd * wr / p.iyy + (p.izz - p.ixx) / p.iyy * yd * pd + p.b * p.l * (w3 * w3 - w1 * w1) / p.iyy;
    let psi_dd = p.d * (w1 * w1 + w3 * w3 - w2 * w2 - w4 * w4) / p.izz + (p.ixx - p.iyy) / p.izz * td * pd;
    let mut omega_dot = [0.0; 4];
    for i in 0..4 {
        omega_dot[i] = p.t1 * u[i] - p.t2 * s.omega_rotors[i];
    }
    Ok(AttitudeState {
        phi: pd,
        theta: td,
        psi: yd,
        phi_dot: phi_dd,
        theta_dot: theta_dd,
        psi_dot: psi_dd,
        omega_rotors: omega_dot,
    })
}

/// One classical Runge–Kutta step of `ẋ = f(x)`.
pub fn rk4_step<const N: usize, F>(x: &[f64; N], dt: f64, mut f: F) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let add = |a: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        let mut r = *a;
        for i in 0..N {
            r[i] += h * k[i];
        }
        r
    };
    let k1 = f(x)?;
    let k2 = f(&add(x, &k1, dt / 2.0))?;
    let k3 = f(&add(x, &k2, dt / 2.0))?;
    let k4 = f(&add(x, &k3, dt))?;
    let mut r = *x;
    for i in 0..N {
        r[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(r)
}

pub fn step_attitude(s: &AttitudeState, u: &[f64; 4], p: &QuadrotorParams, dt: f64) -> Result<AttitudeState> {
    let x = rk4_step(&s.to_array(), dt, |x| {
        Ok(quad_dynamics(&AttitudeState::from_array(x), u, p)?.to_array())
    })?;
    Ok(AttitudeState::from_array(&x))
}
