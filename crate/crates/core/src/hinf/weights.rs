use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, TransferFunction};

/// `t_s ≈ k/(ζωn)`; 4.6 is the 1% band rule.
pub const SETTLING_CONSTANT: f64 = 4.6;
pub const MIN_DAMPING: f64 = 0.01;
/// Non-dominant pole inserted into the sensitivity weight.
pub const WS_FAST_POLE: f64 = 1000.0;
/// Replaces the integrator of the ideal inverse sensitivity.
pub const WS_SLOW_POLE: f64 = 0.001;

/// Damping ratio giving peak overshoot `mp` (fraction).
pub fn damping_from_overshoot(mp: f64) -> f64 {
    let l = mp.ln().abs();
    l / (PI * PI + l * l).sqrt()
}

/// Ideal second-order closed loop for settling time `ts` and overshoot `mp`.
pub fn build_tid(ts: f64, mp: f64) -> Result<TransferFunction> {
    build_tid_with(ts, mp, SETTLING_CONSTANT)
}

pub fn build_tid_with(ts: f64, mp: f64, settling_constant: f64) -> Result<TransferFunction> {
    if !(mp > 0.0 && mp < 1.0) || !(ts > 0.0 && ts.is_finite()) || !(settling_constant > 0.0) {
        return Err(Error::InvalidSpec(format!("ts {ts}, mp {mp}")));
    }
    let zeta = damping_from_overshoot(mp);
    if zeta < MIN_DAMPING {
        return Err(Error::InvalidSpec(format!("damping {zeta} below {MIN_DAMPING}")));
    }
    let wn = settling_constant / (zeta * ts);
    TransferFunction::new(vec![wn * wn], vec![1.0, 2.0 * zeta * wn, wn * wn])
}

/// `a/(1 − T_id)` with the integrator moved to `−0.001` and a roll-off pole
/// at `−1000` (unit high-frequency factor `(s/1000 + 1)`).
pub fn build_ws(tid: &TransferFunction, a: f64) -> Result<TransferFunction> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidSpec(format!("a = {a} outside (0, 1]")));
    }
    let den = tid.den();
    if den.degree() != 2 {
        return Err(Error::InvalidSpec("ideal loop must be second order".into()));
    }
    let c1 = den.coeffs()[1];
    let num = den.scale(a * WS_FAST_POLE);
    let d = &(&Polynomial::new(vec![1.0, WS_FAST_POLE]) * &Polynomial::new(vec![1.0, c1]))
        * &Polynomial::new(vec![1.0, WS_SLOW_POLE]);
    TransferFunction::from_polys(num, d)
}

/// Weights and plant for the mixed-sensitivity problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub plant: TransferFunction,
    pub ws: TransferFunction,
    pub wu: TransferFunction,
    pub wt: TransferFunction,
    pub a: f64,
}

impl SynthesisSpec {
    /// `ws_unit` is the sensitivity weight for `a = 1`; it is scaled by `a`.
    pub fn new(plant: TransferFunction, ws_unit: TransferFunction, wu: TransferFunction, wt: TransferFunction, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidSpec(format!("a = {a}")));
        }
        let spec = SynthesisSpec {
            plant,
            ws: ws_unit.scale(a),
            wu,
            wt,
            a,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Sensitivity weight built from the ideal closed loop.
    pub fn from_tid(plant: TransferFunction, tid: &TransferFunction, wu: f64, wt: TransferFunction, a: f64) -> Result<Self> {
        let ws = build_ws(tid, a)?;
        let spec = SynthesisSpec {
            plant,
            ws,
            wu: TransferFunction::gain(wu),
            wt,
            a,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.plant.is_proper() {
            return Err(Error::InvalidSpec("plant is improper".into()));
        }
        for (name, w) in [("Ws", &self.ws), ("Wt", &self.wt), ("Wu", &self.wu)] {
            if !w.is_proper() {
                return Err(Error::InvalidSpec(format!("{name} is improper")));
            }
            if w.den().degree() > 0 && !w.is_stable(0.0)? {
                return Err(Error::InvalidSpec(format!("{name} is unstable")));
            }
        }
        Ok(())
    }
}
