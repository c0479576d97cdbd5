//! Bundled reference models: identified plants, uncertainty weights, the
//! sensitivity weight, published controllers and PID gain sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hinf::SynthesisSpec;
use crate::lti::TransferFunction;

pub const WU: f64 = 0.05;
pub const A_PITCH: f64 = 0.88;
pub const A_ROLL: f64 = 0.92;
pub const GAMMA_PITCH: f64 = 0.9929;
pub const GAMMA_ROLL: f64 = 0.9925;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Pitch,
    Roll,
}

impl Axis {
    pub const ALL: [Axis; 2] = [Axis::Pitch, Axis::Roll];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Pitch => "pitch",
            Axis::Roll => "roll",
        }
    }

    pub fn plant(self) -> TransferFunction {
        match self {
            Axis::Pitch => load(G_PITCH),
            Axis::Roll => load(G_ROLL),
        }
    }

    pub fn weight(self) -> TransferFunction {
        match self {
            Axis::Pitch => load(W_PITCH),
            Axis::Roll => load(W_ROLL),
        }
    }

    pub fn a(self) -> f64 {
        match self {
            Axis::Pitch => A_PITCH,
            Axis::Roll => A_ROLL,
        }
    }

    pub fn gamma(self) -> f64 {
        match self {
            Axis::Pitch => GAMMA_PITCH,
            Axis::Roll => GAMMA_ROLL,
        }
    }

    pub fn controller(self) -> TransferFunction {
        match self {
            Axis::Pitch => load(C_PITCH),
            Axis::Roll => load(C_ROLL),
        }
    }

    pub fn reduced_controller(self) -> TransferFunction {
        match self {
            Axis::Pitch => load(C_PITCH_REDUCED),
            Axis::Roll => load(C_ROLL_REDUCED),
        }
    }

    pub fn pid(self) -> PidGains {
        let set = pid_gains();
        match self {
            Axis::Pitch => set.pitch,
            Axis::Roll => set.roll,
        }
    }

    /// Mixed-sensitivity problem with the bundled plant and weights.
    pub fn synthesis_spec(self) -> SynthesisSpec {
        SynthesisSpec::new(self.plant(), ws_unit(), TransferFunction::gain(WU), self.weight(), self.a())
            .expect("bundled specification is valid")
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pitch" => Ok(Axis::Pitch),
            "roll" => Ok(Axis::Roll),
            _ => Err(Error::Parse(format!("unknown axis {s:?}"))),
        }
    }
}

/// Parallel PID `kp + ki/s + kd·n·s/(s + n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub n: f64,
}

impl PidGains {
    pub fn transfer_function(&self) -> Result<TransferFunction> {
        let n = self.n;
        TransferFunction::new(
            vec![self.kp + self.kd * n, self.kp * n + self.ki, self.ki * n],
            vec![1.0, n, 0.0],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGainSet {
    pub pitch: PidGains,
    pub roll: PidGains,
    pub flight: PidGains,
}

const G_PITCH: &str = include_str!("../fixtures/g_pitch.json");
const G_ROLL: &str = include_str!("../fixtures/g_roll.json");
const W_PITCH: &str = include_str!("../fixtures/w_pitch.json");
const W_ROLL: &str = include_str!("../fixtures/w_roll.json");
const WS_UNIT: &str = include_str!("../fixtures/ws_unit.json");
const T_ID: &str = include_str!("../fixtures/t_id.json");
const C_PITCH: &str = include_str!("../fixtures/c_pitch.json");
const C_ROLL: &str = include_str!("../fixtures/c_roll.json");
const C_PITCH_REDUCED: &str = include_str!("../fixtures/c_pitch_reduced.json");
const C_ROLL_REDUCED: &str = include_str!("../fixtures/c_roll_reduced.json");
const PID_GAINS: &str = include_str!("../fixtures/pid_gains.json");

fn load(s: &str) -> TransferFunction {
    serde_json::from_str(s).expect("bundled fixture parses")
}

/// Sensitivity weight for `a = 1`.
pub fn ws_unit() -> TransferFunction {
    load(WS_UNIT)
}

pub fn t_id() -> TransferFunction {
    load(T_ID)
}

pub fn pid_gains() -> PidGainSet {
    serde_json::from_str(PID_GAINS).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hinf::{build_tid, build_ws};

    #[test]
    fn fixtures_load() {
        for axis in Axis::ALL {
            assert_eq!(axis.plant().den().degree(), 3);
            assert!(axis.weight().is_stable(0.0).unwrap());
            assert_eq!(axis.controller().den().degree(), 8);
            assert_eq!(axis.reduced_controller().den().degree(), 6);
            assert_eq!(axis.name().parse::<Axis>().unwrap(), axis);
        }
        assert!((Axis::Pitch.plant().dcgain().unwrap() - 0.7377).abs() < 1e-4);
        assert_eq!(pid_gains().flight.kp, 2.6);
    }

    #[test]
    fn sensitivity_weight_matches_construction() {
        let built = build_ws(&build_tid(0.3, 1e-6).unwrap(), 1.0).unwrap();
        let fixed = build_ws(&t_id(), 1.0).unwrap();
        let unit = ws_unit();
        for w in [0.01, 1.0, 30.0, 1e3] {
            let a = unit.eval_freq(w).unwrap();
            assert!((fixed.eval_freq(w).unwrap() - a).norm() < 1e-9 * a.norm());
            assert!((built.eval_freq(w).unwrap() / a - 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn pid_structure() {
        let g = Axis::Pitch.pid();
        let c = g.transfer_function().unwrap();
        let s = num_complex::Complex64::new(0.0, 2.0);
        let want = g.kp + g.ki / s + g.kd * g.n * s / (s + g.n);
        assert!((c.eval(s).unwrap() - want).norm() < 1e-12 * want.norm());
    }
}
