use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{step_attitude, AttitudeState};
use super::mixer::mixer_saturating;
use super::params::QuadrotorParams;
use super::pid::{InnerLoop, PidController, PidGains};
use crate::error::{Error, Result};
use crate::fixtures::Axis;
use crate::lti::{StateSpace, TimeSeries, TransferFunction};
use crate::sysid::ChirpConfig;

/// Sample period of both controllers.
pub const CONTROL_PERIOD: f64 = 1e-3;
pub const DIVERGENCE_ANGLE: f64 = std::f64::consts::FRAC_PI_2;
pub const CASCADE_CHANNELS: [&str; 8] = [
    "reference",
    "angle",
    "measured",
    "inner_u",
    "outer_u",
    "disturbance",
    "coupled_angle",
    "coupled_measured",
];

/// Reference for the controlled angle (radians; chirp amplitudes in degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Reference {
    Zero,
    Step { amplitude: f64, time: f64 },
    Chirp { config: ChirpConfig },
}

impl Reference {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Reference::Zero => 0.0,
            Reference::Step { amplitude, time } => {
                if t >= *time {
                    *amplitude
                } else {
                    0.0
                }
            }
            Reference::Chirp { config } => config.value_at(t).to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceMode {
    /// Added to the plant input.
    #[default]
    Input,
    /// Added to the controlled angle.
    Output,
}

/// Rectangular pulse, or a step when `duration` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub amplitude: f64,
    pub start: f64,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub mode: DisturbanceMode,
}

impl Disturbance {
    pub fn value_at(&self, t: f64) -> f64 {
        let on = t >= self.start && self.duration.is_none_or(|d| t < self.start + d);
        if on {
            self.amplitude
        } else {
            0.0
        }
    }
}

/// Uniform measurement noise in `[−bound, bound]` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub bound: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub reference: Reference,
    #[serde(default)]
    pub disturbance: Option<Disturbance>,
    #[serde(default)]
    pub noise: Option<Noise>,
    pub duration: f64,
    pub dt: f64,
}

impl Scenario {
    pub fn step(amplitude: f64, duration: f64) -> Self {
        Scenario {
            reference: Reference::Step { amplitude, time: 0.0 },
            disturbance: None,
            noise: None,
            duration,
            dt: CONTROL_PERIOD,
        }
    }

    /// Unit step, a 0.1 input step at 2 s and 0.02 rad noise.
    pub fn disturbed_step(seed: u64) -> Self {
        Scenario {
            reference: Reference::Step {
                amplitude: 1.0,
                time: 0.0,
            },
            disturbance: Some(Disturbance {
                amplitude: 0.1,
                start: 2.0,
                duration: None,
                mode: DisturbanceMode::Input,
            }),
            noise: Some(Noise { bound: 0.02, seed }),
            duration: 5.0,
            dt: CONTROL_PERIOD,
        }
    }

    /// Simulation steps per controller sample.
    pub fn substeps(&self) -> Result<usize> {
        let r = CONTROL_PERIOD / self.dt;
        let k = r.round();
        if !(self.dt > 0.0) || k < 1.0 || (r - k).abs() > 1e-9 * r {
            return Err(Error::InvalidConfig(format!(
                "dt {} must divide the {} s controller period",
                self.dt, CONTROL_PERIOD
            )));
        }
        Ok(k as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.substeps()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!("duration {}", self.duration)));
        }
        if let Some(n) = self.noise {
            if !(n.bound >= 0.0) {
                return Err(Error::InvalidConfig("noise bound must be nonnegative".into()));
            }
        }
        if let Reference::Chirp { config } = &self.reference {
            config.validate_amplitude((0.0, 90.0))?;
        }
        Ok(())
    }

    pub fn ticks(&self) -> usize {
        (self.duration / CONTROL_PERIOD).round() as usize
    }
}

/// Outer-loop controller acting on `e = r − y_measured`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outer {
    /// Discrete realization with sample time [`CONTROL_PERIOD`].
    Discrete { controller: StateSpace },
    Pid { gains: PidGains },
    /// Reference passed straight to the plant input.
    Direct,
}

impl Outer {
    pub fn discrete(controller: StateSpace) -> Result<Self> {
        match controller.dt {
            Some(dt) if (dt - CONTROL_PERIOD).abs() <= 1e-12 => {}
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "outer controller sample time {:?}, expected {}",
                    controller.dt, CONTROL_PERIOD
                )))
            }
        }
        if !controller.is_siso() {
            return Err(Error::Dimension("outer controller must be SISO".into()));
        }
        Ok(Outer::Discrete { controller })
    }
}

enum OuterState<'a> {
    Discrete { sys: &'a StateSpace, x: DVector<f64> },
    Pid(PidController),
    Direct,
}

impl OuterState<'_> {
    fn step(&mut self, r: f64, e: f64, clipped: bool) -> f64 {
        match self {
            OuterState::Discrete { sys, x } => {
                let u = (&sys.c * &*x)[0] + sys.d[(0, 0)] * e;
                *x = &sys.a * &*x + sys.b.column(0) * e;
                u
            }
            OuterState::Pid(c) => c.step(e, CONTROL_PERIOD, clipped),
            OuterState::Direct => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Plant {
    /// Closed inner loop as a transfer function from inner reference to angle.
    Linear { model: TransferFunction },
    /// Full attitude dynamics under the inner PD loops; `axis` is the one
    /// driven by the outer loop, the others are regulated to zero.
    Nonlinear {
        params: QuadrotorParams,
        inner: InnerLoop,
        axis: Axis,
    },
}

enum PlantState {
    Linear { sys: StateSpace, x: Vec<f64> },
    Nonlinear { params: QuadrotorParams, inner: InnerLoop, axis: Axis, s: AttitudeState },
}

impl PlantState {
    fn new(p: &Plant) -> Result<Self> {
        Ok(match p {
            Plant::Linear { model } => {
                if model.is_discrete() {
                    return Err(Error::InvalidConfig("plant must be continuous".into()));
                }
                if !model.is_strictly_proper() {
                    return Err(Error::InvalidConfig("plant must be strictly proper".into()));
                }
                let sys = model.to_ss()?;
                let n = sys.order();
                PlantState::Linear { sys, x: vec![0.0; n] }
            }
            Plant::Nonlinear { params, inner, axis } => {
                params.validate()?;
                PlantState::Nonlinear {
                    params: *params,
                    inner: *inner,
                    axis: *axis,
                    s: AttitudeState::hover(params),
                }
            }
        })
    }

    /// `(controlled angle, coupled angle)` without measurement noise.
    fn angles(&self) -> (f64, f64) {
        match self {
            PlantState::Linear { sys, x } => {
                let y = (0..x.len()).map(|i| sys.c[(0, i)] * x[i]).sum();
                (y, 0.0)
            }
            PlantState::Nonlinear { axis, s, .. } => match axis {
                Axis::Pitch => (s.theta, s.phi),
                Axis::Roll => (s.phi, s.theta),
            },
        }
    }
}

/// Fixed-step simulation of the cascade. Controllers run at 1 kHz with
/// zero-order hold; the plant is integrated with RK4 at `scenario.dt`.
///
/// Logged every controller sample (angles in radians): see
/// [`CASCADE_CHANNELS`]. `inner_u` is the plant input (inner reference plus
/// input disturbance).
pub fn cascade_sim(outer: &Outer, plant: &Plant, scenario: &Scenario) -> Result<TimeSeries> {
    scenario.validate()?;
    let sub = scenario.substeps()?;
    let h = scenario.dt;
    let mut ps = PlantState::new(plant)?;
    let mut os = match outer {
        Outer::Discrete { controller } => {
            let _ = Outer::discrete(controller.clone())?;
            OuterState::Discrete {
                sys: controller,
                x: DVector::zeros(controller.order()),
            }
        }
        Outer::Pid { gains } => OuterState::Pid(PidController::new(*gains)),
        Outer::Direct => OuterState::Direct,
    };
    let mut rng = scenario.noise.map(|n| (n.bound, ChaCha8Rng::seed_from_u64(n.seed)));
    let mut noise = move || match rng.as_mut() {
        Some((b, r)) if *b > 0.0 => r.random_range(-*b..=*b),
        _ => 0.0,
    };
    let n = scenario.ticks();
    let mut log: Vec<Vec<f64>> = vec![Vec::with_capacity(n); CASCADE_CHANNELS.len()];
    let mut clipped = false;
    for k in 0..n {
        let t = k as f64 * CONTROL_PERIOD;
        let r = scenario.reference.value_at(t);
        let (d_in, d_out) = match scenario.disturbance {
            Some(d) => match d.mode {
                DisturbanceMode::Input => (d.value_at(t), 0.0),
                DisturbanceMode::Output => (0.0, d.value_at(t)),
            },
            None => (0.0, 0.0),
        };
        let (y0, c0) = ps.angles();
        let y = y0 + d_out;
        if !y.is_finite() || !c0.is_finite() {
            return Err(Error::NonFiniteState);
        }
        if y.abs() > DIVERGENCE_ANGLE || c0.abs() > DIVERGENCE_ANGLE {
            return Err(Error::Diverged(t));
        }
        let ym = y + noise();
        let cm = c0 + noise();
        let u_outer = os.step(r, r - ym, clipped);
        let u_plant = u_outer + d_in;
        for (ch, v) in log.iter_mut().zip([r, y, ym, u_plant, u_outer, d_in + d_out, c0, cm]) {
            ch.push(v);
        }
        match &mut ps {
            PlantState::Linear { sys, x } => {
                for _ in 0..sub {
                    *x = linear_rk4(sys, x, u_plant, h)?;
                }
            }
            PlantState::Nonlinear { params, inner, axis, s } => {
                let yaw = inner.yaw.output(0.0, s.psi, s.psi_dot);
                let (v_roll, v_pitch) = match axis {
                    Axis::Pitch => (
                        inner.roll.output(0.0, cm, s.phi_dot),
                        inner.pitch.output(u_plant, ym - d_out, s.theta_dot),
                    ),
                    Axis::Roll => (
                        inner.roll.output(u_plant, ym - d_out, s.phi_dot),
                        inner.pitch.output(0.0, cm, s.theta_dot),
                    ),
                };
                // U1 raises u4 while the roll torque grows with Ω2² − Ω4²
                let m = mixer_saturating(-v_roll, v_pitch, yaw, params.hover_input(), params.u_max);
                clipped = m.clipped;
                for _ in 0..sub {
                    *s = step_attitude(s, &m.u, params, h)?;
                }
            }
        }
    }
    let mut ts = TimeSeries::new(CONTROL_PERIOD)?;
    for (name, ch) in CASCADE_CHANNELS.iter().zip(log) {
        ts.push_channel(name, ch)?;
    }
    Ok(ts)
}

fn linear_rk4(sys: &StateSpace, x: &[f64], u: f64, h: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let f = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| sys.a[(i, j)] * x[j]).sum::<f64>() + sys.b[(i, 0)] * u)
            .collect()
    };
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    let k1 = f(x);
    let k2 = f(&axpy(x, &k1, h / 2.0));
    let k3 = f(&axpy(x, &k2, h / 2.0));
    let k4 = f(&axpy(x, &k3, h));
    let out: Vec<f64> = (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(out)
}

/// Linearization about hover of the inner loop on `axis`:
/// `K·kp·β / (s³ + T2·s² + K·kd·s + K·kp)`.
pub fn inner_loop_model(params: &QuadrotorParams, inner: &InnerLoop, axis: Axis) -> Result<TransferFunction> {
    let (k, g) = match axis {
        Axis::Pitch => (params.pitch_gain(), inner.pitch),
        Axis::Roll => (params.roll_gain(), inner.roll),
    };
    TransferFunction::new(
        vec![k * g.kp * g.beta],
        vec![1.0, params.t2, k * g.kd, k * g.kp],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{c2d_tustin, StepMetrics};

    fn nonlinear(axis: Axis) -> Plant {
        Plant::Nonlinear {
            params: QuadrotorParams::default(),
            inner: InnerLoop::default(),
            axis,
        }
    }

    fn metrics(outer: &Outer, plant: &Plant, amp: f64) -> StepMetrics {
        let ts = cascade_sim(outer, plant, &Scenario::step(amp, 4.0)).unwrap();
        StepMetrics::compute(ts.dt(), ts.require("angle").unwrap(), amp).unwrap()
    }

    #[test]
    fn pitch_inner_loop_matches_identified_model() {
        let m = inner_loop_model(&QuadrotorParams::default(), &InnerLoop::default(), Axis::Pitch).unwrap();
        let g = Axis::Pitch.plant();
        for (a, b) in m.den().coeffs().iter().zip(g.den().coeffs()) {
            assert!((a - b).abs() < 1e-3 * b.abs(), "{a} vs {b}");
        }
        assert!((m.num().coeffs()[0] / g.num().coeffs()[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn quiet_scenario_stays_at_rest() {
        let sc = Scenario {
            reference: Reference::Zero,
            disturbance: None,
            noise: None,
            duration: 1.0,
            dt: CONTROL_PERIOD,
        };
        for plant in [Plant::Linear { model: Axis::Pitch.plant() }, nonlinear(Axis::Roll)] {
            let ts = cascade_sim(&Outer::Pid { gains: Axis::Pitch.pid() }, &plant, &sc).unwrap();
            for ch in ["angle", "coupled_angle", "outer_u"] {
                assert!(ts.require(ch).unwrap().iter().all(|v| v.abs() < 1e-12), "{ch}");
            }
        }
    }

    fn own_hinf(model: &TransferFunction, axis: Axis) -> Outer {
        use crate::hinf::{build_mixsyn_plant, gamma_iterate, SynthesisSpec};
        let spec = SynthesisSpec::new(
            model.clone(),
            crate::fixtures::ws_unit(),
            TransferFunction::gain(crate::fixtures::WU),
            axis.weight(),
            axis.a(),
        )
        .unwrap();
        let r = gamma_iterate(&build_mixsyn_plant(&spec).unwrap(), 0.1, 10.0, 1e-4).unwrap();
        Outer::discrete(c2d_tustin(&r.controller_ss, 1000.0).unwrap()).unwrap()
    }

    #[test]
    fn small_steps_match_linearization() {
        let p = QuadrotorParams::default();
        let pitch = inner_loop_model(&p, &InnerLoop::default(), Axis::Pitch).unwrap();
        let roll = inner_loop_model(&p, &InnerLoop::default(), Axis::Roll).unwrap();
        let cases = [
            (Axis::Pitch, pitch.clone(), Outer::Pid { gains: Axis::Pitch.pid() }),
            (Axis::Pitch, pitch.clone(), own_hinf(&pitch, Axis::Pitch)),
            (Axis::Roll, roll.clone(), own_hinf(&roll, Axis::Roll)),
        ];
        for (axis, model, outer) in cases {
            for deg in [0.5, 2.0] {
                let amp = f64::to_radians(deg);
                let a = metrics(&outer, &nonlinear(axis), amp);
                let b = metrics(&outer, &Plant::Linear { model: model.clone() }, amp);
                let os_tol = (0.1 * b.overshoot).max(1e-3);
                assert!((a.overshoot - b.overshoot).abs() <= os_tol, "{axis:?} {a:?} {b:?}");
                assert!((a.settling_time - b.settling_time).abs() <= 0.1 * b.settling_time, "{axis:?} {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn trajectories_track_linearization() {
        let p = QuadrotorParams::default();
        for axis in Axis::ALL {
            let model = inner_loop_model(&p, &InnerLoop::default(), axis).unwrap();
            let outer = Outer::Pid { gains: axis.pid() };
            let amp = 2f64.to_radians();
            let a = cascade_sim(&outer, &nonlinear(axis), &Scenario::step(amp, 4.0)).unwrap();
            let b = cascade_sim(&outer, &Plant::Linear { model }, &Scenario::step(amp, 4.0)).unwrap();
            let err = a
                .require("angle")
                .unwrap()
                .iter()
                .zip(b.require("angle").unwrap())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 0.02 * amp, "{axis:?} {err}");
        }
    }

    #[test]
    fn pid_on_nominal_pitch() {
        let m = metrics(&Outer::Pid { gains: Axis::Pitch.pid() }, &Plant::Linear { model: Axis::Pitch.plant() }, 1.0);
        assert!((0.08..0.12).contains(&m.overshoot), "{m:?}");
        assert!((0.8..1.1).contains(&m.settling_time), "{m:?}");
    }

    #[test]
    fn published_reduced_controller_in_cascade() {
        let k = c2d_tustin(&Axis::Pitch.reduced_controller().to_ss().unwrap(), 1000.0).unwrap();
        let m = metrics(&Outer::discrete(k).unwrap(), &Plant::Linear { model: Axis::Pitch.plant() }, 1.0);
        assert!(m.overshoot < 0.05 && m.settling_time < 0.6, "{m:?}");
    }

    #[test]
    fn deterministic_and_noisy() {
        let sc = Scenario::disturbed_step(3);
        let plant = Plant::Linear { model: Axis::Pitch.plant() };
        let outer = Outer::Pid { gains: Axis::Pitch.pid() };
        let a = cascade_sim(&outer, &plant, &sc).unwrap();
        let b = cascade_sim(&outer, &plant, &sc).unwrap();
        assert_eq!(a, b);
        let noise: Vec<f64> = a
            .require("measured")
            .unwrap()
            .iter()
            .zip(a.require("angle").unwrap())
            .map(|(m, y)| m - y)
            .collect();
        assert!(noise.iter().all(|v| v.abs() <= 0.02));
        assert!(noise.iter().any(|v| v.abs() > 0.015));
        let d = a.require("disturbance").unwrap();
        assert_eq!((d[1999], d[2000]), (0.0, 0.1));
        let c = cascade_sim(&outer, &plant, &Scenario::disturbed_step(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_setups() {
        let plant = Plant::Linear { model: Axis::Pitch.plant() };
        let mut sc = Scenario::step(1.0, 1.0);
        sc.dt = 3e-4;
        assert!(matches!(cascade_sim(&Outer::Direct, &plant, &sc), Err(Error::InvalidConfig(_))));
        let k = Axis::Pitch.reduced_controller().to_ss().unwrap();
        assert!(Outer::discrete(k).is_err());
        // unstable raw double integrator diverges
        let g = TransferFunction::new(vec![1.0], vec![1.0, 0.0, 0.0]).unwrap();
        let r = cascade_sim(&Outer::Direct, &Plant::Linear { model: g }, &Scenario::step(1.0, 5.0));
        assert!(matches!(r, Err(Error::Diverged(_))));
    }

    #[test]
    fn finer_integration_step() {
        let plant = nonlinear(Axis::Pitch);
        let outer = Outer::Pid { gains: Axis::Pitch.pid() };
        let amp = 1f64.to_radians();
        let a = cascade_sim(&outer, &plant, &Scenario::step(amp, 1.0)).unwrap();
        let mut sc = Scenario::step(amp, 1.0);
        sc.dt = CONTROL_PERIOD / 4.0;
        let b = cascade_sim(&outer, &plant, &sc).unwrap();
        let ya = a.require("angle").unwrap();
        let yb = b.require("angle").unwrap();
        assert_eq!(ya.len(), yb.len());
        let err = ya.iter().zip(yb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6 * amp, "{err}");
    }
}
