use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cascade::{cascade_sim, Noise, Outer, Plant, Reference, Scenario, CONTROL_PERIOD};
use super::params::QuadrotorParams;
use super::pid::InnerLoop;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixtures::Axis;
use crate::lti::TimeSeries;
use crate::sysid::{ChirpConfig, ExperimentRecord, DEFAULT_AMPLITUDE_RANGE};

pub const EXPERIMENT_BAND_HZ: (f64, f64) = (0.05, 5.0);

/// Closed-loop chirp tracking on the nonlinear model: `axis` follows the
/// sweep, the other angle is regulated to zero. Channels are in degrees and
/// include measurement noise.
pub fn synth_experiment(
    params: &QuadrotorParams,
    inner: &InnerLoop,
    axis: Axis,
    chirp: &ChirpConfig,
    noise_bound: f64,
    seed: u64,
) -> Result<ExperimentRecord> {
    chirp.validate()?;
    if chirp.f0 < EXPERIMENT_BAND_HZ.0 || chirp.f1 > EXPERIMENT_BAND_HZ.1 {
        return Err(Error::InvalidConfig(format!(
            "sweep [{}, {}] Hz outside [{}, {}] Hz",
            chirp.f0, chirp.f1, EXPERIMENT_BAND_HZ.0, EXPERIMENT_BAND_HZ.1
        )));
    }
    let ratio = 1.0 / (chirp.fs * CONTROL_PERIOD);
    let decim = ratio.round() as usize;
    if decim < 1 || (ratio - decim as f64).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "sample rate {} Hz must divide {} Hz",
            chirp.fs,
            1.0 / CONTROL_PERIOD
        )));
    }
    let n = chirp.samples();
    let scenario = Scenario {
        reference: Reference::Chirp { config: chirp.clone() },
        disturbance: None,
        noise: Some(Noise {
            bound: noise_bound,
            seed,
        }),
        duration: n as f64 / chirp.fs,
        dt: CONTROL_PERIOD,
    };
    let plant = Plant::Nonlinear {
        params: *params,
        inner: *inner,
        axis,
    };
    let ts = cascade_sim(&Outer::Direct, &plant, &scenario)?;
    let pick = |ch: &str| -> Result<Vec<f64>> {
        Ok(ts.require(ch)?.iter().step_by(decim).take(n).map(|v| v.to_degrees()).collect())
    };
    let reference = crate::sysid::chirp(chirp)?.require("reference")?.to_vec();
    let data = TimeSeries::new(1.0 / chirp.fs)?
        .with_channel("reference", reference)?
        .with_channel("output", pick("measured")?)?
        .with_channel("coupled_output", pick("coupled_measured")?)?;
    ExperimentRecord::new(chirp.clone(), data)
}

/// Generator for a family of synthetic data packages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSuite {
    pub axis: Axis,
    pub packages: usize,
    pub f0: f64,
    pub f1: f64,
    /// One sweep, seconds.
    pub sweep: f64,
    pub periods: usize,
    pub fs: f64,
    /// Measurement noise bound, radians.
    pub noise: f64,
    /// Relative parameter spread between packages.
    pub jitter: f64,
    pub seed: u64,
}

impl ExperimentSuite {
    pub fn new(axis: Axis, packages: usize, seed: u64) -> Self {
        ExperimentSuite {
            axis,
            packages,
            f0: 0.05,
            f1: 5.0,
            sweep: 40.0,
            periods: 3,
            fs: 500.0,
            noise: 0.002,
            jitter: 0.08,
            seed,
        }
    }

    /// Per-package seeds, amplitudes (degrees) and airframes.
    pub fn plan(&self, base: &QuadrotorParams) -> Vec<(u64, f64, QuadrotorParams)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.packages)
            .map(|_| {
                let s: u64 = rng.random();
                let amp = rng.random_range(DEFAULT_AMPLITUDE_RANGE.0..=DEFAULT_AMPLITUDE_RANGE.1);
                (s, amp, base.jittered(self.jitter, s))
            })
            .collect()
    }

    pub fn generate(&self, base: &QuadrotorParams, inner: &InnerLoop, exec: Execution) -> Result<Vec<ExperimentRecord>> {
        let plan = self.plan(base);
        exec.map(&plan, |(seed, amp, params)| {
            let cfg = ChirpConfig::new(self.f0, self.f1, *amp, self.sweep, self.fs).with_periods(self.periods);
            synth_experiment(params, inner, self.axis, &cfg, self.noise, *seed)
        })
        .into_iter()
        .collect()
    }
}
