use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::TimeSeries;

pub const DEFAULT_AMPLITUDE_RANGE: (f64, f64) = (5.0, 11.0);

/// Linear frequency sweep, repeated `periods` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpConfig {
    /// Hz
    pub f0: f64,
    /// Hz
    pub f1: f64,
    /// degrees
    pub amplitude: f64,
    /// Length of one sweep, seconds.
    pub duration: f64,
    /// Sampling rate, Hz.
    pub fs: f64,
    #[serde(default = "one")]
    pub periods: usize,
}

fn one() -> usize {
    1
}

impl ChirpConfig {
    pub fn new(f0: f64, f1: f64, amplitude: f64, duration: f64, fs: f64) -> Self {
        ChirpConfig {
            f0,
            f1,
            amplitude,
            duration,
            fs,
            periods: 1,
        }
    }

    pub fn with_periods(mut self, periods: usize) -> Self {
        self.periods = periods;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_amplitude(DEFAULT_AMPLITUDE_RANGE)
    }

    pub fn validate_amplitude(&self, range: (f64, f64)) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.f0 > 0.0 && self.f0 <= self.f1 && self.f1.is_finite()) {
            return bad(format!("need 0 < f0 <= f1, got {} and {}", self.f0, self.f1));
        }
        if !(self.amplitude >= range.0 && self.amplitude <= range.1) {
            return bad(format!(
                "amplitude {} outside [{}, {}] degrees",
                self.amplitude, range.0, range.1
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {}", self.duration));
        }
        if !(self.fs >= 20.0 * self.f1) {
            return bad(format!("fs {} below 20·f1", self.fs));
        }
        if self.periods == 0 {
            return bad("periods must be at least 1".into());
        }
        Ok(())
    }

    pub fn samples_per_period(&self) -> usize {
        (self.duration * self.fs).round() as usize
    }

    pub fn samples(&self) -> usize {
        self.samples_per_period() * self.periods
    }

    /// Instantaneous frequency (Hz) at time `t`.
    pub fn frequency_at(&self, t: f64) -> f64 {
        let tp = t.rem_euclid(self.duration);
        self.f0 + (self.f1 - self.f0) * tp / self.duration
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let tp = t.rem_euclid(self.duration);
        let phase = 2.0 * PI * (self.f0 * tp + 0.5 * (self.f1 - self.f0) / self.duration * tp * tp);
        self.amplitude * phase.sin()
    }
}

/// Sampled sweep; single channel `reference` in degrees.
pub fn chirp(cfg: &ChirpConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    chirp_unchecked(cfg)
}

pub(crate) fn chirp_unchecked(cfg: &ChirpConfig) -> Result<TimeSeries> {
    let per = cfg.samples_per_period();
    let dt = 1.0 / cfg.fs;
    let one: Vec<f64> = (0..per).map(|i| cfg.value_at(i as f64 * dt)).collect();
    let mut u = Vec::with_capacity(per * cfg.periods);
    for _ in 0..cfg.periods {
        u.extend_from_slice(&one);
    }
    TimeSeries::new(dt)?.with_channel("reference", u)
}

pub const RECORD_CHANNELS: [&str; 3] = ["reference", "output", "coupled_output"];

/// One closed-loop identification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ChirpConfig,
    pub data: TimeSeries,
}

impl ExperimentRecord {
    pub fn new(config: ChirpConfig, data: TimeSeries) -> Result<Self> {
        for ch in RECORD_CHANNELS {
            data.require(ch)?;
        }
        if (data.dt() * config.fs - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "record step {} does not match fs {}",
                data.dt(),
                config.fs
            )));
        }
        Ok(ExperimentRecord { config, data })
    }

    pub fn reference(&self) -> &[f64] {
        self.data.channel("reference").unwrap()
    }

    pub fn output(&self) -> &[f64] {
        self.data.channel("output").unwrap()
    }

    pub fn coupled_output(&self) -> &[f64] {
        self.data.channel("coupled_output").unwrap()
    }

    /// `t,reference,output,coupled_output`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut ts = TimeSeries::new(self.data.dt())?;
        for ch in RECORD_CHANNELS {
            ts.push_channel(ch, self.data.require(ch)?.to_vec())?;
        }
        ts.write_csv(w)
    }

    pub fn read_csv<R: BufRead>(config: ChirpConfig, r: R) -> Result<Self> {
        let ts = TimeSeries::read_csv(r)?;
        let dt = 1.0 / config.fs;
        if (ts.dt() - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "record step {} does not match fs {}",
                ts.dt(),
                config.fs
            )));
        }
        let mut data = TimeSeries::new(dt)?;
        for ch in RECORD_CHANNELS {
            data.push_channel(ch, ts.require(ch)?.to_vec())?;
        }
        Self::new(config, data)
    }
}
