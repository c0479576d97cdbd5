use std::io::{BufRead, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::discretize::zoh_matrices;
use super::ss::StateSpace;
use super::tf::TransferFunction;
use crate::error::{Error, Result};

/// Uniformly sampled record of named channels of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    dt: f64,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("time step {dt}")));
        }
        Ok(TimeSeries {
            dt,
            names: Vec::new(),
            data: Vec::new(),
        })
    }

    pub fn with_channel(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.push_channel(name, values)?;
        Ok(self)
    }

    pub fn push_channel(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if let Some(first) = self.data.first() {
            if first.len() != values.len() {
                return Err(Error::Dimension(format!(
                    "channel {name} has {} samples, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::Dimension(format!("duplicate channel {name}")));
        }
        self.names.push(name.to_string());
        self.data.push(values);
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, |d| d.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .ok_or_else(|| Error::Dimension(format!("missing channel {name}")))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{}", i as f64 * self.dt)?;
            for d in &self.data {
                write!(w, ",{}", d[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut t = Vec::new();
        let mut data = vec![Vec::new(); cols.len() - 1];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            if f.len() != cols.len() {
                return Err(Error::Parse(format!("row {line:?} has {} fields", f.len())));
            }
            t.push(f[0]);
            for (d, v) in data.iter_mut().zip(&f[1..]) {
                d.push(*v);
            }
        }
        if t.len() < 2 {
            return Err(Error::InsufficientData("need two samples to infer dt".into()));
        }
        let dt = t[1] - t[0];
        let mut ts = TimeSeries::new(dt)?;
        for (name, d) in cols[1..].iter().zip(data) {
            ts.push_channel(name, d)?;
        }
        Ok(ts)
    }
}

/// Response of a SISO system to the input samples `u`, held constant over
/// each step of length `dt`. Discrete systems must have sample time `dt`.
pub fn lsim(sys: &StateSpace, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !sys.is_siso() {
        return Err(Error::Dimension("lsim expects a SISO system".into()));
    }
    let (phi, gamma) = match sys.dt {
        None => zoh_matrices(&sys.a, &sys.b, dt),
        Some(t) if (t - dt).abs() <= 1e-12 * t => (sys.a.clone(), sys.b.clone()),
        Some(t) => {
            return Err(Error::InvalidConfig(format!(
                "system sampled at {t}, simulation step {dt}"
            )))
        }
    };
    let n = sys.order();
    let g = gamma.column(0).into_owned();
    let c = sys.c.row(0).transpose();
    let d = sys.d[(0, 0)];
    let mut x = DVector::zeros(n);
    let mut y = Vec::with_capacity(u.len());
    for &uk in u {
        y.push(c.dot(&x) + d * uk);
        x = &phi * &x + &g * uk;
    }
    Ok(y)
}

/// Unit step response sampled at `0, dt, …, t_final`; channels `u` and `y`.
pub fn step_response(sys: &StateSpace, t_final: f64, dt: f64) -> Result<TimeSeries> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidConfig(format!("t_final {t_final}, dt {dt}")));
    }
    let n = (t_final / dt).round() as usize + 1;
    let u = vec![1.0; n];
    let y = lsim(sys, &u, dt)?;
    TimeSeries::new(dt)?.with_channel("u", u)?.with_channel("y", y)
}

impl TransferFunction {
    pub fn step_response(&self, t_final: f64, dt: f64) -> Result<TimeSeries> {
        step_response(&self.to_ss()?, t_final, dt)
    }
}

/// Step-response figures of merit.
///
/// Settling uses a ±2% band around the final value; overshoot is a fraction
/// of the final value; rise time spans 10% to 90%. Crossing times are
/// linearly interpolated between samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub overshoot: f64,
    pub settling_time: f64,
    pub rise_time: f64,
    pub final_value: f64,
}

pub const SETTLING_BAND: f64 = 0.02;

/// Metrics of channel `y` (or the only channel), final value = last sample.
pub fn step_metrics(ts: &TimeSeries) -> Result<StepMetrics> {
    let y = match ts.channel("y") {
        Some(y) => y,
        None if ts.names().len() == 1 => ts.require(&ts.names()[0].clone())?,
        None => return Err(Error::Dimension("missing channel y".into())),
    };
    let last = *y
        .last()
        .ok_or_else(|| Error::InsufficientData("empty response".into()))?;
    StepMetrics::compute(ts.dt(), y, last)
}

impl StepMetrics {
    /// Metrics of `y` sampled every `dt` around the target `final_value`.
    pub fn compute(dt: f64, y: &[f64], final_value: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InsufficientData("empty response".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if final_value.abs() <= 1e-12 * scale.max(1e-300) || final_value == 0.0 {
            let band = SETTLING_BAND * scale;
            return Ok(StepMetrics {
                overshoot: 0.0,
                settling_time: settling(dt, y, 0.0, band),
                rise_time: 0.0,
                final_value,
            });
        }
        let yn: Vec<f64> = y.iter().map(|v| v / final_value).collect();
        let peak = yn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let overshoot = (peak - 1.0).max(0.0);
        let settling_time = settling(dt, &yn, 1.0, SETTLING_BAND);
        let t10 = first_crossing(dt, &yn, 0.1);
        let t90 = first_crossing(dt, &yn, 0.9);
        let rise_time = (t90 - t10).max(0.0);
        Ok(StepMetrics {
            overshoot,
            settling_time,
            rise_time,
            final_value,
        })
    }
}

fn first_crossing(dt: f64, y: &[f64], level: f64) -> f64 {
    if y[0] >= level {
        return 0.0;
    }
    for i in 1..y.len() {
        if y[i] >= level {
            let frac = (level - y[i - 1]) / (y[i] - y[i - 1]);
            return (i as f64 - 1.0 + frac) * dt;
        }
    }
    (y.len() - 1) as f64 * dt
}

fn settling(dt: f64, y: &[f64], target: f64, band: f64) -> f64 {
    let outside = y.iter().rposition(|v| (v - target).abs() > band);
    match outside {
        None => 0.0,
        Some(i) if i + 1 == y.len() => i as f64 * dt,
        Some(i) => {
            let e0 = (y[i] - target).abs();
            let e1 = (y[i + 1] - target).abs();
            let frac = if e0 > e1 { (e0 - band) / (e0 - e1) } else { 0.0 };
            (i as f64 + frac.clamp(0.0, 1.0)) * dt
        }
    }
}
