use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

fn demean(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let xm = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let d = i as f64 - tm;
        sxy += d * (v - xm);
        sxx += d * d;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter()
        .enumerate()
        .map(|(i, v)| v - xm - slope * (i as f64 - tm))
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

fn is_constant(x: &[f64]) -> bool {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().all(|v| (v - x[0]).abs() <= 1e-12 * scale)
}

/// Lag in samples, within `[0, N/4]`, maximizing the cross-correlation of
/// `y` against `u`.
pub fn estimate_delay(u: &[f64], y: &[f64]) -> Result<usize> {
    if u.len() != y.len() {
        return Err(Error::Dimension("delay: channel lengths differ".into()));
    }
    if u.len() < 32 {
        return Err(Error::InsufficientData("delay: need at least 32 samples".into()));
    }
    if is_constant(u) || is_constant(y) {
        return Err(Error::DegenerateSignal("constant channel".into()));
    }
    let n = u.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pad = |x: Vec<f64>| {
        let mut v: Vec<Complex64> = x.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
        v.resize(len, Complex64::new(0.0, 0.0));
        v
    };
    let mut fu = pad(demean(u));
    let mut fy = pad(demean(y));
    fwd.process(&mut fu);
    fwd.process(&mut fy);
    // r(l) = Σ u[k] y[k + l]
    let mut r: Vec<Complex64> = fu.iter().zip(&fy).map(|(a, b)| a.conj() * b).collect();
    inv.process(&mut r);
    let max_lag = n / 4;
    let mut best = 0;
    for l in 0..=max_lag {
        if r[l].re > r[best].re {
            best = l;
        }
    }
    Ok(best)
}

/// RMS of the detrended coupled channel over RMS of the detrended excited one.
pub fn coupling_metric(excited: &[f64], coupled: &[f64]) -> Result<f64> {
    if excited.len() != coupled.len() {
        return Err(Error::Dimension("coupling: channel lengths differ".into()));
    }
    if excited.len() < 2 {
        return Err(Error::InsufficientData("coupling: need two samples".into()));
    }
    let e = rms(&detrend(excited));
    let scale = excited.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if e <= 1e-12 * scale || is_constant(excited) {
        return Err(Error::DegenerateSignal("excited channel is constant".into()));
    }
    Ok(rms(&detrend(coupled)) / e)
}
