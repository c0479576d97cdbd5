use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::chirp::ExperimentRecord;
use crate::error::{Error, Result};
use crate::lti::FrequencyResponse;

pub const MIN_SEGMENT: usize = 32;

/// Empirical transfer estimate from `reference` to `output`.
///
/// Welch averaging: `n_avg` segments-worth of length `N / n_avg`, 50% overlap,
/// periodic Hann window, `Σ conj(U)·Y / Σ |U|²`. Bins outside the sweep band
/// `[f0, f1]` are dropped. Frequencies are returned in rad/s.
pub fn etfe(record: &ExperimentRecord, n_avg: usize) -> Result<FrequencyResponse> {
    etfe_band(
        record.reference(),
        record.output(),
        record.config.fs,
        n_avg,
        (record.config.f0, record.config.f1),
    )
}

pub fn etfe_band(
    u: &[f64],
    y: &[f64],
    fs: f64,
    n_avg: usize,
    band_hz: (f64, f64),
) -> Result<FrequencyResponse> {
    if u.len() != y.len() {
        return Err(Error::Dimension("etfe: channel lengths differ".into()));
    }
    if n_avg == 0 {
        return Err(Error::InvalidConfig("n_avg must be positive".into()));
    }
    let n = u.len();
    let l = n / n_avg;
    if l < MIN_SEGMENT {
        return Err(Error::InsufficientData(format!(
            "{n} samples in {n_avg} segments leaves fewer than {MIN_SEGMENT} per segment"
        )));
    }
    let hop = (l / 2).max(1);
    let count = (n - l) / hop + 1;
    let window: Vec<f64> = (0..l)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / l as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(l);
    let half = l / 2;
    let mut suu = vec![0.0; half + 1];
    let mut suy = vec![Complex64::new(0.0, 0.0); half + 1];
    let mut bu = vec![Complex64::new(0.0, 0.0); l];
    let mut by = vec![Complex64::new(0.0, 0.0); l];
    for s in 0..count {
        let start = s * hop;
        for i in 0..l {
            bu[i] = Complex64::new(u[start + i] * window[i], 0.0);
            by[i] = Complex64::new(y[start + i] * window[i], 0.0);
        }
        fft.process(&mut bu);
        fft.process(&mut by);
        for k in 0..=half {
            suu[k] += bu[k].norm_sqr();
            suy[k] += bu[k].conj() * by[k];
        }
    }
    let df = fs / l as f64;
    let peak = suu.iter().cloned().fold(0.0, f64::max);
    let (mut omega, mut values) = (Vec::new(), Vec::new());
    for k in 1..=half {
        let f = k as f64 * df;
        if f < band_hz.0 * (1.0 - 1e-12) || f > band_hz.1 * (1.0 + 1e-12) {
            continue;
        }
        if suu[k] <= 1e-10 * peak {
            continue;
        }
        omega.push(2.0 * PI * f);
        values.push(suy[k] / suu[k]);
    }
    if omega.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two frequency bins inside the sweep band".into(),
        ));
    }
    FrequencyResponse::new(omega, values)
}
