use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::chirp::ExperimentRecord;
use crate::error::{Error, Result};
use crate::lti::{lsim, FrequencyResponse, Polynomial, TransferFunction};

pub const MAX_NORMAL_COND: f64 = 1e14;
pub const COEFF_TOL: f64 = 1e-8;

/// Sanathanan–Koerner fit of `n_zeros`/`n_poles` structure to `fr`.
///
/// Linearized residual `N(jω) − H·D(jω)` with monic `D`, reweighted by the
/// previous denominator each pass; frequency is scaled by the geometric mean
/// of the grid. Unstable poles of the result are mirrored into the left half
/// plane, which leaves the magnitude response unchanged.
pub fn fit_tf(
    fr: &FrequencyResponse,
    n_zeros: usize,
    n_poles: usize,
    max_iters: usize,
) -> Result<TransferFunction> {
    if n_zeros > n_poles {
        return Err(Error::ImproperSystem {
            num: n_zeros,
            den: n_poles,
        });
    }
    let k = fr.len();
    let unknowns = n_zeros + 1 + n_poles;
    if k < 4 * unknowns {
        return Err(Error::InsufficientData(format!(
            "{k} frequency points for {unknowns} coefficients"
        )));
    }
    let wmin = fr.omega()[0];
    let wmax = fr.omega()[k - 1];
    let ws = (wmin * wmax).sqrt();
    let s: Vec<Complex64> = fr.omega().iter().map(|w| Complex64::new(0.0, w / ws)).collect();
    let h = fr.values();
    let powers: Vec<Vec<Complex64>> = s
        .iter()
        .map(|&sk| {
            let mut p = vec![Complex64::new(1.0, 0.0); n_poles + 1];
            for i in 1..=n_poles {
                p[i] = p[i - 1] * sk;
            }
            p
        })
        .collect();
    let mut weights = vec![1.0; k];
    let mut x_prev: Option<DVector<f64>> = None;
    let mut x = DVector::zeros(unknowns);
    for _ in 0..max_iters.max(1) {
        let mut jm = DMatrix::zeros(2 * k, unknowns);
        let mut rhs = DVector::zeros(2 * k);
        for r in 0..k {
            let w = weights[r];
            for i in 0..=n_zeros {
                let v = powers[r][i] * w;
                jm[(2 * r, i)] = v.re;
                jm[(2 * r + 1, i)] = v.im;
            }
            for i in 0..n_poles {
                let v = -h[r] * powers[r][i] * w;
                jm[(2 * r, n_zeros + 1 + i)] = v.re;
                jm[(2 * r + 1, n_zeros + 1 + i)] = v.im;
            }
            let t = h[r] * powers[r][n_poles] * w;
            rhs[2 * r] = t.re;
            rhs[2 * r + 1] = t.im;
        }
        let col_scale: Vec<f64> = (0..unknowns)
            .map(|j| {
                let n = jm.column(j).norm();
                if n > 0.0 {
                    1.0 / n
                } else {
                    1.0
                }
            })
            .collect();
        for (j, c) in col_scale.iter().enumerate() {
            jm.column_mut(j).scale_mut(*c);
        }
        let svd = jm.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond2 = if smin > 0.0 {
            (smax / smin).powi(2)
        } else {
            f64::INFINITY
        };
        if !(cond2 <= MAX_NORMAL_COND) {
            return Err(Error::IllConditioned(cond2));
        }
        let z = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::FitDiverged(e.to_string()))?;
        x = DVector::from_iterator(unknowns, z.iter().zip(&col_scale).map(|(v, c)| v * c));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::FitDiverged("non-finite coefficients".into()));
        }
        for r in 0..k {
            let mut d = powers[r][n_poles];
            for i in 0..n_poles {
                d += powers[r][i] * x[n_zeros + 1 + i];
            }
            let m = d.norm();
            if !(m > 0.0) {
                return Err(Error::FitDiverged("denominator vanishes on the grid".into()));
            }
            weights[r] = 1.0 / m;
        }
        if let Some(prev) = &x_prev {
            let scale = x.amax().max(1.0);
            if (&x - prev).amax() <= COEFF_TOL * scale {
                break;
            }
        }
        x_prev = Some(x.clone());
    }
    // back to unscaled s, descending powers
    let num: Vec<f64> = (0..=n_zeros)
        .rev()
        .map(|i| x[i] / ws.powi(i as i32))
        .collect();
    let mut den = vec![1.0 / ws.powi(n_poles as i32)];
    den.extend((0..n_poles).rev().map(|i| x[n_zeros + 1 + i] / ws.powi(i as i32)));
    let tf = TransferFunction::new(num, den)?;
    reflect_unstable(&tf)
}

fn reflect_unstable(tf: &TransferFunction) -> Result<TransferFunction> {
    let poles = tf.poles()?;
    if poles.iter().all(|p| p.re <= 0.0) {
        return Ok(tf.clone());
    }
    let mirrored: Vec<Complex64> = poles
        .iter()
        .map(|p| if p.re > 0.0 { Complex64::new(-p.re, p.im) } else { *p })
        .collect();
    TransferFunction::from_polys(tf.num().clone(), Polynomial::from_roots(&mirrored))
}

/// `100·(1 − ‖y − ŷ‖ / ‖y − ȳ‖)` with `ŷ` the response of `model` to the
/// record's reference.
pub fn fit_percent(model: &TransferFunction, record: &ExperimentRecord) -> Result<f64> {
    let yhat = lsim(&model.to_ss()?, record.reference(), record.data.dt())?;
    fit_percent_of(record.output(), &yhat)
}

pub fn fit_percent_of(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(Error::Dimension("fit: lengths differ or empty".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if spread <= 1e-12 * scale || spread == 0.0 {
        return Err(Error::DegenerateSignal("output is constant".into()));
    }
    let err = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * (1.0 - err / spread))
}
