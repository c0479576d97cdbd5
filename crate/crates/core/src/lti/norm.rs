use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::discretize::d2c_tustin;
use super::freq::log_grid;
use super::ss::StateSpace;
use super::tf::TransferFunction;
use crate::error::{Error, Result};
use crate::linalg;

/// Peak gain over frequency and where it is attained (rad/s; `inf` when the
/// supremum is the feedthrough).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakGain {
    pub value: f64,
    pub omega: f64,
}

const MAX_LEVEL_ITERS: usize = 200;

/// H∞ norm of a stable proper system to relative accuracy `tol`.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    Ok(hinf_peak(sys, tol)?.value)
}

/// The norm is bracketed by the attained gain `lb` and the level `lb·(1+2tol)`
/// certified by a Hamiltonian without imaginary-axis eigenvalues. Each level
/// crossing from the spectrum raises `lb`.
pub fn hinf_peak(sys: &StateSpace, tol: f64) -> Result<PeakGain> {
    if let Some(dt) = sys.dt {
        let mut peak = hinf_peak(&d2c_tustin(sys)?, tol)?;
        peak.omega = if peak.omega.is_finite() {
            2.0 / dt * (peak.omega * dt / 2.0).atan()
        } else {
            std::f64::consts::PI / dt
        };
        return Ok(peak);
    }
    let poles = sys.poles()?;
    if poles.iter().any(|p| !(p.re < 0.0)) {
        return Err(Error::UnstableSystem);
    }
    let sys = sys.balanced();
    let sigma_d = sigma(&sys.d);
    let mut best = PeakGain {
        value: sigma_d,
        omega: f64::INFINITY,
    };
    if sys.order() == 0 {
        return Ok(best);
    }
    let probe = |w: f64, best: &mut PeakGain| -> Result<()> {
        let v = sys.sigma_max(w)?;
        if v > best.value {
            *best = PeakGain { value: v, omega: w };
        }
        Ok(())
    };
    let mags: Vec<f64> = poles.iter().map(|p| p.norm()).collect();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-12);
    let hi = mags.iter().cloned().fold(0.0, f64::max).max(lo);
    probe(0.0, &mut best)?;
    for p in &poles {
        probe(p.norm(), &mut best)?;
        if p.im != 0.0 {
            probe(p.im.abs(), &mut best)?;
        }
    }
    for w in log_grid(lo * 0.1, hi * 10.0, 60) {
        probe(w, &mut best)?;
    }
    for _ in 0..MAX_LEVEL_ITERS {
        if best.value == 0.0 {
            return Ok(best);
        }
        let gamma = best.value * (1.0 + 2.0 * tol);
        let freqs = crossing_frequencies(&sys, gamma)?;
        if freqs.is_empty() {
            refine(&sys, &mut best)?;
            return Ok(best);
        }
        let before = best.value;
        for w in &freqs {
            probe(*w, &mut best)?;
        }
        for pair in freqs.windows(2) {
            probe(0.5 * (pair[0] + pair[1]), &mut best)?;
        }
        if best.value <= before * (1.0 + 0.5 * tol) {
            // spectrum crossings that the gain does not confirm
            refine(&sys, &mut best)?;
            return Ok(best);
        }
    }
    Err(Error::NoConvergence)
}

fn sigma(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Frequencies where some singular value of `sys` equals `gamma`.
fn crossing_frequencies(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let m = sys.inputs();
    let p = sys.outputs();
    let r = DMatrix::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let ri = r.try_inverse().ok_or(Error::IllConditioned(gamma))?;
    let ah = a + b * &ri * d.transpose() * c;
    let h = linalg::block2(
        &ah,
        &(b * &ri * b.transpose()),
        &(-(c.transpose() * (DMatrix::identity(p, p) + d * &ri * d.transpose()) * c)),
        &(-ah.transpose()),
    );
    let mut w: Vec<f64> = linalg::eigenvalues(&h)?
        .into_iter()
        .filter(|l| l.re.abs() <= 1e-7 * l.norm().max(1.0))
        .map(|l| l.im.abs())
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(w)
}

/// Golden-section search in log frequency around the current argmax.
fn refine(sys: &StateSpace, best: &mut PeakGain) -> Result<()> {
    if !(best.omega.is_finite() && best.omega > 0.0) {
        return Ok(());
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((best.omega / 1.05).ln(), (best.omega * 1.05).ln());
    let f = |x: f64| sys.sigma_max(x.exp());
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..60 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if v > best.value {
        *best = PeakGain {
            value: v,
            omega: x.exp(),
        };
    }
    Ok(())
}

impl TransferFunction {
    pub fn hinf_norm(&self, tol: f64) -> Result<f64> {
        hinf_norm(&self.to_ss()?, tol)
    }
}
