use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::plant::GeneralizedPlant;
use super::riccati::ric_schur;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{hinf_norm, StateSpace, TransferFunction};

pub const DEFAULT_GAMMA_LO: f64 = 0.1;
pub const DEFAULT_GAMMA_HI: f64 = 10.0;
pub const DEFAULT_GAMMA_TOL: f64 = 1e-4;
/// Slack on the verified norms relative to the returned level.
pub const NORM_SLACK: f64 = 1e-6;
const PSD_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-7;
const MAX_BACKOFF: usize = 40;

/// Closed-loop H∞ norms of the weighted channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    #[serde(rename = "WsS")]
    pub ws_s: f64,
    #[serde(rename = "WuU")]
    pub wu_u: f64,
    #[serde(rename = "WT")]
    pub wt_t: f64,
    pub stacked: f64,
}

impl NormReport {
    pub fn max_individual(&self) -> f64 {
        self.ws_s.max(self.wu_u).max(self.wt_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub gamma: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub controller: TransferFunction,
    pub controller_ss: StateSpace,
    pub gamma: f64,
    pub norms: NormReport,
    pub internally_stable: bool,
    pub trace: Vec<TraceEntry>,
}

impl SynthesisResult {
    pub fn order(&self) -> usize {
        self.controller_ss.order()
    }
}

/// Central controller `u = K e` at level `gamma`, or `None` when the
/// two-Riccati conditions fail.
pub fn hinfsyn_at_gamma(p: &GeneralizedPlant, gamma: f64) -> Result<Option<StateSpace>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidSpec(format!("gamma = {gamma}")));
    }
    p.check_regularity()?;
    let part = p.partition();
    if part.d11.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidSpec("D11 must vanish".into()));
    }
    let bal = GeneralizedPlant {
        sys: p.sys.balanced(),
        ..p.clone()
    };
    let mut shifted = bal.clone();
    let d22 = part.d22.clone();
    let nz = p.nz;
    shifted.sys.d.view_mut((nz, p.nw), (p.ny, p.nu)).fill(0.0);
    let Some(k0) = central(&shifted, gamma)? else {
        return Ok(None);
    };
    if d22.iter().all(|&v| v == 0.0) {
        return Ok(Some(k0));
    }
    let ds = StateSpace::gain(d22);
    match k0.feedback(&ds, -1.0) {
        Ok(k) => Ok(Some(k)),
        Err(Error::AlgebraicLoop) => Ok(None),
        Err(e) => Err(e),
    }
}

fn central(p: &GeneralizedPlant, gamma: f64) -> Result<Option<StateSpace>> {
    let s = p.partition();
    let n = p.order();
    let g2 = 1.0 / (gamma * gamma);
    let r1 = s.d12.transpose() * &s.d12;
    let r2 = &s.d21 * s.d21.transpose();
    let r1i = r1
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("D12ᵀD12 singular".into()))?;
    let r2i = r2
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("D21D21ᵀ singular".into()))?;
    let iz = DMatrix::<f64>::identity(p.nz, p.nz);
    let iw = DMatrix::<f64>::identity(p.nw, p.nw);

    let ax = &s.a - &s.b2 * &r1i * s.d12.transpose() * &s.c1;
    let gx = &s.b2 * &r1i * s.b2.transpose() - &s.b1 * s.b1.transpose() * g2;
    let qx = s.c1.transpose() * (&iz - &s.d12 * &r1i * s.d12.transpose()) * &s.c1;
    let ay = &s.a - &s.b1 * s.d21.transpose() * &r2i * &s.c2;
    let gy = s.c2.transpose() * &r2i * &s.c2 - s.c1.transpose() * &s.c1 * g2;
    let qy = &s.b1 * (&iw - s.d21.transpose() * &r2i * &s.d21) * s.b1.transpose();

    let x = match ric_schur(&ax, &linalg::symmetrize(&gx), &linalg::symmetrize(&qx)) {
        Ok(x) => x,
        Err(Error::NoStabilizingSolution(_)) | Err(Error::NoConvergence) => return Ok(None),
        Err(e) => return Err(e),
    };
    let y = match ric_schur(&ay.transpose(), &linalg::symmetrize(&gy), &linalg::symmetrize(&qy)) {
        Ok(y) => y,
        Err(Error::NoStabilizingSolution(_)) | Err(Error::NoConvergence) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !is_psd(&x) || !is_psd(&y) {
        return Ok(None);
    }
    let rho = linalg::eigenvalues(&(&x * &y))?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho >= gamma * gamma {
        return Ok(None);
    }
    let f = -&r1i * (s.d12.transpose() * &s.c1 + s.b2.transpose() * &x);
    let l = -(&s.b1 * s.d21.transpose() + &y * s.c2.transpose()) * &r2i;
    let Some(z) = (DMatrix::identity(n, n) - &y * &x * g2).try_inverse() else {
        return Ok(None);
    };
    let ak = &s.a + &s.b1 * s.b1.transpose() * &x * g2
        + &s.b2 * &f
        + &z * &l * (&s.c2 + &s.d21 * s.b1.transpose() * &x * g2);
    let bk = -(&z * &l);
    let dk = DMatrix::zeros(p.nu, p.ny);
    Ok(Some(StateSpace::new(ak, bk, f, dk)?))
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    let e = linalg::symmetrize(m).symmetric_eigen().eigenvalues;
    let scale = e.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    e.iter().all(|&v| v >= -PSD_TOL * scale)
}

/// Closed loop from `w` to `z` with `u = K e`.
pub fn closed_loop(p: &GeneralizedPlant, k: &StateSpace) -> Result<StateSpace> {
    p.sys.lower_lft(k)
}

/// Row-wise and stacked H∞ norms of the closed loop.
pub fn closed_loop_norms(p: &GeneralizedPlant, k: &StateSpace) -> Result<(NormReport, bool)> {
    let cl = closed_loop(p, k)?;
    let stable = cl.is_stable(0.0)?;
    if !stable {
        return Err(Error::InternallyUnstable);
    }
    let row = |i: usize| -> Result<f64> {
        let r = StateSpace::new(
            cl.a.clone(),
            cl.b.clone(),
            cl.c.rows(i, 1).into_owned(),
            cl.d.rows(i, 1).into_owned(),
        )?;
        hinf_norm(&r, NORM_TOL)
    };
    let report = NormReport {
        ws_s: row(0)?,
        wu_u: row(1)?,
        wt_t: row(2)?,
        stacked: hinf_norm(&cl, NORM_TOL)?,
    };
    Ok((report, stable))
}

/// Bisection on `γ` down to relative width `tol`. The controller is taken
/// at the smallest feasible level; if its verified stacked norm exceeds that
/// level the level is raised until it does not.
pub fn gamma_iterate(p: &GeneralizedPlant, gamma_lo: f64, gamma_hi: f64, tol: f64) -> Result<SynthesisResult> {
    if !(gamma_lo > 0.0 && gamma_hi > gamma_lo && tol > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "gamma bounds [{gamma_lo}, {gamma_hi}], tol {tol}"
        )));
    }
    let mut trace = Vec::new();
    let try_at = |g: f64, trace: &mut Vec<TraceEntry>| -> Result<Option<StateSpace>> {
        let k = hinfsyn_at_gamma(p, g)?;
        trace.push(TraceEntry {
            gamma: g,
            feasible: k.is_some(),
        });
        Ok(k)
    };
    let Some(mut k) = try_at(gamma_hi, &mut trace)? else {
        return Err(Error::InfeasibleAtUpperBound(gamma_hi));
    };
    let (mut lo, mut hi) = (gamma_lo, gamma_hi);
    if let Some(k_lo) = try_at(lo, &mut trace)? {
        hi = lo;
        k = k_lo;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        match try_at(mid, &mut trace)? {
            Some(km) => {
                hi = mid;
                k = km;
            }
            None => lo = mid,
        }
    }
    let mut gamma = hi;
    for _ in 0..MAX_BACKOFF {
        if let Ok((norms, stable)) = closed_loop_norms(p, &k) {
            if norms.stacked <= gamma + NORM_SLACK && norms.max_individual() <= gamma + NORM_SLACK {
                let controller = k.to_tf()?;
                return Ok(SynthesisResult {
                    controller,
                    controller_ss: k,
                    gamma,
                    norms,
                    internally_stable: stable,
                    trace,
                });
            }
        }
        gamma *= 1.0 + 10.0 * tol;
        k = try_at(gamma, &mut trace)?.ok_or(Error::NoConvergence)?;
    }
    Err(Error::InternallyUnstable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Axis;
    use crate::hinf::build_mixsyn_plant;
    use std::time::Instant;

    #[test]
    fn feasibility_brackets_pitch_optimum() {
        let p = build_mixsyn_plant(&Axis::Pitch.synthesis_spec()).unwrap();
        assert!(hinfsyn_at_gamma(&p, 2.0).unwrap().is_some());
        assert!(hinfsyn_at_gamma(&p, 0.5).unwrap().is_none());
        assert!(hinfsyn_at_gamma(&p, 1e6).unwrap().is_some());
    }

    #[test]
    fn gamma_iteration_both_axes() {
        for axis in Axis::ALL {
            let p = build_mixsyn_plant(&axis.synthesis_spec()).unwrap();
            let t0 = Instant::now();
            let r = gamma_iterate(&p, DEFAULT_GAMMA_LO, DEFAULT_GAMMA_HI, DEFAULT_GAMMA_TOL).unwrap();
            eprintln!("{axis:?}: {:?} in {:?}", r.norms, t0.elapsed());
            assert!((r.gamma - axis.gamma()).abs() < 0.05, "{}", r.gamma);
            assert_eq!(r.order(), 8);
            assert!(r.internally_stable);
            assert!(r.norms.stacked <= r.gamma + NORM_SLACK);
            assert!(r.norms.max_individual() <= r.gamma + NORM_SLACK);
            let worst_infeasible = r.trace.iter().filter(|e| !e.feasible).map(|e| e.gamma).fold(0.0, f64::max);
            let best_feasible = r.trace.iter().filter(|e| e.feasible).map(|e| e.gamma).fold(f64::INFINITY, f64::min);
            assert!(worst_infeasible < best_feasible);
        }
    }

    #[test]
    fn infeasible_upper_bound() {
        let p = build_mixsyn_plant(&Axis::Roll.synthesis_spec()).unwrap();
        assert!(matches!(gamma_iterate(&p, 0.1, 0.5, 1e-3), Err(Error::InfeasibleAtUpperBound(_))));
    }
}
