use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::synth::{NormReport, SynthesisResult};
use crate::error::{Error, Result};
use crate::lti::{balanced_truncation, hinf_norm, StateSpace, TransferFunction};

const NORM_TOL: f64 = 1e-7;
/// Largest relative change of `T` accepted from controller reduction.
pub const MAX_REDUCTION_DEVIATION: f64 = 0.05;

/// The four closed-loop maps of `u = C(r − y)`, `y = G u`.
#[derive(Debug, Clone)]
pub struct GangOfFour {
    pub s: StateSpace,
    pub t: StateSpace,
    pub cs: StateSpace,
    pub gs: StateSpace,
}

impl GangOfFour {
    pub fn is_stable(&self) -> Result<bool> {
        for m in [&self.s, &self.t, &self.cs, &self.gs] {
            if !m.is_stable(0.0)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn gang_of_four(g: &StateSpace, c: &StateSpace) -> Result<GangOfFour> {
    let one = StateSpace::gain(nalgebra::DMatrix::from_element(1, 1, 1.0));
    let l = c.series(g)?;
    Ok(GangOfFour {
        s: one.feedback(&l, -1.0)?,
        t: l.feedback(&one, -1.0)?,
        cs: c.feedback(g, -1.0)?,
        gs: g.feedback(c, -1.0)?,
    })
}

fn stable_gang(g: &StateSpace, c: &StateSpace) -> Result<GangOfFour> {
    let gof = gang_of_four(g, c)?;
    if !gof.is_stable()? {
        return Err(Error::InternallyUnstable);
    }
    Ok(gof)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub norms: NormReport,
    pub internally_stable: bool,
}

/// Weighted closed-loop norms `‖WsS‖∞`, `‖WuU‖∞`, `‖WtT‖∞` and the stacked norm.
pub fn verify_mixsyn(
    g: &StateSpace,
    c: &StateSpace,
    ws: &TransferFunction,
    wu: &TransferFunction,
    wt: &TransferFunction,
) -> Result<VerifyReport> {
    let gof = stable_gang(g, c)?;
    let z1 = gof.s.series(&ws.to_ss()?)?;
    let z2 = gof.cs.series(&wu.to_ss()?)?;
    let z3 = gof.t.series(&wt.to_ss()?)?;
    let stacked = z1.stack_outputs(&z2)?.stack_outputs(&z3)?;
    Ok(VerifyReport {
        norms: NormReport {
            ws_s: hinf_norm(&z1, NORM_TOL)?,
            wu_u: hinf_norm(&z2, NORM_TOL)?,
            wt_t: hinf_norm(&z3, NORM_TOL)?,
            stacked: hinf_norm(&stacked, NORM_TOL)?,
        },
        internally_stable: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCurve {
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
    pub sup: f64,
}

impl MuCurve {
    fn from_values(omega: &[f64], mu: Vec<f64>) -> Self {
        let sup = mu.iter().cloned().fold(0.0, f64::max);
        MuCurve {
            omega: omega.to_vec(),
            mu,
            sup,
        }
    }

    /// Frequency of the largest value.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, &v) in self.mu.iter().enumerate() {
            if v > self.mu[best] {
                best = i;
            }
        }
        self.omega.get(best).copied().unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega,mu")?;
        for (o, m) in self.omega.iter().zip(&self.mu) {
            writeln!(w, "{o:e},{m:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut omega = Vec::new();
        let mut mu = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "omega,mu" {
                    return Err(Error::Parse(format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing field", i + 1)))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            omega.push(next()?);
            mu.push(next()?);
        }
        Ok(MuCurve::from_values(&omega, mu))
    }
}

fn magnitudes(sys: &StateSpace, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&w| Ok(sys.eval_siso(sys.freq_point(w))?.norm()))
        .collect()
}

/// `μ_RS(ω) = |Wt·T|`.
pub fn rs_mu(g: &StateSpace, c: &StateSpace, wt: &TransferFunction, grid: &[f64]) -> Result<MuCurve> {
    let gof = stable_gang(g, c)?;
    let wtt = gof.t.series(&wt.to_ss()?)?;
    Ok(MuCurve::from_values(grid, magnitudes(&wtt, grid)?))
}

/// `μ_RP(ω) = |Ws·S| + |Wt·T|`.
pub fn rp_mu(
    g: &StateSpace,
    c: &StateSpace,
    ws: &TransferFunction,
    wt: &TransferFunction,
    grid: &[f64],
) -> Result<MuCurve> {
    let gof = stable_gang(g, c)?;
    let a = magnitudes(&gof.s.series(&ws.to_ss()?)?, grid)?;
    let b = magnitudes(&gof.t.series(&wt.to_ss()?)?, grid)?;
    Ok(MuCurve::from_values(grid, a.iter().zip(&b).map(|(x, y)| x + y).collect()))
}

/// Balanced truncation of the controller and the relative change
/// `‖T − T_r‖∞ / ‖T‖∞` of the complementary sensitivity around `plant`.
pub fn reduce_and_check(result: &SynthesisResult, plant: &StateSpace, target_order: usize) -> Result<(StateSpace, f64)> {
    let k = &result.controller_ss;
    if !k.is_stable(0.0)? {
        return Err(Error::UnstableController);
    }
    if target_order >= k.order() {
        return Ok((k.clone(), 0.0));
    }
    let (kr, _) = balanced_truncation(k, target_order)?;
    let t_full = stable_gang(plant, k)?.t;
    let t_red = match stable_gang(plant, &kr) {
        Ok(g) => g.t,
        Err(Error::InternallyUnstable) => return Err(Error::DeviationExceeded(f64::INFINITY)),
        Err(e) => return Err(e),
    };
    let dev = hinf_norm(&t_full.parallel(&t_red, -1.0)?, NORM_TOL)? / hinf_norm(&t_full, NORM_TOL)?;
    if !(dev < MAX_REDUCTION_DEVIATION) {
        return Err(Error::DeviationExceeded(dev));
    }
    Ok((kr, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{pid_gains, Axis};
    use crate::hinf::{build_mixsyn_plant, gamma_iterate};
    use crate::lti::standard_grid;

    fn synth(axis: Axis) -> SynthesisResult {
        let p = build_mixsyn_plant(&axis.synthesis_spec()).unwrap();
        gamma_iterate(&p, 0.1, 10.0, 1e-4).unwrap()
    }

    #[test]
    fn zero_controller() {
        let spec = Axis::Pitch.synthesis_spec();
        let g = spec.plant.to_ss().unwrap();
        let c = StateSpace::gain(nalgebra::DMatrix::zeros(1, 1));
        let r = verify_mixsyn(&g, &c, &spec.ws, &spec.wu, &spec.wt).unwrap();
        assert!((r.norms.ws_s - spec.ws.hinf_norm(1e-9).unwrap()).abs() < 1e-6 * r.norms.ws_s);
        assert_eq!(r.norms.wt_t, 0.0);
        let grid = standard_grid();
        let mu = rp_mu(&g, &c, &spec.ws, &spec.wt, &grid).unwrap();
        for (w, m) in grid.iter().zip(&mu.mu) {
            assert!((m - spec.ws.eval_freq(*w).unwrap().norm()).abs() < 1e-9 * m);
        }
        let zero = TransferFunction::gain(0.0);
        assert!(rs_mu(&g, &c, &zero, &grid).unwrap().mu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unstable_loop_rejected() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, -1.0]).unwrap().to_ss().unwrap();
        let c = StateSpace::gain(nalgebra::DMatrix::from_element(1, 1, 0.5));
        let w = TransferFunction::gain(1.0);
        assert!(matches!(rs_mu(&g, &c, &w, &standard_grid()), Err(Error::InternallyUnstable)));
    }

    #[test]
    fn synthesized_pitch_loop() {
        let axis = Axis::Pitch;
        let r = synth(axis);
        let spec = axis.synthesis_spec();
        let g = spec.plant.to_ss().unwrap();
        let v = verify_mixsyn(&g, &r.controller_ss, &spec.ws, &spec.wu, &spec.wt).unwrap();
        for (a, b) in [(v.norms.ws_s, r.norms.ws_s), (v.norms.wu_u, r.norms.wu_u), (v.norms.wt_t, r.norms.wt_t)] {
            assert!((a - b).abs() < 1e-5 * b, "{a} vs {b}");
        }
        assert!((v.norms.wt_t - 0.42).abs() < 0.05);
        let grid = standard_grid();
        let rs = rs_mu(&g, &r.controller_ss, &spec.wt, &grid).unwrap();
        let rp = rp_mu(&g, &r.controller_ss, &spec.ws, &spec.wt, &grid).unwrap();
        assert!(rs.sup < 1.0 && rs.sup <= v.norms.wt_t + 1e-9);
        assert!(rs.mu.iter().zip(&rp.mu).all(|(a, b)| b >= a && b.is_finite()));

        let (k6, dev) = reduce_and_check(&r, &g, 6).unwrap();
        assert_eq!(k6.order(), 6);
        assert!(dev < 0.05, "{dev}");
        assert_eq!(reduce_and_check(&r, &g, 8).unwrap().1, 0.0);
        assert!(matches!(reduce_and_check(&r, &g, 2), Err(Error::DeviationExceeded(_))));
    }

    #[test]
    fn published_controllers_and_pid() {
        for axis in Axis::ALL {
            let spec = axis.synthesis_spec();
            let g = spec.plant.to_ss().unwrap();
            let c = axis.controller().to_ss().unwrap();
            let v = verify_mixsyn(&g, &c, &spec.ws, &spec.wu, &spec.wt).unwrap();
            assert!((v.norms.stacked - axis.gamma()).abs() < 0.01, "{axis:?} {:?}", v.norms);
        }
        let g = Axis::Pitch.plant().to_ss().unwrap();
        let pid = pid_gains().pitch.transfer_function().unwrap().to_ss().unwrap();
        let grid = standard_grid();
        let rs = rs_mu(&g, &pid, &Axis::Pitch.weight(), &grid).unwrap();
        assert!(rs.sup < 1.0 && rs.sup > 0.6, "{}", rs.sup);
        assert!((10.0..30.0).contains(&rs.argmax()), "{}", rs.argmax());
    }

    #[test]
    fn mu_csv_round_trip() {
        let m = MuCurve::from_values(&[1.0, 2.0], vec![0.5, 0.25]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("omega,mu\n"));
        assert_eq!(MuCurve::read_csv(&buf[..]).unwrap(), m);
    }
}
