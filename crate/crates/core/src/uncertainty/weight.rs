use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::{Polynomial, TransferFunction};

pub const MAX_WEIGHT_ORDER: usize = 4;
pub const DEFAULT_MARGIN: f64 = 1.02;
const LM_ITERS: usize = 300;

/// Stable minimum-phase polynomial as a product of `s² + b₁s + b₀` and at
/// most one `s + a`, coefficients stored as logarithms.
#[derive(Debug, Clone)]
struct Factors {
    quads: usize,
    linear: bool,
}

impl Factors {
    fn new(order: usize) -> Self {
        Factors {
            quads: order / 2,
            linear: order % 2 == 1,
        }
    }

    fn len(&self) -> usize {
        2 * self.quads + usize::from(self.linear)
    }

    fn poly(&self, th: &[f64]) -> Polynomial {
        let mut p = Polynomial::constant(1.0);
        for q in 0..self.quads {
            p = &p * &Polynomial::new(vec![1.0, th[2 * q].exp(), th[2 * q + 1].exp()]);
        }
        if self.linear {
            p = &p * &Polynomial::new(vec![1.0, th[2 * self.quads].exp()]);
        }
        p
    }

    /// `ln|P(jω)|` and its gradient.
    fn log_mag(&self, th: &[f64], w: f64, grad: &mut [f64]) -> f64 {
        let w2 = w * w;
        let mut v = 0.0;
        for q in 0..self.quads {
            let (b1, b0) = (th[2 * q].exp(), th[2 * q + 1].exp());
            let re = b0 - w2;
            let m = re * re + b1 * b1 * w2;
            v += 0.5 * m.ln();
            grad[2 * q] = b1 * b1 * w2 / m;
            grad[2 * q + 1] = b0 * re / m;
        }
        if self.linear {
            let a = th[2 * self.quads].exp();
            let m = a * a + w2;
            v += 0.5 * m.ln();
            grad[2 * self.quads] = a * a / m;
        }
        v
    }

    /// Parameters for a polynomial whose roots are already in the open left
    /// half plane.
    fn from_roots(&self, roots: &[Complex64]) -> Option<Vec<f64>> {
        let mut complex: Vec<Complex64> = roots.iter().filter(|r| r.im > 0.0).cloned().collect();
        let mut real: Vec<f64> = roots.iter().filter(|r| r.im == 0.0).map(|r| r.re).collect();
        real.sort_by(f64::total_cmp);
        let mut th = Vec::with_capacity(self.len());
        for c in complex.drain(..) {
            th.push((-2.0 * c.re).ln());
            th.push(c.norm_sqr().ln());
        }
        while real.len() >= 2 && th.len() < 2 * self.quads {
            let (a, b) = (real.remove(0), real.remove(0));
            th.push((-(a + b)).ln());
            th.push((a * b).ln());
        }
        if self.linear {
            th.push((-real.pop()?).ln());
        }
        (th.len() == self.len() && th.iter().all(|t| t.is_finite())).then_some(th)
    }
}

struct Model {
    num: Factors,
    den: Factors,
}

impl Model {
    fn n(&self) -> usize {
        1 + self.num.len() + self.den.len()
    }

    fn residuals(&self, th: &[f64], omega: &[f64], target: &[f64], jac: Option<&mut DMatrix<f64>>) -> DVector<f64> {
        let (nn, nd) = (self.num.len(), self.den.len());
        let mut gn = vec![0.0; nn];
        let mut gd = vec![0.0; nd];
        let mut r = DVector::zeros(omega.len());
        let mut jac = jac;
        for (k, &w) in omega.iter().enumerate() {
            let ln = self.num.log_mag(&th[1..1 + nn], w, &mut gn);
            let ld = self.den.log_mag(&th[1 + nn..], w, &mut gd);
            r[k] = th[0] + ln - ld - target[k];
            if let Some(j) = jac.as_deref_mut() {
                j[(k, 0)] = 1.0;
                for i in 0..nn {
                    j[(k, 1 + i)] = gn[i];
                }
                for i in 0..nd {
                    j[(k, 1 + nn + i)] = -gd[i];
                }
            }
        }
        r
    }

    fn tf(&self, th: &[f64]) -> Result<TransferFunction> {
        let nn = self.num.len();
        TransferFunction::from_polys(
            self.num.poly(&th[1..1 + nn]).scale(th[0].exp()),
            self.den.poly(&th[1 + nn..]),
        )
    }
}

fn levenberg_marquardt(model: &Model, mut th: Vec<f64>, omega: &[f64], target: &[f64]) -> (Vec<f64>, f64) {
    let n = model.n();
    let mut jac = DMatrix::zeros(omega.len(), n);
    let mut r = model.residuals(&th, omega, target, Some(&mut jac));
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..LM_ITERS {
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = th.iter().zip(step.iter()).map(|(t, d)| t + d.clamp(-3.0, 3.0)).collect();
            let rc = model.residuals(&cand, omega, target, None);
            let cc = rc.norm_squared();
            if cc.is_finite() && cc < cost {
                let rel = (cost - cc) / cost.max(1e-300);
                th = cand;
                cost = cc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    return (th, cost);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
        r = model.residuals(&th, omega, target, Some(&mut jac));
    }
    (th, cost)
}

/// Squared-magnitude linear fit in `x = (ω/ωs)²`, iteratively reweighted.
fn squared_magnitude_fit(omega: &[f64], env: &[f64], nz: usize, np: usize, ws: f64) -> Option<(Polynomial, Polynomial)> {
    let k = omega.len();
    let x: Vec<f64> = omega.iter().map(|w| (w / ws).powi(2)).collect();
    let m2: Vec<f64> = env.iter().map(|e| e * e).collect();
    let unknowns = nz + 1 + np;
    let mut weights: Vec<f64> = m2.iter().map(|m| 1.0 / m).collect();
    let mut sol = DVector::zeros(unknowns);
    for _ in 0..30 {
        let mut jm = DMatrix::zeros(k, unknowns);
        let mut rhs = DVector::zeros(k);
        for r in 0..k {
            let w = weights[r];
            for i in 0..=nz {
                jm[(r, i)] = x[r].powi(i as i32) * w;
            }
            for i in 0..np {
                jm[(r, nz + 1 + i)] = -m2[r] * x[r].powi(i as i32) * w;
            }
            rhs[r] = m2[r] * x[r].powi(np as i32) * w;
        }
        sol = jm.svd(true, true).solve(&rhs, 1e-14).ok()?;
        for r in 0..k {
            let mut q = x[r].powi(np as i32);
            for i in 0..np {
                q += sol[nz + 1 + i] * x[r].powi(i as i32);
            }
            if !(q > 0.0) {
                return None;
            }
            weights[r] = 1.0 / (q * m2[r]);
        }
    }
    // P(x) and Q(x), descending powers in x
    let p: Vec<f64> = (0..=nz).rev().map(|i| sol[i]).collect();
    let mut q = vec![1.0];
    q.extend((0..np).rev().map(|i| sol[nz + 1 + i]));
    Some((Polynomial::new(p), Polynomial::new(q)))
}

/// Left-half-plane roots `s` of `P(−s²)` in scaled frequency, or `None` when
/// `P` changes sign on the positive axis.
fn spectral_factor_roots(p: &Polynomial, count: usize) -> Option<Vec<Complex64>> {
    if count == 0 {
        return Some(Vec::new());
    }
    let deg = p.degree();
    if deg != count {
        return None;
    }
    let mut c = vec![0.0; 2 * deg + 1];
    for (i, &a) in p.coeffs().iter().enumerate() {
        let pow = deg - i;
        let sign = if pow % 2 == 0 { 1.0 } else { -1.0 };
        c[2 * i] = a * sign;
    }
    let roots = Polynomial::new(c).roots().ok()?;
    let lhp: Vec<Complex64> = roots.into_iter().filter(|r| r.re < 0.0).collect();
    if lhp.len() != count {
        return None;
    }
    Some(lhp)
}

fn snap_pairs(mut r: Vec<Complex64>) -> Vec<Complex64> {
    for z in r.iter_mut() {
        if z.im.abs() <= 1e-9 * z.norm() {
            z.im = 0.0;
        }
    }
    r
}

/// Stable minimum-phase weight whose magnitude bounds `env` on `omega`.
///
/// The log-magnitude least-squares fit is scaled by `margin · max(env/|W|)`,
/// so the worst grid point sits exactly a factor `margin` above the envelope.
pub fn fit_weight(
    omega: &[f64],
    env: &[f64],
    num_order: usize,
    den_order: usize,
    margin: f64,
) -> Result<TransferFunction> {
    if num_order > den_order || den_order > MAX_WEIGHT_ORDER {
        return Err(Error::InvalidConfig(format!(
            "weight orders ({num_order}, {den_order}) need num ≤ den ≤ {MAX_WEIGHT_ORDER}"
        )));
    }
    if !(margin >= 1.0) {
        return Err(Error::InvalidConfig(format!("margin {margin} below 1")));
    }
    if omega.len() != env.len() || omega.is_empty() {
        return Err(Error::GridMismatch);
    }
    if env.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::FitDiverged("envelope must be finite and non-negative".into()));
    }
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(TransferFunction::gain(0.0));
    }
    let floor = peak * 1e-12;
    let env_f: Vec<f64> = env.iter().map(|e| e.max(floor)).collect();
    let target: Vec<f64> = env_f.iter().map(|e| e.ln()).collect();
    let model = Model {
        num: Factors::new(num_order),
        den: Factors::new(den_order),
    };
    let ws = (omega[0] * omega[omega.len() - 1]).sqrt();
    let scaled: Vec<f64> = omega.iter().map(|w| w / ws).collect();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some((p, q)) = squared_magnitude_fit(omega, &env_f, num_order, den_order, ws) {
        let zr = spectral_factor_roots(&p, num_order);
        let pr = spectral_factor_roots(&q, den_order);
        if let (Some(zr), Some(pr)) = (zr, pr) {
            let tn = model.num.from_roots(&snap_pairs(zr));
            let td = model.den.from_roots(&snap_pairs(pr));
            if let (Some(tn), Some(td)) = (tn, td) {
                let mut th = vec![0.0];
                th.extend(tn);
                th.extend(td);
                starts.push(th);
            }
        }
    }
    for spread in [1.0, 0.1, 10.0] {
        let mut th = vec![0.0];
        for f in [&model.num, &model.den] {
            for q in 0..f.quads {
                let c = spread * 10f64.powf(q as f64 - (f.quads as f64 - 1.0) / 2.0);
                th.push((1.4 * c).ln());
                th.push((c * c).ln());
            }
            if f.linear {
                th.push(spread.ln());
            }
        }
        starts.push(th);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mut th in starts {
        // best gain for this shape
        let r = model.residuals(&th, &scaled, &target, None);
        th[0] -= r.mean();
        let (t, c) = levenberg_marquardt(&model, th, &scaled, &target);
        if c.is_finite() && best.as_ref().is_none_or(|b| c < b.1) {
            best = Some((t, c));
        }
    }
    let (th, _) = best.ok_or_else(|| Error::FitDiverged("no start converged".into()))?;
    let shape = model.tf(&th)?;
    let w = unscale(&shape, ws)?;
    dominate(&w, omega, env, margin)
}

/// `W(s/ws)` as a function of `s`.
fn unscale(w: &TransferFunction, ws: f64) -> Result<TransferFunction> {
    let sub = |p: &Polynomial| {
        let n = p.degree();
        Polynomial::new(
            p.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| c / ws.powi((n - i) as i32))
                .collect(),
        )
    };
    TransferFunction::from_polys(sub(w.num()), sub(w.den()))
}

fn dominate(w: &TransferFunction, omega: &[f64], env: &[f64], margin: f64) -> Result<TransferFunction> {
    let mags = w.freq_response(omega)?.magnitudes();
    let ratio = env
        .iter()
        .zip(&mags)
        .map(|(e, m)| e / m)
        .fold(0.0, f64::max);
    if !ratio.is_finite() {
        return Err(Error::FitDiverged("weight vanishes on the grid".into()));
    }
    let mut c = margin * ratio;
    for _ in 0..64 {
        let out = w.scale(c);
        let m = out.freq_response(omega)?.magnitudes();
        if m.iter().zip(env).all(|(a, e)| *a >= margin * e) {
            return Ok(out);
        }
        c *= 1.0 + 4.0 * f64::EPSILON;
    }
    Err(Error::FitDiverged("could not reach dominance".into()))
}
