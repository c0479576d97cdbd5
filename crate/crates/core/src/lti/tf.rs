use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::freq::FrequencyResponse;
use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Default absolute tolerance on pole real parts for stability checks.
pub const STABILITY_TOL: f64 = 1e-9;
/// Default relative tolerance for [`TransferFunction::minreal`].
pub const MINREAL_TOL: f64 = 1e-7;

/// SISO rational transfer function with a monic denominator.
///
/// `dt` is `None` for continuous time, otherwise the sample period in seconds
/// and the variable is `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfRepr", into = "TfRepr")]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
    dt: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TfRepr {
    num: Vec<f64>,
    den: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
}

impl TryFrom<TfRepr> for TransferFunction {
    type Error = Error;
    fn try_from(r: TfRepr) -> Result<Self> {
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("sample time {dt}")));
            }
        }
        Ok(TransferFunction::new(r.num, r.den)?.with_dt(r.dt))
    }
}

impl From<TransferFunction> for TfRepr {
    fn from(t: TransferFunction) -> Self {
        TfRepr {
            num: t.num.into(),
            den: t.den.into(),
            dt: t.dt,
        }
    }
}

/// Magnitude of Horner rounding error for `p` at `s`.
fn eval_scale(p: &Polynomial, s: Complex64) -> f64 {
    let r = s.norm();
    p.coeffs().iter().fold(0.0, |acc, c| acc * r + c.abs())
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::from_polys(Polynomial::new(num), Polynomial::new(den))
    }

    pub fn from_polys(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        Ok(TransferFunction {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
            dt: None,
        })
    }

    /// `k·∏(s − zᵢ) / ∏(s − pᵢ)`
    pub fn zpk(zeros: &[Complex64], poles: &[Complex64], k: f64) -> Result<Self> {
        Self::from_polys(
            Polynomial::from_roots(zeros).scale(k),
            Polynomial::from_roots(poles),
        )
    }

    pub fn gain(k: f64) -> Self {
        TransferFunction {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
            dt: None,
        }
    }

    pub fn identity() -> Self {
        Self::gain(1.0)
    }

    pub fn with_dt(mut self, dt: Option<f64>) -> Self {
        self.dt = dt;
        self
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    pub fn is_discrete(&self) -> bool {
        self.dt.is_some()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    /// `deg den − deg num`; negative when improper.
    pub fn relative_degree(&self) -> i64 {
        self.den.degree() as i64 - self.num.degree() as i64
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(s);
        if d.norm() <= 64.0 * f64::EPSILON * eval_scale(&self.den, s) {
            return Err(Error::PoleEvaluation(format!("{s}")));
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Value on the boundary of the stability region at frequency `w` rad/s.
    pub fn eval_freq(&self, w: f64) -> Result<Complex64> {
        self.eval(self.freq_point(w))
    }

    pub(crate) fn freq_point(&self, w: f64) -> Complex64 {
        match self.dt {
            None => Complex64::new(0.0, w),
            Some(dt) => Complex64::from_polar(1.0, w * dt),
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    pub fn is_stable(&self, tol: f64) -> Result<bool> {
        let p = self.poles()?;
        Ok(match self.dt {
            None => p.iter().all(|z| z.re < -tol),
            Some(_) => p.iter().all(|z| z.norm() < 1.0 - tol),
        })
    }

    pub fn dcgain(&self) -> Result<f64> {
        let at = match self.dt {
            None => 0.0,
            Some(_) => 1.0,
        };
        let d = self.den.eval(at);
        if d.abs() <= 64.0 * f64::EPSILON * eval_scale(&self.den, Complex64::new(at, 0.0)) {
            return Err(Error::IntegratorPresent);
        }
        Ok(self.num.eval(at) / d)
    }

    pub fn freq_response(&self, omega: &[f64]) -> Result<FrequencyResponse> {
        let values = omega
            .iter()
            .map(|&w| {
                self.eval_freq(w).map_err(|e| match e {
                    Error::PoleEvaluation(_) => Error::PoleOnGrid(w),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FrequencyResponse::new(omega.to_vec(), values)
    }

    fn check_domain(&self, other: &TransferFunction) -> Result<()> {
        if self.dt != other.dt {
            return Err(Error::Dimension(format!(
                "sample times differ: {:?} vs {:?}",
                self.dt, other.dt
            )));
        }
        Ok(())
    }

    /// `self · other`
    pub fn series(&self, other: &TransferFunction) -> Result<Self> {
        self.check_domain(other)?;
        Ok(Self::from_polys(&self.num * &other.num, &self.den * &other.den)?.with_dt(self.dt))
    }

    /// `self + other`
    pub fn parallel(&self, other: &TransferFunction) -> Result<Self> {
        self.check_domain(other)?;
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Ok(Self::from_polys(num, &self.den * &other.den)?.with_dt(self.dt))
    }

    /// Closed loop of `self` in the forward path and `h` in the return path.
    /// `sign = -1.0` gives `g / (1 + g h)`.
    pub fn feedback(&self, h: &TransferFunction, sign: f64) -> Result<Self> {
        self.check_domain(h)?;
        let num = &self.num * &h.den;
        let open = &(&self.num * &h.num).scale(sign);
        let den = &(&self.den * &h.den) - open;
        if den.is_zero() {
            return Err(Error::AlgebraicLoop);
        }
        Ok(Self::from_polys(num, den)?.with_dt(self.dt))
    }

    pub fn scale(&self, k: f64) -> Self {
        TransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
            dt: self.dt,
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self::from_polys(self.den.clone(), self.num.clone())?.with_dt(self.dt))
    }

    /// Removes pole/zero pairs closer than `tol` relative to their magnitude.
    pub fn minreal(&self, tol: f64) -> Result<Self> {
        if self.num.is_zero() {
            return Ok(Self::gain(0.0).with_dt(self.dt));
        }
        let mut zeros = self.zeros()?;
        let mut poles = self.poles()?;
        let k = self.num.leading();
        let mut i = 0;
        while i < zeros.len() {
            let z = zeros[i];
            let hit = poles
                .iter()
                .enumerate()
                .map(|(j, p)| (j, (p - z).norm()))
                .filter(|(_, d)| *d <= tol * z.norm().max(1.0))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match hit {
                Some((j, _)) => {
                    poles.remove(j);
                    zeros.remove(i);
                }
                None => i += 1,
            }
        }
        Ok(Self::zpk(&zeros, &poles, k)?.with_dt(self.dt))
    }
}

fn fmt_poly(p: &Polynomial, var: char, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let n = p.degree();
    let mut first = true;
    for (i, &c) in p.coeffs().iter().enumerate() {
        if c == 0.0 && !(first && i == n) {
            continue;
        }
        let pow = n - i;
        let mag = c.abs();
        if first {
            if c < 0.0 {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
        }
        first = false;
        let show = pow == 0 || mag != 1.0;
        if show {
            write!(f, "{mag:.6}")?;
        }
        match pow {
            0 => {}
            1 => write!(f, "{}{var}", if show { " " } else { "" })?,
            _ => write!(f, "{}{var}^{pow}", if show { " " } else { "" })?,
        }
    }
    Ok(())
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = if self.dt.is_some() { 'z' } else { 's' };
        write!(f, "(")?;
        fmt_poly(&self.num, var, f)?;
        write!(f, ") / (")?;
        fmt_poly(&self.den, var, f)?;
        write!(f, ")")
    }
}
