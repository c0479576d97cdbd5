use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::freq::FrequencyResponse;
use super::poly::Polynomial;
use super::tf::TransferFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// State-space realization `(A, B, C, D)`. `dt = None` means continuous time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SsRepr", into = "SsRepr")]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub dt: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SsRepr {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{name} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl TryFrom<SsRepr> for StateSpace {
    type Error = Error;
    fn try_from(r: SsRepr) -> Result<Self> {
        let n = r.a.len();
        let p = r.d.len();
        let m = r.d.first().map_or(0, |row| row.len());
        let sys = StateSpace::new(
            from_rows(&r.a, n, n, "A")?,
            from_rows(&r.b, n, m, "B")?,
            from_rows(&r.c, p, n, "C")?,
            from_rows(&r.d, p, m, "D")?,
        )?;
        Ok(sys.with_dt(r.dt))
    }
}

impl From<StateSpace> for SsRepr {
    fn from(s: StateSpace) -> Self {
        SsRepr {
            a: rows(&s.a),
            b: rows(&s.b),
            c: rows(&s.c),
            d: rows(&s.d),
            dt: s.dt,
        }
    }
}

impl StateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n
            || b.nrows() != n
            || c.ncols() != n
            || d.nrows() != c.nrows()
            || d.ncols() != b.ncols()
        {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d, dt: None })
    }

    pub fn gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            dt: None,
        }
    }

    pub fn with_dt(mut self, dt: Option<f64>) -> Self {
        self.dt = dt;
        self
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    /// Controllable canonical realization of a proper transfer function.
    pub fn from_tf(tf: &TransferFunction) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::ImproperSystem {
                num: tf.num().degree(),
                den: tf.den().degree(),
            });
        }
        let den = tf.den().coeffs();
        let n = den.len() - 1;
        let mut num = vec![0.0; n + 1 - tf.num().coeffs().len()];
        num.extend_from_slice(tf.num().coeffs());
        let d0 = num[0];
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -den[j + 1];
            c[(0, j)] = num[j + 1] - d0 * den[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        Ok(StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d0))?.with_dt(tf.dt()))
    }

    /// Transfer function from input `j` to output `i`.
    pub fn tf_entry(&self, i: usize, j: usize) -> Result<TransferFunction> {
        let n = self.order();
        let d = self.d[(i, j)];
        let den = Polynomial::from_roots(&linalg::eigenvalues(&self.a)?);
        if n == 0 {
            return Ok(TransferFunction::gain(d).with_dt(self.dt));
        }
        let b = self.b.column(j).into_owned();
        let c = self.c.row(i).into_owned();
        let bc = &b * &c;
        let nbc = linalg::fro(&bc);
        // det(sI − A + αbc) − det(sI − A) = α·c adj(sI − A) b
        let num = if nbc == 0.0 {
            Polynomial::zero()
        } else {
            let alpha = linalg::fro(&self.a).max(1.0) / nbc;
            let shifted = Polynomial::from_roots(&linalg::eigenvalues(&(&self.a - &bc * alpha))?);
            let mut diff: Vec<f64> = shifted
                .coeffs()
                .iter()
                .zip(den.coeffs())
                .map(|(x, y)| (x - y) / alpha)
                .collect();
            diff[0] = 0.0;
            Polynomial::new(diff)
        };
        let num = &num + &den.scale(d);
        Ok(TransferFunction::from_polys(num, den)?.with_dt(self.dt))
    }

    pub fn to_tf(&self) -> Result<TransferFunction> {
        if !self.is_siso() {
            return Err(Error::Dimension(format!(
                "{}x{} system is not SISO",
                self.outputs(),
                self.inputs()
            )));
        }
        self.tf_entry(0, 0)
    }

    pub fn freq_point(&self, w: f64) -> Complex64 {
        match self.dt {
            None => Complex64::new(0.0, w),
            Some(dt) => Complex64::from_polar(1.0, w * dt),
        }
    }

    /// `C (sI − A)⁻¹ B + D`
    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        let n = self.order();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let mut m = linalg::to_complex(&self.a).map(|x| -x);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let x = m
            .lu()
            .solve(&linalg::to_complex(&self.b))
            .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            .ok_or_else(|| Error::PoleEvaluation(format!("{s}")))?;
        Ok(linalg::to_complex(&self.c) * x + d)
    }

    pub fn eval_siso(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.eval(s)?[(0, 0)])
    }

    /// Largest singular value at frequency `w`.
    pub fn sigma_max(&self, w: f64) -> Result<f64> {
        let g = self.eval(self.freq_point(w))?;
        if g.nrows() == 1 || g.ncols() == 1 {
            return Ok(g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        Ok(g.singular_values().max())
    }

    pub fn freq_response(&self, omega: &[f64]) -> Result<FrequencyResponse> {
        let values = omega
            .iter()
            .map(|&w| {
                self.eval_siso(self.freq_point(w)).map_err(|e| match e {
                    Error::PoleEvaluation(_) => Error::PoleOnGrid(w),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FrequencyResponse::new(omega.to_vec(), values)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    pub fn is_stable(&self, tol: f64) -> Result<bool> {
        let p = self.poles()?;
        Ok(match self.dt {
            None => p.iter().all(|z| z.re < -tol),
            Some(_) => p.iter().all(|z| z.norm() < 1.0 - tol),
        })
    }

    pub fn dcgain(&self) -> Result<DMatrix<f64>> {
        let at = match self.dt {
            None => 0.0,
            Some(_) => 1.0,
        };
        let g = self.eval(Complex64::new(at, 0.0)).map_err(|_| Error::IntegratorPresent)?;
        Ok(g.map(|z| z.re))
    }

    fn check_domain(&self, other: &StateSpace) -> Result<()> {
        if self.dt != other.dt {
            return Err(Error::Dimension(format!(
                "sample times differ: {:?} vs {:?}",
                self.dt, other.dt
            )));
        }
        Ok(())
    }

    /// `next ∘ self`: the output of `self` drives `next`.
    pub fn series(&self, next: &StateSpace) -> Result<Self> {
        self.check_domain(next)?;
        if next.inputs() != self.outputs() {
            return Err(Error::Dimension("series: output/input mismatch".into()));
        }
        let (n1, n2) = (self.order(), next.order());
        let a = linalg::block2(
            &self.a,
            &DMatrix::zeros(n1, n2),
            &(&next.b * &self.c),
            &next.a,
        );
        let b = stack_rows(&self.b, &(&next.b * &self.d));
        let c = stack_cols(&(&next.d * &self.c), &next.c);
        let d = &next.d * &self.d;
        Ok(StateSpace::new(a, b, c, d)?.with_dt(self.dt))
    }

    /// `self + sign·other`
    pub fn parallel(&self, other: &StateSpace, sign: f64) -> Result<Self> {
        self.check_domain(other)?;
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::Dimension("parallel: shape mismatch".into()));
        }
        let a = block_diag(&self.a, &other.a);
        let b = stack_rows(&self.b, &other.b);
        let c = stack_cols(&self.c, &(&other.c * sign));
        let d = &self.d + &other.d * sign;
        Ok(StateSpace::new(a, b, c, d)?.with_dt(self.dt))
    }

    /// Same inputs, outputs of `self` then `other`.
    pub fn stack_outputs(&self, other: &StateSpace) -> Result<Self> {
        self.check_domain(other)?;
        if self.inputs() != other.inputs() {
            return Err(Error::Dimension("stack_outputs: input mismatch".into()));
        }
        let a = block_diag(&self.a, &other.a);
        let b = stack_rows(&self.b, &other.b);
        let c = block_diag(&self.c, &other.c);
        let d = stack_rows(&self.d, &other.d);
        Ok(StateSpace::new(a, b, c, d)?.with_dt(self.dt))
    }

    /// Lower fractional transformation with `k` closing the last
    /// `k.inputs()` outputs back onto the last `k.outputs()` inputs.
    pub fn lower_lft(&self, k: &StateSpace) -> Result<Self> {
        self.check_domain(k)?;
        let (ny, nu) = (k.inputs(), k.outputs());
        let (p, m, n, nk) = (self.outputs(), self.inputs(), self.order(), k.order());
        if ny > p || nu > m {
            return Err(Error::Dimension("lft: controller larger than plant".into()));
        }
        let (nz, nw) = (p - ny, m - nu);
        let b1 = self.b.columns(0, nw).into_owned();
        let b2 = self.b.columns(nw, nu).into_owned();
        let c1 = self.c.rows(0, nz).into_owned();
        let c2 = self.c.rows(nz, ny).into_owned();
        let d11 = self.d.view((0, 0), (nz, nw)).into_owned();
        let d12 = self.d.view((0, nw), (nz, nu)).into_owned();
        let d21 = self.d.view((nz, 0), (ny, nw)).into_owned();
        let d22 = self.d.view((nz, nw), (ny, nu)).into_owned();
        let mm = (DMatrix::identity(nu, nu) - &k.d * &d22)
            .try_inverse()
            .ok_or(Error::AlgebraicLoop)?;
        let nn = (DMatrix::identity(ny, ny) - &d22 * &k.d)
            .try_inverse()
            .ok_or(Error::AlgebraicLoop)?;
        let a = linalg::block2(
            &(&self.a + &b2 * &mm * &k.d * &c2),
            &(&b2 * &mm * &k.c),
            &(&k.b * &nn * &c2),
            &(&k.a + &k.b * &nn * &d22 * &k.c),
        );
        let b = stack_rows(&(&b1 + &b2 * &mm * &k.d * &d21), &(&k.b * &nn * &d21));
        let c = stack_cols(&(&c1 + &d12 * &mm * &k.d * &c2), &(&d12 * &mm * &k.c));
        let d = &d11 + &d12 * &mm * &k.d * &d21;
        debug_assert_eq!(a.nrows(), n + nk);
        Ok(StateSpace::new(a, b, c, d)?.with_dt(self.dt))
    }

    /// Closed loop `u = r + sign·h(y)` around `self`.
    pub fn feedback(&self, h: &StateSpace, sign: f64) -> Result<Self> {
        // plant with inputs [r; u] and outputs [y; y]
        let (p, m) = (self.outputs(), self.inputs());
        let b = stack_cols(&self.b, &self.b);
        let c = stack_rows(&self.c, &self.c);
        let d = linalg::block2(&self.d, &self.d, &self.d, &self.d);
        let aug = StateSpace::new(self.a.clone(), b, c, d)?.with_dt(self.dt);
        let mut hs = h.clone();
        hs.c *= sign;
        hs.d *= sign;
        let cl = aug.lower_lft(&hs)?;
        debug_assert_eq!((cl.outputs(), cl.inputs()), (p, m));
        Ok(cl)
    }

    /// Similarity transform `x = T z`.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        let ti = t.clone().try_inverse().ok_or(Error::SingularTransform)?;
        Ok(StateSpace {
            a: &ti * &self.a * t,
            b: &ti * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
            dt: self.dt,
        })
    }

    /// Diagonal similarity that equalizes row and column norms.
    pub fn balanced(&self) -> Self {
        if self.order() == 0 {
            return self.clone();
        }
        let (_, a, b, c) = linalg::balance_state_space(&self.a, &self.b, &self.c);
        StateSpace {
            a,
            b,
            c,
            d: self.d.clone(),
            dt: self.dt,
        }
    }

    pub fn scale_output(&self, k: f64) -> Self {
        let mut s = self.clone();
        s.c *= k;
        s.d *= k;
        s
    }
}

impl TryFrom<&TransferFunction> for StateSpace {
    type Error = Error;
    fn try_from(tf: &TransferFunction) -> Result<Self> {
        StateSpace::from_tf(tf)
    }
}

impl TransferFunction {
    pub fn to_ss(&self) -> Result<StateSpace> {
        StateSpace::from_tf(self)
    }
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::block2(
        a,
        &DMatrix::zeros(a.nrows(), b.ncols()),
        &DMatrix::zeros(b.nrows(), a.ncols()),
        b,
    )
}

pub fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

pub fn stack_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::freq::standard_grid;

    fn tid() -> TransferFunction {
        TransferFunction::new(vec![247.3], vec![1.0, 30.67, 247.3]).unwrap()
    }

    fn max_rel(a: &FrequencyResponse, b: &FrequencyResponse) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm() / x.norm().max(1e-300))
            .fold(0.0, f64::max)
    }

    #[test]
    fn canonical_realizations() {
        let s = tid().to_ss().unwrap();
        assert_eq!(s.order(), 2);
        assert_eq!(s.d[(0, 0)], 0.0);
        let k = TransferFunction::gain(2.5).to_ss().unwrap();
        assert_eq!(k.order(), 0);
        assert_eq!(k.d[(0, 0)], 2.5);
        let imp = TransferFunction::new(vec![1.0, 0.0], vec![1.0]).unwrap();
        assert_eq!(
            imp.to_ss(),
            Err(Error::ImproperSystem { num: 1, den: 0 })
        );
    }

    #[test]
    fn round_trip_biproper() {
        let t = TransferFunction::new(vec![2.0, 3.0, 1.0], vec![1.0, 4.0, 40.0]).unwrap();
        let back = t.to_ss().unwrap().to_tf().unwrap();
        let g = standard_grid();
        assert!(max_rel(&t.freq_response(&g).unwrap(), &back.freq_response(&g).unwrap()) < 1e-10);
    }

    #[test]
    fn ss_and_tf_evaluate_alike() {
        let t = tid();
        let s = t.to_ss().unwrap();
        let g = standard_grid();
        assert!(max_rel(&t.freq_response(&g).unwrap(), &s.freq_response(&g).unwrap()) < 1e-12);
    }

    #[test]
    fn interconnections_match_tf_algebra() {
        let g = TransferFunction::new(vec![1547.4], vec![1.0, 15.493, 444.77476, 2097.6192]).unwrap();
        let c = TransferFunction::new(vec![0.5, 2.0, 1.0], vec![1.0, 50.0, 0.0]).unwrap();
        let (gs, cs) = (g.to_ss().unwrap(), c.to_ss().unwrap());
        let w = standard_grid();
        let pairs = [
            (g.series(&c).unwrap(), gs.series(&cs).unwrap()),
            (g.parallel(&c).unwrap(), gs.parallel(&cs, 1.0).unwrap()),
            (
                g.series(&c).unwrap().feedback(&TransferFunction::identity(), -1.0).unwrap(),
                cs.series(&gs).unwrap().feedback(&StateSpace::gain(DMatrix::identity(1, 1)), -1.0).unwrap(),
            ),
        ];
        for (t, s) in pairs {
            assert!(max_rel(&t.freq_response(&w).unwrap(), &s.freq_response(&w).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = tid().to_ss().unwrap().with_dt(Some(1e-3));
        let j = serde_json::to_string(&s).unwrap();
        let back: StateSpace = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let k = StateSpace::gain(DMatrix::from_element(1, 1, 3.0));
        let back: StateSpace = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
    }
}
