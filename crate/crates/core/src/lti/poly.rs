use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;

/// Real polynomial, coefficients in descending powers.
///
/// Leading zeros are stripped on construction; the zero polynomial is `[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(v: Vec<f64>) -> Self {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|&c| c != 0.0);
        match first {
            Some(i) => Polynomial {
                coeffs: coeffs[i..].to_vec(),
            },
            None => Polynomial::zero(),
        }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// `s`
    pub fn s() -> Self {
        Polynomial {
            coeffs: vec![1.0, 0.0],
        }
    }

    /// Monic polynomial with the given roots. Complex roots are expected in
    /// conjugate pairs; the imaginary residue of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, ci) in c.iter().enumerate() {
                next[i] += ci;
                next[i + 1] -= ci * r;
            }
            c = next;
        }
        Polynomial::new(c.into_iter().map(|z| z.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(i, c)| c * (n - i) as f64)
                .collect(),
        )
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Roots via eigenvalues of the balanced companion matrix, with one
    /// Newton step per root. Sorted by real part.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.degree() == 0 {
            return Ok(Vec::new());
        }
        let trailing = self.coeffs.iter().rev().take_while(|&&c| c == 0.0).count();
        let core = &self.coeffs[..self.coeffs.len() - trailing];
        let n = core.len() - 1;
        let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
        if n > 0 {
            let lead = core[0];
            let mut comp = DMatrix::zeros(n, n);
            for j in 0..n {
                comp[(0, j)] = -core[j + 1] / lead;
            }
            for i in 1..n {
                comp[(i, i - 1)] = 1.0;
            }
            let p = Polynomial::new(core.to_vec());
            let dp = p.derivative();
            for z in linalg::eigenvalues(&comp)? {
                let f = p.eval_complex(z);
                let df = dp.eval_complex(z);
                let mut r = z;
                if df.norm() > 0.0 {
                    let cand = z - f / df;
                    if p.eval_complex(cand).norm() < f.norm() {
                        r = cand;
                    }
                }
                if z.im == 0.0 {
                    r.im = 0.0;
                }
                roots.push(r);
            }
        }
        roots.sort_by(|x, y| {
            x.re.partial_cmp(&y.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        Ok(roots)
    }
}

fn padded(p: &Polynomial, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len - p.coeffs.len()];
    v.extend_from_slice(&p.coeffs);
    v
}

/// Sum, with leading terms that cancel to rounding level removed.
fn add_sub(a: &Polynomial, b: &Polynomial, sign: f64) -> Polynomial {
    let len = a.coeffs.len().max(b.coeffs.len());
    let (pa, pb) = (padded(a, len), padded(b, len));
    let mut out: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x + sign * y).collect();
    for i in 0..len {
        let noise = 8.0 * f64::EPSILON * (pa[i].abs() + pb[i].abs());
        if out[i].abs() <= noise {
            out[i] = 0.0;
        } else {
            break;
        }
    }
    Polynomial::new(out)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        add_sub(self, rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        add_sub(self, rhs, -1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
