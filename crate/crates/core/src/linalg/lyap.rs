use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ComplexSchur, CMatrix};
use crate::error::{Error, Result};

/// Solves `A X + X Aᵀ + Q = 0` (Bartels–Stewart on the complex Schur form).
///
/// Fails when `A` and `-Aᵀ` share an eigenvalue.
pub fn lyap(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if q.nrows() != n || q.ncols() != n || !a.is_square() {
        return Err(Error::Dimension("lyap: A and Q must be n×n".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let s = ComplexSchur::from_real(a)?;
    let (t, u) = (&s.t, &s.q);
    let qt: CMatrix = u.adjoint() * super::to_complex(q) * u;
    let mut y = CMatrix::zeros(n, n);
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for j in (0..n).rev() {
        let mut rhs: Vec<Complex64> = (0..n).map(|i| -qt[(i, j)]).collect();
        for k in j + 1..n {
            let c = t[(j, k)].conj();
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= c * y[(i, k)];
            }
        }
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in i + 1..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            let diag = t[(i, i)] + shift;
            if diag.norm() <= 1e-14 * scale {
                return Err(Error::UnstableSystem);
            }
            y[(i, j)] = acc / diag;
        }
    }
    let x = u * y * u.adjoint();
    Ok(super::symmetrize(&x.map(|z| z.re)))
}

/// `‖A X + X Aᵀ + Q‖_F`.
pub fn lyap_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    super::fro(&(a * x + x * a.transpose() + q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_case() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let x = lyap(&a, &q).unwrap();
        assert!((x[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn random_stable_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=10 {
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let shift = crate::linalg::eigenvalues(&a)
                .unwrap()
                .iter()
                .map(|z| z.re)
                .fold(f64::MIN, f64::max);
            for i in 0..n {
                a[(i, i)] -= shift + 0.5;
            }
            let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
            let q = &b * b.transpose();
            let x = lyap(&a, &q).unwrap();
            assert!(lyap_residual(&a, &x, &q) < 1e-10 * (1.0 + crate::linalg::fro(&x)));
        }
    }
}
