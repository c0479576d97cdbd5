use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexSchur};

/// Hamiltonian eigenvalues with `|Re λ| ≤ tol·max(1, |λ|)` count as lying
/// on the imaginary axis.
pub const IMAG_AXIS_TOL: f64 = 1e-8;
const NEWTON_STEPS: usize = 3;

/// Stabilizing solution of `AᵀX + XA − XGX + Q = 0` (`G`, `Q` symmetric)
/// from the ordered Schur form of `[[A, −G], [−Q, −Aᵀ]]`.
pub fn ric_schur(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || g.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Dimension("riccati: A, G, Q must be n×n".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let h = linalg::block2(a, &(-g), &(-q), &(-a.transpose()));
    let (d, hb) = linalg::balance(&h);
    let mut schur = ComplexSchur::from_real(&hb)?;
    for z in schur.eigenvalues() {
        if z.re.abs() <= IMAG_AXIS_TOL * z.norm().max(1.0) {
            return Err(Error::NoStabilizingSolution(format!(
                "Hamiltonian eigenvalue {z} on the imaginary axis"
            )));
        }
    }
    let k = schur.reorder(|z| z.re < 0.0);
    if k != n {
        return Err(Error::NoStabilizingSolution(format!(
            "{k} stable eigenvalues, expected {n}"
        )));
    }
    let mut u = schur.q.columns(0, n).into_owned();
    for i in 0..2 * n {
        u.row_mut(i).scale_mut(d[i].into());
    }
    let u1 = u.rows(0, n).into_owned();
    let u2 = u.rows(n, n).into_owned();
    let u1i = u1
        .try_inverse()
        .ok_or_else(|| Error::NoStabilizingSolution("stable subspace is not a graph".into()))?;
    let x = (u2 * u1i).map(|z| z.re);
    let mut x = linalg::symmetrize(&x);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoStabilizingSolution("non-finite solution".into()));
    }
    for _ in 0..NEWTON_STEPS {
        let r = residual_matrix(a, g, q, &x);
        let acl = a - g * &x;
        let dx = match linalg::lyap(&acl.transpose(), &r) {
            Ok(dx) => dx,
            Err(_) => break,
        };
        let cand = linalg::symmetrize(&(&x + dx));
        if linalg::fro(&residual_matrix(a, g, q, &cand)) < linalg::fro(&r) {
            x = cand;
        } else {
            break;
        }
    }
    Ok(x)
}

fn residual_matrix(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * x + x * a - x * g * x + q
}

/// Stabilizing solution of `AᵀX + XA − XBR⁻¹BᵀX + Q = 0`.
pub fn care_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if b.nrows() != n || r.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::Dimension("care: B or R shape".into()));
    }
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("R is not positive definite".into()))?;
    let g = linalg::symmetrize(&(b * chol.solve(&b.transpose())));
    let x = ric_schur(a, &g, &linalg::symmetrize(q))?;
    let acl = a - &g * &x;
    if linalg::eigenvalues(&acl)?.iter().any(|z| !(z.re < 0.0)) {
        return Err(Error::NoStabilizingSolution("closed loop is not Hurwitz".into()));
    }
    Ok(x)
}

/// `‖AᵀX + XA − XBR⁻¹BᵀX + Q‖_F`.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let g = b * r.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(r.nrows(), r.ncols(), f64::NAN)) * b.transpose();
    linalg::fro(&residual_matrix(a, &g, q, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_solution() {
        let one = m(1, 1, &[1.0]);
        let x = care_solve(&m(1, 1, &[-1.0]), &one, &one, &one).unwrap();
        assert!((x[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_weight_on_stable_system() {
        let a = m(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        let x = care_solve(&a, &b, &DMatrix::zeros(2, 2), &m(1, 1, &[1.0])).unwrap();
        assert!(linalg::fro(&x) < 1e-12);
    }

    #[test]
    fn unstable_uncontrollable_mode_fails() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        assert!(matches!(
            care_solve(&a, &b, &q, &m(1, 1, &[1.0])),
            Err(Error::NoStabilizingSolution(_))
        ));
    }

    #[test]
    fn random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 6;
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
            let cq = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let q = &cq * cq.transpose();
            let r = DMatrix::identity(2, 2) * rng.random_range(0.1..2.0);
            let x = care_solve(&a, &b, &q, &r).unwrap();
            let res = care_residual(&a, &b, &q, &r, &x);
            assert!(res < 1e-8 * (1.0 + linalg::fro(&x)), "{res}");
            assert!(x.clone().symmetric_eigen().eigenvalues.min() > -1e-9);
        }
    }
}
