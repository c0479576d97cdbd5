//! Dense linear-algebra kernels not covered by nalgebra: complex Schur form
//! with eigenvalue reordering, diagonal balancing and Lyapunov equations.

mod balance;
mod lyap;
mod schur;

pub use balance::{balance, balance_state_space};
pub use lyap::{lyap, lyap_residual};
pub use schur::{eigenvalues, ComplexSchur};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Frobenius norm of a real matrix.
pub fn fro(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Block matrix `[[a, b], [c, d]]`.
pub fn block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (r1, c1) = (a.nrows(), a.ncols());
    let (r2, c2) = (c.nrows(), b.ncols());
    let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(c);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}
