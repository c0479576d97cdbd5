use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Complex Schur decomposition `A = Q T Qᴴ`, `T` upper triangular.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub t: CMatrix,
    pub q: CMatrix,
}

impl ComplexSchur {
    pub fn new(a: &CMatrix) -> Result<Self> {
        assert!(a.is_square(), "Schur decomposition of a non-square matrix");
        let n = a.nrows();
        let mut t = a.clone();
        let mut q = CMatrix::identity(n, n);
        if n > 1 {
            hessenberg(&mut t, &mut q);
            qr_iterate(&mut t, &mut q)?;
        }
        Ok(ComplexSchur { t, q })
    }

    pub fn from_real(a: &DMatrix<f64>) -> Result<Self> {
        Self::new(&super::to_complex(a))
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Reorders the form so that all eigenvalues satisfying `select` lead the
    /// diagonal. Returns how many were selected.
    pub fn reorder<F: Fn(Complex64) -> bool>(&mut self, select: F) -> usize {
        let n = self.t.nrows();
        let mut placed = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                let mut k = j;
                while k > placed {
                    self.swap(k - 1);
                    k -= 1;
                }
                placed += 1;
            }
        }
        placed
    }

    /// Swap the adjacent diagonal entries `k` and `k + 1`.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        // rows: T <- G T
        for j in k..n {
            let (a, b) = (self.t[(k, j)], self.t[(k + 1, j)]);
            self.t[(k, j)] = a * c + b * s;
            self.t[(k + 1, j)] = -s.conj() * a + b * c;
        }
        // columns: T <- T Gᴴ
        for i in 0..=k + 1 {
            let (a, b) = (self.t[(i, k)], self.t[(i, k + 1)]);
            self.t[(i, k)] = a * c + b * s.conj();
            self.t[(i, k + 1)] = -a * s + b * c;
        }
        for i in 0..n {
            let (a, b) = (self.q[(i, k)], self.q[(i, k + 1)]);
            self.q[(i, k)] = a * c + b * s.conj();
            self.q[(i, k + 1)] = -a * s + b * c;
        }
        self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
    }
}

/// Eigenvalues of a real square matrix, sorted by real part then imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, balanced) = super::balance(a);
    let mut ev = ComplexSchur::from_real(&balanced)?.eigenvalues();
    // Real input: snap conjugate partners and near-real values.
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for z in ev.iter_mut() {
        if z.im.abs() <= 1e-13 * scale.max(z.norm()) {
            z.im = 0.0;
        }
    }
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

/// `(c, s)` with `c` real such that `[[c, s], [-s̄, c]] [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ny = y.norm();
    if ny == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let nx = x.norm();
    if nx == 0.0 {
        return (0.0, y.conj() / ny);
    }
    let norm = nx.hypot(ny);
    let phase = x / nx;
    (nx / norm, phase * y.conj() / norm)
}

fn hessenberg(t: &mut CMatrix, q: &mut CMatrix) {
    let n = t.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| t[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // left: rows k+1.. of t, H = I - beta v vᴴ
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * t[(k + 1 + idx, j)];
            }
            dot *= beta;
            for (idx, vi) in v.iter().enumerate() {
                t[(k + 1 + idx, j)] -= vi * dot;
            }
        }
        // right: columns k+1.. of t and q
        for m in [&mut *t, &mut *q] {
            for i in 0..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for (idx, vi) in v.iter().enumerate() {
                    dot += m[(i, k + 1 + idx)] * vi;
                }
                dot *= beta;
                for (idx, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + idx)] -= dot * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            t[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn qr_iterate(t: &mut CMatrix, q: &mut CMatrix) -> Result<()> {
    let n = t.nrows();
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let anorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = f64::MIN_POSITIVE.max(anorm * eps * 1e-3);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = t[(l, l - 1)].norm();
            let diag = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            if sub <= eps * diag || sub <= tiny {
                t[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > MAX_SWEEPS_PER_EIGENVALUE * n {
            return Err(Error::NoConvergence);
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift
            t[(hi, hi)] + t[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson(
                t[(hi - 1, hi - 1)],
                t[(hi - 1, hi)],
                t[(hi, hi - 1)],
                t[(hi, hi)],
            )
        };
        let mut x = t[(l, l)] - shift;
        let mut y = t[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = t[(k, k - 1)];
                y = t[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let jstart = if k > l { k - 1 } else { k };
            for j in jstart..n {
                let (a, b) = (t[(k, j)], t[(k + 1, j)]);
                t[(k, j)] = a * c + b * s;
                t[(k + 1, j)] = -s.conj() * a + b * c;
            }
            let imax = (k + 2).min(hi);
            for i in 0..=imax {
                let (a, b) = (t[(i, k)], t[(i, k + 1)]);
                t[(i, k)] = a * c + b * s.conj();
                t[(i, k + 1)] = -a * s + b * c;
            }
            for i in 0..n {
                let (a, b) = (q[(i, k)], q[(i, k + 1)]);
                q[(i, k)] = a * c + b * s.conj();
                q[(i, k + 1)] = -a * s + b * c;
            }
            if k > l {
                t[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
