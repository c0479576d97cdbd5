use nalgebra::{DMatrix, DVector};

const RADIX: f64 = 2.0;

/// Diagonal similarity scaling (Parlett–Reinsch, powers of two).
///
/// Returns `(d, D⁻¹ A D)` with `D = diag(d)`; eigenvalues are unchanged to
/// rounding.
pub fn balance(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    scale(a, None, None)
}

/// Balance a realization `(A, B, C)`, accounting for input and output rows
/// in the norms. Returns `(d, A', B', C')` with `A' = D⁻¹AD`, `B' = D⁻¹B`,
/// `C' = CD`.
pub fn balance_state_space(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (d, ab) = scale(a, Some(b), Some(c));
    let mut bb = b.clone();
    let mut cb = c.clone();
    for i in 0..d.len() {
        bb.row_mut(i).scale_mut(1.0 / d[i]);
        cb.column_mut(i).scale_mut(d[i]);
    }
    (d, ab, bb, cb)
}

fn scale(
    a: &DMatrix<f64>,
    b: Option<&DMatrix<f64>>,
    c: Option<&DMatrix<f64>>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut d = DVector::from_element(n, 1.0);
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if let Some(b) = b {
                row += b.row(i).iter().map(|x| x.abs()).sum::<f64>() / d[i];
            }
            if let Some(c) = c {
                col += c.column(i).iter().map(|x| x.abs()).sum::<f64>() * d[i];
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let s = col + row;
            let mut f = 1.0;
            let mut g = row / RADIX;
            while col < g {
                f *= RADIX;
                col *= sqrdx;
            }
            g = row * RADIX;
            while col > g {
                f /= RADIX;
                col /= sqrdx;
            }
            if (col + row) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                m.row_mut(i).scale_mut(1.0 / f);
                m.column_mut(i).scale_mut(f);
            }
        }
    }
    (d, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balancing_is_a_similarity() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let (d, ab) = balance(&a);
        let dm = DMatrix::from_diagonal(&d);
        let back = &dm * &ab * dm.try_inverse().unwrap();
        assert!((back - &a).abs().max() < 1e-9);
        assert!(ab.abs().max() < 1e3);
    }
}
