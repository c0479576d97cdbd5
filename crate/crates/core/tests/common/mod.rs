#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use quadhinf::lti::StateSpace;

/// Modal block `[[re, im], [-im, re]]` or a real pole, per `(wn, zeta, pair)`.
fn modal(poles: &[(f64, f64, bool)], n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut i = 0;
    for &(wn, z, pair) in poles {
        if i >= n {
            break;
        }
        if pair && i + 1 < n {
            let (re, im) = (-z * wn, wn * (1.0 - z * z).sqrt());
            a[(i, i)] = re;
            a[(i + 1, i + 1)] = re;
            a[(i, i + 1)] = im;
            a[(i + 1, i)] = -im;
            i += 2;
        } else {
            a[(i, i)] = -wn;
            i += 1;
        }
    }
    a
}

fn matrix(r: usize, c: usize, lim: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-lim..lim, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

/// Stable system with damping at least 0.05 and a well-conditioned basis.
pub fn stable_system(max_n: usize, max_io: usize) -> impl Strategy<Value = StateSpace> {
    (1..=max_n, 1..=max_io, 1..=max_io).prop_flat_map(|(n, m, p)| {
        (
            prop::collection::vec((0.1f64..100.0, 0.05f64..0.9, any::<bool>()), n),
            matrix(n, n, 0.4),
            matrix(n, m, 1.0),
            matrix(p, n, 1.0),
            matrix(p, m, 0.5),
        )
            .prop_map(move |(poles, t, b, c, d)| {
                let a = modal(&poles, n);
                let t = t + DMatrix::identity(n, n);
                let ti = t.clone().try_inverse().expect("diagonally dominant");
                StateSpace::new(&t * a * &ti, &t * b, c * ti, d).unwrap()
            })
    })
}

/// Upper-triangular `A` with eigenvalues of either sign, kept off the axis.
pub fn any_system(max_n: usize) -> impl Strategy<Value = StateSpace> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0.01f64..50.0, prop::bool::weighted(0.3)), n),
            matrix(n, n, 3.0),
            matrix(n, n, 0.3),
        )
            .prop_map(move |(eig, upper, t)| {
                let mut a = DMatrix::zeros(n, n);
                for i in 0..n {
                    let (mag, unstable) = eig[i];
                    a[(i, i)] = if unstable { mag } else { -mag };
                    for j in i + 1..n {
                        a[(i, j)] = upper[(i, j)];
                    }
                }
                let t = t + DMatrix::identity(n, n);
                let ti = t.clone().try_inverse().unwrap();
                StateSpace::new(
                    &t * a * &ti,
                    DMatrix::from_element(n, 1, 1.0),
                    DMatrix::from_element(1, n, 1.0),
                    DMatrix::zeros(1, 1),
                )
                .unwrap()
            })
    })
}
