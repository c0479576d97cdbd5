use nalgebra::DMatrix;

use super::ss::StateSpace;
use crate::error::{Error, Result};
use crate::linalg;

fn psd_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let e = linalg::symmetrize(w).symmetric_eigen();
    let mut f = e.eigenvectors.clone();
    for (j, &l) in e.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}

struct Balancer {
    hsv: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    lc: DMatrix<f64>,
    lo: DMatrix<f64>,
}

fn balancer(sys: &StateSpace) -> Result<Balancer> {
    if sys.dt.is_some() {
        return Err(Error::InvalidConfig(
            "balanced truncation expects a continuous system".into(),
        ));
    }
    if sys.poles()?.iter().any(|p| !(p.re < 0.0)) {
        return Err(Error::UnstableSystem);
    }
    let wc = linalg::lyap(&sys.a, &(&sys.b * sys.b.transpose()))?;
    let wo = linalg::lyap(&sys.a.transpose(), &(sys.c.transpose() * &sys.c))?;
    let lc = psd_factor(&wc);
    let lo = psd_factor(&wo);
    let svd = (lo.transpose() * &lc).svd(true, true);
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let u_full = svd.u.unwrap();
    let vt_full = svd.v_t.unwrap();
    let n = sys.order();
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        u.set_column(k, &u_full.column(i));
        v.set_column(k, &vt_full.row(i).transpose());
    }
    Ok(Balancer {
        hsv: idx.iter().map(|&i| svd.singular_values[i]).collect(),
        u,
        v,
        lc,
        lo,
    })
}

/// Hankel singular values, largest first.
pub fn hankel_singular_values(sys: &StateSpace) -> Result<Vec<f64>> {
    if sys.order() == 0 {
        return Ok(Vec::new());
    }
    Ok(balancer(&sys.balanced())?.hsv)
}

/// Square-root balanced truncation to `order` states. Returns the reduced
/// system and the a-priori bound `2·Σ` of the discarded Hankel singular
/// values on `‖G − G_r‖∞`.
///
/// States with numerically zero Hankel singular values carry no input/output
/// behavior and are dropped even when `order` asks to keep them.
pub fn balanced_truncation(sys: &StateSpace, order: usize) -> Result<(StateSpace, f64)> {
    let n = sys.order();
    if order > n {
        return Err(Error::InvalidConfig(format!(
            "target order {order} exceeds {n}"
        )));
    }
    if order == n {
        if sys.poles()?.iter().any(|p| !(p.re < 0.0)) {
            return Err(Error::UnstableSystem);
        }
        return Ok((sys.clone(), 0.0));
    }
    let sys = sys.balanced();
    let bal = balancer(&sys)?;
    let top = bal.hsv.first().copied().unwrap_or(0.0);
    let r = bal
        .hsv
        .iter()
        .take(order)
        .take_while(|&&s| s > 1e-13 * top)
        .count();
    let bound = 2.0 * bal.hsv[order..].iter().sum::<f64>();
    let mut sl = DMatrix::zeros(r, r);
    for k in 0..r {
        sl[(k, k)] = 1.0 / bal.hsv[k].sqrt();
    }
    let tr = &bal.lc * bal.v.columns(0, r) * &sl;
    let tl = &sl * bal.u.columns(0, r).transpose() * bal.lo.transpose();
    let red = StateSpace::new(
        &tl * &sys.a * &tr,
        &tl * &sys.b,
        &sys.c * &tr,
        sys.d.clone(),
    )?;
    Ok((red, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::norm::hinf_norm;
    use crate::lti::tf::TransferFunction;

    #[test]
    fn keeps_full_order() {
        let g = TransferFunction::new(vec![1.0, 3.0], vec![1.0, 3.0, 2.0]).unwrap().to_ss().unwrap();
        let (r, b) = balanced_truncation(&g, 2).unwrap();
        assert_eq!(r, g);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn unreachable_mode_removed_exactly() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let g = StateSpace::new(a, b, c, DMatrix::zeros(1, 1)).unwrap();
        let hsv = hankel_singular_values(&g).unwrap();
        assert!(hsv[1] < 1e-12);
        let (r, bound) = balanced_truncation(&g, 1).unwrap();
        assert_eq!(r.order(), 1);
        assert!(bound < 1e-12);
        let err = hinf_norm(&g.parallel(&r, -1.0).unwrap(), 1e-6).unwrap();
        assert!(err < 1e-10);
        assert!((r.poles().unwrap()[0].re + 1.0).abs() < 1e-10);
    }

    #[test]
    fn bound_holds_for_fourth_order() {
        let g = TransferFunction::zpk(
            &[],
            &[-1.0, -3.0, -10.0, -30.0].map(|p| num_complex::Complex64::new(p, 0.0)),
            900.0,
        )
        .unwrap()
        .to_ss()
        .unwrap();
        for k in 1..4 {
            let (r, bound) = balanced_truncation(&g, k).unwrap();
            let err = hinf_norm(&g.parallel(&r, -1.0).unwrap(), 1e-8).unwrap();
            assert!(err <= bound * (1.0 + 1e-9), "order {k}: {err} > {bound}");
        }
    }

    #[test]
    fn rejects_unstable() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, -1.0, 4.0]).unwrap().to_ss().unwrap();
        assert_eq!(balanced_truncation(&g, 1).unwrap_err(), Error::UnstableSystem);
    }
}
