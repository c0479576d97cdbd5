use nalgebra::DMatrix;

use super::ss::StateSpace;
use super::tf::TransferFunction;
use crate::error::{Error, Result};
use crate::linalg;

/// Bilinear (Tustin) discretization at sampling rate `fs` Hz.
pub fn c2d_tustin(sys: &StateSpace, fs: f64) -> Result<StateSpace> {
    if sys.dt.is_some() {
        return Err(Error::InvalidConfig("system is already discrete".into()));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::InvalidConfig(format!("sampling rate {fs}")));
    }
    let t = 1.0 / fs;
    let n = sys.order();
    let i = DMatrix::<f64>::identity(n, n);
    let m = &i - &sys.a * (t / 2.0);
    let mi = m.try_inverse().ok_or(Error::SingularTransform)?;
    let a = &mi * (&i + &sys.a * (t / 2.0));
    let b = &mi * &sys.b * t;
    let c = &sys.c * &mi;
    let d = &sys.d + &sys.c * &mi * &sys.b * (t / 2.0);
    Ok(StateSpace::new(a, b, c, d)?.with_dt(Some(t)))
}

/// Inverse of [`c2d_tustin`].
pub fn d2c_tustin(sys: &StateSpace) -> Result<StateSpace> {
    let t = sys.dt.ok_or_else(|| Error::InvalidConfig("system is continuous".into()))?;
    let n = sys.order();
    let i = DMatrix::<f64>::identity(n, n);
    let nn = (&sys.a + &i).try_inverse().ok_or(Error::SingularTransform)?;
    let a = (&sys.a - &i) * &nn * (2.0 / t);
    let b = &nn * &sys.b * (2.0 / t);
    let c = &sys.c * &nn * 2.0;
    let d = &sys.d - &sys.c * &nn * &sys.b;
    StateSpace::new(a, b, c, d)
}

/// `Φ = e^{A dt}` and `Γ = ∫₀^dt e^{Aτ} dτ B` through one augmented exponential.
pub fn zoh_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let aug = linalg::block2(
        &(a * dt),
        &(b * dt),
        &DMatrix::zeros(m, n),
        &DMatrix::zeros(m, m),
    );
    let e = aug.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    )
}

/// Zero-order-hold discretization with sample period `dt` seconds.
pub fn c2d_zoh(sys: &StateSpace, dt: f64) -> Result<StateSpace> {
    if sys.dt.is_some() {
        return Err(Error::InvalidConfig("system is already discrete".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("sample time {dt}")));
    }
    let (phi, gamma) = zoh_matrices(&sys.a, &sys.b, dt);
    Ok(StateSpace::new(phi, gamma, sys.c.clone(), sys.d.clone())?.with_dt(Some(dt)))
}

impl TransferFunction {
    pub fn c2d_tustin(&self, fs: f64) -> Result<TransferFunction> {
        c2d_tustin(&self.to_ss()?, fs)?.to_tf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::tf::STABILITY_TOL;
    use num_complex::Complex64;

    #[test]
    fn bilinear_integrator() {
        let integ = TransferFunction::new(vec![1.0], vec![1.0, 0.0]).unwrap();
        let d = integ.c2d_tustin(1000.0).unwrap();
        assert_eq!(d.dt(), Some(1e-3));
        let want = [0.0005, 0.0005];
        for (c, w) in d.num().coeffs().iter().zip(want) {
            assert!((c - w).abs() < 1e-15);
        }
        assert!((d.den().coeffs()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_pole_map() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 30.67]).unwrap();
        let d = c2d_tustin(&g.to_ss().unwrap(), 1000.0).unwrap();
        let want = (1.0 - 30.67 / 2000.0) / (1.0 + 30.67 / 2000.0);
        assert!((d.a[(0, 0)] - want).abs() < 1e-14);
        assert!((want - 0.9698).abs() < 1e-4);
    }

    #[test]
    fn pitch_plant_stays_stable_and_matches() {
        let g = TransferFunction::new(vec![1547.4], vec![1.0, 15.493, 444.77476, 2097.6192]).unwrap();
        let s = g.to_ss().unwrap();
        let d = c2d_tustin(&s, 1000.0).unwrap();
        assert!(d.is_stable(STABILITY_TOL).unwrap());
        for w in [0.1, 1.0, 10.0, 49.0] {
            let a = s.eval_siso(Complex64::new(0.0, w)).unwrap();
            let b = d.eval_siso(d.freq_point(w)).unwrap();
            assert!((a - b).norm() / a.norm() < 0.01);
        }
        let back = d2c_tustin(&d).unwrap();
        let w = Complex64::new(0.0, 3.0);
        assert!((back.eval_siso(w).unwrap() - s.eval_siso(w).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn zoh_of_first_order_lag() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let d = c2d_zoh(&g.to_ss().unwrap(), 0.1).unwrap();
        assert!((d.a[(0, 0)] - (-0.1f64).exp()).abs() < 1e-14);
        assert!((d.b[(0, 0)] - (1.0 - (-0.1f64).exp())).abs() < 1e-14);
    }
}
