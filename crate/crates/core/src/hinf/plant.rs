use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::weights::SynthesisSpec;
use crate::error::{Error, Result};
use crate::lti::StateSpace;

/// Mixed-sensitivity generalized plant. Inputs `[w; u]`, outputs
/// `[z1; z2; z3; e]` with `z1 = Ws·e`, `z2 = Wu·u`, `z3 = Wt·G·u` and
/// `e = w − G·u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPlant {
    pub sys: StateSpace,
    pub nw: usize,
    pub nu: usize,
    pub nz: usize,
    pub ny: usize,
}

pub struct Partition {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d11: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub d22: DMatrix<f64>,
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let top = s.max();
    s.iter().filter(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE) && v > 0.0).count()
}

impl GeneralizedPlant {
    pub fn order(&self) -> usize {
        self.sys.order()
    }

    pub fn partition(&self) -> Partition {
        let s = &self.sys;
        let (nw, nu, nz, ny) = (self.nw, self.nu, self.nz, self.ny);
        Partition {
            a: s.a.clone(),
            b1: s.b.columns(0, nw).into_owned(),
            b2: s.b.columns(nw, nu).into_owned(),
            c1: s.c.rows(0, nz).into_owned(),
            c2: s.c.rows(nz, ny).into_owned(),
            d11: s.d.view((0, 0), (nz, nw)).into_owned(),
            d12: s.d.view((0, nw), (nz, nu)).into_owned(),
            d21: s.d.view((nz, 0), (ny, nw)).into_owned(),
            d22: s.d.view((nz, nw), (ny, nu)).into_owned(),
        }
    }

    pub fn check_regularity(&self) -> Result<()> {
        let p = self.partition();
        if rank(&p.d12) < self.nu {
            return Err(Error::RankDeficient("D12 lacks full column rank".into()));
        }
        if rank(&p.d21) < self.ny {
            return Err(Error::RankDeficient("D21 lacks full row rank".into()));
        }
        Ok(())
    }
}

/// State order `[G, Ws, Wt, Wu]`.
pub fn build_mixsyn_plant(spec: &SynthesisSpec) -> Result<GeneralizedPlant> {
    spec.validate()?;
    let g = spec.plant.to_ss()?;
    let ws = spec.ws.to_ss()?;
    let wt = spec.wt.to_ss()?;
    let wu = spec.wu.to_ss()?;
    let (ng, ns, nt, nu_) = (g.order(), ws.order(), wt.order(), wu.order());
    let n = ng + ns + nt + nu_;
    let (os, ot, ou) = (ng, ng + ns, ng + ns + nt);
    let dg = g.d[(0, 0)];
    let ds = ws.d[(0, 0)];
    let dt = wt.d[(0, 0)];
    let du = wu.d[(0, 0)];
    if ds != 0.0 {
        return Err(Error::InvalidSpec(
            "sensitivity weight must be strictly proper".into(),
        ));
    }
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 2);
    let mut c = DMatrix::zeros(4, n);
    let mut d = DMatrix::zeros(4, 2);
    a.view_mut((0, 0), (ng, ng)).copy_from(&g.a);
    a.view_mut((os, os), (ns, ns)).copy_from(&ws.a);
    a.view_mut((ot, ot), (nt, nt)).copy_from(&wt.a);
    a.view_mut((ou, ou), (nu_, nu_)).copy_from(&wu.a);
    a.view_mut((os, 0), (ns, ng)).copy_from(&(-&ws.b * &g.c));
    a.view_mut((ot, 0), (nt, ng)).copy_from(&(&wt.b * &g.c));
    // w enters through e
    b.view_mut((os, 0), (ns, 1)).copy_from(&ws.b);
    // u
    b.view_mut((0, 1), (ng, 1)).copy_from(&g.b);
    b.view_mut((os, 1), (ns, 1)).copy_from(&(&ws.b * (-dg)));
    b.view_mut((ot, 1), (nt, 1)).copy_from(&(&wt.b * dg));
    b.view_mut((ou, 1), (nu_, 1)).copy_from(&wu.b);
    // z1 = Ws e
    c.view_mut((0, 0), (1, ng)).copy_from(&(&g.c * (-ds)));
    c.view_mut((0, os), (1, ns)).copy_from(&ws.c);
    // z2 = Wu u
    c.view_mut((1, ou), (1, nu_)).copy_from(&wu.c);
    // z3 = Wt G u
    c.view_mut((2, 0), (1, ng)).copy_from(&(&g.c * dt));
    c.view_mut((2, ot), (1, nt)).copy_from(&wt.c);
    // e = w − G u
    c.view_mut((3, 0), (1, ng)).copy_from(&(-&g.c));
    d[(0, 0)] = ds;
    d[(0, 1)] = -ds * dg;
    d[(1, 1)] = du;
    d[(2, 1)] = dt * dg;
    d[(3, 0)] = 1.0;
    d[(3, 1)] = -dg;
    let gp = GeneralizedPlant {
        sys: StateSpace::new(a, b, c, d)?,
        nw: 1,
        nu: 1,
        nz: 3,
        ny: 1,
    };
    gp.check_regularity()?;
    Ok(gp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;

    fn spec(wu: f64) -> SynthesisSpec {
        let g = TransferFunction::new(vec![1547.4], vec![1.0, 15.493, 444.77476, 2097.6192]).unwrap();
        let tid = TransferFunction::new(vec![247.3], vec![1.0, 30.67, 247.3]).unwrap();
        let wt = TransferFunction::new(
            vec![1659.6, 1659.6 * 2.868, 1659.6 * 60.44],
            vec![1.0, 2.477e4 + 9.678, 2.477e4 * 9.678],
        )
        .unwrap();
        SynthesisSpec::from_tid(g, &tid, wu, wt, 0.88).unwrap()
    }

    #[test]
    fn pitch_plant_dimensions() {
        let p = build_mixsyn_plant(&spec(0.05)).unwrap();
        assert_eq!(p.order(), 8);
        assert_eq!(p.sys.d[(3, 0)], 1.0);
        assert_eq!((p.sys.outputs(), p.sys.inputs()), (4, 2));
    }

    #[test]
    fn zero_control_weight_is_singular() {
        assert!(matches!(build_mixsyn_plant(&spec(0.0)), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn channels_match_definitions() {
        let s = spec(0.05);
        let p = build_mixsyn_plant(&s).unwrap();
        let w = num_complex::Complex64::new(0.0, 2.0);
        let m = p.sys.eval(w).unwrap();
        let g = s.plant.eval(w).unwrap();
        let ws = s.ws.eval(w).unwrap();
        let wt = s.wt.eval(w).unwrap();
        let want = [ws, -ws * g, 0.0.into(), 0.05.into(), 0.0.into(), wt * g, 1.0.into(), -g];
        let got = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)], m[(2, 0)], m[(2, 1)], m[(3, 0)], m[(3, 1)]];
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0), "{a} vs {b}");
        }
    }
}
