//! Multiplicative uncertainty: relative-error profiles, envelopes, weight
//! fitting and sampled perturbed families.

mod weight;

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lti::{check_grid, TransferFunction};

pub use weight::{fit_weight, DEFAULT_MARGIN, MAX_WEIGHT_ORDER};

/// `|G(jω)/G0(jω) − 1|` on `grid`.
pub fn relative_error_profile(g: &TransferFunction, g0: &TransferFunction, grid: &[f64]) -> Result<Vec<f64>> {
    let v0 = g0.freq_response(grid)?;
    let v = g.freq_response(grid)?;
    let scale = v0.magnitudes().iter().cloned().fold(0.0, f64::max);
    v.values()
        .iter()
        .zip(v0.values())
        .zip(grid)
        .map(|((a, b), &w)| {
            if b.norm() < 1e-12 * scale || b.norm() == 0.0 {
                Err(Error::NominalZero(w))
            } else {
                Ok((a / b - 1.0).norm())
            }
        })
        .collect()
}

/// Pointwise maximum.
pub fn envelope(profiles: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::InsufficientData("no profiles".into()))?;
    if profiles.iter().any(|p| p.len() != first.len()) {
        return Err(Error::GridMismatch);
    }
    Ok((0..first.len())
        .map(|i| profiles.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Relative-error magnitudes of a family against one nominal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyProfile {
    pub omega: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

impl UncertaintyProfile {
    pub fn compute(family: &[TransferFunction], g0: &TransferFunction, grid: &[f64], exec: Execution) -> Result<Self> {
        check_grid(grid)?;
        let magnitude = exec
            .map(family, |g| relative_error_profile(g, g0, grid))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(UncertaintyProfile {
            omega: grid.to_vec(),
            magnitude,
        })
    }

    pub fn envelope(&self) -> Result<Vec<f64>> {
        envelope(&self.magnitude)
    }

    /// `omega,mag_1,…,mag_n`
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "omega")?;
        for i in 0..self.magnitude.len() {
            write!(w, ",mag_{}", i + 1)?;
        }
        writeln!(w)?;
        for (k, o) in self.omega.iter().enumerate() {
            write!(w, "{o}")?;
            for m in &self.magnitude {
                write!(w, ",{}", m[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `ok` iff `|W| ≥ envelope` everywhere; `worst_margin = min(|W| − envelope)`.
pub fn validate_weight(w: &TransferFunction, profile: &UncertaintyProfile) -> Result<(bool, f64)> {
    let env = profile.envelope()?;
    let mags = w.freq_response(&profile.omega)?.magnitudes();
    let worst = mags
        .iter()
        .zip(&env)
        .map(|(m, e)| m - e)
        .fold(f64::INFINITY, f64::min);
    Ok((worst >= 0.0, worst))
}

pub const ALLPASS_CORNER_RANGE: (f64, f64) = (1.0, 100.0);

/// `(r, ω)` of the `n` all-pass perturbations drawn for `seed`.
pub fn perturbation_draws(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (ALLPASS_CORNER_RANGE.0.log10(), ALLPASS_CORNER_RANGE.1.log10());
    (0..n)
        .map(|_| {
            let r: f64 = rng.random_range(0.0..1.0);
            let w = 10f64.powf(rng.random_range(lo..hi));
            (r, w)
        })
        .collect()
}

/// `r·(ω − s)/(ω + s)`
pub fn allpass(r: f64, w: f64) -> Result<TransferFunction> {
    TransferFunction::new(vec![-r, r * w], vec![1.0, w])
}

/// `(1 + Δₖ W)·G0` with first-order all-pass `Δₖ` of gain `rₖ < 1`.
pub fn sample_perturbed(g0: &TransferFunction, w: &TransferFunction, n: usize, seed: u64) -> Result<Vec<TransferFunction>> {
    perturbation_draws(n, seed)
        .into_iter()
        .map(|(r, corner)| {
            if r == 0.0 {
                return Ok(g0.clone());
            }
            let dw = allpass(r, corner)?.series(w)?;
            TransferFunction::identity().parallel(&dw)?.series(g0)
        })
        .collect()
}

/// Nominal, uncertainty weight and the family that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainModel {
    pub nominal: TransferFunction,
    pub weight: TransferFunction,
    pub family: Vec<TransferFunction>,
}

impl UncertainModel {
    /// Checks weight stability, minimum phase and dominance over the family.
    pub fn new(nominal: TransferFunction, weight: TransferFunction, family: Vec<TransferFunction>, grid: &[f64]) -> Result<Self> {
        if !weight.is_stable(0.0)? {
            return Err(Error::InvalidSpec("uncertainty weight is unstable".into()));
        }
        if weight.zeros()?.iter().any(|z| z.re >= 0.0) {
            return Err(Error::InvalidSpec("uncertainty weight is not minimum phase".into()));
        }
        let prof = UncertaintyProfile::compute(&family, &nominal, grid, Execution::Sequential)?;
        if !family.is_empty() {
            let (ok, worst) = validate_weight(&weight, &prof)?;
            if !ok {
                return Err(Error::InvalidSpec(format!(
                    "weight falls below the family envelope by {}",
                    -worst
                )));
            }
        }
        Ok(UncertainModel {
            nominal,
            weight,
            family,
        })
    }
}

/// `|Δ(jω)|` for the all-pass perturbation; equals `r` at every frequency.
pub fn allpass_magnitude(r: f64, corner: f64, w: f64) -> f64 {
    let s = Complex64::new(0.0, w);
    (r * (corner - s) / (corner + s)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{standard_grid, Polynomial};

    fn g_pitch() -> TransferFunction {
        TransferFunction::new(vec![1547.4], vec![1.0, 15.493, 444.77476, 2097.6192]).unwrap()
    }

    fn g_roll() -> TransferFunction {
        TransferFunction::from_polys(
            Polynomial::constant(2049.8),
            &Polynomial::new(vec![1.0, 6.764]) * &Polynomial::new(vec![1.0, 19.03, 426.2]),
        )
        .unwrap()
    }

    #[test]
    fn profiles_of_simple_perturbations() {
        let grid = standard_grid();
        let g = g_pitch();
        assert!(relative_error_profile(&g, &g, &grid).unwrap().iter().all(|&v| v == 0.0));
        let p = relative_error_profile(&g.scale(1.1), &g, &grid).unwrap();
        assert!(p.iter().all(|v| (v - 0.1).abs() < 1e-12));
        let p = relative_error_profile(&g_roll(), &g, &[1e-6]).unwrap();
        assert!((p[0] - (0.71106f64 / 0.73770 - 1.0).abs()).abs() < 1e-3);
        assert!((p[0] - 0.036).abs() < 1e-3);
        let zero_at_one = TransferFunction::new(vec![1.0, 0.0, 1.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(
            relative_error_profile(&g, &zero_at_one, &[0.5, 1.0, 2.0]),
            Err(Error::NominalZero(1.0))
        );
    }

    #[test]
    fn envelope_cases() {
        let a = vec![0.1; 3];
        assert_eq!(envelope(&[a.clone()]).unwrap(), a);
        assert_eq!(envelope(&[a.clone(), vec![0.3; 3]]).unwrap(), vec![0.3; 3]);
        assert_eq!(envelope(&[a, vec![0.3; 2]]), Err(Error::GridMismatch));
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let w = TransferFunction::new(vec![1.9017, 1.9017 * 3.813, 1.9017 * 91.61], vec![1.0, 43.53, 545.3]).unwrap();
        let g = g_roll();
        assert!(sample_perturbed(&g, &w, 0, 1).unwrap().is_empty());
        let a = sample_perturbed(&g, &w, 12, 9).unwrap();
        assert_eq!(a, sample_perturbed(&g, &w, 12, 9).unwrap());
        let grid = standard_grid();
        let prof = UncertaintyProfile::compute(&a, &g, &grid, Execution::Sequential).unwrap();
        assert!(validate_weight(&w, &prof).unwrap().0);
        for (r, c) in perturbation_draws(50, 3) {
            assert!((0.0..1.0).contains(&r) && (1.0..=100.0).contains(&c));
            for wv in [0.01, 3.0, 1e3] {
                assert!((allpass_magnitude(r, c, wv) - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_csv_header() {
        let p = UncertaintyProfile {
            omega: vec![1.0, 2.0],
            magnitude: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "omega,mag_1,mag_2\n1,0.1,0.3\n2,0.2,0.4\n");
    }
}
