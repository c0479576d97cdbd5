use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 400;
pub const GRID_MIN: f64 = 0.01;
pub const GRID_MAX: f64 = 1000.0;

/// `n` logarithmically spaced points over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// 400 log-spaced points over `[0.01, 1000]` rad/s.
pub fn standard_grid() -> Vec<f64> {
    log_grid(GRID_MIN, GRID_MAX, GRID_POINTS)
}

/// Complex response sampled on a strictly increasing positive grid (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    omega: Vec<f64>,
    values: Vec<Complex64>,
}

pub fn check_grid(omega: &[f64]) -> Result<()> {
    if omega.first().is_some_and(|&w| !(w > 0.0)) {
        return Err(Error::Dimension("frequency grid must be positive".into()));
    }
    if omega.iter().any(|w| !w.is_finite()) || omega.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Dimension(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl FrequencyResponse {
    pub fn new(omega: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} frequencies, {} values",
                omega.len(),
                values.len()
            )));
        }
        check_grid(&omega)?;
        Ok(FrequencyResponse { omega, values })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Largest magnitude and the frequency where it occurs.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.omega)
            .map(|(v, &w)| (v.norm(), w))
            .max_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn map<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> FrequencyResponse {
        FrequencyResponse {
            omega: self.omega.clone(),
            values: self
                .omega
                .iter()
                .zip(&self.values)
                .map(|(&w, &v)| f(w, v))
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega,re,im")?;
        for (o, v) in self.omega.iter().zip(&self.values) {
            writeln!(w, "{o:e},{:e},{:e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "omega,re,im" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let (mut omega, mut values) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected 3 fields in {line:?}")));
            }
            omega.push(f[0]);
            values.push(Complex64::new(f[1], f[2]));
        }
        Self::new(omega, values)
    }
}
