use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::chirp::ExperimentRecord;
use super::etfe::etfe;
use super::fit::{fit_percent, fit_tf};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lti::{standard_grid, TransferFunction};

pub const POLE_RANGE: (usize, usize) = (2, 5);
pub const MAX_ZEROS: usize = 3;
/// Percentage points below the best fit that still count as similar.
pub const FIT_WINDOW: f64 = 5.0;
pub const RHP_ZERO_TOL: f64 = 1e-9;

/// `(n_poles, n_zeros)` for every proper structure in the search space.
pub fn structures() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for p in POLE_RANGE.0..=POLE_RANGE.1 {
        for z in 0..=p.min(MAX_ZEROS) {
            v.push((p, z));
        }
    }
    v
}

fn ser_fit<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_fit<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

/// A fitted structure. Failed fits have no model, `fit_percent = −∞`
/// (`null` in JSON) and an error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateModel {
    pub model: Option<TransferFunction>,
    pub n_poles: usize,
    pub n_zeros: usize,
    #[serde(serialize_with = "ser_fit", deserialize_with = "de_fit")]
    pub fit_percent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CandidateModel {
    pub fn failed(n_poles: usize, n_zeros: usize, e: &Error) -> Self {
        CandidateModel {
            model: None,
            n_poles,
            n_zeros,
            fit_percent: f64::NEG_INFINITY,
            error: Some(e.to_string()),
        }
    }

    pub fn total_order(&self) -> usize {
        self.n_poles + self.n_zeros
    }

    pub fn has_rhp_zero(&self) -> bool {
        match &self.model {
            Some(m) => m
                .zeros()
                .map(|z| z.iter().any(|z| z.re > RHP_ZERO_TOL * z.norm().max(1.0)))
                .unwrap_or(true),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyOptions {
    pub n_avg: usize,
    pub max_iters: usize,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            n_avg: 2,
            max_iters: 50,
        }
    }
}

/// Fits all 15 structures to one record.
pub fn enumerate_candidates(
    record: &ExperimentRecord,
    opts: &IdentifyOptions,
    exec: Execution,
) -> Vec<CandidateModel> {
    let fr = etfe(record, opts.n_avg);
    let st = structures();
    exec.map(&st, |&(p, z)| {
        let fitted = fr
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|fr| fit_tf(fr, z, p, opts.max_iters))
            .and_then(|m| {
                let f = fit_percent(&m, record)?;
                if f.is_finite() {
                    Ok((m, f))
                } else {
                    Err(Error::FitDiverged("non-finite fit".into()))
                }
            });
        match fitted {
            Ok((m, f)) => CandidateModel {
                model: Some(m),
                n_poles: p,
                n_zeros: z,
                fit_percent: f,
                error: None,
            },
            Err(e) => CandidateModel::failed(p, z, &e),
        }
    })
}

/// Index of the preferred candidate: no RHP zeros, fit within the window of
/// the best admissible fit, lowest `n_poles + n_zeros`, then highest fit.
pub fn select_best_index(candidates: &[CandidateModel]) -> Result<usize> {
    let admissible: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].fit_percent.is_finite() && !candidates[i].has_rhp_zero())
        .collect();
    let best_fit = admissible
        .iter()
        .map(|&i| candidates[i].fit_percent)
        .fold(f64::NEG_INFINITY, f64::max);
    admissible
        .into_iter()
        .filter(|&i| candidates[i].fit_percent >= best_fit - FIT_WINDOW)
        .min_by(|&i, &j| {
            let (a, b) = (&candidates[i], &candidates[j]);
            a.total_order()
                .cmp(&b.total_order())
                .then(b.fit_percent.total_cmp(&a.fit_percent))
                .then(i.cmp(&j))
        })
        .ok_or(Error::NoAdmissibleCandidate)
}

pub fn select_best(candidates: &[CandidateModel]) -> Result<CandidateModel> {
    Ok(candidates[select_best_index(candidates)?].clone())
}

/// Index of the model closest to all others in summed log-magnitude L2
/// distance over the standard grid.
pub fn select_nominal_index(models: &[TransferFunction]) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::InsufficientData("no models".into()));
    }
    let grid = standard_grid();
    let logs = models
        .iter()
        .map(|m| Ok(m.freq_response(&grid)?.magnitudes().iter().map(|v| v.ln()).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let d: Vec<f64> = logs
        .iter()
        .map(|li| logs.iter().map(|lk| dist(li, lk)).sum())
        .collect();
    let mut best = 0;
    for i in 1..d.len() {
        if d[i] < d[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn select_nominal(models: &[TransferFunction]) -> Result<TransferFunction> {
    Ok(models[select_nominal_index(models)?].clone())
}

/// Counts of pole real parts in bins of fixed width ending at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl PoleHistogram {
    pub fn new(real_parts: &[f64], width: f64) -> Self {
        let lo = real_parts.iter().cloned().fold(0.0, f64::min);
        let hi = real_parts.iter().cloned().fold(0.0, f64::max);
        let start = (lo / width).floor() * width;
        let end = ((hi / width).ceil() * width).max(0.0);
        let nbins = (((end - start) / width).round() as usize).max(1);
        let edges: Vec<f64> = (0..=nbins).map(|i| start + i as f64 * width).collect();
        let mut counts = vec![0; nbins];
        for &r in real_parts {
            let k = (((r - start) / width).floor() as usize).min(nbins - 1);
            counts[k] += 1;
        }
        PoleHistogram { edges, counts }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lower,upper,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[i], self.edges[i + 1], c)?;
        }
        Ok(())
    }
}

pub const HISTOGRAM_BIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub candidates: Vec<Vec<CandidateModel>>,
    pub selected_index: Vec<usize>,
    pub selected: Vec<TransferFunction>,
    pub nominal_index: usize,
    pub nominal: TransferFunction,
    pub pole_histogram: PoleHistogram,
}

/// Candidate search on every record, per-record selection, then the nominal.
pub fn identify(
    records: &[ExperimentRecord],
    opts: &IdentifyOptions,
    exec: Execution,
) -> Result<IdentificationReport> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let candidates: Vec<Vec<CandidateModel>> =
        exec.map(records, |r| enumerate_candidates(r, opts, Execution::Sequential));
    assemble_report(candidates)
}

/// Selection and nominal choice over already enumerated candidate sets.
pub fn assemble_report(candidates: Vec<Vec<CandidateModel>>) -> Result<IdentificationReport> {
    if candidates.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let mut selected_index = Vec::new();
    let mut selected = Vec::new();
    for c in &candidates {
        let i = select_best_index(c)?;
        selected_index.push(i);
        selected.push(c[i].model.clone().expect("admissible candidates have models"));
    }
    let nominal_index = select_nominal_index(&selected)?;
    let mut re = Vec::new();
    for m in &selected {
        re.extend(m.poles()?.iter().map(|p| p.re));
    }
    Ok(IdentificationReport {
        candidates,
        nominal: selected[nominal_index].clone(),
        selected_index,
        selected,
        nominal_index,
        pole_histogram: PoleHistogram::new(&re, HISTOGRAM_BIN),
    })
}
