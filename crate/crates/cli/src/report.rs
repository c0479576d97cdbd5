use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use quadhinf::hinf::SynthesisResult;
use quadhinf::sysid::IdentificationReport;

use crate::config::{ExperimentSource, PipelineConfig};
use crate::io::sha256_hex;
use crate::stages::{ControllerSet, MuCurves, ScenarioOutcome, WeightArtifact};

pub const REPORT_JSON: &str = "report.json";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub scenario_seeds: Vec<Option<u64>>,
    pub inputs: Vec<InputDigest>,
}

impl Provenance {
    pub fn of(cfg: &PipelineConfig) -> Result<Self> {
        let mut inputs = Vec::new();
        if let ExperimentSource::Files { paths, .. } = &cfg.experiments {
            for p in paths {
                inputs.push(InputDigest {
                    path: p.clone(),
                    sha256: sha256_hex(&std::fs::read(p)?),
                });
            }
        }
        Ok(Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(cfg)?,
            seed: cfg.seed,
            scenario_seeds: cfg
                .scenarios
                .iter()
                .map(|s| s.resolve(cfg.seed).noise.map(|n| n.seed))
                .collect(),
            inputs,
        })
    }
}

/// Digest of the resolved configuration; any field change alters it.
pub fn config_hash(cfg: &PipelineConfig) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(cfg)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub config: PipelineConfig,
    pub identification: IdentificationReport,
    pub uncertainty: WeightArtifact,
    pub synthesis: SynthesisResult,
    pub controllers: ControllerSet,
    pub mu: MuCurves,
    pub comparison: Vec<ScenarioOutcome>,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "axis              {}", c.axis.name());
        let _ = writeln!(s, "seed              {}", c.seed);
        let _ = writeln!(s, "config sha256     {}", self.provenance.config_sha256);
        let id = &self.identification;
        let _ = writeln!(s, "records           {}", id.selected.len());
        for (i, &k) in id.selected_index.iter().enumerate() {
            let m = &id.candidates[i][k];
            let _ = writeln!(
                s,
                "  record {i:2}       {} zeros / {} poles, fit {:.2}%",
                m.n_zeros, m.n_poles, m.fit_percent
            );
        }
        let _ = writeln!(s, "nominal           {}", id.nominal);
        let _ = writeln!(s, "weight            {}", self.uncertainty.model.weight);
        let _ = writeln!(s, "design models     {:?}", self.controllers.models.source);
        let r = &self.synthesis;
        let _ = writeln!(s, "gamma             {:.5}", r.gamma);
        let _ = writeln!(
            s,
            "norms             WsS {:.4}  WuU {:.4}  WT {:.4}  stacked {:.4}",
            r.norms.ws_s, r.norms.wu_u, r.norms.wt_t, r.norms.stacked
        );
        let _ = writeln!(
            s,
            "controller order  {} -> {} (deviation {:.4})",
            r.order(),
            self.controllers.reduced.order(),
            self.controllers.reduction_deviation
        );
        let _ = writeln!(s, "mu (RS / RP)      {:.4} / {:.4}", self.mu.robust_stability.sup, self.mu.robust_performance.sup);
        for o in &self.comparison {
            match &o.error {
                Some(e) => {
                    let _ = writeln!(s, "scenario {}: {e}", o.name);
                }
                None => {
                    let _ = writeln!(s, "scenario {}", o.name);
                    for row in &o.rows {
                        let _ = writeln!(
                            s,
                            "  {:6} overshoot {:6.2}%  settling {:.3} s  recovery {:.3} s  effort {:.3}",
                            row.name,
                            100.0 * row.overshoot,
                            row.settling,
                            row.recovery,
                            row.effort_peak
                        );
                    }
                }
            }
        }
        s
    }
}
