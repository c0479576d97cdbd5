//! Pipeline configuration: one JSON document, validated at load.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use quadhinf::fixtures::{Axis, WU};
use quadhinf::hinf::{DEFAULT_GAMMA_HI, DEFAULT_GAMMA_LO, DEFAULT_GAMMA_TOL};
use quadhinf::quadsim::{ExperimentSuite, Scenario};
use quadhinf::sysid::{ChirpConfig, IdentifyOptions};
use quadhinf::uncertainty::{DEFAULT_MARGIN, MAX_WEIGHT_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub axis: Axis,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub experiments: ExperimentSource,
    #[serde(default)]
    pub identification: IdentifyOptions,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<NamedScenario>,
}

fn default_seed() -> u64 {
    1
}

fn default_scenarios() -> Vec<NamedScenario> {
    vec![NamedScenario {
        name: "disturbed_step".into(),
        plant: SimPlant::Nominal,
        scenario: None,
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExperimentSource {
    /// Chirp experiments on the simulator, one airframe draw per package.
    Synthetic {
        #[serde(default)]
        packages: Option<usize>,
        #[serde(default)]
        noise: Option<f64>,
        #[serde(default)]
        jitter: Option<f64>,
        #[serde(default)]
        save_records: bool,
    },
    /// Recorded CSVs (`t,reference,output,coupled_output`, degrees).
    Files { chirp: ChirpConfig, paths: Vec<PathBuf> },
}

impl Default for ExperimentSource {
    fn default() -> Self {
        ExperimentSource::Synthetic {
            packages: None,
            noise: None,
            jitter: None,
            save_records: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub num_order: usize,
    pub den_order: usize,
    pub margin: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            num_order: 2,
            den_order: 2,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Where the synthesis stage takes its plant and uncertainty weight from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    /// Bundled published models.
    Fixture,
    /// Output of the identify and weight stages.
    Identified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub models: ModelSource,
    /// Sensitivity weight scale; the axis default when absent.
    #[serde(default)]
    pub a: Option<f64>,
    pub wu: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub tol: f64,
    pub reduce_to: usize,
    pub fs: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            models: ModelSource::Fixture,
            a: None,
            wu: WU,
            gamma_lo: DEFAULT_GAMMA_LO,
            gamma_hi: DEFAULT_GAMMA_HI,
            tol: DEFAULT_GAMMA_TOL,
            reduce_to: 6,
            fs: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimPlant {
    /// The synthesis plant as a linear model.
    Nominal,
    /// Full attitude simulator with its inner loop.
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedScenario {
    pub name: String,
    #[serde(default = "nominal")]
    pub plant: SimPlant,
    /// Disturbed unit step seeded from the run seed when absent.
    #[serde(default)]
    pub scenario: Option<Scenario>,
}

fn nominal() -> SimPlant {
    SimPlant::Nominal
}

impl NamedScenario {
    pub fn resolve(&self, seed: u64) -> Scenario {
        self.scenario.clone().unwrap_or_else(|| Scenario::disturbed_step(seed))
    }
}

/// Command-line overrides of synthesis settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub wu: Option<f64>,
    pub gamma_hi: Option<f64>,
    pub tol: Option<f64>,
    pub reduce_to: Option<usize>,
}

impl PipelineConfig {
    /// Defaults for `axis`: synthetic experiments, bundled models for synthesis.
    pub fn for_axis(axis: Axis) -> Self {
        PipelineConfig {
            axis,
            seed: default_seed(),
            experiments: ExperimentSource::default(),
            identification: IdentifyOptions::default(),
            weight: WeightConfig::default(),
            synthesis: SynthesisConfig::default(),
            scenarios: default_scenarios(),
        }
    }

    /// Parses, resolves relative paths against the file's directory and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let ExperimentSource::Files { paths, .. } = &mut cfg.experiments {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in paths.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        let s = &mut self.synthesis;
        if o.a.is_some() {
            s.a = o.a;
        }
        if let Some(v) = o.wu {
            s.wu = v;
        }
        if let Some(v) = o.gamma_hi {
            s.gamma_hi = v;
        }
        if let Some(v) = o.tol {
            s.tol = v;
        }
        if let Some(v) = o.reduce_to {
            s.reduce_to = v;
        }
    }

    pub fn a(&self) -> f64 {
        self.synthesis.a.unwrap_or(self.axis.a())
    }

    pub fn suite(&self) -> Option<ExperimentSuite> {
        match &self.experiments {
            ExperimentSource::Synthetic {
                packages,
                noise,
                jitter,
                ..
            } => {
                let default = match self.axis {
                    Axis::Pitch => 8,
                    Axis::Roll => 9,
                };
                let mut s = ExperimentSuite::new(self.axis, packages.unwrap_or(default), self.seed);
                if let Some(n) = noise {
                    s.noise = *n;
                }
                if let Some(j) = jitter {
                    s.jitter = *j;
                }
                Some(s)
            }
            ExperimentSource::Files { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.experiments {
            ExperimentSource::Synthetic {
                packages,
                noise,
                jitter,
                ..
            } => {
                if let Some(n) = packages {
                    ensure!((2..=64).contains(n), "experiments.packages {n} outside [2, 64]");
                }
                if let Some(n) = noise {
                    ensure!((0.0..=0.1).contains(n), "experiments.noise {n} outside [0, 0.1] rad");
                }
                if let Some(j) = jitter {
                    ensure!((0.0..0.5).contains(j), "experiments.jitter {j} outside [0, 0.5)");
                }
            }
            ExperimentSource::Files { chirp, paths } => {
                chirp.validate()?;
                ensure!(paths.len() >= 2, "need at least two experiment files, got {}", paths.len());
                for p in paths {
                    ensure!(p.is_file(), "experiment file {} does not exist", p.display());
                }
            }
        }
        let id = &self.identification;
        ensure!(id.n_avg >= 1 && id.max_iters >= 1, "identification n_avg and max_iters must be positive");
        let w = &self.weight;
        ensure!(
            w.num_order <= w.den_order && w.den_order <= MAX_WEIGHT_ORDER,
            "weight orders ({}, {}) need num ≤ den ≤ {MAX_WEIGHT_ORDER}",
            w.num_order,
            w.den_order
        );
        ensure!((1.0..=2.0).contains(&w.margin), "weight.margin {} outside [1, 2]", w.margin);
        let s = &self.synthesis;
        let a = self.a();
        ensure!(a > 0.0 && a <= 1.0, "synthesis.a {a} outside (0, 1]");
        ensure!(s.wu > 0.0 && s.wu.is_finite(), "synthesis.wu must be positive");
        ensure!(
            s.gamma_lo > 0.0 && s.gamma_hi > s.gamma_lo && s.gamma_hi.is_finite(),
            "gamma bounds [{}, {}]",
            s.gamma_lo,
            s.gamma_hi
        );
        ensure!(s.tol > 0.0 && s.tol < 1.0, "synthesis.tol {} outside (0, 1)", s.tol);
        ensure!(s.reduce_to >= 1, "synthesis.reduce_to must be at least 1");
        ensure!(s.fs > 0.0 && s.fs.is_finite(), "synthesis.fs must be positive");
        if (s.fs - 1000.0).abs() > 1e-9 && !self.scenarios.is_empty() {
            bail!("simulation runs the outer loop at 1000 Hz; synthesis.fs is {}", s.fs);
        }
        let mut names = std::collections::BTreeSet::new();
        for sc in &self.scenarios {
            ensure!(
                !sc.name.is_empty() && sc.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
                "scenario name {:?} must be non-empty [A-Za-z0-9_-]",
                sc.name
            );
            ensure!(names.insert(&sc.name), "duplicate scenario name {:?}", sc.name);
            sc.resolve(self.seed).validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"axis": "roll"}"#).unwrap();
        assert_eq!(cfg, PipelineConfig::for_axis(Axis::Roll));
        assert_eq!(cfg.a(), 0.92);
        assert_eq!(cfg.suite().unwrap().packages, 9);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"axis": "pitch", "gamma": 1}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"axis": "yaw"}"#).is_err());
    }

    #[test]
    fn ranges_checked() {
        let mut cfg = PipelineConfig::for_axis(Axis::Pitch);
        cfg.apply(&Overrides {
            a: Some(1.5),
            ..Default::default()
        });
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::for_axis(Axis::Pitch);
        cfg.experiments = ExperimentSource::Files {
            chirp: ChirpConfig::new(0.05, 5.0, 8.0, 40.0, 500.0),
            paths: vec!["/nonexistent/a.csv".into(), "/nonexistent/b.csv".into()],
        };
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("does not exist"), "{e}");
    }
}
