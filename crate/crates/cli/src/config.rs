//! Run configuration file and its merge with command-line flags.
//!
//! Every field is optional; a flag given on the command line wins over the
//! file, and the file wins over the built-in default.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub attempts: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub vspec_from_design: Option<bool>,
    /// Runner command line; the model and spec paths are appended.
    pub runner: Option<Vec<String>>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub cosim: CosimConfig,
    #[serde(default)]
    pub stimuli: StimuliConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BackendConfig {
    pub bundle: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
    pub timeout_secs: Option<u64>,
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClassifierConfig {
    pub theta: Option<f64>,
    pub max_offset: Option<u32>,
    pub evidence_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CosimConfig {
    pub latency_offset: Option<i64>,
    pub max_cycles: Option<usize>,
    pub abort_suite: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StimuliConfig {
    pub cases: Option<usize>,
    pub cycles: Option<usize>,
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's own directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.spec);
        fix(&mut cfg.out);
        fix(&mut cfg.backend.bundle);
        fix(&mut cfg.backend.prompts);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct BackendArgs {
    /// Directory of scripted generator responses.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Chat-completions endpoint URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long = "gen-model")]
    pub gen_model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[arg(long)]
    pub token_env: Option<String>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

impl BackendArgs {
    pub fn merged(self, c: BackendConfig) -> BackendConfig {
        BackendConfig {
            bundle: self.bundle.or(c.bundle),
            endpoint: self.endpoint.or(c.endpoint),
            model: self.gen_model.or(c.model),
            token_env: self.token_env.or(c.token_env),
            timeout_secs: self.timeout_secs.or(c.timeout_secs),
            prompts: self.prompts.or(c.prompts),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClassifierArgs {
    /// Minimum match fraction for a timing explanation.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Largest latency offset searched, in cycles.
    #[arg(long)]
    pub max_offset: Option<u32>,
    #[arg(long)]
    pub evidence_cap: Option<usize>,
}

impl ClassifierArgs {
    pub fn merged(self, c: ClassifierConfig) -> ClassifierConfig {
        ClassifierConfig {
            theta: self.theta.or(c.theta),
            max_offset: self.max_offset.or(c.max_offset),
            evidence_cap: self.evidence_cap.or(c.evidence_cap),
        }
    }
}

impl ClassifierConfig {
    pub fn params(&self) -> Result<rtlcheck::diagnose::ClassifierParams, Failure> {
        let d = rtlcheck::diagnose::ClassifierParams::default();
        let p = rtlcheck::diagnose::ClassifierParams {
            theta: self.theta.unwrap_or(d.theta),
            max_offset: self.max_offset.unwrap_or(d.max_offset),
            evidence_cap: self.evidence_cap.unwrap_or(d.evidence_cap),
        };
        if !(p.theta > 0.0 && p.theta <= 1.0) {
            return Err(Failure::usage(format!("theta must be in (0, 1], got {}", p.theta)));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CosimArgs {
    /// Cycles the DUT output lags the reference by design.
    #[arg(long, allow_hyphen_values = true)]
    pub latency_offset: Option<i64>,
    #[arg(long)]
    pub max_cycles: Option<usize>,
    /// Skip the remaining cases after the first model fault.
    #[arg(long)]
    pub abort_suite: bool,
}

impl CosimArgs {
    pub fn merged(self, c: CosimConfig) -> CosimConfig {
        CosimConfig {
            latency_offset: self.latency_offset.or(c.latency_offset),
            max_cycles: self.max_cycles.or(c.max_cycles),
            abort_suite: if self.abort_suite { Some(true) } else { c.abort_suite },
        }
    }
}

impl CosimConfig {
    pub fn build(&self) -> Result<rtlcheck::cosim::CoSimConfig, Failure> {
        use rtlcheck::cosim::{CoSimConfig, FaultPolicy};
        let d = CoSimConfig::default();
        let c = CoSimConfig {
            latency_offset: self.latency_offset.unwrap_or(d.latency_offset),
            max_cycles: self.max_cycles.unwrap_or(d.max_cycles),
            on_model_fault: if self.abort_suite == Some(true) {
                FaultPolicy::AbortSuite
            } else {
                FaultPolicy::AbortCase
            },
        };
        c.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct StimuliArgs {
    /// Number of test cases to ask the generator for.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Cycles per case to ask the generator for.
    #[arg(long)]
    pub cycles: Option<usize>,
}

impl StimuliArgs {
    pub fn merged(self, c: StimuliConfig) -> rtlcheck::stimgen::StimConfig {
        let d = rtlcheck::stimgen::StimConfig::default();
        rtlcheck::stimgen::StimConfig {
            cases: self.cases.or(c.cases).unwrap_or(d.cases),
            cycles: self.cycles.or(c.cycles).unwrap_or(d.cycles),
        }
    }
}
