//! The generate/verify/refine controller.
//!
//! Verification artifacts (verification spec, reference model, stimuli) are
//! produced once per session; only the RTL is regenerated on each attempt.

pub mod analytic;
pub mod metrics;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cosim::{self, CoSimConfig, DutSource, ModelSource};
use crate::diagnose::{render_report, MismatchKind, ReportConfig, VerificationReport};
use crate::genclient::{extract_code_block, GenError, GeneratorClient, PromptBundle, TaskKind};
use crate::refmodel::{render_template, ModelProvider, ModelTemplate};
use crate::specmodel::{build_verification_spec, BuildError, DesignSpec, VerificationSpec};
use crate::stimgen::{self, RawStimuli, RefinedStimuli, StimConfig, StimError, StimulusSuite, TestPlan};

pub const DEFAULT_ATTEMPTS: usize = 5;

pub struct SessionConfig<'a> {
    /// Attempt budget before falling back to a random pick.
    pub max_attempts: usize,
    pub seed: u64,
    pub stim: StimConfig,
    pub cosim: CoSimConfig,
    pub report: ReportConfig,
    pub jobs: usize,
    pub provider: &'a dyn ModelProvider,
    /// Build the verification spec from the design directly instead of
    /// asking the generator.
    pub vspec_from_design: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SelectionMode {
    PassedVerification,
    ExhaustionSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Attempt {
    pub index: usize,
    pub rtl_source: String,
    pub passed: bool,
    pub report: VerificationReport,
    /// Warnings from pulling code out of the generator response.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Attempt {
    /// Failing classes across cases, e.g. `boundary,timing`, or `pass`.
    pub fn classification(&self) -> String {
        if self.report.dut_error.is_some() {
            return "dut-error".into();
        }
        let mut labels: Vec<&str> = self
            .report
            .cases
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.class().map_or("fault", |cl| cl.kind.label()))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.is_empty() {
            MismatchKind::Pass.label().into()
        } else {
            labels.join(",")
        }
    }
}

/// Verification-side artifacts shared by every attempt of a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationArtifacts {
    pub vspec: VerificationSpec,
    pub template: ModelTemplate,
    pub model_text: String,
    pub plan: TestPlan,
    /// Generator stimuli before reset insertion and boundary fixing.
    pub raw: RawStimuli,
    pub refined: RefinedStimuli,
    pub suite: StimulusSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionOutcome {
    pub module: String,
    pub attempts: Vec<Attempt>,
    pub selected_index: Option<usize>,
    pub selection_mode: Option<SelectionMode>,
    pub rng_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<VerificationArtifacts>,
}

impl SessionOutcome {
    pub fn selected(&self) -> Option<&Attempt> {
        self.selected_index.map(|k| &self.attempts[k])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }

    /// One JSON object per attempt. `report_path` maps an attempt index to
    /// where its report was written.
    pub fn log_lines(&self, report_path: &dyn Fn(usize) -> String) -> String {
        self.attempts
            .iter()
            .map(|a| {
                serde_json::json!({
                    "attempt": a.index,
                    "verdict": if a.passed { "pass" } else { "fail" },
                    "classification": a.classification(),
                    "report": report_path(a.index),
                    "seed": self.rng_seed,
                })
                .to_string()
                    + "\n"
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("attempt budget must be at least 1")]
    ZeroAttempts,
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Spec(#[from] BuildError),
    #[error(transparent)]
    Stimuli(#[from] StimError),
    #[error(transparent)]
    CoSim(#[from] cosim::CoSimError),
}

/// A session that stopped early. `partial` keeps every finished attempt.
#[derive(Debug, Error)]
#[error("session aborted: {error}")]
pub struct SessionAbort {
    pub error: SessionError,
    pub partial: SessionOutcome,
}

fn code_block(response: &str, lang: &str, warnings: &mut Vec<String>) -> String {
    let (code, w) = extract_code_block(response, lang);
    warnings.extend(w);
    code
}

/// Builds the verification spec, reference model and stimulus suite.
pub fn prepare_verification(design: &DesignSpec, gen: &GeneratorClient, cfg: &SessionConfig<'_>) -> Result<VerificationArtifacts, SessionError> {
    let vspec = if cfg.vspec_from_design {
        VerificationSpec::from_design(design, &design.description)
    } else {
        build_verification_spec(design, gen)?
    };
    let template = render_template(&vspec);
    let vtext = serde_json::to_string_pretty(&vspec).expect("vspec serializes");
    let prompt = gen
        .prompts()
        .render(TaskKind::FillTemplate, &[("vspec", &vtext), ("template", &template.rendered_text)]);
    let bundle = PromptBundle::new(TaskKind::FillTemplate, 0, prompt).with_attachment("template", template.rendered_text.clone());
    let model_text = code_block(&gen.request(&bundle)?, "python", &mut Vec::new());
    let plan = stimgen::plan_tests(&vspec, gen, cfg.stim)?;
    let raw = stimgen::generate_raw(&plan, &vspec, gen)?;
    let refined = stimgen::refine(&raw, &vspec);
    let suite = stimgen::assemble_suite(&vspec.module_name, &plan, &refined)?;
    Ok(VerificationArtifacts {
        vspec,
        template,
        model_text,
        plan,
        raw,
        refined,
        suite,
    })
}

/// Verifies one RTL candidate against prepared artifacts.
pub fn verify_rtl(rtl: &str, art: &VerificationArtifacts, cfg: &SessionConfig<'_>) -> Result<VerificationReport, SessionError> {
    let dut = match DutSource::from_hdl(rtl, None) {
        Ok(d) => d,
        Err(e) => return Ok(VerificationReport::dut_error(&art.vspec.module_name, &e.to_string())),
    };
    let model = ModelSource {
        provider: cfg.provider,
        model_text: &art.model_text,
    };
    let results = cosim::run_suite(&dut, &model, &art.vspec, &art.suite, &cfg.cosim, cfg.jobs)?;
    Ok(render_report(&results, &art.vspec, &art.refined.fix_log, "stimuli.json", &cfg.report))
}

/// Generate, verify, and refine until a candidate passes or the budget runs
/// out; then pick one attempt uniformly with the seeded generator.
pub fn run_session(design: &DesignSpec, gen: &GeneratorClient, cfg: &SessionConfig<'_>) -> Result<SessionOutcome, SessionAbort> {
    let mut out = SessionOutcome {
        module: design.module_name.clone(),
        attempts: Vec::new(),
        selected_index: None,
        selection_mode: None,
        rng_seed: cfg.seed,
        artifacts: None,
    };
    if cfg.max_attempts == 0 {
        return Err(SessionAbort {
            error: SessionError::ZeroAttempts,
            partial: out,
        });
    }
    let spec_text = design.to_spec_text();
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(e) => {
                    return Err(SessionAbort {
                        error: e.into(),
                        partial: out,
                    })
                }
            }
        };
    }

    for k in 0..cfg.max_attempts {
        let bundle = match out.attempts.last() {
            None => PromptBundle::new(TaskKind::GenRtl, 0, gen.prompts().render(TaskKind::GenRtl, &[("spec", &spec_text)])),
            Some(prev) => {
                let report = prev.report.to_text();
                let prompt = gen.prompts().render(
                    TaskKind::RefineRtl,
                    &[("spec", &spec_text), ("report", &report), ("previous_rtl", &prev.rtl_source)],
                );
                PromptBundle::new(TaskKind::RefineRtl, k, prompt).with_attachment("report", report)
            }
        };
        let response = attempt!(gen.request(&bundle));
        let mut warnings = Vec::new();
        let rtl = code_block(&response, "verilog", &mut warnings);
        if out.artifacts.is_none() {
            out.artifacts = Some(attempt!(prepare_verification(design, gen, cfg)));
        }
        let report = attempt!(verify_rtl(&rtl, out.artifacts.as_ref().unwrap(), cfg));
        let passed = report.passed();
        log::info!("{} attempt {k}: {}", design.module_name, if passed { "pass" } else { "fail" });
        out.attempts.push(Attempt {
            index: k,
            rtl_source: rtl,
            passed,
            report,
            warnings,
        });
        if passed {
            out.selected_index = Some(k);
            out.selection_mode = Some(SelectionMode::PassedVerification);
            return Ok(out);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    out.selected_index = Some(rng.gen_range(0..out.attempts.len()));
    out.selection_mode = Some(SelectionMode::ExhaustionSample);
    Ok(out)
}
