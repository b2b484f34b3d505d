use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rtlcheck::cosim::{self, CaseOutcome, CaseResult, CoSimError, DutSource, ModelSource, PairedTrace};
use rtlcheck::diagnose::{classify as classify_trace, render_report, ReportConfig};
use rtlcheck::genclient::{extract_code_block, Backend, GeneratorClient, HttpBackend, PromptProfile, ScriptedMock};
use rtlcheck::refmodel::{LogicalMap, ModelProvider, NativeProvider, RunnerProvider};
use rtlcheck::rtlsim::{self, CycleTrace};
use rtlcheck::session::analytic::{self, AnalyticParams};
use rtlcheck::session::{self, SelectionMode, SessionConfig, SessionOutcome};
use rtlcheck::specmodel::{parse_design_spec, DesignSpec, VerificationSpec};
use rtlcheck::stimgen::{self, FixEntry, StimulusSuite, SuiteCase};
use rtlcheck::value::{self, PortValueMap};
use serde::Serialize;

use crate::config::{BackendConfig, RunConfig};
use crate::{
    ClassifyArgs, CosimCmdArgs, Failure, ModelArgs, ReportArgs, RunArgs, SimArgs, SpecArgs, StimuliCmdArgs, EXIT_EXHAUSTED,
    EXIT_FAIL, EXIT_PASS,
};

type Res<T> = Result<T, Failure>;

fn read(path: &Path, what: &str) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("output directory {} is not writable: {e}", dir.display())))
}

fn write(out: &Path, rel: &str, text: &str) -> Res<()> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::internal("io", format!("{}: {e}", parent.display())))?;
    }
    fs::write(&path, text).map_err(|e| Failure::internal("io", format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

fn load_design(path: &Path) -> Res<DesignSpec> {
    parse_design_spec(&read(path, "design spec")?).map_err(|e| Failure::usage(format!("design spec {}: {e}", path.display())))
}

fn load_vspec(a: &SpecArgs) -> Res<Option<VerificationSpec>> {
    if let Some(p) = &a.vspec {
        let v = serde_json::from_str(&read(p, "verification spec")?)
            .map_err(|e| Failure::usage(format!("verification spec {}: {e}", p.display())))?;
        return Ok(Some(v));
    }
    Ok(a.spec.as_deref().map(load_design).transpose()?.map(|d| VerificationSpec::from_design(&d, &d.description)))
}

fn require_vspec(a: &SpecArgs) -> Res<VerificationSpec> {
    load_vspec(a)?.ok_or_else(|| Failure::usage("one of --spec or --vspec is required"))
}

fn generator(b: &BackendConfig, jobs: usize) -> Res<GeneratorClient> {
    let prompts = match &b.prompts {
        Some(dir) => PromptProfile::load_dir(dir).map_err(|e| Failure::usage(format!("prompts {}: {e}", dir.display())))?,
        None => PromptProfile::default(),
    };
    let backend = match (&b.bundle, &b.endpoint) {
        (Some(_), Some(_)) => return Err(Failure::usage("give either a fixture bundle or an endpoint, not both")),
        (Some(dir), None) => {
            if !dir.is_dir() {
                return Err(Failure::usage(format!("bundle {} is not a directory", dir.display())));
            }
            Backend::Mock(ScriptedMock::directory(dir))
        }
        (None, Some(url)) => {
            let model = b.model.as_deref().ok_or_else(|| Failure::usage("an endpoint needs --gen-model"))?;
            let timeout = Duration::from_secs(b.timeout_secs.unwrap_or(120));
            let http = HttpBackend::new(url, model, b.token_env.clone(), timeout, jobs.max(1))
                .map_err(|e| Failure::internal("generator", e.to_string()))?;
            Backend::Http(http)
        }
        (None, None) => return Err(Failure::usage("no generator backend: give --bundle or --endpoint")),
    };
    Ok(GeneratorClient::new(backend, prompts))
}

fn split_command(cmd: &str) -> Res<Vec<String>> {
    let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
    if parts.is_empty() {
        return Err(Failure::usage("empty runner command"));
    }
    Ok(parts)
}

fn provider(runner: Option<Vec<String>>, out: &Path) -> Box<dyn ModelProvider> {
    match runner {
        Some(command) => Box::new(RunnerProvider {
            command,
            work_dir: out.join("runner"),
            model_file: "model.py".into(),
        }),
        None => Box::new(NativeProvider),
    }
}

/// Model text from a file; a fenced python block is unwrapped.
fn model_text(path: &Path) -> Res<String> {
    let text = read(path, "model")?;
    Ok(if text.contains("```") { extract_code_block(&text, "python").0 } else { text })
}

/// A suite file, or a flat list of per-cycle maps taken as one case.
fn load_suite(path: &Path, module: &str) -> Res<StimulusSuite> {
    let text = read(path, "stimuli")?;
    let bad = |e: String| Failure::usage(format!("stimuli {}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        let cycles: Vec<LogicalMap> = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        return Ok(StimulusSuite {
            module: module.to_string(),
            cases: vec![SuiteCase {
                name: "trace".into(),
                targets: String::new(),
                rationale: String::new(),
                async_reset_pre_assert: false,
                cycles,
            }],
        });
    }
    StimulusSuite::from_json(&text).map_err(|e| bad(e.to_string()))
}

fn load_fixlog(path: Option<&Path>) -> Res<Vec<FixEntry>> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => serde_json::from_str(&read(p, "fix log")?).map_err(|e| Failure::usage(format!("fix log {}: {e}", p.display()))),
    }
}

fn load_paired(path: &Path) -> Res<PairedTrace> {
    PairedTrace::from_json(&read(path, "paired trace")?).map_err(|e| Failure::usage(format!("paired trace {}: {e}", path.display())))
}

/// File stem for a case name.
fn stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_session(out: &Path, o: &SessionOutcome, gen: &GeneratorClient) -> Res<()> {
    for a in &o.attempts {
        write(out, &format!("reports/attempt{}.json", a.index), &(a.report.to_json() + "\n"))?;
        write(out, &format!("reports/attempt{}.txt", a.index), &a.report.to_text())?;
        write(out, &format!("rtl/attempt{}.v", a.index), &a.rtl_source)?;
    }
    write(out, "session.jsonl", &o.log_lines(&|k| format!("reports/attempt{k}.json")))?;
    if let Some(a) = o.selected() {
        write(out, "selected.v", &a.rtl_source)?;
    }
    if let Some(art) = &o.artifacts {
        write(out, "vspec.json", &pretty(&art.vspec))?;
        write(out, "template.py", &art.template.rendered_text)?;
        write(out, "model.py", &art.model_text)?;
        write(out, "plan.json", &pretty(&art.plan))?;
        write(out, "stimuli_raw.json", &pretty(&art.raw))?;
        write(out, "stimuli_refined.json", &pretty(&art.refined))?;
        write(out, "stimuli.json", &(art.suite.to_json() + "\n"))?;
        write(out, "fixlog.json", &pretty(&art.refined.fix_log))?;
    }
    write(out, "outcome.json", &(o.to_json() + "\n"))?;
    write(out, "transcript.json", &pretty(&gen.transcript()))
}

pub fn run(a: RunArgs) -> Res<u8> {
    let cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let spec_path = a.spec.or(cfg.spec).ok_or_else(|| Failure::usage("no design spec given (--spec)"))?;
    let out = a.out.or(cfg.out).ok_or_else(|| Failure::usage("no output directory given (--out)"))?;
    let design = load_design(&spec_path)?;
    prepare_out(&out)?;
    let body = || -> Res<u8> {
        let attempts = a.attempts.or(cfg.attempts).unwrap_or(session::DEFAULT_ATTEMPTS);
        if attempts == 0 {
            return Err(Failure::usage("attempt budget must be at least 1"));
        }
        let jobs = a.jobs.or(cfg.jobs).unwrap_or(1).max(1);
        let runner = match a.runner.as_deref() {
            Some(cmd) => Some(split_command(cmd)?),
            None => cfg.runner.clone(),
        };
        let gen = generator(&a.backend.merged(cfg.backend.clone()), jobs)?;
        let provider = provider(runner, &out);
        let scfg = SessionConfig {
            max_attempts: attempts,
            seed: a.seed.or(cfg.seed).unwrap_or(0),
            stim: a.stimuli.merged(cfg.stimuli.clone()),
            cosim: a.cosim.merged(cfg.cosim.clone()).build()?,
            report: ReportConfig {
                classifier: a.classifier.merged(cfg.classifier.clone()).params()?,
                ..ReportConfig::default()
            },
            jobs,
            provider: provider.as_ref(),
            vspec_from_design: a.vspec_from_design || cfg.vspec_from_design.unwrap_or(false),
        };
        match session::run_session(&design, &gen, &scfg) {
            Ok(o) => {
                write_session(&out, &o, &gen)?;
                let sel = o.selected().expect("finished sessions select an attempt");
                println!("{}: attempt {} selected ({:?})", o.module, sel.index, o.selection_mode.unwrap());
                Ok(match o.selection_mode {
                    Some(SelectionMode::PassedVerification) if sel.passed => EXIT_PASS,
                    Some(SelectionMode::ExhaustionSample) => EXIT_EXHAUSTED,
                    _ => EXIT_FAIL,
                })
            }
            Err(abort) => {
                write_session(&out, &abort.partial, &gen)?;
                Err(Failure::internal("session", abort.error.to_string()))
            }
        }
    };
    body().map_err(|f| f.at(&out))
}

pub fn sim(a: SimArgs) -> Res<u8> {
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let src = read(&a.hdl, "HDL source")?;
        let inst = rtlsim::load(&src, a.clock.as_deref()).map_err(|e| Failure::usage(format!("{}: {e}", a.hdl.display())))?;
        let suite = load_suite(&a.stimuli, "")?;
        let widths: Vec<(String, u32)> = inst.design().inputs().map(|p| (p.name.clone(), p.width)).collect();
        let width = |n: &str| widths.iter().find(|(m, _)| m == n).map_or(64, |(_, w)| *w);
        let mut ran = 0;
        for case in &suite.cases {
            if a.case_name.as_deref().is_some_and(|n| n != case.name) {
                continue;
            }
            let rows: Vec<PortValueMap> = case
                .cycles
                .iter()
                .map(|row| row.iter().map(|(n, v)| (n.clone(), value::encode(*v, width(n)))).collect())
                .collect();
            let mut dut = inst.clone();
            if case.async_reset_pre_assert {
                dut.prime_async_triggers();
            }
            let trace = rtlsim::run_stimuli(&mut dut, &rows)
                .map_err(|e| Failure::internal("simulation", format!("case {}: {e}", case.name)))?;
            write(&a.out, &format!("{}.json", stem(&case.name)), &(trace.to_json() + "\n"))?;
            write(&a.out, &format!("{}.csv", stem(&case.name)), &trace.to_csv())?;
            ran += 1;
        }
        if ran == 0 {
            return Err(Failure::usage("no stimulus case matched"));
        }
        println!("{ran} trace(s) written to {}", a.out.display());
        Ok(EXIT_PASS)
    };
    body().map_err(|f| f.at(&a.out))
}

fn cosim_failure(e: CoSimError) -> Failure {
    match e {
        CoSimError::EmptySuite | CoSimError::Config(_) | CoSimError::ExternalTrace(_) => Failure::usage(e.to_string()),
        e => Failure::internal("cosim", e.to_string()),
    }
}

fn write_report(out: &Path, results: &[CaseResult], vspec: &VerificationSpec, fix_log: &[FixEntry], stimuli_ref: &str, cfg: &ReportConfig) -> Res<u8> {
    let report = render_report(results, vspec, fix_log, stimuli_ref, cfg);
    write(out, "report.json", &(report.to_json() + "\n"))?;
    write(out, "report.txt", &report.to_text())?;
    println!("{}: {}", report.module, if report.passed() { "pass" } else { "fail" });
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cosim(a: CosimCmdArgs) -> Res<u8> {
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let vspec = require_vspec(&a.spec)?;
        let suite = load_suite(&a.stimuli, &vspec.module_name)?;
        let dut = match (&a.hdl, a.trace.is_empty()) {
            (Some(p), true) => DutSource::from_hdl(&read(p, "HDL source")?, a.clock.as_deref())
                .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
            (None, false) => DutSource::Traces(
                a.trace
                    .iter()
                    .map(|p| CycleTrace::from_json(&read(p, "DUT trace")?).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))))
                    .collect::<Res<_>>()?,
            ),
            _ => return Err(Failure::usage("give exactly one of --hdl or --trace")),
        };
        let text = model_text(&a.model)?;
        let runner = a.runner.as_deref().map(split_command).transpose()?;
        let provider = provider(runner, &a.out);
        let cfg = a.cosim.clone().merged(Default::default()).build()?;
        let model = ModelSource {
            provider: provider.as_ref(),
            model_text: &text,
        };
        let results = cosim::run_suite(&dut, &model, &vspec, &suite, &cfg, a.jobs.max(1)).map_err(cosim_failure)?;
        for r in &results {
            let t = match &r.outcome {
                CaseOutcome::Completed(t) => Some(t),
                CaseOutcome::Faulted(f) => f.partial.as_ref(),
                CaseOutcome::Skipped => None,
            };
            if let Some(t) = t {
                write(&a.out, &format!("paired/{}.json", stem(&r.name)), &(t.to_json_pretty() + "\n"))?;
                write(&a.out, &format!("paired/{}.csv", stem(&r.name)), &t.to_csv())?;
            }
        }
        let rcfg = ReportConfig {
            classifier: a.classifier.clone().merged(Default::default()).params()?,
            ..ReportConfig::default()
        };
        let fix_log = load_fixlog(a.fixlog.as_deref())?;
        let stimuli_ref = a.stimuli.file_name().map_or("stimuli.json".into(), |n| n.to_string_lossy().into_owned());
        write_report(&a.out, &results, &vspec, &fix_log, &stimuli_ref, &rcfg)
    };
    body().map_err(|f| f.at(&a.out))
}

pub fn stimuli(a: StimuliCmdArgs) -> Res<u8> {
    let design = load_design(&a.spec)?;
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let gen = generator(&a.backend.clone().merged(Default::default()), 1)?;
        let vspec = if a.vspec_from_design {
            VerificationSpec::from_design(&design, &design.description)
        } else {
            rtlcheck::specmodel::build_verification_spec(&design, &gen).map_err(|e| Failure::internal("spec", e.to_string()))?
        };
        let result = stimgen::build_suite(&vspec, &gen, a.stimuli.clone().merged(Default::default()));
        write(&a.out, "transcript.json", &pretty(&gen.transcript()))?;
        let (suite, plan, raw, refined) = result.map_err(|e| Failure::internal("stimuli", e.to_string()))?;
        write(&a.out, "vspec.json", &pretty(&vspec))?;
        write(&a.out, "plan.json", &pretty(&plan))?;
        write(&a.out, "stimuli_raw.json", &pretty(&raw))?;
        write(&a.out, "stimuli_refined.json", &pretty(&refined))?;
        write(&a.out, "stimuli.json", &(suite.to_json() + "\n"))?;
        write(&a.out, "fixlog.json", &pretty(&refined.fix_log))?;
        println!("{} case(s), {} fix entries", suite.cases.len(), refined.fix_log.len());
        Ok(EXIT_PASS)
    };
    body().map_err(|f| f.at(&a.out))
}

pub fn classify(a: ClassifyArgs) -> Res<u8> {
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let t = load_paired(&a.trace)?;
        let vspec = load_vspec(&a.spec)?;
        let params = a.classifier.clone().merged(Default::default()).params()?;
        let widths = |p: &str| vspec.as_ref().and_then(|v| v.port(p)).map(|d| d.width);
        let class = classify_trace(&t, &params, &widths);
        let mut v = serde_json::to_value(&class).expect("class serializes");
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("case".into(), t.case_name.clone().into());
        }
        write(&a.out, "classification.json", &pretty(&v))?;
        println!("{}: {}", t.case_name, class.kind.label());
        Ok(EXIT_PASS)
    };
    body().map_err(|f| f.at(&a.out))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ModelOutput {
    params: AnalyticParams,
    attempts: u32,
    sys_success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sys_success_rate_error: Option<String>,
    feedback_true_rate: f64,
    finite_budget_success_rate: f64,
    monte_carlo: Option<MonteCarloOutput>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MonteCarloOutput {
    rate: f64,
    half_width: f64,
    trials: u64,
    seed: u64,
}

pub fn model(a: ModelArgs) -> Res<u8> {
    let (mut x, mut pa, mut pb, mut pc, mut pd) = (None, None, None, None, None);
    let (mut n, mut trials, mut seed) = (session::DEFAULT_ATTEMPTS as u32, 100_000u64, 0u64);
    for kv in &a.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::usage(format!("expected key=value, got `{kv}`")))?;
        let bad = |e: String| Failure::usage(format!("{k}: {e}"));
        let f = || v.parse::<f64>().map_err(|e| bad(e.to_string()));
        match k {
            "x" => x = Some(f()?),
            "a" => pa = Some(f()?),
            "b" => pb = Some(f()?),
            "c" => pc = Some(f()?),
            "d" => pd = Some(f()?),
            "N" | "n" => n = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "trials" => trials = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "seed" => seed = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            _ => return Err(Failure::usage(format!("unknown parameter `{k}`"))),
        }
    }
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Failure::usage(format!("missing parameter {k}")));
    let (x, pa, pb) = (need(x, "x")?, need(pa, "a")?, need(pb, "b")?);
    let p = AnalyticParams {
        c: pc.unwrap_or(1.0 - pb),
        d: pd.unwrap_or(1.0 - pa),
        ..AnalyticParams::from_acceptance(x, pa, pb)
    };
    p.check().map_err(|e| Failure::usage(e.to_string()))?;
    if n == 0 {
        return Err(Failure::usage("N must be at least 1"));
    }
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let sys = analytic::sys_success_rate(&p);
        let finite = analytic::finite_budget_success_rate(&p, n).map_err(|e| Failure::usage(e.to_string()))?;
        let mc = if trials == 0 {
            None
        } else {
            let r = analytic::monte_carlo_system(&p, n, trials, seed).map_err(|e| Failure::usage(e.to_string()))?;
            Some(MonteCarloOutput {
                rate: r.rate,
                half_width: r.half_width,
                trials: r.trials,
                seed,
            })
        };
        let o = ModelOutput {
            params: p,
            attempts: n,
            sys_success_rate: sys.ok(),
            sys_success_rate_error: sys.err().map(|e| e.to_string()),
            feedback_true_rate: analytic::feedback_true_rate(&p),
            finite_budget_success_rate: finite,
            monte_carlo: mc,
        };
        write(&a.out, "model.json", &pretty(&o))?;
        match o.sys_success_rate {
            Some(s) => println!("sys_success_rate={s}"),
            None => println!("sys_success_rate=undefined"),
        }
        Ok(EXIT_PASS)
    };
    body().map_err(|f| f.at(&a.out))
}

pub fn report(a: ReportArgs) -> Res<u8> {
    prepare_out(&a.out)?;
    let body = || -> Res<u8> {
        let vspec = require_vspec(&a.spec)?;
        let results: Vec<CaseResult> = a
            .traces
            .iter()
            .map(|p: &PathBuf| {
                let t = load_paired(p)?;
                Ok(CaseResult {
                    name: t.case_name.clone(),
                    outcome: CaseOutcome::Completed(t),
                })
            })
            .collect::<Res<_>>()?;
        let cfg = ReportConfig {
            classifier: a.classifier.clone().merged(Default::default()).params()?,
            ..ReportConfig::default()
        };
        write_report(&a.out, &results, &vspec, &load_fixlog(a.fixlog.as_deref())?, &a.stimuli_ref, &cfg)
    };
    body().map_err(|f| f.at(&a.out))
}
