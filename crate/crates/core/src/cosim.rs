//! Lockstep co-simulation: one DUT tick and one model event per edge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::refmodel::{ModelError, ModelProvider, RefModelHandle};
use crate::rtlsim::{CycleTrace, HdlError, SimInstance};
use crate::specmodel::VerificationSpec;
use crate::stimgen::{StimulusSuite, SuiteCase};
use crate::value::PortValueMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum FaultPolicy {
    #[default]
    AbortCase,
    AbortSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CoSimConfig {
    /// Pairs `dut[i + k]` with `ref[i]`.
    pub latency_offset: i64,
    pub max_cycles: usize,
    pub on_model_fault: FaultPolicy,
}

impl Default for CoSimConfig {
    fn default() -> Self {
        CoSimConfig {
            latency_offset: 0,
            max_cycles: 100_000,
            on_model_fault: FaultPolicy::AbortCase,
        }
    }
}

impl CoSimConfig {
    pub fn validate(&self) -> Result<(), CoSimError> {
        if self.latency_offset.unsigned_abs() as usize > self.max_cycles {
            return Err(CoSimError::Config(format!(
                "latency offset {} exceeds max cycles {}",
                self.latency_offset, self.max_cycles
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoSimError {
    #[error("DUT simulation failed: {0}")]
    Dut(#[from] HdlError),
    #[error("reference model failed: {0}")]
    Model(ModelError),
    #[error("traces do not overlap after offset {offset}: dut {dut} cycles, ref {reference} cycles")]
    TraceLengthMismatch { offset: i64, dut: usize, reference: usize },
    #[error("DUT does not expose output `{0}`")]
    MissingOutput(String),
    #[error("suite has no cases")]
    EmptySuite,
    #[error("invalid co-simulation config: {0}")]
    Config(String),
    #[error("external DUT traces: {0}")]
    ExternalTrace(String),
}

/// DUT and reference outputs side by side. `reference[k]` is `None` on reset
/// cycles, which are never compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedTrace {
    pub case_name: String,
    pub input_ports: Vec<String>,
    pub output_ports: Vec<String>,
    pub inputs: Vec<PortValueMap>,
    pub dut: Vec<PortValueMap>,
    pub reference: Vec<Option<PortValueMap>>,
    pub latency_offset: i64,
    pub warnings: Vec<String>,
}

impl PairedTrace {
    pub fn reset_cycles(&self) -> Vec<usize> {
        (0..self.reference.len()).filter(|&k| self.reference[k].is_none()).collect()
    }

    fn is_reset(&self, k: usize) -> bool {
        self.reference.get(k).is_some_and(|r| r.is_none())
    }

    /// `(dut index, ref index)` pairs compared under `offset`, skipping any
    /// pair that touches a reset cycle.
    pub fn pairs(&self, offset: i64) -> Vec<(usize, usize)> {
        (0..self.reference.len())
            .filter_map(|j| {
                let i = j as i64 + offset;
                if i < 0 || i as usize >= self.dut.len() {
                    return None;
                }
                let i = i as usize;
                (!self.is_reset(j) && !self.is_reset(i)).then_some((i, j))
            })
            .collect()
    }

    /// Cycles in the overlap of the two arrays under `offset`.
    pub fn overlap(&self, offset: i64) -> usize {
        self.dut.len().min(self.reference.len()).saturating_sub(offset.unsigned_abs() as usize)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PairedJson::from(self)).expect("paired trace serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&PairedJson::from(self)).expect("paired trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str::<PairedJson>(text).map(PairedTrace::from)
    }

    /// `cycle, inputs..., dut_<out>..., ref_<out>...`; ref cells are empty on
    /// reset cycles.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle");
        for p in &self.input_ports {
            out.push_str(&format!(",{p}"));
        }
        for p in &self.output_ports {
            out.push_str(&format!(",dut_{p}"));
        }
        for p in &self.output_ports {
            out.push_str(&format!(",ref_{p}"));
        }
        out.push('\n');
        let n = self.dut.len().max(self.reference.len());
        for k in 0..n {
            out.push_str(&k.to_string());
            for p in &self.input_ports {
                let v = self.inputs.get(k).map(|m| m[p].to_string()).unwrap_or_default();
                out.push_str(&format!(",{v}"));
            }
            for p in &self.output_ports {
                let v = self.dut.get(k).map(|m| m[p].to_string()).unwrap_or_default();
                out.push_str(&format!(",{v}"));
            }
            for p in &self.output_ports {
                let v = self.reference.get(k).and_then(|m| m.as_ref()).map(|m| m[p].to_string()).unwrap_or_default();
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PairedJson {
    case: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    #[serde(default)]
    latency_offset: i64,
    resets: Vec<usize>,
    stimuli: Vec<PortValueMap>,
    dut: Vec<PortValueMap>,
    #[serde(rename = "ref")]
    reference: Vec<Option<PortValueMap>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl From<&PairedTrace> for PairedJson {
    fn from(t: &PairedTrace) -> Self {
        PairedJson {
            case: t.case_name.clone(),
            inputs: t.input_ports.clone(),
            outputs: t.output_ports.clone(),
            latency_offset: t.latency_offset,
            resets: t.reset_cycles(),
            stimuli: t.inputs.clone(),
            dut: t.dut.clone(),
            reference: t.reference.clone(),
            warnings: t.warnings.clone(),
        }
    }
}

impl From<PairedJson> for PairedTrace {
    fn from(j: PairedJson) -> Self {
        PairedTrace {
            case_name: j.case,
            input_ports: j.inputs,
            output_ports: j.outputs,
            inputs: j.stimuli,
            dut: j.dut,
            reference: j.reference,
            latency_offset: j.latency_offset,
            warnings: j.warnings,
        }
    }
}

/// A case that stopped early. `partial` holds the cycles completed so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFault {
    pub error: CoSimError,
    pub partial: Option<PairedTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseOutcome {
    Completed(PairedTrace),
    Faulted(CaseFault),
    /// Not run because an earlier case aborted the suite.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseResult {
    pub name: String,
    pub outcome: CaseOutcome,
}

impl CaseResult {
    pub fn trace(&self) -> Option<&PairedTrace> {
        match &self.outcome {
            CaseOutcome::Completed(t) => Some(t),
            _ => None,
        }
    }
}

fn is_reset_cycle(row: &PortValueMap, vspec: &VerificationSpec) -> bool {
    match (vspec.reset_port(), vspec.reset) {
        (Some(p), Some(r)) => row.get(&p.name) == Some(&r.active_level.asserted()),
        _ => false,
    }
}

fn model_inputs(row: &PortValueMap, vspec: &VerificationSpec) -> PortValueMap {
    vspec
        .step_inputs()
        .filter_map(|p| row.get(&p.name).map(|v| (p.name.clone(), *v)))
        .collect()
}

fn empty_pair(name: &str, vspec: &VerificationSpec, input_ports: Vec<String>, cfg: &CoSimConfig) -> PairedTrace {
    PairedTrace {
        case_name: name.to_string(),
        input_ports,
        output_ports: vspec.outputs().map(|p| p.name.clone()).collect(),
        inputs: Vec::new(),
        dut: Vec::new(),
        reference: Vec::new(),
        latency_offset: cfg.latency_offset,
        warnings: Vec::new(),
    }
}

fn finish(mut t: PairedTrace) -> Result<PairedTrace, CaseFault> {
    if t.overlap(t.latency_offset) < 1 && !(t.dut.is_empty() && t.reference.is_empty()) {
        let error = CoSimError::TraceLengthMismatch {
            offset: t.latency_offset,
            dut: t.dut.len(),
            reference: t.reference.len(),
        };
        return Err(CaseFault { error, partial: Some(t) });
    }
    t.warnings.dedup();
    Ok(t)
}

/// Runs one suite case against a fresh DUT instance and an open model.
pub fn run_case(
    dut: &mut SimInstance,
    model: &mut RefModelHandle,
    case: &SuiteCase,
    vspec: &VerificationSpec,
    cfg: &CoSimConfig,
) -> Result<PairedTrace, CaseFault> {
    cfg.validate().map_err(|error| CaseFault { error, partial: None })?;
    let rows = suite_rows(case, vspec);
    let input_ports: Vec<String> = dut.design().driven_inputs().map(|p| p.name.clone()).collect();
    let mut t = empty_pair(&case.name, vspec, input_ports, cfg);
    if rows.len() > cfg.max_cycles {
        t.warnings.push(format!("case truncated from {} to {} cycles", rows.len(), cfg.max_cycles));
    }
    if case.async_reset_pre_assert {
        dut.prime_async_triggers();
    }
    let mut reset_seen = false;
    for (k, row) in rows.iter().take(cfg.max_cycles).enumerate() {
        let reset = is_reset_cycle(row, vspec) || (k == 0 && case.async_reset_pre_assert);
        let out = match dut.tick(row) {
            Ok(o) => o,
            Err(e) => return Err(CaseFault { error: e.into(), partial: Some(t) }),
        };
        let dut_out = match select_outputs(&out, vspec) {
            Ok(o) => o,
            Err(error) => return Err(CaseFault { error, partial: Some(t) }),
        };
        let ref_out = if reset {
            reset_seen = true;
            model.reset().map(|_| None)
        } else {
            if !reset_seen && k == 0 {
                t.warnings.push(crate::refmodel::UNRESET_WARNING.to_string());
            }
            model.step(&model_inputs(row, vspec)).map(Some)
        };
        let ref_out = match ref_out {
            Ok(r) => r,
            Err(e) => {
                return Err(CaseFault {
                    error: CoSimError::Model(e),
                    partial: Some(t),
                })
            }
        };
        t.inputs.push(t.input_ports.iter().map(|n| (n.clone(), row[n])).collect());
        t.dut.push(dut_out);
        t.reference.push(ref_out);
    }
    t.warnings.extend(dut.warnings().iter().cloned());
    finish(t)
}

fn suite_rows(case: &SuiteCase, vspec: &VerificationSpec) -> Vec<PortValueMap> {
    let suite = StimulusSuite {
        module: vspec.module_name.clone(),
        cases: vec![case.clone()],
    };
    suite.case_bits(0, vspec)
}

fn select_outputs(out: &PortValueMap, vspec: &VerificationSpec) -> Result<PortValueMap, CoSimError> {
    vspec
        .outputs()
        .map(|p| {
            out.get(&p.name)
                .map(|v| (p.name.clone(), *v))
                .ok_or_else(|| CoSimError::MissingOutput(p.name.clone()))
        })
        .collect()
}

/// Pairs a pre-recorded DUT trace with a model driven by the trace's own
/// input columns.
pub fn run_trace_case(
    name: &str,
    dut: &CycleTrace,
    model: &mut RefModelHandle,
    vspec: &VerificationSpec,
    cfg: &CoSimConfig,
) -> Result<PairedTrace, CaseFault> {
    cfg.validate().map_err(|error| CaseFault { error, partial: None })?;
    let mut t = empty_pair(name, vspec, dut.input_ports.clone(), cfg);
    let mut reset_seen = false;
    for (k, rec) in dut.records.iter().take(cfg.max_cycles).enumerate() {
        let dut_out = select_outputs(&rec.outputs, vspec).map_err(|error| CaseFault { error, partial: None })?;
        let reset = is_reset_cycle(&rec.inputs, vspec);
        let r = if reset {
            reset_seen = true;
            model.reset().map(|_| None)
        } else {
            if !reset_seen && k == 0 {
                t.warnings.push(crate::refmodel::UNRESET_WARNING.to_string());
            }
            model.step(&model_inputs(&rec.inputs, vspec)).map(Some)
        };
        match r {
            Ok(r) => {
                t.inputs.push(rec.inputs.clone());
                t.dut.push(dut_out);
                t.reference.push(r);
            }
            Err(e) => {
                return Err(CaseFault {
                    error: CoSimError::Model(e),
                    partial: Some(t),
                })
            }
        }
    }
    t.warnings.extend(dut.warnings.iter().cloned());
    finish(t)
}

/// Where the DUT half comes from.
#[derive(Debug, Clone)]
pub enum DutSource {
    /// An elaborated design; each case starts from a clone of this instance.
    Hdl(SimInstance),
    /// One recorded trace per suite case, in case order.
    Traces(Vec<CycleTrace>),
}

impl DutSource {
    pub fn from_hdl(source: &str, clock: Option<&str>) -> Result<Self, HdlError> {
        crate::rtlsim::load(source, clock).map(DutSource::Hdl)
    }
}

/// Everything one case needs to open its own model.
pub struct ModelSource<'a> {
    pub provider: &'a dyn ModelProvider,
    pub model_text: &'a str,
}

fn run_one(dut: &DutSource, model: &ModelSource<'_>, vspec: &VerificationSpec, suite: &StimulusSuite, k: usize, cfg: &CoSimConfig) -> CaseResult {
    let case = &suite.cases[k];
    let outcome = match model.provider.open(model.model_text, vspec) {
        Err(e) => Err(CaseFault {
            error: CoSimError::Model(e),
            partial: None,
        }),
        Ok(mut handle) => {
            let r = match dut {
                DutSource::Hdl(pristine) => run_case(&mut pristine.clone(), &mut handle, case, vspec, cfg),
                DutSource::Traces(ts) => run_trace_case(&case.name, &ts[k], &mut handle, vspec, cfg),
            };
            let closed = handle.close();
            match (r, closed) {
                (Ok(t), Err(e)) => Err(CaseFault {
                    error: CoSimError::Model(e),
                    partial: Some(t),
                }),
                (r, _) => r,
            }
        }
    };
    CaseResult {
        name: case.name.clone(),
        outcome: match outcome {
            Ok(t) => CaseOutcome::Completed(t),
            Err(f) => CaseOutcome::Faulted(f),
        },
    }
}

/// Runs every case on its own DUT instance and model handle, `jobs` at a
/// time. Results come back in case order whatever the parallelism. Under
/// `AbortSuite` every case after the first model fault is reported skipped.
pub fn run_suite(
    dut: &DutSource,
    model: &ModelSource<'_>,
    vspec: &VerificationSpec,
    suite: &StimulusSuite,
    cfg: &CoSimConfig,
    jobs: usize,
) -> Result<Vec<CaseResult>, CoSimError> {
    if suite.cases.is_empty() {
        return Err(CoSimError::EmptySuite);
    }
    cfg.validate()?;
    if let DutSource::Traces(ts) = dut {
        if ts.len() != suite.cases.len() {
            return Err(CoSimError::ExternalTrace(format!(
                "{} traces for {} cases",
                ts.len(),
                suite.cases.len()
            )));
        }
    }
    let n = suite.cases.len();
    let mut results: Vec<CaseResult> = if jobs <= 1 || cfg.on_model_fault == FaultPolicy::AbortSuite {
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let r = run_one(dut, model, vspec, suite, k, cfg);
            let abort = cfg.on_model_fault == FaultPolicy::AbortSuite && is_model_fault(&r);
            out.push(r);
            if abort {
                break;
            }
        }
        out
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CoSimError::Config(e.to_string()))?;
        pool.install(|| (0..n).into_par_iter().map(|k| run_one(dut, model, vspec, suite, k, cfg)).collect())
    };
    for case in &suite.cases[results.len()..] {
        results.push(CaseResult {
            name: case.name.clone(),
            outcome: CaseOutcome::Skipped,
        });
    }
    Ok(results)
}

fn is_model_fault(r: &CaseResult) -> bool {
    matches!(&r.outcome, CaseOutcome::Faulted(CaseFault { error: CoSimError::Model(_), .. }))
}
