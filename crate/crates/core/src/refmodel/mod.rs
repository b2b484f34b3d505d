//! Reference models behind a reset/step contract. Clock edges are implicit:
//! each `step` is one rising edge, and no message ever names the clock.

mod external;
pub mod native;
mod template;

use std::path::PathBuf;

use indexmap::IndexMap;
use thiserror::Error;

pub use external::ExternalModel;
pub use template::{render_template, FlattenedInput, ModelTemplate, StateVar};

use crate::rtlsim::CycleTrace;
use crate::specmodel::{PortDecl, VerificationSpec};
use crate::value::{decode, encode, mask, PortValueMap};

/// Port name to logical (decoded) integer value.
pub type LogicalMap = IndexMap<String, i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model transport failed: {0}")]
    Transport(String),
    #[error("model protocol error: {0}")]
    Protocol(String),
    #[error("model fault: {0}")]
    Fault(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelEvent {
    Reset,
    Step(PortValueMap),
}

/// An in-process model. Values are logical integers; masking to port widths
/// happens in the handle.
pub trait ReferenceModel: Send {
    fn reset(&mut self);
    fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Native,
    External,
}

enum Backend {
    Native(Box<dyn ReferenceModel>),
    External(ExternalModel),
}

/// A live model instance bound to a verification spec's step signature.
pub struct RefModelHandle {
    backend: Backend,
    step_inputs: Vec<PortDecl>,
    outputs: Vec<PortDecl>,
    closed: bool,
}

impl RefModelHandle {
    pub fn native(model: Box<dyn ReferenceModel>, vspec: &VerificationSpec) -> Self {
        Self::with_backend(Backend::Native(model), vspec)
    }

    pub fn external(model: ExternalModel, vspec: &VerificationSpec) -> Self {
        Self::with_backend(Backend::External(model), vspec)
    }

    fn with_backend(backend: Backend, vspec: &VerificationSpec) -> Self {
        RefModelHandle {
            backend,
            step_inputs: vspec.step_inputs().cloned().collect(),
            outputs: vspec.outputs().cloned().collect(),
            closed: false,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.backend {
            Backend::Native(_) => ModelKind::Native,
            Backend::External(_) => ModelKind::External,
        }
    }

    pub fn step_inputs(&self) -> &[PortDecl] {
        &self.step_inputs
    }

    pub fn outputs(&self) -> &[PortDecl] {
        &self.outputs
    }

    fn check_open(&self) -> Result<(), ModelError> {
        if self.closed {
            Err(ModelError::Protocol("model handle already closed".into()))
        } else {
            Ok(())
        }
    }

    pub fn reset(&mut self) -> Result<(), ModelError> {
        self.check_open()?;
        match &mut self.backend {
            Backend::Native(m) => {
                m.reset();
                Ok(())
            }
            Backend::External(e) => e.reset(),
        }
    }

    /// One step event. `inputs` must name exactly the data input ports.
    pub fn step(&mut self, inputs: &PortValueMap) -> Result<PortValueMap, ModelError> {
        self.check_open()?;
        if let Some(extra) = inputs.keys().find(|k| !self.step_inputs.iter().any(|p| &p.name == *k)) {
            return Err(ModelError::Protocol(format!("`{extra}` is not a step input")));
        }
        let mut logical = LogicalMap::new();
        for p in &self.step_inputs {
            let bits = *inputs
                .get(&p.name)
                .ok_or_else(|| ModelError::Protocol(format!("step inputs lack `{}`", p.name)))?;
            if bits & !mask(p.width) != 0 {
                return Err(ModelError::Protocol(format!(
                    "value {bits} does not fit {}-bit input `{}`",
                    p.width, p.name
                )));
            }
            logical.insert(p.name.clone(), decode(bits, p.width, p.is_signed()));
        }
        let out = match &mut self.backend {
            Backend::Native(m) => m.step(&logical).map_err(ModelError::Fault)?,
            Backend::External(e) => e.step(&logical)?,
        };
        self.outputs
            .iter()
            .map(|p| {
                out.get(&p.name)
                    .map(|v| (p.name.clone(), encode(*v, p.width)))
                    .ok_or_else(|| ModelError::Protocol(format!("model did not return output `{}`", p.name)))
            })
            .collect()
    }

    pub fn close(&mut self) -> Result<(), ModelError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        match &mut self.backend {
            Backend::Native(_) => Ok(()),
            Backend::External(e) => e.close(),
        }
    }

    /// An empty trace shaped for this model's step signature.
    pub fn empty_trace(&self) -> CycleTrace {
        CycleTrace::new(
            self.step_inputs.iter().map(|p| p.name.clone()).collect(),
            self.outputs.iter().map(|p| p.name.clone()).collect(),
        )
    }
}

impl Drop for RefModelHandle {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error} (after {} records)", partial.len())]
pub struct SequenceError {
    pub error: ModelError,
    pub partial: CycleTrace,
}

pub const UNRESET_WARNING: &str = "unreset model: first step precedes any reset";

/// Replays events. Resets leave a marker, steps leave a record.
pub fn run_event_sequence(model: &mut RefModelHandle, events: &[ModelEvent]) -> Result<CycleTrace, SequenceError> {
    let mut trace = model.empty_trace();
    let mut seen_reset = false;
    for ev in events {
        let r = match ev {
            ModelEvent::Reset => {
                seen_reset = true;
                model.reset().map(|_| trace.mark_reset())
            }
            ModelEvent::Step(inputs) => {
                if !seen_reset && trace.is_empty() && !trace.warnings.iter().any(|w| w == UNRESET_WARNING) {
                    trace.warnings.push(UNRESET_WARNING.to_string());
                }
                model.step(inputs).map(|outputs| {
                    let inputs = model
                        .step_inputs()
                        .iter()
                        .map(|p| (p.name.clone(), inputs[&p.name]))
                        .collect();
                    trace.push(inputs, outputs)
                })
            }
        };
        if let Err(error) = r {
            return Err(SequenceError { error, partial: trace });
        }
    }
    Ok(trace)
}

/// Turns a filled model template into a live handle.
pub trait ModelProvider: Send + Sync {
    fn open(&self, model_text: &str, vspec: &VerificationSpec) -> Result<RefModelHandle, ModelError>;
}

/// Serves the built-in models. The filled template selects one with a
/// `native:<name>` marker anywhere in its text.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeProvider;

pub fn native_marker(text: &str) -> Option<&str> {
    let at = text.find("native:")?;
    let rest = &text[at + "native:".len()..];
    let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
    Some(&rest[..end]).filter(|s| !s.is_empty())
}

impl ModelProvider for NativeProvider {
    fn open(&self, model_text: &str, vspec: &VerificationSpec) -> Result<RefModelHandle, ModelError> {
        let name = native_marker(model_text)
            .ok_or_else(|| ModelError::Protocol("model text carries no native:<name> marker".into()))?;
        let model = native::by_name(name, vspec)
            .ok_or_else(|| ModelError::Protocol(format!("no native model named `{name}`")))?;
        Ok(RefModelHandle::native(model, vspec))
    }
}

/// Hosts models in an external runner process. The model text and the
/// verification spec are written to `work_dir`, and the runner is started as
/// `command... <model file> <spec file>`.
#[derive(Debug, Clone)]
pub struct RunnerProvider {
    pub command: Vec<String>,
    pub work_dir: PathBuf,
    pub model_file: String,
}

impl ModelProvider for RunnerProvider {
    fn open(&self, model_text: &str, vspec: &VerificationSpec) -> Result<RefModelHandle, ModelError> {
        let io = |e: std::io::Error| ModelError::Transport(e.to_string());
        std::fs::create_dir_all(&self.work_dir).map_err(io)?;
        let model_path = self.work_dir.join(&self.model_file);
        let spec_path = self.work_dir.join("vspec.json");
        std::fs::write(&model_path, model_text).map_err(io)?;
        std::fs::write(&spec_path, serde_json::to_string_pretty(vspec).expect("vspec serializes")).map_err(io)?;
        let mut cmd = self.command.clone();
        cmd.push(model_path.display().to_string());
        cmd.push(spec_path.display().to_string());
        Ok(RefModelHandle::external(ExternalModel::spawn(&cmd)?, vspec))
    }
}
