//! Cycle-accurate interpreter for a synthesizable Verilog subset.
//!
//! Two-state, zero-initialized, one clock. A tick is one rising clock edge:
//! inputs are bound with the clock low, combinational logic settles, clocked
//! blocks run against pre-edge values, nonblocking updates commit together,
//! and the combinational cone settles again before outputs are sampled.

pub mod ast;
mod elab;
pub mod lexer;
mod parser;
mod sim;
pub mod trace;

use thiserror::Error;

pub use ast::HdlAst;
pub use elab::{Design, PortInfo};
pub use sim::SimInstance;
pub use trace::{CycleRecord, CycleTrace};

use crate::value::PortValueMap;

/// Settle passes allowed before a combinational loop is reported.
pub const SETTLE_LIMIT: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HdlError {
    #[error("lex error at {line}:{col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("parse error at {line}:{col}: expected {expected}, found {found}")]
    Parse {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported construct `{construct}` at line {line}")]
    Unsupported { construct: String, line: usize },
    #[error("net `{net}` has multiple drivers (line {line})")]
    MultipleDrivers { net: String, line: usize },
    #[error("undeclared identifier `{name}` at line {line}")]
    Undeclared { name: String, line: usize },
    #[error("line {line}: {msg}")]
    Semantic { msg: String, line: usize },
    #[error("combinational logic did not settle within {iterations} passes")]
    CombinationalLoop { iterations: usize },
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("missing value for input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not a drivable input port")]
    UnknownInput(String),
}

/// Parses and checks a module. Besides syntax this rejects multiple drivers,
/// undeclared identifiers and unsupported clocking.
pub fn parse_hdl(source: &str) -> Result<HdlAst, HdlError> {
    let ast = parser::parse(source)?;
    elab::build(&ast, None)?;
    Ok(ast)
}

/// Elaborates with the clock inferred from the clocked blocks, and settles
/// the zero-initialized netlist once.
pub fn elaborate(ast: &HdlAst) -> Result<SimInstance, HdlError> {
    SimInstance::new(elab::build(ast, None)?)
}

/// Like [`elaborate`] with the clock port named explicitly.
pub fn elaborate_with_clock(ast: &HdlAst, clock: &str) -> Result<SimInstance, HdlError> {
    SimInstance::new(elab::build(ast, Some(clock))?)
}

/// Convenience: parse then elaborate.
pub fn load(source: &str, clock: Option<&str>) -> Result<SimInstance, HdlError> {
    let ast = parser::parse(source)?;
    SimInstance::new(elab::build(&ast, clock)?)
}

pub fn tick(inst: &mut SimInstance, inputs: &PortValueMap) -> Result<PortValueMap, HdlError> {
    inst.tick(inputs)
}

pub fn run_stimuli(inst: &mut SimInstance, cycles: &[PortValueMap]) -> Result<CycleTrace, HdlError> {
    inst.run(cycles)
}
