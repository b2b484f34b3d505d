//! Structured design specifications and the verification specification derived
//! from them.
//!
//! The design spec file is a small sectioned text format:
//!
//! ```text
//! module: counter
//! ports:
//!   clk in 1 clock
//!   rst in 1 reset
//!   en in 1
//!   count out 8
//! reset: sync active-high hold=2
//! constraints:
//!   count max_width=8 range=0..255
//! description:
//! An 8-bit up counter ...
//! ```
//!
//! Everything after `description:` up to end of file is free text handed to the
//! generator.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genclient::{extract_code_block, GenError, GeneratorClient, PromptBundle, TaskKind};
use crate::value::{logical_range, MAX_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Signedness {
    #[default]
    Unsigned,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Clock,
    Reset,
    #[default]
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    #[serde(default)]
    pub signedness: Signedness,
    #[serde(default)]
    pub role: PortRole,
}

impl PortDecl {
    pub fn data(name: &str, direction: Direction, width: u32) -> Self {
        PortDecl {
            name: name.to_string(),
            direction,
            width,
            signedness: Signedness::Unsigned,
            role: PortRole::Data,
        }
    }

    pub fn is_signed(&self) -> bool {
        self.signedness == Signedness::Signed
    }

    pub fn is_input(&self) -> bool {
        self.direction == Direction::In
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetStyle {
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActiveLevel {
    High,
    Low,
}

impl ActiveLevel {
    pub fn asserted(self) -> u64 {
        match self {
            ActiveLevel::High => 1,
            ActiveLevel::Low => 0,
        }
    }

    pub fn deasserted(self) -> u64 {
        1 - self.asserted()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResetSpec {
    pub style: ResetStyle,
    pub active_level: ActiveLevel,
    pub hold_cycles: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub lo: i128,
    pub hi: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryConstraint {
    pub port_name: String,
    pub max_width_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_range: Option<ValueRange>,
    #[serde(default)]
    pub note: String,
}

impl BoundaryConstraint {
    /// A max width that evenly divides a wider port declares a flattened
    /// array: the port carries `width / max_width_bits` elements and the
    /// constraint applies to each one. Otherwise the constraint is scalar.
    pub fn element_count(&self, port_width: u32) -> Option<u32> {
        (self.max_width_bits < port_width && port_width % self.max_width_bits == 0)
            .then(|| port_width / self.max_width_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DesignSpec {
    pub module_name: String,
    pub ports: Vec<PortDecl>,
    pub reset: Option<ResetSpec>,
    pub description: String,
    pub constraints: Vec<BoundaryConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationSpec {
    pub module_name: String,
    pub ports: Vec<PortDecl>,
    pub function_summary: String,
    pub boundary_conditions: Vec<BoundaryConstraint>,
    #[serde(default)]
    pub reset: Option<ResetSpec>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("duplicate port `{0}`")]
    DuplicatePort(String),
    #[error("constraint on unknown port `{0}`")]
    UnknownPort(String),
    #[error("reset port `{0}` declared without a reset: section")]
    ResetWithoutSpec(String),
    #[error("{0}")]
    Semantic(String),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error("generated verification spec rejected: {0}")]
    Validation(String),
}

fn identifier_ok(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl DesignSpec {
    pub fn clock_port(&self) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.role == PortRole::Clock)
    }

    pub fn reset_port(&self) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.role == PortRole::Reset)
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Ports the verification side sees: everything but the clock.
    pub fn ports_without_clock(&self) -> Vec<PortDecl> {
        self.ports
            .iter()
            .filter(|p| p.role != PortRole::Clock)
            .cloned()
            .collect()
    }

    /// Checks every type invariant.
    pub fn validate(&self) -> Result<(), SpecError> {
        if !identifier_ok(&self.module_name) {
            return Err(SpecError::Semantic(format!(
                "invalid module name `{}`",
                self.module_name
            )));
        }
        check_ports(&self.ports)?;
        if let Some(rp) = self.reset_port() {
            if self.reset.is_none() {
                return Err(SpecError::ResetWithoutSpec(rp.name.clone()));
            }
        } else if self.reset.is_some() {
            return Err(SpecError::Semantic(
                "reset: section given but no port has the reset role".into(),
            ));
        }
        if let Some(r) = &self.reset {
            if r.hold_cycles < 1 {
                return Err(SpecError::Semantic("reset hold must be >= 1".into()));
            }
        }
        for c in &self.constraints {
            let port = self
                .port(&c.port_name)
                .ok_or_else(|| SpecError::UnknownPort(c.port_name.clone()))?;
            check_constraint(c, port)?;
        }
        Ok(())
    }

    /// Serializes back to the spec-file grammar.
    pub fn to_spec_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "module: {}", self.module_name);
        out.push_str("ports:\n");
        for p in &self.ports {
            let dir = match p.direction {
                Direction::In => "in",
                Direction::Out => "out",
            };
            let _ = write!(out, "  {} {} {}", p.name, dir, p.width);
            if p.is_signed() {
                out.push_str(" signed");
            }
            match p.role {
                PortRole::Clock => out.push_str(" clock"),
                PortRole::Reset => out.push_str(" reset"),
                PortRole::Data => {}
            }
            out.push('\n');
        }
        if let Some(r) = &self.reset {
            let _ = writeln!(out, "reset: {}", format_reset(r));
        }
        if !self.constraints.is_empty() {
            out.push_str("constraints:\n");
            for c in &self.constraints {
                let _ = write!(out, "  {} max_width={}", c.port_name, c.max_width_bits);
                if let Some(r) = c.value_range {
                    let _ = write!(out, " range={}..{}", r.lo, r.hi);
                }
                if !c.note.is_empty() {
                    let _ = write!(out, " note={}", c.note);
                }
                out.push('\n');
            }
        }
        out.push_str("description:\n");
        out.push_str(&self.description);
        if !self.description.is_empty() && !self.description.ends_with('\n') {
            out.push('\n');
        }
        out
    }
}

pub fn format_reset(r: &ResetSpec) -> String {
    format!(
        "{} {} hold={}",
        match r.style {
            ResetStyle::Synchronous => "sync",
            ResetStyle::Asynchronous => "async",
        },
        match r.active_level {
            ActiveLevel::High => "active-high",
            ActiveLevel::Low => "active-low",
        },
        r.hold_cycles
    )
}

fn check_ports(ports: &[PortDecl]) -> Result<(), SpecError> {
    let mut seen = HashSet::new();
    let mut clocks = 0;
    let mut resets = 0;
    for p in ports {
        if !identifier_ok(&p.name) {
            return Err(SpecError::Semantic(format!("invalid port name `{}`", p.name)));
        }
        if !seen.insert(p.name.as_str()) {
            return Err(SpecError::DuplicatePort(p.name.clone()));
        }
        if p.width < 1 || p.width > MAX_WIDTH {
            return Err(SpecError::Semantic(format!(
                "port `{}` width {} outside 1..={MAX_WIDTH}",
                p.name, p.width
            )));
        }
        match p.role {
            PortRole::Clock => clocks += 1,
            PortRole::Reset => resets += 1,
            PortRole::Data => {}
        }
        if p.role != PortRole::Data && (p.direction != Direction::In || p.width != 1) {
            return Err(SpecError::Semantic(format!(
                "clock/reset port `{}` must be a 1-bit input",
                p.name
            )));
        }
    }
    if clocks > 1 {
        return Err(SpecError::Semantic(
            "multiple clock ports are not supported".into(),
        ));
    }
    if resets > 1 {
        return Err(SpecError::Semantic("at most one reset port is allowed".into()));
    }
    Ok(())
}

fn check_constraint(c: &BoundaryConstraint, port: &PortDecl) -> Result<(), SpecError> {
    if c.max_width_bits < 1 || c.max_width_bits > MAX_WIDTH {
        return Err(SpecError::Semantic(format!(
            "constraint on `{}`: max_width {} outside 1..={MAX_WIDTH}",
            c.port_name, c.max_width_bits
        )));
    }
    if let Some(r) = c.value_range {
        let (lo, hi) = logical_range(c.max_width_bits, port.is_signed());
        if r.lo > r.hi || r.lo < lo || r.hi > hi {
            return Err(SpecError::Semantic(format!(
                "constraint on `{}`: range {}..{} does not fit {} {} bits",
                c.port_name,
                r.lo,
                r.hi,
                if port.is_signed() { "signed" } else { "unsigned" },
                c.max_width_bits
            )));
        }
    }
    Ok(())
}

#[derive(PartialEq)]
enum Section {
    None,
    Ports,
    Constraints,
}

/// Parses the spec-file grammar and validates the result.
pub fn parse_design_spec(text: &str) -> Result<DesignSpec, SpecError> {
    let mut module_name = None;
    let mut ports = Vec::new();
    let mut reset = None;
    let mut constraints = Vec::new();
    let mut description = String::new();
    let mut section = Section::None;

    let mut lines = text.lines().enumerate();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let syntax = |reason: String| SpecError::Syntax {
            line: line_no,
            reason,
        };
        if let Some((head, rest)) = trimmed.split_once(':') {
            let rest = rest.trim();
            match head.trim() {
                "module" => {
                    if rest.is_empty() {
                        return Err(syntax("module name missing".into()));
                    }
                    module_name = Some(rest.to_string());
                    section = Section::None;
                    continue;
                }
                "ports" => {
                    section = Section::Ports;
                    continue;
                }
                "constraints" => {
                    section = Section::Constraints;
                    continue;
                }
                "reset" => {
                    reset = Some(parse_reset(rest).map_err(syntax)?);
                    section = Section::None;
                    continue;
                }
                "description" => {
                    description.push_str(rest);
                    if !rest.is_empty() {
                        description.push('\n');
                    }
                    for (_, l) in lines.by_ref() {
                        description.push_str(l);
                        description.push('\n');
                    }
                    break;
                }
                _ => {}
            }
        }
        match section {
            Section::Ports => ports.push(parse_port(trimmed).map_err(syntax)?),
            Section::Constraints => constraints.push(parse_constraint(trimmed).map_err(syntax)?),
            Section::None => return Err(syntax(format!("unexpected line `{trimmed}`"))),
        }
    }

    let trimmed_len = description.trim_end().len();
    description.truncate(trimmed_len);
    if !description.is_empty() {
        description.push('\n');
    }
    let spec = DesignSpec {
        module_name: module_name.ok_or(SpecError::Syntax {
            line: 1,
            reason: "missing `module:` section".into(),
        })?,
        ports,
        reset,
        description,
        constraints,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_reset(text: &str) -> Result<ResetSpec, String> {
    let mut style = None;
    let mut level = None;
    let mut hold = 1;
    for tok in text.split_whitespace() {
        match tok {
            "sync" => style = Some(ResetStyle::Synchronous),
            "async" => style = Some(ResetStyle::Asynchronous),
            "active-high" => level = Some(ActiveLevel::High),
            "active-low" => level = Some(ActiveLevel::Low),
            t if t.starts_with("hold=") => {
                hold = t[5..]
                    .parse::<u32>()
                    .map_err(|_| format!("bad hold count `{t}`"))?;
                if hold < 1 {
                    return Err("hold must be >= 1".into());
                }
            }
            t => return Err(format!("unknown reset attribute `{t}`")),
        }
    }
    Ok(ResetSpec {
        style: style.ok_or("reset style (sync|async) missing")?,
        active_level: level.ok_or("reset level (active-high|active-low) missing")?,
        hold_cycles: hold,
    })
}

fn parse_port(line: &str) -> Result<PortDecl, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 3 {
        return Err(format!("port line needs `name dir width`, got `{line}`"));
    }
    let direction = match toks[1] {
        "in" | "input" => Direction::In,
        "out" | "output" => Direction::Out,
        d => return Err(format!("bad direction `{d}`")),
    };
    let width = toks[2]
        .parse::<u32>()
        .map_err(|_| format!("bad width `{}`", toks[2]))?;
    let mut decl = PortDecl::data(toks[0], direction, width);
    for t in &toks[3..] {
        match *t {
            "signed" => decl.signedness = Signedness::Signed,
            "clock" => decl.role = PortRole::Clock,
            "reset" => decl.role = PortRole::Reset,
            other => return Err(format!("unknown port attribute `{other}`")),
        }
    }
    Ok(decl)
}

fn parse_constraint(line: &str) -> Result<BoundaryConstraint, String> {
    let (head, note) = match line.find(" note=") {
        Some(pos) => (&line[..pos], line[pos + 6..].trim().to_string()),
        None => (line, String::new()),
    };
    let mut toks = head.split_whitespace();
    let port_name = toks.next().ok_or("empty constraint")?.to_string();
    let mut max_width = None;
    let mut range = None;
    for t in toks {
        if let Some(v) = t.strip_prefix("max_width=") {
            max_width = Some(v.parse::<u32>().map_err(|_| format!("bad max_width `{v}`"))?);
        } else if let Some(v) = t.strip_prefix("range=") {
            let (lo, hi) = v
                .split_once("..")
                .ok_or_else(|| format!("range must be lo..hi, got `{v}`"))?;
            range = Some(ValueRange {
                lo: lo.parse().map_err(|_| format!("bad range bound `{lo}`"))?,
                hi: hi.parse().map_err(|_| format!("bad range bound `{hi}`"))?,
            });
        } else {
            return Err(format!("unknown constraint attribute `{t}`"));
        }
    }
    Ok(BoundaryConstraint {
        port_name,
        max_width_bits: max_width.ok_or("constraint needs max_width=<n>")?,
        value_range: range,
        note,
    })
}

/// One discrepancy between the design's ports and a verification spec's ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDiff {
    pub port: String,
    pub detail: String,
}

impl fmt::Display for PortDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.port, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "diff")]
pub enum PortCheck {
    Pass,
    Fail(Vec<PortDiff>),
}

impl PortCheck {
    pub fn is_pass(&self) -> bool {
        matches!(self, PortCheck::Pass)
    }
}

/// Pass iff `vspec.ports` equals the design's ports minus the clock, in order,
/// with identical name, direction, width, signedness and role.
pub fn validate_port_preservation(design: &DesignSpec, vspec: &VerificationSpec) -> PortCheck {
    let mut diffs = Vec::new();
    let expected = design.ports_without_clock();
    if let Some(clk) = design.clock_port() {
        if vspec.ports.iter().any(|p| p.name == clk.name) {
            diffs.push(PortDiff {
                port: clk.name.clone(),
                detail: "clock must be extracted".into(),
            });
        }
    }
    for p in &vspec.ports {
        if p.role == PortRole::Clock && design.clock_port().map(|c| &c.name) != Some(&p.name) {
            diffs.push(PortDiff {
                port: p.name.clone(),
                detail: "clock role not allowed in verification ports".into(),
            });
        }
    }
    for exp in &expected {
        match vspec.ports.iter().find(|p| p.name == exp.name) {
            None => diffs.push(PortDiff {
                port: exp.name.clone(),
                detail: "missing".into(),
            }),
            Some(got) => {
                if got.width != exp.width {
                    diffs.push(PortDiff {
                        port: exp.name.clone(),
                        detail: format!("width {} vs {}", exp.width, got.width),
                    });
                }
                if got.direction != exp.direction {
                    diffs.push(PortDiff {
                        port: exp.name.clone(),
                        detail: format!("direction {:?} vs {:?}", exp.direction, got.direction),
                    });
                }
                if got.signedness != exp.signedness {
                    diffs.push(PortDiff {
                        port: exp.name.clone(),
                        detail: format!(
                            "signedness {:?} vs {:?}",
                            exp.signedness, got.signedness
                        ),
                    });
                }
                if got.role != exp.role {
                    diffs.push(PortDiff {
                        port: exp.name.clone(),
                        detail: format!("role {:?} vs {:?}", exp.role, got.role),
                    });
                }
            }
        }
    }
    let clock_name = design.clock_port().map(|c| c.name.as_str());
    for got in &vspec.ports {
        if Some(got.name.as_str()) != clock_name && !expected.iter().any(|e| e.name == got.name) {
            diffs.push(PortDiff {
                port: got.name.clone(),
                detail: "not declared in design spec".into(),
            });
        }
    }
    if diffs.is_empty() {
        let order_ok = expected
            .iter()
            .map(|p| &p.name)
            .eq(vspec.ports.iter().map(|p| &p.name));
        if !order_ok {
            diffs.push(PortDiff {
                port: "*".into(),
                detail: "port order differs from design spec".into(),
            });
        }
    }
    if diffs.is_empty() {
        PortCheck::Pass
    } else {
        PortCheck::Fail(diffs)
    }
}

/// What the generator is asked to return for the verification-spec task.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GeneratedVerificationSpec {
    #[serde(default)]
    module_name: Option<String>,
    ports: Vec<PortDecl>,
    function_summary: String,
    #[serde(default)]
    boundary_conditions: Vec<BoundaryConstraint>,
}

/// Asks the generator for the abstracted function summary and boundary analysis
/// and checks the result against the design. Constraints declared in the design
/// always survive; generator constraints are added after them.
pub fn build_verification_spec(
    design: &DesignSpec,
    gen: &GeneratorClient,
) -> Result<VerificationSpec, BuildError> {
    let spec_text = design.to_spec_text();
    let prompt = gen
        .prompts()
        .render(TaskKind::GenVerificationSpec, &[("spec", spec_text.as_str())]);
    let bundle = PromptBundle::new(TaskKind::GenVerificationSpec, 0, prompt)
        .with_attachment("design_spec", spec_text.clone());
    let response = gen.request(&bundle)?;
    let (json, _) = extract_code_block(&response, "json");
    let generated: GeneratedVerificationSpec = serde_json::from_str(&json)
        .map_err(|e| BuildError::Validation(format!("unparseable verification spec: {e}")))?;

    if let Some(name) = &generated.module_name {
        if name != &design.module_name {
            return Err(BuildError::Validation(format!(
                "module renamed `{}` -> `{name}`",
                design.module_name
            )));
        }
    }
    if generated.function_summary.trim().is_empty() {
        return Err(BuildError::Validation("empty function summary".into()));
    }

    let mut boundary = design.constraints.clone();
    for c in generated.boundary_conditions {
        let port = design.port(&c.port_name).ok_or_else(|| {
            BuildError::Validation(format!("boundary condition on unknown port `{}`", c.port_name))
        })?;
        check_constraint(&c, port).map_err(|e| BuildError::Validation(e.to_string()))?;
        if !boundary.contains(&c) {
            boundary.push(c);
        }
    }

    let vspec = VerificationSpec {
        module_name: design.module_name.clone(),
        ports: generated.ports,
        function_summary: generated.function_summary.trim().to_string(),
        boundary_conditions: boundary,
        reset: design.reset,
    };
    match validate_port_preservation(design, &vspec) {
        PortCheck::Pass => Ok(vspec),
        PortCheck::Fail(diffs) => Err(BuildError::Validation(format!(
            "port preservation violated: {}",
            diffs
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        ))),
    }
}

impl VerificationSpec {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn reset_port(&self) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.role == PortRole::Reset)
    }

    /// Inputs a model step receives: data inputs only.
    pub fn step_inputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports
            .iter()
            .filter(|p| p.is_input() && p.role == PortRole::Data)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| !p.is_input())
    }

    /// A verification spec built directly from a design, without a generator.
    /// Used when the abstraction step is supplied out of band.
    pub fn from_design(design: &DesignSpec, function_summary: &str) -> Self {
        VerificationSpec {
            module_name: design.module_name.clone(),
            ports: design.ports_without_clock(),
            function_summary: function_summary.to_string(),
            boundary_conditions: design.constraints.clone(),
            reset: design.reset,
        }
    }
}
