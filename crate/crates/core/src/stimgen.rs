//! Test stimuli: a generator-proposed plan and per-cycle data, then
//! rule-based reset insertion and boundary fixing.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::genclient::{extract_code_block, GenError, GeneratorClient, PromptBundle, TaskKind};
use crate::refmodel::LogicalMap;
use crate::specmodel::{BoundaryConstraint, PortDecl, ResetStyle, VerificationSpec};
use crate::value::{logical_range, wrap_logical};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StimError {
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error("stimulus validation failed: {0}")]
    Validation(String),
    #[error("plan has {plan} cases but {refined} refined cases were supplied")]
    MismatchedCases { plan: usize, refined: usize },
    #[error("cannot read stimuli file: {0}")]
    Format(String),
}

fn invalid(msg: impl Into<String>) -> StimError {
    StimError::Validation(msg.into())
}

/// Size hints passed to the generator. Not claims about coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StimConfig {
    pub cases: usize,
    pub cycles: usize,
}

impl Default for StimConfig {
    fn default() -> Self {
        StimConfig { cases: 5, cycles: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCase {
    pub name: String,
    #[serde(default, alias = "targetedFunctionality")]
    pub targets: String,
    #[serde(default)]
    pub rationale: String,
    #[serde(alias = "requestedCycles")]
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestPlan {
    pub cases: Vec<PlanCase>,
    /// The generator's response, kept for the report.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_text: String,
}

impl TestPlan {
    pub fn validate(&self) -> Result<(), StimError> {
        if self.cases.is_empty() {
            return Err(invalid("test plan has no cases"));
        }
        let mut seen = HashSet::new();
        for c in &self.cases {
            if c.name.trim().is_empty() {
                return Err(invalid("test case with empty name"));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(invalid(format!("duplicate test case name `{}`", c.name)));
            }
            if c.cycles == 0 {
                return Err(invalid(format!("case `{}` requests zero cycles", c.name)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.cases.iter().enumerate() {
            out.push_str(&format!("{}. {} ({} cycles): {}\n", k + 1, c.name, c.cycles, c.targets));
            if !c.rationale.is_empty() {
                out.push_str(&format!("   {}\n", c.rationale));
            }
        }
        out
    }
}

#[derive(Deserialize)]
struct PlanReply {
    cases: Vec<PlanCase>,
}

pub fn plan_tests(vspec: &VerificationSpec, gen: &GeneratorClient, cfg: StimConfig) -> Result<TestPlan, StimError> {
    let vtext = serde_json::to_string_pretty(vspec).expect("vspec serializes");
    let prompt = gen.prompts().render(
        TaskKind::ProposePlan,
        &[("vspec", &vtext), ("cases", &cfg.cases.to_string()), ("cycles", &cfg.cycles.to_string())],
    );
    let response = gen.request(&PromptBundle::new(TaskKind::ProposePlan, 0, prompt))?;
    parse_plan(&response)
}

pub fn parse_plan(response: &str) -> Result<TestPlan, StimError> {
    let (json, _) = extract_code_block(response, "json");
    let reply: PlanReply = serde_json::from_str(&json).map_err(|e| invalid(format!("unparseable test plan: {e}")))?;
    let plan = TestPlan {
        cases: reply.cases,
        source_text: response.to_string(),
    };
    plan.validate()?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCase {
    pub name: String,
    pub cycles: Vec<LogicalMap>,
}

/// Per-case data inputs, no reset and no clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStimuli {
    pub cases: Vec<RawCase>,
}

pub fn generate_raw(plan: &TestPlan, vspec: &VerificationSpec, gen: &GeneratorClient) -> Result<RawStimuli, StimError> {
    let vtext = serde_json::to_string_pretty(vspec).expect("vspec serializes");
    let prompt = gen
        .prompts()
        .render(TaskKind::ProposeStimuli, &[("vspec", &vtext), ("plan", &plan.to_text())]);
    let response = gen.request(&PromptBundle::new(TaskKind::ProposeStimuli, 0, prompt))?;
    parse_raw(&response, plan, vspec)
}

fn int_value(v: &Value) -> Option<i128> {
    match v {
        Value::Number(n) => n.as_i64().map(i128::from).or_else(|| n.as_u64().map(i128::from)),
        _ => None,
    }
}

/// Checks generator output against the plan and the data-port set. A reset
/// value, if the generator supplies one anyway, is dropped.
pub fn parse_raw(response: &str, plan: &TestPlan, vspec: &VerificationSpec) -> Result<RawStimuli, StimError> {
    let (json, _) = extract_code_block(response, "json");
    let v: Value = serde_json::from_str(&json).map_err(|e| invalid(format!("unparseable stimuli: {e}")))?;
    let cases = v
        .get("cases")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("stimuli lack a `cases` array"))?;
    let data: Vec<&PortDecl> = vspec.step_inputs().collect();
    let mut out = Vec::new();
    for pc in &plan.cases {
        let c = cases
            .iter()
            .find(|c| c.get("name").and_then(Value::as_str) == Some(pc.name.as_str()))
            .ok_or_else(|| invalid(format!("no stimuli for case `{}`", pc.name)))?;
        let cycles = c
            .get("cycles")
            .and_then(Value::as_array)
            .ok_or_else(|| invalid(format!("case `{}` lacks a `cycles` array", pc.name)))?;
        if cycles.len() < pc.cycles {
            return Err(invalid(format!(
                "case `{}` has {} cycles, plan requested {}",
                pc.name,
                cycles.len(),
                pc.cycles
            )));
        }
        let mut rows = Vec::with_capacity(cycles.len());
        for (k, cyc) in cycles.iter().enumerate() {
            let obj = cyc
                .as_object()
                .ok_or_else(|| invalid(format!("case `{}` cycle {k} is not an object", pc.name)))?;
            if let Some(extra) = obj.keys().find(|n| vspec.port(n).is_none_or(|p| !p.is_input())) {
                return Err(invalid(format!("case `{}` cycle {k}: unknown input port `{extra}`", pc.name)));
            }
            let mut row = LogicalMap::new();
            for p in &data {
                let val = obj
                    .get(&p.name)
                    .ok_or_else(|| invalid(format!("case `{}` cycle {k}: missing port `{}`", pc.name, p.name)))?;
                let n = int_value(val).ok_or_else(|| {
                    invalid(format!("case `{}` cycle {k}: port `{}` value {val} is not an integer", pc.name, p.name))
                })?;
                row.insert(p.name.clone(), n);
            }
            rows.push(row);
        }
        out.push(RawCase {
            name: pc.name.clone(),
            cycles: rows,
        });
    }
    Ok(RawStimuli { cases: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixRule {
    /// Wrapped to the constraint's max width (per element for packed arrays).
    WidthWrap,
    /// Clamped into the constraint's value range.
    RangeClamp,
    /// No constraint; wrapped to the declared port width.
    PortWidthWrap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixEntry {
    Fix {
        case: String,
        cycle: usize,
        port: String,
        original: i128,
        fixed: i128,
        rule: FixRule,
    },
    NoReset {
        case: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinedCase {
    pub name: String,
    #[serde(default)]
    pub async_reset_pre_assert: bool,
    pub cycles: Vec<LogicalMap>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinedStimuli {
    pub cases: Vec<RefinedCase>,
    pub fix_log: Vec<FixEntry>,
}

/// Prefixes each case with the reset hold: reset at its active level, data
/// at 0. Later cycles carry the inactive level. Without a reset spec the
/// cycles pass through and the log records a no-reset marker per case.
pub fn insert_reset(raw: &RawStimuli, vspec: &VerificationSpec) -> RefinedStimuli {
    let data: Vec<&str> = vspec.step_inputs().map(|p| p.name.as_str()).collect();
    let reset = vspec.reset.zip(vspec.reset_port());
    let mut fix_log = Vec::new();
    let cases = raw
        .cases
        .iter()
        .map(|c| match reset {
            None => {
                fix_log.push(FixEntry::NoReset { case: c.name.clone() });
                RefinedCase {
                    name: c.name.clone(),
                    async_reset_pre_assert: false,
                    cycles: c.cycles.clone(),
                }
            }
            Some((r, port)) => {
                let with_reset = |level: u64, row: Option<&LogicalMap>| -> LogicalMap {
                    let mut m = LogicalMap::new();
                    m.insert(port.name.clone(), level as i128);
                    for d in &data {
                        m.insert(d.to_string(), row.map_or(0, |row| row[*d]));
                    }
                    m
                };
                let mut cycles: Vec<LogicalMap> =
                    (0..r.hold_cycles).map(|_| with_reset(r.active_level.asserted(), None)).collect();
                cycles.extend(c.cycles.iter().map(|row| with_reset(r.active_level.deasserted(), Some(row))));
                RefinedCase {
                    name: c.name.clone(),
                    async_reset_pre_assert: r.style == ResetStyle::Asynchronous,
                    cycles,
                }
            }
        })
        .collect();
    RefinedStimuli { cases, fix_log }
}

/// Wrap then clamp. A constraint whose max width evenly divides a wider port
/// applies to each packed element; otherwise it applies to the whole value.
/// Data ports without a constraint are wrapped to their declared width.
pub fn fix_value(value: i128, port: &PortDecl, c: Option<&BoundaryConstraint>) -> Vec<(i128, FixRule)> {
    fn apply(steps: &mut Vec<(i128, FixRule)>, v: &mut i128, new: i128, rule: FixRule) {
        if new != *v {
            *v = new;
            steps.push((new, rule));
        }
    }
    let mut steps = Vec::new();
    let mut v = value;
    let signed = port.is_signed();
    match c {
        None => apply(&mut steps, &mut v, wrap_logical(value, port.width, signed), FixRule::PortWidthWrap),
        Some(c) => match c.element_count(port.width) {
            Some(n) => {
                let w = c.max_width_bits;
                apply(&mut steps, &mut v, wrap_logical(value, port.width, signed), FixRule::WidthWrap);
                if let Some(r) = c.value_range {
                    let m = (1i128 << w) - 1;
                    let bits = crate::value::encode(v, port.width) as i128;
                    let mut packed = 0i128;
                    for k in 0..n {
                        let e = wrap_logical((bits >> (k * w)) & m, w, signed);
                        packed |= (e.clamp(r.lo, r.hi) & m) << (k * w);
                    }
                    apply(&mut steps, &mut v, wrap_logical(packed, port.width, signed), FixRule::RangeClamp);
                }
            }
            None => {
                let w = c.max_width_bits.min(port.width);
                apply(&mut steps, &mut v, wrap_logical(value, w, signed), FixRule::WidthWrap);
                if let Some(r) = c.value_range {
                    let clamped = v.clamp(r.lo, r.hi);
                    apply(&mut steps, &mut v, clamped, FixRule::RangeClamp);
                }
            }
        },
    }
    steps
}

/// True when `value` already satisfies the port's constraint.
pub fn obeys(value: i128, port: &PortDecl, c: Option<&BoundaryConstraint>) -> bool {
    fix_value(value, port, c).is_empty()
}

pub fn fix_boundaries(stim: &RefinedStimuli, vspec: &VerificationSpec) -> RefinedStimuli {
    let mut out = stim.clone();
    for case in &mut out.cases {
        for (k, row) in case.cycles.iter_mut().enumerate() {
            for p in vspec.step_inputs() {
                let Some(v) = row.get_mut(&p.name) else { continue };
                let c = vspec.boundary_conditions.iter().find(|c| c.port_name == p.name);
                let mut original = *v;
                for (fixed, rule) in fix_value(*v, p, c) {
                    out.fix_log.push(FixEntry::Fix {
                        case: case.name.clone(),
                        cycle: k,
                        port: p.name.clone(),
                        original,
                        fixed,
                        rule,
                    });
                    original = fixed;
                    *v = fixed;
                }
            }
        }
    }
    out
}

/// Both refinement rules in order.
pub fn refine(raw: &RawStimuli, vspec: &VerificationSpec) -> RefinedStimuli {
    fix_boundaries(&insert_reset(raw, vspec), vspec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteCase {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub targets: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub rationale: String,
    #[serde(default)]
    pub async_reset_pre_assert: bool,
    pub cycles: Vec<LogicalMap>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusSuite {
    pub module: String,
    pub cases: Vec<SuiteCase>,
}

impl StimulusSuite {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StimError> {
        serde_json::from_str(text).map_err(|e| StimError::Format(e.to_string()))
    }

    /// Bit patterns for one case, ready for the DUT.
    pub fn case_bits(&self, k: usize, vspec: &VerificationSpec) -> Vec<crate::value::PortValueMap> {
        self.cases[k]
            .cycles
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(n, v)| {
                        let w = vspec.port(n).map_or(64, |p| p.width);
                        (n.clone(), crate::value::encode(*v, w))
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn assemble_suite(module: &str, plan: &TestPlan, refined: &RefinedStimuli) -> Result<StimulusSuite, StimError> {
    if plan.cases.len() != refined.cases.len() {
        return Err(StimError::MismatchedCases {
            plan: plan.cases.len(),
            refined: refined.cases.len(),
        });
    }
    let cases = plan
        .cases
        .iter()
        .zip(&refined.cases)
        .map(|(p, r)| {
            if p.name != r.name {
                return Err(invalid(format!("plan case `{}` paired with refined case `{}`", p.name, r.name)));
            }
            Ok(SuiteCase {
                name: p.name.clone(),
                targets: p.targets.clone(),
                rationale: p.rationale.clone(),
                async_reset_pre_assert: r.async_reset_pre_assert,
                cycles: r.cycles.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(StimulusSuite {
        module: module.to_string(),
        cases,
    })
}

/// Plan, generate, refine and assemble.
pub fn build_suite(vspec: &VerificationSpec, gen: &GeneratorClient, cfg: StimConfig) -> Result<(StimulusSuite, TestPlan, RawStimuli, RefinedStimuli), StimError> {
    let plan = plan_tests(vspec, gen, cfg)?;
    let raw = generate_raw(&plan, vspec, gen)?;
    let refined = refine(&raw, vspec);
    let suite = assemble_suite(&vspec.module_name, &plan, &refined)?;
    Ok((suite, plan, raw, refined))
}

/// Inclusive logical range a data port may take after fixing.
pub fn admissible_range(port: &PortDecl, c: Option<&BoundaryConstraint>) -> (i128, i128) {
    match c {
        Some(c) if c.element_count(port.width).is_none() => {
            let (lo, hi) = logical_range(c.max_width_bits.min(port.width), port.is_signed());
            c.value_range.map_or((lo, hi), |r| (r.lo.max(lo), r.hi.min(hi)))
        }
        _ => logical_range(port.width, port.is_signed()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmodel::{ActiveLevel, Direction, PortRole, ResetSpec, ValueRange};

    fn vspec(reset: Option<ResetSpec>) -> VerificationSpec {
        let mut rst = PortDecl::data("rst", Direction::In, 1);
        rst.role = PortRole::Reset;
        let mut ports = vec![PortDecl::data("en", Direction::In, 1), PortDecl::data("count", Direction::Out, 8)];
        if reset.is_some() {
            ports.insert(0, rst);
        }
        VerificationSpec {
            module_name: "counter".into(),
            ports,
            function_summary: "counter".into(),
            boundary_conditions: vec![],
            reset,
        }
    }

    fn sync_high(hold: u32) -> ResetSpec {
        ResetSpec {
            style: ResetStyle::Synchronous,
            active_level: ActiveLevel::High,
            hold_cycles: hold,
        }
    }

    fn raw(n: usize) -> RawStimuli {
        RawStimuli {
            cases: vec![RawCase {
                name: "up".into(),
                cycles: (0..n).map(|_| [("en".to_string(), 1)].into_iter().collect()).collect(),
            }],
        }
    }

    #[test]
    fn sync_reset_prefix() {
        let r = insert_reset(&raw(4), &vspec(Some(sync_high(2))));
        let c = &r.cases[0];
        assert_eq!(c.cycles.len(), 6);
        let rst: Vec<i128> = c.cycles.iter().map(|m| m["rst"]).collect();
        let en: Vec<i128> = c.cycles.iter().map(|m| m["en"]).collect();
        assert_eq!(rst, [1, 1, 0, 0, 0, 0]);
        assert_eq!(en, [0, 0, 1, 1, 1, 1]);
        assert!(!c.async_reset_pre_assert);
    }

    #[test]
    fn active_low_reset() {
        let mut r = sync_high(1);
        r.active_level = ActiveLevel::Low;
        let s = insert_reset(&raw(3), &vspec(Some(r)));
        let rst: Vec<i128> = s.cases[0].cycles.iter().map(|m| m["rst"]).collect();
        assert_eq!(rst, [0, 1, 1, 1]);
    }

    #[test]
    fn async_reset_sets_flag() {
        let mut r = sync_high(2);
        r.style = ResetStyle::Asynchronous;
        let s = insert_reset(&raw(3), &vspec(Some(r)));
        assert!(s.cases[0].async_reset_pre_assert);
        assert_eq!(s.cases[0].cycles.len(), 5);
    }

    #[test]
    fn no_reset_is_identity() {
        let s = insert_reset(&raw(3), &vspec(None));
        assert_eq!(s.cases[0].cycles, raw(3).cases[0].cycles);
        assert_eq!(s.fix_log, vec![FixEntry::NoReset { case: "up".into() }]);
    }

    fn port8() -> PortDecl {
        PortDecl::data("d", Direction::In, 8)
    }

    fn cons(w: u32, range: Option<(i128, i128)>) -> BoundaryConstraint {
        BoundaryConstraint {
            port_name: "d".into(),
            max_width_bits: w,
            value_range: range.map(|(lo, hi)| ValueRange { lo, hi }),
            note: String::new(),
        }
    }

    #[test]
    fn wrap_and_clamp_rules() {
        assert_eq!(fix_value(300, &port8(), Some(&cons(8, None))), vec![(44, FixRule::WidthWrap)]);
        assert!(fix_value(100, &port8(), Some(&cons(8, Some((0, 255))))).is_empty());
        assert_eq!(fix_value(20, &port8(), Some(&cons(8, Some((0, 15))))), vec![(15, FixRule::RangeClamp)]);
        assert_eq!(fix_value(-1, &port8(), None), vec![(255, FixRule::PortWidthWrap)]);
        let mut s = port8();
        s.signedness = crate::specmodel::Signedness::Signed;
        assert_eq!(fix_value(200, &s, Some(&cons(8, None))), vec![(-56, FixRule::WidthWrap)]);
    }

    #[test]
    fn packed_elements_clamped_individually() {
        let p = PortDecl::data("d", Direction::In, 16);
        let c = BoundaryConstraint {
            port_name: "d".into(),
            max_width_bits: 8,
            value_range: Some(ValueRange { lo: 0, hi: 15 }),
            note: String::new(),
        };
        assert_eq!(fix_value(0x2005, &p, Some(&c)), vec![(0x0F05, FixRule::RangeClamp)]);
        assert_eq!(admissible_range(&p, Some(&c)), (0, 0xFFFF));
    }

    #[test]
    fn plan_validation() {
        assert!(parse_plan("```json\n{\"cases\": []}\n```").is_err());
        let dup = r#"{"cases":[{"name":"a","cycles":2},{"name":"a","cycles":3}]}"#;
        assert!(matches!(parse_plan(dup), Err(StimError::Validation(m)) if m.contains("duplicate")));
        let ok = parse_plan(r#"{"cases":[{"name":"a","targets":"x","rationale":"y","cycles":2}]}"#).unwrap();
        assert_eq!(ok.cases[0].cycles, 2);
    }

    #[test]
    fn raw_validation_names_case_cycle_port() {
        let plan = parse_plan(r#"{"cases":[{"name":"up","cycles":2}]}"#).unwrap();
        let v = vspec(Some(sync_high(1)));
        let err = parse_raw(r#"{"cases":[{"name":"up","cycles":[{"en":1},{}]}]}"#, &plan, &v).unwrap_err();
        assert_eq!(err, invalid("case `up` cycle 1: missing port `en`"));
        let err = parse_raw(r#"{"cases":[{"name":"up","cycles":[{"en":1},{"en":0.5}]}]}"#, &plan, &v).unwrap_err();
        assert!(err.to_string().contains("not an integer"));
        let short = parse_raw(r#"{"cases":[{"name":"up","cycles":[{"en":1}]}]}"#, &plan, &v);
        assert!(short.is_err());
        // A supplied reset value is dropped.
        let r = parse_raw(r#"{"cases":[{"name":"up","cycles":[{"en":1,"rst":1},{"en":0}]}]}"#, &plan, &v).unwrap();
        assert_eq!(r.cases[0].cycles[0].len(), 1);
    }

    #[test]
    fn suite_assembly_and_round_trip() {
        let plan = parse_plan(r#"{"cases":[{"name":"up","cycles":2}]}"#).unwrap();
        let v = vspec(Some(sync_high(1)));
        let refined = refine(&raw(2), &v);
        let suite = assemble_suite("counter", &plan, &refined).unwrap();
        assert_eq!(StimulusSuite::from_json(&suite.to_json()).unwrap(), suite);
        let mut two = plan.clone();
        two.cases.push(PlanCase {
            name: "b".into(),
            targets: String::new(),
            rationale: String::new(),
            cycles: 1,
        });
        assert_eq!(
            assemble_suite("counter", &two, &refined).unwrap_err(),
            StimError::MismatchedCases { plan: 2, refined: 1 }
        );
    }
}
