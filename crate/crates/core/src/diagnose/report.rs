//! Verification report: per-case class, first divergence and an aligned
//! window of values, rendered as JSON and as plain text.

use std::fmt::Write;

use serde::Serialize;

use super::classify::{classify, BoundaryVariant, ClassifierParams, MismatchClass, MismatchKind};
use crate::cosim::{CaseOutcome, CaseResult, PairedTrace};
use crate::specmodel::VerificationSpec;
use crate::stimgen::FixEntry;
use crate::value::{mask, PortValueMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportConfig {
    pub window: usize,
    pub classifier: ClassifierParams,
    pub fix_log_excerpt: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            window: 8,
            classifier: ClassifierParams::default(),
            fix_log_excerpt: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowRow {
    pub cycle: usize,
    pub inputs: PortValueMap,
    /// `None` on reset cycles.
    pub reference: Option<PortValueMap>,
    pub dut: Option<PortValueMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum CaseStatus {
    Pass,
    Mismatch { class: MismatchClass },
    Fault { error: String },
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseReport {
    pub name: String,
    #[serde(flatten)]
    pub status: CaseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub window: Vec<WindowRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fix_log: Vec<FixEntry>,
    pub stimuli_ref: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.status == CaseStatus::Pass
    }

    pub fn class(&self) -> Option<&MismatchClass> {
        match &self.status {
            CaseStatus::Mismatch { class } => Some(class),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub module: String,
    pub verdict: Verdict,
    /// Set when the DUT could not be simulated at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dut_error: Option<String>,
    pub cases: Vec<CaseReport>,
}

impl VerificationReport {
    /// A failing report for a design that did not parse or elaborate.
    pub fn dut_error(module: &str, error: &str) -> Self {
        VerificationReport {
            module: module.to_string(),
            verdict: Verdict::Fail,
            dut_error: Some(error.to_string()),
            cases: vec![],
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }
}

fn window(t: &PairedTrace, center: usize, w: usize) -> Vec<WindowRow> {
    let n = t.reference.len().max(t.dut.len());
    let start = center.saturating_sub(w / 2).min(n.saturating_sub(w));
    (start..(start + w).min(n))
        .map(|k| {
            let di = k as i64 + t.latency_offset;
            WindowRow {
                cycle: k,
                inputs: t.inputs.get(k).cloned().unwrap_or_default(),
                reference: t.reference.get(k).cloned().flatten(),
                dut: (di >= 0).then(|| t.dut.get(di as usize).cloned()).flatten(),
            }
        })
        .collect()
}

fn hint(kind: &MismatchKind, vspec: &VerificationSpec) -> String {
    match kind {
        MismatchKind::Pass => String::new(),
        MismatchKind::Boundary { port, width_bits, variant } => {
            let declared = vspec.port(port).map_or(0, |p| p.width);
            let how = match variant {
                BoundaryVariant::Wrap => "truncated",
                BoundaryVariant::Signext => "truncated and sign-extended",
            };
            format!(
                "Check widths and signedness: `{port}` is declared {declared} bits but the design behaves as if its value were {how} to {width_bits} bits."
            )
        }
        MismatchKind::Timing { offset_cycles, .. } => {
            let dir = if *offset_cycles > 0 { "late" } else { "early" };
            format!(
                "Check pipeline stages and registered outputs: the design's outputs arrive {} cycle(s) {dir}.",
                offset_cycles.unsigned_abs()
            )
        }
        MismatchKind::Functional => {
            "Re-derive the logic from the function summary; neither a width nor a latency difference explains the mismatch.".to_string()
        }
    }
}

/// One case report per result. `fix_log` is the refinement log of the
/// suite; each case gets the entries naming it.
pub fn render_report(
    results: &[CaseResult],
    vspec: &VerificationSpec,
    fix_log: &[FixEntry],
    stimuli_file: &str,
    cfg: &ReportConfig,
) -> VerificationReport {
    let widths = |p: &str| vspec.port(p).map(|d| d.width);
    let cases: Vec<CaseReport> = results
        .iter()
        .map(|r| {
            let fixes: Vec<FixEntry> = fix_log
                .iter()
                .filter(|e| match e {
                    FixEntry::Fix { case, .. } | FixEntry::NoReset { case } => case == &r.name,
                })
                .take(cfg.fix_log_excerpt)
                .cloned()
                .collect();
            let mut rep = CaseReport {
                name: r.name.clone(),
                status: CaseStatus::Skipped,
                first_divergence: None,
                window: vec![],
                fix_log: fixes,
                stimuli_ref: format!("{stimuli_file}#{}", r.name),
                hint: None,
            };
            match &r.outcome {
                CaseOutcome::Completed(t) => {
                    let class = classify(t, &cfg.classifier, &widths);
                    if class.is_pass() {
                        rep.status = CaseStatus::Pass;
                        rep.fix_log.clear();
                    } else {
                        rep.first_divergence = class.first_divergence;
                        rep.window = window(t, class.first_divergence.unwrap_or(0), cfg.window);
                        rep.hint = Some(hint(&class.kind, vspec));
                        rep.status = CaseStatus::Mismatch { class };
                    }
                }
                CaseOutcome::Faulted(f) => {
                    rep.status = CaseStatus::Fault { error: f.error.to_string() };
                    if let Some(p) = &f.partial {
                        let n = p.reference.len();
                        rep.window = window(p, n.saturating_sub(1), cfg.window);
                    }
                    rep.hint = Some("The run stopped before the case completed; the error text above is verbatim.".into());
                }
                CaseOutcome::Skipped => {}
            }
            rep
        })
        .collect();
    let verdict = if !cases.is_empty() && cases.iter().all(CaseReport::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    VerificationReport {
        module: vspec.module_name.clone(),
        verdict,
        dut_error: None,
        cases,
    }
}

fn fmt_map(m: Option<&PortValueMap>, ports: &[String]) -> String {
    match m {
        None => "(reset)".to_string(),
        Some(m) => ports
            .iter()
            .map(|p| format!("{p}={}", m.get(p).map_or("-".to_string(), |v| v.to_string())))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn describe(kind: &MismatchKind) -> String {
    match kind {
        MismatchKind::Pass => "pass".into(),
        MismatchKind::Boundary { port, width_bits, variant } => {
            format!("boundary on `{port}`, {width_bits}-bit {}", match variant {
                BoundaryVariant::Wrap => "wrap",
                BoundaryVariant::Signext => "sign extension",
            })
        }
        MismatchKind::Timing {
            offset_cycles,
            match_fraction,
        } => format!("timing, offset {offset_cycles:+} cycles, {:.1}% of cycles match", match_fraction * 100.0),
        MismatchKind::Functional => "functional".into(),
    }
}

fn render_text(r: &VerificationReport) -> String {
    let mut out = String::new();
    let failing = r.cases.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(
        out,
        "Verification report for `{}`: {}",
        r.module,
        match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    );
    if let Some(e) = &r.dut_error {
        let _ = writeln!(out, "\nThe design could not be simulated:\n  {e}");
        return out;
    }
    let _ = writeln!(out, "{} case(s), {failing} failing.", r.cases.len());
    for c in r.cases.iter().filter(|c| !c.passed()) {
        let _ = writeln!(out, "\n== case `{}` ==", c.name);
        match &c.status {
            CaseStatus::Pass => {}
            CaseStatus::Skipped => {
                let _ = writeln!(out, "skipped: an earlier case aborted the suite");
                continue;
            }
            CaseStatus::Fault { error } => {
                let _ = writeln!(out, "fault: {error}");
            }
            CaseStatus::Mismatch { class } => {
                let _ = writeln!(out, "class: {}", describe(&class.kind));
                for s in &class.secondary {
                    let _ = writeln!(out, "also consistent with: {}", describe(s));
                }
                if let Some(fd) = c.first_divergence {
                    let _ = writeln!(out, "first divergence: cycle {fd}");
                }
                if let MismatchKind::Boundary { width_bits, .. } = &class.kind {
                    if let Some(e) = class.evidence.first() {
                        let _ = writeln!(
                            out,
                            "wrap relation: ref {} -> dut {} ({} mod 2^{width_bits} = {})",
                            e.ref_value,
                            e.dut_value,
                            e.ref_value,
                            e.ref_value & mask(*width_bits)
                        );
                    }
                }
                let _ = writeln!(out, "mismatching samples: {}", class.evidence.len());
                for e in class.evidence.iter().take(4) {
                    let _ = writeln!(out, "  cycle {} `{}`: ref {} dut {}", e.cycle, e.port, e.ref_value, e.dut_value);
                }
            }
        }
        if !c.window.is_empty() {
            let ins: Vec<String> = c.window[0].inputs.keys().cloned().collect();
            let outs: Vec<String> = c
                .window
                .iter()
                .find_map(|w| w.reference.as_ref().or(w.dut.as_ref()))
                .map(|m| m.keys().cloned().collect())
                .unwrap_or_default();
            let _ = writeln!(out, "cycles {}..{}:", c.window[0].cycle, c.window.last().unwrap().cycle);
            for w in &c.window {
                let mark = if Some(w.cycle) == c.first_divergence { '>' } else { ' ' };
                let _ = writeln!(
                    out,
                    "{mark} {:>5} | in {} | ref {} | dut {}",
                    w.cycle,
                    fmt_map(Some(&w.inputs), &ins),
                    fmt_map(w.reference.as_ref(), &outs),
                    w.dut.as_ref().map_or("-".to_string(), |d| fmt_map(Some(d), &outs))
                );
            }
        }
        if !c.fix_log.is_empty() {
            let _ = writeln!(out, "stimulus fixes applied:");
            for f in &c.fix_log {
                match f {
                    FixEntry::Fix {
                        cycle,
                        port,
                        original,
                        fixed,
                        rule,
                        ..
                    } => {
                        let _ = writeln!(out, "  cycle {cycle} `{port}`: {original} -> {fixed} ({})", serde_json::to_value(rule).unwrap().as_str().unwrap());
                    }
                    FixEntry::NoReset { .. } => {
                        let _ = writeln!(out, "  no reset sequence (design has no reset)");
                    }
                }
            }
        }
        let _ = writeln!(out, "stimuli: {}", c.stimuli_ref);
        if let Some(h) = &c.hint {
            let _ = writeln!(out, "hint: {h}");
        }
    }
    out
}
