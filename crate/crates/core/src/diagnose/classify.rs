//! Exact per-cycle comparison and mismatch classification.

use serde::{Deserialize, Serialize};

use crate::cosim::PairedTrace;
use crate::value::{mask, sign_extend};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ClassifierParams {
    /// Minimum match fraction for a timing explanation.
    pub theta: f64,
    /// Largest offset searched, in cycles.
    pub max_offset: u32,
    /// Evidence entries kept per case.
    pub evidence_cap: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            theta: 0.95,
            max_offset: 8,
            evidence_cap: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryVariant {
    Wrap,
    Signext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MismatchKind {
    Pass,
    #[serde(rename_all = "camelCase")]
    Boundary {
        port: String,
        width_bits: u32,
        variant: BoundaryVariant,
    },
    #[serde(rename_all = "camelCase")]
    Timing { offset_cycles: i64, match_fraction: f64 },
    Functional,
}

impl MismatchKind {
    pub fn label(&self) -> &'static str {
        match self {
            MismatchKind::Pass => "pass",
            MismatchKind::Boundary { .. } => "boundary",
            MismatchKind::Timing { .. } => "timing",
            MismatchKind::Functional => "functional",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Evidence {
    pub cycle: usize,
    pub port: String,
    pub ref_value: u64,
    pub dut_value: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MismatchClass {
    #[serde(flatten)]
    pub kind: MismatchKind,
    pub evidence: Vec<Evidence>,
    /// Reference-side cycle of the first mismatch at the trace's own offset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<usize>,
    /// Other explanations that also fit, lower in precedence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub secondary: Vec<MismatchKind>,
}

impl MismatchClass {
    pub fn is_pass(&self) -> bool {
        self.kind == MismatchKind::Pass
    }
}

/// Every mismatching (cycle, port) sample under `offset`, in cycle order.
pub fn mismatches(t: &PairedTrace, offset: i64) -> Vec<Evidence> {
    let mut out = Vec::new();
    for (i, j) in t.pairs(offset) {
        let r = t.reference[j].as_ref().expect("pairs skip reset cycles");
        for p in &t.output_ports {
            if t.dut[i][p] != r[p] {
                out.push(Evidence {
                    cycle: j,
                    port: p.clone(),
                    ref_value: r[p],
                    dut_value: t.dut[i][p],
                });
            }
        }
    }
    out
}

/// Fraction of compared cycles whose outputs all agree, or `None` when no
/// cycle is compared.
pub fn match_fraction(t: &PairedTrace, offset: i64) -> Option<f64> {
    let pairs = t.pairs(offset);
    if pairs.is_empty() {
        return None;
    }
    let ok = pairs
        .iter()
        .filter(|&&(i, j)| t.reference[j].as_ref() == Some(&t.dut[i]))
        .count();
    Some(ok as f64 / pairs.len() as f64)
}

fn port_width(t: &PairedTrace, port: &str, widths: &dyn Fn(&str) -> Option<u32>) -> u32 {
    widths(port).unwrap_or_else(|| {
        // Without a declaration, the narrowest width holding every value seen.
        let max = t
            .dut
            .iter()
            .map(|m| m[port])
            .chain(t.reference.iter().flatten().map(|m| m[port]))
            .max()
            .unwrap_or(0);
        (64 - max.leading_zeros()).max(1)
    })
}

/// Widest `w` below the port width that explains every sample as a
/// truncation of the reference value (plain or sign-extended).
pub fn boundary_fit(samples: &[Evidence], port_width: u32) -> Option<(u32, BoundaryVariant)> {
    (1..port_width).rev().find_map(|w| {
        if samples.iter().all(|e| e.dut_value == e.ref_value & mask(w)) {
            Some((w, BoundaryVariant::Wrap))
        } else if samples
            .iter()
            .all(|e| e.dut_value == sign_extend(e.ref_value & mask(w), w, port_width))
        {
            Some((w, BoundaryVariant::Signext))
        } else {
            None
        }
    })
}

fn timing_fit(t: &PairedTrace, params: &ClassifierParams) -> Option<(i64, f64)> {
    let base = t.latency_offset;
    let k = params.max_offset as i64;
    let mut offsets: Vec<i64> = (-k..=k).filter(|&o| o != 0).map(|o| base + o).collect();
    offsets.sort_by_key(|&o| ((o - base).abs(), o < base));
    offsets
        .into_iter()
        .find_map(|o| match_fraction(t, o).filter(|f| *f >= params.theta).map(|f| (o, f)))
}

/// Pass iff every compared cycle matches on every output port; otherwise
/// the first explanation that fits in the order boundary, timing,
/// functional.
pub fn classify(t: &PairedTrace, params: &ClassifierParams, widths: &dyn Fn(&str) -> Option<u32>) -> MismatchClass {
    let all = mismatches(t, t.latency_offset);
    if all.is_empty() {
        return MismatchClass {
            kind: MismatchKind::Pass,
            evidence: vec![],
            first_divergence: None,
            secondary: vec![],
        };
    }
    let first_divergence = Some(all[0].cycle);
    let single_port = all.iter().all(|e| e.port == all[0].port);
    let boundary = single_port
        .then(|| {
            let port = &all[0].port;
            boundary_fit(&all, port_width(t, port, widths)).map(|(w, variant)| MismatchKind::Boundary {
                port: port.clone(),
                width_bits: w,
                variant,
            })
        })
        .flatten();
    let timing = timing_fit(t, params).map(|(o, f)| MismatchKind::Timing {
        offset_cycles: o,
        match_fraction: f,
    });
    let mut candidates: Vec<MismatchKind> = boundary.into_iter().chain(timing).collect();
    let kind = if candidates.is_empty() {
        MismatchKind::Functional
    } else {
        candidates.remove(0)
    };
    let mut evidence = all;
    evidence.truncate(params.evidence_cap.max(1));
    MismatchClass {
        kind,
        evidence,
        first_divergence,
        secondary: candidates,
    }
}

/// [`classify`] with all widths inferred from the observed values.
pub fn compare(t: &PairedTrace) -> MismatchClass {
    classify(t, &ClassifierParams::default(), &|_| None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::PortValueMap;

    fn trace(dut: &[u64], reference: &[Option<u64>]) -> PairedTrace {
        let m = |v: u64| -> PortValueMap { [("y".to_string(), v)].into_iter().collect() };
        PairedTrace {
            case_name: "t".into(),
            input_ports: vec![],
            output_ports: vec!["y".into()],
            inputs: vec![PortValueMap::new(); dut.len()],
            dut: dut.iter().map(|&v| m(v)).collect(),
            reference: reference.iter().map(|r| r.map(m)).collect(),
            latency_offset: 0,
            warnings: vec![],
        }
    }

    fn widths(_: &str) -> Option<u32> {
        Some(10)
    }

    #[test]
    fn identical_is_pass() {
        let t = trace(&[1, 2, 3], &[None, Some(2), Some(3)]);
        let c = classify(&t, &ClassifierParams::default(), &widths);
        assert!(c.is_pass());
        assert!(c.evidence.is_empty());
    }

    #[test]
    fn single_difference() {
        let t = trace(&[1, 2, 7, 4, 5, 6, 7, 8], &[1, 2, 3, 4, 5, 6, 7, 8].map(Some));
        let c = classify(&t, &ClassifierParams::default(), &widths);
        assert_eq!(c.kind, MismatchKind::Functional);
        assert_eq!(c.evidence.len(), 1);
        assert_eq!(c.first_divergence, Some(2));
    }

    #[test]
    fn wrap_relation() {
        let t = trace(&[5, 44, 44], &[Some(5), Some(300), Some(300)]);
        let c = classify(&t, &ClassifierParams::default(), &widths);
        assert_eq!(
            c.kind,
            MismatchKind::Boundary {
                port: "y".into(),
                width_bits: 8,
                variant: BoundaryVariant::Wrap
            }
        );
    }

    #[test]
    fn signext_relation() {
        // 10-bit port: dut sign-extends the low 8 bits of the reference.
        let t = trace(&[0x3FF, 0x380], &[Some(0x0FF), Some(0x180)]);
        let c = classify(&t, &ClassifierParams::default(), &widths);
        assert_eq!(
            c.kind,
            MismatchKind::Boundary {
                port: "y".into(),
                width_bits: 8,
                variant: BoundaryVariant::Signext
            }
        );
    }

    #[test]
    fn one_cycle_late() {
        let r: Vec<Option<u64>> = (0..20).map(|k| Some(k * 3 % 17)).collect();
        let d: Vec<u64> = std::iter::once(0).chain((0..19).map(|k| k * 3 % 17)).collect();
        let c = classify(&trace(&d, &r), &ClassifierParams::default(), &widths);
        assert_eq!(c.kind, MismatchKind::Timing { offset_cycles: 1, match_fraction: 1.0 });
    }

    #[test]
    fn subtraction_for_addition_is_functional() {
        let a = [3u64, 9, 4, 7, 1, 8];
        let b = [1u64, 2, 3, 1, 0, 5];
        let r: Vec<Option<u64>> = a.iter().zip(&b).map(|(x, y)| Some(x + y)).collect();
        let d: Vec<u64> = a.iter().zip(&b).map(|(x, y)| (x.wrapping_sub(*y)) & 0x3FF).collect();
        let c = classify(&trace(&d, &r), &ClassifierParams::default(), &widths);
        assert_eq!(c.kind, MismatchKind::Functional);
    }

    #[test]
    fn serde_shape() {
        let c = MismatchClass {
            kind: MismatchKind::Timing {
                offset_cycles: -2,
                match_fraction: 1.0,
            },
            evidence: vec![],
            first_divergence: Some(3),
            secondary: vec![],
        };
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(j, r#"{"kind":"timing","offsetCycles":-2,"matchFraction":1.0,"evidence":[],"firstDivergence":3}"#);
        assert_eq!(serde_json::from_str::<MismatchClass>(&j).unwrap(), c);
    }
}
