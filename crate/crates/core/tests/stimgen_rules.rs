mod common;

use proptest::prelude::*;
use rtlcheck::refmodel::LogicalMap;
use rtlcheck::specmodel::{
    ActiveLevel, BoundaryConstraint, Direction, PortDecl, PortRole, ResetSpec, ResetStyle, Signedness, ValueRange,
    VerificationSpec,
};
use rtlcheck::stimgen::{
    assemble_suite, fix_boundaries, generate_raw, insert_reset, parse_plan, plan_tests, refine, FixEntry, RawCase,
    RawStimuli, StimConfig, StimError, StimulusSuite,
};

/// Range check written directly from the constraint definition, without the
/// fixing code.
fn violates(v: i128, port: &PortDecl, c: Option<&BoundaryConstraint>) -> bool {
    let signed = port.signedness == Signedness::Signed;
    let range = |w: u32| -> (i128, i128) {
        if signed {
            (-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1)
        } else {
            (0, (1i128 << w) - 1)
        }
    };
    let (plo, phi) = range(port.width);
    if v < plo || v > phi {
        return true;
    }
    let Some(c) = c else { return false };
    let w = c.max_width_bits;
    if w < port.width && port.width % w == 0 {
        let bits = if v < 0 { v + (1i128 << port.width) } else { v };
        (0..port.width / w).any(|k| {
            let raw = (bits >> (k * w)) & ((1i128 << w) - 1);
            let e = if signed && raw >= 1i128 << (w - 1) { raw - (1i128 << w) } else { raw };
            c.value_range.is_some_and(|r| e < r.lo || e > r.hi)
        })
    } else {
        let (lo, hi) = range(w.min(port.width));
        v < lo || v > hi || c.value_range.is_some_and(|r| v < r.lo || v > r.hi)
    }
}

#[derive(Debug, Clone)]
struct PortSetup {
    port: PortDecl,
    constraint: Option<BoundaryConstraint>,
}

fn arb_port(idx: usize) -> impl Strategy<Value = PortSetup> {
    (1u32..=64, any::<bool>(), 0u8..4, any::<u64>(), any::<u64>()).prop_map(move |(width, signed, kind, r1, r2)| {
        let mut port = PortDecl::data(&format!("d{idx}"), Direction::In, width);
        if signed {
            port.signedness = Signedness::Signed;
        }
        let elem_range = |w: u32| -> ValueRange {
            let span = (1i128 << w) - 1;
            let base = if signed { -(1i128 << (w - 1)) } else { 0 };
            let a = base + (r1 as i128 % (span + 1));
            let b = base + (r2 as i128 % (span + 1));
            ValueRange {
                lo: a.min(b),
                hi: a.max(b),
            }
        };
        let constraint = match kind {
            0 => None,
            // Scalar narrowing.
            1 => {
                let w = 1 + (r1 % width as u64) as u32;
                Some(BoundaryConstraint {
                    port_name: port.name.clone(),
                    max_width_bits: w,
                    value_range: None,
                    note: String::new(),
                })
            }
            // Scalar range at full width.
            2 => Some(BoundaryConstraint {
                port_name: port.name.clone(),
                max_width_bits: width,
                value_range: Some(elem_range(width)),
                note: String::new(),
            }),
            // Packed elements with a range, when the width splits evenly.
            _ => {
                let w = [2u32, 4, 8, 16].into_iter().find(|w| *w < width && width % w == 0).unwrap_or(width);
                Some(BoundaryConstraint {
                    port_name: port.name.clone(),
                    max_width_bits: w,
                    value_range: Some(elem_range(w)),
                    note: String::new(),
                })
            }
        };
        PortSetup { port, constraint }
    })
}

fn vspec_of(setups: &[PortSetup], reset: Option<ResetSpec>) -> VerificationSpec {
    let mut ports = Vec::new();
    if reset.is_some() {
        let mut rst = PortDecl::data("rst", Direction::In, 1);
        rst.role = PortRole::Reset;
        ports.push(rst);
    }
    ports.extend(setups.iter().map(|s| s.port.clone()));
    ports.push(PortDecl::data("y", Direction::Out, 8));
    VerificationSpec {
        module_name: "m".into(),
        ports,
        function_summary: "f".into(),
        boundary_conditions: setups.iter().filter_map(|s| s.constraint.clone()).collect(),
        reset,
    }
}

fn arb_reset() -> impl Strategy<Value = ResetSpec> {
    (any::<bool>(), any::<bool>(), 0u32..5).prop_map(|(a, low, hold)| ResetSpec {
        style: if a { ResetStyle::Asynchronous } else { ResetStyle::Synchronous },
        active_level: if low { ActiveLevel::Low } else { ActiveLevel::High },
        hold_cycles: hold,
    })
}

fn wide_value() -> impl Strategy<Value = i128> {
    prop_oneof![
        any::<i64>().prop_map(i128::from),
        any::<u64>().prop_map(i128::from),
        (-(1i128 << 80)..(1i128 << 80)),
        (-300i128..300),
    ]
}

/// Four data ports, 32 raw cycles each: 128 values per generated case.
fn arb_setup() -> impl Strategy<Value = (Vec<PortSetup>, Vec<Vec<i128>>, Option<ResetSpec>)> {
    (
        (arb_port(0), arb_port(1), arb_port(2), arb_port(3)).prop_map(|(a, b, c, d)| vec![a, b, c, d]),
        prop::collection::vec(prop::collection::vec(wide_value(), 4), 32),
        prop::option::of(arb_reset()),
    )
}

fn raw_of(setups: &[PortSetup], rows: &[Vec<i128>]) -> RawStimuli {
    RawStimuli {
        cases: vec![RawCase {
            name: "c".into(),
            cycles: rows
                .iter()
                .map(|r| setups.iter().zip(r).map(|(s, v)| (s.port.name.clone(), *v)).collect::<LogicalMap>())
                .collect(),
        }],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // 100 cases x 128 values: 12 800 raw values per run.
    #[test]
    fn refinement_leaves_no_violations((setups, rows, reset) in arb_setup()) {
        let vspec = vspec_of(&setups, reset);
        let refined = refine(&raw_of(&setups, &rows), &vspec);
        for row in &refined.cases[0].cycles {
            for s in &setups {
                let v = row[&s.port.name];
                prop_assert!(!violates(v, &s.port, s.constraint.as_ref()), "{} = {v} under {:?}", s.port.name, s.constraint);
            }
        }
    }

    #[test]
    fn fix_boundaries_is_idempotent((setups, rows, reset) in arb_setup()) {
        let vspec = vspec_of(&setups, reset);
        let once = fix_boundaries(&insert_reset(&raw_of(&setups, &rows), &vspec), &vspec);
        let twice = fix_boundaries(&once, &vspec);
        prop_assert_eq!(&once.cases, &twice.cases);
        prop_assert_eq!(once.fix_log.len(), twice.fix_log.len());
    }

    #[test]
    fn fix_log_replays_to_the_refined_values((setups, rows, _r) in arb_setup()) {
        let vspec = vspec_of(&setups, None);
        let raw = raw_of(&setups, &rows);
        let refined = refine(&raw, &vspec);
        let mut replay = raw.cases[0].cycles.clone();
        for e in &refined.fix_log {
            if let FixEntry::Fix { cycle, port, original, fixed, .. } = e {
                prop_assert_eq!(replay[*cycle][port], *original);
                replay[*cycle].insert(port.clone(), *fixed);
            }
        }
        prop_assert_eq!(&replay, &refined.cases[0].cycles);
    }

    #[test]
    fn reset_prefix_and_shape((setups, rows, reset) in arb_setup()) {
        let vspec = vspec_of(&setups, reset);
        let raw = raw_of(&setups, &rows);
        let refined = refine(&raw, &vspec);
        let case = &refined.cases[0];
        let hold = reset.map_or(0, |r| r.hold_cycles as usize);
        prop_assert_eq!(case.cycles.len(), rows.len() + hold);
        for row in &case.cycles {
            let data = row.keys().filter(|k| *k != "rst").count();
            prop_assert_eq!(data, setups.len());
        }
        if let Some(r) = reset {
            let (on, off) = match r.active_level {
                ActiveLevel::High => (1, 0),
                ActiveLevel::Low => (0, 1),
            };
            for (k, row) in case.cycles.iter().enumerate() {
                prop_assert_eq!(row["rst"], if k < hold { on } else { off });
                if k < hold {
                    // Zero, unless a value range excludes it and the fix moved it.
                    for s in &setups {
                        if !violates(0, &s.port, s.constraint.as_ref()) {
                            prop_assert_eq!(row[&s.port.name], 0);
                        }
                    }
                }
            }
            prop_assert_eq!(case.async_reset_pre_assert, r.style == ResetStyle::Asynchronous);
        } else {
            prop_assert!(case.cycles.iter().all(|row| !row.contains_key("rst")));
        }
        // Values that needed no fixing keep their cycle position.
        for (k, raw_row) in raw.cases[0].cycles.iter().enumerate() {
            for s in &setups {
                let v = raw_row[&s.port.name];
                if !violates(v, &s.port, s.constraint.as_ref()) {
                    prop_assert_eq!(case.cycles[k + hold][&s.port.name], v);
                }
            }
        }
    }
}

#[test]
fn reset_prefix_all_style_level_combinations() {
    let setups = vec![PortSetup {
        port: PortDecl::data("d0", Direction::In, 8),
        constraint: None,
    }];
    let rows: Vec<Vec<i128>> = (0..4).map(|k| vec![k + 5]).collect();
    for style in [ResetStyle::Synchronous, ResetStyle::Asynchronous] {
        for (level, on) in [(ActiveLevel::High, 1), (ActiveLevel::Low, 0)] {
            let r = ResetSpec {
                style,
                active_level: level,
                hold_cycles: 2,
            };
            let s = refine(&raw_of(&setups, &rows), &vspec_of(&setups, Some(r)));
            let rst: Vec<i128> = s.cases[0].cycles.iter().map(|m| m["rst"]).collect();
            assert_eq!(rst, [on, on, 1 - on, 1 - on, 1 - on, 1 - on], "{style:?} {level:?}");
            let d: Vec<i128> = s.cases[0].cycles.iter().map(|m| m["d0"]).collect();
            assert_eq!(d, [0, 0, 5, 6, 7, 8]);
            assert_eq!(s.cases[0].async_reset_pre_assert, style == ResetStyle::Asynchronous);
        }
    }
}

const COUNTER_PLAN: &str = r#"{"cases":[
 {"name":"count up","targets":"increment","cycles":4},
 {"name":"hold","targets":"enable low","cycles":2},
 {"name":"wrap","targets":"255 to 0","cycles":3}]}"#;

fn counter_gen(stimuli: &str) -> rtlcheck::genclient::GeneratorClient {
    use rtlcheck::genclient::{GeneratorClient, ScriptedMock, TaskKind};
    GeneratorClient::mock(ScriptedMock::from_pairs([
        (TaskKind::ProposePlan, 0, COUNTER_PLAN.to_string()),
        (TaskKind::ProposeStimuli, 0, stimuli.to_string()),
    ]))
}

#[test]
fn counter_plan_and_stimuli_passthrough() {
    let vspec = common::vspec("counter");
    let gen = counter_gen(
        r#"{"cases":[{"name":"count up","cycles":[{"en":1},{"en":1},{"en":1},{"en":1}]},
        {"name":"hold","cycles":[{"en":0},{"en":0}]},{"name":"wrap","cycles":[{"en":1},{"en":1},{"en":1}]}]}"#,
    );
    let plan = plan_tests(&vspec, &gen, StimConfig::default()).unwrap();
    assert_eq!(plan.cases.len(), 3);
    let raw = generate_raw(&plan, &vspec, &gen).unwrap();
    let en: Vec<i128> = raw.cases[0].cycles.iter().map(|m| m["en"]).collect();
    assert_eq!(en, [1, 1, 1, 1]);
    assert!(raw.cases[0].cycles.iter().all(|m| m.len() == 1));

    let refined = refine(&raw, &vspec);
    let suite = assemble_suite("counter", &plan, &refined).unwrap();
    assert_eq!(suite.cases.len(), 3);
    assert_eq!(StimulusSuite::from_json(&suite.to_json()).unwrap(), suite);

    let mut short = refined.clone();
    short.cases.pop();
    assert!(matches!(
        assemble_suite("counter", &plan, &short),
        Err(StimError::MismatchedCases { plan: 3, refined: 2 })
    ));
}

#[test]
fn missing_port_names_case_cycle_port() {
    let vspec = common::vspec("counter");
    let gen = counter_gen(
        r#"{"cases":[{"name":"count up","cycles":[{"en":1},{"en":1},{},{"en":1}]},
        {"name":"hold","cycles":[{"en":0},{"en":0}]},{"name":"wrap","cycles":[{"en":1},{"en":1},{"en":1}]}]}"#,
    );
    let plan = plan_tests(&vspec, &gen, StimConfig::default()).unwrap();
    let err = generate_raw(&plan, &vspec, &gen).unwrap_err().to_string();
    assert!(err.contains("count up") && err.contains("cycle 2") && err.contains("`en`"), "{err}");
}

#[test]
fn empty_plan_rejected() {
    assert!(matches!(parse_plan(r#"{"cases":[]}"#), Err(StimError::Validation(_))));
    assert!(matches!(
        parse_plan(r#"{"cases":[{"name":"a","targets":"x","cycles":2},{"name":"a","targets":"y","cycles":2}]}"#),
        Err(StimError::Validation(_))
    ));
}

#[test]
fn suite_file_format() {
    let vspec = common::vspec("counter");
    let gen = counter_gen(
        r#"{"cases":[{"name":"count up","cycles":[{"en":1},{"en":1},{"en":1},{"en":1}]},
        {"name":"hold","cycles":[{"en":0},{"en":0}]},{"name":"wrap","cycles":[{"en":1},{"en":1},{"en":1}]}]}"#,
    );
    let (suite, ..) = rtlcheck::stimgen::build_suite(&vspec, &gen, StimConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&suite.to_json()).unwrap();
    assert_eq!(v["module"], "counter");
    assert_eq!(v["cases"][0]["name"], "count up");
    assert_eq!(v["cases"][0]["asyncResetPreAssert"], false);
    assert_eq!(v["cases"][0]["cycles"][0], serde_json::json!({"rst": 1, "en": 0}));
    assert_eq!(v["cases"][0]["cycles"][2], serde_json::json!({"rst": 0, "en": 1}));
}

/// The convolution bundle: a plan over several kernel shapes, and a 3x3
/// kernel streamed as flat one-dimensional element sequences.
#[test]
fn convolution_plans_and_flattened_streams() {
    for name in ["conv2x2", "conv_mac"] {
        let gen = common::mock_client(name);
        let vspec = rtlcheck::specmodel::build_verification_spec(&common::design_spec(name), &gen).unwrap();
        assert!(vspec.function_summary.contains("convolution"));
        let plan = plan_tests(&vspec, &gen, StimConfig::default()).unwrap();
        assert!(plan.cases.len() >= 3);
        assert!(plan.cases.iter().filter(|c| c.rationale.contains("various convolution specifications")).count() >= 2);
        let raw = generate_raw(&plan, &vspec, &gen).unwrap();
        let refined = refine(&raw, &vspec);
        for c in &refined.cases {
            for row in &c.cycles {
                for p in vspec.step_inputs() {
                    let con = vspec.boundary_conditions.iter().find(|b| b.port_name == p.name);
                    assert!(!violates(row[&p.name], p, con));
                }
            }
        }
        if name == "conv_mac" {
            // 3x3 kernels as 9-element row-major streams, all elements scalar ints.
            let edge = &raw.cases.iter().find(|c| c.name == "edge_kernel").unwrap().cycles;
            let weights: Vec<i128> = edge[..9].iter().map(|m| m["weight"]).collect();
            assert_eq!(weights, [0, 1, 0, 1, 4, 1, 0, 1, 0]);
            // Out-of-range pixels proposed by the generator are wrapped to 8 bits.
            let probe: Vec<_> = refined
                .fix_log
                .iter()
                .filter(|e| matches!(e, FixEntry::Fix { case, .. } if case == "overflow_probe"))
                .collect();
            assert_eq!(probe.len(), 3);
        }
    }
}
