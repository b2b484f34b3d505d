mod common;

use common::{design_spec, mock_client, session_config};
use rtlcheck::diagnose::{CaseStatus, MismatchKind};
use rtlcheck::genclient::TaskKind;
use rtlcheck::refmodel::NativeProvider;
use rtlcheck::session::{run_session, SelectionMode, SessionError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kinds(a: &rtlcheck::session::Attempt) -> Vec<MismatchKind> {
    a.report
        .cases
        .iter()
        .filter_map(|c| match &c.status {
            CaseStatus::Mismatch { class } => Some(class.kind.clone()),
            _ => None,
        })
        .collect()
}

#[test]
fn immediate_pass() {
    let gen = mock_client("counter_pass");
    let out = run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 1)).unwrap();
    assert_eq!(out.attempts.len(), 1);
    assert_eq!(out.selection_mode, Some(SelectionMode::PassedVerification));
    assert_eq!(out.selected_index, Some(0));
}

#[test]
fn faulty_faulty_correct() {
    let gen = mock_client("counter_ffc");
    let out = run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 1)).unwrap();
    assert_eq!(out.attempts.len(), 3);
    assert_eq!(out.selected_index, Some(2));
    assert_eq!(out.selection_mode, Some(SelectionMode::PassedVerification));
    assert!(!out.attempts[0].passed && !out.attempts[1].passed && out.attempts[2].passed);

    // The narrow register wraps at 16; the extra output stage is one edge late.
    assert!(kinds(&out.attempts[0])
        .iter()
        .all(|k| matches!(k, MismatchKind::Boundary { width_bits: 4, .. })));
    assert!(kinds(&out.attempts[1])
        .iter()
        .all(|k| matches!(k, MismatchKind::Timing { offset_cycles: 1, .. })));
    assert!(!kinds(&out.attempts[0]).is_empty() && !kinds(&out.attempts[1]).is_empty());
}

#[test]
fn refine_prompts_embed_previous_report() {
    let gen = mock_client("counter_ffc");
    let out = run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 1)).unwrap();
    let refines: Vec<_> = gen
        .transcript()
        .into_iter()
        .filter(|e| e.task == TaskKind::RefineRtl)
        .collect();
    assert_eq!(refines.len(), 2);
    for (ex, prev) in refines.iter().zip(&out.attempts) {
        assert!(ex.prompt.contains(&prev.report.to_text()));
        assert!(ex.prompt.contains(prev.rtl_source.trim()));
    }
}

#[test]
fn verification_artifacts_generated_once() {
    let gen = mock_client("counter_ffc");
    run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 1)).unwrap();
    let t = gen.transcript();
    for task in [TaskKind::GenVerificationSpec, TaskKind::FillTemplate, TaskKind::ProposePlan, TaskKind::ProposeStimuli] {
        assert_eq!(t.iter().filter(|e| e.task == task).count(), 1, "{task}");
    }
}

#[test]
fn exhaustion_sample_is_seeded() {
    let run = |seed| {
        let gen = mock_client("counter_all_faulty");
        run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, seed)).unwrap()
    };
    let a = run(42);
    let b = run(42);
    assert_eq!(a.attempts.len(), 5);
    assert!(a.attempts.iter().all(|x| !x.passed));
    assert_eq!(a.selection_mode, Some(SelectionMode::ExhaustionSample));
    assert_eq!(a.rng_seed, 42);
    let expect = ChaCha8Rng::seed_from_u64(42).gen_range(0..5usize);
    assert_eq!(a.selected_index, Some(expect));
    assert_eq!(a.to_json(), b.to_json());

    let picks: std::collections::BTreeSet<_> = (0..16).map(|s| run(s).selected_index.unwrap()).collect();
    assert!(picks.len() > 1, "seed has no effect on the pick");
}

#[test]
fn session_log_lines() {
    let gen = mock_client("counter_ffc");
    let out = run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 3)).unwrap();
    let log = out.log_lines(&|k| format!("reports/attempt{k}.json"));
    let rows: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["classification"], "boundary");
    assert_eq!(rows[1]["classification"], "timing");
    assert_eq!(rows[2]["verdict"], "pass");
    assert_eq!(rows[2]["report"], "reports/attempt2.json");
    assert!(rows.iter().all(|r| r["seed"] == 3));
}

fn bundle_pairs(name: &str, skip: Option<(TaskKind, usize)>) -> Vec<(TaskKind, usize, String)> {
    let root = common::bundle(name);
    let mut out = Vec::new();
    for task in TaskKind::ALL {
        let Ok(dir) = std::fs::read_dir(root.join(task.dir_name())) else { continue };
        for e in dir.flatten() {
            let stem = e.path().file_stem().unwrap().to_string_lossy().into_owned();
            let k: usize = stem.trim_start_matches("attempt").parse().unwrap();
            if skip != Some((task, k)) {
                out.push((task, k, std::fs::read_to_string(e.path()).unwrap()));
            }
        }
    }
    out
}

#[test]
fn generator_failure_keeps_partial_outcome() {
    let pairs = bundle_pairs("counter_ffc", Some((TaskKind::RefineRtl, 2)));
    let gen = rtlcheck::genclient::GeneratorClient::mock(rtlcheck::genclient::ScriptedMock::from_pairs(pairs));
    let err = run_session(&design_spec("counter"), &gen, &session_config(&NativeProvider, 1)).unwrap_err();
    assert!(matches!(err.error, SessionError::Generator(_)), "{}", err.error);
    assert!(err.error.to_string().contains("refine_rtl/attempt2"));
    assert_eq!(err.partial.attempts.len(), 2);
    assert_eq!(err.partial.selected_index, None);
}

#[test]
fn unparseable_rtl_gets_dut_error_report() {
    let mut pairs = bundle_pairs("counter_pass", Some((TaskKind::GenRtl, 0)));
    pairs.push((TaskKind::GenRtl, 0, "```verilog\nmodule counter(\n```\n".into()));
    let gen = rtlcheck::genclient::GeneratorClient::mock(rtlcheck::genclient::ScriptedMock::from_pairs(pairs));
    let mut cfg = session_config(&NativeProvider, 1);
    cfg.max_attempts = 1;
    let out = run_session(&design_spec("counter"), &gen, &cfg).unwrap();
    assert_eq!(out.attempts.len(), 1);
    assert!(out.attempts[0].report.dut_error.is_some());
    assert_eq!(out.attempts[0].classification(), "dut-error");
    assert_eq!(out.selection_mode, Some(SelectionMode::ExhaustionSample));
    assert_eq!(out.selected_index, Some(0));
}

#[test]
fn zero_budget_rejected() {
    let gen = mock_client("counter_pass");
    let mut cfg = session_config(&NativeProvider, 1);
    cfg.max_attempts = 0;
    let err = run_session(&design_spec("counter"), &gen, &cfg).unwrap_err();
    assert!(matches!(err.error, SessionError::ZeroAttempts));
}

#[test]
fn convolution_designs_pass_end_to_end() {
    for name in ["conv2x2", "conv_mac"] {
        let gen = mock_client(name);
        let out = run_session(&design_spec(name), &gen, &session_config(&NativeProvider, 1)).unwrap();
        assert_eq!(out.selection_mode, Some(SelectionMode::PassedVerification), "{name}: {}", out.attempts[0].report.to_text());
        assert_eq!(out.attempts.len(), 1);
    }
}

/// The bundle's RTL responses checked against the externally simulated
/// counter golden: only the final design of each bundle that should pass
/// reproduces it.
#[test]
fn bundle_designs_against_external_golden() {
    let corpus = common::corpus_design("counter");
    let golden = corpus.golden();
    let rtl = |bundle: &str, path: &str| {
        let text = std::fs::read_to_string(common::bundle(bundle).join(path)).unwrap();
        rtlcheck::genclient::extract_code_block(&text, "verilog").0
    };
    let matches = |src: &str| {
        let mut inst = rtlcheck::rtlsim::load(src, Some("clk")).unwrap();
        let t = rtlcheck::rtlsim::run_stimuli(&mut inst, &corpus.stimuli).unwrap();
        common::diff(&t, &golden).0 == 0
    };
    assert!(matches(&rtl("counter_pass", "gen_rtl/attempt0.md")));
    assert!(!matches(&rtl("counter_ffc", "gen_rtl/attempt0.md")));
    assert!(!matches(&rtl("counter_ffc", "refine_rtl/attempt1.md")));
    assert!(matches(&rtl("counter_ffc", "refine_rtl/attempt2.md")));
    assert!(!matches(&rtl("counter_all_faulty", "gen_rtl/attempt0.md")));
    for k in 1..5 {
        assert!(!matches(&rtl("counter_all_faulty", &format!("refine_rtl/attempt{k}.md"))), "attempt {k}");
    }
}
