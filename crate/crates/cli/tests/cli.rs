use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rtlcheck::diagnose::parse_vcd;
use rtlcheck::rtlsim::CycleTrace;
use rtlcheck::specmodel::{Direction, PortDecl, PortRole};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn rtlcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtlcheck")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

fn run_bundle(bundle: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run".to_string(),
        "--spec".into(),
        fx("specs/counter.spec"),
        "--bundle".into(),
        fx(&format!("bundles/{bundle}")),
        "--out".into(),
        out_arg(out),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    rtlcheck(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn run_selects_the_passing_attempt() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_bundle("counter_ffc", tmp.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let selected = fs::read_to_string(tmp.path().join("selected.v")).unwrap();
    assert_eq!(selected, fs::read_to_string(tmp.path().join("rtl/attempt2.v")).unwrap());
    assert!(selected.contains("module counter"));
    let log: Vec<Value> = fs::read_to_string(tmp.path().join("session.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let verdicts: Vec<&str> = log.iter().map(|l| l["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["fail", "fail", "pass"]);
    assert_eq!(log[0]["classification"], "boundary");
    assert_eq!(log[1]["classification"], "timing");
    for l in &log {
        assert!(tmp.path().join(l["report"].as_str().unwrap()).exists());
    }
    let outcome = json(&tmp.path().join("outcome.json"));
    assert_eq!(outcome["selectedIndex"], 2);
    assert_eq!(outcome["selectionMode"], "passedVerification");
    for f in ["vspec.json", "model.py", "plan.json", "stimuli_raw.json", "stimuli.json", "fixlog.json", "transcript.json"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn run_exhaustion_records_seeded_pick() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_bundle("counter_all_faulty", a.path(), &["-n", "5", "--seed", "42"]);
    let ob = run_bundle("counter_all_faulty", b.path(), &["-n", "5", "--seed", "42"]);
    assert_eq!(code(&oa), 2);
    assert_eq!(code(&ob), 2);
    let outcome = json(&a.path().join("outcome.json"));
    assert_eq!(outcome["selectionMode"], "exhaustionSample");
    assert_eq!(outcome["rngSeed"], 42);
    assert_eq!(outcome["attempts"].as_array().unwrap().len(), 5);
    let k = outcome["selectedIndex"].as_u64().unwrap();
    assert_eq!(
        fs::read_to_string(a.path().join("selected.v")).unwrap(),
        fs::read_to_string(a.path().join(format!("rtl/attempt{k}.v"))).unwrap()
    );
    assert_eq!(
        fs::read(a.path().join("outcome.json")).unwrap(),
        fs::read(b.path().join("outcome.json")).unwrap()
    );
}

#[test]
fn run_missing_spec_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlcheck(&[
        "run",
        "--spec",
        &out_arg(&tmp.path().join("absent.spec")),
        "--bundle",
        &fx("bundles/counter_ffc"),
        "--out",
        &out_arg(&tmp.path().join("out")),
    ]);
    assert_eq!(code(&o), 64);
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["error"]["exitCode"], 64);
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&rtlcheck(&["frobnicate"])), 64);
    assert_eq!(code(&rtlcheck(&["run", "--attempts", "many"])), 64);
    assert_eq!(code(&rtlcheck(&["--help"])), 0);
    let tmp = tempfile::tempdir().unwrap();
    // No backend given: the error is also written next to the outputs.
    let o = rtlcheck(&["run", "--spec", &fx("specs/counter.spec"), "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 64);
    assert_eq!(json(&tmp.path().join("error.json"))["error"]["kind"], "usage");
    let o = rtlcheck(&["model", "x=0.5", "a=0.7", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 64);
    let o = rtlcheck(&["model", "x=0.5", "a=1.7", "b=0.1", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 64);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "spec": fx("specs/counter.spec"),
        "out": "from_config",
        "attempts": 5,
        "seed": 7,
        "backend": { "bundle": fx("bundles/counter_all_faulty") },
        "classifier": { "theta": 0.9 }
    });
    let path = tmp.path().join("run.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = rtlcheck(&["run", "--config", &out_arg(&path), "--seed", "11"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let outcome = json(&tmp.path().join("from_config/outcome.json"));
    assert_eq!(outcome["rngSeed"], 11);

    fs::write(&path, r#"{"spec": "x", "colour": "blue"}"#).unwrap();
    assert_eq!(code(&rtlcheck(&["run", "--config", &out_arg(&path)])), 64);
}

#[test]
fn model_symmetric_verifier_gives_generator_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlcheck(&["model", "x=0.5", "a=0.7", "b=0.7", "trials=20000", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0);
    let m = json(&tmp.path().join("model.json"));
    assert_eq!(m["sysSuccessRate"].as_f64().unwrap(), 0.5);
    assert!(m["feedbackTrueRate"].as_f64().unwrap().abs() < 1e-12);
    let mc = &m["monteCarlo"];
    assert!((mc["rate"].as_f64().unwrap() - 0.5).abs() <= mc["halfWidth"].as_f64().unwrap());

    let o = rtlcheck(&["model", "x=0", "a=0.5", "b=0", "trials=0", "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0);
    let m = json(&tmp.path().join("model.json"));
    assert!(m["sysSuccessRate"].is_null());
    assert!(m["sysSuccessRateError"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn classify_shifted_fixture_is_timing_plus_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlcheck(&["classify", "--trace", &fx("traces/shifted_counter.json"), "--out", &out_arg(tmp.path())]);
    assert_eq!(code(&o), 0);
    let c = json(&tmp.path().join("classification.json"));
    assert_eq!(c["kind"], "timing");
    assert_eq!(c["offsetCycles"], 1);
    assert_eq!(c["matchFraction"].as_f64().unwrap(), 1.0);
    assert_eq!(c["case"], "shifted");
}

fn counter_ports() -> Vec<PortDecl> {
    let mut clk = PortDecl::data("clk", Direction::In, 1);
    clk.role = PortRole::Clock;
    vec![
        clk,
        PortDecl::data("rst", Direction::In, 1),
        PortDecl::data("en", Direction::In, 1),
        PortDecl::data("count", Direction::Out, 8),
    ]
}

#[test]
fn sim_matches_external_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlcheck(&[
        "sim",
        "--hdl",
        &fx("corpus/counter/design.v"),
        "--stimuli",
        &fx("corpus/counter/stimuli.json"),
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ours = CycleTrace::from_json(&fs::read_to_string(tmp.path().join("trace.json")).unwrap()).unwrap();
    let golden = parse_vcd(&fs::read_to_string(fixtures().join("corpus/counter/golden.vcd")).unwrap(), &counter_ports(), "clk").unwrap();
    assert_eq!(ours.len(), golden.len());
    for (a, b) in ours.records.iter().zip(&golden.records) {
        assert_eq!(a.inputs, b.inputs, "cycle {}", a.cycle);
        assert_eq!(a.outputs, b.outputs, "cycle {}", a.cycle);
    }
    assert!(tmp.path().join("trace.csv").exists());
}

#[test]
fn stimuli_cosim_and_trace_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let st = tmp.path().join("st");
    let o = rtlcheck(&["stimuli", "--spec", &fx("specs/counter.spec"), "--bundle", &fx("bundles/counter_pass"), "--out", &out_arg(&st)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let suite = json(&st.join("stimuli.json"));
    let names: Vec<&str> = suite["cases"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["count_up", "hold", "wrap"]);
    let first = &suite["cases"][0]["cycles"];
    assert_eq!(first[0]["rst"], 1);
    assert_eq!(first[1]["rst"], 1);
    assert_eq!(first[2]["rst"], 0);

    let model = fx("bundles/counter_pass/fill_template/attempt0.md");
    let stimuli = out_arg(&st.join("stimuli.json"));
    let co = tmp.path().join("co");
    let o = rtlcheck(&[
        "cosim",
        "--spec",
        &fx("specs/counter.spec"),
        "--hdl",
        &fx("corpus/counter/design.v"),
        "--model",
        &model,
        "--stimuli",
        &stimuli,
        "--out",
        &out_arg(&co),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&co.join("report.json"))["verdict"], "pass");
    for n in &names {
        assert!(co.join(format!("paired/{n}.json")).exists());
    }

    // Same suite, DUT supplied as recorded traces from `sim`.
    let sim = tmp.path().join("sim");
    assert_eq!(
        code(&rtlcheck(&["sim", "--hdl", &fx("corpus/counter/design.v"), "--stimuli", &stimuli, "--out", &out_arg(&sim)])),
        0
    );
    let traces: Vec<String> = names.iter().map(|n| out_arg(&sim.join(format!("{n}.json")))).collect();
    let mut args = vec!["cosim", "--spec", &fx("specs/counter.spec")].into_iter().map(String::from).collect::<Vec<_>>();
    for t in &traces {
        args.extend(["--trace".to_string(), t.clone()]);
    }
    let replay = tmp.path().join("replay");
    args.extend(["--model", &model, "--stimuli", &stimuli, "--out", &out_arg(&replay)].map(String::from));
    let o = rtlcheck(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // A narrowed counter fails with exit 1.
    let narrow = tmp.path().join("narrow.v");
    let rtl = fs::read_to_string(fixtures().join("corpus/counter/design.v")).unwrap();
    assert!(rtl.contains("[7:0]"));
    fs::write(&narrow, rtl.replace("reg [7:0]", "reg [3:0]")).unwrap();
    let bad = tmp.path().join("bad");
    let o = rtlcheck(&[
        "cosim",
        "--spec",
        &fx("specs/counter.spec"),
        "--hdl",
        &out_arg(&narrow),
        "--model",
        &model,
        "--stimuli",
        &stimuli,
        "--out",
        &out_arg(&bad),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&bad.join("report.json"))["verdict"], "fail");
}

#[test]
fn report_from_paired_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rtlcheck(&[
        "report",
        "--spec",
        &fx("specs/counter.spec"),
        "--trace",
        &fx("traces/shifted_counter.json"),
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 1);
    let r = json(&tmp.path().join("report.json"));
    assert_eq!(r["verdict"], "fail");
    assert_eq!(r["cases"][0]["name"], "shifted");
    let text = fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(text.contains("timing"));
    assert!(text.contains("stimuli.json#shifted"));
}
