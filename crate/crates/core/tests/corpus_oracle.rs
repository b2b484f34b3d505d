//! The interpreter against Verilator-recorded waveforms of the same runs.

mod common;

#[test]
fn corpus_matches_external_simulator() {
    let corpus = common::corpus();
    assert!(corpus.len() >= 10, "corpus has {} designs", corpus.len());
    let mut failures = Vec::new();
    for d in &corpus {
        let ours = d.simulate();
        let golden = d.golden();
        assert_eq!(golden.len(), d.stimuli.len(), "{}: golden trace length", d.name);
        let (bad, first) = common::diff(&ours, &golden);
        if bad > 0 {
            failures.push(format!("{}: {bad} mismatching cycles, first {}", d.name, first.unwrap()));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn counter_golden_reference_values() {
    let d = common::corpus().into_iter().find(|d| d.name == "counter").unwrap();
    let count = d.golden().column("count").unwrap();
    // Two reset cycles, then counting from 1.
    assert_eq!(&count[..5], &[0, 0, 1, 2, 3]);
}

#[test]
fn input_echo() {
    for d in common::corpus() {
        let t = d.simulate();
        for (r, s) in t.records.iter().zip(&d.stimuli) {
            for (k, v) in s {
                assert_eq!(r.inputs[k], *v, "{} cycle {}", d.name, r.cycle);
            }
        }
    }
}
