#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rtlcheck::rtlsim::{self, CycleTrace};
use rtlcheck::specmodel::{Direction, PortDecl, PortRole, Signedness};
use rtlcheck::value::PortValueMap;
use serde::Deserialize;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Deserialize)]
pub struct PortEntry {
    pub name: String,
    pub width: u32,
    pub signed: bool,
}

#[derive(Deserialize)]
pub struct Manifest {
    pub top: String,
    pub clock: Option<String>,
    pub inputs: Vec<PortEntry>,
    pub outputs: Vec<PortEntry>,
}

pub struct CorpusDesign {
    pub name: String,
    pub dir: PathBuf,
    pub source: String,
    pub manifest: Manifest,
    pub stimuli: Vec<PortValueMap>,
}

impl CorpusDesign {
    pub fn port_decls(&self) -> Vec<PortDecl> {
        let mut out = vec![PortDecl {
            name: "clk".into(),
            direction: Direction::In,
            width: 1,
            signedness: Signedness::Unsigned,
            role: PortRole::Clock,
        }];
        let decl = |p: &PortEntry, direction| PortDecl {
            name: p.name.clone(),
            direction,
            width: p.width,
            signedness: if p.signed { Signedness::Signed } else { Signedness::Unsigned },
            role: PortRole::Data,
        };
        out.extend(self.manifest.inputs.iter().map(|p| decl(p, Direction::In)));
        out.extend(self.manifest.outputs.iter().map(|p| decl(p, Direction::Out)));
        out
    }

    pub fn simulate(&self) -> CycleTrace {
        let mut inst = rtlsim::load(&self.source, self.manifest.clock.as_deref())
            .unwrap_or_else(|e| panic!("{}: {e}", self.name));
        rtlsim::run_stimuli(&mut inst, &self.stimuli).unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    pub fn golden(&self) -> CycleTrace {
        let text = fs::read_to_string(self.dir.join("golden.vcd")).unwrap();
        rtlcheck::diagnose::parse_vcd(&text, &self.port_decls(), "clk").unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }
}

pub fn corpus() -> Vec<CorpusDesign> {
    let root = fixtures().join("corpus");
    let mut names: Vec<String> = fs::read_dir(&root)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("design.v").exists())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let dir = root.join(&name);
            CorpusDesign {
                source: fs::read_to_string(dir.join("design.v")).unwrap(),
                manifest: serde_json::from_str(&fs::read_to_string(dir.join("ports.json")).unwrap()).unwrap(),
                stimuli: serde_json::from_str(&fs::read_to_string(dir.join("stimuli.json")).unwrap()).unwrap(),
                name,
                dir,
            }
        })
        .collect()
}

/// Number of records that differ anywhere, plus a description of the first.
pub fn diff(a: &CycleTrace, b: &CycleTrace) -> (usize, Option<String>) {
    let mut n = a.len().abs_diff(b.len());
    let mut first = (a.len() != b.len()).then(|| format!("lengths {} vs {}", a.len(), b.len()));
    for (ra, rb) in a.records.iter().zip(&b.records) {
        if ra != rb {
            n += 1;
            if first.is_none() {
                first = Some(format!("cycle {}: {:?}/{:?} vs {:?}/{:?}", ra.cycle, ra.inputs, ra.outputs, rb.inputs, rb.outputs));
            }
        }
    }
    (n, first)
}

pub fn design_spec(name: &str) -> rtlcheck::specmodel::DesignSpec {
    let text = fs::read_to_string(fixtures().join("specs").join(format!("{name}.spec"))).unwrap();
    rtlcheck::specmodel::parse_design_spec(&text).unwrap()
}

pub fn vspec(name: &str) -> rtlcheck::specmodel::VerificationSpec {
    let d = design_spec(name);
    rtlcheck::specmodel::VerificationSpec::from_design(&d, &d.description)
}

pub fn corpus_design(name: &str) -> CorpusDesign {
    corpus().into_iter().find(|d| d.name == name).unwrap_or_else(|| panic!("no corpus design {name}"))
}

pub fn python() -> String {
    std::env::var("PYTHON").unwrap_or_else(|_| "python3".into())
}

/// Runner command serving one of the Python model fixtures.
pub fn runner_command(model_file: &str) -> Vec<String> {
    let dir = fixtures().join("runner");
    vec![
        python(),
        dir.join("mini_runner.py").display().to_string(),
        dir.join(model_file).display().to_string(),
    ]
}

pub fn bundle(name: &str) -> PathBuf {
    fixtures().join("bundles").join(name)
}

pub fn mock_client(bundle_name: &str) -> rtlcheck::genclient::GeneratorClient {
    rtlcheck::genclient::GeneratorClient::mock(rtlcheck::genclient::ScriptedMock::directory(bundle(bundle_name)))
}

pub fn session_config(provider: &dyn rtlcheck::refmodel::ModelProvider, seed: u64) -> rtlcheck::session::SessionConfig<'_> {
    rtlcheck::session::SessionConfig {
        max_attempts: rtlcheck::session::DEFAULT_ATTEMPTS,
        seed,
        stim: Default::default(),
        cosim: Default::default(),
        report: Default::default(),
        jobs: 1,
        provider,
        vspec_from_design: false,
    }
}
