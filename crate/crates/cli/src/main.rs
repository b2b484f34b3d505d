//! `rtlcheck`: batch entry point for the generate/verify/refine pipeline.
//!
//! Exit status: 0 pass, 1 the verified design failed, 2 attempt budget
//! exhausted, 64 usage or bad input, 70 internal failure. Errors are printed
//! to stderr as one JSON object and, when the output directory is known,
//! written to `error.json` there.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{BackendArgs, ClassifierArgs, CosimArgs, StimuliArgs};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_EXHAUSTED: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INTERNAL: u8 = 70;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub out: Option<PathBuf>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
            out: None,
        }
    }

    pub fn internal(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            kind,
            message: message.into(),
            out: None,
        }
    }

    /// Attaches the output directory unless one is already set.
    pub fn at(mut self, out: &Path) -> Self {
        self.out.get_or_insert_with(|| out.to_path_buf());
        self
    }

    fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "exitCode": self.code }
        })
        .to_string()
    }

    fn emit(&self) {
        let text = self.to_json();
        eprintln!("{text}");
        if let Some(dir) = &self.out {
            if dir.is_dir() {
                let _ = std::fs::write(dir.join("error.json"), text + "\n");
            }
        }
    }
}

#[derive(Parser)]
#[command(name = "rtlcheck", version, about = "Generate, verify and refine RTL against a reference model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full session: generate RTL, verify, refine until pass or budget.
    Run(RunArgs),
    /// Simulate a design on stimuli and write the cycle trace.
    Sim(SimArgs),
    /// Co-simulate a design (or recorded traces) against a reference model.
    Cosim(CosimCmdArgs),
    /// Plan, generate and refine a stimulus suite.
    Stimuli(StimuliCmdArgs),
    /// Classify the mismatch in a paired trace.
    Classify(ClassifyArgs),
    /// Analytic and Monte Carlo success rates for given verifier rates.
    Model(ModelArgs),
    /// Render a verification report from paired traces.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Design specification file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Attempt budget.
    #[arg(short = 'n', long = "attempts")]
    pub attempts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Runner command hosting the reference model, e.g. "python3 runner.py".
    #[arg(long)]
    pub runner: Option<String>,
    /// Derive the verification spec from the design spec instead of asking
    /// the generator.
    #[arg(long)]
    pub vspec_from_design: bool,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub cosim: CosimArgs,
    #[command(flatten)]
    pub stimuli: StimuliArgs,
}

#[derive(Args)]
pub struct SimArgs {
    #[arg(long)]
    pub hdl: PathBuf,
    /// Suite file or a flat JSON list of per-cycle port maps.
    #[arg(long)]
    pub stimuli: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Simulate only the named suite case.
    #[arg(long = "case")]
    pub case_name: Option<String>,
    /// Clock port, when the design's clock is not named clk/clock.
    #[arg(long)]
    pub clock: Option<String>,
}

#[derive(Args)]
pub struct SpecArgs {
    /// Design specification; the verification spec is derived from it.
    #[arg(long, conflicts_with = "vspec")]
    pub spec: Option<PathBuf>,
    /// Verification spec JSON.
    #[arg(long)]
    pub vspec: Option<PathBuf>,
}

#[derive(Args)]
pub struct CosimCmdArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, conflicts_with = "trace")]
    pub hdl: Option<PathBuf>,
    /// Recorded DUT trace, one per suite case in order.
    #[arg(long)]
    pub trace: Vec<PathBuf>,
    #[arg(long)]
    pub clock: Option<String>,
    /// Filled reference-model text.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub stimuli: PathBuf,
    /// Refinement log to excerpt in the report.
    #[arg(long)]
    pub fixlog: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub runner: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub cosim: CosimArgs,
}

#[derive(Args)]
pub struct StimuliCmdArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub vspec_from_design: bool,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub stimuli: StimuliArgs,
}

#[derive(Args)]
pub struct ClassifyArgs {
    /// Paired trace JSON.
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
}

#[derive(Args)]
pub struct ModelArgs {
    /// key=value pairs: x, a, b, optional c, d, N, trials, seed.
    #[arg(required = true)]
    pub params: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Paired trace JSON, one per case.
    #[arg(long = "trace", required = true)]
    pub traces: Vec<PathBuf>,
    #[arg(long)]
    pub fixlog: Option<PathBuf>,
    #[arg(long, default_value = "stimuli.json")]
    pub stimuli_ref: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::from(EXIT_PASS);
        }
        Err(e) => {
            Failure::usage(e.render().to_string().trim_end()).emit();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Sim(a) => commands::sim(a),
        Command::Cosim(a) => commands::cosim(a),
        Command::Stimuli(a) => commands::stimuli(a),
        Command::Classify(a) => commands::classify(a),
        Command::Model(a) => commands::model(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            f.emit();
            ExitCode::from(f.code)
        }
    }
}
