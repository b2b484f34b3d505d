//! Generator client: the text-in/text-out boundary to the code generator.
//!
//! Two backends are provided: an HTTP chat-completions client and a scripted
//! mock that replays fixture files keyed by `(task, attempt)`.

mod http;
mod mock;
mod prompts;

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use mock::ScriptedMock;
pub use prompts::PromptProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    GenRtl,
    GenVerificationSpec,
    FillTemplate,
    ProposePlan,
    ProposeStimuli,
    RefineRtl,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::GenRtl,
        TaskKind::GenVerificationSpec,
        TaskKind::FillTemplate,
        TaskKind::ProposePlan,
        TaskKind::ProposeStimuli,
        TaskKind::RefineRtl,
    ];

    /// Directory name in a fixture bundle, also the prompt asset stem.
    pub fn dir_name(self) -> &'static str {
        match self {
            TaskKind::GenRtl => "gen_rtl",
            TaskKind::GenVerificationSpec => "gen_verification_spec",
            TaskKind::FillTemplate => "fill_template",
            TaskKind::ProposePlan => "propose_plan",
            TaskKind::ProposeStimuli => "propose_stimuli",
            TaskKind::RefineRtl => "refine_rtl",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PromptBundle {
    pub task: TaskKind,
    pub attempt: usize,
    pub rendered_prompt: String,
    pub attachments: Vec<(String, String)>,
}

impl PromptBundle {
    pub fn new(task: TaskKind, attempt: usize, rendered_prompt: String) -> Self {
        PromptBundle {
            task,
            attempt,
            rendered_prompt,
            attachments: Vec::new(),
        }
    }

    pub fn with_attachment(mut self, name: &str, text: String) -> Self {
        self.attachments.push((name.to_string(), text));
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("generator request timed out")]
    Timeout,
    #[error("generator transport error: {0}")]
    Transport(String),
    #[error("missing fixture {0}")]
    MissingFixture(String),
}

/// One archived request/response pair.
#[derive(Debug, Clone, Serialize)]
pub struct Exchange {
    pub task: TaskKind,
    pub attempt: usize,
    pub prompt: String,
    pub response: Result<String, String>,
}

pub enum Backend {
    Http(HttpBackend),
    Mock(ScriptedMock),
}

pub struct GeneratorClient {
    backend: Backend,
    prompts: PromptProfile,
    transcript: Mutex<Vec<Exchange>>,
}

impl GeneratorClient {
    pub fn new(backend: Backend, prompts: PromptProfile) -> Self {
        GeneratorClient {
            backend,
            prompts,
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn mock(mock: ScriptedMock) -> Self {
        Self::new(Backend::Mock(mock), PromptProfile::default())
    }

    pub fn prompts(&self) -> &PromptProfile {
        &self.prompts
    }

    pub fn request(&self, bundle: &PromptBundle) -> Result<String, GenError> {
        let result = match &self.backend {
            Backend::Http(h) => h.complete(&bundle.rendered_prompt),
            Backend::Mock(m) => m.respond(bundle.task, bundle.attempt),
        };
        log::debug!("generator {} attempt {}: ok={}", bundle.task, bundle.attempt, result.is_ok());
        self.transcript.lock().unwrap().push(Exchange {
            task: bundle.task,
            attempt: bundle.attempt,
            prompt: bundle.rendered_prompt.clone(),
            response: result.clone().map_err(|e| e.to_string()),
        });
        result
    }

    /// Everything exchanged so far, in request order.
    pub fn transcript(&self) -> Vec<Exchange> {
        self.transcript.lock().unwrap().clone()
    }
}

/// Returns the body of the first fenced block tagged `lang` (or, failing that,
/// the first untagged block), plus a warning when the choice was ambiguous or
/// no fence was found and the whole response is returned.
pub fn extract_code_block(response: &str, lang: &str) -> (String, Option<String>) {
    let mut blocks: Vec<(String, String)> = Vec::new();
    let mut lines = response.lines();
    while let Some(line) = lines.next() {
        let t = line.trim_start();
        if let Some(tag) = t.strip_prefix("```") {
            let tag = tag.trim().to_ascii_lowercase();
            let mut body = String::new();
            for inner in lines.by_ref() {
                if inner.trim_start().starts_with("```") {
                    break;
                }
                body.push_str(inner);
                body.push('\n');
            }
            blocks.push((tag, body));
        }
    }
    if blocks.is_empty() {
        return (
            response.to_string(),
            Some("no fenced code block found; using whole response".into()),
        );
    }
    let lang = lang.to_ascii_lowercase();
    let tag_matches = |tag: &str| tag == lang || (lang == "verilog" && (tag == "v" || tag == "systemverilog"));
    let pick = blocks
        .iter()
        .position(|(tag, _)| tag_matches(tag))
        .or_else(|| blocks.iter().position(|(tag, _)| tag.is_empty()));
    match pick {
        Some(i) => {
            let warning = (blocks.len() > 1).then(|| {
                format!(
                    "{} fenced blocks in response; used block {} and ignored the rest",
                    blocks.len(),
                    i + 1
                )
            });
            (blocks.swap_remove(i).1, warning)
        }
        None => (
            response.to_string(),
            Some(format!("no `{lang}` block found; using whole response")),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let r = "Sure.\n```verilog\nmodule m; endmodule\n```\nDone.";
        assert_eq!(extract_code_block(r, "verilog"), ("module m; endmodule\n".into(), None));
    }

    #[test]
    fn no_fence_returns_whole_text() {
        let (body, warn) = extract_code_block("module m; endmodule", "verilog");
        assert_eq!(body, "module m; endmodule");
        assert!(warn.is_some());
    }

    #[test]
    fn two_blocks_first_wins() {
        let r = "```verilog\nA\n```\ntext\n```verilog\nB\n```\n";
        let (body, warn) = extract_code_block(r, "verilog");
        assert_eq!(body, "A\n");
        assert!(warn.unwrap().contains("2 fenced blocks"));
    }

    #[test]
    fn tag_match_preferred_over_position() {
        let r = "```json\n{}\n```\n```python\nclass M: pass\n```\n";
        assert_eq!(extract_code_block(r, "python").0, "class M: pass\n");
    }

    #[test]
    fn transcript_records_every_request() {
        let gen = GeneratorClient::mock(ScriptedMock::from_pairs([(TaskKind::GenRtl, 0, "x")]));
        let b = PromptBundle::new(TaskKind::GenRtl, 0, "p".into());
        assert_eq!(gen.request(&b).unwrap(), "x");
        let b = PromptBundle::new(TaskKind::GenRtl, 1, "p".into());
        assert!(gen.request(&b).is_err());
        let t = gen.transcript();
        assert_eq!(t.len(), 2);
        assert!(t[1].response.is_err());
    }
}
