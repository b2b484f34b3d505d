use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use super::TaskKind;

/// Prompt templates, one per task. Placeholders are written `{{name}}`.
#[derive(Debug, Clone)]
pub struct PromptProfile {
    pub name: String,
    templates: BTreeMap<TaskKind, String>,
}

fn builtin(task: TaskKind) -> &'static str {
    match task {
        TaskKind::GenRtl => include_str!("../../prompts/gen_rtl.txt"),
        TaskKind::GenVerificationSpec => include_str!("../../prompts/gen_verification_spec.txt"),
        TaskKind::FillTemplate => include_str!("../../prompts/fill_template.txt"),
        TaskKind::ProposePlan => include_str!("../../prompts/propose_plan.txt"),
        TaskKind::ProposeStimuli => include_str!("../../prompts/propose_stimuli.txt"),
        TaskKind::RefineRtl => include_str!("../../prompts/refine_rtl.txt"),
    }
}

impl Default for PromptProfile {
    fn default() -> Self {
        PromptProfile {
            name: "default".into(),
            templates: TaskKind::ALL
                .iter()
                .map(|&t| (t, builtin(t).to_string()))
                .collect(),
        }
    }
}

impl PromptProfile {
    /// Loads `<dir>/<task>.txt` for each task, falling back to the built-in text
    /// for files that are absent.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut profile = PromptProfile {
            name: dir.display().to_string(),
            ..PromptProfile::default()
        };
        for t in TaskKind::ALL {
            let path = dir.join(format!("{}.txt", t.dir_name()));
            if path.exists() {
                profile.templates.insert(t, fs::read_to_string(path)?);
            }
        }
        Ok(profile)
    }

    pub fn template(&self, task: TaskKind) -> &str {
        &self.templates[&task]
    }

    pub fn render(&self, task: TaskKind, vars: &[(&str, &str)]) -> String {
        let mut out = self.template(task).to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        out
    }
}
