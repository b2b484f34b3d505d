use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{GenError, TaskKind};

/// Deterministic generator replaying canned responses.
///
/// Directory layout: `<fixture_dir>/<task>/attempt<k>.<ext>`; any extension is
/// accepted, the lexically first match wins.
pub enum ScriptedMock {
    Directory(PathBuf),
    Inline(BTreeMap<(TaskKind, usize), String>),
}

impl ScriptedMock {
    pub fn directory(path: impl Into<PathBuf>) -> Self {
        ScriptedMock::Directory(path.into())
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (TaskKind, usize, S)>,
        S: Into<String>,
    {
        ScriptedMock::Inline(
            pairs
                .into_iter()
                .map(|(t, k, s)| ((t, k), s.into()))
                .collect(),
        )
    }

    pub fn respond(&self, task: TaskKind, attempt: usize) -> Result<String, GenError> {
        match self {
            ScriptedMock::Inline(map) => map
                .get(&(task, attempt))
                .cloned()
                .ok_or_else(|| GenError::MissingFixture(format!("{task}/attempt{attempt}"))),
            ScriptedMock::Directory(dir) => {
                let path = find_fixture(dir, task, attempt)?;
                fs::read_to_string(&path)
                    .map_err(|e| GenError::MissingFixture(format!("{}: {e}", path.display())))
            }
        }
    }
}

fn find_fixture(dir: &Path, task: TaskKind, attempt: usize) -> Result<PathBuf, GenError> {
    let task_dir = dir.join(task.dir_name());
    let stem = format!("attempt{attempt}");
    let mut hits: Vec<PathBuf> = fs::read_dir(&task_dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_stem().and_then(|s| s.to_str()) == Some(stem.as_str()))
        .collect();
    hits.sort();
    hits.into_iter()
        .next()
        .ok_or_else(|| GenError::MissingFixture(task_dir.join(format!("{stem}.*")).display().to_string()))
}
