//! Client side of the runner protocol: newline-delimited JSON over a child
//! process's stdin/stdout, one reply per request.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde_json::{json, Value};

use super::{LogicalMap, ModelError};

pub struct ExternalModel {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    first_line: bool,
    wide: bool,
}

impl std::fmt::Debug for ExternalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModel").field("pid", &self.child.id()).finish()
    }
}

fn transport(e: impl std::fmt::Display) -> ModelError {
    ModelError::Transport(e.to_string())
}

impl ExternalModel {
    pub fn spawn(command: &[String]) -> Result<Self, ModelError> {
        let (prog, args) = command
            .split_first()
            .ok_or_else(|| ModelError::Transport("empty runner command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ModelError::Transport(format!("cannot start `{prog}`: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalModel {
            child,
            stdin,
            stdout,
            first_line: true,
            wide: false,
        })
    }

    fn read_reply(&mut self) -> Result<Value, ModelError> {
        loop {
            let mut line = String::new();
            let n = self.stdout.read_line(&mut line).map_err(transport)?;
            if n == 0 {
                return Err(ModelError::Transport("runner closed its output".into()));
            }
            let v: Value = serde_json::from_str(line.trim())
                .map_err(|e| ModelError::Protocol(format!("malformed reply `{}`: {e}", line.trim())))?;
            // The runner may greet before its first reply.
            if std::mem::take(&mut self.first_line) && v.get("hello").is_some() {
                self.wide = v.get("wide").and_then(Value::as_bool).unwrap_or(false);
                continue;
            }
            return Ok(v);
        }
    }

    fn request(&mut self, msg: Value) -> Result<Value, ModelError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| ModelError::Transport("runner input already closed".into()))?;
        writeln!(stdin, "{msg}").and_then(|_| stdin.flush()).map_err(transport)?;
        let reply = self.read_reply()?;
        match reply.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(reply),
            Some(false) => Err(ModelError::Fault(match reply.get("error") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => "unspecified model error".into(),
            })),
            None => Err(ModelError::Protocol(format!("reply lacks boolean `ok`: {reply}"))),
        }
    }

    pub fn reset(&mut self) -> Result<(), ModelError> {
        self.request(json!({"event": "reset"})).map(|_| ())
    }

    pub fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, ModelError> {
        let wide = self.wide;
        let enc: serde_json::Map<String, Value> = inputs
            .iter()
            .map(|(k, v)| (k.clone(), int_to_json(*v, wide)))
            .collect();
        let reply = self.request(json!({"event": "step", "inputs": enc}))?;
        let outs = reply
            .get("outputs")
            .and_then(Value::as_object)
            .ok_or_else(|| ModelError::Protocol(format!("step reply lacks `outputs`: {reply}")))?;
        outs.iter()
            .map(|(k, v)| Ok((k.clone(), int_of(v).ok_or_else(|| ModelError::Protocol(format!("output `{k}` is not an integer: {v}")))?)))
            .collect()
    }

    pub fn close(&mut self) -> Result<(), ModelError> {
        let r = if self.stdin.is_some() {
            self.request(json!({"event": "close"})).map(|_| ())
        } else {
            Ok(())
        };
        self.stdin = None;
        if r.is_err() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
        r
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if self.stdin.take().is_some() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// Plain numbers unless the runner negotiated wide integers, in which case
/// values beyond the float-safe range travel as decimal strings.
fn int_to_json(v: i128, wide: bool) -> Value {
    if wide && v.unsigned_abs() >= 1 << 53 {
        json!(v.to_string())
    } else if let Ok(n) = i64::try_from(v) {
        json!(n)
    } else {
        json!(v as u64)
    }
}

fn int_of(v: &Value) -> Option<i128> {
    match v {
        Value::Number(n) => n.as_i64().map(i128::from).or_else(|| n.as_u64().map(i128::from)),
        Value::String(s) => s.trim().parse().ok(),
        Value::Bool(b) => Some(*b as i128),
        _ => None,
    }
}
