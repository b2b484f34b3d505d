//! Value change dump reader: turns a waveform into one record per rising
//! clock edge.

use std::collections::HashMap;

use thiserror::Error;

use crate::rtlsim::CycleTrace;
use crate::specmodel::{Direction, PortDecl};
use crate::value::{mask, PortValueMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcdError {
    #[error("VCD syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("VCD does not declare signal `{0}`")]
    MissingSignal(String),
    #[error("four-state value on `{signal}` at time {time}")]
    FourStateValue { time: u64, signal: String },
}

/// Signal value with unknown bits tracked separately.
#[derive(Debug, Clone, Copy, Default)]
struct Val {
    bits: u64,
    unknown: bool,
}

struct Var {
    width: u32,
    depth: usize,
}

struct Words<'a> {
    lines: std::str::Lines<'a>,
    pending: std::vec::IntoIter<&'a str>,
    line: usize,
}

impl<'a> Words<'a> {
    fn next(&mut self) -> Option<&'a str> {
        loop {
            if let Some(w) = self.pending.next() {
                return Some(w);
            }
            let l = self.lines.next()?;
            self.line += 1;
            self.pending = l.split_whitespace().collect::<Vec<_>>().into_iter();
        }
    }

    fn until_end(&mut self) -> Result<Vec<&'a str>, VcdError> {
        let mut out = Vec::new();
        loop {
            match self.next() {
                Some("$end") => return Ok(out),
                Some(w) => out.push(w),
                None => return Err(self.err("unterminated section")),
            }
        }
    }

    fn err(&self, msg: &str) -> VcdError {
        VcdError::Syntax {
            line: self.line,
            msg: msg.to_string(),
        }
    }
}

fn parse_vector(digits: &str, width: u32) -> Option<Val> {
    if digits.is_empty() {
        return None;
    }
    let mut bits = 0u64;
    let mut unknown = false;
    for c in digits.chars() {
        bits = bits.checked_shl(1).unwrap_or(0);
        match c {
            '0' => {}
            '1' => bits |= 1,
            'x' | 'X' | 'z' | 'Z' => unknown = true,
            _ => return None,
        }
    }
    // Left-extension with x/z keeps the unknown flag; 0/1 extension is zero.
    Some(Val {
        bits: bits & mask(width.min(64)),
        unknown,
    })
}

/// Samples `ports` (minus the clock) after each rising edge of `clock`.
/// Hierarchical names are flattened by leaf name; the shallowest declaration
/// wins, ties go to the first declared.
pub fn parse_vcd(text: &str, ports: &[PortDecl], clock: &str) -> Result<CycleTrace, VcdError> {
    let mut w = Words {
        lines: text.lines(),
        pending: Vec::new().into_iter(),
        line: 0,
    };
    let mut depth = 0usize;
    let mut vars: HashMap<String, Var> = HashMap::new();
    // Leaf name -> identifier code.
    let mut leaves: HashMap<String, String> = HashMap::new();

    loop {
        let Some(tok) = w.next() else {
            return Err(w.err("missing $enddefinitions"));
        };
        match tok {
            "$scope" => {
                w.until_end()?;
                depth += 1;
            }
            "$upscope" => {
                w.until_end()?;
                depth = depth.saturating_sub(1);
            }
            "$var" => {
                let f = w.until_end()?;
                if f.len() < 4 {
                    return Err(w.err("malformed $var"));
                }
                let width: u32 = f[1].parse().map_err(|_| w.err("bad $var width"))?;
                let code = f[2].to_string();
                let leaf = f[3].to_string();
                let entry = vars.entry(code.clone()).or_insert(Var { width, depth });
                entry.depth = entry.depth.min(depth);
                let replace = match leaves.get(&leaf) {
                    None => true,
                    Some(prev) => {
                        let p = &vars[prev];
                        depth < p.depth
                    }
                };
                if replace {
                    leaves.insert(leaf, code);
                }
            }
            "$enddefinitions" => {
                w.until_end()?;
                break;
            }
            t if t.starts_with('$') => {
                w.until_end()?;
            }
            _ => return Err(w.err(&format!("unexpected `{tok}` in header"))),
        }
    }

    let code_of = |name: &str| leaves.get(name).cloned().ok_or_else(|| VcdError::MissingSignal(name.to_string()));
    let clock_code = code_of(clock)?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for p in ports.iter().filter(|p| p.name != clock) {
        let code = code_of(&p.name)?;
        match p.direction {
            Direction::In => inputs.push((p, code)),
            Direction::Out => outputs.push((p, code)),
        }
    }
    let mut trace = CycleTrace::new(
        inputs.iter().map(|(p, _)| p.name.clone()).collect(),
        outputs.iter().map(|(p, _)| p.name.clone()).collect(),
    );

    let mut values: HashMap<String, Val> = HashMap::new();
    let mut time = 0u64;
    let mut clock_at_step_start = Val {
        bits: 0,
        unknown: true,
    };

    let sample = |values: &HashMap<String, Val>, time: u64, trace: &mut CycleTrace| -> Result<(), VcdError> {
        let read = |set: &Vec<(&PortDecl, String)>| -> Result<PortValueMap, VcdError> {
            set.iter()
                .map(|(p, code)| {
                    let v = values.get(code).copied().unwrap_or(Val {
                        bits: 0,
                        unknown: true,
                    });
                    if v.unknown {
                        return Err(VcdError::FourStateValue {
                            time,
                            signal: p.name.clone(),
                        });
                    }
                    Ok((p.name.clone(), v.bits & mask(p.width)))
                })
                .collect()
        };
        let i = read(&inputs)?;
        let o = read(&outputs)?;
        trace.push(i, o);
        Ok(())
    };
    let rose = |before: Val, after: Option<&Val>| -> bool {
        matches!(after, Some(a) if !a.unknown && a.bits & 1 == 1) && (before.unknown || before.bits & 1 == 0)
    };

    while let Some(tok) = w.next() {
        if let Some(t) = tok.strip_prefix('#') {
            let t: u64 = t.parse().map_err(|_| w.err("bad timestamp"))?;
            if t < time {
                return Err(w.err("time goes backwards"));
            }
            if rose(clock_at_step_start, values.get(&clock_code)) {
                sample(&values, time, &mut trace)?;
            }
            clock_at_step_start = values.get(&clock_code).copied().unwrap_or(Val {
                bits: 0,
                unknown: true,
            });
            time = t;
            continue;
        }
        match tok.as_bytes()[0] {
            b'$' => {
                // $dumpvars / $dumpall / $dumpon / $dumpoff wrap plain value changes; $end closes them.
                if tok == "$comment" {
                    w.until_end()?;
                }
            }
            b'0' | b'1' | b'x' | b'X' | b'z' | b'Z' => {
                let code = &tok[1..];
                if code.is_empty() {
                    return Err(w.err("scalar change without identifier"));
                }
                let unknown = !matches!(tok.as_bytes()[0], b'0' | b'1');
                values.insert(
                    code.to_string(),
                    Val {
                        bits: (tok.as_bytes()[0] == b'1') as u64,
                        unknown,
                    },
                );
            }
            b'b' | b'B' => {
                let code = w.next().ok_or_else(|| w.err("vector change without identifier"))?;
                let width = vars.get(code).map_or(64, |v| v.width);
                if width > 64 {
                    return Err(w.err("vector wider than 64 bits"));
                }
                let v = parse_vector(&tok[1..], width).ok_or_else(|| w.err("bad vector value"))?;
                values.insert(code.to_string(), v);
            }
            b'r' | b'R' => return Err(w.err("real-valued signals are not supported")),
            _ => return Err(w.err(&format!("unexpected `{tok}`"))),
        }
    }
    if rose(clock_at_step_start, values.get(&clock_code)) {
        sample(&values, time, &mut trace)?;
    }
    Ok(trace)
}
