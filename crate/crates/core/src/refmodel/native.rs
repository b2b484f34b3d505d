//! Built-in models. Each binds to the verification spec positionally: the
//! n-th step input and the n-th output fill the roles listed per model.

use super::{LogicalMap, ReferenceModel};
use crate::specmodel::VerificationSpec;

pub const NAMES: &[&str] = &["counter", "adder", "conv2x2", "conv_mac"];

pub fn by_name(name: &str, vspec: &VerificationSpec) -> Option<Box<dyn ReferenceModel>> {
    let ins: Vec<String> = vspec.step_inputs().map(|p| p.name.clone()).collect();
    let outs: Vec<(String, u32)> = vspec.outputs().map(|p| (p.name.clone(), p.width)).collect();
    let pick = |v: &[String], i: usize| v.get(i).cloned();
    Some(match name {
        // [en] -> [count]
        "counter" => Box::new(Counter {
            enable: pick(&ins, 0),
            out: outs.first()?.0.clone(),
            count: 0,
        }),
        // [a, b, ...] -> [sum]
        "adder" => Box::new(Adder {
            out: outs.first()?.0.clone(),
        }),
        // [valid, window, kernel] -> [result, ready]
        "conv2x2" => Box::new(Conv2x2 {
            valid: pick(&ins, 0)?,
            window: pick(&ins, 1)?,
            kernel: pick(&ins, 2)?,
            elem_bits: vspec
                .boundary_conditions
                .iter()
                .find(|c| ins.get(1) == Some(&c.port_name))
                .map_or(8, |c| c.max_width_bits),
            result: outs.first()?.0.clone(),
            ready: outs.get(1).map(|o| o.0.clone()),
            acc: 0,
            fired: false,
        }),
        // [valid, pixel, weight] -> [result, done]
        "conv_mac" => Box::new(ConvMac {
            valid: pick(&ins, 0)?,
            pixel: pick(&ins, 1)?,
            weight: pick(&ins, 2)?,
            result: outs.first()?.0.clone(),
            done: outs.get(1)?.0.clone(),
            acc: 0,
            taps: 0,
            out: 0,
            done_q: false,
        }),
        _ => return None,
    })
}

struct Counter {
    enable: Option<String>,
    out: String,
    count: i128,
}

impl ReferenceModel for Counter {
    fn reset(&mut self) {
        self.count = 0;
    }

    fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, String> {
        if self.enable.as_ref().is_none_or(|e| inputs[e] != 0) {
            self.count += 1;
        }
        Ok([(self.out.clone(), self.count)].into_iter().collect())
    }
}

struct Adder {
    out: String,
}

impl ReferenceModel for Adder {
    fn reset(&mut self) {}

    fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, String> {
        Ok([(self.out.clone(), inputs.values().sum())].into_iter().collect())
    }
}

/// Splits a packed value into `n` unsigned elements, element 0 in the low bits.
pub fn unpack(flat: i128, n: usize, elem_bits: u32) -> Vec<i128> {
    let m = (1i128 << elem_bits) - 1;
    (0..n).map(|k| (flat >> (k as u32 * elem_bits)) & m).collect()
}

/// Row-major reshape of a flat list.
pub fn reshape(flat: &[i128], rows: usize, cols: usize) -> Result<Vec<Vec<i128>>, String> {
    if flat.len() != rows * cols {
        return Err(format!("cannot reshape {} elements into {rows}x{cols}", flat.len()));
    }
    Ok(flat.chunks(cols).map(|c| c.to_vec()).collect())
}

/// Registered 2x2 dot product of a pixel window and a kernel, both packed
/// into one port each. `ready` follows `valid` by one edge.
struct Conv2x2 {
    valid: String,
    window: String,
    kernel: String,
    elem_bits: u32,
    result: String,
    ready: Option<String>,
    acc: i128,
    fired: bool,
}

impl ReferenceModel for Conv2x2 {
    fn reset(&mut self) {
        self.acc = 0;
        self.fired = false;
    }

    fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, String> {
        self.fired = inputs[&self.valid] != 0;
        if self.fired {
            let w = reshape(&unpack(inputs[&self.window], 4, self.elem_bits), 2, 2)?;
            let k = reshape(&unpack(inputs[&self.kernel], 4, self.elem_bits), 2, 2)?;
            self.acc = (0..2)
                .flat_map(|r| (0..2).map(move |c| (r, c)))
                .map(|(r, c)| w[r][c] * k[r][c])
                .sum();
        }
        let mut out: LogicalMap = [(self.result.clone(), self.acc)].into_iter().collect();
        if let Some(r) = &self.ready {
            out.insert(r.clone(), self.fired as i128);
        }
        Ok(out)
    }
}

/// Streaming 3x3 multiply-accumulate: nine valid taps produce one result.
struct ConvMac {
    valid: String,
    pixel: String,
    weight: String,
    result: String,
    done: String,
    acc: i128,
    taps: u32,
    out: i128,
    done_q: bool,
}

impl ReferenceModel for ConvMac {
    fn reset(&mut self) {
        self.acc = 0;
        self.taps = 0;
        self.out = 0;
        self.done_q = false;
    }

    fn step(&mut self, inputs: &LogicalMap) -> Result<LogicalMap, String> {
        self.done_q = false;
        if inputs[&self.valid] != 0 {
            let acc = self.acc + inputs[&self.pixel] * inputs[&self.weight];
            if self.taps == 8 {
                self.out = acc;
                self.done_q = true;
                self.acc = 0;
                self.taps = 0;
            } else {
                self.acc = acc;
                self.taps += 1;
            }
        }
        Ok([(self.result.clone(), self.out), (self.done.clone(), self.done_q as i128)]
            .into_iter()
            .collect())
    }
}
