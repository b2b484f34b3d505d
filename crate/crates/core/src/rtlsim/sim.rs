use std::sync::Arc;

use super::ast::{BinaryOp, Edge, UnaryOp};
use super::elab::{CombProc, Design, Sel, Slot, TExpr, TStmt, Target, EK};
use super::trace::CycleTrace;
use super::{HdlError, SETTLE_LIMIT};
use crate::value::{decode, encode, mask, sign_extend, PortValueMap};

const DIAG_LIMIT: usize = 64;

#[derive(Debug, Default, Clone)]
struct Diag {
    msgs: Vec<String>,
    cycle: Option<usize>,
}

impl Diag {
    fn push(&mut self, what: &str) {
        if self.msgs.len() >= DIAG_LIMIT || self.msgs.iter().any(|m| m.ends_with(what)) {
            return;
        }
        let msg = match self.cycle {
            Some(c) => format!("cycle {c}: {what}"),
            None => what.to_string(),
        };
        self.msgs.push(msg);
    }
}

#[derive(Debug, Clone, Copy)]
struct Write {
    word: usize,
    mask: u64,
    bits: u64,
}

fn extend(v: u64, from: u32, to: u32, signed: bool) -> u64 {
    if signed && to > from {
        sign_extend(v, from, to)
    } else {
        v & mask(from) & mask(to)
    }
}

fn extract(word: u64, off: i128, w: u32) -> u64 {
    let v = if off >= 64 || off <= -64 {
        0
    } else if off >= 0 {
        word >> off
    } else {
        word << (-off)
    };
    v & mask(w)
}

/// Mask and bits for writing a `w`-bit value at bit offset `off` of a
/// `slot_w`-bit word. Bits falling outside the word are dropped.
fn place(value: u64, off: i128, w: u32, slot_w: u32) -> Option<(u64, u64)> {
    if off >= slot_w as i128 || off + w as i128 <= 0 {
        return None;
    }
    let (m, bits) = if off >= 0 {
        (mask(w) << off, (value & mask(w)) << off)
    } else {
        let sh = (-off) as u32;
        (mask(w - sh), (value & mask(w)) >> sh)
    };
    let m = m & mask(slot_w);
    Some((m, bits & m))
}

struct Ev<'a> {
    slots: &'a [Slot],
    st: &'a [u64],
}

impl Ev<'_> {
    fn index(&self, e: &TExpr, d: &mut Diag) -> i128 {
        decode(self.eval(e, e.w, e.s, d), e.w, e.s)
    }

    fn word_index(&self, slot: &Slot, elem: Option<&TExpr>, d: &mut Diag) -> Option<usize> {
        match elem {
            None => Some(slot.base),
            Some(idx) => {
                let off = self.index(idx, d) - slot.array_lo as i128;
                if off < 0 || off >= slot.depth as i128 {
                    None
                } else {
                    Some(slot.base + off as usize)
                }
            }
        }
    }

    /// Bit offset and width of a select on `slot`.
    fn sel_range(&self, slot: &Slot, sel: &Sel, d: &mut Diag) -> (i128, u32) {
        match sel {
            Sel::Bit(idx) => (slot.bit_offset(self.index(idx, d)), 1),
            Sel::Part { offset, width } => (*offset as i128, *width),
            Sel::Indexed { start, width, up } => {
                let s = self.index(start, d);
                let (lo, hi) = if *up {
                    (s, s + *width as i128 - 1)
                } else {
                    (s - *width as i128 + 1, s)
                };
                (slot.bit_offset(lo).min(slot.bit_offset(hi)), *width)
            }
        }
    }

    /// Value of `e` in a context of width `cw` and signedness `cs`, masked to `cw`.
    fn eval(&self, e: &TExpr, cw: u32, cs: bool, d: &mut Diag) -> u64 {
        let m = mask(cw);
        match &e.kind {
            EK::Const(v) => extend(*v, e.w, cw, cs),
            EK::Var(slot) => extend(self.st[self.slots[*slot].base], e.w, cw, cs),
            EK::Mem(slot, idx) => {
                let s = &self.slots[*slot];
                let v = self.word_index(s, Some(idx), d).map_or(0, |i| self.st[i]);
                extend(v, e.w, cw, cs)
            }
            EK::Select { slot, elem, sel } => {
                let s = &self.slots[*slot];
                let word = self.word_index(s, elem.as_deref(), d).map_or(0, |i| self.st[i]);
                let (off, w) = self.sel_range(s, sel, d);
                extend(extract(word, off, w), e.w, cw, false)
            }
            EK::Cast(a) => extend(self.eval(a, a.w, a.s, d), e.w, cw, cs),
            EK::Unary(op, a) => match op {
                UnaryOp::Plus => self.eval(a, cw, cs, d),
                UnaryOp::Neg => self.eval(a, cw, cs, d).wrapping_neg() & m,
                UnaryOp::Not => !self.eval(a, cw, cs, d) & m,
                _ => {
                    let v = self.eval(a, a.w, a.s, d);
                    let r = match op {
                        UnaryOp::LogicNot => v == 0,
                        UnaryOp::RedAnd => v == mask(a.w),
                        UnaryOp::RedNand => v != mask(a.w),
                        UnaryOp::RedOr => v != 0,
                        UnaryOp::RedNor => v == 0,
                        UnaryOp::RedXor => v.count_ones() % 2 == 1,
                        UnaryOp::RedXnor => v.count_ones() % 2 == 0,
                        _ => unreachable!(),
                    };
                    r as u64
                }
            },
            EK::Binary(op, a, b) => self.binary(*op, a, b, cw, cs, d),
            EK::Ternary(c, t, f) => {
                if self.eval(c, c.w, c.s, d) != 0 {
                    self.eval(t, cw, cs, d)
                } else {
                    self.eval(f, cw, cs, d)
                }
            }
            EK::Concat(parts) => {
                let mut acc = 0u64;
                for p in parts {
                    let v = self.eval(p, p.w, p.s, d);
                    acc = if p.w >= 64 { v } else { (acc << p.w) | v };
                }
                extend(acc, e.w, cw, false)
            }
            EK::Repeat(n, inner) => {
                let v = self.eval(inner, inner.w, false, d);
                let mut acc = 0u64;
                for _ in 0..*n {
                    acc = if inner.w >= 64 { v } else { (acc << inner.w) | v };
                }
                extend(acc, e.w, cw, false)
            }
        }
    }

    fn binary(&self, op: BinaryOp, a: &TExpr, b: &TExpr, cw: u32, cs: bool, d: &mut Diag) -> u64 {
        use BinaryOp::*;
        let m = mask(cw);
        match op {
            Add | Sub | Mul | Div | Mod | And | Or | Xor | Xnor => {
                let x = self.eval(a, cw, cs, d);
                let y = self.eval(b, cw, cs, d);
                match op {
                    Add => x.wrapping_add(y) & m,
                    Sub => x.wrapping_sub(y) & m,
                    Mul => x.wrapping_mul(y) & m,
                    And => x & y,
                    Or => x | y,
                    Xor => x ^ y,
                    Xnor => !(x ^ y) & m,
                    Div | Mod if y == 0 => {
                        d.push(if op == Div { "division by zero" } else { "modulo by zero" });
                        0
                    }
                    _ => {
                        let (x, y) = (decode(x, cw, cs), decode(y, cw, cs));
                        let r = if op == Div { x / y } else { x % y };
                        encode(r, cw)
                    }
                }
            }
            Shl | AShl | Shr | AShr => {
                let x = self.eval(a, cw, cs, d);
                let n = self.eval(b, b.w, false, d);
                if op == AShr && cs {
                    encode(decode(x, cw, true) >> n.min(127), cw)
                } else if n >= cw as u64 {
                    0
                } else if matches!(op, Shl | AShl) {
                    (x << n) & m
                } else {
                    x >> n
                }
            }
            LogicAnd | LogicOr => {
                let x = self.eval(a, a.w, a.s, d) != 0;
                let r = if op == LogicAnd {
                    x && self.eval(b, b.w, b.s, d) != 0
                } else {
                    x || self.eval(b, b.w, b.s, d) != 0
                };
                r as u64
            }
            Lt | Le | Gt | Ge | Eq | Ne => {
                let ow = a.w.max(b.w);
                let os = a.s && b.s;
                let x = decode(self.eval(a, ow, os, d), ow, os);
                let y = decode(self.eval(b, ow, os, d), ow, os);
                let r = match op {
                    Lt => x < y,
                    Le => x <= y,
                    Gt => x > y,
                    Ge => x >= y,
                    Eq => x == y,
                    _ => x != y,
                };
                r as u64
            }
        }
    }

    fn resolve(&self, t: &Target, value: u64, d: &mut Diag, out: &mut Vec<Write>) {
        match t {
            Target::Concat(parts) => {
                let mut v = value;
                for p in parts.iter().rev() {
                    let w = p.width();
                    self.resolve(p, v & mask(w), d, out);
                    v = if w >= 64 { 0 } else { v >> w };
                }
            }
            Target::Var { slot, elem, sel, w } => {
                let s = &self.slots[*slot];
                let Some(word) = self.word_index(s, elem.as_ref(), d) else { return };
                let placed = match sel {
                    None => Some((mask(s.width), value & mask(s.width))),
                    Some(sel) => {
                        let (off, _) = self.sel_range(s, sel, d);
                        place(value, off, *w, s.width)
                    }
                };
                if let Some((mask, bits)) = placed {
                    out.push(Write { word, mask, bits });
                }
            }
        }
    }
}

fn apply(st: &mut [u64], w: &Write) {
    st[w.word] = (st[w.word] & !w.mask) | w.bits;
}

fn exec(stmt: &TStmt, slots: &[Slot], st: &mut [u64], nb: &mut Vec<Write>, d: &mut Diag) {
    match stmt {
        TStmt::Block(v) => v.iter().for_each(|s| exec(s, slots, st, nb, d)),
        TStmt::If(c, t, e) => {
            let taken = Ev { slots, st }.eval(c, c.w, c.s, d) != 0;
            if taken {
                exec(t, slots, st, nb, d);
            } else if let Some(e) = e {
                exec(e, slots, st, nb, d);
            }
        }
        TStmt::Case {
            sel,
            items,
            default,
            cmp_w,
            cmp_s,
        } => {
            let chosen = {
                let ev = Ev { slots, st };
                let v = ev.eval(sel, *cmp_w, *cmp_s, d);
                items
                    .iter()
                    .find(|(labels, _)| {
                        labels.iter().any(|l| {
                            let lv = ev.eval(&l.expr, *cmp_w, *cmp_s, d);
                            (v ^ lv) & l.care & mask(*cmp_w) == 0
                        })
                    })
                    .map(|(_, body)| body)
            };
            match (chosen, default) {
                (Some(body), _) => exec(body, slots, st, nb, d),
                (None, Some(def)) => exec(def, slots, st, nb, d),
                (None, None) => {}
            }
        }
        TStmt::Assign {
            target,
            rhs,
            nonblocking,
        } => {
            let mut writes = Vec::new();
            {
                let ev = Ev { slots, st };
                let lw = target.width();
                let v = ev.eval(rhs, lw.max(rhs.w), rhs.s, d) & mask(lw);
                ev.resolve(target, v, d, &mut writes);
            }
            if *nonblocking {
                nb.extend(writes);
            } else {
                writes.iter().for_each(|w| apply(st, w));
            }
        }
    }
}

/// Evaluates a constant expression (no net references).
pub(super) fn eval_const(e: &TExpr, cw: u32, cs: bool) -> u64 {
    Ev { slots: &[], st: &[] }.eval(e, cw, cs, &mut Diag::default())
}

/// A running simulation of one elaborated design.
#[derive(Debug, Clone)]
pub struct SimInstance {
    design: Arc<Design>,
    state: Vec<u64>,
    /// Async trigger levels seen at the end of the previous tick, by slot.
    prev_triggers: Vec<(usize, u64)>,
    diag: Diag,
    cycle: usize,
}

impl SimInstance {
    pub fn new(design: Design) -> Result<Self, HdlError> {
        let mut triggers: Vec<(usize, u64)> = Vec::new();
        for c in &design.clocked {
            if let Some((slot, _)) = c.async_trigger {
                if !triggers.iter().any(|(s, _)| *s == slot) {
                    triggers.push((slot, 0));
                }
            }
        }
        let mut inst = SimInstance {
            state: vec![0; design.state_len],
            design: Arc::new(design),
            prev_triggers: triggers,
            diag: Diag::default(),
            cycle: 0,
        };
        inst.settle()?;
        Ok(inst)
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn warnings(&self) -> &[String] {
        &self.diag.msgs
    }

    /// Current value of a scalar (non-memory) net.
    pub fn peek(&self, name: &str) -> Option<u64> {
        let slot = &self.design.slots[*self.design.names.get(name)?];
        (!slot.is_array).then(|| self.state[slot.base])
    }

    /// Binds input ports without advancing time. Ports not named keep their
    /// current values.
    pub fn set_inputs(&mut self, inputs: &PortValueMap) -> Result<(), HdlError> {
        for (name, &v) in inputs {
            let port = self
                .design
                .driven_inputs()
                .find(|p| &p.name == name)
                .ok_or_else(|| HdlError::UnknownInput(name.clone()))?;
            if v & !mask(port.width) != 0 {
                return Err(HdlError::Evaluation(format!(
                    "value {v} does not fit {}-bit input `{name}`",
                    port.width
                )));
            }
        }
        for (name, &v) in inputs {
            let base = self.design.slots[self.design.names[name]].base;
            self.state[base] = v;
        }
        Ok(())
    }

    /// Re-evaluates combinational logic to a fixpoint.
    pub fn settle(&mut self) -> Result<(), HdlError> {
        let design = Arc::clone(&self.design);
        let mut nb = Vec::new();
        for _ in 0..SETTLE_LIMIT {
            let before = self.state.clone();
            for p in &design.comb {
                match p {
                    CombProc::Assign(target, rhs) => {
                        let mut writes = Vec::new();
                        {
                            let ev = Ev {
                                slots: &design.slots,
                                st: &self.state,
                            };
                            let lw = target.width();
                            let v = ev.eval(rhs, lw.max(rhs.w), rhs.s, &mut self.diag) & mask(lw);
                            ev.resolve(target, v, &mut self.diag, &mut writes);
                        }
                        writes.iter().for_each(|w| apply(&mut self.state, w));
                    }
                    CombProc::Always(body) => exec(body, &design.slots, &mut self.state, &mut nb, &mut self.diag),
                }
            }
            if self.state == before {
                return Ok(());
            }
        }
        Err(HdlError::CombinationalLoop {
            iterations: SETTLE_LIMIT,
        })
    }

    pub fn outputs(&self) -> PortValueMap {
        self.design
            .outputs()
            .map(|p| (p.name.clone(), self.state[self.design.slots[p.slot].base]))
            .collect()
    }

    fn run_blocks(&mut self, which: impl Fn(usize) -> bool) -> Result<(), HdlError> {
        let design = Arc::clone(&self.design);
        let mut nb = Vec::new();
        for (i, blk) in design.clocked.iter().enumerate() {
            if which(i) {
                exec(&blk.body, &design.slots, &mut self.state, &mut nb, &mut self.diag);
            }
        }
        nb.iter().for_each(|w| apply(&mut self.state, w));
        self.settle()
    }

    /// Sets every async trigger's remembered level to its inactive side, so
    /// an asserted reset on the next tick counts as an edge before the clock.
    pub fn prime_async_triggers(&mut self) {
        for (slot, prev) in self.prev_triggers.iter_mut() {
            let edge = self
                .design
                .clocked
                .iter()
                .find_map(|c| c.async_trigger.filter(|(s, _)| s == slot).map(|(_, e)| e));
            *prev = match edge {
                Some(Edge::Neg) => 1,
                _ => 0,
            };
        }
    }

    /// One rising clock edge. `inputs` must cover every input port except
    /// the clock.
    pub fn tick(&mut self, inputs: &PortValueMap) -> Result<PortValueMap, HdlError> {
        if let Some(missing) = self.design.driven_inputs().find(|p| !inputs.contains_key(&p.name)) {
            return Err(HdlError::MissingInput(missing.name.clone()));
        }
        self.diag.cycle = Some(self.cycle);
        self.set_inputs(inputs)?;
        let clock_word = self.design.clock_slot.map(|s| self.design.slots[s].base);
        if let Some(w) = clock_word {
            self.state[w] = 0;
        }
        self.settle()?;

        let design = Arc::clone(&self.design);
        let mut fired = vec![false; design.clocked.len()];
        for (slot, prev) in self.prev_triggers.iter_mut() {
            let now = self.state[design.slots[*slot].base] & 1;
            for (i, blk) in design.clocked.iter().enumerate() {
                if let Some((s, edge)) = blk.async_trigger {
                    let edge_seen = match edge {
                        Edge::Pos => *prev == 0 && now == 1,
                        Edge::Neg => *prev == 1 && now == 0,
                    };
                    if s == *slot && edge_seen {
                        fired[i] = true;
                    }
                }
            }
            *prev = now;
        }
        if fired.iter().any(|f| *f) {
            self.run_blocks(|i| fired[i])?;
        }

        if let Some(w) = clock_word {
            self.state[w] = 1;
            self.run_blocks(|_| true)?;
        }
        self.cycle += 1;
        Ok(self.outputs())
    }

    pub fn run(&mut self, cycles: &[PortValueMap]) -> Result<CycleTrace, HdlError> {
        let mut trace = CycleTrace::new(
            self.design.driven_inputs().map(|p| p.name.clone()).collect(),
            self.design.outputs().map(|p| p.name.clone()).collect(),
        );
        for c in cycles {
            let outputs = self.tick(c)?;
            let inputs = trace.input_ports.iter().map(|n| (n.clone(), c[n])).collect();
            trace.push(inputs, outputs);
        }
        trace.warnings = self.diag.msgs.clone();
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::super::load;
    use super::*;

    fn pm(pairs: &[(&str, u64)]) -> PortValueMap {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn comb(src: &str, inputs: &[(&str, u64)], out: &str) -> u64 {
        let mut s = load(src, None).unwrap();
        s.set_inputs(&pm(inputs)).unwrap();
        s.settle().unwrap();
        s.peek(out).unwrap()
    }

    #[test]
    fn signed_compare_and_mixed() {
        let src = "module m(input signed [7:0] a, input signed [7:0] b, input [7:0] u, output lt, output ltu);\n\
                   assign lt = a < b;\nassign ltu = a < u;\nendmodule";
        // a = -1, b = 1: signed compare true; against unsigned u=1, a is 255 so false.
        assert_eq!(comb(src, &[("a", 0xFF), ("b", 1), ("u", 1)], "lt"), 1);
        assert_eq!(comb(src, &[("a", 0xFF), ("b", 1), ("u", 1)], "ltu"), 0);
    }

    #[test]
    fn context_width_carry() {
        let src = "module m(input [7:0] a, input [7:0] b, output [8:0] s, output [7:0] t);\n\
                   assign s = a + b;\nassign t = (a + b) >> 1;\nendmodule";
        assert_eq!(comb(src, &[("a", 200), ("b", 100)], "s"), 300);
        // Shift is evaluated at the 8-bit context width, so the carry is lost.
        assert_eq!(comb(src, &[("a", 200), ("b", 100)], "t"), 22);
    }

    #[test]
    fn sign_extension_in_signed_context() {
        let src = "module m(input signed [3:0] a, output signed [7:0] y, output [7:0] z);\n\
                   assign y = a;\nassign z = {4'b0, a};\nendmodule";
        assert_eq!(comb(src, &[("a", 0b1110)], "y"), 0xFE);
        assert_eq!(comb(src, &[("a", 0b1110)], "z"), 0x0E);
    }

    #[test]
    fn arithmetic_shift() {
        let src = "module m(input signed [7:0] a, output signed [7:0] y, output [7:0] z);\n\
                   assign y = a >>> 2;\nassign z = $unsigned(a) >>> 2;\nendmodule";
        assert_eq!(comb(src, &[("a", 0x80)], "y"), 0xE0);
        assert_eq!(comb(src, &[("a", 0x80)], "z"), 0x20);
    }

    #[test]
    fn division_by_zero_is_zero_with_warning() {
        let mut s = load("module m(input [3:0] a, input [3:0] b, output [3:0] q);\nassign q = a / b;\nendmodule", None).unwrap();
        s.set_inputs(&pm(&[("a", 9), ("b", 0)])).unwrap();
        s.settle().unwrap();
        assert_eq!(s.peek("q"), Some(0));
        assert!(s.warnings().iter().any(|w| w.contains("division by zero")));
    }

    #[test]
    fn selects_and_concat_targets() {
        let src = "module m(input [7:0] a, input [2:0] i, output [3:0] hi, output b, output [1:0] p, output [8:0] cs);\n\
                   assign hi = a[7:4];\nassign b = a[i];\nassign p = a[i +: 2];\n\
                   wire c; wire [7:0] s;\nassign {c, s} = a + 8'd1;\nassign cs = {c, s};\nendmodule";
        assert_eq!(comb(src, &[("a", 0xA5), ("i", 2)], "hi"), 0xA);
        assert_eq!(comb(src, &[("a", 0xA5), ("i", 2)], "b"), 1);
        assert_eq!(comb(src, &[("a", 0xA5), ("i", 2)], "p"), 0b01);
        assert_eq!(comb(src, &[("a", 0xFF), ("i", 0)], "cs"), 0x100);
    }

    #[test]
    fn casez_wildcards() {
        let src = "module m(input [3:0] r, output reg [1:0] y);\nalways @(*) begin\n\
                   casez (r)\n4'b1???: y = 2'd3;\n4'b01??: y = 2'd2;\n4'b001?: y = 2'd1;\ndefault: y = 2'd0;\nendcase\nend\nendmodule";
        assert_eq!(comb(src, &[("r", 0b1000)], "y"), 3);
        assert_eq!(comb(src, &[("r", 0b0110)], "y"), 2);
        assert_eq!(comb(src, &[("r", 0b0011)], "y"), 1);
        assert_eq!(comb(src, &[("r", 0b0001)], "y"), 0);
    }

    #[test]
    fn nonblocking_swap() {
        let src = "module m(input clk, input ld, output reg [3:0] a, output reg [3:0] b);\n\
                   always @(posedge clk) begin\nif (ld) begin a <= 4'd1; b <= 4'd2; end\nelse begin a <= b; b <= a; end\nend\nendmodule";
        let mut s = load(src, None).unwrap();
        s.tick(&pm(&[("ld", 1)])).unwrap();
        let out = s.tick(&pm(&[("ld", 0)])).unwrap();
        assert_eq!((out["a"], out["b"]), (2, 1));
    }

    #[test]
    fn async_reset_edge_mid_stream() {
        let src = "module m(input clk, input rst, output reg [3:0] q);\n\
                   always @(posedge clk or posedge rst)\nif (rst) q <= 4'd0; else q <= q + 4'd1;\nendmodule";
        let mut s = load(src, None).unwrap();
        assert_eq!(s.design().clock.as_deref(), Some("clk"));
        for _ in 0..3 {
            s.tick(&pm(&[("rst", 0)])).unwrap();
        }
        assert_eq!(s.peek("q"), Some(3));
        assert_eq!(s.tick(&pm(&[("rst", 1)])).unwrap()["q"], 0);
        assert_eq!(s.tick(&pm(&[("rst", 0)])).unwrap()["q"], 1);
    }

    #[test]
    fn memory_read_write() {
        let src = "module m(input clk, input we, input [1:0] wa, input [1:0] ra, input [7:0] d, output [7:0] q);\n\
                   reg [7:0] mem [0:3];\nalways @(posedge clk) if (we) mem[wa] <= d;\nassign q = mem[ra];\nendmodule";
        let mut s = load(src, None).unwrap();
        s.tick(&pm(&[("we", 1), ("wa", 2), ("ra", 0), ("d", 77)])).unwrap();
        let out = s.tick(&pm(&[("we", 0), ("wa", 0), ("ra", 2), ("d", 0)])).unwrap();
        assert_eq!(out["q"], 77);
    }

    #[test]
    fn missing_and_unknown_inputs() {
        let mut s = load("module m(input clk, input a, output reg y);\nalways @(posedge clk) y <= a;\nendmodule", None).unwrap();
        assert_eq!(s.tick(&pm(&[])), Err(HdlError::MissingInput("a".into())));
        assert_eq!(s.tick(&pm(&[("a", 1), ("clk", 1)])), Err(HdlError::UnknownInput("clk".into())));
        assert!(matches!(s.tick(&pm(&[("a", 2)])), Err(HdlError::Evaluation(_))));
    }
}
