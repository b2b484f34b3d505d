//! Elaboration: width/sign typing, constant folding, driver and clock checks.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{Literal, Pos};
use super::HdlError;
use crate::specmodel::Direction;
use crate::value::{decode, mask, MAX_WIDTH};

#[derive(Debug, Clone)]
pub struct Slot {
    pub name: String,
    pub width: u32,
    pub signed: bool,
    /// Declared index of bit 0.
    pub lsb: i64,
    /// `[msb:lsb]` with msb >= lsb.
    pub descending: bool,
    pub depth: usize,
    pub is_array: bool,
    pub array_lo: i64,
    /// Offset of the first word in the state vector.
    pub base: usize,
    pub kind: NetKind,
    pub direction: Option<Direction>,
}

impl Slot {
    /// Offset of declared bit `idx` from bit 0.
    pub fn bit_offset(&self, idx: i128) -> i128 {
        if self.descending {
            idx - self.lsb as i128
        } else {
            self.lsb as i128 - idx
        }
    }
}

#[derive(Debug, Clone)]
pub struct TExpr {
    pub kind: EK,
    /// Self-determined width.
    pub w: u32,
    /// Self-determined signedness.
    pub s: bool,
}

#[derive(Debug, Clone)]
pub enum EK {
    Const(u64),
    Var(usize),
    /// Memory word read.
    Mem(usize, Box<TExpr>),
    Select {
        slot: usize,
        elem: Option<Box<TExpr>>,
        sel: Sel,
    },
    Unary(UnaryOp, Box<TExpr>),
    Binary(BinaryOp, Box<TExpr>, Box<TExpr>),
    Ternary(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Concat(Vec<TExpr>),
    Repeat(u32, Box<TExpr>),
    /// `$signed` / `$unsigned`: reinterpretation only.
    Cast(Box<TExpr>),
}

#[derive(Debug, Clone)]
pub enum Sel {
    Bit(Box<TExpr>),
    /// Constant part select, already converted to (offset, width).
    Part { offset: i64, width: u32 },
    Indexed { start: Box<TExpr>, width: u32, up: bool },
}

#[derive(Debug, Clone)]
pub enum Target {
    Var {
        slot: usize,
        elem: Option<TExpr>,
        sel: Option<Sel>,
        w: u32,
    },
    Concat(Vec<Target>),
}

impl Target {
    pub fn width(&self) -> u32 {
        match self {
            Target::Var { w, .. } => *w,
            Target::Concat(v) => v.iter().map(Target::width).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseLabel {
    pub expr: TExpr,
    pub care: u64,
}

#[derive(Debug, Clone)]
pub enum TStmt {
    Block(Vec<TStmt>),
    If(TExpr, Box<TStmt>, Option<Box<TStmt>>),
    Case {
        sel: TExpr,
        items: Vec<(Vec<CaseLabel>, TStmt)>,
        default: Option<Box<TStmt>>,
        cmp_w: u32,
        cmp_s: bool,
    },
    Assign {
        target: Target,
        rhs: TExpr,
        nonblocking: bool,
    },
}

#[derive(Debug, Clone)]
pub enum CombProc {
    Assign(Target, TExpr),
    Always(TStmt),
}

#[derive(Debug, Clone)]
pub struct Clocked {
    pub body: TStmt,
    /// Asynchronous trigger: slot and active edge.
    pub async_trigger: Option<(usize, Edge)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortInfo {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    pub signed: bool,
    pub slot: usize,
}

/// An elaborated, immutable netlist.
#[derive(Debug, Clone)]
pub struct Design {
    pub module_name: String,
    pub ports: Vec<PortInfo>,
    pub clock: Option<String>,
    pub(crate) clock_slot: Option<usize>,
    pub(crate) slots: Vec<Slot>,
    pub(crate) names: HashMap<String, usize>,
    pub(crate) comb: Vec<CombProc>,
    pub(crate) clocked: Vec<Clocked>,
    pub(crate) state_len: usize,
}

impl Design {
    pub fn inputs(&self) -> impl Iterator<Item = &PortInfo> {
        self.ports.iter().filter(|p| p.direction == Direction::In)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortInfo> {
        self.ports.iter().filter(|p| p.direction == Direction::Out)
    }

    /// Input ports the caller must drive on every tick.
    pub fn driven_inputs(&self) -> impl Iterator<Item = &PortInfo> {
        self.inputs().filter(move |p| Some(&p.name) != self.clock.as_ref())
    }

    pub fn async_resets(&self) -> Vec<(String, Edge)> {
        let mut out: Vec<(String, Edge)> = Vec::new();
        for c in &self.clocked {
            if let Some((slot, edge)) = c.async_trigger {
                let name = self.slots[slot].name.clone();
                if !out.iter().any(|(n, _)| *n == name) {
                    out.push((name, edge));
                }
            }
        }
        out
    }
}

struct Param {
    value: u64,
    w: u32,
    s: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ProcKind {
    Cont,
    Comb,
    Clocked,
}

struct Builder {
    params: HashMap<String, Param>,
    slots: Vec<Slot>,
    names: HashMap<String, usize>,
}

fn sem(msg: impl Into<String>, pos: Pos) -> HdlError {
    HdlError::Semantic {
        msg: msg.into(),
        line: pos.line,
    }
}

pub fn build(ast: &HdlAst, clock_override: Option<&str>) -> Result<Design, HdlError> {
    let mut b = Builder {
        params: HashMap::new(),
        slots: Vec::new(),
        names: HashMap::new(),
    };
    for p in &ast.params {
        if b.params.contains_key(&p.name) {
            return Err(sem(format!("parameter `{}` declared twice", p.name), p.pos));
        }
        let v = b.expr(&p.value)?;
        if !is_const(&v) {
            return Err(sem(format!("parameter `{}` is not constant", p.name), p.pos));
        }
        let (w, s) = match &p.range {
            Some((m, l)) => (b.range_width(m, l, p.pos)?.0, p.signed),
            None => (v.w, v.s || p.signed),
        };
        let value = super::sim::eval_const(&v, w.max(v.w), v.s) & mask(w);
        b.params.insert(p.name.clone(), Param { value, w, s });
    }

    let mut base = 0;
    for n in &ast.nets {
        if b.params.contains_key(&n.name) || b.names.contains_key(&n.name) {
            return Err(sem(format!("`{}` declared twice", n.name), n.pos));
        }
        let (width, lsb, descending) = match &n.range {
            Some((m, l)) => b.range_width(m, l, n.pos)?,
            None => (1, 0, true),
        };
        let (depth, array_lo) = match &n.array {
            Some((a, z)) => {
                if n.kind != NetKind::Reg {
                    return Err(sem(format!("wire array `{}`", n.name), n.pos));
                }
                let a = b.const_int(a)?;
                let z = b.const_int(z)?;
                let depth = (a - z).unsigned_abs() as usize + 1;
                if depth > 1 << 16 {
                    return Err(HdlError::Unsupported {
                        construct: format!("memory `{}` with {depth} words", n.name),
                        line: n.pos.line,
                    });
                }
                (depth, a.min(z) as i64)
            }
            None => (1, 0),
        };
        if n.direction == Some(Direction::In) && n.kind == NetKind::Reg {
            return Err(sem(format!("input `{}` declared reg", n.name), n.pos));
        }
        b.names.insert(n.name.clone(), b.slots.len());
        b.slots.push(Slot {
            name: n.name.clone(),
            width,
            signed: n.signed,
            lsb,
            descending,
            depth,
            is_array: n.array.is_some(),
            array_lo,
            base,
            kind: n.kind,
            direction: n.direction,
        });
        base += depth;
    }

    let mut ports = Vec::new();
    for name in &ast.port_order {
        let Some(&slot) = b.names.get(name) else {
            return Err(HdlError::Semantic {
                msg: format!("port `{name}` has no direction declaration"),
                line: 1,
            });
        };
        let s = &b.slots[slot];
        let Some(direction) = s.direction else {
            return Err(HdlError::Semantic {
                msg: format!("port `{name}` has no direction declaration"),
                line: 1,
            });
        };
        if s.is_array {
            return Err(HdlError::Unsupported {
                construct: format!("array port `{name}`"),
                line: 1,
            });
        }
        ports.push(PortInfo {
            name: name.clone(),
            direction,
            width: s.width,
            signed: s.signed,
            slot,
        });
    }
    if let Some(n) = ast.nets.iter().find(|n| n.direction.is_some() && !ast.port_order.contains(&n.name)) {
        return Err(sem(format!("`{}` has a direction but is not a port", n.name), n.pos));
    }

    // Each process records the bits it drives, for the multiple-driver check.
    let mut claims: Vec<Vec<(usize, u64, Pos)>> = Vec::new();
    let mut comb = Vec::new();
    let mut clocked_src = Vec::new();
    for a in &ast.assigns {
        let target = b.target(&a.lhs, ProcKind::Cont)?;
        let rhs = b.expr(&a.rhs)?;
        let mut c = Vec::new();
        b.claim(&target, a.pos, &mut c);
        claims.push(c);
        comb.push(CombProc::Assign(target, rhs));
    }
    for blk in &ast.always {
        let kind = match blk.sensitivity {
            Sensitivity::Combinational => ProcKind::Comb,
            Sensitivity::Edges(_) => ProcKind::Clocked,
        };
        let body = b.stmt(&blk.body, kind)?;
        let mut c = Vec::new();
        b.claim_stmt(&body, blk.pos, &mut c);
        claims.push(c);
        match kind {
            ProcKind::Clocked => clocked_src.push((blk, body)),
            _ => comb.push(CombProc::Always(body)),
        }
    }
    for (i, ci) in claims.iter().enumerate() {
        for (slot, m, _) in ci {
            for cj in &claims[i + 1..] {
                if let Some((_, _, pos)) = cj.iter().find(|(s2, m2, _)| s2 == slot && m2 & m != 0) {
                    return Err(HdlError::MultipleDrivers {
                        net: b.slots[*slot].name.clone(),
                        line: pos.line,
                    });
                }
            }
        }
    }

    // Clock inference.
    let mut clock: Option<String> = clock_override.map(str::to_string);
    let mut clocked = Vec::new();
    for (blk, body) in clocked_src {
        let Sensitivity::Edges(edges) = &blk.sensitivity else { unreachable!() };
        for (_, sig) in edges {
            if !b.names.contains_key(sig) {
                return Err(HdlError::Undeclared {
                    name: sig.clone(),
                    line: blk.pos.line,
                });
            }
        }
        let (clk, clk_edge, trigger) = match edges.as_slice() {
            [(e, c)] => {
                if let Some(ov) = clock_override {
                    if ov != c {
                        return Err(HdlError::Unsupported {
                            construct: format!("block clocked by `{c}` instead of `{ov}`"),
                            line: blk.pos.line,
                        });
                    }
                }
                (c.clone(), *e, None)
            }
            [(e1, s1), (e2, s2)] => {
                let reset_is_first = match clock_override {
                    Some(ov) if ov == s2 => true,
                    Some(ov) if ov == s1 => false,
                    Some(ov) => {
                        return Err(HdlError::Unsupported {
                            construct: format!("block not clocked by `{ov}`"),
                            line: blk.pos.line,
                        })
                    }
                    None => {
                        let tested = top_if_idents(&blk.body);
                        match (tested.contains(s1), tested.contains(s2)) {
                            (true, false) => true,
                            (false, true) => false,
                            _ => {
                                return Err(HdlError::Unsupported {
                                    construct: "cannot tell clock from asynchronous reset".into(),
                                    line: blk.pos.line,
                                })
                            }
                        }
                    }
                };
                if reset_is_first {
                    (s2.clone(), *e2, Some((b.names[s1], *e1)))
                } else {
                    (s1.clone(), *e1, Some((b.names[s2], *e2)))
                }
            }
            _ => {
                return Err(HdlError::Unsupported {
                    construct: "more than one asynchronous control".into(),
                    line: blk.pos.line,
                })
            }
        };
        if clk_edge == Edge::Neg {
            return Err(HdlError::Unsupported {
                construct: "negedge clock".into(),
                line: blk.pos.line,
            });
        }
        match &clock {
            Some(c) if *c != clk => {
                return Err(HdlError::Unsupported {
                    construct: format!("multiple clocks (`{c}`, `{clk}`)"),
                    line: blk.pos.line,
                })
            }
            _ => clock = Some(clk),
        }
        if let Some((slot, _)) = trigger {
            if b.slots[slot].direction != Some(Direction::In) || b.slots[slot].width != 1 {
                return Err(HdlError::Unsupported {
                    construct: format!("asynchronous control `{}` that is not a 1-bit input", b.slots[slot].name),
                    line: blk.pos.line,
                });
            }
        }
        clocked.push(Clocked {
            body,
            async_trigger: trigger,
        });
    }
    let clock_slot = match &clock {
        Some(c) => {
            let Some(port) = ports.iter().find(|p| &p.name == c) else {
                return Err(HdlError::Semantic {
                    msg: format!("clock `{c}` is not an input port"),
                    line: 1,
                });
            };
            if port.direction != Direction::In || port.width != 1 {
                return Err(HdlError::Semantic {
                    msg: format!("clock `{c}` must be a 1-bit input"),
                    line: 1,
                });
            }
            Some(port.slot)
        }
        None => None,
    };
    for ci in &claims {
        if let Some((slot, _, pos)) = ci.iter().find(|(s, _, _)| b.slots[*s].direction == Some(Direction::In)) {
            return Err(sem(format!("assignment to input `{}`", b.slots[*slot].name), *pos));
        }
    }

    Ok(Design {
        module_name: ast.module_name.clone(),
        ports,
        clock,
        clock_slot,
        slots: b.slots,
        names: b.names,
        comb,
        clocked,
        state_len: base,
    })
}

/// Identifiers in the condition of the outermost `if` of a block body.
fn top_if_idents(body: &Stmt) -> Vec<String> {
    let mut s = body;
    while let Stmt::Block(v) = s {
        match v.as_slice() {
            [only] => s = only,
            _ => break,
        }
    }
    let mut out = Vec::new();
    if let Stmt::If { cond, .. } = s {
        collect_idents(cond, &mut out);
    }
    out
}

fn collect_idents(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Ident(n, _) => out.push(n.clone()),
        Expr::Number(..) => {}
        Expr::Index(a, b) => {
            collect_idents(a, out);
            collect_idents(b, out);
        }
        Expr::Slice(a, b, c) | Expr::Ternary(a, b, c) => {
            collect_idents(a, out);
            collect_idents(b, out);
            collect_idents(c, out);
        }
        Expr::IndexedSlice { base, start, width, .. } => {
            collect_idents(base, out);
            collect_idents(start, out);
            collect_idents(width, out);
        }
        Expr::Unary(_, a) | Expr::Signed(a) | Expr::Unsigned(a) => collect_idents(a, out),
        Expr::Binary(_, a, b) => {
            collect_idents(a, out);
            collect_idents(b, out);
        }
        Expr::Concat(v) => v.iter().for_each(|x| collect_idents(x, out)),
        Expr::Repeat(n, v) => {
            collect_idents(n, out);
            v.iter().for_each(|x| collect_idents(x, out));
        }
    }
}

pub fn is_const(e: &TExpr) -> bool {
    match &e.kind {
        EK::Const(_) => true,
        EK::Var(_) | EK::Mem(..) | EK::Select { .. } => false,
        EK::Unary(_, a) | EK::Cast(a) | EK::Repeat(_, a) => is_const(a),
        EK::Binary(_, a, b) => is_const(a) && is_const(b),
        EK::Ternary(a, b, c) => is_const(a) && is_const(b) && is_const(c),
        EK::Concat(v) => v.iter().all(is_const),
    }
}

fn check_width(w: u32, pos: Pos) -> Result<u32, HdlError> {
    if w == 0 || w > MAX_WIDTH {
        Err(HdlError::Unsupported {
            construct: format!("{w}-bit value (limit is {MAX_WIDTH})"),
            line: pos.line,
        })
    } else {
        Ok(w)
    }
}

impl Builder {
    fn const_int(&self, e: &Expr) -> Result<i128, HdlError> {
        let t = self.expr(e)?;
        if !is_const(&t) {
            return Err(sem("expression must be constant", e.pos()));
        }
        Ok(decode(super::sim::eval_const(&t, t.w, t.s), t.w, t.s))
    }

    /// Returns (width, lsb, descending).
    fn range_width(&self, msb: &Expr, lsb: &Expr, pos: Pos) -> Result<(u32, i64, bool), HdlError> {
        let m = self.const_int(msb)?;
        let l = self.const_int(lsb)?;
        let w = (m - l).unsigned_abs() + 1;
        if w > MAX_WIDTH as u128 {
            return Err(HdlError::Unsupported {
                construct: format!("{w}-bit net (limit is {MAX_WIDTH})"),
                line: pos.line,
            });
        }
        Ok((w as u32, l as i64, m >= l))
    }

    fn lookup(&self, name: &str, pos: Pos) -> Result<usize, HdlError> {
        self.names.get(name).copied().ok_or_else(|| HdlError::Undeclared {
            name: name.to_string(),
            line: pos.line,
        })
    }

    fn literal(&self, lit: &Literal, pos: Pos, allow_wild: bool) -> Result<TExpr, HdlError> {
        let w = match lit.width {
            Some(w) => w,
            None => 32.max(64 - lit.value.leading_zeros()),
        };
        if lit.care & mask(w) != mask(w) && !allow_wild {
            return Err(HdlError::Unsupported {
                construct: "x/z literal outside a case label".into(),
                line: pos.line,
            });
        }
        Ok(TExpr {
            kind: EK::Const(lit.value & mask(w)),
            w,
            s: lit.signed,
        })
    }

    fn expr(&self, e: &Expr) -> Result<TExpr, HdlError> {
        let t = match e {
            Expr::Number(lit, pos) => self.literal(lit, *pos, false)?,
            Expr::Ident(name, pos) => {
                if let Some(p) = self.params.get(name) {
                    return Ok(TExpr {
                        kind: EK::Const(p.value),
                        w: p.w,
                        s: p.s,
                    });
                }
                let slot = self.lookup(name, *pos)?;
                let s = &self.slots[slot];
                if s.is_array {
                    return Err(sem(format!("memory `{name}` used without an index"), *pos));
                }
                TExpr {
                    kind: EK::Var(slot),
                    w: s.width,
                    s: s.signed,
                }
            }
            Expr::Index(..) | Expr::Slice(..) | Expr::IndexedSlice { .. } => self.select(e)?,
            Expr::Unary(op, a) => {
                let a = self.expr(a)?;
                let (w, s) = match op {
                    UnaryOp::Plus | UnaryOp::Neg | UnaryOp::Not => (a.w, a.s),
                    _ => (1, false),
                };
                TExpr {
                    kind: EK::Unary(*op, Box::new(a)),
                    w,
                    s,
                }
            }
            Expr::Binary(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                use BinaryOp::*;
                let (w, s) = match op {
                    Add | Sub | Mul | Div | Mod | And | Or | Xor | Xnor => (a.w.max(b.w), a.s && b.s),
                    Shl | Shr | AShl | AShr => (a.w, a.s),
                    _ => (1, false),
                };
                TExpr {
                    kind: EK::Binary(*op, Box::new(a), Box::new(b)),
                    w,
                    s,
                }
            }
            Expr::Ternary(c, t, f) => {
                let c = self.expr(c)?;
                let t = self.expr(t)?;
                let f = self.expr(f)?;
                let (w, s) = (t.w.max(f.w), t.s && f.s);
                TExpr {
                    kind: EK::Ternary(Box::new(c), Box::new(t), Box::new(f)),
                    w,
                    s,
                }
            }
            Expr::Concat(parts) => {
                let parts = parts.iter().map(|p| self.concat_part(p)).collect::<Result<Vec<_>, _>>()?;
                let w = parts.iter().map(|p| p.w).sum();
                TExpr {
                    kind: EK::Concat(parts),
                    w: check_width(w, e.pos())?,
                    s: false,
                }
            }
            Expr::Repeat(n, parts) => {
                let count = self.const_int(n)?;
                if count < 1 {
                    return Err(sem("replication count must be positive", e.pos()));
                }
                let parts = parts.iter().map(|p| self.concat_part(p)).collect::<Result<Vec<_>, _>>()?;
                let iw: u32 = parts.iter().map(|p| p.w).sum();
                let inner = TExpr {
                    kind: EK::Concat(parts),
                    w: check_width(iw, e.pos())?,
                    s: false,
                };
                let total = (iw as i128) * count;
                if total > MAX_WIDTH as i128 {
                    return Err(HdlError::Unsupported {
                        construct: format!("{total}-bit replication (limit is {MAX_WIDTH})"),
                        line: e.pos().line,
                    });
                }
                TExpr {
                    kind: EK::Repeat(count as u32, Box::new(inner)),
                    w: total as u32,
                    s: false,
                }
            }
            Expr::Signed(a) | Expr::Unsigned(a) => {
                let a = self.expr(a)?;
                let w = a.w;
                TExpr {
                    kind: EK::Cast(Box::new(a)),
                    w,
                    s: matches!(e, Expr::Signed(_)),
                }
            }
        };
        Ok(t)
    }

    fn concat_part(&self, e: &Expr) -> Result<TExpr, HdlError> {
        if let Expr::Number(lit, pos) = e {
            if lit.width.is_none() {
                return Err(sem("unsized literal in concatenation", *pos));
            }
        }
        self.expr(e)
    }

    /// Splits a select chain into (slot, memory element index, select).
    fn select_parts(&self, e: &Expr) -> Result<(usize, Option<TExpr>, Option<Sel>, u32, Pos), HdlError> {
        let (base, sel_expr): (&Expr, &Expr) = match e {
            Expr::Index(b, _) | Expr::Slice(b, _, _) | Expr::IndexedSlice { base: b, .. } => (b, e),
            Expr::Ident(name, pos) => {
                let slot = self.lookup(name, *pos)?;
                let s = &self.slots[slot];
                if s.is_array {
                    return Err(sem(format!("memory `{name}` used without an index"), *pos));
                }
                return Ok((slot, None, None, s.width, *pos));
            }
            other => return Err(sem("select applied to an expression", other.pos())),
        };
        let pos = e.pos();
        // Memory word: `mem[i]` optionally followed by one more select.
        let (slot, elem) = match base {
            Expr::Ident(name, p) => {
                let slot = self.lookup(name, *p)?;
                if self.slots[slot].is_array {
                    if let Expr::Index(_, idx) = sel_expr {
                        let w = self.slots[slot].width;
                        return Ok((slot, Some(self.expr(idx)?), None, w, pos));
                    }
                    return Err(sem(format!("part select of memory `{name}`"), pos));
                }
                (slot, None)
            }
            Expr::Index(inner, idx) => match inner.as_ref() {
                Expr::Ident(name, p) => {
                    let slot = self.lookup(name, *p)?;
                    if !self.slots[slot].is_array {
                        return Err(sem(format!("double select of `{name}`"), pos));
                    }
                    (slot, Some(self.expr(idx)?))
                }
                _ => return Err(sem("unsupported select chain", pos)),
            },
            _ => return Err(sem("unsupported select chain", pos)),
        };
        let s = &self.slots[slot];
        let (sel, w) = match sel_expr {
            Expr::Index(_, idx) => (Sel::Bit(Box::new(self.expr(idx)?)), 1),
            Expr::Slice(_, m, l) => {
                let m = self.const_int(m)?;
                let l = self.const_int(l)?;
                if (m >= l) != s.descending && m != l {
                    return Err(sem(format!("part select direction differs from `{}` declaration", s.name), pos));
                }
                let (om, ol) = (s.bit_offset(m), s.bit_offset(l));
                let (lo, hi) = (om.min(ol), om.max(ol));
                if lo < 0 || hi >= s.width as i128 {
                    return Err(sem(format!("part select [{m}:{l}] outside `{}`", s.name), pos));
                }
                let width = (hi - lo + 1) as u32;
                (Sel::Part { offset: lo as i64, width }, width)
            }
            Expr::IndexedSlice { start, width, up, .. } => {
                let wv = self.const_int(width)?;
                if wv < 1 || wv > s.width as i128 {
                    return Err(sem("indexed part select width out of range", pos));
                }
                let start = self.expr(start)?;
                (
                    Sel::Indexed {
                        start: Box::new(start),
                        width: wv as u32,
                        up: *up,
                    },
                    wv as u32,
                )
            }
            _ => unreachable!(),
        };
        Ok((slot, elem, Some(sel), w, pos))
    }

    fn select(&self, e: &Expr) -> Result<TExpr, HdlError> {
        let (slot, elem, sel, w, _) = self.select_parts(e)?;
        let s = &self.slots[slot];
        Ok(match (elem, sel) {
            (Some(idx), None) => TExpr {
                kind: EK::Mem(slot, Box::new(idx)),
                w,
                s: s.signed,
            },
            (None, None) => TExpr {
                kind: EK::Var(slot),
                w,
                s: s.signed,
            },
            (elem, Some(sel)) => TExpr {
                kind: EK::Select {
                    slot,
                    elem: elem.map(Box::new),
                    sel,
                },
                w,
                s: false,
            },
        })
    }

    fn target(&self, e: &Expr, kind: ProcKind) -> Result<Target, HdlError> {
        if let Expr::Concat(parts) = e {
            return Ok(Target::Concat(
                parts.iter().map(|p| self.target(p, kind)).collect::<Result<_, _>>()?,
            ));
        }
        if let Expr::Ident(name, pos) = e {
            if self.params.contains_key(name) {
                return Err(sem(format!("assignment to parameter `{name}`"), *pos));
            }
        }
        let (slot, elem, sel, w, pos) = match e {
            Expr::Ident(..) | Expr::Index(..) | Expr::Slice(..) | Expr::IndexedSlice { .. } => self.select_parts(e)?,
            other => return Err(sem("invalid assignment target", other.pos())),
        };
        let s = &self.slots[slot];
        match (kind, s.kind) {
            (ProcKind::Cont, NetKind::Reg) => {
                return Err(sem(format!("continuous assignment to reg `{}`", s.name), pos))
            }
            (ProcKind::Comb | ProcKind::Clocked, NetKind::Wire) => {
                return Err(sem(format!("procedural assignment to wire `{}`", s.name), pos))
            }
            _ => {}
        }
        Ok(Target::Var { slot, elem, sel, w })
    }

    fn stmt(&self, st: &Stmt, kind: ProcKind) -> Result<TStmt, HdlError> {
        Ok(match st {
            Stmt::Empty => TStmt::Block(Vec::new()),
            Stmt::Block(v) => TStmt::Block(v.iter().map(|s| self.stmt(s, kind)).collect::<Result<_, _>>()?),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => TStmt::If(
                self.expr(cond)?,
                Box::new(self.stmt(then_branch, kind)?),
                match else_branch {
                    Some(e) => Some(Box::new(self.stmt(e, kind)?)),
                    None => None,
                },
            ),
            Stmt::Case {
                kind: ck,
                selector,
                items,
                default,
            } => {
                let sel = self.expr(selector)?;
                let mut cmp_w = sel.w;
                let mut cmp_s = sel.s;
                let mut titems = Vec::new();
                for (labels, body) in items {
                    let mut tl = Vec::new();
                    for l in labels {
                        let label = match l {
                            Expr::Number(lit, pos) => {
                                let t = self.literal(lit, *pos, *ck != CaseKind::Case)?;
                                let care = lit.care | !mask(t.w);
                                CaseLabel { expr: t, care }
                            }
                            other => CaseLabel {
                                expr: self.expr(other)?,
                                care: u64::MAX,
                            },
                        };
                        cmp_w = cmp_w.max(label.expr.w);
                        cmp_s &= label.expr.s;
                        tl.push(label);
                    }
                    titems.push((tl, self.stmt(body, kind)?));
                }
                TStmt::Case {
                    sel,
                    items: titems,
                    default: match default {
                        Some(d) => Some(Box::new(self.stmt(d, kind)?)),
                        None => None,
                    },
                    cmp_w,
                    cmp_s,
                }
            }
            Stmt::Assign {
                lhs,
                rhs,
                nonblocking,
                pos,
            } => {
                if *nonblocking && kind != ProcKind::Clocked {
                    return Err(sem("nonblocking assignment in combinational block", *pos));
                }
                TStmt::Assign {
                    target: self.target(lhs, kind)?,
                    rhs: self.expr(rhs)?,
                    nonblocking: *nonblocking,
                }
            }
        })
    }

    fn claim(&self, t: &Target, pos: Pos, out: &mut Vec<(usize, u64, Pos)>) {
        match t {
            Target::Concat(v) => v.iter().for_each(|x| self.claim(x, pos, out)),
            Target::Var { slot, elem, sel, .. } => {
                let s = &self.slots[*slot];
                let full = mask(s.width);
                let m = if elem.is_some() {
                    full
                } else {
                    match sel {
                        None => full,
                        Some(Sel::Part { offset, width }) => mask(*width) << *offset,
                        Some(Sel::Bit(idx)) if is_const(idx) => {
                            let v = decode(super::sim::eval_const(idx, idx.w, idx.s), idx.w, idx.s);
                            let off = s.bit_offset(v);
                            if (0..s.width as i128).contains(&off) {
                                1 << off
                            } else {
                                0
                            }
                        }
                        Some(_) => full,
                    }
                };
                if m != 0 {
                    out.push((*slot, m, pos));
                }
            }
        }
    }

    fn claim_stmt(&self, st: &TStmt, pos: Pos, out: &mut Vec<(usize, u64, Pos)>) {
        match st {
            TStmt::Block(v) => v.iter().for_each(|s| self.claim_stmt(s, pos, out)),
            TStmt::If(_, t, e) => {
                self.claim_stmt(t, pos, out);
                if let Some(e) = e {
                    self.claim_stmt(e, pos, out);
                }
            }
            TStmt::Case { items, default, .. } => {
                items.iter().for_each(|(_, s)| self.claim_stmt(s, pos, out));
                if let Some(d) = default {
                    self.claim_stmt(d, pos, out);
                }
            }
            TStmt::Assign { target, .. } => self.claim(target, pos, out),
        }
    }
}
