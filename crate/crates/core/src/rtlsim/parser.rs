//! Recursive-descent parser for the supported Verilog subset.

use super::ast::*;
use super::lexer::{lex, Pos, Tok, Token};
use super::HdlError;
use crate::specmodel::Direction;

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "initial", "fork", "join", "task", "endtask", "function", "endfunction", "generate",
    "endgenerate", "genvar", "for", "while", "repeat", "forever", "integer", "real", "time",
    "logic", "always_ff", "always_comb", "always_latch", "interface", "package", "wait",
    "disable", "defparam", "specify", "primitive", "tri", "supply0", "supply1", "assert",
    "deassign", "force", "release", "inout",
];

pub struct Parser {
    toks: Vec<Token>,
    at: usize,
}

pub fn parse(src: &str) -> Result<HdlAst, HdlError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let ast = p.module()?;
    if !matches!(p.peek(), Tok::Eof) {
        if p.is_kw("module") {
            return Err(p.unsupported("multiple modules per source"));
        }
        return Err(p.expected("end of input"));
    }
    Ok(ast)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expected(&self, what: &str) -> HdlError {
        let pos = self.pos();
        HdlError::Parse {
            line: pos.line,
            col: pos.col,
            expected: what.to_string(),
            found: self.peek().describe(),
        }
    }

    fn unsupported(&self, construct: &str) -> HdlError {
        HdlError::Unsupported {
            construct: construct.to_string(),
            line: self.pos().line,
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), HdlError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), HdlError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{k}`")))
        }
    }

    fn ident(&mut self) -> Result<String, HdlError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.advance();
                Ok(s)
            }
            Tok::Ident(s) if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) => Err(self.unsupported(&s)),
            _ => Err(self.expected("identifier")),
        }
    }

    fn check_unsupported_kw(&self) -> Result<(), HdlError> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(self.unsupported(s));
            }
        }
        if self.is_sym("#") {
            return Err(self.unsupported("delay control"));
        }
        Ok(())
    }

    fn module(&mut self) -> Result<HdlAst, HdlError> {
        if self.is_kw("macromodule") {
            return Err(self.unsupported("macromodule"));
        }
        self.check_unsupported_kw()?;
        self.expect_kw("module")?;
        let module_name = self.ident()?;
        let mut ast = HdlAst {
            module_name,
            port_order: Vec::new(),
            params: Vec::new(),
            nets: Vec::new(),
            assigns: Vec::new(),
            always: Vec::new(),
        };
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            let mut signed = false;
            let mut range = None;
            loop {
                if self.eat_kw("parameter") || self.eat_kw("localparam") {
                    self.eat_kw("integer");
                    signed = self.eat_kw("signed");
                    range = self.opt_range()?;
                }
                let pos = self.pos();
                let name = self.ident()?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                ast.params.push(ParamDecl { name, range: range.clone(), signed, value, pos });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
                    self.ansi_ports(&mut ast)?;
                } else {
                    loop {
                        ast.port_order.push(self.ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        while !self.eat_kw("endmodule") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.expected("`endmodule`"));
            }
            self.module_item(&mut ast)?;
        }
        Ok(ast)
    }

    fn ansi_ports(&mut self, ast: &mut HdlAst) -> Result<(), HdlError> {
        let mut current: Option<(Direction, NetKind, bool, Option<(Expr, Expr)>)> = None;
        loop {
            self.check_unsupported_kw()?;
            if self.is_kw("input") || self.is_kw("output") {
                let dir = if self.eat_kw("input") {
                    Direction::In
                } else {
                    self.advance();
                    Direction::Out
                };
                let (kind, signed, range) = self.net_type_and_range(NetKind::Wire)?;
                current = Some((dir, kind, signed, range));
            }
            let (dir, kind, signed, range) = current.clone().ok_or_else(|| self.expected("port direction"))?;
            let pos = self.pos();
            let name = self.ident()?;
            ast.port_order.push(name.clone());
            ast.nets.push(NetDecl {
                name,
                kind,
                direction: Some(dir),
                signed,
                range,
                array: None,
                pos,
            });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    /// `[wire|reg] [signed] [range]`.
    fn net_type_and_range(&mut self, default: NetKind) -> Result<(NetKind, bool, Option<(Expr, Expr)>), HdlError> {
        let mut kind = default;
        if self.eat_kw("wire") {
            kind = NetKind::Wire;
        } else if self.eat_kw("reg") {
            kind = NetKind::Reg;
        }
        self.check_unsupported_kw()?;
        let signed = self.eat_kw("signed");
        self.eat_kw("unsigned");
        let range = self.opt_range()?;
        Ok((kind, signed, range))
    }

    fn opt_range(&mut self) -> Result<Option<(Expr, Expr)>, HdlError> {
        if self.eat_sym("[") {
            let msb = self.expr()?;
            self.expect_sym(":")?;
            let lsb = self.expr()?;
            self.expect_sym("]")?;
            Ok(Some((msb, lsb)))
        } else {
            Ok(None)
        }
    }

    fn param_group(&mut self, ast: &mut HdlAst) -> Result<(), HdlError> {
        self.eat_kw("integer");
        let signed = self.eat_kw("signed");
        let range = self.opt_range()?;
        loop {
            let pos = self.pos();
            let name = self.ident()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            ast.params.push(ParamDecl { name, range: range.clone(), signed, value, pos });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn module_item(&mut self, ast: &mut HdlAst) -> Result<(), HdlError> {
        self.check_unsupported_kw()?;
        let pos = self.pos();
        if self.is_kw("input") || self.is_kw("output") {
            let dir = if self.eat_kw("input") {
                Direction::In
            } else {
                self.advance();
                Direction::Out
            };
            let (kind, signed, range) = self.net_type_and_range(NetKind::Wire)?;
            loop {
                let pos = self.pos();
                let name = self.ident()?;
                if !ast.port_order.contains(&name) {
                    return Err(HdlError::Semantic {
                        msg: format!("`{name}` declared as port but missing from module header"),
                        line: pos.line,
                    });
                }
                match ast.nets.iter_mut().find(|n| n.name == name) {
                    Some(existing) => {
                        existing.direction = Some(dir);
                        if kind == NetKind::Reg {
                            existing.kind = NetKind::Reg;
                        }
                        existing.signed |= signed;
                        if range.is_some() {
                            existing.range = range.clone();
                        }
                    }
                    None => ast.nets.push(NetDecl {
                        name,
                        kind,
                        direction: Some(dir),
                        signed,
                        range: range.clone(),
                        array: None,
                        pos,
                    }),
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.is_kw("wire") || self.is_kw("reg") {
            let default = if self.is_kw("reg") { NetKind::Reg } else { NetKind::Wire };
            let (kind, signed, range) = self.net_type_and_range(default)?;
            loop {
                let pos = self.pos();
                let name = self.ident()?;
                let array = self.opt_range()?;
                let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                if let Some(init) = &init {
                    if kind == NetKind::Reg {
                        return Err(HdlError::Unsupported {
                            construct: "reg initializer".into(),
                            line: pos.line,
                        });
                    }
                    ast.assigns.push(ContAssign {
                        lhs: Expr::Ident(name.clone(), pos),
                        rhs: init.clone(),
                        pos,
                    });
                }
                match ast.nets.iter_mut().find(|n| n.name == name) {
                    Some(existing) if existing.direction.is_some() && array.is_none() => {
                        if kind == NetKind::Reg {
                            existing.kind = NetKind::Reg;
                        }
                        existing.signed |= signed;
                        if range.is_some() {
                            existing.range = range.clone();
                        }
                    }
                    Some(_) => {
                        return Err(HdlError::Semantic {
                            msg: format!("`{name}` declared twice"),
                            line: pos.line,
                        })
                    }
                    None => ast.nets.push(NetDecl {
                        name,
                        kind,
                        direction: None,
                        signed,
                        range: range.clone(),
                        array,
                        pos,
                    }),
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("parameter") || self.eat_kw("localparam") {
            self.param_group(ast)?;
            return self.expect_sym(";");
        }
        if self.eat_kw("assign") {
            loop {
                let pos = self.pos();
                let lhs = self.lvalue()?;
                self.expect_sym("=")?;
                let rhs = self.expr()?;
                ast.assigns.push(ContAssign { lhs, rhs, pos });
                if !self.eat_sym(",") {
                    break;
                }
            }
            return self.expect_sym(";");
        }
        if self.eat_kw("always") {
            self.expect_sym("@")?;
            let sensitivity = self.sensitivity()?;
            let body = self.stmt()?;
            ast.always.push(AlwaysBlock {
                sensitivity,
                body,
                pos,
            });
            return Ok(());
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Ident(_)) || matches!(self.peek_at(1), Tok::Sym("#")) {
                return Err(HdlError::Unsupported {
                    construct: format!("module instantiation ({name})"),
                    line: pos.line,
                });
            }
        }
        Err(self.expected("module item"))
    }

    fn sensitivity(&mut self) -> Result<Sensitivity, HdlError> {
        if self.eat_sym("*") {
            return Ok(Sensitivity::Combinational);
        }
        self.expect_sym("(")?;
        if self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(Sensitivity::Combinational);
        }
        let mut edges = Vec::new();
        let mut levels = 0;
        loop {
            let edge = if self.eat_kw("posedge") {
                Some(Edge::Pos)
            } else if self.eat_kw("negedge") {
                Some(Edge::Neg)
            } else {
                None
            };
            let name = self.ident()?;
            match edge {
                Some(e) => edges.push((e, name)),
                None => levels += 1,
            }
            if !(self.eat_kw("or") || self.eat_sym(",")) {
                break;
            }
        }
        self.expect_sym(")")?;
        match (edges.is_empty(), levels) {
            (true, _) => Ok(Sensitivity::Combinational),
            (false, 0) => Ok(Sensitivity::Edges(edges)),
            _ => Err(self.unsupported("mixed edge and level sensitivity")),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, HdlError> {
        self.check_unsupported_kw()?;
        if self.eat_sym(";") {
            return Ok(Stmt::Empty);
        }
        if self.eat_kw("begin") {
            if self.eat_sym(":") {
                self.ident()?;
            }
            let mut body = Vec::new();
            while !self.eat_kw("end") {
                if matches!(self.peek(), Tok::Eof) {
                    return Err(self.expected("`end`"));
                }
                body.push(self.stmt()?);
            }
            return Ok(Stmt::Block(body));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        let case_kind = if self.eat_kw("case") {
            Some(CaseKind::Case)
        } else if self.eat_kw("casez") {
            Some(CaseKind::Casez)
        } else if self.eat_kw("casex") {
            Some(CaseKind::Casex)
        } else {
            None
        };
        if let Some(kind) = case_kind {
            self.expect_sym("(")?;
            let selector = self.expr()?;
            self.expect_sym(")")?;
            let mut items = Vec::new();
            let mut default = None;
            while !self.eat_kw("endcase") {
                if matches!(self.peek(), Tok::Eof) {
                    return Err(self.expected("`endcase`"));
                }
                if self.eat_kw("default") {
                    self.eat_sym(":");
                    if default.is_some() {
                        return Err(HdlError::Semantic {
                            msg: "multiple default items".into(),
                            line: self.pos().line,
                        });
                    }
                    default = Some(Box::new(self.stmt()?));
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.eat_sym(",") {
                    labels.push(self.expr()?);
                }
                self.expect_sym(":")?;
                items.push((labels, self.stmt()?));
            }
            return Ok(Stmt::Case {
                kind,
                selector,
                items,
                default,
            });
        }
        let pos = self.pos();
        if matches!(self.peek(), Tok::SysIdent(_)) {
            let Tok::SysIdent(name) = self.advance() else { unreachable!() };
            return Err(HdlError::Unsupported {
                construct: format!("system task {name}"),
                line: pos.line,
            });
        }
        let lhs = self.lvalue()?;
        let nonblocking = if self.eat_sym("<=") {
            true
        } else if self.eat_sym("=") {
            false
        } else {
            return Err(self.expected("`=` or `<=`"));
        };
        if self.is_sym("#") || self.is_sym("@") {
            return Err(self.unsupported("intra-assignment timing control"));
        }
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign {
            lhs,
            rhs,
            nonblocking,
            pos,
        })
    }

    fn lvalue(&mut self) -> Result<Expr, HdlError> {
        if self.eat_sym("{") {
            let mut parts = vec![self.lvalue()?];
            while self.eat_sym(",") {
                parts.push(self.lvalue()?);
            }
            self.expect_sym("}")?;
            return Ok(Expr::Concat(parts));
        }
        let pos = self.pos();
        let name = self.ident()?;
        self.selects(Expr::Ident(name, pos))
    }

    fn selects(&mut self, mut base: Expr) -> Result<Expr, HdlError> {
        while self.eat_sym("[") {
            let first = self.expr()?;
            if self.eat_sym(":") {
                let lsb = self.expr()?;
                self.expect_sym("]")?;
                base = Expr::Slice(Box::new(base), Box::new(first), Box::new(lsb));
            } else if self.is_sym("+:") || self.is_sym("-:") {
                let up = self.is_sym("+:");
                self.advance();
                let width = self.expr()?;
                self.expect_sym("]")?;
                base = Expr::IndexedSlice {
                    base: Box::new(base),
                    start: Box::new(first),
                    width: Box::new(width),
                    up,
                };
            } else {
                self.expect_sym("]")?;
                base = Expr::Index(Box::new(base), Box::new(first));
            }
        }
        Ok(base)
    }

    pub fn expr(&mut self) -> Result<Expr, HdlError> {
        let cond = self.binary(1)?;
        if self.eat_sym("?") {
            let t = self.expr()?;
            self.expect_sym(":")?;
            let f = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(t), Box::new(f)));
        }
        Ok(cond)
    }

    fn binop(&self) -> Option<(BinaryOp, u8)> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "||" => (BinaryOp::LogicOr, 1),
            "&&" => (BinaryOp::LogicAnd, 2),
            "|" => (BinaryOp::Or, 3),
            "^" => (BinaryOp::Xor, 4),
            "~^" | "^~" => (BinaryOp::Xnor, 4),
            "&" => (BinaryOp::And, 5),
            "==" | "===" => (BinaryOp::Eq, 6),
            "!=" | "!==" => (BinaryOp::Ne, 6),
            "<" => (BinaryOp::Lt, 7),
            "<=" => (BinaryOp::Le, 7),
            ">" => (BinaryOp::Gt, 7),
            ">=" => (BinaryOp::Ge, 7),
            "<<" => (BinaryOp::Shl, 8),
            ">>" => (BinaryOp::Shr, 8),
            "<<<" => (BinaryOp::AShl, 8),
            ">>>" => (BinaryOp::AShr, 8),
            "+" => (BinaryOp::Add, 9),
            "-" => (BinaryOp::Sub, 9),
            "*" => (BinaryOp::Mul, 10),
            "/" => (BinaryOp::Div, 10),
            "%" => (BinaryOp::Mod, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, HdlError> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_sym("**") {
                return Err(self.unsupported("power operator"));
            }
            let Some((op, prec)) = self.binop() else { break };
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, HdlError> {
        let op = match self.peek() {
            Tok::Sym("+") => Some(UnaryOp::Plus),
            Tok::Sym("-") => Some(UnaryOp::Neg),
            Tok::Sym("~") => Some(UnaryOp::Not),
            Tok::Sym("!") => Some(UnaryOp::LogicNot),
            Tok::Sym("&") => Some(UnaryOp::RedAnd),
            Tok::Sym("|") => Some(UnaryOp::RedOr),
            Tok::Sym("^") => Some(UnaryOp::RedXor),
            Tok::Sym("~&") => Some(UnaryOp::RedNand),
            Tok::Sym("~|") => Some(UnaryOp::RedNor),
            Tok::Sym("~^") | Tok::Sym("^~") => Some(UnaryOp::RedXnor),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.unary()?;
            return Ok(Expr::Unary(op, Box::new(operand)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, HdlError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(lit) => {
                self.advance();
                Ok(Expr::Number(lit, pos))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                self.selects(Expr::Ident(name, pos))
            }
            Tok::SysIdent(name) => {
                self.advance();
                let wrap: fn(Box<Expr>) -> Expr = match name.as_str() {
                    "$signed" => Expr::Signed,
                    "$unsigned" => Expr::Unsigned,
                    other => {
                        return Err(HdlError::Unsupported {
                            construct: format!("system function {other}"),
                            line: pos.line,
                        })
                    }
                };
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(wrap(Box::new(e)))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.advance();
                let first = self.expr()?;
                if self.eat_sym("{") {
                    let mut items = vec![self.expr()?];
                    while self.eat_sym(",") {
                        items.push(self.expr()?);
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(Expr::Repeat(Box::new(first), items));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(items))
            }
            _ => Err(self.expected("expression")),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "module" | "endmodule" | "input" | "output" | "wire" | "reg" | "assign" | "always"
            | "begin" | "end" | "if" | "else" | "case" | "casez" | "casex" | "endcase"
            | "default" | "posedge" | "negedge" | "or" | "parameter" | "localparam" | "signed"
            | "unsigned"
    ) || UNSUPPORTED_KEYWORDS.contains(&s)
}
