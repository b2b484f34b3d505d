use super::lexer::{Literal, Pos};
use crate::specmodel::Direction;

#[derive(Debug, Clone, PartialEq)]
pub struct HdlAst {
    pub module_name: String,
    /// Port names in header order.
    pub port_order: Vec<String>,
    pub params: Vec<ParamDecl>,
    pub nets: Vec<NetDecl>,
    pub assigns: Vec<ContAssign>,
    pub always: Vec<AlwaysBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub range: Option<(Expr, Expr)>,
    pub signed: bool,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub direction: Option<Direction>,
    pub signed: bool,
    pub range: Option<(Expr, Expr)>,
    /// Unpacked dimension of a 1-D memory.
    pub array: Option<(Expr, Expr)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContAssign {
    pub lhs: Expr,
    pub rhs: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Pos,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sensitivity {
    /// `@(*)`, `@*` or an explicit level-sensitive list.
    Combinational,
    Edges(Vec<(Edge, String)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlwaysBlock {
    pub sensitivity: Sensitivity,
    pub body: Stmt,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Case,
    Casez,
    Casex,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    Case {
        kind: CaseKind,
        selector: Expr,
        items: Vec<(Vec<Expr>, Stmt)>,
        default: Option<Box<Stmt>>,
    },
    Assign {
        lhs: Expr,
        rhs: Expr,
        nonblocking: bool,
        pos: Pos,
    },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Plus,
    Neg,
    Not,
    LogicNot,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    Xnor,
    Shl,
    Shr,
    AShl,
    AShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    LogicAnd,
    LogicOr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String, Pos),
    Number(Literal, Pos),
    /// `base[index]`: bit select, or element select on a memory.
    Index(Box<Expr>, Box<Expr>),
    /// `base[msb:lsb]` with constant bounds.
    Slice(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `base[start +: width]` (`up`) or `base[start -: width]`.
    IndexedSlice {
        base: Box<Expr>,
        start: Box<Expr>,
        width: Box<Expr>,
        up: bool,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Repeat(Box<Expr>, Vec<Expr>),
    Signed(Box<Expr>),
    Unsigned(Box<Expr>),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Ident(_, p) | Expr::Number(_, p) => *p,
            Expr::Index(b, _) | Expr::Slice(b, _, _) => b.pos(),
            Expr::IndexedSlice { base, .. } => base.pos(),
            Expr::Unary(_, e) | Expr::Signed(e) | Expr::Unsigned(e) => e.pos(),
            Expr::Binary(_, a, _) | Expr::Ternary(a, _, _) => a.pos(),
            Expr::Concat(v) => v.first().map(Expr::pos).unwrap_or_default(),
            Expr::Repeat(n, _) => n.pos(),
        }
    }
}
