//! Abstract syntax for a single-module, single-clock Verilog subset.

use serde::{Deserialize, Serialize};

use crate::error::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

/// A declared signal: port, wire or reg.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decl {
    pub name: String,
    pub width: u32,
    pub dir: Option<Direction>,
    pub is_reg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Eq,
    Lt,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Lt => "<",
        }
    }

    /// Comparison operators produce one bit from self-determined operands.
    pub fn is_compare(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Lt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Ident(String),
    Lit { width: u32, value: u64 },
    Index { name: String, bit: u32 },
    Slice { name: String, msb: u32, lsb: u32 },
    Concat(Vec<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Calls `f` on every identifier this expression reads.
    pub fn for_each_ident<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Ident(n) | Expr::Index { name: n, .. } | Expr::Slice { name: n, .. } => f(n),
            Expr::Lit { .. } => {}
            Expr::Concat(parts) => parts.iter().for_each(|p| p.for_each_ident(f)),
            Expr::Not(a) => a.for_each_ident(f),
            Expr::Binary(_, a, b) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            Expr::Ternary(c, t, e) => {
                c.for_each_ident(f);
                t.for_each_ident(f);
                e.for_each_ident(f);
            }
        }
    }

    /// Number of operator nodes (`~`, binary ops, `?:`).
    pub fn operator_count(&self) -> usize {
        match self {
            Expr::Ident(_) | Expr::Lit { .. } | Expr::Index { .. } | Expr::Slice { .. } => 0,
            Expr::Concat(parts) => parts.iter().map(Expr::operator_count).sum(),
            Expr::Not(a) => 1 + a.operator_count(),
            Expr::Binary(_, a, b) => 1 + a.operator_count() + b.operator_count(),
            Expr::Ternary(c, t, e) => 1 + c.operator_count() + t.operator_count() + e.operator_count(),
        }
    }
}

/// Left-hand side: one or more whole signals, MSB-first as in `{c, s}`.
pub type LValue = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assign {
    pub targets: LValue,
    pub expr: Expr,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseItem {
    /// Empty for `default`.
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stmt {
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    Case {
        subject: Expr,
        items: Vec<CaseItem>,
    },
    NonBlocking {
        targets: LValue,
        expr: Expr,
    },
}

impl Stmt {
    pub fn for_each_expr<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Stmt::Block(stmts) => stmts.iter().for_each(|s| s.for_each_expr(f)),
            Stmt::If { cond, then, els } => {
                f(cond);
                then.for_each_expr(f);
                if let Some(e) = els {
                    e.for_each_expr(f);
                }
            }
            Stmt::Case { subject, items } => {
                f(subject);
                for item in items {
                    item.labels.iter().for_each(&mut *f);
                    item.body.for_each_expr(f);
                }
            }
            Stmt::NonBlocking { expr, .. } => f(expr),
        }
    }

    pub fn for_each_target<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Stmt::Block(stmts) => stmts.iter().for_each(|s| s.for_each_target(f)),
            Stmt::If { then, els, .. } => {
                then.for_each_target(f);
                if let Some(e) = els {
                    e.for_each_target(f);
                }
            }
            Stmt::Case { items, .. } => items.iter().for_each(|i| i.body.for_each_target(f)),
            Stmt::NonBlocking { targets, .. } => targets.iter().for_each(|t| f(t)),
        }
    }

    pub fn has_case(&self) -> bool {
        match self {
            Stmt::Block(stmts) => stmts.iter().any(Stmt::has_case),
            Stmt::If { then, els, .. } => then.has_case() || els.as_ref().is_some_and(|e| e.has_case()),
            Stmt::Case { .. } => true,
            Stmt::NonBlocking { .. } => false,
        }
    }
}

/// `always @(posedge clock) body`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockedBlock {
    pub clock: String,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub name: String,
    /// Port names in header order.
    pub ports: Vec<String>,
    /// Every declared signal, ports first, in declaration order.
    pub decls: Vec<Decl>,
    pub assigns: Vec<Assign>,
    pub blocks: Vec<ClockedBlock>,
    pub clock: Option<String>,
}

impl Ast {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn width_of(&self, name: &str) -> u32 {
        self.decl(name).map_or(0, |d| d.width)
    }

    /// Data inputs (the clock excluded).
    pub fn inputs(&self) -> impl Iterator<Item = &Decl> {
        self.decls
            .iter()
            .filter(move |d| d.dir == Some(Direction::Input) && Some(&d.name) != self.clock.as_ref())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Decl> {
        self.decls.iter().filter(|d| d.dir == Some(Direction::Output))
    }

    /// Signals assigned in clocked blocks, in declaration order.
    pub fn registers(&self) -> impl Iterator<Item = &Decl> {
        self.decls.iter().filter(|d| d.is_reg)
    }

    /// Self-determined width of an expression.
    pub fn self_width(&self, e: &Expr) -> u32 {
        match e {
            Expr::Ident(n) => self.width_of(n),
            Expr::Lit { width, .. } => *width,
            Expr::Index { .. } => 1,
            Expr::Slice { msb, lsb, .. } => msb - lsb + 1,
            Expr::Concat(parts) => parts.iter().map(|p| self.self_width(p)).sum(),
            Expr::Not(a) => self.self_width(a),
            Expr::Binary(op, a, b) => {
                if op.is_compare() {
                    1
                } else {
                    self.self_width(a).max(self.self_width(b))
                }
            }
            Expr::Ternary(_, t, f) => self.self_width(t).max(self.self_width(f)),
        }
    }

    pub fn lvalue_width(&self, targets: &[String]) -> u32 {
        targets.iter().map(|t| self.width_of(t)).sum()
    }

    pub fn operator_count(&self) -> usize {
        let mut n: usize = self.assigns.iter().map(|a| a.expr.operator_count()).sum();
        for b in &self.blocks {
            b.body.for_each_expr(&mut |e| n += e.operator_count());
        }
        n
    }
}

/// Bit mask for `width` low bits.
pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Minimal width able to hold `value` (at least one bit).
pub fn min_width(value: u64) -> u32 {
    (64 - value.leading_zeros()).max(1)
}
