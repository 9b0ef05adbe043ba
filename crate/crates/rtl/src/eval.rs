//! Cycle-level interpreter over the AST.
//!
//! This is the reference semantics the elaborator is checked against.
//! Operands of `~ & | ^ + - ?:` are zero-extended to the context width;
//! `==`/`<` compare at the wider of their two self-determined widths and
//! yield one bit; `if`/`?:` conditions are true when nonzero.

use std::collections::BTreeMap;

use crate::ast::{mask, Ast, BinOp, Expr, Stmt};
use crate::error::{Result, RtlError};

pub type Values = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    /// Value of every output port during the cycle.
    pub outputs: Values,
    /// Register contents after the clock edge.
    pub next_state: Values,
}

pub struct Interpreter<'a> {
    ast: &'a Ast,
    inputs: &'a Values,
    state: &'a Values,
    wires: BTreeMap<String, u64>,
    visiting: Vec<String>,
}

/// Evaluates one clock cycle: combinational outputs under `inputs` and
/// `state`, then the registered next state.
pub fn step(ast: &Ast, inputs: &Values, state: &Values) -> Result<Cycle> {
    let mut it = Interpreter {
        ast,
        inputs,
        state,
        wires: BTreeMap::new(),
        visiting: Vec::new(),
    };
    let mut outputs = Values::new();
    for d in ast.outputs() {
        outputs.insert(d.name.clone(), it.value(&d.name)?);
    }
    let mut next: Values = ast
        .registers()
        .map(|d| (d.name.clone(), state.get(&d.name).copied().unwrap_or(0) & mask(d.width)))
        .collect();
    for b in &ast.blocks {
        it.exec(&b.body, &mut next)?;
    }
    Ok(Cycle {
        outputs,
        next_state: next,
    })
}

impl Interpreter<'_> {
    fn value(&mut self, name: &str) -> Result<u64> {
        let Some(decl) = self.ast.decl(name) else {
            return Err(RtlError::Undriven(name.to_string()));
        };
        let m = mask(decl.width);
        if decl.is_reg {
            return Ok(self.state.get(name).copied().unwrap_or(0) & m);
        }
        if decl.dir == Some(crate::ast::Direction::Input) {
            return Ok(self.inputs.get(name).copied().unwrap_or(0) & m);
        }
        if let Some(v) = self.wires.get(name) {
            return Ok(*v);
        }
        if self.visiting.iter().any(|v| v == name) {
            let mut cycle = self.visiting.clone();
            cycle.push(name.to_string());
            return Err(RtlError::CombinationalLoop(cycle));
        }
        let ast = self.ast;
        let Some(assign) = ast.assigns.iter().find(|a| a.targets.iter().any(|t| t == name)) else {
            return Err(RtlError::Undriven(name.to_string()));
        };
        self.visiting.push(name.to_string());
        let total = ast.lvalue_width(&assign.targets);
        let v = self.eval(&assign.expr, total)?;
        self.visiting.pop();
        let mut shift = total;
        for t in &assign.targets {
            let w = ast.width_of(t);
            shift -= w;
            self.wires.insert(t.clone(), (v >> shift) & mask(w));
        }
        Ok(self.wires[name])
    }

    /// Evaluates `e` at context width `width`.
    pub fn eval(&mut self, e: &Expr, width: u32) -> Result<u64> {
        let m = mask(width);
        let ast = self.ast;
        Ok(match e {
            Expr::Ident(n) => self.value(n)? & m,
            Expr::Lit { value, .. } => value & m,
            Expr::Index { name, bit } => (self.value(name)? >> bit) & 1 & m,
            Expr::Slice { name, msb, lsb } => (self.value(name)? >> lsb) & mask(msb - lsb + 1) & m,
            Expr::Concat(parts) => {
                let mut acc = 0u64;
                for p in parts {
                    let w = ast.self_width(p);
                    let v = self.eval(p, w)?;
                    acc = if w >= 64 { v } else { (acc << w) | v };
                }
                acc & m
            }
            Expr::Not(a) => !self.eval(a, width)? & m,
            Expr::Binary(op, a, b) => {
                if op.is_compare() {
                    let wc = ast.self_width(a).max(ast.self_width(b));
                    let x = self.eval(a, wc)?;
                    let y = self.eval(b, wc)?;
                    let r = match op {
                        BinOp::Eq => x == y,
                        _ => x < y,
                    };
                    r as u64 & m
                } else {
                    let x = self.eval(a, width)?;
                    let y = self.eval(b, width)?;
                    match op {
                        BinOp::And => x & y,
                        BinOp::Or => x | y,
                        BinOp::Xor => x ^ y,
                        BinOp::Add => x.wrapping_add(y) & m,
                        BinOp::Sub => x.wrapping_sub(y) & m,
                        BinOp::Eq | BinOp::Lt => unreachable!(),
                    }
                }
            }
            Expr::Ternary(c, t, f) => {
                if self.truth(c)? {
                    self.eval(t, width)?
                } else {
                    self.eval(f, width)?
                }
            }
        })
    }

    fn truth(&mut self, e: &Expr) -> Result<bool> {
        let w = self.ast.self_width(e);
        Ok(self.eval(e, w)? != 0)
    }

    fn exec(&mut self, s: &Stmt, next: &mut Values) -> Result<()> {
        match s {
            Stmt::Block(stmts) => {
                for st in stmts {
                    self.exec(st, next)?;
                }
            }
            Stmt::If { cond, then, els } => {
                if self.truth(cond)? {
                    self.exec(then, next)?;
                } else if let Some(e) = els {
                    self.exec(e, next)?;
                }
            }
            Stmt::Case { subject, items } => {
                let ast = self.ast;
                let wc = items
                    .iter()
                    .flat_map(|i| i.labels.iter())
                    .map(|l| ast.self_width(l))
                    .fold(ast.self_width(subject), u32::max);
                let sv = self.eval(subject, wc)?;
                let mut chosen = None;
                'items: for item in items {
                    for l in &item.labels {
                        if self.eval(l, wc)? == sv {
                            chosen = Some(&item.body);
                            break 'items;
                        }
                    }
                }
                if chosen.is_none() {
                    chosen = items.iter().find(|i| i.labels.is_empty()).map(|i| &i.body);
                }
                if let Some(body) = chosen {
                    self.exec(body, next)?;
                }
            }
            Stmt::NonBlocking { targets, expr } => {
                let ast = self.ast;
                let total = ast.lvalue_width(targets);
                let v = self.eval(expr, total)?;
                let mut shift = total;
                for t in targets {
                    let w = ast.width_of(t);
                    shift -= w;
                    next.insert(t.clone(), (v >> shift) & mask(w));
                }
            }
        }
        Ok(())
    }
}
