//! Approximate, library-free timing report computed straight from the AST.
//!
//! Every bit carries a unit-delay level and the launch point of its deepest
//! input. Operators are costed with the same ripple accounting the
//! elaborator uses (one full-adder stage per bit for `+`/`-`, one
//! comparator stage per bit for `<`), levels convert to ps at a nominal
//! 30 ps each, and every endpoint is required at the clock period.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use slackcast_rtl::ast::{mask, Ast, BinOp, Direction, Expr, Stmt};
use slackcast_rtl::netlist::bit_name;
use slackcast_rtl::{Result, RtlError};

pub const PS_PER_LEVEL: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Input,
    Flop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Output,
    Flop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxPath {
    pub startpoint: String,
    pub start_kind: StartKind,
    pub endpoint: String,
    pub end_kind: EndKind,
    /// Unit-delay levels from launch to capture.
    pub depth: u32,
    pub arrival: f64,
    pub required: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub clock_period: f64,
    /// One path per non-constant endpoint bit, ascending by slack.
    pub paths: Vec<ApproxPath>,
    pub violating: usize,
    pub wns: f64,
    pub tns: f64,
}

impl ApproxReport {
    pub fn critical_depth(&self) -> u32 {
        self.paths.iter().map(|p| p.depth).max().unwrap_or(0)
    }

    /// Same shape as a signoff report file, flagged `"approx": true`,
    /// with times rounded to integer ps.
    pub fn to_json(&self) -> serde_json::Value {
        let ps = |x: f64| x.round() as i64;
        serde_json::json!({
            "clock_period": ps(self.clock_period),
            "corner": "approx",
            "approx": true,
            "paths": self.paths.iter().map(|p| serde_json::json!({
                "startpoint": p.startpoint,
                "start_kind": p.start_kind,
                "endpoint": p.endpoint,
                "end_kind": p.end_kind,
                "gates": [],
                "depth": p.depth,
                "arrival": ps(p.arrival),
                "required": ps(p.required),
                "slack": ps(p.slack),
            })).collect::<Vec<_>>(),
            "wns": ps(self.wns),
            "tns": ps(self.tns),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bit {
    Const(bool),
    /// `start` indexes the launch-point table.
    Live { level: u32, start: u32 },
}

const ZERO: Bit = Bit::Const(false);
const ONE: Bit = Bit::Const(true);

type Word = Vec<Bit>;

fn deeper(a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (Bit::Live { level: la, .. }, Bit::Live { level: lb, .. }) => {
            if lb > la {
                b
            } else {
                a
            }
        }
        (Bit::Live { .. }, _) => a,
        _ => b,
    }
}

fn plus_one(b: Bit) -> Bit {
    match b {
        Bit::Live { level, start } => Bit::Live { level: level + 1, start },
        c => c,
    }
}

fn gate2(a: Bit, b: Bit) -> Bit {
    plus_one(deeper(a, b))
}

fn inv(a: Bit) -> Bit {
    match a {
        Bit::Const(v) => Bit::Const(!v),
        live => plus_one(live),
    }
}

fn and2(a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (ZERO, _) | (_, ZERO) => ZERO,
        (ONE, x) | (x, ONE) => x,
        _ => gate2(a, b),
    }
}

fn or2(a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (ONE, _) | (_, ONE) => ONE,
        (ZERO, x) | (x, ZERO) => x,
        _ => gate2(a, b),
    }
}

fn xor2(a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (ZERO, x) | (x, ZERO) => x,
        (ONE, x) | (x, ONE) => inv(x),
        _ => gate2(a, b),
    }
}

fn xnor2(a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (ONE, x) | (x, ONE) => x,
        (ZERO, x) | (x, ZERO) => inv(x),
        _ => gate2(a, b),
    }
}

fn mux(sel: Bit, d0: Bit, d1: Bit) -> Bit {
    if d0 == d1 {
        return d0;
    }
    match sel {
        ZERO => d0,
        ONE => d1,
        _ => gate2(sel, deeper(d0, d1)),
    }
}

fn tree(mut bits: Vec<Bit>, op: fn(Bit, Bit) -> Bit, empty: Bit) -> Bit {
    if bits.is_empty() {
        return empty;
    }
    while bits.len() > 1 {
        bits = bits
            .chunks(2)
            .map(|p| if p.len() == 2 { op(p[0], p[1]) } else { p[0] })
            .collect();
    }
    bits[0]
}

struct Analyzer<'a> {
    ast: &'a Ast,
    starts: Vec<(String, StartKind)>,
    sources: HashMap<String, Word>,
    wires: HashMap<String, Word>,
    active: Vec<String>,
}

impl<'a> Analyzer<'a> {
    fn new(ast: &'a Ast) -> Self {
        let mut starts = Vec::new();
        let mut sources = HashMap::new();
        for d in ast.decls.iter() {
            let kind = if d.is_reg {
                StartKind::Flop
            } else if d.dir == Some(Direction::Input) && Some(&d.name) != ast.clock.as_ref() {
                StartKind::Input
            } else {
                continue;
            };
            let word = (0..d.width)
                .map(|i| {
                    starts.push((bit_name(&d.name, i, d.width), kind));
                    Bit::Live {
                        level: 0,
                        start: starts.len() as u32 - 1,
                    }
                })
                .collect();
            sources.insert(d.name.clone(), word);
        }
        Analyzer {
            ast,
            starts,
            sources,
            wires: HashMap::new(),
            active: Vec::new(),
        }
    }

    fn resolve(&mut self, name: &str) -> Result<Word> {
        if let Some(w) = self.sources.get(name).or_else(|| self.wires.get(name)) {
            return Ok(w.clone());
        }
        if self.active.iter().any(|a| a == name) {
            let mut cycle = self.active.clone();
            cycle.push(name.to_string());
            return Err(RtlError::CombinationalLoop(cycle));
        }
        let ast = self.ast;
        let Some(assign) = ast.assigns.iter().find(|a| a.targets.iter().any(|t| t == name)) else {
            return Err(RtlError::Undriven(name.to_string()));
        };
        self.active.push(name.to_string());
        let total = ast.lvalue_width(&assign.targets);
        let word = self.expr(&assign.expr, total)?;
        self.active.pop();
        let mut lo = total;
        for t in &assign.targets {
            let w = ast.width_of(t);
            lo -= w;
            self.wires.insert(t.clone(), word[lo as usize..(lo + w) as usize].to_vec());
        }
        Ok(self.wires[name].clone())
    }

    fn extend(mut w: Word, width: u32) -> Word {
        w.resize(width as usize, ZERO);
        w
    }

    fn expr(&mut self, e: &Expr, width: u32) -> Result<Word> {
        let ast = self.ast;
        Ok(match e {
            Expr::Ident(n) => Self::extend(self.resolve(n)?, width),
            Expr::Lit { value, .. } => {
                let v = value & mask(width);
                (0..width).map(|i| Bit::Const((v >> i) & 1 == 1)).collect()
            }
            Expr::Index { name, bit } => Self::extend(vec![self.resolve(name)?[*bit as usize]], width),
            Expr::Slice { name, msb, lsb } => {
                Self::extend(self.resolve(name)?[*lsb as usize..=*msb as usize].to_vec(), width)
            }
            Expr::Concat(parts) => {
                let mut word = Vec::new();
                for p in parts.iter().rev() {
                    word.extend(self.expr(p, ast.self_width(p))?);
                }
                Self::extend(word, width)
            }
            Expr::Not(a) => self.expr(a, width)?.into_iter().map(inv).collect(),
            Expr::Binary(op, a, b) if op.is_compare() => {
                let wc = ast.self_width(a).max(ast.self_width(b));
                let x = self.expr(a, wc)?;
                let y = self.expr(b, wc)?;
                let bit = if *op == BinOp::Eq { equal(&x, &y) } else { less(&x, &y) };
                Self::extend(vec![bit], width)
            }
            Expr::Binary(op, a, b) => {
                let x = self.expr(a, width)?;
                let y = self.expr(b, width)?;
                match op {
                    BinOp::And => x.into_iter().zip(y).map(|(p, q)| and2(p, q)).collect(),
                    BinOp::Or => x.into_iter().zip(y).map(|(p, q)| or2(p, q)).collect(),
                    BinOp::Xor => x.into_iter().zip(y).map(|(p, q)| xor2(p, q)).collect(),
                    BinOp::Add => ripple(&x, &y, ZERO),
                    BinOp::Sub => ripple(&x, &y.into_iter().map(inv).collect::<Vec<_>>(), ONE),
                    BinOp::Eq | BinOp::Lt => unreachable!(),
                }
            }
            Expr::Ternary(c, t, f) => {
                let sel = self.truth(c)?;
                let t = self.expr(t, width)?;
                let f = self.expr(f, width)?;
                f.into_iter().zip(t).map(|(d0, d1)| mux(sel, d0, d1)).collect()
            }
        })
    }

    fn truth(&mut self, e: &Expr) -> Result<Bit> {
        let w = self.ast.self_width(e);
        Ok(tree(self.expr(e, w)?, or2, ZERO))
    }

    fn exec(&mut self, s: &Stmt, mut env: HashMap<String, Word>) -> Result<HashMap<String, Word>> {
        match s {
            Stmt::Block(stmts) => {
                for st in stmts {
                    env = self.exec(st, env)?;
                }
            }
            Stmt::NonBlocking { targets, expr } => {
                let total = self.ast.lvalue_width(targets);
                let word = self.expr(expr, total)?;
                let mut lo = total;
                for t in targets {
                    let w = self.ast.width_of(t);
                    lo -= w;
                    env.insert(t.clone(), word[lo as usize..(lo + w) as usize].to_vec());
                }
            }
            Stmt::If { cond, then, els } => {
                let sel = self.truth(cond)?;
                let t = self.exec(then, env.clone())?;
                let f = match els {
                    Some(e) => self.exec(e, env)?,
                    None => env,
                };
                env = self.merge(sel, f, t);
            }
            Stmt::Case { subject, items } => {
                let ast = self.ast;
                let wc = items
                    .iter()
                    .flat_map(|i| i.labels.iter())
                    .map(|l| ast.self_width(l))
                    .fold(ast.self_width(subject), u32::max);
                let subj = self.expr(subject, wc)?;
                let mut acc = match items.iter().find(|i| i.labels.is_empty()) {
                    Some(d) => self.exec(&d.body, env.clone())?,
                    None => env.clone(),
                };
                for item in items.iter().filter(|i| !i.labels.is_empty()).rev() {
                    let mut hits = Vec::new();
                    for l in &item.labels {
                        let lv = self.expr(l, wc)?;
                        hits.push(equal(&subj, &lv));
                    }
                    let hit = tree(hits, or2, ZERO);
                    let taken = self.exec(&item.body, env.clone())?;
                    acc = self.merge(hit, acc, taken);
                }
                env = acc;
            }
        }
        Ok(env)
    }

    fn merge(&self, sel: Bit, f: HashMap<String, Word>, t: HashMap<String, Word>) -> HashMap<String, Word> {
        let mut names: Vec<&String> = f.keys().chain(t.keys()).collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .map(|n| {
                let q = &self.sources[n];
                let a = f.get(n).unwrap_or(q);
                let b = t.get(n).unwrap_or(q);
                (n.clone(), a.iter().zip(b).map(|(d0, d1)| mux(sel, *d0, *d1)).collect())
            })
            .collect()
    }
}

fn ripple(x: &[Bit], y: &[Bit], carry_in: Bit) -> Word {
    let mut carry = carry_in;
    let mut sum = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let p = xor2(x[i], y[i]);
        sum.push(xor2(p, carry));
        if i + 1 < x.len() {
            carry = or2(and2(x[i], y[i]), and2(carry, p));
        }
    }
    sum
}

fn equal(x: &[Bit], y: &[Bit]) -> Bit {
    tree(x.iter().zip(y).map(|(a, b)| xnor2(*a, *b)).collect(), and2, ONE)
}

fn less(x: &[Bit], y: &[Bit]) -> Bit {
    let mut lt = ZERO;
    for (a, b) in x.iter().zip(y) {
        let here = and2(inv(*a), *b);
        let eq = equal(&[*a], &[*b]);
        lt = or2(here, and2(eq, lt));
    }
    lt
}

/// Builds the approximate report for `ast` at `clock_period` ps.
pub fn approx_report(ast: &Ast, clock_period: f64) -> Result<ApproxReport> {
    let mut an = Analyzer::new(ast);
    let mut next: HashMap<String, Word> = HashMap::new();
    for b in &ast.blocks {
        let env = an.exec(&b.body, HashMap::new())?;
        next.extend(env);
    }
    let mut endpoints: Vec<(String, EndKind, Bit)> = Vec::new();
    for d in ast.outputs() {
        let word = an.resolve(&d.name)?;
        for (i, b) in word.into_iter().enumerate() {
            endpoints.push((bit_name(&d.name, i as u32, d.width), EndKind::Output, b));
        }
    }
    for d in ast.registers() {
        let word = next.remove(&d.name).unwrap_or_else(|| an.sources[&d.name].clone());
        for (i, b) in word.into_iter().enumerate() {
            endpoints.push((format!("{}/D", bit_name(&d.name, i as u32, d.width)), EndKind::Flop, b));
        }
    }
    let mut paths: Vec<ApproxPath> = endpoints
        .into_iter()
        .filter_map(|(endpoint, end_kind, bit)| match bit {
            Bit::Const(_) => None,
            Bit::Live { level, start } => {
                let (startpoint, start_kind) = an.starts[start as usize].clone();
                let arrival = level as f64 * PS_PER_LEVEL;
                Some(ApproxPath {
                    startpoint,
                    start_kind,
                    endpoint,
                    end_kind,
                    depth: level,
                    arrival,
                    required: clock_period,
                    slack: clock_period - arrival,
                })
            }
        })
        .collect();
    paths.sort_by(|a, b| a.slack.total_cmp(&b.slack).then_with(|| a.endpoint.cmp(&b.endpoint)));
    let violating = paths.iter().filter(|p| p.slack < 0.0).count();
    let wns = paths.first().map_or(clock_period, |p| p.slack);
    let tns = paths.iter().map(|p| p.slack).filter(|s| *s < 0.0).sum();
    Ok(ApproxReport {
        clock_period,
        paths,
        violating,
        wns,
        tns,
    })
}
