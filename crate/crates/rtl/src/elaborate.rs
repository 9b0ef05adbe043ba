//! Lowers an [`Ast`] to a [`Netlist`] of two-input gates.
//!
//! `+`/`-` become ripple-carry adders, `==` an XNOR column under an AND
//! tree, `<` a ripple comparator, `?:`/`if`/`case` MUX2 trees. Constants
//! are folded as gates are created, inverter pairs cancel, and gates that
//! reach no endpoint are swept at the end.

use std::collections::HashMap;

use crate::ast::{mask, Ast, BinOp, Direction, Expr, Stmt};
use crate::error::{Result, RtlError};
use crate::netlist::{bit_name, Flop, Gate, GateType, NetId, Netlist, OutputBit, Signal};

type Word = Vec<Signal>;

const ZERO: Signal = Signal::Const(false);
const ONE: Signal = Signal::Const(true);

pub fn elaborate(ast: &Ast) -> Result<Netlist> {
    let mut e = Elaborator::new(ast)?;
    let mut flops = Vec::new();
    let mut next: HashMap<String, Word> = HashMap::new();
    let mut owner: HashMap<String, usize> = HashMap::new();
    for (bi, block) in ast.blocks.iter().enumerate() {
        let mut targets = Vec::new();
        block.body.for_each_target(&mut |t| targets.push(t.to_string()));
        for t in &targets {
            if let Some(prev) = owner.insert(t.clone(), bi) {
                if prev != bi {
                    return Err(RtlError::MultipleDrivers(t.clone()));
                }
            }
        }
        let env = e.exec(&block.body, Env::new())?;
        next.extend(env);
    }
    for reg in ast.registers() {
        if !owner.contains_key(&reg.name) {
            return Err(RtlError::Undriven(reg.name.clone()));
        }
        let q = e.regs[&reg.name].clone();
        let d = next.remove(&reg.name).unwrap_or_else(|| q.clone());
        for (bit, (dq, qn)) in d.into_iter().zip(q).enumerate() {
            let Signal::Net(q) = qn else { unreachable!() };
            flops.push(Flop {
                name: bit_name(&reg.name, bit as u32, reg.width),
                d: dq,
                q,
            });
        }
    }
    let mut outputs = Vec::new();
    for out in ast.outputs() {
        let bits = e.resolve(&out.name)?;
        for (bit, s) in bits.into_iter().enumerate() {
            outputs.push(OutputBit {
                name: bit_name(&out.name, bit as u32, out.width),
                driver: s,
            });
        }
    }
    let netlist = e.b.finish(ast.name.clone(), outputs, flops);
    netlist.topo_order()?;
    Ok(netlist)
}

/// Gate factory with on-the-fly constant folding.
struct Builder {
    nets: Vec<String>,
    gates: Vec<Gate>,
    driver: Vec<Option<usize>>,
    inputs: Vec<NetId>,
}

impl Builder {
    fn net(&mut self, name: String) -> NetId {
        self.nets.push(name);
        self.driver.push(None);
        NetId(self.nets.len() as u32 - 1)
    }

    fn gate(&mut self, kind: GateType, inputs: Vec<NetId>) -> Signal {
        let out = self.net(format!("n{}", self.gates.len()));
        self.driver[out.index()] = Some(self.gates.len());
        self.gates.push(Gate { kind, inputs, output: out });
        Signal::Net(out)
    }

    fn inv(&mut self, a: Signal) -> Signal {
        match a {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Net(n) => {
                if let Some(g) = self.driver[n.index()] {
                    if self.gates[g].kind == GateType::Inv {
                        return Signal::Net(self.gates[g].inputs[0]);
                    }
                }
                self.gate(GateType::Inv, vec![n])
            }
        }
    }

    fn and2(&mut self, a: Signal, b: Signal) -> Signal {
        match (a, b) {
            (ZERO, _) | (_, ZERO) => ZERO,
            (ONE, x) | (x, ONE) => x,
            (Signal::Net(x), Signal::Net(y)) => self.gate(GateType::And2, vec![x, y]),
        }
    }

    fn or2(&mut self, a: Signal, b: Signal) -> Signal {
        match (a, b) {
            (ONE, _) | (_, ONE) => ONE,
            (ZERO, x) | (x, ZERO) => x,
            (Signal::Net(x), Signal::Net(y)) => self.gate(GateType::Or2, vec![x, y]),
        }
    }

    fn xor2(&mut self, a: Signal, b: Signal) -> Signal {
        match (a, b) {
            (ZERO, x) | (x, ZERO) => x,
            (ONE, x) | (x, ONE) => self.inv(x),
            (Signal::Net(x), Signal::Net(y)) => self.gate(GateType::Xor2, vec![x, y]),
        }
    }

    fn xnor2(&mut self, a: Signal, b: Signal) -> Signal {
        match (a, b) {
            (ONE, x) | (x, ONE) => x,
            (ZERO, x) | (x, ZERO) => self.inv(x),
            (Signal::Net(x), Signal::Net(y)) => self.gate(GateType::Xnor2, vec![x, y]),
        }
    }

    /// `sel ? d1 : d0`
    fn mux(&mut self, sel: Signal, d0: Signal, d1: Signal) -> Signal {
        if d0 == d1 {
            return d0;
        }
        match (sel, d0, d1) {
            (ZERO, d0, _) => d0,
            (ONE, _, d1) => d1,
            (s, ZERO, ONE) => s,
            (s, ONE, ZERO) => self.inv(s),
            (s, ZERO, x) => self.and2(s, x),
            (s, x, ZERO) => {
                let ns = self.inv(s);
                self.and2(ns, x)
            }
            (s, ONE, x) => {
                let ns = self.inv(s);
                self.or2(ns, x)
            }
            (s, x, ONE) => self.or2(s, x),
            (Signal::Net(s), Signal::Net(a), Signal::Net(b)) => self.gate(GateType::Mux2, vec![a, b, s]),
        }
    }

    fn tree(&mut self, mut bits: Vec<Signal>, op: fn(&mut Builder, Signal, Signal) -> Signal, empty: Signal) -> Signal {
        if bits.is_empty() {
            return empty;
        }
        while bits.len() > 1 {
            let mut next = Vec::with_capacity(bits.len().div_ceil(2));
            for pair in bits.chunks(2) {
                next.push(if pair.len() == 2 { op(self, pair[0], pair[1]) } else { pair[0] });
            }
            bits = next;
        }
        bits[0]
    }

    /// Drops gates that reach no endpoint and renumbers nets.
    fn finish(self, name: String, mut outputs: Vec<OutputBit>, mut flops: Vec<Flop>) -> Netlist {
        let mut live = vec![false; self.nets.len()];
        let mut stack: Vec<NetId> = outputs
            .iter()
            .map(|o| o.driver)
            .chain(flops.iter().map(|f| f.d))
            .filter_map(|s| match s {
                Signal::Net(n) => Some(n),
                Signal::Const(_) => None,
            })
            .collect();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut live[n.index()], true) {
                continue;
            }
            if let Some(g) = self.driver[n.index()] {
                stack.extend(self.gates[g].inputs.iter().copied());
            }
        }
        let mut remap: Vec<Option<NetId>> = vec![None; self.nets.len()];
        let mut nets = Vec::new();
        let mut keep = |old: NetId, name: String, remap: &mut Vec<Option<NetId>>| {
            remap[old.index()] = Some(NetId(nets.len() as u32));
            nets.push(name);
        };
        for n in &self.inputs {
            keep(*n, self.nets[n.index()].clone(), &mut remap);
        }
        for f in &flops {
            keep(f.q, self.nets[f.q.index()].clone(), &mut remap);
        }
        let mut gates = Vec::new();
        for g in &self.gates {
            if !live[g.output.index()] {
                continue;
            }
            keep(g.output, format!("n{}", gates.len()), &mut remap);
            gates.push(Gate {
                kind: g.kind,
                inputs: g.inputs.iter().map(|n| remap[n.index()].expect("topological creation")).collect(),
                output: remap[g.output.index()].unwrap(),
            });
        }
        let map_sig = |s: Signal| match s {
            Signal::Net(n) => Signal::Net(remap[n.index()].unwrap()),
            c => c,
        };
        for o in &mut outputs {
            o.driver = map_sig(o.driver);
        }
        for f in &mut flops {
            f.d = map_sig(f.d);
            f.q = remap[f.q.index()].unwrap();
        }
        Netlist {
            name,
            inputs: self.inputs.iter().map(|n| remap[n.index()].unwrap()).collect(),
            nets,
            outputs,
            gates,
            flops,
        }
    }
}

type Env = HashMap<String, Word>;

struct Elaborator<'a> {
    ast: &'a Ast,
    b: Builder,
    inputs: HashMap<String, Word>,
    regs: HashMap<String, Word>,
    /// target name -> index of the driving assign
    driven_by: HashMap<String, usize>,
    done: HashMap<usize, Word>,
    active: Vec<usize>,
}

impl<'a> Elaborator<'a> {
    fn new(ast: &'a Ast) -> Result<Self> {
        let mut b = Builder {
            nets: Vec::new(),
            gates: Vec::new(),
            driver: Vec::new(),
            inputs: Vec::new(),
        };
        let mut inputs = HashMap::new();
        for d in ast.inputs() {
            let word: Word = (0..d.width)
                .map(|i| {
                    let n = b.net(bit_name(&d.name, i, d.width));
                    b.inputs.push(n);
                    Signal::Net(n)
                })
                .collect();
            inputs.insert(d.name.clone(), word);
        }
        let mut regs = HashMap::new();
        for d in ast.registers() {
            let word: Word = (0..d.width).map(|i| Signal::Net(b.net(bit_name(&d.name, i, d.width)))).collect();
            regs.insert(d.name.clone(), word);
        }
        let mut driven_by = HashMap::new();
        for (i, a) in ast.assigns.iter().enumerate() {
            for t in &a.targets {
                if driven_by.insert(t.clone(), i).is_some() {
                    return Err(RtlError::MultipleDrivers(t.clone()));
                }
            }
        }
        Ok(Elaborator {
            ast,
            b,
            inputs,
            regs,
            driven_by,
            done: HashMap::new(),
            active: Vec::new(),
        })
    }

    fn resolve(&mut self, name: &str) -> Result<Word> {
        if let Some(w) = self.inputs.get(name).or_else(|| self.regs.get(name)) {
            return Ok(w.clone());
        }
        let decl = self.ast.decl(name).ok_or_else(|| RtlError::Undriven(name.to_string()))?;
        if decl.dir == Some(Direction::Input) {
            // the clock
            return Err(RtlError::Undriven(name.to_string()));
        }
        let Some(&ai) = self.driven_by.get(name) else {
            return Err(RtlError::Undriven(name.to_string()));
        };
        if !self.done.contains_key(&ai) {
            if let Some(pos) = self.active.iter().position(|&x| x == ai) {
                let mut cycle: Vec<String> = self.active[pos..]
                    .iter()
                    .map(|&i| self.ast.assigns[i].targets.join(","))
                    .collect();
                cycle.push(self.ast.assigns[ai].targets.join(","));
                return Err(RtlError::CombinationalLoop(cycle));
            }
            self.active.push(ai);
            let assign = &self.ast.assigns[ai];
            let total = self.ast.lvalue_width(&assign.targets);
            let word = self.expr(&assign.expr, total)?;
            self.active.pop();
            self.done.insert(ai, word);
        }
        let assign = &self.ast.assigns[ai];
        let word = &self.done[&ai];
        // targets are MSB-first; word is LSB-first
        let mut lo = self.ast.lvalue_width(&assign.targets);
        for t in &assign.targets {
            let w = self.ast.width_of(t);
            lo -= w;
            if t == name {
                return Ok(word[lo as usize..(lo + w) as usize].to_vec());
            }
        }
        unreachable!("driven_by points at an assign that targets the name")
    }

    fn extend(word: Word, width: u32) -> Word {
        let mut w = word;
        w.resize(width as usize, ZERO);
        w
    }

    fn expr(&mut self, e: &Expr, width: u32) -> Result<Word> {
        let ast = self.ast;
        Ok(match e {
            Expr::Ident(n) => Self::extend(self.resolve(n)?, width),
            Expr::Lit { value, .. } => {
                let v = value & mask(width);
                (0..width).map(|i| Signal::Const((v >> i) & 1 == 1)).collect()
            }
            Expr::Index { name, bit } => Self::extend(vec![self.resolve(name)?[*bit as usize]], width),
            Expr::Slice { name, msb, lsb } => {
                Self::extend(self.resolve(name)?[*lsb as usize..=*msb as usize].to_vec(), width)
            }
            Expr::Concat(parts) => {
                let mut word = Vec::new();
                for p in parts.iter().rev() {
                    let w = ast.self_width(p);
                    word.extend(self.expr(p, w)?);
                }
                Self::extend(word, width)
            }
            Expr::Not(a) => {
                let a = self.expr(a, width)?;
                a.into_iter().map(|s| self.b.inv(s)).collect()
            }
            Expr::Binary(op, a, b) if op.is_compare() => {
                let wc = ast.self_width(a).max(ast.self_width(b));
                let x = self.expr(a, wc)?;
                let y = self.expr(b, wc)?;
                let bit = match op {
                    BinOp::Eq => self.equal(&x, &y),
                    _ => self.less(&x, &y),
                };
                Self::extend(vec![bit], width)
            }
            Expr::Binary(op, a, b) => {
                let x = self.expr(a, width)?;
                let y = self.expr(b, width)?;
                match op {
                    BinOp::And => x.into_iter().zip(y).map(|(p, q)| self.b.and2(p, q)).collect(),
                    BinOp::Or => x.into_iter().zip(y).map(|(p, q)| self.b.or2(p, q)).collect(),
                    BinOp::Xor => x.into_iter().zip(y).map(|(p, q)| self.b.xor2(p, q)).collect(),
                    BinOp::Add => self.ripple_add(&x, &y, ZERO),
                    BinOp::Sub => {
                        let ny: Word = y.into_iter().map(|s| self.b.inv(s)).collect();
                        self.ripple_add(&x, &ny, ONE)
                    }
                    BinOp::Eq | BinOp::Lt => unreachable!(),
                }
            }
            Expr::Ternary(c, t, f) => {
                let sel = self.truth(c)?;
                let t = self.expr(t, width)?;
                let f = self.expr(f, width)?;
                f.into_iter().zip(t).map(|(d0, d1)| self.b.mux(sel, d0, d1)).collect()
            }
        })
    }

    fn truth(&mut self, e: &Expr) -> Result<Signal> {
        let w = self.ast.self_width(e);
        let bits = self.expr(e, w)?;
        Ok(self.b.tree(bits, Builder::or2, ZERO))
    }

    /// Full-adder slices; the carry out of the top bit is not built.
    fn ripple_add(&mut self, x: &[Signal], y: &[Signal], carry_in: Signal) -> Word {
        let mut carry = carry_in;
        let mut sum = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let p = self.b.xor2(x[i], y[i]);
            sum.push(self.b.xor2(p, carry));
            if i + 1 < x.len() {
                let g = self.b.and2(x[i], y[i]);
                let t = self.b.and2(carry, p);
                carry = self.b.or2(g, t);
            }
        }
        sum
    }

    fn equal(&mut self, x: &[Signal], y: &[Signal]) -> Signal {
        let bits: Vec<Signal> = x.iter().zip(y).map(|(a, b)| self.b.xnor2(*a, *b)).collect();
        self.b.tree(bits, Builder::and2, ONE)
    }

    /// Unsigned `x < y`, rippled from the LSB.
    fn less(&mut self, x: &[Signal], y: &[Signal]) -> Signal {
        let mut lt = ZERO;
        for (a, b) in x.iter().zip(y) {
            let na = self.b.inv(*a);
            let here = self.b.and2(na, *b);
            let eq = self.b.xnor2(*a, *b);
            let carried = self.b.and2(eq, lt);
            lt = self.b.or2(here, carried);
        }
        lt
    }

    fn exec(&mut self, s: &Stmt, mut env: Env) -> Result<Env> {
        match s {
            Stmt::Block(stmts) => {
                for st in stmts {
                    env = self.exec(st, env)?;
                }
                Ok(env)
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
                Ok(env)
            }
            Stmt::If { cond, then, els } => {
                let sel = self.truth(cond)?;
                let t = self.exec(then, env.clone())?;
                let f = match els {
                    Some(e) => self.exec(e, env)?,
                    None => env,
                };
                Ok(self.merge(sel, f, t))
            }
            Stmt::Case { subject, items } => {
                let ast = self.ast;
                let wc = items
                    .iter()
                    .flat_map(|i| i.labels.iter())
                    .map(|l| ast.self_width(l))
                    .fold(ast.self_width(subject), u32::max);
                let subj = self.expr(subject, wc)?;
                let mut matches = Vec::new();
                for item in items.iter().filter(|i| !i.labels.is_empty()) {
                    let mut hits = Vec::new();
                    for l in &item.labels {
                        let lv = self.expr(l, wc)?;
                        hits.push(self.equal(&subj, &lv));
                    }
                    matches.push(self.b.tree(hits, Builder::or2, ZERO));
                }
                let mut acc = match items.iter().find(|i| i.labels.is_empty()) {
                    Some(d) => self.exec(&d.body, env.clone())?,
                    None => env.clone(),
                };
                let labelled: Vec<_> = items.iter().filter(|i| !i.labels.is_empty()).collect();
                for (item, hit) in labelled.into_iter().zip(matches).rev() {
                    let taken = self.exec(&item.body, env.clone())?;
                    acc = self.merge(hit, acc, taken);
                }
                Ok(acc)
            }
        }
    }

    /// `sel ? taken : fallthrough`, bitwise over every register touched by either side.
    fn merge(&mut self, sel: Signal, fallthrough: Env, taken: Env) -> Env {
        let mut names: Vec<&String> = fallthrough.keys().chain(taken.keys()).collect();
        names.sort();
        names.dedup();
        let mut out = Env::new();
        for name in names {
            let q = &self.regs[name];
            let f = fallthrough.get(name).unwrap_or(q).clone();
            let t = taken.get(name).unwrap_or(q).clone();
            let word = f.into_iter().zip(t).map(|(d0, d1)| self.b.mux(sel, d0, d1)).collect();
            out.insert(name.clone(), word);
        }
        out
    }
}
