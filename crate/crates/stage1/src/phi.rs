//! The 34-slot feature vector distilled from an approximate report.
//!
//! | slots    | content                                                    |
//! |----------|------------------------------------------------------------|
//! | 0..=8    | estimated gate counts, INV BUF AND2 OR2 XOR2 NAND2 NOR2 XNOR2 MUX2 |
//! | 9        | flop bits                                                  |
//! | 10, 11   | primary input bits, primary output bits                    |
//! | 12       | critical depth in levels                                   |
//! | 13..=17  | top-5 approximate arrivals in ps, zero-padded              |
//! | 18       | violating paths at the reference clock                     |
//! | 19..=26  | depth histogram: 0, 1, 2, 3, 4-5, 6-8, 9-16, 17+           |
//! | 27, 28   | endpoints: flop D pins, outputs                            |
//! | 29..=32  | paths: in->reg, reg->reg, reg->out, in->out                |
//! | 33       | operator count                                             |

use slackcast_rtl::ast::{Ast, BinOp, Expr, Stmt};
use slackcast_rtl::GateType;

use crate::approx::{ApproxReport, EndKind, StartKind};

pub const PHI_DIM: usize = 34;
pub const LAYOUT_VERSION: &str = "phi34-v1";

pub const SLOT_FLOPS: usize = 9;
pub const SLOT_INPUTS: usize = 10;
pub const SLOT_OUTPUTS: usize = 11;
pub const SLOT_DEPTH: usize = 12;
pub const SLOT_TOP_ARRIVALS: usize = 13;
pub const SLOT_VIOLATING: usize = 18;
pub const SLOT_DEPTH_HIST: usize = 19;
pub const SLOT_ENDPOINTS: usize = 27;
pub const SLOT_PATH_TYPES: usize = 29;
pub const SLOT_OPERATORS: usize = 33;

pub type Phi = [f64; PHI_DIM];

/// Histogram bin for a path depth.
pub fn depth_bin(depth: u32) -> usize {
    match depth {
        0..=3 => depth as usize,
        4..=5 => 4,
        6..=8 => 5,
        9..=16 => 6,
        _ => 7,
    }
}

/// Word-level gate estimate, ignoring constant folding and sharing.
#[derive(Default)]
struct Census([f64; 9]);

impl Census {
    fn add(&mut self, g: GateType, n: u32) {
        self.0[g.index()] += n as f64;
    }

    fn reduce(&mut self, width: u32) {
        self.add(GateType::Or2, width.saturating_sub(1));
    }

    fn compare(&mut self, op: BinOp, wc: u32) {
        self.add(GateType::Xnor2, wc);
        if op == BinOp::Eq {
            self.add(GateType::And2, wc.saturating_sub(1));
        } else {
            self.add(GateType::Inv, wc);
            self.add(GateType::And2, 2 * wc);
            self.add(GateType::Or2, wc);
        }
    }

    fn expr(&mut self, ast: &Ast, e: &Expr, width: u32) {
        match e {
            Expr::Ident(_) | Expr::Lit { .. } | Expr::Index { .. } | Expr::Slice { .. } => {}
            Expr::Concat(parts) => parts.iter().for_each(|p| self.expr(ast, p, ast.self_width(p))),
            Expr::Not(a) => {
                self.add(GateType::Inv, width);
                self.expr(ast, a, width);
            }
            Expr::Binary(op, a, b) if op.is_compare() => {
                let wc = ast.self_width(a).max(ast.self_width(b));
                self.compare(*op, wc);
                self.expr(ast, a, wc);
                self.expr(ast, b, wc);
            }
            Expr::Binary(op, a, b) => {
                match op {
                    BinOp::And => self.add(GateType::And2, width),
                    BinOp::Or => self.add(GateType::Or2, width),
                    BinOp::Xor => self.add(GateType::Xor2, width),
                    BinOp::Add | BinOp::Sub => {
                        self.add(GateType::Xor2, 2 * width);
                        self.add(GateType::And2, 2 * width);
                        self.add(GateType::Or2, width);
                        if *op == BinOp::Sub {
                            self.add(GateType::Inv, width);
                        }
                    }
                    BinOp::Eq | BinOp::Lt => unreachable!(),
                }
                self.expr(ast, a, width);
                self.expr(ast, b, width);
            }
            Expr::Ternary(c, t, f) => {
                let wc = ast.self_width(c);
                self.reduce(wc);
                self.add(GateType::Mux2, width);
                self.expr(ast, c, wc);
                self.expr(ast, t, width);
                self.expr(ast, f, width);
            }
        }
    }

    fn stmt(&mut self, ast: &Ast, s: &Stmt) {
        let target_bits = |s: &Stmt| {
            let mut names = Vec::new();
            s.for_each_target(&mut |t| names.push(t));
            names.sort_unstable();
            names.dedup();
            names.iter().map(|n| ast.width_of(n)).sum::<u32>()
        };
        match s {
            Stmt::Block(stmts) => stmts.iter().for_each(|st| self.stmt(ast, st)),
            Stmt::NonBlocking { targets, expr } => self.expr(ast, expr, ast.lvalue_width(targets)),
            Stmt::If { cond, then, els } => {
                let wc = ast.self_width(cond);
                self.reduce(wc);
                self.expr(ast, cond, wc);
                self.add(GateType::Mux2, target_bits(s));
                self.stmt(ast, then);
                if let Some(e) = els {
                    self.stmt(ast, e);
                }
            }
            Stmt::Case { subject, items } => {
                let wc = items
                    .iter()
                    .flat_map(|i| i.labels.iter())
                    .map(|l| ast.self_width(l))
                    .fold(ast.self_width(subject), u32::max);
                self.expr(ast, subject, wc);
                for item in items {
                    for l in &item.labels {
                        self.compare(BinOp::Eq, wc);
                        self.expr(ast, l, wc);
                    }
                    if !item.labels.is_empty() {
                        self.reduce(item.labels.len() as u32);
                        self.add(GateType::Mux2, target_bits(&item.body));
                    }
                    self.stmt(ast, &item.body);
                }
            }
        }
    }
}

/// Fills the fixed 34-slot layout from `ast` and its approximate report.
pub fn extract_phi(ast: &Ast, report: &ApproxReport) -> Phi {
    let mut phi = [0.0; PHI_DIM];
    let mut census = Census::default();
    for a in &ast.assigns {
        census.expr(ast, &a.expr, ast.lvalue_width(&a.targets));
    }
    for b in &ast.blocks {
        census.stmt(ast, &b.body);
    }
    phi[..9].copy_from_slice(&census.0);

    phi[SLOT_FLOPS] = ast.registers().map(|d| d.width as f64).sum();
    phi[SLOT_INPUTS] = ast.inputs().map(|d| d.width as f64).sum();
    phi[SLOT_OUTPUTS] = ast.outputs().map(|d| d.width as f64).sum();
    phi[SLOT_DEPTH] = report.critical_depth() as f64;

    let mut arrivals: Vec<f64> = report.paths.iter().map(|p| p.arrival).collect();
    arrivals.sort_by(|a, b| b.total_cmp(a));
    for (slot, a) in arrivals.into_iter().take(5).enumerate() {
        phi[SLOT_TOP_ARRIVALS + slot] = a;
    }
    phi[SLOT_VIOLATING] = report.violating as f64;

    for p in &report.paths {
        phi[SLOT_DEPTH_HIST + depth_bin(p.depth)] += 1.0;
        let end = match p.end_kind {
            EndKind::Flop => 0,
            EndKind::Output => 1,
        };
        phi[SLOT_ENDPOINTS + end] += 1.0;
        let kind = match (p.start_kind, p.end_kind) {
            (StartKind::Input, EndKind::Flop) => 0,
            (StartKind::Flop, EndKind::Flop) => 1,
            (StartKind::Flop, EndKind::Output) => 2,
            (StartKind::Input, EndKind::Output) => 3,
        };
        phi[SLOT_PATH_TYPES + kind] += 1.0;
    }
    phi[SLOT_OPERATORS] = ast.operator_count() as f64;
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::approx_report;
    use slackcast_rtl::parse;

    fn phi(src: &str) -> Phi {
        let ast = parse(src).unwrap();
        let r = approx_report(&ast, 1000.0).unwrap();
        extract_phi(&ast, &r)
    }

    #[test]
    fn single_and() {
        let p = phi("module m(input a, input b, output y); assign y = a & b; endmodule");
        assert_eq!(p[GateType::And2.index()], 1.0);
        assert_eq!(p[..9].iter().sum::<f64>(), 1.0);
        assert_eq!(p[SLOT_FLOPS], 0.0);
        assert_eq!(p[SLOT_DEPTH], 1.0);
        assert_eq!(p[SLOT_PATH_TYPES + 3], 1.0);
        assert_eq!(p[SLOT_OPERATORS], 1.0);
        assert_eq!(p[SLOT_TOP_ARRIVALS], 30.0);
    }

    #[test]
    fn passthrough() {
        let p = phi("module m(input a, output y); assign y = a; endmodule");
        assert!(p[..9].iter().all(|&v| v == 0.0));
        assert_eq!(p[SLOT_DEPTH], 0.0);
        let paths: f64 = p[SLOT_PATH_TYPES..SLOT_PATH_TYPES + 4].iter().sum();
        assert_eq!(paths, 1.0);
        assert_eq!(p[SLOT_DEPTH_HIST], 1.0);
        assert!(p.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn bins() {
        let expect = [(0, 0), (3, 3), (4, 4), (5, 4), (6, 5), (8, 5), (9, 6), (16, 6), (17, 7), (400, 7)];
        for (d, b) in expect {
            assert_eq!(depth_bin(d), b, "depth {d}");
        }
    }
}
