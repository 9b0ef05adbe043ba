//! Procedural Verilog generator with tier and gate-count-bin targets.
//!
//! Modules are allocated jointly over (tier, bin) cells by iterative
//! proportional fitting on the feasible cells, then each slot draws a
//! template and searches its size knob until the elaborated gate count
//! lands in the slot's bin.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    TinyComb,
    StructuredComb,
    ElementalSeq,
    CounterShift,
    FsmComposite,
}

impl Tier {
    pub const ALL: [Tier; 5] = [
        Tier::TinyComb,
        Tier::StructuredComb,
        Tier::ElementalSeq,
        Tier::CounterShift,
        Tier::FsmComposite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tier::TinyComb => "tiny-comb",
            Tier::StructuredComb => "structured-comb",
            Tier::ElementalSeq => "elemental-seq",
            Tier::CounterShift => "counter-shift",
            Tier::FsmComposite => "fsm-composite",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Tier::TinyComb => "tc",
            Tier::StructuredComb => "sc",
            Tier::ElementalSeq => "es",
            Tier::CounterShift => "cs",
            Tier::FsmComposite => "fc",
        }
    }
}

impl std::str::FromStr for Tier {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Tier::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown tier `{s}`"))
    }
}

/// Inclusive gate-count ranges; the first bin also holds gate-free modules.
pub const GATE_BINS: [(usize, usize); 5] = [(0, 10), (11, 50), (51, 100), (101, 200), (201, usize::MAX)];
pub const BIN_LABELS: [&str; 5] = ["1-10", "10-50", "50-100", "100-200", "200+"];

pub fn gate_bin(gates: usize) -> usize {
    GATE_BINS.iter().position(|&(lo, hi)| gates >= lo && gates <= hi).expect("bins cover all counts")
}

/// Which (tier, bin) cells a tier's templates can reach.
pub const FEASIBLE: [[bool; 5]; 5] = [
    [true, true, true, false, false],
    [true, true, true, true, true],
    [true, true, true, true, true],
    [true, true, true, true, true],
    [false, true, true, true, true],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Percent per tier, in [`Tier::ALL`] order.
    pub tier_mix: [f64; 5],
    /// Percent per gate bin, in [`GATE_BINS`] order.
    pub bin_mix: [f64; 5],
    pub seed: u64,
    pub count: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            tier_mix: [11.0, 15.0, 22.0, 24.0, 28.0],
            bin_mix: [33.0, 31.0, 14.0, 11.0, 11.0],
            seed: 7,
            count: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModule {
    pub id: String,
    pub tier: Tier,
    pub domain: String,
    /// Elaborated gate count observed when the module was accepted.
    pub gates: usize,
    pub source: String,
}

fn check_mix(name: &str, mix: &[f64; 5]) -> Result<()> {
    let sum: f64 = mix.iter().sum();
    if mix.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 100.0).abs() > 1e-6 {
        return Err(Error::InfeasibleSpec(format!("{name} must be non-negative and sum to 100, got {sum}")));
    }
    Ok(())
}

/// Joint cell shares (fractions summing to 1) matching both marginals.
pub fn joint_shares(spec: &GenSpec) -> Result<[[f64; 5]; 5]> {
    check_mix("tier mix", &spec.tier_mix)?;
    check_mix("bin mix", &spec.bin_mix)?;
    let rows: Vec<f64> = spec.tier_mix.iter().map(|v| v / 100.0).collect();
    let cols: Vec<f64> = spec.bin_mix.iter().map(|v| v / 100.0).collect();
    let mut m = [[0.0; 5]; 5];
    for t in 0..5 {
        for b in 0..5 {
            if FEASIBLE[t][b] {
                m[t][b] = 1.0;
            }
        }
    }
    for _ in 0..5000 {
        for t in 0..5 {
            let s: f64 = m[t].iter().sum();
            if s > 0.0 {
                m[t].iter_mut().for_each(|v| *v *= rows[t] / s);
            }
        }
        for b in 0..5 {
            let s: f64 = (0..5).map(|t| m[t][b]).sum();
            if s > 0.0 {
                (0..5).for_each(|t| m[t][b] *= cols[b] / s);
            }
        }
        let err = (0..5)
            .map(|t| (m[t].iter().sum::<f64>() - rows[t]).abs())
            .chain((0..5).map(|b| ((0..5).map(|t| m[t][b]).sum::<f64>() - cols[b]).abs()))
            .fold(0.0, f64::max);
        if err < 1e-10 {
            return Ok(m);
        }
    }
    Err(Error::InfeasibleSpec(
        "no allocation over feasible (tier, gate-bin) cells matches both mixes".into(),
    ))
}

/// Integer module counts per (tier, bin) cell summing to `spec.count`.
pub fn allocate(spec: &GenSpec) -> Result<[[usize; 5]; 5]> {
    let shares = joint_shares(spec)?;
    let mut counts = [[0usize; 5]; 5];
    let mut rema = Vec::new();
    let mut used = 0;
    for t in 0..5 {
        for b in 0..5 {
            let ideal = shares[t][b] * spec.count as f64;
            counts[t][b] = ideal.floor() as usize;
            used += counts[t][b];
            if FEASIBLE[t][b] && shares[t][b] > 0.0 {
                rema.push((ideal - ideal.floor(), t, b));
            }
        }
    }
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for &(_, t, b) in rema.iter().cycle().take(spec.count - used) {
        counts[t][b] += 1;
    }
    Ok(counts)
}

/// Generates `spec.count` modules; identical specs give identical output.
pub fn generate(spec: &GenSpec) -> Result<Vec<SourceModule>> {
    let counts = allocate(spec)?;
    let mut slots = Vec::with_capacity(spec.count);
    for (t, row) in counts.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            slots.extend(std::iter::repeat((Tier::ALL[t], b)).take(n));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    slots.shuffle(&mut rng);
    slots
        .par_iter()
        .enumerate()
        .map(|(i, &(tier, bin))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64 + 1);
            generate_one(&mut rng, &format!("m{i:05}"), tier, bin)
        })
        .collect()
}

/// Draws templates for `tier` until one elaborates into gate bin `bin`.
pub fn generate_one(rng: &mut ChaCha8Rng, id: &str, tier: Tier, bin: usize) -> Result<SourceModule> {
    let (lo, hi) = GATE_BINS[bin];
    let hi_target = hi.min(480);
    let (kmin, kmax) = knob_range(tier);
    let name = format!("{}_{id}", tier.prefix());
    for _restart in 0..40 {
        let recipe: u64 = rng.gen();
        let target = rng.gen_range(lo.max(1)..=hi_target) as f64;
        let mut knob = rng.gen_range(kmin..=kmin + 3);
        for _ in 0..12 {
            let (source, domain) = template(&mut ChaCha8Rng::seed_from_u64(recipe), tier, knob, &name);
            let gates = slackcast_rtl::synthesize(&source)
                .unwrap_or_else(|e| panic!("generator emitted invalid RTL ({e}):\n{source}"))
                .gate_count();
            if gates >= lo && gates <= hi {
                return Ok(SourceModule {
                    id: id.to_string(),
                    tier,
                    domain: domain.to_string(),
                    gates,
                    source,
                });
            }
            let ratio = target / gates.max(1) as f64;
            let mut next = (knob as f64 * ratio.clamp(0.25, 4.0)).round() as u32;
            if next == knob {
                next = if gates < lo { knob + 1 } else { knob.saturating_sub(1) };
            }
            let next = next.clamp(kmin, kmax);
            if next == knob {
                break;
            }
            knob = next;
        }
    }
    Err(Error::InfeasibleSpec(format!(
        "could not realize a {} module in gate bin {}",
        tier.name(),
        BIN_LABELS[bin]
    )))
}

fn styles(tier: Tier) -> u32 {
    match tier {
        Tier::TinyComb => 4,
        Tier::StructuredComb => 5,
        Tier::ElementalSeq => 4,
        Tier::CounterShift => 5,
        Tier::FsmComposite => 3,
    }
}

fn knob_range(tier: Tier) -> (u32, u32) {
    match tier {
        Tier::TinyComb => (1, 110),
        Tier::StructuredComb => (1, 48),
        Tier::ElementalSeq => (1, 64),
        Tier::CounterShift => (2, 64),
        Tier::FsmComposite => (1, 32),
    }
}

fn range(w: u32) -> String {
    if w == 1 {
        String::new()
    } else {
        format!("[{}:0] ", w - 1)
    }
}

fn lit(w: u32, v: u64) -> String {
    format!("{w}'d{}", v & slackcast_rtl::ast::mask(w))
}

fn rand_lit(rng: &mut impl Rng, w: u32) -> String {
    lit(w, rng.gen::<u64>())
}

fn pick<'a, T>(rng: &mut impl Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

/// Accumulates ports and statements for a module built from several units.
struct Builder {
    ports: Vec<String>,
    decls: Vec<String>,
    body: Vec<String>,
    clk: bool,
    unit: u32,
}

impl Builder {
    fn new() -> Self {
        Builder {
            ports: Vec::new(),
            decls: Vec::new(),
            body: Vec::new(),
            clk: false,
            unit: 0,
        }
    }

    fn next_unit(&mut self) {
        self.unit += 1;
    }

    fn n(&self, base: &str) -> String {
        format!("{base}{}", self.unit)
    }

    fn input(&mut self, w: u32, base: &str) -> String {
        let n = self.n(base);
        self.ports.push(format!("input {}{n}", range(w)));
        n
    }

    fn output(&mut self, w: u32, base: &str) -> String {
        let n = self.n(base);
        self.ports.push(format!("output {}{n}", range(w)));
        n
    }

    fn output_reg(&mut self, w: u32, base: &str) -> String {
        self.clk = true;
        let n = self.n(base);
        self.ports.push(format!("output reg {}{n}", range(w)));
        n
    }

    fn reg(&mut self, w: u32, base: &str) -> String {
        self.clk = true;
        let n = self.n(base);
        self.decls.push(format!("  reg {}{n};", range(w)));
        n
    }

    fn line(&mut self, s: String) {
        self.body.push(format!("  {s}"));
    }

    fn seq(&mut self, s: String) {
        self.clk = true;
        self.body.push(format!("  always @(posedge clk) {s}"));
    }

    fn finish(self, name: &str) -> String {
        let mut ports = self.ports;
        if self.clk {
            ports.insert(0, "input clk".into());
        }
        let mut s = format!("module {name}({});\n", ports.join(", "));
        for l in self.decls.iter().chain(&self.body) {
            s.push_str(l);
            s.push('\n');
        }
        s.push_str("endmodule\n");
        s
    }
}

/// Random expression with `ops` operators over `leaves` of width `w`.
fn expr_tree(rng: &mut impl Rng, ops: u32, leaves: &[String], w: u32) -> String {
    if ops == 0 {
        return if rng.gen_bool(0.06) {
            rand_lit(rng, w)
        } else {
            pick(rng, leaves).clone()
        };
    }
    let r: f64 = rng.gen();
    if r < 0.1 {
        let inner = expr_tree(rng, ops - 1, leaves, w);
        if inner.starts_with('(') || !inner.contains(' ') {
            format!("~{inner}")
        } else {
            format!("~({inner})")
        }
    } else if r < 0.2 && ops >= 2 {
        let cond = pick(rng, leaves).clone();
        let left = rng.gen_range(0..ops - 1);
        format!(
            "({cond} ? {} : {})",
            expr_tree(rng, left, leaves, w),
            expr_tree(rng, ops - 1 - left, leaves, w)
        )
    } else {
        let left = rng.gen_range(0..ops);
        let op = pick(rng, &["&", "|", "^"]);
        format!(
            "({} {op} {})",
            expr_tree(rng, left, leaves, w),
            expr_tree(rng, ops - 1 - left, leaves, w)
        )
    }
}

/// Renders one module; all randomness comes from `rng`, so a fixed
/// recipe seed with a varying knob yields a monotone-ish size family.
fn template(rng: &mut ChaCha8Rng, tier: Tier, knob: u32, name: &str) -> (String, &'static str) {
    let mut b = Builder::new();
    let domain = if tier == Tier::FsmComposite {
        let style = rng.gen_range(0..styles(tier));
        fsm_unit(rng, &mut b, style, knob)
    } else {
        let units = *pick(rng, &[1, 1, 1, 2, 2, 3]);
        let mut domain = "";
        for u in 0..units {
            b.next_unit();
            let style = rng.gen_range(0..styles(tier));
            let w = if u == 0 { knob } else { ((knob as f64) * rng.gen_range(0.2..0.8)).round().max(1.0) as u32 };
            let d = match tier {
                Tier::TinyComb => tiny_unit(rng, &mut b, style, w),
                Tier::StructuredComb => structured_unit(rng, &mut b, style, w),
                Tier::ElementalSeq => elemental_unit(rng, &mut b, style, w),
                _ => counter_unit(rng, &mut b, style, w.max(2)),
            };
            if u == 0 {
                domain = d;
            }
        }
        domain
    };
    let sequential = matches!(tier, Tier::ElementalSeq | Tier::CounterShift | Tier::FsmComposite);
    for _ in 0..rng.gen_range(0..=3) {
        b.next_unit();
        glue(rng, &mut b, sequential);
    }
    (b.finish(name), domain)
}

/// Gate-free wiring: pass-throughs, rotations, concatenations and, in
/// sequential tiers, plain registers.
fn glue(rng: &mut ChaCha8Rng, b: &mut Builder, sequential: bool) {
    let v = *pick(rng, &[1, 2, 3, 4, 6, 8, 12, 16]);
    let style = rng.gen_range(0..if sequential { 5 } else { 3 });
    match style {
        0 => {
            let i = b.input(v, "gi");
            let o = b.output(v, "go");
            b.line(format!("assign {o} = {i};"));
        }
        1 if v >= 2 => {
            let i = b.input(v, "gi");
            let o = b.output(v, "go");
            b.line(format!("assign {o} = {{{i}[0], {i}[{}:1]}};", v - 1));
        }
        1 | 2 => {
            let u = *pick(rng, &[1, 2, 4]);
            let i = b.input(v, "gi");
            let j = b.input(u, "gj");
            let o = b.output(v + u, "go");
            b.line(format!("assign {o} = {{{j}, {i}}};"));
        }
        3 => {
            let i = b.input(v, "gi");
            let o = b.output_reg(v, "gq");
            b.seq(format!("{o} <= {i};"));
        }
        _ => {
            let i = b.input(v, "gi");
            let r = b.reg(v, "gr");
            let o = b.output_reg(v, "gq");
            b.seq(format!("begin {r} <= {i}; {o} <= {r}; end"));
        }
    }
}

fn tiny_unit(rng: &mut ChaCha8Rng, b: &mut Builder, style: u32, knob: u32) -> &'static str {
    let w = [1, 1, 2, 4][style as usize];
    let n_in = rng.gen_range(2..=6usize);
    let leaves: Vec<String> = ["a", "b", "c", "d", "e", "f"][..n_in].iter().map(|s| b.input(w, s)).collect();
    let ops = knob.div_ceil(w).max(1);
    let n_out = rng.gen_range(1..=3u32).min(ops);
    let mut left = ops;
    for o in 0..n_out {
        let share = if o + 1 == n_out { left } else { rng.gen_range(1..=left - (n_out - 1 - o)) };
        left -= share;
        let y = b.output(w, &format!("y{o}_"));
        let e = expr_tree(rng, share - 1, &leaves, w);
        b.line(format!("assign {y} = {e};"));
    }
    "logic"
}

fn structured_unit(rng: &mut ChaCha8Rng, b: &mut Builder, style: u32, w: u32) -> &'static str {
    match style {
        0 => {
            let terms = rng.gen_range(2..=3usize);
            let names: Vec<String> = ["a", "b", "c"][..terms].iter().map(|s| b.input(w, s)).collect();
            let mut e = names[0].clone();
            for t in &names[1..] {
                e = format!("{e} {} {t}", pick(rng, &["+", "+", "-"]));
            }
            if rng.gen_bool(0.3) {
                e = format!("{e} ^ {}", rand_lit(rng, w));
            }
            if rng.gen_bool(0.5) && w < 64 {
                let co = b.output(1, "co");
                let s = b.output(w, "s");
                b.line(format!("assign {{{co}, {s}}} = {e};"));
            } else {
                let s = b.output(w, "s");
                b.line(format!("assign {s} = {e};"));
            }
            "arith"
        }
        1 => {
            let two = rng.gen_bool(0.5);
            let sel = b.input(if two { 2 } else { 1 }, "sel");
            let n = if two { 4 } else { 2 };
            let d: Vec<String> = ["a", "b", "c", "d"][..n].iter().map(|s| b.input(w, s)).collect();
            let y = b.output(w, "y");
            let e = if two {
                format!("{sel}[1] ? ({sel}[0] ? {} : {}) : ({sel}[0] ? {} : {})", d[3], d[2], d[1], d[0])
            } else {
                format!("{sel} ? {} : {}", d[1], d[0])
            };
            let mask = if rng.gen_bool(0.5) {
                format!(" {} {}", pick(rng, &["&", "|", "^"]), rand_lit(rng, w))
            } else {
                String::new()
            };
            b.line(format!("assign {y} = ({e}){mask};"));
            "mux"
        }
        2 => {
            let a = b.input(w, "a");
            let c = b.input(w, "b");
            let lt = b.output(1, "lt");
            b.line(format!("assign {lt} = {a} < {c};"));
            if rng.gen_bool(0.6) {
                let eq = b.output(1, "eq");
                let rhs = if rng.gen_bool(0.5) { c.clone() } else { rand_lit(rng, w) };
                b.line(format!("assign {eq} = {a} == {rhs};"));
            }
            if rng.gen_bool(0.6) {
                let mx = b.output(w, "mx");
                let alt = pick(rng, &[c.clone(), format!("~{c}"), format!("{a} ^ {c}")]).clone();
                b.line(format!("assign {mx} = {lt} ? {alt} : {a};"));
            }
            "compare"
        }
        3 => {
            let a = b.input(w, "a");
            let c = b.input(w, "b");
            let op = b.input(2, "op");
            let y = b.output(w, "y");
            let pool = [
                format!("{a} + {c}"),
                format!("{a} - {c}"),
                format!("{a} & {c}"),
                format!("{a} | {c}"),
                format!("{a} ^ {c}"),
                format!("~{a}"),
                format!("{c} - {a}"),
                format!("~({a} | {c})"),
            ];
            let mut f: Vec<&String> = pool.iter().collect();
            f.shuffle(rng);
            b.line(format!(
                "assign {y} = {op}[1] ? ({op}[0] ? {} : {}) : ({op}[0] ? {} : {});",
                f[0], f[1], f[2], f[3]
            ));
            "alu"
        }
        _ => {
            let a = b.input(w, "a");
            let c = b.input(w, "b");
            let d = b.output(w, "d");
            if rng.gen_bool(0.5) {
                b.line(format!("assign {d} = ({a} < {c}) ? {c} - {a} : {a} - {c};"));
            } else {
                let z = b.output(1, "z");
                b.line(format!("assign {d} = ({c} < {a}) ? {a} - {c} : {c} - {a};"));
                b.line(format!("assign {z} = {d} == {};", lit(w, 0)));
            }
            "arith"
        }
    }
}

fn elemental_unit(rng: &mut ChaCha8Rng, b: &mut Builder, style: u32, w: u32) -> &'static str {
    match style {
        0 => {
            let en = b.input(1, "en");
            let d = b.input(w, "d");
            let rhs = if rng.gen_bool(0.5) { b.input(w, "m") } else { rand_lit(rng, w) };
            let q = b.output_reg(w, "q");
            let op = pick(rng, &["&", "|", "^"]);
            b.seq(format!("if ({en}) {q} <= {d} {op} {rhs};"));
            "register"
        }
        1 => {
            let stages = rng.gen_range(2..=3u32);
            let srcs: Vec<String> = ["a", "b", "c"].iter().map(|s| b.input(w, s)).collect();
            let y = b.output(w, "y");
            let regs: Vec<String> = (1..=stages).map(|i| b.reg(w, &format!("r{i}_"))).collect();
            let mut stmts = Vec::new();
            let mut prev = srcs[0].clone();
            for r in &regs {
                let other = pick(rng, &srcs[1..]);
                let op = pick(rng, &["&", "|", "^", "+"]);
                stmts.push(format!("{r} <= {prev} {op} {other};"));
                prev = r.clone();
            }
            b.seq(format!("begin {} end", stmts.join(" ")));
            b.line(format!("assign {y} = {prev} {} {};", pick(rng, &["^", "&", "|"]), regs[0]));
            "pipeline"
        }
        2 => {
            let clr = b.input(1, "clr");
            let en = b.input(1, "en");
            let d = b.input(w, "d");
            let acc = b.output_reg(w, "acc");
            let op = pick(rng, &["+", "+", "^", "-"]);
            b.seq(format!(
                "if ({clr}) {acc} <= {}; else if ({en}) {acc} <= {acc} {op} {d};",
                rand_lit(rng, w)
            ));
            "accum"
        }
        _ => {
            let we = b.input(1, "we");
            let ws = b.input(1, "ws");
            let rs = b.input(1, "rs");
            let d = b.input(w, "d");
            let y = b.output(w, "y");
            let r0 = b.reg(w, "ra");
            let r1 = b.reg(w, "rb");
            b.seq(format!("if ({we}) begin if ({ws}) {r1} <= {d}; else {r0} <= {d}; end"));
            let tail = if rng.gen_bool(0.5) {
                format!(" {} {}", pick(rng, &["^", "|"]), rand_lit(rng, w))
            } else {
                String::new()
            };
            b.line(format!("assign {y} = ({rs} ? {r1} : {r0}){tail};"));
            "regfile"
        }
    }
}

fn counter_unit(rng: &mut ChaCha8Rng, b: &mut Builder, style: u32, w: u32) -> &'static str {
    let step = rng.gen_range(1..=3u64);
    match style {
        0 => {
            let en = b.input(1, "en");
            let q = b.output_reg(w, "q");
            b.seq(format!("if ({en}) {q} <= {q} + {};", lit(w, step)));
            if rng.gen_bool(0.5) {
                let tc = b.output(1, "tc");
                b.line(format!("assign {tc} = {q} == {};", rand_lit(rng, w)));
            }
            "counter"
        }
        1 => {
            let rst = b.input(1, "rst");
            let up = b.input(1, "up");
            let q = b.output_reg(w, "q");
            b.seq(format!(
                "if ({rst}) {q} <= {}; else if ({up}) {q} <= {q} + {s}; else {q} <= {q} - {s};",
                rand_lit(rng, w),
                s = lit(w, step)
            ));
            "counter"
        }
        2 => {
            let rst = b.input(1, "rst");
            let q = b.output_reg(w, "q");
            let fb = if rng.gen_bool(0.5) { format!("~{q}") } else { q.clone() };
            b.seq(format!(
                "if ({rst}) {q} <= {}; else {q} <= {{{q}[{}:0], {fb}[{}]}};",
                rand_lit(rng, w),
                w - 2,
                w - 1
            ));
            "ring"
        }
        3 => {
            let load = b.input(1, "load");
            let sin = b.input(1, "sin");
            let pin = b.input(w, "pin");
            let q = b.output_reg(w, "q");
            let sout = b.output(1, "sout");
            let left = rng.gen_bool(0.5);
            let shifted = if left {
                format!("{{{q}[{}:0], {sin}}}", w - 2)
            } else {
                format!("{{{sin}, {q}[{}:1]}}", w - 1)
            };
            b.seq(format!("if ({load}) {q} <= {pin}; else {q} <= {shifted};"));
            b.line(format!("assign {sout} = {q}[{}];", if left { w - 1 } else { 0 }));
            "shifter"
        }
        _ => {
            let load = b.input(1, "load");
            let d = b.input(w, "d");
            let q = b.output_reg(w, "q");
            let zero = b.output(1, "zero");
            b.seq(format!(
                "if ({load}) {q} <= {d}; else if ({q} == {z}) {q} <= {}; else {q} <= {q} - {};",
                rand_lit(rng, w),
                lit(w, step),
                z = lit(w, 0)
            ));
            b.line(format!("assign {zero} = {q} == {};", lit(w, 0)));
            "counter"
        }
    }
}

fn fsm_unit(rng: &mut ChaCha8Rng, b: &mut Builder, style: u32, w: u32) -> &'static str {
    let states = rng.gen_range(3..=(6 + w / 8).min(12));
    let sw = 32 - (states - 1).leading_zeros();
    let rst = b.input(1, "rst");
    let go = b.input(1, "go");
    let x = b.input(w, "x");
    let st = b.output_reg(sw, "st");
    let acc = b.output_reg(w, "acc");
    let busy = b.output(1, "busy");
    let y = b.output(w, "y");
    let mut codes: Vec<u32> = (0..1u32 << sw).collect();
    codes.shuffle(rng);
    let codes = &codes[..states as usize];
    let x0 = if w == 1 { x.clone() } else { format!("{x}[0]") };
    let mut arms = Vec::new();
    for (i, &c) in codes.iter().enumerate() {
        let next = lit(sw, codes[(i + 1) % codes.len()] as u64);
        let alt = lit(sw, *pick(rng, codes) as u64);
        let trans = match rng.gen_range(0..3) {
            0 => format!("if ({go}) {st} <= {next}; else {st} <= {alt};"),
            1 => format!("{st} <= {x0} ? {next} : {alt};"),
            _ => format!("{st} <= {next};"),
        };
        let data = match rng.gen_range(0..6) {
            0 => format!("{acc} <= {acc} + {x};"),
            1 => format!("{acc} <= {acc} ^ {x};"),
            2 => format!("{acc} <= {acc} - {};", lit(w, 1)),
            3 => format!("{acc} <= {x};"),
            4 => format!("{acc} <= {acc} & {};", rand_lit(rng, w)),
            _ => String::new(),
        };
        arms.push(format!("    {}: begin {trans} {data} end", lit(sw, c as u64)));
    }
    let reset = lit(sw, codes[0] as u64);
    b.seq(format!(
        "begin\n    if ({rst}) begin {st} <= {reset}; {acc} <= {}; end\n    else case ({st})\n{}\n    default: {st} <= {reset};\n    endcase\n  end",
        lit(w, 0),
        arms.join("\n")
    ));
    let watch = lit(sw, *pick(rng, codes) as u64);
    b.line(format!("assign {busy} = {st} == {watch};"));
    match style {
        0 => b.line(format!("assign {y} = {acc};")),
        1 => b.line(format!("assign {y} = {busy} ? {acc} : {x};")),
        _ => b.line(format!(
            "assign {y} = ({st} == {}) ? {acc} + {x} : {acc};",
            lit(sw, codes[1] as u64)
        )),
    }
    "fsm"
}
