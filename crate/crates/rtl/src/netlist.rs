//! Technology-independent gate-level netlist.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RtlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateType {
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "BUF")]
    Buf,
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "XOR2")]
    Xor2,
    #[serde(rename = "NAND2")]
    Nand2,
    #[serde(rename = "NOR2")]
    Nor2,
    #[serde(rename = "XNOR2")]
    Xnor2,
    #[serde(rename = "MUX2")]
    Mux2,
}

impl GateType {
    pub const ALL: [GateType; 9] = [
        GateType::Inv,
        GateType::Buf,
        GateType::And2,
        GateType::Or2,
        GateType::Xor2,
        GateType::Nand2,
        GateType::Nor2,
        GateType::Xnor2,
        GateType::Mux2,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateType::Inv | GateType::Buf => 1,
            GateType::Mux2 => 3,
            _ => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            GateType::Inv => "INV",
            GateType::Buf => "BUF",
            GateType::And2 => "AND2",
            GateType::Or2 => "OR2",
            GateType::Xor2 => "XOR2",
            GateType::Nand2 => "NAND2",
            GateType::Nor2 => "NOR2",
            GateType::Xnor2 => "XNOR2",
            GateType::Mux2 => "MUX2",
        }
    }

    /// MUX2 inputs are `[d0, d1, sel]`.
    pub fn eval(self, ins: &[bool]) -> bool {
        match self {
            GateType::Inv => !ins[0],
            GateType::Buf => ins[0],
            GateType::And2 => ins[0] & ins[1],
            GateType::Or2 => ins[0] | ins[1],
            GateType::Xor2 => ins[0] ^ ins[1],
            GateType::Nand2 => !(ins[0] & ins[1]),
            GateType::Nor2 => !(ins[0] | ins[1]),
            GateType::Xnor2 => !(ins[0] ^ ins[1]),
            GateType::Mux2 => {
                if ins[2] {
                    ins[1]
                } else {
                    ins[0]
                }
            }
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        GateType::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown gate type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A bit-level signal: either a net or a tied constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    Const(bool),
    Net(NetId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateType,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flop {
    /// Register bit name, e.g. `q[3]`.
    pub name: String,
    pub d: Signal,
    pub q: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputBit {
    pub name: String,
    pub driver: Signal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    FlopQ(usize),
    Gate(usize),
}

/// Gate-level DAG with flop boundaries. Gate ids are indices into `gates`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    /// Net names, indexed by `NetId`.
    pub nets: Vec<String>,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<OutputBit>,
    pub gates: Vec<Gate>,
    pub flops: Vec<Flop>,
}

impl Netlist {
    pub fn net_name(&self, n: NetId) -> &str {
        &self.nets[n.index()]
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn histogram(&self) -> [usize; 9] {
        let mut h = [0; 9];
        for g in &self.gates {
            h[g.kind.index()] += 1;
        }
        h
    }

    pub fn count(&self, kind: GateType) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// The unique driver of every net; fails on multiple or missing drivers
    /// and on arity violations.
    pub fn drivers(&self) -> Result<Vec<Driver>> {
        let mut drv: Vec<Option<Driver>> = vec![None; self.nets.len()];
        let set = |n: NetId, d: Driver, drv: &mut Vec<Option<Driver>>| -> Result<()> {
            let slot = drv
                .get_mut(n.index())
                .ok_or_else(|| RtlError::Undriven(format!("net #{}", n.0)))?;
            if slot.is_some() {
                return Err(RtlError::MultipleDrivers(self.nets[n.index()].clone()));
            }
            *slot = Some(d);
            Ok(())
        };
        for (i, n) in self.inputs.iter().enumerate() {
            set(*n, Driver::Input(i), &mut drv)?;
        }
        for (i, f) in self.flops.iter().enumerate() {
            set(f.q, Driver::FlopQ(i), &mut drv)?;
        }
        for (i, g) in self.gates.iter().enumerate() {
            if g.inputs.len() != g.kind.arity() {
                return Err(RtlError::WidthMismatch(format!(
                    "gate {i} ({}) has {} inputs",
                    g.kind,
                    g.inputs.len()
                )));
            }
            set(g.output, Driver::Gate(i), &mut drv)?;
        }
        drv.into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| RtlError::Undriven(self.nets[i].clone())))
            .collect()
    }

    /// Topological order of gate ids over the combinational subgraph.
    /// Fails with `CombinationalLoop` when the gates contain a cycle.
    pub fn topo_order(&self) -> Result<Vec<usize>> {
        let drivers = self.drivers()?;
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); self.nets.len()];
        let mut pending: Vec<usize> = vec![0; self.gates.len()];
        for (gi, g) in self.gates.iter().enumerate() {
            for inp in &g.inputs {
                if matches!(drivers[inp.index()], Driver::Gate(_)) {
                    pending[gi] += 1;
                    fanout[inp.index()].push(gi);
                }
            }
        }
        let mut ready: std::collections::VecDeque<usize> =
            (0..self.gates.len()).filter(|&g| pending[g] == 0).collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(g) = ready.pop_front() {
            order.push(g);
            for &succ in &fanout[self.gates[g].output.index()] {
                pending[succ] -= 1;
                if pending[succ] == 0 {
                    ready.push_back(succ);
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck: Vec<String> = (0..self.gates.len())
                .filter(|&g| pending[g] > 0)
                .map(|g| self.nets[self.gates[g].output.index()].clone())
                .collect();
            return Err(RtlError::CombinationalLoop(stuck));
        }
        Ok(order)
    }

    /// Longest source-to-sink path measured in gates (unit delay).
    pub fn unit_depth(&self) -> Result<u32> {
        let order = self.topo_order()?;
        let mut level = vec![0u32; self.nets.len()];
        for g in order {
            let gate = &self.gates[g];
            let l = gate.inputs.iter().map(|n| level[n.index()]).max().unwrap_or(0) + 1;
            level[gate.output.index()] = l;
        }
        Ok(self
            .endpoints()
            .filter_map(|s| match s {
                Signal::Net(n) => Some(level[n.index()]),
                Signal::Const(_) => None,
            })
            .max()
            .unwrap_or(0))
    }

    /// Endpoint drivers: primary outputs then flop D pins.
    pub fn endpoints(&self) -> impl Iterator<Item = Signal> + '_ {
        self.outputs.iter().map(|o| o.driver).chain(self.flops.iter().map(|f| f.d))
    }

    /// Number of distinct source-to-endpoint paths (saturating).
    pub fn path_count(&self) -> Result<u64> {
        let order = self.topo_order()?;
        let mut paths = vec![0u64; self.nets.len()];
        for n in &self.inputs {
            paths[n.index()] = 1;
        }
        for f in &self.flops {
            paths[f.q.index()] = 1;
        }
        for g in order {
            let gate = &self.gates[g];
            let p = gate
                .inputs
                .iter()
                .fold(0u64, |acc, n| acc.saturating_add(paths[n.index()]));
            paths[gate.output.index()] = p;
        }
        Ok(self
            .endpoints()
            .filter_map(|s| match s {
                Signal::Net(n) => Some(paths[n.index()]),
                Signal::Const(_) => None,
            })
            .fold(0u64, u64::saturating_add))
    }

    /// Evaluates every net for one input vector and flop state.
    /// `inputs[i]` drives `self.inputs[i]`; `state[i]` is flop `i`'s Q.
    pub fn simulate(&self, inputs: &[bool], state: &[bool]) -> Result<Simulation> {
        let order = self.topo_order()?;
        let mut val = vec![false; self.nets.len()];
        for (n, v) in self.inputs.iter().zip(inputs) {
            val[n.index()] = *v;
        }
        for (f, v) in self.flops.iter().zip(state) {
            val[f.q.index()] = *v;
        }
        let mut buf = Vec::with_capacity(3);
        for g in order {
            let gate = &self.gates[g];
            buf.clear();
            buf.extend(gate.inputs.iter().map(|n| val[n.index()]));
            val[gate.output.index()] = gate.kind.eval(&buf);
        }
        let read = |s: Signal| match s {
            Signal::Const(b) => b,
            Signal::Net(n) => val[n.index()],
        };
        Ok(Simulation {
            outputs: self.outputs.iter().map(|o| read(o.driver)).collect(),
            next_state: self.flops.iter().map(|f| read(f.d)).collect(),
        })
    }

    /// Line-oriented debug dump:
    /// `INPUT <net>`, `GATE <id> <type> <in...> -> <out>`, `DFF <d> -> <q>`,
    /// `OUTPUT <name> <- <net>`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let sig = |x: Signal| match x {
            Signal::Const(b) => format!("1'b{}", b as u8),
            Signal::Net(n) => self.nets[n.index()].clone(),
        };
        writeln!(s, "MODULE {}", self.name).unwrap();
        for n in &self.inputs {
            writeln!(s, "INPUT {}", self.nets[n.index()]).unwrap();
        }
        for (i, g) in self.gates.iter().enumerate() {
            write!(s, "GATE g{i} {}", g.kind).unwrap();
            for inp in &g.inputs {
                write!(s, " {}", self.nets[inp.index()]).unwrap();
            }
            writeln!(s, " -> {}", self.nets[g.output.index()]).unwrap();
        }
        for f in &self.flops {
            writeln!(s, "DFF {} -> {}", sig(f.d), self.nets[f.q.index()]).unwrap();
        }
        for o in &self.outputs {
            writeln!(s, "OUTPUT {} <- {}", o.name, sig(o.driver)).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub outputs: Vec<bool>,
    pub next_state: Vec<bool>,
}

/// Bit-level name of `base` at `bit` for a signal of `width` bits.
pub fn bit_name(base: &str, bit: u32, width: u32) -> String {
    if width == 1 {
        base.to_string()
    } else {
        format!("{base}[{bit}]")
    }
}
