//! Random netlists for property tests of downstream timing code.

use rand::Rng;

use crate::netlist::{Flop, Gate, GateType, NetId, Netlist, OutputBit, Signal};

/// A random acyclic netlist with at most `max_gates` gates, 1–4 primary
/// inputs, 0–3 flops and 1–3 primary outputs.
pub fn random_netlist<R: Rng + ?Sized>(rng: &mut R, max_gates: usize) -> Netlist {
    let n_inputs = rng.gen_range(1..=4);
    let n_flops = rng.gen_range(0..=3);
    let n_gates = rng.gen_range(0..=max_gates);
    let mut nets: Vec<String> = Vec::new();
    let inputs: Vec<NetId> = (0..n_inputs)
        .map(|i| {
            nets.push(format!("i{i}"));
            NetId(nets.len() as u32 - 1)
        })
        .collect();
    let qs: Vec<NetId> = (0..n_flops)
        .map(|i| {
            nets.push(format!("r{i}"));
            NetId(nets.len() as u32 - 1)
        })
        .collect();
    let mut gates = Vec::new();
    for g in 0..n_gates {
        let kind = GateType::ALL[rng.gen_range(0..GateType::ALL.len())];
        let avail = nets.len() as u32;
        let ins = (0..kind.arity()).map(|_| NetId(rng.gen_range(0..avail))).collect();
        nets.push(format!("n{g}"));
        gates.push(Gate {
            kind,
            inputs: ins,
            output: NetId(nets.len() as u32 - 1),
        });
    }
    let total = nets.len() as u32;
    let pick = |rng: &mut R| {
        if rng.gen_bool(0.05) {
            Signal::Const(rng.gen_bool(0.5))
        } else if !gates.is_empty() && rng.gen_bool(0.7) {
            // bias toward gate outputs so paths are long
            let g: usize = rng.gen_range(0..gates.len());
            Signal::Net(gates[g].output)
        } else {
            Signal::Net(NetId(rng.gen_range(0..total)))
        }
    };
    let n_outputs = rng.gen_range(1..=3);
    let outputs = (0..n_outputs)
        .map(|i| OutputBit {
            name: format!("o{i}"),
            driver: pick(rng),
        })
        .collect();
    let flops = qs
        .iter()
        .enumerate()
        .map(|(i, &q)| Flop {
            name: format!("r{i}"),
            d: pick(rng),
            q,
        })
        .collect();
    Netlist {
        name: "random".into(),
        nets,
        inputs,
        outputs,
        gates,
        flops,
    }
}
