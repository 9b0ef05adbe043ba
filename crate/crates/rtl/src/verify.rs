//! Simulation-based equivalence between an [`Ast`] and its [`Netlist`].

use rand::{Rng, SeedableRng};

use crate::ast::{mask, Ast};
use crate::eval::{step, Values};
use crate::netlist::Netlist;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub inputs: Values,
    pub state: Values,
    pub what: String,
}

/// Exhaustive over primary-input bits; register state is exhaustive when it
/// has at most `max_state_bits` bits and sampled (`state_samples` vectors,
/// including all-zeros and all-ones) otherwise.
pub fn check_equivalence(
    ast: &Ast,
    netlist: &Netlist,
    max_state_bits: u32,
    state_samples: usize,
) -> Result<std::result::Result<u64, Mismatch>> {
    let inputs: Vec<(String, u32)> = ast.inputs().map(|d| (d.name.clone(), d.width)).collect();
    let regs: Vec<(String, u32)> = ast.registers().map(|d| (d.name.clone(), d.width)).collect();
    let in_bits: u32 = inputs.iter().map(|(_, w)| w).sum();
    let st_bits: u32 = regs.iter().map(|(_, w)| w).sum();
    assert!(in_bits <= 20, "exhaustive input enumeration limited to 20 bits");

    let states: Vec<Vec<bool>> = if st_bits <= max_state_bits {
        (0..1u64 << st_bits).map(|v| unpack(v, st_bits)).collect()
    } else {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        let mut s = vec![vec![false; st_bits as usize], vec![true; st_bits as usize]];
        while s.len() < state_samples.max(2) {
            s.push((0..st_bits).map(|_| rng.gen_bool(0.5)).collect());
        }
        s
    };

    let mut checked = 0u64;
    for st in &states {
        let state = group(&regs, st);
        for v in 0..1u64 << in_bits {
            let ibits = unpack(v, in_bits);
            let ivals = group(&inputs, &ibits);
            let expect = step(ast, &ivals, &state)?;
            let got = netlist.simulate(&ibits, st)?;
            let mut o = 0;
            for d in ast.outputs() {
                let mut val = 0u64;
                for b in 0..d.width {
                    val |= (got.outputs[o] as u64) << b;
                    o += 1;
                }
                if val != expect.outputs[&d.name] {
                    return Ok(Err(Mismatch {
                        inputs: ivals,
                        state,
                        what: format!("output {}: netlist {val} vs ast {}", d.name, expect.outputs[&d.name]),
                    }));
                }
            }
            let mut f = 0;
            for (name, w) in &regs {
                let mut val = 0u64;
                for b in 0..*w {
                    val |= (got.next_state[f] as u64) << b;
                    f += 1;
                }
                if val != expect.next_state[name] & mask(*w) {
                    return Ok(Err(Mismatch {
                        inputs: ivals,
                        state,
                        what: format!("next {name}: netlist {val} vs ast {}", expect.next_state[name]),
                    }));
                }
            }
            checked += 1;
        }
    }
    Ok(Ok(checked))
}

fn unpack(v: u64, bits: u32) -> Vec<bool> {
    (0..bits).map(|i| (v >> i) & 1 == 1).collect()
}

fn group(sigs: &[(String, u32)], bits: &[bool]) -> Values {
    let mut out = Values::new();
    let mut i = 0;
    for (name, w) in sigs {
        let mut val = 0u64;
        for b in 0..*w {
            val |= (bits[i] as u64) << b;
            i += 1;
        }
        out.insert(name.clone(), val);
    }
    out
}
