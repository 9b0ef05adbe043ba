//! Exhaustive path enumeration: an STA oracle that shares no code with
//! the block-based engine. Exponential, so only for small netlists.

use slackcast_oracle::CellLibrary;
use slackcast_rtl::netlist::{Driver, NetId, Netlist, Signal};

/// Every launch-to-`net` path as (launch arrival, gate ids source-first).
fn all_paths(n: &Netlist, drivers: &[Driver], net: NetId, launch: f64) -> Vec<(f64, Vec<usize>)> {
    match drivers[net.index()] {
        Driver::Input(_) => vec![(0.0, vec![])],
        Driver::FlopQ(_) => vec![(launch, vec![])],
        Driver::Gate(g) => {
            let mut out = Vec::new();
            for inp in &n.gates[g].inputs {
                for (start, mut gates) in all_paths(n, drivers, *inp, launch) {
                    gates.push(g);
                    out.push((start, gates));
                }
            }
            out
        }
    }
}

/// Per-endpoint worst slack by enumerating every path, then (wns, tns).
pub fn enumerate_wns_tns(n: &Netlist, lib: &CellLibrary, corner: &str, period: f64) -> (f64, f64) {
    let mut slacks = endpoint_slacks(n, lib, corner, period);
    // TNS is accumulated in ascending slack order
    slacks.sort_by(f64::total_cmp);
    let wns = slacks.iter().copied().fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
    let tns = slacks.iter().filter(|s| **s < 0.0).sum();
    (wns.unwrap_or(period), tns)
}

pub fn endpoint_slacks(n: &Netlist, lib: &CellLibrary, corner: &str, period: f64) -> Vec<f64> {
    let scale = lib.corners[corner];
    let drivers = n.drivers().unwrap();
    let launch = lib.dff.clk_to_q * scale;
    let ends = n
        .outputs
        .iter()
        .map(|o| (o.driver, period))
        .chain(n.flops.iter().map(|f| (f.d, period - lib.dff.setup * scale)));
    let mut slacks = Vec::new();
    for (sig, required) in ends {
        let Signal::Net(net) = sig else { continue };
        let worst = all_paths(n, &drivers, net, launch)
            .into_iter()
            .map(|(start, gates)| {
                let mut t = start;
                for g in gates {
                    t = t + lib.delay(n.gates[g].kind) * scale;
                }
                t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        slacks.push(required - worst);
    }
    slacks
}
