//! Block-based static timing analysis over a gate-level netlist.
//!
//! Arrival times propagate forward in topological order (primary inputs at
//! 0, flop outputs at clock-to-Q); each endpoint's worst path is rebuilt by
//! following the latest-arriving fan-in back to its launch point.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use slackcast_rtl::netlist::{Driver, NetId, Netlist, Signal};

use crate::{CellLibrary, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConstraint {
    /// Clock period in ps.
    pub clock_period: f64,
}

impl TimingConstraint {
    pub fn new(clock_period: f64) -> Result<Self> {
        if clock_period > 0.0 && clock_period.is_finite() {
            Ok(TimingConstraint { clock_period })
        } else {
            Err(crate::OracleError::InvalidConstraint(clock_period))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Input,
    Flop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Output,
    Flop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub startpoint: String,
    pub start_kind: StartKind,
    pub endpoint: String,
    pub end_kind: EndKind,
    /// Gate ids from launch to capture.
    pub gates: Vec<usize>,
    pub arrival: f64,
    pub required: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub constraint: TimingConstraint,
    pub corner: String,
    /// Worst path per endpoint, ascending by slack.
    pub paths: Vec<PathRecord>,
    pub wns: f64,
    pub tns: f64,
}

/// Ascending slack, then endpoint name, then startpoint name.
pub fn path_order(a: &PathRecord, b: &PathRecord) -> Ordering {
    a.slack
        .total_cmp(&b.slack)
        .then_with(|| a.endpoint.cmp(&b.endpoint))
        .then_with(|| a.startpoint.cmp(&b.startpoint))
}

/// WNS is the minimum endpoint slack (the clock period when there are no
/// endpoints); TNS sums the negative endpoint slacks in ascending order.
pub fn summarize(slacks: impl IntoIterator<Item = f64>, clock_period: f64) -> (f64, f64) {
    let mut slacks: Vec<f64> = slacks.into_iter().collect();
    slacks.sort_by(f64::total_cmp);
    let mut wns: Option<f64> = None;
    let mut tns = 0.0;
    for s in slacks {
        wns = Some(wns.map_or(s, |w: f64| w.min(s)));
        if s < 0.0 {
            tns += s;
        }
    }
    (wns.unwrap_or(clock_period), tns)
}

pub fn run_sta(netlist: &Netlist, lib: &CellLibrary, corner: &str, constraint: TimingConstraint) -> Result<TimingReport> {
    let scale = lib.scale(corner)?;
    let order = netlist.topo_order()?;
    let drivers = netlist.drivers()?;
    let launch = lib.dff.clk_to_q * scale;

    let mut arrival = vec![0.0f64; netlist.nets.len()];
    // latest fan-in net of each gate output
    let mut pred: Vec<Option<NetId>> = vec![None; netlist.nets.len()];
    for f in &netlist.flops {
        arrival[f.q.index()] = launch;
    }
    for g in order {
        let gate = &netlist.gates[g];
        let mut best = gate.inputs[0];
        for &inp in &gate.inputs[1..] {
            if arrival[inp.index()] > arrival[best.index()] {
                best = inp;
            }
        }
        arrival[gate.output.index()] = arrival[best.index()] + lib.delay(gate.kind) * scale;
        pred[gate.output.index()] = Some(best);
    }

    let trace = |end: NetId| -> (Vec<usize>, String, StartKind) {
        let mut gates = Vec::new();
        let mut n = end;
        loop {
            match drivers[n.index()] {
                Driver::Gate(g) => {
                    gates.push(g);
                    n = pred[n.index()].expect("gate outputs have a predecessor");
                }
                Driver::Input(_) => {
                    gates.reverse();
                    return (gates, netlist.net_name(n).to_string(), StartKind::Input);
                }
                Driver::FlopQ(_) => {
                    gates.reverse();
                    return (gates, netlist.net_name(n).to_string(), StartKind::Flop);
                }
            }
        }
    };

    let period = constraint.clock_period;
    let flop_required = period - lib.dff.setup * scale;
    let endpoints = netlist
        .outputs
        .iter()
        .map(|o| (o.name.clone(), o.driver, EndKind::Output, period))
        .chain(
            netlist
                .flops
                .iter()
                .map(|f| (format!("{}/D", f.name), f.d, EndKind::Flop, flop_required)),
        );
    let mut paths = Vec::new();
    for (endpoint, driver, end_kind, required) in endpoints {
        // constant-driven endpoints carry no timing path
        let Signal::Net(net) = driver else { continue };
        let (gates, startpoint, start_kind) = trace(net);
        let arr = arrival[net.index()];
        paths.push(PathRecord {
            startpoint,
            start_kind,
            endpoint,
            end_kind,
            gates,
            arrival: arr,
            required,
            slack: required - arr,
        });
    }
    paths.sort_by(path_order);
    let (wns, tns) = summarize(paths.iter().map(|p| p.slack), period);
    Ok(TimingReport {
        constraint,
        corner: corner.to_string(),
        paths,
        wns,
        tns,
    })
}

/// The `n` worst endpoints (all of them when fewer exist).
pub fn critical_paths(report: &TimingReport, n: usize) -> &[PathRecord] {
    &report.paths[..n.min(report.paths.len())]
}

/// JSON form of a report with every time rounded to integer ps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub clock_period: i64,
    pub corner: String,
    pub approx: bool,
    pub paths: Vec<PathFile>,
    pub wns: i64,
    pub tns: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFile {
    pub startpoint: String,
    pub start_kind: StartKind,
    pub endpoint: String,
    pub end_kind: EndKind,
    pub gates: Vec<usize>,
    pub arrival: i64,
    pub required: i64,
    pub slack: i64,
}

impl TimingReport {
    pub fn to_file(&self) -> ReportFile {
        let ps = |x: f64| x.round() as i64;
        ReportFile {
            clock_period: ps(self.constraint.clock_period),
            corner: self.corner.clone(),
            approx: false,
            paths: self
                .paths
                .iter()
                .map(|p| PathFile {
                    startpoint: p.startpoint.clone(),
                    start_kind: p.start_kind,
                    endpoint: p.endpoint.clone(),
                    end_kind: p.end_kind,
                    gates: p.gates.clone(),
                    arrival: ps(p.arrival),
                    required: ps(p.required),
                    slack: ps(p.slack),
                })
                .collect(),
            wns: ps(self.wns),
            tns: ps(self.tns),
        }
    }
}
