//! Lightweight synthesis pass: structural counts plus oracle slack labels.

use serde::{Deserialize, Serialize};
use slackcast_oracle::{run_sta, CellLibrary, TimingConstraint};

use super::gen::{SourceModule, Tier};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub tier: Tier,
    pub domain: String,
    pub gates: usize,
    /// Flop bits.
    pub flops: usize,
    /// Longest combinational path in gate levels.
    pub depth: u32,
    /// Saturating count of startpoint-to-endpoint paths.
    pub paths: u64,
    #[serde(with = "int_ps")]
    pub wns: f64,
    #[serde(with = "int_ps")]
    pub tns: f64,
    pub violates: bool,
}

/// Times are kept exact in memory and written as integer ps.
pub mod int_ps {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(v.round() as i64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(i64::deserialize(d)? as f64)
    }
}

pub fn annotate(module: &SourceModule, lib: &CellLibrary, corner: &str, clock: TimingConstraint) -> Result<Annotation> {
    let netlist = slackcast_rtl::synthesize(&module.source)?;
    let report = run_sta(&netlist, lib, corner, clock)?;
    Ok(Annotation {
        id: module.id.clone(),
        tier: module.tier,
        domain: module.domain.clone(),
        gates: netlist.gate_count(),
        flops: netlist.flops.len(),
        depth: netlist.unit_depth()?,
        paths: netlist.path_count()?,
        wns: report.wns,
        tns: report.tns,
        violates: report.wns < 0.0,
    })
}
