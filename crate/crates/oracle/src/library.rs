use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slackcast_rtl::GateType;

use crate::{OracleError, Result};

/// The library shipped with the crate ("lib45-like").
pub const DEFAULT_LIBRARY_JSON: &str = include_str!("../data/lib45.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTiming {
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DffTiming {
    pub clk_to_q: f64,
    pub setup: f64,
}

/// Unit-fanout delay model: one propagation delay per gate type, a flop
/// with clock-to-Q and setup, and corners as multiplicative delay scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLibrary {
    pub name: String,
    pub unit: String,
    pub gates: BTreeMap<GateType, GateTiming>,
    pub dff: DffTiming,
    pub corners: BTreeMap<String, f64>,
}

impl CellLibrary {
    pub fn default_lib45() -> CellLibrary {
        CellLibrary::from_json(DEFAULT_LIBRARY_JSON).expect("shipped library is valid")
    }

    pub fn from_json(text: &str) -> Result<CellLibrary> {
        let lib: CellLibrary = serde_json::from_str(text).map_err(|e| OracleError::InvalidLibrary(e.to_string()))?;
        lib.validate()?;
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<CellLibrary> {
        let text = std::fs::read_to_string(path).map_err(|e| OracleError::Io(format!("{}: {e}", path.display())))?;
        CellLibrary::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OracleError::InvalidLibrary(m));
        if self.unit != "ps" {
            return bad(format!("unit must be \"ps\", got {:?}", self.unit));
        }
        for g in GateType::ALL {
            match self.gates.get(&g) {
                Some(t) if t.delay > 0.0 && t.delay.is_finite() => {}
                Some(t) => return bad(format!("{g} delay {} must be positive", t.delay)),
                None => return bad(format!("missing delay for {g}")),
            }
        }
        if !(self.dff.clk_to_q > 0.0 && self.dff.setup > 0.0) {
            return bad("dff clk_to_q and setup must be positive".into());
        }
        for (name, s) in &self.corners {
            if !(*s > 0.0 && s.is_finite()) {
                return bad(format!("corner {name} scale {s} must be positive"));
            }
        }
        if self.corners.get("typ") != Some(&1.0) {
            return bad("corner \"typ\" with scale 1.0 is required".into());
        }
        Ok(())
    }

    pub fn scale(&self, corner: &str) -> Result<f64> {
        self.corners
            .get(corner)
            .copied()
            .ok_or_else(|| OracleError::UnknownCorner(corner.to_string()))
    }

    pub fn delay(&self, g: GateType) -> f64 {
        self.gates[&g].delay
    }
}
