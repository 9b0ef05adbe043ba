//! Ground-truth timing: maps an elaborated netlist onto a [`CellLibrary`]
//! and runs static timing analysis to produce WNS/TNS labels.

pub mod library;
pub mod sta;

use thiserror::Error;

pub use library::{CellLibrary, DffTiming, GateTiming};
pub use sta::{critical_paths, run_sta, PathRecord, TimingConstraint, TimingReport};

use slackcast_rtl::RtlError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("unknown corner `{0}`")]
    UnknownCorner(String),
    #[error("invalid library: {0}")]
    InvalidLibrary(String),
    #[error("clock period must be a positive number of ps, got {0}")]
    InvalidConstraint(f64),
    #[error(transparent)]
    Frontend(#[from] RtlError),
    #[error("io: {0}")]
    Io(String),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::UnknownCorner(_) => "UnknownCorner",
            OracleError::InvalidLibrary(_) => "InvalidLibrary",
            OracleError::InvalidConstraint(_) => "InvalidConstraint",
            OracleError::Frontend(e) => e.code(),
            OracleError::Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Ground-truth `(wns, tns)` in ps for a Verilog source.
pub fn label(source: &str, lib: &CellLibrary, corner: &str, constraint: TimingConstraint) -> Result<(f64, f64)> {
    let netlist = slackcast_rtl::synthesize(source)?;
    let report = run_sta(&netlist, lib, corner, constraint)?;
    Ok((report.wns, report.tns))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clk(p: f64) -> TimingConstraint {
        TimingConstraint::new(p).unwrap()
    }

    #[test]
    fn dff_from_input() {
        let lib = CellLibrary::default_lib45();
        let n = slackcast_rtl::synthesize(
            "module d(input clk, input d, output reg q); always @(posedge clk) q <= d; endmodule",
        )
        .unwrap();
        let r = run_sta(&n, &lib, "typ", clk(1000.0)).unwrap();
        let d_pin = r.paths.iter().find(|p| p.endpoint == "q/D").unwrap();
        assert_eq!(d_pin.slack, 980.0);
        // q is also a primary output, launched at clk_to_q
        let po = r.paths.iter().find(|p| p.endpoint == "q").unwrap();
        assert_eq!(po.slack, 970.0);
        assert_eq!((r.wns, r.tns), (970.0, 0.0));
    }

    #[test]
    fn reg_to_reg_loop() {
        let lib = CellLibrary::default_lib45();
        let (wns, tns) = label(
            "module l(input clk, output y); reg q; wire w; assign w = q; assign y = 1'b0;
               always @(posedge clk) q <= w; endmodule",
            &lib,
            "typ",
            clk(1000.0),
        )
        .unwrap();
        assert_eq!((wns, tns), (950.0, 0.0));
    }

    #[test]
    fn unknown_corner() {
        let lib = CellLibrary::default_lib45();
        let err = label("module m(input a, output y); assign y = a; endmodule", &lib, "ff", clk(1000.0)).unwrap_err();
        assert_eq!(err.code(), "UnknownCorner");
    }
}
