//! Stage-1: a tool-free approximate timing report and the normalized
//! structural fingerprint used for retrieval.

pub mod approx;
pub mod fingerprint;
pub mod phi;

pub use approx::{approx_report, ApproxPath, ApproxReport, EndKind, StartKind, PS_PER_LEVEL};
pub use fingerprint::{fingerprint, Fingerprint, FingerprintError};
pub use phi::{extract_phi, Phi, LAYOUT_VERSION, PHI_DIM};

/// Everything Stage-1 derives from one module.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub ast: slackcast_rtl::Ast,
    pub report: ApproxReport,
    pub phi: Phi,
    pub fingerprint: Fingerprint,
}

#[derive(Debug, thiserror::Error)]
pub enum Stage1Error {
    #[error(transparent)]
    Frontend(#[from] slackcast_rtl::RtlError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

impl Stage1Error {
    pub fn code(&self) -> &'static str {
        match self {
            Stage1Error::Frontend(e) => e.code(),
            Stage1Error::Fingerprint(e) => e.code(),
        }
    }
}

/// Parses `source` and runs the full Stage-1 pipeline at `clock_period` ps.
pub fn analyze(source: &str, clock_period: f64) -> Result<Analysis, Stage1Error> {
    let ast = slackcast_rtl::parse(source)?;
    let report = approx_report(&ast, clock_period)?;
    let phi = extract_phi(&ast, &report);
    let fingerprint = fingerprint(&phi)?;
    Ok(Analysis {
        ast,
        report,
        phi,
        fingerprint,
    })
}
