//! Retrieval-steered WNS/TNS regression for RTL modules.
//!
//! Stage 1 ([`slackcast_stage1`]) turns a module into an approximate report
//! and a unit-norm fingerprint; this crate indexes a label-free [`bank`] by
//! that fingerprint, steers a residual [`model`] toward retrieved
//! neighbours, and provides the [`corpus`] pipeline and [`eval`] harness.

pub mod bank;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod jsonl;
pub mod model;

pub use error::{Error, Result};
