//! Stage-2 regressor: residual encoder, retrieval steering and the
//! two-output head, plus checkpoints.

mod nn;
mod steer;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use nn::{Acts, Applied, Dims, Encoder, Head, HeadActs, Injection, Plan};
pub use steer::{BankActivations, Query};
pub use train::{
    baseline_loss_grad, fit_baseline, fit_gamma, neighbor_table, prepare_items, refit_head, refit_head_monitored, steered_features, steered_loss_grad, train_mse,
    FitReport, Sample, SteerItem, TrainParams,
};

use crate::features::checksum_f64;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: &str = "slackcast-ckpt-v1";

/// Signed log1p applied to (WNS, TNS) in ps.
pub fn transform(y: f64) -> f64 {
    y.signum() * y.abs().ln_1p()
}

pub fn inverse_transform(z: f64) -> f64 {
    z.signum() * z.abs().exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GammaMode {
    Scalar { gamma: f64 },
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    pub k: usize,
    pub gamma: GammaMode,
    pub injections: Vec<Injection>,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        SteeringConfig {
            k: 3,
            gamma: GammaMode::Diagonal,
            injections: vec![Injection { block: 8, share: 1.0 }],
        }
    }
}

impl SteeringConfig {
    pub const DEFAULT_SCALAR_GAMMA: f64 = 0.10;

    pub fn scalar(k: usize, gamma: f64, block: usize) -> Self {
        SteeringConfig {
            k,
            gamma: GammaMode::Scalar { gamma },
            injections: vec![Injection { block, share: 1.0 }],
        }
    }

    /// Two-block split: `alpha` at `later`, `1 - alpha` at `earlier`.
    pub fn split(k: usize, later: usize, earlier: usize, alpha: f64) -> Self {
        SteeringConfig {
            k,
            gamma: GammaMode::Diagonal,
            injections: vec![
                Injection { block: later, share: alpha },
                Injection {
                    block: earlier,
                    share: 1.0 - alpha,
                },
            ],
        }
    }

    pub fn validate(&self, blocks: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::BadConfig("k must be at least 1".into()));
        }
        if self.injections.is_empty() {
            return Err(Error::BadConfig("at least one injection site is required".into()));
        }
        let mut sum = 0.0;
        for (i, inj) in self.injections.iter().enumerate() {
            if inj.block == 0 || inj.block > blocks {
                return Err(Error::BadConfig(format!("block {} outside 1..={blocks}", inj.block)));
            }
            if !(0.0..=1.0).contains(&inj.share) {
                return Err(Error::BadConfig(format!("share {} outside [0, 1]", inj.share)));
            }
            if self.injections[..i].iter().any(|o| o.block == inj.block) {
                return Err(Error::BadConfig(format!("block {} listed twice", inj.block)));
            }
            sum += inj.share;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadConfig(format!("shares sum to {sum}, expected 1")));
        }
        if let GammaMode::Scalar { gamma } = self.gamma {
            if !gamma.is_finite() {
                return Err(Error::BadConfig("scalar gamma must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Steering {
    pub config: SteeringConfig,
    /// Per-coordinate gain; a scalar gamma is stored broadcast.
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub encoder: Encoder,
    pub head: Head,
    pub steering: Option<Steering>,
    /// Checksum of the bank the steering was fit against.
    pub bank_checksum: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    layout_version: String,
    d_h: usize,
    blocks: usize,
    encoder_checksum: String,
    model: Model,
}

impl Model {
    pub fn dims(&self) -> Dims {
        self.encoder.dims
    }

    pub fn encoder_checksum(&self) -> String {
        let e = &self.encoder;
        checksum_f64(&[e.shift.as_slice(), e.scale.as_slice(), e.params.as_slice()].concat())
    }

    pub fn gamma_checksum(&self) -> String {
        checksum_f64(self.steering.as_ref().map_or(&[][..], |s| &s.gamma))
    }

    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            layout_version: CHECKPOINT_VERSION.into(),
            d_h: self.encoder.dims.hidden,
            blocks: self.encoder.dims.blocks,
            encoder_checksum: self.encoder_checksum(),
            model: self.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if file.layout_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported layout {}", file.layout_version)));
        }
        let m = file.model;
        let d = m.encoder.dims;
        if d.hidden != file.d_h
            || d.blocks != file.blocks
            || m.encoder.params.len() != Encoder::param_count(&d)
            || m.head.params.len() != Head::param_count(d.hidden, d.head_hidden)
        {
            return Err(Error::Checkpoint("weight shapes do not match the header".into()));
        }
        if m.encoder_checksum() != file.encoder_checksum {
            return Err(Error::Checkpoint("encoder checksum mismatch".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Transformed-space head output for already-computed features.
    pub fn head_output(&self, features: &[f64]) -> [f64; 2] {
        self.head.forward(features).y
    }
}

/// Head output mapped back to ps; TNS clamped to be non-positive.
pub fn to_ps(y: [f64; 2]) -> (f64, f64) {
    (inverse_transform(y[0]), inverse_transform(y[1]).min(0.0))
}
