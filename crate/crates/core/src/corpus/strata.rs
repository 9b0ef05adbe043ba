//! Stratification axes and per-module retrieval features.

use serde::{Deserialize, Serialize};

use super::annotate::Annotation;
use super::gen::SourceModule;
use crate::features::token_hash;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeBin {
    #[serde(rename = "0-0.2k")]
    UpTo200,
    #[serde(rename = "0.2-0.5k")]
    UpTo500,
    #[serde(rename = "0.5-1k")]
    UpTo1k,
    #[serde(rename = "1k+")]
    Over1k,
}

impl SizeBin {
    pub fn of(gates: usize) -> Self {
        match gates {
            0..=200 => SizeBin::UpTo200,
            201..=500 => SizeBin::UpTo500,
            501..=1000 => SizeBin::UpTo1k,
            _ => SizeBin::Over1k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statefulness {
    Comb,
    SeqLight,
    SeqHeavy,
}

/// Flop bits at or below which a module counts as lightly sequential.
pub const SEQ_LIGHT_MAX_FLOPS: usize = 16;

impl Statefulness {
    pub fn of(flops: usize) -> Self {
        match flops {
            0 => Statefulness::Comb,
            1..=SEQ_LIGHT_MAX_FLOPS => Statefulness::SeqLight,
            _ => Statefulness::SeqHeavy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Difficulty {
    Meets,
    Violates,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratAxes {
    pub id: String,
    pub size_bin: SizeBin,
    pub statefulness: Statefulness,
    pub difficulty: Difficulty,
    pub domain: String,
}

pub fn stratify(a: &Annotation) -> StratAxes {
    StratAxes {
        id: a.id.clone(),
        size_bin: SizeBin::of(a.gates),
        statefulness: Statefulness::of(a.flops),
        difficulty: if a.violates { Difficulty::Violates } else { Difficulty::Meets },
        domain: a.domain.clone(),
    }
}

/// Stage-1 features of one module at the corpus clock. The same
/// fingerprint keys both clustering and retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleFeatures {
    pub id: String,
    pub phi: Vec<f64>,
    pub fingerprint: Vec<f64>,
    pub token_hash: String,
}

pub fn module_features(m: &SourceModule, clock_period: f64) -> Result<ModuleFeatures> {
    let a = slackcast_stage1::analyze(&m.source, clock_period)?;
    Ok(ModuleFeatures {
        id: m.id.clone(),
        phi: a.phi.to_vec(),
        fingerprint: a.fingerprint.s,
        token_hash: token_hash(&m.source)?,
    })
}

impl ModuleFeatures {
    pub fn bank_entry(&self) -> crate::bank::BankEntry {
        crate::bank::BankEntry {
            id: self.id.clone(),
            fingerprint: self.fingerprint.clone(),
            phi: self.phi.clone(),
            token_hash: self.token_hash.clone(),
        }
    }
}
