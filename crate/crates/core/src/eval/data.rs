//! Labeled samples and retrieval banks drawn from a curated corpus.

use std::collections::BTreeMap;

use rayon::prelude::*;
use slackcast_oracle::{CellLibrary, TimingConstraint};

use crate::bank::Bank;
use crate::corpus::pipeline::{CorpusDir, Curated};
use crate::corpus::{Annotation, ModuleFeatures, SplitManifest};
use crate::features::{encoder_input, token_stats};
use crate::model::{Query, Sample};
use crate::{Error, Result};

/// Corner and clock at which inputs are built and labels are produced.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub corner: String,
    pub clock_period: f64,
}

#[derive(Debug, Clone)]
pub struct ModuleRecord {
    pub source: String,
    pub features: ModuleFeatures,
    pub annotation: Annotation,
}

/// Which encoder input a sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Stage-1 features (the full pipeline).
    Stage1,
    /// Raw token statistics, for the stage-2-only ablation.
    TokenStats,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub modules: BTreeMap<String, ModuleRecord>,
    pub manifest: SplitManifest,
    pub lib: CellLibrary,
}

impl Dataset {
    pub fn from_curated(c: &Curated, lib: CellLibrary) -> Self {
        let ann: BTreeMap<&str, &Annotation> = c.annotations.iter().map(|a| (a.id.as_str(), a)).collect();
        let feat: BTreeMap<&str, &ModuleFeatures> = c.features.iter().map(|f| (f.id.as_str(), f)).collect();
        let modules = c
            .modules
            .iter()
            .map(|m| {
                (
                    m.id.clone(),
                    ModuleRecord {
                        source: m.source.clone(),
                        features: feat[m.id.as_str()].clone(),
                        annotation: ann[m.id.as_str()].clone(),
                    },
                )
            })
            .collect();
        Dataset {
            modules,
            manifest: c.manifest.clone(),
            lib,
        }
    }

    pub fn load(dir: &CorpusDir, lib: CellLibrary) -> Result<Self> {
        let manifest = dir.manifest()?;
        let mut ann: BTreeMap<String, Annotation> = dir.annotations()?.into_iter().map(|a| (a.id.clone(), a)).collect();
        let mut feat: BTreeMap<String, ModuleFeatures> = dir.features()?.into_iter().map(|f| (f.id.clone(), f)).collect();
        let mut modules = BTreeMap::new();
        for id in manifest.train.iter().chain(&manifest.rag).chain(&manifest.test) {
            let p = dir.module_path(id);
            let source = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let missing = |what: &str| Error::PipelineOrder(format!("`{id}` has no {what}"));
            modules.insert(
                id.clone(),
                ModuleRecord {
                    source,
                    features: feat.remove(id).ok_or_else(|| missing("features"))?,
                    annotation: ann.remove(id).ok_or_else(|| missing("annotation"))?,
                },
            );
        }
        Ok(Dataset { modules, manifest, lib })
    }

    /// The operating point the corpus annotations were labeled at.
    pub fn label_point(&self) -> OperatingPoint {
        OperatingPoint {
            corner: self.manifest.labels.corner.clone(),
            clock_period: self.manifest.labels.clock_period,
        }
    }

    pub fn record(&self, id: &str) -> Result<&ModuleRecord> {
        self.modules
            .get(id)
            .ok_or_else(|| Error::BadConfig(format!("unknown module `{id}`")))
    }

    /// Retrieval bank over the rag split, checked disjoint from train.
    pub fn bank(&self) -> Result<Bank> {
        let entries = self
            .manifest
            .rag
            .iter()
            .map(|id| Ok(self.record(id)?.features.bank_entry()))
            .collect::<Result<Vec<_>>>()?;
        let train = self
            .manifest
            .train
            .iter()
            .map(|id| Ok((id.clone(), self.record(id)?.features.token_hash.clone())))
            .collect::<Result<Vec<_>>>()?;
        Bank::build_disjoint(entries, &train)
    }

    /// Oracle `(wns, tns)` for each id at `point`; reuses annotations when
    /// `point` is the corpus labeling point.
    pub fn labels(&self, ids: &[String], point: &OperatingPoint) -> Result<Vec<[f64; 2]>> {
        let same = *point == self.label_point();
        let clk = TimingConstraint::new(point.clock_period)?;
        ids.par_iter()
            .map(|id| {
                let r = self.record(id)?;
                if same {
                    Ok([r.annotation.wns, r.annotation.tns])
                } else {
                    let (w, t) = slackcast_oracle::label(&r.source, &self.lib, &point.corner, clk)?;
                    Ok([w, t])
                }
            })
            .collect()
    }

    /// Encoder inputs for `ids` at `point`, without labels.
    pub fn queries(&self, ids: &[String], point: &OperatingPoint, kind: InputKind, with_ids: bool) -> Result<Vec<Query>> {
        let scale = self.lib.scale(&point.corner)?;
        let same_clock = point.clock_period == self.manifest.labels.clock_period;
        ids.par_iter()
            .map(|id| {
                let r = self.record(id)?;
                let (phi, fingerprint) = match kind {
                    InputKind::Stage1 if same_clock => (r.features.phi.clone(), r.features.fingerprint.clone()),
                    InputKind::Stage1 => {
                        let a = slackcast_stage1::analyze(&r.source, point.clock_period)?;
                        (a.phi.to_vec(), a.fingerprint.s)
                    }
                    InputKind::TokenStats => (token_stats(&r.source)?, r.features.fingerprint.clone()),
                };
                Ok(Query {
                    id: with_ids.then(|| id.clone()),
                    x: encoder_input(&phi, point.clock_period, scale),
                    fingerprint,
                })
            })
            .collect()
    }

    pub fn samples(&self, ids: &[String], point: &OperatingPoint, kind: InputKind) -> Result<Vec<Sample>> {
        let queries = self.queries(ids, point, kind, true)?;
        let labels = self.labels(ids, point)?;
        Ok(queries
            .into_iter()
            .zip(labels)
            .map(|(query, target)| Sample { query, target })
            .collect())
    }

    /// Stage-1's own approximate `(wns, tns)` at `clock_period`.
    pub fn stage1_estimates(&self, ids: &[String], clock_period: f64) -> Result<Vec<[f64; 2]>> {
        ids.par_iter()
            .map(|id| {
                let a = slackcast_stage1::analyze(&self.record(id)?.source, clock_period)?;
                Ok([a.report.wns, a.report.tns])
            })
            .collect()
    }
}
