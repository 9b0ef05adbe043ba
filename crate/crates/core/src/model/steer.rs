use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::nn::{Acts, Plan};
use super::{to_ps, Model};
use crate::bank::{Bank, NeighborSet};
use crate::features::INPUT_DIM;
use crate::{Error, Result};

/// A module as the regressor sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// Set for training items so retrieval can exclude the item itself.
    pub id: Option<String>,
    pub x: Vec<f64>,
    pub fingerprint: Vec<f64>,
}

/// Unsteered activations of every bank entry, computed once per operating
/// point (the clock and corner slots of the encoder input) and shared.
pub struct BankActivations<'a> {
    bank: &'a Bank,
    encoder_checksum: String,
    cache: Mutex<HashMap<(u64, u64), Arc<Vec<Acts>>>>,
}

impl<'a> BankActivations<'a> {
    pub fn new(model: &Model, bank: &'a Bank) -> Self {
        BankActivations {
            bank,
            encoder_checksum: model.encoder_checksum(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn bank(&self) -> &Bank {
        self.bank
    }

    /// Activations of every bank entry at `x`'s clock and corner.
    pub fn table(&self, model: &Model, x: &[f64]) -> Arc<Vec<Acts>> {
        debug_assert_eq!(model.encoder_checksum(), self.encoder_checksum);
        let op = (x[INPUT_DIM - 2], x[INPUT_DIM - 1]);
        let key = (op.0.to_bits(), op.1.to_bits());
        let mut cache = self.cache.lock().expect("cache lock");
        cache
            .entry(key)
            .or_insert_with(|| {
                Arc::new(
                    self.bank
                        .entries()
                        .iter()
                        .map(|e| {
                            let mut nx = crate::features::encoder_input(&e.phi, 0.0, 0.0);
                            nx[INPUT_DIM - 2] = op.0;
                            nx[INPUT_DIM - 1] = op.1;
                            model.encoder.forward(&nx)
                        })
                        .collect(),
                )
            })
            .clone()
    }
}

fn check_finite(acts: &Acts) -> Result<()> {
    for (block, h) in acts.h.iter().enumerate() {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { block });
        }
    }
    Ok(())
}

impl Model {
    /// Unsteered activations of every block.
    pub fn encode(&self, x: &[f64]) -> Result<Acts> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { block: 0 });
        }
        let acts = self.encoder.forward(x);
        check_finite(&acts)?;
        Ok(acts)
    }

    /// Applies this model's steering to `query` given weighted neighbour
    /// activations. Without a steering config the query is returned as is.
    pub fn steer(&self, query: &Acts, neighbors: &[(f64, &Acts)]) -> Result<Acts> {
        let Some(s) = &self.steering else {
            return Ok(query.clone());
        };
        s.config.validate(self.encoder.dims.blocks)?;
        let w: f64 = neighbors.iter().map(|n| n.0).sum();
        if neighbors.is_empty() || (w - 1.0).abs() > 1e-9 || neighbors.iter().any(|n| n.0 < 0.0) {
            return Err(Error::BadConfig("neighbour weights must lie on the simplex".into()));
        }
        let plan = Plan {
            injections: &s.config.injections,
            gamma: &s.gamma,
            neighbors: neighbors.to_vec(),
        };
        let acts = self.encoder.forward_steered(query, &plan);
        check_finite(&acts)?;
        Ok(acts)
    }

    pub fn neighbors(&self, bank: &Bank, query: &Query) -> Result<Option<NeighborSet>> {
        let Some(s) = &self.steering else {
            return Ok(None);
        };
        let set = match &query.id {
            Some(id) => bank.self_exclusion(id, &query.fingerprint, s.config.k)?,
            None => bank.retrieve(&query.fingerprint, s.config.k)?,
        };
        Ok(Some(set))
    }

    /// Head-input features: the final block output, steered when configured.
    pub fn features(&self, acts_bank: Option<&BankActivations>, query: &Query) -> Result<Vec<f64>> {
        let base = self.encode(&query.x)?;
        let Some(view) = acts_bank.filter(|_| self.steering.is_some()) else {
            if self.steering.is_some() {
                return Err(Error::EmptyBank);
            }
            return Ok(base.last().to_vec());
        };
        let set = self.neighbors(view.bank(), query)?.expect("steering configured");
        let table = view.table(self, &query.x);
        let weighted: Vec<(f64, &Acts)> = set.neighbors.iter().map(|n| (n.weight, &table[n.index])).collect();
        Ok(self.steer(&base, &weighted)?.last().to_vec())
    }

    /// `(wns, tns)` in ps with TNS clamped to be non-positive.
    pub fn predict(&self, acts_bank: Option<&BankActivations>, query: &Query) -> Result<(f64, f64)> {
        let h = self.features(acts_bank, query)?;
        Ok(to_ps(self.head_output(&h)))
    }
}
