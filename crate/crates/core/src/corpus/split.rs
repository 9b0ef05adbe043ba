//! Disjoint train / rag / test splitting.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Desk-scale default: 2000 / 1000 / 500 out of 3500.
pub const DEFAULT_RATIOS: [f64; 3] = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSetting {
    pub library: String,
    pub corner: String,
    pub clock_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub rag: Vec<String>,
    pub test: Vec<String>,
    pub generator_seed: u64,
    pub split_seed: u64,
    pub labels: LabelSetting,
}

impl SplitManifest {
    /// Re-checks id and token-hash disjointness against `hashes`.
    pub fn verify(&self, hashes: &HashMap<String, String>) -> Result<()> {
        check_disjoint([&self.train, &self.rag, &self.test], hashes)
    }
}

fn check_disjoint(parts: [&Vec<String>; 3], hashes: &HashMap<String, String>) -> Result<()> {
    let mut owner_id: HashMap<&str, usize> = HashMap::new();
    let mut owner_hash: HashMap<&str, (usize, &str)> = HashMap::new();
    for (p, ids) in parts.iter().enumerate() {
        for id in ids.iter() {
            if let Some(&q) = owner_id.get(id.as_str()) {
                if q != p {
                    return Err(Error::DisjointnessViolation(format!("`{id}` is in two splits")));
                }
                return Err(Error::DuplicateId(id.clone()));
            }
            owner_id.insert(id, p);
            let h = hashes
                .get(id)
                .ok_or_else(|| Error::CollisionAfterDedup(format!("no token hash for `{id}`")))?;
            if let Some(&(q, other)) = owner_hash.get(h.as_str()) {
                if q != p {
                    return Err(Error::CollisionAfterDedup(format!(
                        "`{other}` and `{id}` share a canonical token hash"
                    )));
                }
            }
            owner_hash.insert(h, (p, id));
        }
    }
    Ok(())
}

/// Shuffles `(id, token hash)` pairs by seed and cuts them by `ratios`;
/// the train split absorbs rounding.
pub fn split(
    items: &[(String, String)],
    ratios: [f64; 3],
    seed: u64,
    generator_seed: u64,
    labels: LabelSetting,
) -> Result<SplitManifest> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadConfig(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let mut seen = HashSet::new();
    for (id, _) in items {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut order: Vec<&(String, String)> = items.iter().collect();
    order.sort();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = order.len();
    let n_rag = (n as f64 * ratios[1]).round() as usize;
    let n_test = ((n as f64 * ratios[2]).round() as usize).min(n - n_rag);
    let n_train = n - n_rag - n_test;
    let take = |r: std::ops::Range<usize>| {
        let mut v: Vec<String> = order[r].iter().map(|(id, _)| id.clone()).collect();
        v.sort();
        v
    };
    let m = SplitManifest {
        train: take(0..n_train),
        rag: take(n_train..n_train + n_rag),
        test: take(n_train + n_rag..n),
        generator_seed,
        split_seed: seed,
        labels,
    };
    let hashes: HashMap<String, String> = items.iter().cloned().collect();
    m.verify(&hashes)?;
    Ok(m)
}
