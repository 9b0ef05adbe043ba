//! Label-free retrieval bank: exact inner-product top-k with softmax weights.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slackcast_stage1::{LAYOUT_VERSION, PHI_DIM};

use crate::{Error, Result};

pub const NORM_TOLERANCE: f64 = 1e-6;

/// One bank item. There is deliberately no place to store a timing label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankEntry {
    pub id: String,
    pub fingerprint: Vec<f64>,
    pub phi: Vec<f64>,
    pub token_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    /// Position in the bank's id-sorted entry list.
    pub index: usize,
    pub sim: f64,
    pub weight: f64,
}

/// Top-k neighbours, descending similarity, weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub neighbors: Vec<Neighbor>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    layout_version: String,
    dim: usize,
    count: usize,
    train_checksum: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bank {
    entries: Vec<BankEntry>,
    train_checksum: Option<String>,
}

/// Validates and freezes `entries`; query results do not depend on their order.
pub fn build_bank(mut entries: Vec<BankEntry>) -> Result<Bank> {
    let mut seen = HashSet::new();
    for e in &entries {
        if !seen.insert(e.id.as_str()) {
            return Err(Error::DuplicateId(e.id.clone()));
        }
        for len in [e.fingerprint.len(), e.phi.len()] {
            if len != PHI_DIM {
                return Err(Error::DimensionMismatch {
                    expected: PHI_DIM,
                    got: len,
                });
            }
        }
        let norm = e.fingerprint.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::NonUnitNorm { id: e.id.clone(), norm });
        }
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Bank {
        entries,
        train_checksum: None,
    })
}

/// Checksum of a training split's id set, order-insensitive.
pub fn train_checksum<'a>(ids: impl IntoIterator<Item = &'a str>) -> String {
    let sorted: BTreeSet<&str> = ids.into_iter().collect();
    let mut h = Sha256::new();
    for id in sorted {
        h.update(id.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl Bank {
    /// Builds a bank after checking it shares no id and no canonical-token
    /// hash with the training split `(id, token_hash)` pairs.
    pub fn build_disjoint(entries: Vec<BankEntry>, train: &[(String, String)]) -> Result<Bank> {
        let ids: HashSet<&str> = train.iter().map(|(id, _)| id.as_str()).collect();
        let hashes: HashSet<&str> = train.iter().map(|(_, h)| h.as_str()).collect();
        for e in &entries {
            if ids.contains(e.id.as_str()) {
                return Err(Error::DisjointnessViolation(format!("id `{}` is in the training split", e.id)));
            }
            if hashes.contains(e.token_hash.as_str()) {
                return Err(Error::DisjointnessViolation(format!(
                    "`{}` has the same canonical tokens as a training module",
                    e.id
                )));
            }
        }
        let mut bank = build_bank(entries)?;
        bank.train_checksum = Some(train_checksum(train.iter().map(|(id, _)| id.as_str())));
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &BankEntry {
        &self.entries[index]
    }

    pub fn train_checksum(&self) -> Option<&str> {
        self.train_checksum.as_deref()
    }

    /// Top-k by inner product; ties go to the smaller id.
    pub fn retrieve(&self, query: &[f64], k: usize) -> Result<NeighborSet> {
        self.search(query, k, None)
    }

    /// As [`Bank::retrieve`], never returning the entry named `query_id`.
    pub fn self_exclusion(&self, query_id: &str, query: &[f64], k: usize) -> Result<NeighborSet> {
        self.search(query, k, Some(query_id))
    }

    fn search(&self, query: &[f64], k: usize, exclude: Option<&str>) -> Result<NeighborSet> {
        if k == 0 {
            return Err(Error::BadConfig("k must be at least 1".into()));
        }
        if query.len() != PHI_DIM {
            return Err(Error::DimensionMismatch {
                expected: PHI_DIM,
                got: query.len(),
            });
        }
        let mut scored: Vec<(f64, usize)> = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| Some(e.id.as_str()) != exclude)
            .map(|(i, e)| (dot(query, &e.fingerprint), i))
            .collect();
        if scored.is_empty() {
            return Err(Error::EmptyBank);
        }
        let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        let weights = softmax(&scored.iter().map(|s| s.0).collect::<Vec<_>>());
        Ok(NeighborSet {
            neighbors: scored
                .into_iter()
                .zip(weights)
                .map(|((sim, index), weight)| Neighbor {
                    id: self.entries[index].id.clone(),
                    index,
                    sim,
                    weight,
                })
                .collect(),
        })
    }

    /// SHA-256 over the serialized entries; identifies the bank a model used.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(serde_json::to_vec(e).expect("bank entries serialize"));
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Header line plus one JSON line per entry.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header = Header {
            layout_version: LAYOUT_VERSION.to_string(),
            dim: PHI_DIM,
            count: self.entries.len(),
            train_checksum: self.train_checksum.clone(),
        };
        serde_json::to_writer(&mut out, &header).expect("header serializes");
        out.push(b'\n');
        for e in &self.entries {
            serde_json::to_writer(&mut out, e).expect("entry serializes");
            out.push(b'\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&out))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Bank> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::format(path, "missing header"))?
            .map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| Error::format(path, e))?;
        if header.layout_version != LAYOUT_VERSION {
            return Err(Error::format(
                path,
                format!("layout {} does not match {LAYOUT_VERSION}", header.layout_version),
            ));
        }
        if header.dim != PHI_DIM {
            return Err(Error::DimensionMismatch {
                expected: PHI_DIM,
                got: header.dim,
            });
        }
        let mut entries = Vec::with_capacity(header.count);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| Error::format(path, e))?);
        }
        if entries.len() != header.count {
            return Err(Error::format(
                path,
                format!("header says {} entries, found {}", header.count, entries.len()),
            ));
        }
        let mut bank = build_bank(entries)?;
        bank.train_checksum = header.train_checksum;
        Ok(bank)
    }

    /// Confirms this bank was built against exactly this training split and
    /// shares no id with it.
    pub fn verify_train<'a>(&self, train_ids: impl IntoIterator<Item = &'a str> + Clone) -> Result<()> {
        let sum = train_checksum(train_ids.clone());
        if self.train_checksum.as_deref() != Some(sum.as_str()) {
            return Err(Error::DisjointnessViolation("training split checksum does not match the bank".into()));
        }
        let ids: HashSet<&str> = self.entries.iter().map(|e| e.id.as_str()).collect();
        if let Some(id) = train_ids.into_iter().find(|id| ids.contains(id)) {
            return Err(Error::DisjointnessViolation(format!("id `{id}` is in both")));
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax with the maximum subtracted first.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(i: usize) -> Vec<f64> {
        let mut v = vec![0.0; PHI_DIM];
        v[i] = 1.0;
        v
    }

    fn entry(id: &str, fp: Vec<f64>) -> BankEntry {
        BankEntry {
            id: id.into(),
            phi: fp.clone(),
            fingerprint: fp,
            token_hash: format!("h-{id}"),
        }
    }

    #[test]
    fn empty_bank_errors_on_query() {
        let bank = build_bank(vec![]).unwrap();
        assert_eq!(bank.retrieve(&unit(0), 1).unwrap_err().code(), "EmptyBank");
    }

    #[test]
    fn single_entry_weight_one() {
        let bank = build_bank(vec![entry("a", unit(3))]).unwrap();
        for k in [1, 2, 7] {
            let n = bank.retrieve(&unit(0), k).unwrap();
            assert_eq!(n.len(), 1);
            assert_eq!(n.neighbors[0].weight, 1.0);
        }
    }

    #[test]
    fn validation_errors() {
        let dup = build_bank(vec![entry("a", unit(0)), entry("a", unit(1))]);
        assert_eq!(dup.unwrap_err().code(), "DuplicateId");
        let short = build_bank(vec![entry("a", vec![1.0])]);
        assert_eq!(short.unwrap_err().code(), "DimensionMismatch");
        let mut v = unit(0);
        v[0] = 1.01;
        assert_eq!(build_bank(vec![entry("a", v)]).unwrap_err().code(), "NonUnitNorm");
    }

    #[test]
    fn ln2_gap_weights() {
        let mut a = vec![0.0; PHI_DIM];
        a[0] = 1.0;
        let q = a.clone();
        let mut b = vec![0.0; PHI_DIM];
        let sim_b = 1.0 - std::f64::consts::LN_2;
        b[0] = sim_b;
        b[1] = (1.0 - sim_b * sim_b).sqrt();
        let bank = build_bank(vec![entry("a", a), entry("b", b)]).unwrap();
        let n = bank.retrieve(&q, 2).unwrap();
        assert!((n.neighbors[0].weight - 2.0 / 3.0).abs() < 1e-12);
        assert!((n.neighbors[1].weight - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exclusion() {
        let bank = build_bank(vec![entry("a", unit(0))]).unwrap();
        assert_eq!(bank.self_exclusion("a", &unit(0), 1).unwrap_err().code(), "EmptyBank");
        let bank = build_bank(vec![entry("a", unit(0)), entry("b", unit(1))]).unwrap();
        assert_eq!(bank.self_exclusion("a", &unit(0), 1).unwrap().neighbors[0].id, "b");
        assert_eq!(bank.self_exclusion("zz", &unit(0), 2).unwrap(), bank.retrieve(&unit(0), 2).unwrap());
    }

    #[test]
    fn disjointness() {
        let train = vec![("t1".to_string(), "h-x".to_string())];
        let ok = Bank::build_disjoint(vec![entry("a", unit(0))], &train).unwrap();
        ok.verify_train(["t1"]).unwrap();
        assert!(ok.verify_train(["t2"]).is_err());
        let clash_id = Bank::build_disjoint(vec![entry("t1", unit(0))], &train);
        assert_eq!(clash_id.unwrap_err().code(), "DisjointnessViolation");
        let clash_hash = Bank::build_disjoint(vec![entry("x", unit(0))], &train);
        assert_eq!(clash_hash.unwrap_err().code(), "DisjointnessViolation");
    }
}
