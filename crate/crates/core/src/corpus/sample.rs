//! Stratified sampling over (cluster, size bin, difficulty) cells.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::strata::{Difficulty, SizeBin};
use crate::{Error, Result};

pub const DEFAULT_OVERSAMPLE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolItem {
    pub id: String,
    pub cluster: usize,
    pub size_bin: SizeBin,
    pub difficulty: Difficulty,
    /// Member of a rare category that gets oversampled.
    pub rare: bool,
}

/// Picks `target` ids; cell quotas are proportional to cell mass with
/// rare cells weighted by `factor`, capped at each cell's size. Returns
/// ids sorted.
pub fn stratified_sample(pool: &[PoolItem], target: usize, factor: f64, seed: u64) -> Result<Vec<String>> {
    let keyed: Vec<(&str, (usize, SizeBin, Difficulty, bool))> = pool
        .iter()
        .map(|p| (p.id.as_str(), (p.cluster, p.size_bin, p.difficulty, p.rare)))
        .collect();
    sample_by_cell(&keyed, |k| if k.3 { factor } else { 1.0 }, target, seed)
}

/// Proportional-quota sampling over arbitrary cell keys; `weight` scales
/// a cell's mass before normalization.
pub fn sample_by_cell<K: Ord + Copy>(
    pool: &[(&str, K)],
    weight: impl Fn(&K) -> f64,
    target: usize,
    seed: u64,
) -> Result<Vec<String>> {
    if pool.is_empty() || target > pool.len() {
        return Err(Error::EmptyPool);
    }
    let mut cells: BTreeMap<K, Vec<&str>> = BTreeMap::new();
    for (id, k) in pool {
        cells.entry(*k).or_default().push(id);
    }
    let keys: Vec<K> = cells.keys().copied().collect();
    let sizes: Vec<usize> = keys.iter().map(|k| cells[k].len()).collect();
    let weights: Vec<f64> = keys.iter().zip(&sizes).map(|(k, &n)| n as f64 * weight(k)).collect();
    let quotas = water_fill(&weights, &sizes, target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target);
    for (k, q) in keys.iter().zip(quotas) {
        let mut ids = cells[k].clone();
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        out.extend(ids[..q].iter().map(|s| s.to_string()));
    }
    out.sort();
    Ok(out)
}

/// Integer allocation of `target` proportional to `weights`, never
/// exceeding `caps`; overflow is redistributed over uncapped cells.
fn water_fill(weights: &[f64], caps: &[usize], target: usize) -> Vec<usize> {
    let n = weights.len();
    let mut ideal = vec![0.0; n];
    let mut capped = vec![false; n];
    loop {
        let fixed: f64 = (0..n).filter(|&i| capped[i]).map(|i| caps[i] as f64).sum();
        let free_w: f64 = (0..n).filter(|&i| !capped[i]).map(|i| weights[i]).sum();
        let rest = target as f64 - fixed;
        let mut newly = false;
        for i in 0..n {
            ideal[i] = if capped[i] {
                caps[i] as f64
            } else if free_w > 0.0 {
                rest * weights[i] / free_w
            } else {
                0.0
            };
            if !capped[i] && ideal[i] > caps[i] as f64 {
                capped[i] = true;
                newly = true;
            }
        }
        if !newly {
            break;
        }
    }
    let mut q: Vec<usize> = ideal.iter().zip(caps).map(|(v, &c)| (v.floor() as usize).min(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
    let mut left = target - q.iter().sum::<usize>();
    while left > 0 {
        let before = left;
        for &i in &order {
            if left > 0 && q[i] < caps[i] {
                q[i] += 1;
                left -= 1;
            }
        }
        assert!(left < before, "caps sum below target");
    }
    q
}
