//! Near-duplicate removal by canonical-token multiset overlap.

use std::collections::{BTreeMap, HashMap};

use crate::Result;

pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// `|A ∩ B| / max(|A|, |B|)` over token multisets, given sorted inputs.
pub fn overlap_sorted(a: &[u32], b: &[u32]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common as f64 / longest as f64
}

/// Overlap between two sources' canonical token streams.
pub fn overlap(a: &str, b: &str) -> Result<f64> {
    let mut interner = Interner::default();
    let ta = interner.bag(&slackcast_rtl::canonical_tokens(a)?);
    let tb = interner.bag(&slackcast_rtl::canonical_tokens(b)?);
    Ok(overlap_sorted(&ta, &tb))
}

#[derive(Default)]
struct Interner(HashMap<String, u32>);

impl Interner {
    fn bag(&mut self, toks: &[String]) -> Vec<u32> {
        let mut v: Vec<u32> = toks
            .iter()
            .map(|t| {
                let next = self.0.len() as u32;
                *self.0.entry(t.clone()).or_insert(next)
            })
            .collect();
        v.sort_unstable();
        v
    }
}

/// Indices of the modules kept by a greedy scan in the given order: a
/// module is dropped when its overlap with any earlier survivor exceeds
/// `threshold`. Inputs are canonical token streams.
pub fn dedup_tokens(streams: &[Vec<String>], threshold: f64) -> Vec<usize> {
    let mut interner = Interner::default();
    let bags: Vec<Vec<u32>> = streams.iter().map(|s| interner.bag(s)).collect();
    // Survivors bucketed by length; overlap <= min/max bounds the candidates.
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut kept = Vec::new();
    for (i, bag) in bags.iter().enumerate() {
        let n = bag.len();
        let lo = (n as f64 * threshold).floor() as usize;
        let hi = if threshold > 0.0 { (n as f64 / threshold).ceil() as usize } else { usize::MAX };
        let dup = by_len
            .range(lo..=hi)
            .flat_map(|(_, ids)| ids.iter())
            .any(|&j| overlap_sorted(bag, &bags[j]) > threshold);
        if !dup {
            by_len.entry(n).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    const AND: &str = "module m(input a, input b, output y); assign y = a & b; endmodule";

    fn toks(s: &str) -> Vec<String> {
        slackcast_rtl::canonical_tokens(s).unwrap()
    }

    #[test]
    fn exact_and_renamed_duplicates_dropped() {
        let renamed = "module top(input p, input q, output r); assign r = p & q; endmodule";
        let other = "module c(input clk, input en, output reg [3:0] q); always @(posedge clk) if (en) q <= q + 4'd1; endmodule";
        let kept = dedup_tokens(&[toks(AND), toks(AND), toks(renamed), toks(other)], DEFAULT_THRESHOLD);
        assert_eq!(kept, vec![0, 3]);
    }

    #[test]
    fn different_structures_have_low_overlap() {
        let counter = "module c(input clk, input en, output reg [3:0] q); always @(posedge clk) if (en) q <= q + 4'd1; endmodule";
        // Hand count: 23 tokens vs 36. Shared multiset: module, id0, one `(`,
        // input x2, id1 x2, `,` x2, id2 x2, output, id3 x2, one `)`, `;` x2,
        // endmodule = 18.
        let o = overlap(AND, counter).unwrap();
        assert!((o - 18.0 / 36.0).abs() < 1e-12, "{o}");
        assert!(o < DEFAULT_THRESHOLD);
    }

    #[test]
    fn overlap_is_symmetric_and_bounded() {
        let a = [1, 1, 2, 3];
        let b = [1, 2, 2, 3, 4];
        assert_eq!(overlap_sorted(&a, &b), 3.0 / 5.0);
        assert_eq!(overlap_sorted(&b, &a), 3.0 / 5.0);
        assert_eq!(overlap_sorted(&a, &a), 1.0);
    }
}
