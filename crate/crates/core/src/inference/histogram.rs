use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::BidDataset;
use crate::error::{arg, Error, Result};

const NUDGE: f64 = 1e-12;

/// Equal-width bins for one bidder count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGroup {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Largest observed bid.
    pub max_bid: f64,
}

impl BinGroup {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-`n` binned bids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedHistogram {
    pub groups: BTreeMap<usize, BinGroup>,
}

impl BinnedHistogram {
    pub fn ns(&self) -> Vec<usize> {
        self.groups.keys().copied().collect()
    }
}

/// `bins_per_n` equal-width bins on [min bid, max bid] for each `n`, widened
/// by 1e-12 on both sides.
pub fn make_bins(data: &BidDataset, bins_per_n: usize) -> Result<BinnedHistogram> {
    if bins_per_n < 2 {
        return Err(arg("need at least two bins per bidder count"));
    }
    let by_n = data.bids_by_n();
    if by_n.is_empty() {
        return Err(Error::Data("dataset has no bids".into()));
    }
    let mut groups = BTreeMap::new();
    for (&n, count) in data.design() {
        let bids = by_n.get(&n).filter(|b| !b.is_empty() && *count > 0);
        let bids = bids.ok_or_else(|| Error::Data(format!("no bids for n = {n}")))?;
        groups.insert(n, bin_group(bids, bins_per_n));
    }
    Ok(BinnedHistogram { groups })
}

fn bin_group(bids: &[f64], bins: usize) -> BinGroup {
    let lo = bids.iter().copied().fold(f64::INFINITY, f64::min) - NUDGE;
    let max_bid = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hi = max_bid + NUDGE;
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0u64; bins];
    for &b in bids {
        let i = edges.partition_point(|&e| e <= b).clamp(1, bins) - 1;
        counts[i] += 1;
    }
    BinGroup { edges, counts, max_bid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_dataset, BidRecord, DgpSpec};

    fn dataset(bids: &[f64]) -> BidDataset {
        let recs = bids
            .chunks(2)
            .enumerate()
            .flat_map(|(a, c)| {
                c.iter().enumerate().map(move |(i, &bid)| BidRecord { auction_id: a as u64, n: 2, bidder_index: i, bid })
            })
            .collect();
        BidDataset::from_records(recs).unwrap()
    }

    #[test]
    fn examples() {
        let h = make_bins(&dataset(&[0.1, 0.2, 0.3, 0.4]), 2).unwrap();
        assert_eq!(h.groups[&2].counts, vec![2, 2]);
        let h = make_bins(&dataset(&[0.3, 0.3, 0.3, 0.3]), 7).unwrap();
        let occupied: Vec<_> = h.groups[&2].counts.iter().filter(|c| **c > 0).collect();
        assert_eq!(occupied, vec![&4]);
        assert!(make_bins(&dataset(&[0.1, 0.2]), 1).is_err());
    }

    #[test]
    fn counts_are_conserved() {
        let d = sample_dataset(&DgpSpec::baseline(3)).unwrap();
        let h = make_bins(&d, 40).unwrap();
        for n in [2, 5] {
            let g = &h.groups[&n];
            assert_eq!(g.total(), 300);
            assert_eq!(g.counts.len(), 40);
            assert!(g.edges.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
