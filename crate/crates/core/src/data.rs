//! Bid datasets: simulation from a data-generating structure and CSV I/O.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bidding::{bid_curves, DEFAULT_GRID, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{Distortion, Structure, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidRecord {
    pub auction_id: u64,
    pub n: usize,
    pub bidder_index: usize,
    pub bid: f64,
}

/// Bids grouped by auction; `design` maps bidder count to auction count.
#[derive(Debug, Clone, PartialEq)]
pub struct BidDataset {
    records: Vec<BidRecord>,
    design: BTreeMap<usize, usize>,
}

impl BidDataset {
    /// Checks that every auction has exactly `n` bids in [0, 1] and derives the design.
    pub fn from_records(records: Vec<BidRecord>) -> Result<Self> {
        let mut per_auction: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
        for r in &records {
            if !(0.0..=1.0).contains(&r.bid) {
                return Err(Error::Data(format!("bid {} in auction {} outside [0, 1]", r.bid, r.auction_id)));
            }
            if r.n < 2 {
                return Err(Error::Data(format!("auction {} has n = {}", r.auction_id, r.n)));
            }
            let e = per_auction.entry(r.auction_id).or_insert((r.n, 0));
            if e.0 != r.n {
                return Err(Error::Data(format!("auction {} mixes bidder counts", r.auction_id)));
            }
            e.1 += 1;
        }
        let mut design = BTreeMap::new();
        for (id, (n, count)) in per_auction {
            if count != n {
                return Err(Error::Data(format!("auction {id} has {count} bids, expected {n}")));
            }
            *design.entry(n).or_insert(0) += 1;
        }
        Ok(Self { records, design })
    }

    pub fn records(&self) -> &[BidRecord] {
        &self.records
    }

    pub fn design(&self) -> &BTreeMap<usize, usize> {
        &self.design
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn bids_by_n(&self) -> BTreeMap<usize, Vec<f64>> {
        let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.n).or_default().push(r.bid);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["auction_id", "n", "bidder_index", "bid"])?;
        for r in &self.records {
            wr.write_record([
                r.auction_id.to_string(),
                r.n.to_string(),
                r.bidder_index.to_string(),
                fmt_sig(r.bid),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let records = rd.deserialize().collect::<std::result::Result<Vec<BidRecord>, _>>()?;
        Self::from_records(records)
    }
}

/// Plain decimal with 17 significant digits (exact round trip).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (16 - mag).clamp(0, 340) as usize;
    format!("{x:.decimals$}")
}

/// Data-generating process: structure, design, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub valuation: Valuation,
    pub distortion: Distortion,
    pub crra: f64,
    pub design: BTreeMap<usize, usize>,
    pub seed: u64,
}

impl DgpSpec {
    /// Mixture valuation, calibrated distortion, CRRA 0.3, 150 auctions with
    /// two bidders and 60 with five.
    pub fn baseline(seed: u64) -> Self {
        let s = Structure::baseline_dgp();
        Self {
            valuation: s.valuation,
            distortion: s.distortion,
            crra: s.crra,
            design: BTreeMap::from([(2, 150), (5, 60)]),
            seed,
        }
    }

    /// As [`DgpSpec::baseline`] but without ambiguity.
    pub fn redundant(seed: u64) -> Self {
        Self { distortion: Distortion::Identity, ..Self::baseline(seed) }
    }

    pub fn structure(&self) -> Result<Structure> {
        Structure::new(self.valuation.clone(), self.distortion.clone(), self.crra)
    }

    /// Equal split of `total_bids` across `ns` (whole auctions per n).
    pub fn equal_design(ns: &[usize], total_bids: usize) -> Result<BTreeMap<usize, usize>> {
        if ns.is_empty() {
            return Err(crate::error::arg("empty bidder-count set"));
        }
        let per_n = total_bids / ns.len();
        let mut design = BTreeMap::new();
        for &n in ns {
            if per_n * ns.len() != total_bids || !per_n.is_multiple_of(n) {
                return Err(crate::error::arg(format!(
                    "{total_bids} bids cannot be split equally into whole auctions over {ns:?}"
                )));
            }
            design.insert(n, per_n / n);
        }
        Ok(design)
    }
}

/// Simulated dataset together with the hidden values behind each bid.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: BidDataset,
    pub values: Vec<f64>,
}

pub fn sample_dataset(spec: &DgpSpec) -> Result<BidDataset> {
    Ok(sample_with_values(spec)?.dataset)
}

/// Auction ids run from 0 in ascending `n`; auction `id` draws its values
/// from ChaCha stream `id` of the spec seed.
pub fn sample_with_values(spec: &DgpSpec) -> Result<SimulatedData> {
    let s = spec.structure()?;
    let ns: Vec<usize> = spec.design.keys().copied().collect();
    let curves = bid_curves(&s, &ns, 0.0, DEFAULT_GRID, DEFAULT_TOL)?;
    let mut records = Vec::new();
    let mut values = Vec::new();
    let mut id = 0u64;
    for (curve, (&n, &t)) in curves.iter().zip(&spec.design) {
        for _ in 0..t {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(id);
            for i in 0..n {
                let v = s.valuation.sample(&mut rng);
                values.push(v);
                records.push(BidRecord { auction_id: id, n, bidder_index: i, bid: curve.bid_at(v) });
            }
            id += 1;
        }
    }
    Ok(SimulatedData { dataset: BidDataset::from_records(records)?, values })
}

/// Mean, standard deviation, and skewness, all with divisor `len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
}

pub fn summary_stats(x: &[f64]) -> SummaryStats {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / m;
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    SummaryStats { mean, sd: m2.sqrt(), skew }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn baseline_design_has_600_bids() {
        let d = sample_dataset(&DgpSpec::baseline(1)).unwrap();
        assert_eq!(d.len(), 600);
        assert_eq!(d.design(), &BTreeMap::from([(2, 150), (5, 60)]));
        let by_n = d.bids_by_n();
        assert_eq!(by_n[&2].len(), 300);
        assert_eq!(by_n[&5].len(), 300);
    }

    #[test]
    fn risk_neutral_uniform_bids_are_shaded_values() {
        let spec = DgpSpec {
            valuation: Valuation::Uniform,
            distortion: Distortion::Identity,
            crra: 0.0,
            design: BTreeMap::from([(2, 20), (4, 10)]),
            seed: 9,
        };
        let sim = sample_with_values(&spec).unwrap();
        for (r, v) in sim.dataset.records().iter().zip(&sim.values) {
            let want = v * (r.n as f64 - 1.0) / r.n as f64;
            assert_abs_diff_eq!(r.bid, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn baseline_dgp_statistics() {
        let d = sample_dataset(&DgpSpec::baseline(20240601)).unwrap();
        let st = summary_stats(&d.bids_by_n()[&2]);
        assert!((st.mean - 0.23).abs() < 0.05, "{st:?}");
        assert!((st.sd - 0.12).abs() < 0.05, "{st:?}");
        // Skewness of 300 draws has sampling sd near 0.14; compare over a pooled sample instead.
        let big = DgpSpec { design: BTreeMap::from([(2, 20000)]), ..DgpSpec::baseline(5) };
        let st = summary_stats(&sample_dataset(&big).unwrap().bids_by_n()[&2]);
        assert!((st.mean - 0.23).abs() < 0.05 && (st.sd - 0.12).abs() < 0.05 && (st.skew - 0.40).abs() < 0.05, "{st:?}");
    }

    #[test]
    fn sampling_is_deterministic_per_auction() {
        let a = sample_dataset(&DgpSpec::baseline(11)).unwrap();
        let b = sample_dataset(&DgpSpec::baseline(11)).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&DgpSpec::baseline(12)).unwrap();
        assert_ne!(a, c);
        // Adding auctions does not disturb earlier ones.
        let more = DgpSpec { design: BTreeMap::from([(2, 151), (5, 60)]), ..DgpSpec::baseline(11) };
        let m = sample_dataset(&more).unwrap();
        assert_eq!(&m.records()[..300], &a.records()[..300]);
    }

    #[test]
    fn csv_round_trip() {
        let d = sample_dataset(&DgpSpec::baseline(4)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("auction_id,n,bidder_index,bid\n"));
        let back = BidDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_incomplete_auctions() {
        let r = vec![BidRecord { auction_id: 0, n: 2, bidder_index: 0, bid: 0.3 }];
        assert_eq!(BidDataset::from_records(r).unwrap_err().kind(), "data");
        let r = vec![BidRecord { auction_id: 0, n: 2, bidder_index: 0, bid: 1.3 }];
        assert!(BidDataset::from_records(r).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.5), "0.50000000000000000");
        let s = fmt_sig(0.000123456789012345);
        assert_eq!(s.parse::<f64>().unwrap(), 0.000123456789012345);
        assert!(s.trim_start_matches(['0', '.']).len() >= 12);
    }

    #[test]
    fn equal_design_split() {
        assert_eq!(DgpSpec::equal_design(&[2, 5], 600).unwrap(), BTreeMap::from([(2, 150), (5, 60)]));
        assert_eq!(DgpSpec::equal_design(&[2, 3, 4, 5, 6], 2400).unwrap()[&6], 80);
        assert!(DgpSpec::equal_design(&[2, 7], 600).is_err());
        assert!(DgpSpec::equal_design(&[2, 4, 5], 1200).is_ok());
    }
}
