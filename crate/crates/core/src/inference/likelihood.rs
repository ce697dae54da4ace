use serde::{Deserialize, Serialize};

use super::histogram::BinnedHistogram;
use super::params::ParamLayout;
use crate::bidding::bid_curves_unchecked;
use crate::model::Structure;

/// Numerics of one likelihood evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LikelihoodConfig {
    pub grid_size: usize,
    pub tol: f64,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self { grid_size: 129, tol: 1e-7 }
    }
}

/// Multinomial log likelihood of the binned bids, up to a constant.
/// Shape constraints of `s` are assumed to hold.
pub fn log_likelihood_structure(s: &Structure, hist: &BinnedHistogram, cfg: &LikelihoodConfig) -> f64 {
    let ns = hist.ns();
    let curves = match bid_curves_unchecked(s, &ns, cfg.grid_size, cfg.tol) {
        Ok(c) => c,
        Err(_) => return f64::NEG_INFINITY,
    };
    let mut total = 0.0;
    for (curve, group) in curves.iter().zip(hist.groups.values()) {
        if group.max_bid > curve.max_bid() {
            return f64::NEG_INFINITY;
        }
        let mut prev = s.valuation.cdf(curve.inverse_clamped(group.edges[0]));
        for (edge, &y) in group.edges[1..].iter().zip(&group.counts) {
            let cur = s.valuation.cdf(curve.inverse_clamped(*edge));
            if y > 0 {
                let p = cur - prev;
                if !(p > 0.0) {
                    return f64::NEG_INFINITY;
                }
                total += y as f64 * p.ln();
            }
            prev = cur;
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

pub fn log_likelihood(layout: &ParamLayout, x: &[f64], hist: &BinnedHistogram, cfg: &LikelihoodConfig) -> f64 {
    match layout.structure(x) {
        Some(s) if (0.0..1.0).contains(&s.crra) => log_likelihood_structure(&s, hist, cfg),
        _ => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::SimplexWeights;
    use crate::data::{sample_dataset, BidDataset, BidRecord, DgpSpec};
    use crate::inference::histogram::make_bins;
    use crate::inference::prior::{log_prior, PriorConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_bin_has_zero_log_likelihood() {
        let d = sample_dataset(&DgpSpec::baseline(1)).unwrap();
        let mut h = make_bins(&d, 2).unwrap();
        for g in h.groups.values_mut() {
            let total = g.total();
            g.edges = vec![0.0, 1.0];
            g.counts = vec![total];
        }
        let ll = log_likelihood_structure(&Structure::baseline_dgp(), &h, &LikelihoodConfig::default());
        assert_abs_diff_eq!(ll, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn support_violation_is_minus_infinity() {
        let d = sample_dataset(&DgpSpec::baseline(1)).unwrap();
        let h = make_bins(&d, 40).unwrap();
        let l = ParamLayout::new(6, true).unwrap();
        let f = SimplexWeights::uniform(6);
        let dw = SimplexWeights::uniform(4);
        // Risk-neutral uniform bidders with n = 2 never bid above 0.5, and the
        // default DGP produces n = 2 bids above that.
        let x = l.encode(0.0, &f, -0.01, &dw).unwrap();
        assert!(h.groups[&2].max_bid > 0.5);
        assert_eq!(log_likelihood(&l, &x, &h, &LikelihoodConfig::default()), f64::NEG_INFINITY);
    }

    #[test]
    fn invariant_to_permuting_bids() {
        let d = sample_dataset(&DgpSpec::baseline(8)).unwrap();
        let mut recs: Vec<BidRecord> = d.records().to_vec();
        let bids: Vec<f64> = recs.iter().rev().map(|r| r.bid).collect();
        // Reassign bids within the same n group in reverse order.
        let (a, b) = recs.split_at_mut(300);
        let (ba, bb) = bids.split_at(300);
        for (r, x) in a.iter_mut().zip(bb.iter()) {
            r.bid = *x;
        }
        for (r, x) in b.iter_mut().zip(ba.iter()) {
            r.bid = *x;
        }
        let permuted = BidDataset::from_records(recs).unwrap();
        let h1 = make_bins(&d, 40).unwrap();
        let h2 = make_bins(&permuted, 40).unwrap();
        let s = Structure::baseline_dgp();
        let cfg = LikelihoodConfig::default();
        assert_eq!(log_likelihood_structure(&s, &h1, &cfg), log_likelihood_structure(&s, &h2, &cfg));
    }

    #[test]
    fn truth_beats_perturbation_on_average() {
        let l = ParamLayout::new(5, true).unwrap();
        let cfg = LikelihoodConfig::default();
        let truth_f = SimplexWeights::new(vec![0.04, 0.84, 0.04, 0.04, 0.04]).unwrap();
        let truth_d = SimplexWeights::new(vec![0.4, 0.4, 0.2]).unwrap();
        let truth = l.encode(0.3, &truth_f, 0.05, &truth_d).unwrap();
        let mut other = truth.clone();
        other[0] = 0.45;
        assert!(log_prior(&l, &other, &PriorConfig::default()).is_finite());
        let mut diff = 0.0;
        for seed in 0..20 {
            let spec = DgpSpec {
                valuation: l.valuation(&truth).unwrap(),
                distortion: l.distortion(&truth).unwrap(),
                ..DgpSpec::baseline(seed)
            };
            let h = make_bins(&sample_dataset(&spec).unwrap(), 40).unwrap();
            diff += log_likelihood(&l, &truth, &h, &cfg) - log_likelihood(&l, &other, &h, &cfg);
        }
        assert!(diff > 0.0, "{diff}");
    }

    #[test]
    fn large_sample_average_approaches_negative_entropy() {
        let spec = DgpSpec { design: [(2usize, 20_000usize)].into(), ..DgpSpec::baseline(77) };
        let d = sample_dataset(&spec).unwrap();
        let h = make_bins(&d, 20).unwrap();
        let s = Structure::baseline_dgp();
        let cfg = LikelihoodConfig::default();
        let ll = log_likelihood_structure(&s, &h, &cfg) / d.len() as f64;
        let g = &h.groups[&2];
        let curve = &crate::bidding::bid_curves(&s, &[2], 0.0, 257, 1e-9).unwrap()[0];
        let cdf: Vec<f64> = g.edges.iter().map(|e| s.valuation.cdf(curve.inverse_clamped(*e))).collect();
        let ent: f64 = cdf.windows(2).map(|w| w[1] - w[0]).filter(|p| *p > 0.0).map(|p| p * p.ln()).sum();
        assert_abs_diff_eq!(ll, ent, epsilon = 0.01);
    }
}
