use std::collections::BTreeMap;

use proptest::prelude::*;

use ambiguity_auction::bernstein::{BpdParams, DParams, SimplexWeights};
use ambiguity_auction::data::{sample_dataset, BidDataset, DgpSpec};
use ambiguity_auction::decision::{revenue_at, revenue_direct};
use ambiguity_auction::harness::{run_experiment_with, ExperimentSpec, Oracle, Variant};
use ambiguity_auction::identification::{exact_bid_law, recover_structure, recovery_error};
use ambiguity_auction::inference::{log_likelihood_structure, make_bins, LikelihoodConfig};
use ambiguity_auction::model::{Distortion, Structure, Valuation};

fn weights(raw: &[f64]) -> SimplexWeights {
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let head: f64 = w[..w.len() - 1].iter().sum();
    *w.last_mut().unwrap() = 1.0 - head;
    SimplexWeights::new(w).unwrap()
}

fn structure() -> impl Strategy<Value = Structure> {
    (
        proptest::collection::vec(0.05f64..1.0, 5),
        0.0f64..0.25,
        proptest::collection::vec(0.05f64..1.0, 3),
        0.0f64..0.6,
    )
        .prop_filter_map("shape", |(f, th, d, crra)| {
            let v = Valuation::Bernstein { params: BpdParams::new(weights(&f)).ok()? };
            let dist = Distortion::Bernstein { params: DParams::new(th, 5, weights(&d)).ok()? };
            Structure::new(v, dist, crra).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fast_revenue_matches_direct_route(s in structure(), n in 2usize..6, r in 0.0f64..0.95) {
        let fast = revenue_at(&s, n, &[r]).unwrap()[0];
        let direct = revenue_direct(&s, n, r).unwrap();
        prop_assert!((fast - direct).abs() < 1e-7, "{fast} vs {direct}");
        prop_assert!(fast >= 0.0);
    }
}

#[test]
fn dataset_round_trip_keeps_likelihood() {
    let d = sample_dataset(&DgpSpec::baseline(3)).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = BidDataset::read_csv(buf.as_slice()).unwrap();
    let cfg = LikelihoodConfig::default();
    let s = Structure::baseline_dgp();
    let a = log_likelihood_structure(&s, &make_bins(&d, 40).unwrap(), &cfg);
    let b = log_likelihood_structure(&s, &make_bins(&back, 40).unwrap(), &cfg);
    assert_eq!(a, b);
    assert!(a.is_finite());
}

#[test]
fn identification_of_default_structure() {
    let s = Structure::baseline_dgp();
    for (n1, n2) in [(2, 5), (3, 4), (2, 6)] {
        let rec = recover_structure(&exact_bid_law(&s, n1, 1001).unwrap(), &exact_bid_law(&s, n2, 1001).unwrap()).unwrap();
        let e = recovery_error(&rec, &s).unwrap();
        assert!(e.theta < 1e-6 && e.d_sup < 1e-5 && e.f0_sup < 1e-3, "{n1},{n2}: {e:?}");
    }
}

#[test]
fn oracle_harness_is_exact_for_every_design() {
    for ns in [vec![2, 5], vec![2, 4, 5], vec![2, 3, 4, 5, 6]] {
        let total = if ns.len() == 5 { 2400 } else { 1200 };
        let r = run_experiment_with(&ExperimentSpec::new(Variant::Correct, ns.clone(), total, 2, 1), &Oracle).unwrap();
        assert_eq!(r.metrics.mise_f, 0.0);
        assert_eq!(r.metrics.loss_n2, 0.0);
        assert_eq!(r.converged, 2);
        assert!((r.true_reserve_n2 - 0.25).abs() <= 0.03, "{ns:?}");
    }
    assert_eq!(DgpSpec::equal_design(&[2, 4, 5], 1200).unwrap(), BTreeMap::from([(2, 200), (4, 100), (5, 80)]));
}
