use std::fs;
use std::path::Path;

use ambiguity_auction::cli::main_with;
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["ambiguity-auction"];
    v.extend_from_slice(args);
    main_with(v)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_default_design_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["simulate", "--out", path_str(&a)]), 0);
    assert_eq!(run(&["simulate", "--out", path_str(&b)]), 0);
    let bids = fs::read_to_string(a.join("bids.csv")).unwrap();
    assert_eq!(bids.lines().count(), 601);
    assert_eq!(fs::read(a.join("bids.csv")).unwrap(), fs::read(b.join("bids.csv")).unwrap());
    assert_eq!(fs::read(a.join("bids.csv.meta.json")).unwrap(), fs::read(b.join("bids.csv.meta.json")).unwrap());

    let c = dir.path().join("c");
    assert_eq!(run(&["simulate", "--out", path_str(&c), "--seed", "2"]), 0);
    assert_ne!(fs::read(a.join("bids.csv")).unwrap(), fs::read(c.join("bids.csv")).unwrap());
    let meta = read_json(&c.join("bids.csv.meta.json"));
    assert_eq!(meta["seed"], 2);
    assert_eq!(meta["config"]["dgp"]["seed"], 2);
    assert_ne!(meta["config_hash"], read_json(&a.join("bids.csv.meta.json"))["config_hash"]);
}

#[test]
fn identify_from_structure_and_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("id.json");
    fs::write(
        &cfg,
        r#"{"structure": {"valuation": {"kind": "uniform"}, "distortion": {"kind": "exponential", "rate": 2.0}, "crra": 0.25}, "ns": [2, 4]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["identify", "--config", path_str(&cfg), "--out", path_str(&out)]), 0);
    let j = read_json(&out.join("identified.json"));
    assert!((j["recovered"]["theta"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert!(j["check"]["d_sup"].as_f64().unwrap() < 1e-6);

    // Same laws read back from the written CSVs, with paths relative to the config.
    let cfg2 = dir.path().join("id2.json");
    fs::write(&cfg2, r#"{"laws": [{"n": 2, "path": "out/bid_law_n2.csv"}, {"n": 4, "path": "out/bid_law_n4.csv"}]}"#).unwrap();
    let out2 = dir.path().join("out2");
    assert_eq!(run(&["identify", "--config", path_str(&cfg2), "--out", path_str(&out2)]), 0);
    let k = read_json(&out2.join("identified.json"));
    assert!((k["recovered"]["theta"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert!(k["check"].is_null());
}

#[test]
fn estimate_then_decide_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["simulate", "--out", path_str(&data)]), 0);
    let est_cfg = dir.path().join("est.json");
    fs::write(
        &est_cfg,
        r#"{"data": "data/bids.csv", "sampler": {"first_check": 3000, "extra_iter": 1000, "max_iter": 3000}}"#,
    )
    .unwrap();
    let est = dir.path().join("est");
    let code = run(&["estimate", "--config", path_str(&est_cfg), "--out", path_str(&est)]);
    assert!(code == 0 || code == 4, "exit {code}");
    let summary = read_json(&est.join("summary.json"));
    assert_eq!(summary["bayes_actions"].as_array().unwrap().len(), 2);
    assert_eq!(summary["converged"].as_bool().unwrap(), code == 0);

    let dec_cfg = dir.path().join("dec.json");
    fs::write(&dec_cfg, r#"{"chain": "est/chain.csv", "ns": [2], "truth": {"valuation": {"kind": "uniform"}, "distortion": {"kind": "identity"}, "crra": 0.0}}"#).unwrap();
    let dec = dir.path().join("dec");
    assert_eq!(run(&["decide", "--config", path_str(&dec_cfg), "--out", path_str(&dec)]), 0);
    let d = read_json(&dec.join("decision.json"));
    let rho = d["summary"]["bayes_actions"][0]["rho"].as_f64().unwrap();
    assert!((0.0..1.0).contains(&rho));
    assert!(d["truth"][0]["loss_pct"].as_f64().unwrap() >= 0.0);
    assert!(fs::read_to_string(dec.join("revenue_n2.csv")).unwrap().starts_with("rho,revenue,lo,hi\n"));

    let rep_cfg = dir.path().join("rep.json");
    fs::write(&rep_cfg, r#"{"data": "data/bids.csv", "chain": "est/chain.csv", "predictive_reps": 5}"#).unwrap();
    let rep = dir.path().join("rep");
    assert_eq!(run(&["report", "--config", path_str(&rep_cfg), "--out", path_str(&rep)]), 0);
    for f in ["data_stats.csv", "prior_predictive.csv", "posterior_predictive.csv", "density_band.csv", "d_band.csv", "trace.csv"] {
        assert!(rep.join(f).exists(), "{f}");
        assert!(rep.join(format!("{f}.meta.json")).exists(), "{f} meta");
    }
    assert_eq!(fs::read_to_string(rep.join("prior_predictive.csv")).unwrap().lines().count(), 11);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"unknown": 1}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", path_str(&bad), "--out", path_str(&out)]), 2);
    assert_eq!(run(&["mc", "--config", path_str(&dir.path().join("missing.json"))]), 3);
    let missing_data = dir.path().join("est.json");
    fs::write(&missing_data, r#"{"data": "nope.csv"}"#).unwrap();
    assert_eq!(run(&["estimate", "--config", path_str(&missing_data), "--out", path_str(&out)]), 3);
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["simulate", "--scale", "huge"]), 2);
    assert_eq!(run(&["--help"]), 0);
}
