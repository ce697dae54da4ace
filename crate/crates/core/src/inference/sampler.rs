use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::am::{AmConfig, AmState};
use super::geweke::{geweke_with, VarianceMethod};
use super::histogram::BinnedHistogram;
use super::likelihood::{log_likelihood, LikelihoodConfig};
use super::params::ParamLayout;
use super::prior::{log_prior, sample_prior_unconstrained, PriorConfig};
use crate::data::fmt_sig;
use crate::error::{arg, Error, Result};
use crate::model::Structure;

/// Sampler and stopping-rule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub k: usize,
    pub bins_per_n: usize,
    pub ambiguity_enabled: bool,
    /// Iteration of the first convergence check.
    pub first_check: u64,
    pub thinning: u64,
    /// Iterations between later checks.
    pub extra_iter: u64,
    /// Hard cap; reaching it yields a chain flagged as not converged.
    pub max_iter: u64,
    pub p_threshold: f64,
    pub seed: u64,
    pub init_max_tries: usize,
    pub variance: VarianceMethod,
    pub am: AmConfig,
    pub prior: PriorConfig,
    pub likelihood: LikelihoodConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SamplerConfig {
    pub fn desk() -> Self {
        Self {
            k: 6,
            bins_per_n: 40,
            ambiguity_enabled: true,
            first_check: 20_000,
            thinning: 10,
            extra_iter: 2_000,
            max_iter: 200_000,
            p_threshold: 0.01,
            seed: 0,
            init_max_tries: 100_000,
            variance: VarianceMethod::NeweyWest,
            am: AmConfig::default(),
            prior: PriorConfig::default(),
            likelihood: LikelihoodConfig::default(),
        }
    }

    pub fn paper() -> Self {
        Self { first_check: 200_000, thinning: 100, extra_iter: 10_000, max_iter: 2_000_000, ..Self::desk() }
    }

    pub fn layout(&self) -> Result<ParamLayout> {
        ParamLayout::new(self.k, self.ambiguity_enabled)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout()?;
        if self.thinning == 0 || self.extra_iter == 0 {
            return Err(arg("thinning and extra_iter must be positive"));
        }
        if self.first_check / self.thinning < 8 {
            return Err(arg("first_check must leave at least 8 thinned draws"));
        }
        if self.max_iter < self.first_check {
            return Err(arg("max_iter must be at least first_check"));
        }
        if self.bins_per_n < 2 {
            return Err(arg("bins_per_n must be at least 2"));
        }
        Ok(())
    }
}

/// Thinned draws with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub layout: ParamLayout,
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    pub accepted: u64,
    pub iterations: u64,
    pub thinning: u64,
    /// Leading thinned draws excluded from the analysis window.
    pub burn_in: usize,
    /// Per-component p-values of the last convergence check.
    pub p_values: Vec<f64>,
    pub converged: bool,
}

impl Chain {
    /// A chain made of the given draws, all retained.
    pub fn from_draws(layout: ParamLayout, draws: Vec<Vec<f64>>) -> Self {
        let n = draws.len();
        Self {
            layout,
            draws,
            log_posterior: vec![f64::NAN; n],
            accepted: 0,
            iterations: n as u64,
            thinning: 1,
            burn_in: 0,
            p_values: Vec::new(),
            converged: true,
        }
    }

    fn retained_start(&self) -> usize {
        self.burn_in.min(self.draws.len())
    }

    /// Draws in the analysis window (the last 75% for sampler output).
    pub fn retained(&self) -> &[Vec<f64>] {
        &self.draws[self.retained_start()..]
    }

    pub fn retained_log_posterior(&self) -> &[f64] {
        &self.log_posterior[self.retained_start()..]
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iterations as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.retained().is_empty()
    }

    /// Structures of the retained draws.
    pub fn structures(&self) -> Result<Vec<Structure>> {
        if self.is_empty() {
            return Err(Error::EmptyChain);
        }
        self.retained()
            .iter()
            .map(|x| self.layout.structure(x).ok_or_else(|| Error::Data("draw outside the simplex".into())))
            .collect()
    }

    /// Retained draws, one row each, with the log posterior last.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = self.layout.names();
        header.push("log_posterior".into());
        wr.write_record(&header)?;
        for (x, lp) in self.retained().iter().zip(self.retained_log_posterior()) {
            let mut row: Vec<String> = x.iter().map(|v| fmt_sig(*v)).collect();
            row.push(fmt_sig(*lp));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a chain written by [`Chain::write_csv`]; every row is retained.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let dim = header.len().checked_sub(1).ok_or_else(|| Error::Data("empty chain header".into()))?;
        let ambiguity = header.iter().any(|h| h == "theta0");
        let k = if ambiguity { (dim + 2) / 2 } else { dim };
        let layout = ParamLayout::new(k, ambiguity)?;
        if layout.names() != header[..dim] {
            return Err(Error::Data(format!("unrecognized chain header {header:?}")));
        }
        let mut draws = Vec::new();
        let mut lps = Vec::new();
        for row in rd.records() {
            let row = row?;
            let vals = row
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Data(format!("bad number {s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            lps.push(vals[dim]);
            draws.push(vals[..dim].to_vec());
        }
        let mut c = Chain::from_draws(layout, draws);
        c.log_posterior = lps;
        Ok(c)
    }
}

/// Posterior sampling for a binned dataset.
pub fn run_sampler(hist: &BinnedHistogram, cfg: &SamplerConfig) -> Result<Chain> {
    let layout = cfg.layout()?;
    let target = |x: &[f64]| {
        let lp = log_prior(&layout, x, &cfg.prior);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + log_likelihood(&layout, x, hist, &cfg.likelihood)
    };
    run_with_target(layout, target, cfg)
}

/// The sampler loop for an arbitrary log target over `layout`, started from a
/// prior draw at which the target is finite.
pub fn run_with_target<F: FnMut(&[f64]) -> f64>(layout: ParamLayout, mut target: F, cfg: &SamplerConfig) -> Result<Chain> {
    cfg.validate()?;
    if layout.dim() != cfg.layout()?.dim() {
        return Err(arg("layout does not match sampler config"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = None;
    for _ in 0..cfg.init_max_tries {
        let x = sample_prior_unconstrained(&layout, &cfg.prior, &mut rng);
        if log_prior(&layout, &x, &cfg.prior).is_finite() {
            let lp = target(&x);
            if lp.is_finite() {
                init = Some((x, lp));
                break;
            }
        }
    }
    let (x0, lp0) = init.ok_or(Error::Initialization { tries: cfg.init_max_tries })?;
    let mut st = AmState::new(x0, lp0, cfg.am);
    let mut draws = Vec::new();
    let mut lps = Vec::new();
    let mut next_check = cfg.first_check;
    let mut p_values;
    let converged = loop {
        st.step(&mut rng, &mut target);
        if st.iteration().is_multiple_of(cfg.thinning) {
            draws.push(st.current().to_vec());
            lps.push(st.current_lp());
        }
        if st.iteration() == next_check {
            p_values = (0..layout.dim())
                .map(|j| {
                    let series: Vec<f64> = draws.iter().map(|d: &Vec<f64>| d[j]).collect();
                    geweke_with(&series, cfg.variance)
                })
                .collect::<Result<Vec<f64>>>()?;
            if p_values.iter().all(|p| *p > cfg.p_threshold) {
                break true;
            }
            if st.iteration() >= cfg.max_iter {
                break false;
            }
            next_check = (next_check + cfg.extra_iter).min(cfg.max_iter);
        }
    };
    let burn_in = draws.len() - (3 * draws.len()).div_ceil(4);
    Ok(Chain {
        layout,
        burn_in,
        draws,
        log_posterior: lps,
        accepted: st.accepted(),
        iterations: st.iteration(),
        thinning: cfg.thinning,
        p_values,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_only_recovers_crra_mean() {
        let cfg = SamplerConfig { seed: 17, ..SamplerConfig::desk() };
        let layout = cfg.layout().unwrap();
        let prior = cfg.prior;
        let chain = run_with_target(layout, |x| log_prior(&layout, x, &prior), &cfg).unwrap();
        let r = chain.retained();
        let mean = r.iter().map(|x| x[0]).sum::<f64>() / r.len() as f64;
        assert!((mean - 0.45).abs() < 0.02, "mean {mean}");
        assert!(chain.iterations >= cfg.first_check);
    }

    #[test]
    fn misspecified_never_proposes_ambiguity() {
        let cfg = SamplerConfig { ambiguity_enabled: false, first_check: 2_000, max_iter: 2_000, seed: 3, ..SamplerConfig::desk() };
        let layout = cfg.layout().unwrap();
        let prior = cfg.prior;
        let chain = run_with_target(layout, |x| log_prior(&layout, x, &prior), &cfg).unwrap();
        assert!(chain.draws.iter().all(|d| d.len() == 6));
        assert!(chain.structures().unwrap().iter().all(|s| s.distortion.is_identity()));
    }

    #[test]
    fn hard_cap_flags_non_convergence() {
        let cfg = SamplerConfig { first_check: 200, max_iter: 400, extra_iter: 100, thinning: 1, seed: 1, ..SamplerConfig::desk() };
        let layout = cfg.layout().unwrap();
        // A target the chain cannot settle in: drifts with every call.
        let mut calls = 0.0;
        let chain = run_with_target(
            layout,
            |x| {
                calls += 1.0;
                log_prior(&layout, x, &PriorConfig::default()) + 1e-3 * calls * x[0]
            },
            &cfg,
        )
        .unwrap();
        assert!(chain.iterations <= 400);
        if !chain.converged {
            assert_eq!(chain.iterations, 400);
        }
    }

    #[test]
    fn retained_window_and_csv() {
        let layout = ParamLayout::new(4, true).unwrap();
        let draws: Vec<Vec<f64>> = (0..8).map(|i| vec![0.1 * i as f64, 0.25, 0.25, 0.25, -0.01, 0.5]).collect();
        let mut c = Chain::from_draws(layout, draws);
        assert_eq!(c.retained().len(), 8);
        c.burn_in = 2;
        assert_eq!(c.retained().len(), 6);
        assert_eq!(c.retained()[0][0], 0.2);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"crra,f1,f2,f3,theta0,d2,log_posterior\n"));
        let back = Chain::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.retained(), c.retained());
        let one = Chain::from_draws(layout, vec![vec![0.3, 0.25, 0.25, 0.25, 0.1, 0.5]]);
        assert_eq!(one.retained().len(), 1);
    }

    #[test]
    fn initialization_failure() {
        let cfg = SamplerConfig { init_max_tries: 5, ..SamplerConfig::desk() };
        let layout = cfg.layout().unwrap();
        let err = run_with_target(layout, |_| f64::NEG_INFINITY, &cfg).unwrap_err();
        assert_eq!(err.kind(), "initialization");
    }

    #[test]
    fn config_json_round_trip() {
        let c = SamplerConfig::paper();
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SamplerConfig>(&j).unwrap(), c);
        assert!(serde_json::from_str::<SamplerConfig>(r#"{"bogus": 1}"#).is_err());
        let partial: SamplerConfig = serde_json::from_str(r#"{"k": 5}"#).unwrap();
        assert_eq!(partial.k, 5);
        assert_eq!(partial.first_check, 20_000);
    }
}
