//! Repeated-sampling experiments: correct, redundant and misspecified
//! estimators against known data-generating structures.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{fmt_sig, sample_dataset, BidDataset, DgpSpec};
use crate::decision::{ambiguity_neutral_prob, bayes_action, revenue_curve, RevenueCurve};
use crate::error::{arg, Error, Result};
use crate::inference::{make_bins, run_sampler, SamplerConfig};
use crate::model::Structure;
use crate::quadrature::simpson_uniform;

/// Points of the fixed grid on which estimated functions are compared.
pub const METRIC_GRID: usize = 257;
/// Reserve-price grid spacing.
pub const RESERVE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Ambiguous data, ambiguity allowed.
    Correct,
    /// Ambiguity-free data, ambiguity allowed.
    Redundant,
    /// Ambiguous data, ambiguity ruled out.
    Misspecified,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Correct, Variant::Redundant, Variant::Misspecified];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Correct => "correct",
            Variant::Redundant => "redundant",
            Variant::Misspecified => "misspecified",
        }
    }

    pub fn ambiguity_enabled(self) -> bool {
        self != Variant::Misspecified
    }

    /// Data-generating process for replication seed `seed`.
    pub fn dgp(self, design: BTreeMap<usize, usize>, seed: u64) -> DgpSpec {
        let base = match self {
            Variant::Redundant => DgpSpec::redundant(seed),
            _ => DgpSpec::baseline(seed),
        };
        DgpSpec { design, ..base }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn sampler(self) -> SamplerConfig {
        match self {
            Scale::Desk => SamplerConfig::desk(),
            Scale::Paper => SamplerConfig::paper(),
        }
    }

    pub fn replications(self) -> usize {
        match self {
            Scale::Desk => 50,
            Scale::Paper => 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub variant: Variant,
    /// Bidder counts; bids are split equally across them.
    pub ns: Vec<usize>,
    pub total_bids: usize,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub scale: Scale,
    /// Overrides the scale's sampler settings (seed and ambiguity switch are
    /// always set per replication).
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
}

impl ExperimentSpec {
    pub fn new(variant: Variant, ns: Vec<usize>, total_bids: usize, replications: usize, base_seed: u64) -> Self {
        Self { variant, ns, total_bids, replications, base_seed, scale: Scale::Desk, sampler: None }
    }

    pub fn design(&self) -> Result<BTreeMap<usize, usize>> {
        DgpSpec::equal_design(&self.ns, self.total_bids)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(arg("replications must be at least 1"));
        }
        if self.ns.iter().any(|n| *n < 2) {
            return Err(arg("bidder counts must be at least 2"));
        }
        self.design()?;
        self.sampler_config(0).validate()
    }

    /// Sampler settings for one replication.
    pub fn sampler_config(&self, seed: u64) -> SamplerConfig {
        let base = self.sampler.clone().unwrap_or_else(|| self.scale.sampler());
        SamplerConfig { seed, ambiguity_enabled: self.variant.ambiguity_enabled(), ..base }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for `(base, replication, salt)`.
pub fn derive_seed(base: u64, replication: u64, salt: u64) -> u64 {
    mix(mix(mix(base) ^ replication) ^ salt)
}

const DATA_SALT: u64 = 0x6461_7461;
const CHAIN_SALT: u64 = 0x6368_6169;

pub fn metric_grid() -> Vec<f64> {
    (0..METRIC_GRID).map(|i| i as f64 / (METRIC_GRID - 1) as f64).collect()
}

/// Squared L2 distance of two functions sampled on [`metric_grid`].
pub fn ise(a: &[f64], b: &[f64]) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect();
    simpson_uniform(&sq, 0.0, 1.0)
}

/// Mean integrated squared error of sampled curves against `truth`.
pub fn mise(curves: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if curves.is_empty() {
        return Err(arg("mise needs at least one curve"));
    }
    Ok(neumaier(curves.iter().map(|c| ise(c, truth))) / curves.len() as f64)
}

/// Compensated sum.
fn neumaier(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// What an estimator reports for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Valuation density on [`metric_grid`].
    pub density: Vec<f64>,
    /// Distortion on [`metric_grid`].
    pub distortion: Vec<f64>,
    pub crra: f64,
    /// Chosen reserve for two bidders.
    pub reserve_n2: f64,
    pub neutral_prob: f64,
    pub converged: bool,
}

pub struct ReplicationInput<'a> {
    pub data: &'a BidDataset,
    pub truth: &'a Structure,
    pub sampler: SamplerConfig,
}

pub trait Estimator: Sync {
    fn estimate(&self, input: &ReplicationInput<'_>) -> Result<Estimate>;
}

/// Posterior estimator: adaptive Metropolis chain, predictive curves,
/// posterior-mean CRRA and Bayes-action reserve.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bayes;

impl Estimator for Bayes {
    fn estimate(&self, input: &ReplicationInput<'_>) -> Result<Estimate> {
        let hist = make_bins(input.data, input.sampler.bins_per_n)?;
        let chain = run_sampler(&hist, &input.sampler)?;
        let structures = chain.structures()?;
        let grid = metric_grid();
        let m = structures.len() as f64;
        let density = grid.iter().map(|&v| structures.iter().map(|s| s.valuation.pdf(v)).sum::<f64>() / m).collect();
        let distortion = grid.iter().map(|&g| structures.iter().map(|s| s.distortion.eval(g)).sum::<f64>() / m).collect();
        let crra = structures.iter().map(|s| s.crra).sum::<f64>() / m;
        Ok(Estimate {
            density,
            distortion,
            crra,
            reserve_n2: bayes_action(&chain, 2, RESERVE_STEP)?.rho,
            neutral_prob: ambiguity_neutral_prob(&chain)?,
            converged: chain.converged,
        })
    }
}

/// Returns the data-generating structure itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle;

impl Estimator for Oracle {
    fn estimate(&self, input: &ReplicationInput<'_>) -> Result<Estimate> {
        let s = input.truth;
        let grid = metric_grid();
        Ok(Estimate {
            density: grid.iter().map(|&v| s.valuation.pdf(v)).collect(),
            distortion: grid.iter().map(|&g| s.distortion.eval(g)).collect(),
            crra: s.crra,
            reserve_n2: revenue_curve(s, 2, RESERVE_STEP)?.argmax().0,
            neutral_prob: if s.distortion.is_identity() { 1.0 } else { 0.0 },
            converged: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub data_seed: u64,
    pub chain_seed: u64,
    pub converged: bool,
    pub ise_f: f64,
    pub ise_d: f64,
    pub se_u: f64,
    pub reserve_n2: f64,
    pub loss_n2: f64,
    pub neutral_prob: f64,
}

/// One row of the metrics table; averages over converged replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub variant: Variant,
    pub total_bids: usize,
    pub mise_f: f64,
    pub mise_d: f64,
    pub mse_u: f64,
    pub loss_n2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub metrics: MetricsRow,
    pub converged: usize,
    /// Replications that hit the iteration cap; excluded from `metrics`.
    pub excluded: Vec<usize>,
    /// True-structure optimal reserve and revenue for two bidders.
    pub true_reserve_n2: f64,
    pub true_revenue_n2: f64,
    pub replications: Vec<ReplicationRecord>,
}

/// Percentage revenue loss from using `rho_b` instead of the best reserve.
pub fn revenue_loss(truth: &RevenueCurve, rho_b: f64) -> Result<f64> {
    let (_, best) = truth.argmax();
    let i = truth
        .grid
        .iter()
        .position(|g| (g - rho_b).abs() < 1e-9)
        .ok_or_else(|| arg(format!("reserve {rho_b} is not on the revenue grid")))?;
    Ok((best - truth.values[i]) / best * 100.0)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_experiment_with(spec, &Bayes)
}

pub fn run_experiment_with<E: Estimator>(spec: &ExperimentSpec, estimator: &E) -> Result<ExperimentReport> {
    spec.validate()?;
    let design = spec.design()?;
    let truth = spec.variant.dgp(design.clone(), 0).structure()?;
    let truth_curve = revenue_curve(&truth, 2, RESERVE_STEP)?;
    let (true_reserve_n2, true_revenue_n2) = truth_curve.argmax();
    let grid = metric_grid();
    let f0: Vec<f64> = grid.iter().map(|&v| truth.valuation.pdf(v)).collect();
    let d0: Vec<f64> = grid.iter().map(|&g| truth.distortion.eval(g)).collect();

    let records = (0..spec.replications)
        .into_par_iter()
        .map(|m| {
            // Data seeds ignore the variant so variants sharing a DGP see the same datasets.
            let data_seed = derive_seed(spec.base_seed, m as u64, DATA_SALT ^ spec.total_bids as u64);
            let chain_seed = derive_seed(spec.base_seed, m as u64, CHAIN_SALT);
            let data = sample_dataset(&spec.variant.dgp(design.clone(), data_seed))?;
            let input = ReplicationInput { data: &data, truth: &truth, sampler: spec.sampler_config(chain_seed) };
            let est = match estimator.estimate(&input) {
                Err(Error::NotConverged(_)) => None,
                other => Some(other?),
            };
            Ok(match est {
                Some(e) => ReplicationRecord {
                    replication: m,
                    data_seed,
                    chain_seed,
                    converged: e.converged,
                    ise_f: ise(&e.density, &f0),
                    ise_d: ise(&e.distortion, &d0),
                    se_u: (e.crra - truth.crra).powi(2),
                    reserve_n2: e.reserve_n2,
                    loss_n2: revenue_loss(&truth_curve, e.reserve_n2)?,
                    neutral_prob: e.neutral_prob,
                },
                None => ReplicationRecord {
                    replication: m,
                    data_seed,
                    chain_seed,
                    converged: false,
                    ise_f: f64::NAN,
                    ise_d: f64::NAN,
                    se_u: f64::NAN,
                    reserve_n2: f64::NAN,
                    loss_n2: f64::NAN,
                    neutral_prob: f64::NAN,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let kept: Vec<&ReplicationRecord> = records.iter().filter(|r| r.converged).collect();
    let excluded = records.iter().filter(|r| !r.converged).map(|r| r.replication).collect();
    let avg = |f: fn(&ReplicationRecord) -> f64| {
        if kept.is_empty() {
            f64::NAN
        } else {
            neumaier(kept.iter().map(|r| f(r))) / kept.len() as f64
        }
    };
    let metrics = MetricsRow {
        variant: spec.variant,
        total_bids: spec.total_bids,
        mise_f: avg(|r| r.ise_f),
        mise_d: avg(|r| r.ise_d),
        mse_u: avg(|r| r.se_u),
        loss_n2: avg(|r| r.loss_n2),
    };
    Ok(ExperimentReport {
        spec: spec.clone(),
        metrics,
        converged: kept.len(),
        excluded,
        true_reserve_n2,
        true_revenue_n2,
        replications: records,
    })
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["variant", "total_bids", "mise_f", "mise_d", "mse_u", "loss_n2"])?;
    for r in rows {
        wr.write_record([
            r.variant.as_str().to_string(),
            r.total_bids.to_string(),
            fmt_sig(r.mise_f),
            fmt_sig(r.mise_d),
            fmt_sig(r.mse_u),
            fmt_sig(r.loss_n2),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Grid of experiments: every variant crossed with every sample size.
pub fn experiment_grid(
    variants: &[Variant],
    ns: &[usize],
    totals: &[usize],
    replications: usize,
    base_seed: u64,
    scale: Scale,
) -> Vec<ExperimentSpec> {
    variants
        .iter()
        .flat_map(|&v| {
            totals.iter().map(move |&t| ExperimentSpec {
                scale,
                ..ExperimentSpec::new(v, ns.to_vec(), t, replications, base_seed)
            })
        })
        .collect()
}
