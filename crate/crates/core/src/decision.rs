//! Posterior predictive objects, expected revenue, and the Bayes-action
//! reserve price.
//!
//! Revenue: the highest-value bidder wins and pays her bid, values below the
//! reserve do not bid, outcomes follow `F0` while bids follow `F* = D o F0`.
//! With `beta0` the bid without reserve and `w0 = v - beta0`,
//!
//! ```text
//! beta(v; rho) = beta0(v) + w0(rho) (F*(rho) / F*(v))^alpha
//! Pi(rho)      = n int_rho^1 beta(v; rho) F0^{n-1} f0 dv
//! ```
//!
//! which lets every reserve on a grid reuse one no-reserve curve.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bidding::{bid_strategy, DEFAULT_GRID};
use crate::data::{fmt_sig, sample_dataset, summary_stats, DgpSpec};
use crate::error::{arg, Error, Result};
use crate::inference::prior::sample_prior;
use crate::inference::{Chain, ParamLayout, PriorConfig};
use crate::model::Structure;
use crate::quadrature::integrate;

const REVENUE_TOL: f64 = 1e-11;

/// Pointwise posterior mean with 2.5% and 97.5% percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Linear-interpolation percentile of a sample (`p` in [0, 1]).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    v[i] + (h - i as f64) * (v[j] - v[i])
}

fn band_over<F: Fn(&Structure, f64) -> f64 + Sync>(structures: &[Structure], grid: &[f64], f: F) -> Band {
    let mut mean = Vec::with_capacity(grid.len());
    let mut lo = Vec::with_capacity(grid.len());
    let mut hi = Vec::with_capacity(grid.len());
    for &x in grid {
        let vals: Vec<f64> = structures.iter().map(|s| f(s, x)).collect();
        mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
        lo.push(percentile(&vals, 0.025));
        hi.push(percentile(&vals, 0.975));
    }
    Band { grid: grid.to_vec(), mean, lo, hi }
}

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Posterior mean of the valuation density at `v`.
pub fn predictive_density(chain: &Chain, v: f64) -> Result<f64> {
    let s = chain.structures()?;
    Ok(s.iter().map(|x| x.valuation.pdf(v)).sum::<f64>() / s.len() as f64)
}

/// Posterior mean of `D(gamma)`.
pub fn predictive_d(chain: &Chain, gamma: f64) -> Result<f64> {
    let s = chain.structures()?;
    Ok(s.iter().map(|x| x.distortion.eval(gamma)).sum::<f64>() / s.len() as f64)
}

pub fn predictive_density_band(chain: &Chain, points: usize) -> Result<Band> {
    Ok(band_over(&chain.structures()?, &unit_grid(points), |s, v| s.valuation.pdf(v)))
}

pub fn predictive_d_band(chain: &Chain, points: usize) -> Result<Band> {
    Ok(band_over(&chain.structures()?, &unit_grid(points), |s, g| s.distortion.eval(g)))
}

/// Share of retained draws with `theta0 <= 0`. A chain without a distortion
/// block is ambiguity neutral by construction and gives 1.
pub fn ambiguity_neutral_prob(chain: &Chain) -> Result<f64> {
    let r = chain.retained();
    if r.is_empty() {
        return Err(Error::EmptyChain);
    }
    let Some(i) = chain.layout.theta0_index() else { return Ok(1.0) };
    Ok(r.iter().filter(|x| x[i] <= 0.0).count() as f64 / r.len() as f64)
}

/// Expected revenue on a reserve grid `0, step, 2 step, ... < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueCurve {
    pub n: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl RevenueCurve {
    /// Grid argmax, ties to the smallest reserve.
    pub fn argmax(&self) -> (f64, f64) {
        argmax_first(&self.grid, &self.values)
    }
}

fn argmax_first(grid: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    (grid[best], values[best])
}

pub fn reserve_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(arg(format!("grid step {step} outside (0, 1)")));
    }
    let m = (1.0 / step - 1e-9).floor() as usize + 1;
    Ok((0..m).map(|i| i as f64 * step).filter(|r| *r < 1.0).collect())
}

/// Revenue at each reserve of the grid with spacing `grid_step`.
pub fn revenue_curve(s: &Structure, n: usize, grid_step: f64) -> Result<RevenueCurve> {
    let grid = reserve_grid(grid_step)?;
    let values = revenue_at(s, n, &grid)?;
    Ok(RevenueCurve { n, grid, values })
}

/// Revenue at arbitrary increasing reserves in [0, 1).
pub fn revenue_at(s: &Structure, n: usize, reserves: &[f64]) -> Result<Vec<f64>> {
    if reserves.windows(2).any(|w| !(w[1] > w[0])) || reserves.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(arg("reserves must be increasing and inside [0, 1)"));
    }
    let curve0 = bid_strategy(s, n, 0.0, DEFAULT_GRID)?;
    let alpha = s.alpha(n);
    let nf = n as f64;
    let win = |v: f64| nf * s.valuation.cdf(v).powi(n as i32 - 1) * s.valuation.pdf(v);
    let mut pts = reserves.to_vec();
    pts.push(1.0);
    let m = reserves.len();
    let mut t1 = vec![0.0; m + 1];
    let mut a = vec![0.0; m + 1];
    for i in (0..m).rev() {
        let (lo, hi) = (pts[i], pts[i + 1]);
        let li = s.ln_fstar(lo);
        let panel_t = integrate(|v| curve0.bid_at(v) * win(v), lo, hi, REVENUE_TOL).value;
        let panel_a = if li == f64::NEG_INFINITY {
            0.0
        } else {
            integrate(|v| (alpha * (li - s.ln_fstar(v))).exp() * win(v), lo, hi, REVENUE_TOL).value
        };
        let carry = (alpha * (li - s.ln_fstar(hi))).exp();
        t1[i] = t1[i + 1] + panel_t;
        a[i] = panel_a + if carry.is_finite() { carry * a[i + 1] } else { 0.0 };
    }
    Ok((0..m).map(|i| t1[i] + (reserves[i] - curve0.bid_at(reserves[i])) * a[i]).collect())
}

/// Reference revenue at one reserve: solve the reserve-price bid curve, then
/// integrate the winner's payment directly.
pub fn revenue_direct(s: &Structure, n: usize, reserve: f64) -> Result<f64> {
    let c = bid_strategy(s, n, reserve, DEFAULT_GRID)?;
    let nf = n as f64;
    let q = integrate(
        |v| c.bid_at(v) * nf * s.valuation.cdf(v).powi(n as i32 - 1) * s.valuation.pdf(v),
        reserve,
        1.0,
        REVENUE_TOL,
    );
    Ok(q.value)
}

/// Bayes-action reserve for `n` bidders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesAction {
    pub n: usize,
    pub rho: f64,
    /// Predictive revenue at `rho`.
    pub revenue: f64,
    /// 2.5% and 97.5% percentiles of per-draw revenue at `rho`.
    pub lo: f64,
    pub hi: f64,
    pub curve: Band,
}

impl BayesAction {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["rho", "revenue", "lo", "hi"])?;
        let c = &self.curve;
        for i in 0..c.grid.len() {
            wr.write_record([fmt_sig(c.grid[i]), fmt_sig(c.mean[i]), fmt_sig(c.lo[i]), fmt_sig(c.hi[i])])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Bayes action from per-draw revenue curves on a common grid.
pub fn bayes_action_from_curves(curves: &[RevenueCurve]) -> Result<BayesAction> {
    let first = curves.first().ok_or(Error::EmptyChain)?;
    let grid = first.grid.clone();
    let m = curves.len() as f64;
    let mut mean = vec![0.0; grid.len()];
    let mut lo = Vec::with_capacity(grid.len());
    let mut hi = Vec::with_capacity(grid.len());
    for (j, slot) in mean.iter_mut().enumerate() {
        let vals: Vec<f64> = curves.iter().map(|c| c.values[j]).collect();
        *slot = vals.iter().sum::<f64>() / m;
        lo.push(percentile(&vals, 0.025));
        hi.push(percentile(&vals, 0.975));
    }
    let (rho, revenue) = argmax_first(&grid, &mean);
    let at = grid.iter().position(|g| *g == rho).expect("argmax on grid");
    Ok(BayesAction {
        n: first.n,
        rho,
        revenue,
        lo: lo[at],
        hi: hi[at],
        curve: Band { grid, mean, lo, hi },
    })
}

pub fn per_draw_revenue(structures: &[Structure], n: usize, grid_step: f64) -> Result<Vec<RevenueCurve>> {
    structures.par_iter().map(|s| revenue_curve(s, n, grid_step)).collect()
}

pub fn bayes_action(chain: &Chain, n: usize, grid_step: f64) -> Result<BayesAction> {
    bayes_action_from_curves(&per_draw_revenue(&chain.structures()?, n, grid_step)?)
}

/// Where predictive-check parameters come from.
#[derive(Debug, Clone)]
pub enum DrawSource {
    Prior { layout: ParamLayout, prior: PriorConfig },
    /// Cycled through in order.
    Structures(Vec<Structure>),
}

/// One simulated dataset's per-`n` bid statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub rep: usize,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
}

/// Simulates `reps` datasets of `design`, each from its own parameter draw.
/// Skewness is the uncorrected standardized third moment.
pub fn predictive_check(
    source: &DrawSource,
    design: &BTreeMap<usize, usize>,
    reps: usize,
    seed: u64,
) -> Result<Vec<CheckRow>> {
    if reps == 0 {
        return Err(arg("reps must be at least 1"));
    }
    let structures: Vec<Structure> = match source {
        DrawSource::Structures(s) if s.is_empty() => return Err(Error::EmptyChain),
        DrawSource::Structures(s) => (0..reps).map(|r| s[r % s.len()].clone()).collect(),
        DrawSource::Prior { layout, prior } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..reps)
                .map(|_| {
                    let x = sample_prior(layout, prior, &mut rng, 1_000_000)?;
                    layout.structure(&x).ok_or_else(|| Error::Data("prior draw outside simplex".into()))
                })
                .collect::<Result<_>>()?
        }
    };
    let rows: Vec<Vec<CheckRow>> = structures
        .par_iter()
        .enumerate()
        .map(|(rep, s)| {
            let spec = DgpSpec {
                valuation: s.valuation.clone(),
                distortion: s.distortion.clone(),
                crra: s.crra,
                design: design.clone(),
                seed: seed.wrapping_add(rep as u64 + 1),
            };
            let d = sample_dataset(&spec)?;
            Ok(d.bids_by_n()
                .into_iter()
                .map(|(n, b)| {
                    let st = summary_stats(&b);
                    CheckRow { rep, n, mean: st.mean, sd: st.sd, skew: st.skew }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_check_csv<W: Write>(rows: &[CheckRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "mean", "sd", "skew"])?;
    for r in rows {
        wr.write_record([r.n.to_string(), fmt_sig(r.mean), fmt_sig(r.sd), fmt_sig(r.skew)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Everything reported about one posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub density: Band,
    pub distortion: Band,
    pub crra_mean: f64,
    pub crra_sd: f64,
    pub ambiguity_neutral_prob: f64,
    pub bayes_actions: Vec<BayesAction>,
    pub retained_draws: usize,
    pub acceptance_rate: f64,
    pub converged: bool,
    pub p_values: Vec<f64>,
}

/// Posterior summary with Bayes actions for each bidder count in `ns`.
pub fn summarize(chain: &Chain, ns: &[usize], grid_step: f64, points: usize) -> Result<PosteriorSummary> {
    let r = chain.retained();
    if r.is_empty() {
        return Err(Error::EmptyChain);
    }
    let m = r.len() as f64;
    let crra_mean = r.iter().map(|x| x[0]).sum::<f64>() / m;
    let crra_sd = (r.iter().map(|x| (x[0] - crra_mean).powi(2)).sum::<f64>() / m).sqrt();
    let structures = chain.structures()?;
    let bayes_actions =
        ns.iter().map(|&n| bayes_action_from_curves(&per_draw_revenue(&structures, n, grid_step)?)).collect::<Result<_>>()?;
    Ok(PosteriorSummary {
        density: band_over(&structures, &unit_grid(points), |s, v| s.valuation.pdf(v)),
        distortion: band_over(&structures, &unit_grid(points), |s, g| s.distortion.eval(g)),
        crra_mean,
        crra_sd,
        ambiguity_neutral_prob: ambiguity_neutral_prob(chain)?,
        bayes_actions,
        retained_draws: r.len(),
        acceptance_rate: chain.acceptance_rate(),
        converged: chain.converged,
        p_values: chain.p_values.clone(),
    })
}
