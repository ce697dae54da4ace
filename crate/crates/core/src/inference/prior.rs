use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::params::ParamLayout;
use crate::bernstein::{d_shape_ok, DParams, SimplexWeights};
use crate::error::{Error, Result};

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub crra_max: f64,
    /// Exponent `a` of the Dirichlet kernel `sum a ln w_j` (a Dirichlet(1 + a) prior).
    pub dirichlet_exponent: f64,
    pub theta0_lo: f64,
    pub theta0_hi: f64,
    pub shape_grid: usize,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { crra_max: 0.9, dirichlet_exponent: 0.1, theta0_lo: -0.05, theta0_hi: 0.55, shape_grid: 201 }
    }
}

fn dirichlet_kernel(free: &[f64], a: f64) -> f64 {
    match SimplexWeights::from_free(free) {
        Some(w) if w.as_slice().iter().all(|x| *x > 0.0) => a * w.as_slice().iter().map(|x| x.ln()).sum::<f64>(),
        _ => f64::NEG_INFINITY,
    }
}

/// Log prior density up to a constant; `-inf` outside the support.
pub fn log_prior(layout: &ParamLayout, x: &[f64], cfg: &PriorConfig) -> f64 {
    if x.len() != layout.dim() || x.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let crra = layout.crra(x);
    if !(0.0..=cfg.crra_max).contains(&crra) {
        return f64::NEG_INFINITY;
    }
    let mut lp = -cfg.crra_max.ln() + dirichlet_kernel(layout.f_free(x), cfg.dirichlet_exponent);
    if layout.ambiguity_enabled {
        let th = layout.theta0(x);
        if !(cfg.theta0_lo..=cfg.theta0_hi).contains(&th) {
            return f64::NEG_INFINITY;
        }
        lp += -(cfg.theta0_hi - cfg.theta0_lo).ln() + dirichlet_kernel(layout.d_free(x), cfg.dirichlet_exponent);
        if th > 0.0 && lp.is_finite() {
            let w = layout.d_weights(x).expect("kernel finite implies valid simplex");
            let d = DParams::new(th, layout.k, w).expect("valid sizes");
            if !d_shape_ok(&d, cfg.shape_grid) {
                return f64::NEG_INFINITY;
            }
        }
    }
    lp
}

fn dirichlet_free<R: Rng + ?Sized>(m: usize, shape: f64, rng: &mut R) -> Vec<f64> {
    let g = Gamma::new(shape, 1.0).expect("positive shape");
    let draws: Vec<f64> = (0..m).map(|_| g.sample(rng)).collect();
    let s: f64 = draws.iter().sum();
    draws[..m - 1].iter().map(|d| d / s).collect()
}

/// One draw from the prior before the shape indicators are applied.
pub fn sample_prior_unconstrained<R: Rng + ?Sized>(layout: &ParamLayout, cfg: &PriorConfig, rng: &mut R) -> Vec<f64> {
    let shape = 1.0 + cfg.dirichlet_exponent;
    let mut x = vec![rng.random::<f64>() * cfg.crra_max];
    x.extend(dirichlet_free(layout.k, shape, rng));
    if layout.ambiguity_enabled {
        x.push(cfg.theta0_lo + (cfg.theta0_hi - cfg.theta0_lo) * rng.random::<f64>());
        x.extend(dirichlet_free(layout.k - 2, shape, rng));
    }
    x
}

/// A prior draw by rejection on the shape indicators.
pub fn sample_prior<R: Rng + ?Sized>(
    layout: &ParamLayout,
    cfg: &PriorConfig,
    rng: &mut R,
    max_tries: usize,
) -> Result<Vec<f64>> {
    for _ in 0..max_tries {
        let x = sample_prior_unconstrained(layout, cfg, rng);
        if log_prior(layout, &x, cfg).is_finite() {
            return Ok(x);
        }
    }
    Err(Error::Initialization { tries: max_tries })
}
