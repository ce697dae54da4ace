//! Separated partial-means test: mean of block 2 against mean of block 4 of a
//! series cut into four equal blocks.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{arg, Result};

/// How the variance of a block mean is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMethod {
    /// Bartlett-kernel spectral density at frequency zero.
    #[default]
    NeweyWest,
    /// Plain sample variance.
    Iid,
}

pub fn geweke_partial_means(x: &[f64]) -> Result<f64> {
    geweke_with(x, VarianceMethod::NeweyWest)
}

/// Two-sided p-value. Blocks are aligned to the end of the series when its
/// length is not a multiple of 4.
pub fn geweke_with(x: &[f64], method: VarianceMethod) -> Result<f64> {
    if x.len() < 8 {
        return Err(arg("partial-means test needs at least 8 points"));
    }
    let l = x.len() / 4;
    let off = x.len() - 4 * l;
    let b2 = &x[off + l..off + 2 * l];
    let b4 = &x[off + 3 * l..];
    let (m2, v2) = block_moments(b2, method);
    let (m4, v4) = block_moments(b4, method);
    if v2 <= 0.0 || v4 <= 0.0 {
        return Ok(if (m2 - m4).abs() <= 1e-14 { 1.0 } else { 0.0 });
    }
    let z = (m2 - m4) / (v2 / l as f64 + v4 / l as f64).sqrt();
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2))
}

/// Mean and long-run variance of one block.
fn block_moments(b: &[f64], method: VarianceMethod) -> (f64, f64) {
    let n = b.len() as f64;
    let mean = b.iter().sum::<f64>() / n;
    let acov = |lag: usize| b.iter().zip(&b[lag..]).map(|(a, c)| (a - mean) * (c - mean)).sum::<f64>() / n;
    let g0 = acov(0);
    if g0 <= 0.0 {
        return (mean, 0.0);
    }
    match method {
        VarianceMethod::Iid => (mean, g0),
        VarianceMethod::NeweyWest => {
            let bw = (4.0 * (n / 100.0).powf(2.0 / 9.0)).floor() as usize;
            let bw = bw.min(b.len() - 1);
            let s = (1..=bw).fold(g0, |acc, j| acc + 2.0 * (1.0 - j as f64 / (bw as f64 + 1.0)) * acov(j));
            (mean, s.max(0.0))
        }
    }
}
