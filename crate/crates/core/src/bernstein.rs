//! Bernstein-polynomial (Beta-mixture) densities and the Bernstein
//! parameterization of the quantile distortion `D`.
//!
//! Both objects are polynomials on [0, 1]; internally they are held in
//! Bernstein form and evaluated with a two-sided Horner scheme, which stays
//! stable because the basis is never expanded into monomials.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{arg, Error, Result};

/// Grid size used by [`d_shape_ok`] unless the caller overrides it.
pub const DEFAULT_SHAPE_GRID: usize = 201;

const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(arg("simplex weights must be nonempty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(arg("simplex weights must be finite and nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(arg(format!("simplex weights sum to {s}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Completes `free` (the first m-1 coordinates) with the implied last one.
    /// Returns `None` when any coordinate would be negative.
    pub fn from_free(free: &[f64]) -> Option<Self> {
        let last = 1.0 - free.iter().sum::<f64>();
        if last < 0.0 || free.iter().any(|w| !(*w >= 0.0)) {
            return None;
        }
        let mut w = free.to_vec();
        w.push(last);
        Some(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// First m-1 coordinates.
    pub fn free(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }
}

impl<'de> Deserialize<'de> for SimplexWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SimplexWeights::new(v).map_err(serde::de::Error::custom)
    }
}

fn binomial(m: usize, i: usize) -> f64 {
    let i = i.min(m - i);
    (0..i).fold(1.0, |acc, t| acc * (m - t) as f64 / (t + 1) as f64)
}

/// Polynomial `sum_i c_i C(m, i) x^i (1-x)^(m-i)` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BernsteinPoly {
    coef: Vec<f64>,
    scaled: Vec<f64>,
}

impl BernsteinPoly {
    pub(crate) fn new(coef: Vec<f64>) -> Self {
        let m = coef.len() - 1;
        let scaled = coef.iter().enumerate().map(|(i, c)| c * binomial(m, i)).collect();
        Self { coef, scaled }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let m = self.scaled.len() - 1;
        if m == 0 {
            return self.scaled[0];
        }
        let x = x.clamp(0.0, 1.0);
        if x <= 0.5 {
            let q = 1.0 - x;
            let t = x / q;
            let acc = self.scaled.iter().rev().fold(0.0, |acc, s| acc * t + s);
            acc * q.powi(m as i32)
        } else {
            let r = (1.0 - x) / x;
            let acc = self.scaled.iter().fold(0.0, |acc, s| acc * r + s);
            acc * x.powi(m as i32)
        }
    }

    pub(crate) fn derivative(&self) -> Self {
        let m = self.coef.len() - 1;
        if m == 0 {
            return Self::new(vec![0.0]);
        }
        let c = self.coef.windows(2).map(|w| m as f64 * (w[1] - w[0])).collect();
        Self::new(c)
    }
}

/// Beta(j, k-j+1) density at `v`, i.e. the j-th Bernstein density basis of order k.
pub fn beta_basis(j: usize, k: usize, v: f64) -> Result<f64> {
    if k < 1 || j < 1 || j > k {
        return Err(arg(format!("basis index j={j} outside 1..={k}")));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(arg(format!("basis argument {v} outside [0, 1]")));
    }
    let (a, b) = ((j - 1) as f64, (k - j) as f64);
    let term = |p: f64, x: f64| if p == 0.0 { 0.0 } else { p * x.ln() };
    let lp = ln_gamma(k as f64 + 1.0) - ln_gamma(j as f64) - ln_gamma((k - j) as f64 + 1.0)
        + term(a, v)
        + term(b, 1.0 - v);
    Ok(lp.exp())
}

/// Bernstein polynomial density of order k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BpdRepr", into = "BpdRepr")]
pub struct BpdParams {
    k: usize,
    weights: SimplexWeights,
    pdf: BernsteinPoly,
    cdf: BernsteinPoly,
}

#[derive(Serialize, Deserialize)]
struct BpdRepr {
    k: usize,
    weights: SimplexWeights,
}

impl TryFrom<BpdRepr> for BpdParams {
    type Error = Error;
    fn try_from(r: BpdRepr) -> Result<Self> {
        BpdParams::new(r.weights)
            .and_then(|p| if p.k == r.k { Ok(p) } else { Err(arg("k does not match weight count")) })
    }
}

impl From<BpdParams> for BpdRepr {
    fn from(p: BpdParams) -> Self {
        BpdRepr { k: p.k, weights: p.weights }
    }
}

impl BpdParams {
    pub fn new(weights: SimplexWeights) -> Result<Self> {
        let k = weights.len();
        if k < 2 {
            return Err(arg("bernstein density needs k >= 2"));
        }
        let pdf = BernsteinPoly::new(weights.as_slice().iter().map(|w| k as f64 * w).collect());
        let mut cum = Vec::with_capacity(k + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for w in weights.as_slice() {
            acc += w;
            cum.push(acc.min(1.0));
        }
        let cdf = BernsteinPoly::new(cum);
        Ok(Self { k, weights, pdf, cdf })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(SimplexWeights::uniform(k))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &SimplexWeights {
        &self.weights
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if !(0.0..=1.0).contains(&v) {
            return 0.0;
        }
        self.pdf.eval(v).max(0.0)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        self.cdf.eval(v).clamp(0.0, 1.0)
    }

    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(arg(format!("quantile level {gamma} outside [0, 1]")));
        }
        Ok(invert_cdf(|v| self.cdf(v), |v| self.pdf(v), gamma))
    }
}

pub fn bpd_pdf(p: &BpdParams, v: f64) -> f64 {
    p.pdf(v)
}

pub fn bpd_cdf(p: &BpdParams, v: f64) -> f64 {
    p.cdf(v)
}

pub fn bpd_quantile(p: &BpdParams, gamma: f64) -> Result<f64> {
    p.quantile(gamma)
}

/// Smallest `v` in [0, 1] with `cdf(v) >= gamma`, by bracketing bisection
/// with Newton steps accepted only when they stay inside the bracket.
pub(crate) fn invert_cdf<C: Fn(f64) -> f64, P: Fn(f64) -> f64>(cdf: C, pdf: P, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    if gamma >= 1.0 {
        // cdf may reach 1 before the right end of the support.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cdf(mid) >= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return hi;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = gamma;
    for _ in 0..200 {
        let f = cdf(x) - gamma;
        if f >= 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-15 {
            break;
        }
        let d = pdf(x);
        let newton = x - f / d;
        x = if d > 0.0 && newton > lo && newton < hi && f != 0.0 { newton } else { 0.5 * (lo + hi) };
        if f == 0.0 {
            // Exact hit: keep shrinking toward the left end of a possible flat segment.
            x = 0.5 * (lo + hi);
        }
    }
    hi
}

/// Bernstein parameterization of the distortion `D`: the identity minus a
/// scaled interior Bernstein bump, switched off when `theta0 <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DRepr", into = "DRepr")]
pub struct DParams {
    theta0: f64,
    k: usize,
    inner: SimplexWeights,
    bump: BernsteinPoly,
    bump_d: BernsteinPoly,
}

#[derive(Serialize, Deserialize)]
struct DRepr {
    theta0: f64,
    k: usize,
    inner_weights: SimplexWeights,
}

impl TryFrom<DRepr> for DParams {
    type Error = Error;
    fn try_from(r: DRepr) -> Result<Self> {
        DParams::new(r.theta0, r.k, r.inner_weights)
    }
}

impl From<DParams> for DRepr {
    fn from(d: DParams) -> Self {
        DRepr { theta0: d.theta0, k: d.k, inner_weights: d.inner }
    }
}

impl DParams {
    pub fn new(theta0: f64, k: usize, inner: SimplexWeights) -> Result<Self> {
        if k < 4 {
            return Err(arg("distortion needs k >= 4"));
        }
        if inner.len() != k - 2 {
            return Err(arg(format!("distortion of order {k} needs {} inner weights", k - 2)));
        }
        if !theta0.is_finite() {
            return Err(arg("theta0 must be finite"));
        }
        let mut coef = vec![0.0; k];
        for (c, w) in coef[1..k - 1].iter_mut().zip(inner.as_slice()) {
            *c = k as f64 * w;
        }
        let bump = BernsteinPoly::new(coef);
        let bump_d = bump.derivative();
        Ok(Self { theta0, k, inner, bump, bump_d })
    }

    /// `theta0 = 0` with uniform inner weights: the identity.
    pub fn identity(k: usize) -> Result<Self> {
        Self::new(0.0, k, SimplexWeights::uniform(k - 2))
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inner_weights(&self) -> &SimplexWeights {
        &self.inner
    }

    pub fn is_identity(&self) -> bool {
        self.theta0 <= 0.0
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        if self.is_identity() {
            gamma
        } else {
            gamma - self.theta0 * self.bump.eval(gamma)
        }
    }

    pub fn deriv(&self, gamma: f64) -> f64 {
        if self.is_identity() {
            1.0
        } else {
            1.0 - self.theta0 * self.bump_d.eval(gamma)
        }
    }
}

pub fn d_eval(d: &DParams, gamma: f64) -> f64 {
    d.eval(gamma)
}

pub fn d_deriv(d: &DParams, gamma: f64) -> f64 {
    d.deriv(gamma)
}

/// `D > 0` and `D' > 0` at the interior points `i / (grid_size + 1)`.
pub fn d_shape_ok(d: &DParams, grid_size: usize) -> bool {
    if d.is_identity() {
        return true;
    }
    shape_ok_on_grid(|g| d.eval(g), |g| d.deriv(g), grid_size)
}

pub(crate) fn shape_ok_on_grid<E: Fn(f64) -> f64, P: Fn(f64) -> f64>(eval: E, deriv: P, grid_size: usize) -> bool {
    let h = 1.0 / (grid_size as f64 + 1.0);
    (1..=grid_size).all(|i| {
        let g = i as f64 * h;
        eval(g) > 0.0 && deriv(g) > 0.0
    })
}
