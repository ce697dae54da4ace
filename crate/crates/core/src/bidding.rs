//! Equilibrium bid strategies and their inverses.
//!
//! With `w(v) = v - beta(v)` and knots `v_0 = rho < ... < v_m = 1`,
//!
//! ```text
//! w(v_{i+1}) = w(v_i) * (F*(v_i) / F*(v_{i+1}))^alpha
//!            + int_{v_i}^{v_{i+1}} (F*(t) / F*(v_{i+1}))^alpha dt
//! ```
//!
//! so each knot costs one panel integral whose integrand is bounded by 1.
//! The integrand is evaluated in log space. `ln F*` at the K15 nodes does not
//! depend on `n`, so [`bid_curves`] shares it across bidder counts.

use crate::error::{Error, Result};
use crate::model::Structure;
use crate::pchip::Pchip;
use crate::quadrature::{gk_apply, gk_nodes, integrate, refine, GK_POINTS};

/// Knot count used when none is given.
pub const DEFAULT_GRID: usize = 257;
/// Per-panel absolute quadrature tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

const SUPPORT_SLACK: f64 = 1e-12;

/// Chebyshev–Lobatto points on [lo, hi], endpoints included exactly.
pub fn chebyshev_knots(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..m)
        .map(|i| {
            let c = (std::f64::consts::PI * i as f64 / (m - 1) as f64).cos();
            lo + (hi - lo) * 0.5 * (1.0 - c)
        })
        .collect();
    k[0] = lo;
    k[m - 1] = hi;
    k
}

/// A bid function tabulated on a knot grid, with monotone Hermite
/// interpolation in both directions.
#[derive(Debug, Clone)]
pub struct BidCurve {
    n: usize,
    reserve: f64,
    knots_v: Vec<f64>,
    knots_b: Vec<f64>,
    slopes: Vec<f64>,
    fwd: Pchip,
    inv: Option<Pchip>,
}

impl BidCurve {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn knots_v(&self) -> &[f64] {
        &self.knots_v
    }

    pub fn knots_b(&self) -> &[f64] {
        &self.knots_b
    }

    /// Exact `beta'` at the knots (from the first-order condition).
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Bid of a bidder with value `v`, clamped to [reserve, 1]. Values below the
    /// reserve do not bid; callers must handle them.
    pub fn bid_at(&self, v: f64) -> f64 {
        self.fwd.eval(v)
    }

    pub fn slope_at(&self, v: f64) -> f64 {
        self.fwd.deriv(v)
    }

    pub fn max_bid(&self) -> f64 {
        self.knots_b[self.knots_b.len() - 1]
    }

    pub fn min_bid(&self) -> f64 {
        self.knots_b[0]
    }

    /// Value whose bid is `b`.
    pub fn inverse(&self, b: f64) -> Result<f64> {
        let (lo, hi) = (self.min_bid(), self.max_bid());
        if !(b >= lo - SUPPORT_SLACK && b <= hi + SUPPORT_SLACK) {
            return Err(Error::OutOfSupport { bid: b, lo, hi });
        }
        Ok(self.inverse_clamped(b))
    }

    /// Like [`BidCurve::inverse`] but maps bids below the support to the
    /// reserve and above it to 1.
    pub fn inverse_clamped(&self, b: f64) -> f64 {
        match &self.inv {
            Some(p) => p.eval(b),
            None => {
                // Flat stretch in the tabulated bids: bisection on the forward map.
                let (mut lo, mut hi) = (self.reserve, 1.0);
                if b <= self.min_bid() {
                    return lo;
                }
                if b >= self.max_bid() {
                    return hi;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.bid_at(mid) < b {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }
}

pub fn inverse_bid(c: &BidCurve, b: f64) -> Result<f64> {
    c.inverse(b)
}

/// Equilibrium bid curve for `n` bidders and reserve `reserve` on `grid_size`
/// Chebyshev knots, tolerance [`DEFAULT_TOL`].
pub fn bid_strategy(s: &Structure, n: usize, reserve: f64, grid_size: usize) -> Result<BidCurve> {
    Ok(bid_curves(s, &[n], reserve, grid_size, DEFAULT_TOL)?.pop().expect("one curve"))
}

/// Highest equilibrium bid `beta_n(1)` without reserve.
pub fn max_bid(s: &Structure, n: usize) -> Result<f64> {
    Ok(bid_strategy(s, n, 0.0, DEFAULT_GRID)?.max_bid())
}

/// Curves for several bidder counts sharing one set of `ln F*` evaluations.
pub fn bid_curves(
    s: &Structure,
    ns: &[usize],
    reserve: f64,
    grid_size: usize,
    tol: f64,
) -> Result<Vec<BidCurve>> {
    check_args(ns, reserve, grid_size)?;
    s.validate()?;
    let cache = PanelCache::new(s, chebyshev_knots(reserve, 1.0, grid_size));
    ns.iter().map(|&n| cache.curve(n, tol)).collect()
}

/// [`bid_curves`] without structure validation, for callers (the likelihood)
/// that have already enforced the shape constraints.
pub(crate) fn bid_curves_unchecked(s: &Structure, ns: &[usize], grid_size: usize, tol: f64) -> Result<Vec<BidCurve>> {
    let cache = PanelCache::new(s, chebyshev_knots(0.0, 1.0, grid_size));
    ns.iter().map(|&n| cache.curve(n, tol)).collect()
}

fn check_args(ns: &[usize], reserve: f64, grid_size: usize) -> Result<()> {
    if ns.iter().any(|&n| n < 2) {
        return Err(crate::error::arg("bidder count must be at least 2"));
    }
    if !(0.0..1.0).contains(&reserve) {
        return Err(crate::error::arg(format!("reserve {reserve} outside [0, 1)")));
    }
    if grid_size < 16 {
        return Err(crate::error::arg("bid grid needs at least 16 knots"));
    }
    Ok(())
}

/// Reference bid at a single value by one adaptive quadrature over [reserve, v].
pub fn bid_direct(s: &Structure, n: usize, reserve: f64, v: f64, tol: f64) -> f64 {
    if v <= reserve {
        return v;
    }
    let alpha = s.alpha(n);
    let lv = s.ln_fstar(v);
    if lv == f64::NEG_INFINITY {
        return v;
    }
    let q = integrate(|t| (alpha * (s.ln_fstar(t) - lv)).exp(), reserve, v, tol);
    v - q.value.clamp(0.0, v - reserve)
}

struct PanelCache<'a> {
    s: &'a Structure,
    knots: Vec<f64>,
    knot_l: Vec<f64>,
    knot_hazard: Vec<f64>,
    node_l: Vec<[f64; GK_POINTS]>,
    /// `lim t f*(t)/F*(t)` at the lower end when `F*(reserve) = 0`.
    tail_power: f64,
}

impl<'a> PanelCache<'a> {
    fn new(s: &'a Structure, knots: Vec<f64>) -> Self {
        let knot_l: Vec<f64> = knots.iter().map(|&v| s.ln_fstar(v)).collect();
        let knot_hazard: Vec<f64> = knots
            .iter()
            .zip(&knot_l)
            .map(|(&v, &l)| if l == f64::NEG_INFINITY { f64::NAN } else { s.fstar_pdf(v) / l.exp() })
            .collect();
        let node_l = knots
            .windows(2)
            .map(|w| {
                let mut out = gk_nodes(w[0], w[1]);
                for x in out.iter_mut() {
                    *x = s.ln_fstar(*x);
                }
                out
            })
            .collect();
        let tail_power = if knot_l[0] == f64::NEG_INFINITY {
            let t = knots[0] + (knots[1] - knots[0]) * 1e-6;
            let p = (t - knots[0]) * s.fstar_pdf(t) / s.fstar(t);
            if p.is_finite() {
                p
            } else {
                1.0
            }
        } else {
            0.0
        };
        Self { s, knots, knot_l, knot_hazard, node_l, tail_power }
    }

    fn curve(&self, n: usize, tol: f64) -> Result<BidCurve> {
        let alpha = self.s.alpha(n);
        let m = self.knots.len();
        let mut w = vec![0.0; m];
        for i in 0..m - 1 {
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            let lb = self.knot_l[i + 1];
            if lb == f64::NEG_INFINITY {
                continue;
            }
            let mut vals = [0.0; GK_POINTS];
            for (v, l) in vals.iter_mut().zip(&self.node_l[i]) {
                *v = (alpha * (l - lb)).exp();
            }
            let first = gk_apply(a, b, &vals);
            let panel = if first.1 <= tol {
                first.0
            } else {
                let s = self.s;
                refine(&mut |t| (alpha * (s.ln_fstar(t) - lb)).exp(), a, b, first, tol).value
            };
            let scale = (alpha * (self.knot_l[i] - lb)).exp();
            w[i + 1] = (w[i] * scale + panel).clamp(0.0, b - self.knots[0]);
        }
        let knots_b: Vec<f64> = self.knots.iter().zip(&w).map(|(v, w)| v - w).collect();
        let slopes: Vec<f64> = (0..m)
            .map(|i| {
                if i == 0 {
                    let ap = alpha * self.tail_power;
                    ap / (ap + 1.0)
                } else if self.knot_hazard[i].is_nan() {
                    1.0
                } else {
                    alpha * self.knot_hazard[i] * w[i]
                }
            })
            .collect();
        let fwd = Pchip::with_slopes(self.knots.clone(), knots_b.clone(), slopes.clone())?;
        let inv = if knots_b.windows(2).all(|p| p[1] > p[0]) {
            let inv_slopes = slopes.iter().map(|d| if *d > 0.0 { 1.0 / d } else { f64::INFINITY }).collect();
            Some(Pchip::with_slopes(knots_b.clone(), self.knots.clone(), inv_slopes)?)
        } else {
            None
        };
        Ok(BidCurve { n, reserve: self.knots[0], knots_v: self.knots.clone(), knots_b, slopes, fwd, inv })
    }
}
