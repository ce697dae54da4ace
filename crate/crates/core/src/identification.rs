//! Closed-form recovery of the CRRA coefficient, `D`, and `F0` from exact bid
//! laws observed at two bidder counts.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bidding::{bid_strategy, DEFAULT_GRID};
use crate::data::fmt_sig;
use crate::error::{arg, Error, Result};
use crate::model::{Distortion, Structure, Valuation};
use crate::pchip::Pchip;
use crate::quadrature::integrate;

/// Points of the uniform grid used for `H` and the recovered objects.
pub const H_GRID: usize = 513;
const D_TOL: f64 = 1e-10;
const DEGENERATE: f64 = 1e-12;

/// Bid quantile function and bid density (at the quantile) tabulated on
/// levels `0 = gamma_0 < ... < gamma_m = 1`.
#[derive(Debug, Clone)]
pub struct BidLaw {
    n: usize,
    gammas: Vec<f64>,
    quantiles: Vec<f64>,
    densities: Vec<f64>,
    q: Pchip,
    g: Pchip,
}

impl BidLaw {
    pub fn new(n: usize, gammas: Vec<f64>, quantiles: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(arg("bid law needs n >= 2"));
        }
        let m = gammas.len();
        if m < 2 || quantiles.len() != m || densities.len() != m {
            return Err(arg("bid law columns must have equal length >= 2"));
        }
        if gammas[0] != 0.0 || gammas[m - 1] != 1.0 {
            return Err(arg("bid law levels must run from 0 to 1"));
        }
        if quantiles.windows(2).any(|w| w[1] < w[0]) {
            return Err(arg("bid quantiles must be nondecreasing"));
        }
        if densities.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(arg("bid density must be positive and finite"));
        }
        let slopes = densities.iter().map(|g| 1.0 / g).collect();
        let q = Pchip::with_slopes(gammas.clone(), quantiles.clone(), slopes)?;
        let g = Pchip::new(gammas.clone(), densities.clone())?;
        Ok(Self { n, gammas, quantiles, densities, q, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `b_gamma`.
    pub fn quantile(&self, gamma: f64) -> f64 {
        self.q.eval(gamma)
    }

    /// `g(b_gamma)`.
    pub fn density_at_level(&self, gamma: f64) -> f64 {
        self.g.eval(gamma)
    }

    /// Bid cdf `G(b)`.
    pub fn cdf(&self, b: f64) -> f64 {
        let (lo, hi) = (self.quantiles[0], self.quantiles[self.quantiles.len() - 1]);
        if b <= lo {
            return 0.0;
        }
        if b >= hi {
            return 1.0;
        }
        let (mut a, mut c) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (a + c);
            if self.quantile(mid) < b {
                a = mid;
            } else {
                c = mid;
            }
        }
        0.5 * (a + c)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["gamma", "bid_quantile", "bid_density"])?;
        for i in 0..self.gammas.len() {
            wr.write_record([fmt_sig(self.gammas[i]), fmt_sig(self.quantiles[i]), fmt_sig(self.densities[i])])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(n: usize, r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            gamma: f64,
            bid_quantile: f64,
            bid_density: f64,
        }
        let mut rd = csv::Reader::from_reader(r);
        let (mut g, mut q, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for row in rd.deserialize::<Row>() {
            let row = row?;
            g.push(row.gamma);
            q.push(row.bid_quantile);
            d.push(row.bid_density);
        }
        Self::new(n, g, q, d)
    }
}

/// Exact bid law of structure `s` with `n` bidders on `levels` uniform levels,
/// with `g = f0 / beta'` and `beta'` taken from the first-order condition.
pub fn exact_bid_law(s: &Structure, n: usize, levels: usize) -> Result<BidLaw> {
    if levels < 2 {
        return Err(arg("need at least two levels"));
    }
    let curve = bid_strategy(s, n, 0.0, DEFAULT_GRID)?;
    let alpha = s.alpha(n);
    let gammas: Vec<f64> = (0..levels).map(|i| i as f64 / (levels - 1) as f64).collect();
    let mut quantiles = Vec::with_capacity(levels);
    let mut densities = Vec::with_capacity(levels);
    for &gamma in &gammas {
        let v = s.valuation.quantile(gamma)?;
        let b = curve.bid_at(v);
        let slope = if v <= 0.0 { curve.slopes()[0] } else { alpha * s.fstar_pdf(v) / s.fstar(v) * (v - b) };
        quantiles.push(b);
        densities.push(s.valuation.pdf(v) / slope);
    }
    BidLaw::new(n, gammas, quantiles, densities)
}

/// CRRA coefficient from the bid densities at the lowest bid for `n1 < n2`.
pub fn solve_crra(n1: usize, n2: usize, g1: f64, g2: f64) -> Result<f64> {
    if n1 < 2 || n2 <= n1 {
        return Err(arg("need 2 <= n1 < n2"));
    }
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(arg("boundary densities must be positive"));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let den = (b - 1.0) * g2 - (a - 1.0) * g1;
    if den.abs() < DEGENERATE {
        return Err(Error::Degenerate("boundary densities give a zero denominator".into()));
    }
    Ok((a * (b - 1.0) * g2 - b * (a - 1.0) * g1) / den)
}

/// `H(gamma) = D(gamma) / D'(gamma)` from the two laws at level `gamma`.
pub fn recover_h(gamma: f64, law1: &BidLaw, law2: &BidLaw, theta: f64) -> Result<f64> {
    let b1 = law1.quantile(gamma);
    let b2 = law2.quantile(gamma);
    let t1 = 1.0 / ((law1.n as f64 - 1.0) * law1.density_at_level(gamma));
    let t2 = 1.0 / ((law2.n as f64 - 1.0) * law2.density_at_level(gamma));
    let bracket = t1 - t2;
    if bracket.abs() < DEGENERATE {
        return Err(Error::Degenerate(format!("laws are indistinguishable at level {gamma}")));
    }
    Ok((b2 - b1) / (1.0 - theta) / bracket)
}

/// `H` tabulated on a grid ending at 1, with the tail integrals of `1/H`
/// precomputed knot by knot.
#[derive(Debug, Clone)]
pub struct HGrid {
    gammas: Vec<f64>,
    h: Vec<f64>,
    interp: Pchip,
    tail: Vec<f64>,
}

impl HGrid {
    pub fn new(gammas: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let m = gammas.len();
        if m < 2 || gammas[m - 1] != 1.0 {
            return Err(arg("H grid must end at 1"));
        }
        let interp = Pchip::new(gammas.clone(), h.clone())?;
        let mut tail = vec![f64::NAN; m];
        tail[m - 1] = 0.0;
        for i in (0..m - 1).rev() {
            if !(h[i + 1] > 0.0) || tail[i + 1].is_nan() {
                break;
            }
            if h[i] <= 0.0 {
                tail[i] = if h[i] == 0.0 && i == 0 { f64::INFINITY } else { f64::NAN };
                break;
            }
            let mut bad = false;
            let q = integrate(
                |t| {
                    let v = interp.eval(t);
                    if v <= 0.0 {
                        bad = true;
                    }
                    1.0 / v
                },
                gammas[i],
                gammas[i + 1],
                D_TOL / m as f64,
            );
            if bad {
                break;
            }
            tail[i] = tail[i + 1] + q.value;
        }
        Ok(Self { gammas, h, interp, tail })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn h_at(&self, gamma: f64) -> f64 {
        self.interp.eval(gamma)
    }

    /// `D(gamma) = exp(-int_gamma^1 1/H)`.
    pub fn d(&self, gamma: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(arg(format!("level {gamma} outside [0, 1]")));
        }
        if gamma == 1.0 {
            return Ok(1.0);
        }
        let i = self.gammas.partition_point(|&g| g <= gamma).saturating_sub(1);
        let upper = self.tail[i + 1];
        if upper.is_nan() {
            return Err(Error::Domain("H is not positive on the integration range".into()));
        }
        if gamma == self.gammas[i] {
            let t = self.tail[i];
            if t.is_nan() {
                return Err(Error::Domain("H is not positive on the integration range".into()));
            }
            return Ok((-t).exp());
        }
        let mut bad = false;
        let q = integrate(
            |t| {
                let v = self.interp.eval(t);
                if v <= 0.0 {
                    bad = true;
                }
                1.0 / v
            },
            gamma,
            self.gammas[i + 1],
            D_TOL,
        );
        if bad {
            return Err(Error::Domain("H is not positive on the integration range".into()));
        }
        Ok((-(upper + q.value)).exp())
    }
}

pub fn recover_d(h_grid: &HGrid, gamma: f64) -> Result<f64> {
    h_grid.d(gamma)
}

/// `v_gamma = b_gamma + (1 - theta) H(gamma) / ((n - 1) g(b_gamma))`.
pub fn recover_valuation_quantile(gamma: f64, law: &BidLaw, theta: f64, h: f64) -> f64 {
    law.quantile(gamma) + (1.0 - theta) * h / ((law.n as f64 - 1.0) * law.density_at_level(gamma))
}

/// Output of the full recovery pipeline on a uniform level grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Recovered {
    pub theta: f64,
    pub gamma: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    /// Recovered value quantiles `v_gamma`.
    pub v: Vec<f64>,
}

impl Recovered {
    /// Recovered `F0(v)`, the inverse of `gamma -> v_gamma`.
    pub fn f0(&self) -> Result<Pchip> {
        Pchip::new(self.v.clone(), self.gamma.clone())
            .map_err(|_| Error::Degenerate("recovered value quantiles are not increasing".into()))
    }
}

/// `theta -> H -> D -> F0` from two laws, on an [`H_GRID`]-point grid.
pub fn recover_structure(law1: &BidLaw, law2: &BidLaw) -> Result<Recovered> {
    let (l1, l2) = if law1.n < law2.n { (law1, law2) } else { (law2, law1) };
    let theta = solve_crra(l1.n, l2.n, l1.density_at_level(0.0), l2.density_at_level(0.0))?;
    let gamma: Vec<f64> = (0..H_GRID).map(|i| i as f64 / (H_GRID - 1) as f64).collect();
    let h = gamma.iter().map(|&g| recover_h(g, l1, l2, theta)).collect::<Result<Vec<_>>>()?;
    let grid = HGrid::new(gamma.clone(), h.clone())?;
    let d = gamma.iter().map(|&g| grid.d(g)).collect::<Result<Vec<_>>>()?;
    let v = gamma.iter().zip(&h).map(|(&g, &hv)| recover_valuation_quantile(g, l1, theta, hv)).collect();
    Ok(Recovered { theta, gamma, h, d, v })
}

/// Distance of a recovery from the structure behind the bid laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryError {
    pub theta: f64,
    /// Sup over the level grid of `|D_hat - D|`.
    pub d_sup: f64,
    /// Sup over 1001 values of `|F0_hat - F0|`.
    pub f0_sup: f64,
}

pub fn recovery_error(rec: &Recovered, s: &Structure) -> Result<RecoveryError> {
    let d_sup = rec.gamma.iter().zip(&rec.d).map(|(g, d)| (d - s.distortion.eval(*g)).abs()).fold(0.0, f64::max);
    let f0 = rec.f0()?;
    let f0_sup = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .map(|v| (f0.eval(v) - s.valuation.cdf(v)).abs())
        .fold(0.0, f64::max);
    Ok(RecoveryError { theta: (rec.theta - s.crra).abs(), d_sup, f0_sup })
}

/// Uniform values with `D(g) = (e^{2g}-1)/(e^2-1)`, and the tilde values with
/// `D(g) = (e^g-1)/(e-1)`; both risk neutral and with the same `D o F`.
pub fn equivalent_pair() -> (Structure, Structure) {
    (
        Structure { valuation: Valuation::Uniform, distortion: Distortion::Exponential { rate: 2.0 }, crra: 0.0 },
        Structure { valuation: Valuation::EquivalentTilde, distortion: Distortion::Exponential { rate: 1.0 }, crra: 0.0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rn_uniform_law(n: usize) -> BidLaw {
        let m = 257;
        let gammas: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let s = (n as f64 - 1.0) / n as f64;
        let q = gammas.iter().map(|g| g * s).collect();
        BidLaw::new(n, gammas, q, vec![1.0 / s; m]).unwrap()
    }

    #[test]
    fn crra_examples() {
        assert_abs_diff_eq!(solve_crra(2, 5, 2.0, 1.25).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(solve_crra(2, 5, 1.7, 1.175).unwrap(), 0.3, epsilon = 1e-14);
        let (th, g2) = (0.5, 1.0);
        let g1 = g2 * 2.0 / 1.0 * (2.0 - th) / (3.0 - th);
        assert_abs_diff_eq!(solve_crra(2, 3, g1, g2).unwrap(), 0.5, epsilon = 1e-14);
        assert_eq!(solve_crra(2, 3, 2.0, 1.0).unwrap_err().kind(), "degenerate");
        assert!(solve_crra(3, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn h_for_risk_neutral_uniform_is_identity() {
        let (l2, l3) = (rn_uniform_law(2), rn_uniform_law(3));
        for i in 0..=20 {
            let g = i as f64 / 20.0;
            assert_abs_diff_eq!(recover_h(g, &l2, &l3, 0.0).unwrap(), g, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(recover_h(1.0, &l2, &l3, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(recover_h(0.5, &l2, &l2, 0.0).unwrap_err().kind(), "degenerate");
    }

    #[test]
    fn h_for_exponential_distortion() {
        let s = Structure { valuation: Valuation::Uniform, distortion: Distortion::exponential(), crra: 0.0 };
        let l2 = exact_bid_law(&s, 2, H_GRID).unwrap();
        let l3 = exact_bid_law(&s, 3, H_GRID).unwrap();
        let e = 1f64.exp();
        assert_abs_diff_eq!(recover_h(0.5, &l2, &l3, 0.0).unwrap(), (e - 1.0) / (2.0 * e), epsilon = 1e-6);
        assert_abs_diff_eq!((e - 1.0) / (2.0 * e), 0.31606, epsilon = 1e-5);
    }

    #[test]
    fn d_from_h() {
        let g: Vec<f64> = (0..H_GRID).map(|i| i as f64 / (H_GRID - 1) as f64).collect();
        let id = HGrid::new(g.clone(), g.clone()).unwrap();
        for x in [0.0, 0.013, 0.3, 0.77, 1.0] {
            assert_abs_diff_eq!(recover_d(&id, x).unwrap(), x, epsilon = 1e-9);
        }
        let h_exp: Vec<f64> = g.iter().map(|x| -(-2.0 * x).exp_m1() / 2.0).collect();
        let ex = HGrid::new(g.clone(), h_exp).unwrap();
        let e = 1f64.exp();
        assert_abs_diff_eq!(ex.d(0.5).unwrap(), (e - 1.0) / (e * e - 1.0), epsilon = 1e-7);
        assert_abs_diff_eq!(ex.d(0.5).unwrap(), 0.26894, epsilon = 1e-5);
        assert_eq!(ex.d(1.0).unwrap(), 1.0);
    }

    #[test]
    fn d_scale_consistency() {
        let g: Vec<f64> = (0..H_GRID).map(|i| i as f64 / (H_GRID - 1) as f64).collect();
        let base: Vec<f64> = g.iter().map(|x| -(-2.0 * x).exp_m1() / 2.0).collect();
        let a = HGrid::new(g.clone(), base.clone()).unwrap();
        for c in [0.5, 2.0, 3.7] {
            let b = HGrid::new(g.clone(), base.iter().map(|h| c * h).collect()).unwrap();
            for x in [0.05, 0.4, 0.9] {
                assert_abs_diff_eq!(b.d(x).unwrap(), a.d(x).unwrap().powf(1.0 / c), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn nonpositive_h_is_a_domain_error() {
        let g = vec![0.0, 0.5, 1.0];
        let grid = HGrid::new(g, vec![0.0, -0.1, 1.0]).unwrap();
        assert_eq!(grid.d(0.25).unwrap_err().kind(), "domain");
        assert!(grid.d(0.75).is_ok());
    }

    #[test]
    fn valuation_quantile_examples() {
        let l2 = rn_uniform_law(2);
        for g in [0.0, 0.2, 0.9] {
            assert_abs_diff_eq!(recover_valuation_quantile(g, &l2, 0.0, g), g, epsilon = 1e-12);
        }
        assert_eq!(recover_valuation_quantile(0.0, &l2, 0.3, 0.0), l2.quantile(0.0));
    }

    #[test]
    fn pipeline_on_default_dgp() {
        let s = Structure::baseline_dgp();
        let l2 = exact_bid_law(&s, 2, H_GRID).unwrap();
        let l5 = exact_bid_law(&s, 5, H_GRID).unwrap();
        let r = recover_structure(&l2, &l5).unwrap();
        assert_abs_diff_eq!(r.theta, 0.3, epsilon = 1e-3);
        let f0 = r.f0().unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert_abs_diff_eq!(f0.eval(x), s.valuation.cdf(x), epsilon = 1e-3);
            assert_abs_diff_eq!(r.d[i * 512 / 200], s.distortion.eval(r.gamma[i * 512 / 200]), epsilon = 1e-3);
        }
    }

    #[test]
    fn equivalent_pair_shares_pessimistic_law_and_bids() {
        let (a, b) = equivalent_pair();
        assert_eq!(b.valuation.cdf(0.0), 0.0);
        assert_abs_diff_eq!(b.valuation.cdf(1.0), 1.0, epsilon = 1e-15);
        let ca = bid_strategy(&a, 2, 0.0, DEFAULT_GRID).unwrap();
        let cb = bid_strategy(&b, 2, 0.0, DEFAULT_GRID).unwrap();
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            assert_abs_diff_eq!(a.fstar(v), b.fstar(v), epsilon = 1e-12);
            assert_abs_diff_eq!(ca.bid_at(v), cb.bid_at(v), epsilon = 1e-9);
        }
    }

    #[test]
    fn law_csv_round_trip() {
        let l = exact_bid_law(&Structure::baseline_dgp(), 2, 33).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"gamma,bid_quantile,bid_density\n"));
        let back = BidLaw::read_csv(2, buf.as_slice()).unwrap();
        assert_eq!(back.quantiles, l.quantiles);
        assert_eq!(back.densities, l.densities);
    }

    #[test]
    fn cdf_inverts_quantile() {
        let l = exact_bid_law(&Structure::baseline_dgp(), 5, 129).unwrap();
        for g in [0.1, 0.5, 0.95] {
            assert_abs_diff_eq!(l.cdf(l.quantile(g)), g, epsilon = 1e-10);
        }
    }
}
