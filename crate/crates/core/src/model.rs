//! Model primitives: valuation law `F0`, distortion `D`, CRRA coefficient.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::bernstein::{
    invert_cdf, shape_ok_on_grid, BpdParams, DParams, SimplexWeights, DEFAULT_SHAPE_GRID,
};
use crate::error::{arg, Error, Result};

/// `(e - 1) / (e^2 - 1) = 1 / (e + 1)`, the constant of the tilde valuation law.
fn tilde_c() -> f64 {
    1.0 / (std::f64::consts::E + 1.0)
}

/// Valuation law on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Valuation {
    Uniform,
    Bernstein { params: BpdParams },
    /// `F(v) = ln(1 + (e^{2v} - 1) c)` with `c = (e-1)/(e^2-1)`.
    EquivalentTilde,
}

impl Valuation {
    /// 0.2 Uniform + 0.8 Beta(2, 4), written as an order-5 Bernstein density.
    pub fn dgp_mixture() -> Self {
        let w = SimplexWeights::new(vec![0.04, 0.84, 0.04, 0.04, 0.04]).expect("static weights");
        Valuation::Bernstein { params: BpdParams::new(w).expect("static weights") }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        match self {
            Valuation::Uniform => {
                if (0.0..=1.0).contains(&v) {
                    1.0
                } else {
                    0.0
                }
            }
            Valuation::Bernstein { params } => params.pdf(v),
            Valuation::EquivalentTilde => {
                if !(0.0..=1.0).contains(&v) {
                    return 0.0;
                }
                let c = tilde_c();
                let e2 = (2.0 * v).exp();
                2.0 * e2 * c / (1.0 + (e2 - 1.0) * c)
            }
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match self {
            Valuation::Uniform => v.clamp(0.0, 1.0),
            Valuation::Bernstein { params } => params.cdf(v),
            Valuation::EquivalentTilde => {
                let v = v.clamp(0.0, 1.0);
                ((2.0 * v).exp_m1() * tilde_c()).ln_1p().min(1.0)
            }
        }
    }

    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(arg(format!("quantile level {gamma} outside [0, 1]")));
        }
        Ok(match self {
            Valuation::Uniform => gamma,
            Valuation::Bernstein { params } => invert_cdf(|v| params.cdf(v), |v| params.pdf(v), gamma),
            Valuation::EquivalentTilde => (gamma.exp_m1() / tilde_c()).ln_1p().min(2.0) * 0.5,
        })
    }

    /// One draw; mixtures draw the component first, then the component value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Valuation::Uniform => rng.random::<f64>(),
            Valuation::Bernstein { params } => {
                let k = params.k();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut j = k;
                for (i, w) in params.weights().as_slice().iter().enumerate() {
                    acc += w;
                    if u < acc {
                        j = i + 1;
                        break;
                    }
                }
                let beta = Beta::new(j as f64, (k - j + 1) as f64).expect("positive shapes");
                beta.sample(rng)
            }
            Valuation::EquivalentTilde => {
                let u: f64 = rng.random();
                self.quantile(u).expect("u in [0,1)")
            }
        }
    }
}

/// Quantile distortion `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    Identity,
    Bernstein { params: DParams },
    /// `D(g) = (e^{rate g} - 1) / (e^{rate} - 1)`.
    Exponential { rate: f64 },
    /// `D(g) = (1 - epsilon) g`. Not a proper distortion (`D(1) < 1`); kept for
    /// checking that a pure rescaling of the pessimistic law leaves bids unchanged.
    Contaminated { epsilon: f64 },
}

impl Distortion {
    /// Distortion used by the default data-generating process.
    pub fn baseline_d0() -> Self {
        let inner = SimplexWeights::new(vec![0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0]).expect("static weights");
        Distortion::Bernstein { params: DParams::new(0.1, 6, inner).expect("static weights") }
    }

    pub fn exponential() -> Self {
        Distortion::Exponential { rate: 2.0 }
    }

    pub fn eval(&self, g: f64) -> f64 {
        match self {
            Distortion::Identity => g,
            Distortion::Bernstein { params } => params.eval(g),
            Distortion::Exponential { rate } => (rate * g).exp_m1() / rate.exp_m1(),
            Distortion::Contaminated { epsilon } => (1.0 - epsilon) * g,
        }
    }

    pub fn deriv(&self, g: f64) -> f64 {
        match self {
            Distortion::Identity => 1.0,
            Distortion::Bernstein { params } => params.deriv(g),
            Distortion::Exponential { rate } => rate * (rate * g).exp() / rate.exp_m1(),
            Distortion::Contaminated { epsilon } => 1.0 - epsilon,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Distortion::Identity => true,
            Distortion::Bernstein { params } => params.is_identity(),
            _ => false,
        }
    }

    pub fn shape_ok(&self, grid_size: usize) -> bool {
        match self {
            Distortion::Identity => true,
            Distortion::Bernstein { params } => crate::bernstein::d_shape_ok(params, grid_size),
            Distortion::Exponential { rate } => rate.is_finite() && *rate != 0.0,
            Distortion::Contaminated { epsilon } => {
                (0.0..1.0).contains(epsilon) && shape_ok_on_grid(|g| self.eval(g), |g| self.deriv(g), grid_size)
            }
        }
    }
}

/// A full model: valuation law, distortion, and CRRA coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Structure {
    pub valuation: Valuation,
    pub distortion: Distortion,
    pub crra: f64,
}

impl Structure {
    pub fn new(valuation: Valuation, distortion: Distortion, crra: f64) -> Result<Self> {
        let s = Self { valuation, distortion, crra };
        s.validate()?;
        Ok(s)
    }

    /// Default data-generating structure (mixture valuation, calibrated D, CRRA 0.3).
    pub fn baseline_dgp() -> Self {
        Self { valuation: Valuation::dgp_mixture(), distortion: Distortion::baseline_d0(), crra: 0.3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.crra.is_finite() && (0.0..1.0).contains(&self.crra)) {
            return Err(Error::InvalidStructure(format!("crra {} outside [0, 1)", self.crra)));
        }
        if !self.distortion.shape_ok(DEFAULT_SHAPE_GRID) {
            return Err(Error::InvalidStructure("distortion fails D > 0, D' > 0".into()));
        }
        Ok(())
    }

    /// `(n - 1) / (1 - crra)`.
    pub fn alpha(&self, n: usize) -> f64 {
        (n as f64 - 1.0) / (1.0 - self.crra)
    }

    /// Pessimistic cdf `D(F0(v))`.
    pub fn fstar(&self, v: f64) -> f64 {
        self.distortion.eval(self.valuation.cdf(v))
    }

    pub fn ln_fstar(&self, v: f64) -> f64 {
        let f = self.fstar(v);
        if f > 0.0 {
            f.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Pessimistic density `D'(F0(v)) f0(v)`.
    pub fn fstar_pdf(&self, v: f64) -> f64 {
        self.distortion.deriv(self.valuation.cdf(v)) * self.valuation.pdf(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mixture_matches_components() {
        let v = Valuation::dgp_mixture();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let beta24 = 20.0 * x * (1.0 - x).powi(3);
            assert_abs_diff_eq!(v.pdf(x), 0.2 + 0.8 * beta24, epsilon = 1e-12);
            let cdf24 = 1.0 - (1.0 - x).powi(5) - 5.0 * x * (1.0 - x).powi(4);
            assert_abs_diff_eq!(v.cdf(x), 0.2 * x + 0.8 * cdf24, epsilon = 1e-12);
        }
    }

    #[test]
    fn tilde_law_endpoints_and_density() {
        let v = Valuation::EquivalentTilde;
        assert_abs_diff_eq!(tilde_c(), (1f64.exp() - 1.0) / (2f64.exp() - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(v.cdf(0.0), 0.0);
        assert_abs_diff_eq!(v.cdf(1.0), 1.0, epsilon = 1e-15);
        let q = integrate(|x| v.pdf(x), 0.0, 1.0, 1e-13);
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-12);
        for g in [0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(v.cdf(v.quantile(g).unwrap()), g, epsilon = 1e-13);
        }
    }

    #[test]
    fn sampling_moments() {
        let v = Valuation::dgp_mixture();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mean = (0..n).map(|_| v.sample(&mut rng)).sum::<f64>() / n as f64;
        // 0.2 * 1/2 + 0.8 * 1/3
        assert_abs_diff_eq!(mean, 0.1 + 0.8 / 3.0, epsilon = 3e-3);
    }

    #[test]
    fn distortions_fix_endpoints() {
        for d in [Distortion::Identity, Distortion::baseline_d0(), Distortion::exponential()] {
            assert_abs_diff_eq!(d.eval(0.0), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.eval(1.0), 1.0, epsilon = 1e-15);
            assert!(d.shape_ok(DEFAULT_SHAPE_GRID));
        }
        let e = Distortion::exponential();
        assert_abs_diff_eq!(e.deriv(0.5), 2.0 * 1f64.exp() / (2f64.exp() - 1.0), epsilon = 1e-14);
    }

    #[test]
    fn structure_validation() {
        assert!(Structure::new(Valuation::Uniform, Distortion::Identity, 1.0).is_err());
        assert!(Structure::new(Valuation::Uniform, Distortion::Identity, -0.1).is_err());
        let bad = DParams::new(0.5, 4, SimplexWeights::new(vec![1.0, 0.0]).unwrap()).unwrap();
        let err = Structure::new(Valuation::Uniform, Distortion::Bernstein { params: bad }, 0.2).unwrap_err();
        assert_eq!(err.kind(), "invalid_structure");
        Structure::baseline_dgp().validate().unwrap();
    }

    #[test]
    fn serde_is_tagged() {
        let s = Structure::baseline_dgp();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"kind\":\"bernstein\""));
        let back: Structure = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
