//! Adaptive Metropolis with a Gaussian random-walk proposal whose covariance
//! tracks the running covariance of the chain history.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmConfig {
    /// Iterations with the fixed initial proposal.
    pub s0: u64,
    /// Initial proposal covariance is `omega0 * I`.
    pub omega0: f64,
    pub eps: f64,
    /// Proposal scale; `2.4 / dim` when absent.
    pub scale: Option<f64>,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self { s0: 100, omega0: 0.001, eps: 1e-4, scale: None }
    }
}

/// Sampler state with Welford running moments of the history.
#[derive(Debug, Clone)]
pub struct AmState {
    cfg: AmConfig,
    iteration: u64,
    current: Vec<f64>,
    current_lp: f64,
    accepted: u64,
    count: f64,
    mean: DVector<f64>,
    /// Sum of outer products of deviations from the running mean.
    m2: DMatrix<f64>,
}

impl AmState {
    pub fn new(x0: Vec<f64>, lp0: f64, cfg: AmConfig) -> Self {
        let d = x0.len();
        let mean = DVector::from_vec(x0.clone());
        Self {
            cfg,
            iteration: 0,
            current: x0,
            current_lp: lp0,
            accepted: 0,
            count: 1.0,
            mean,
            m2: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.current.len()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn current_lp(&self) -> f64 {
        self.current_lp
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn scale(&self) -> f64 {
        self.cfg.scale.unwrap_or(2.4 / self.dim() as f64)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Sample covariance of the history (divisor `count - 1`).
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count < 2.0 {
            return DMatrix::zeros(self.dim(), self.dim());
        }
        &self.m2 / (self.count - 1.0)
    }

    /// Proposal covariance for the next step.
    pub fn proposal_cov(&self) -> DMatrix<f64> {
        let d = self.dim();
        if self.iteration <= self.cfg.s0 {
            return DMatrix::identity(d, d) * self.cfg.omega0;
        }
        let c = self.scale();
        self.covariance() * c + DMatrix::identity(d, d) * (c * self.cfg.eps)
    }

    fn record(&mut self) {
        self.count += 1.0;
        let x = DVector::from_column_slice(&self.current);
        let delta = &x - &self.mean;
        self.mean += &delta / self.count;
        let delta2 = &x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    /// One Metropolis step. Returns whether the proposal was accepted.
    pub fn step<R: Rng + ?Sized, F: FnMut(&[f64]) -> f64>(&mut self, rng: &mut R, mut log_target: F) -> bool {
        let d = self.dim();
        let cov = self.proposal_cov();
        let l = match cov.clone().cholesky() {
            Some(ch) => ch.l(),
            None => DMatrix::identity(d, d) * self.cfg.omega0.sqrt(),
        };
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = l * z;
        let proposal: Vec<f64> = self.current.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let lp = log_target(&proposal);
        let u: f64 = rng.random();
        let accept = lp.is_finite() && u.ln() < lp - self.current_lp;
        if accept {
            self.current = proposal;
            self.current_lp = lp;
            self.accepted += 1;
        }
        self.iteration += 1;
        self.record();
        accept
    }
}

pub fn am_step<R: Rng + ?Sized, F: FnMut(&[f64]) -> f64>(state: &mut AmState, log_target: F, rng: &mut R) -> bool {
    state.step(rng, log_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_target_accepts_everything() {
        let mut st = AmState::new(vec![0.0, 0.0, 0.0], 0.0, AmConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            assert!(st.step(&mut rng, |_| 0.0));
        }
        assert_eq!(st.accepted(), 500);
    }

    #[test]
    fn initial_proposal_is_fixed() {
        let mut st = AmState::new(vec![1.0, 2.0], -1.0, AmConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(st.proposal_cov(), DMatrix::identity(2, 2) * 0.001);
            st.step(&mut rng, |x| -0.5 * (x[0] * x[0] + x[1] * x[1]));
        }
        assert_eq!(st.iteration(), 100);
        assert_eq!(st.proposal_cov(), DMatrix::identity(2, 2) * 0.001);
        st.step(&mut rng, |x| -0.5 * (x[0] * x[0] + x[1] * x[1]));
        let want = st.covariance() * 1.2 + DMatrix::identity(2, 2) * 1.2e-4;
        assert!((st.proposal_cov() - want).abs().max() < 1e-15);
    }

    #[test]
    fn running_moments_match_batch() {
        let mut st = AmState::new(vec![0.5, -0.5], 0.0, AmConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = vec![st.current().to_vec()];
        for _ in 0..2000 {
            st.step(&mut rng, |x| -0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1] - x[0] * x[1]));
            hist.push(st.current().to_vec());
        }
        let n = hist.len() as f64;
        let mean: Vec<f64> = (0..2).map(|j| hist.iter().map(|h| h[j]).sum::<f64>() / n).collect();
        let cov = st.covariance();
        for a in 0..2 {
            assert_abs_diff_eq!(st.mean()[a], mean[a], epsilon = 1e-10);
            for b in 0..2 {
                let c = hist.iter().map(|h| (h[a] - mean[a]) * (h[b] - mean[b])).sum::<f64>() / (n - 1.0);
                assert_abs_diff_eq!(cov[(a, b)], c, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_target_moments() {
        let mut st = AmState::new(vec![0.0, 0.0], 0.0, AmConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 50_000;
        let (mut s0, mut s1, mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            st.step(&mut rng, |x| -0.5 * (x[0] * x[0] + x[1] * x[1]));
            let x = st.current();
            s0 += x[0];
            s1 += x[1];
            s00 += x[0] * x[0];
            s11 += x[1] * x[1];
            s01 += x[0] * x[1];
        }
        let nf = n as f64;
        let (m0, m1) = (s0 / nf, s1 / nf);
        assert!(m0.abs() < 0.05 && m1.abs() < 0.05, "{m0} {m1}");
        assert!((s00 / nf - m0 * m0 - 1.0).abs() < 0.1);
        assert!((s11 / nf - m1 * m1 - 1.0).abs() < 0.1);
        assert!((s01 / nf - m0 * m1).abs() < 0.1);
    }
}
