//! Flat parameter vectors for the sampler.
//!
//! Layout: `[crra, f_1 .. f_{k-1}, theta0, d_2 .. d_{k-2}]` with ambiguity
//! enabled, `[crra, f_1 .. f_{k-1}]` without. The last coordinate of each
//! simplex is implied.

use serde::{Deserialize, Serialize};

use crate::bernstein::{BpdParams, DParams, SimplexWeights};
use crate::error::{arg, Result};
use crate::model::{Distortion, Structure, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub k: usize,
    pub ambiguity_enabled: bool,
}

impl ParamLayout {
    pub fn new(k: usize, ambiguity_enabled: bool) -> Result<Self> {
        if k < 4 {
            return Err(arg("Bernstein order k must be at least 4"));
        }
        Ok(Self { k, ambiguity_enabled })
    }

    pub fn dim(&self) -> usize {
        if self.ambiguity_enabled {
            2 * self.k - 2
        } else {
            self.k
        }
    }

    pub fn theta0_index(&self) -> Option<usize> {
        self.ambiguity_enabled.then_some(self.k)
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = vec!["crra".to_string()];
        out.extend((1..self.k).map(|j| format!("f{j}")));
        if self.ambiguity_enabled {
            out.push("theta0".into());
            out.extend((2..self.k - 1).map(|j| format!("d{j}")));
        }
        out
    }

    pub fn crra(&self, x: &[f64]) -> f64 {
        x[0]
    }

    pub fn f_free<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[1..self.k]
    }

    /// `theta0`, or 0 (identity) when ambiguity is disabled.
    pub fn theta0(&self, x: &[f64]) -> f64 {
        self.theta0_index().map_or(0.0, |i| x[i])
    }

    pub fn d_free<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        if self.ambiguity_enabled {
            &x[self.k + 1..]
        } else {
            &[]
        }
    }

    pub fn f_weights(&self, x: &[f64]) -> Option<SimplexWeights> {
        SimplexWeights::from_free(self.f_free(x))
    }

    pub fn d_weights(&self, x: &[f64]) -> Option<SimplexWeights> {
        if self.ambiguity_enabled {
            SimplexWeights::from_free(self.d_free(x))
        } else {
            Some(SimplexWeights::uniform(self.k - 2))
        }
    }

    pub fn valuation(&self, x: &[f64]) -> Option<Valuation> {
        let w = self.f_weights(x)?;
        Some(Valuation::Bernstein { params: BpdParams::new(w).ok()? })
    }

    pub fn distortion(&self, x: &[f64]) -> Option<Distortion> {
        let th = self.theta0(x);
        if th <= 0.0 {
            return Some(Distortion::Identity);
        }
        let d = DParams::new(th, self.k, self.d_weights(x)?).ok()?;
        Some(Distortion::Bernstein { params: d })
    }

    /// Structure at `x`, or `None` when a simplex coordinate is negative.
    /// Shape constraints are not checked here.
    pub fn structure(&self, x: &[f64]) -> Option<Structure> {
        Some(Structure { valuation: self.valuation(x)?, distortion: self.distortion(x)?, crra: self.crra(x) })
    }

    /// Packs explicit weights into a vector of this layout.
    pub fn encode(&self, crra: f64, f: &SimplexWeights, theta0: f64, d: &SimplexWeights) -> Result<Vec<f64>> {
        if f.len() != self.k {
            return Err(arg("valuation weights do not match k"));
        }
        let mut x = vec![crra];
        x.extend_from_slice(f.free());
        if self.ambiguity_enabled {
            if d.len() != self.k - 2 {
                return Err(arg("distortion weights do not match k"));
            }
            x.push(theta0);
            x.extend_from_slice(d.free());
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_names() {
        let l = ParamLayout::new(6, true).unwrap();
        assert_eq!(l.dim(), 10);
        assert_eq!(l.names().len(), 10);
        assert_eq!(l.names()[6], "theta0");
        let m = ParamLayout::new(6, false).unwrap();
        assert_eq!(m.dim(), 6);
        assert_eq!(m.names(), vec!["crra", "f1", "f2", "f3", "f4", "f5"]);
    }

    #[test]
    fn encode_then_decode() {
        let l = ParamLayout::new(6, true).unwrap();
        let f = SimplexWeights::new(vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let d = SimplexWeights::new(vec![0.0, 0.5, 0.25, 0.25]).unwrap();
        let x = l.encode(0.3, &f, 0.2, &d).unwrap();
        assert_eq!(x.len(), 10);
        let s = l.structure(&x).unwrap();
        assert_eq!(s.crra, 0.3);
        match s.distortion {
            Distortion::Bernstein { params } => {
                assert_eq!(params.theta0(), 0.2);
                assert!((params.inner_weights().as_slice()[3] - 0.25).abs() < 1e-15);
            }
            _ => panic!("expected Bernstein distortion"),
        }
        let mut neg = x.clone();
        neg[6] = -0.01;
        assert_eq!(l.structure(&neg).unwrap().distortion, Distortion::Identity);
        let mut bad = x;
        bad[1] = 0.9;
        assert!(l.structure(&bad).is_none());
    }
}
