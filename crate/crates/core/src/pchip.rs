//! Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson slopes,
//! the same end conditions as SciPy's `PchipInterpolator`).

use crate::error::{arg, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(arg("pchip needs at least two (x, y) pairs of equal length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(arg("pchip abscissae must be strictly increasing"));
        }
        let d = slopes(&x, &y);
        Ok(Self { x, y, d })
    }

    /// Cubic Hermite interpolant with caller-supplied slopes, limited where
    /// needed so that monotone data stay monotone. Non-finite slopes are
    /// allowed and get clipped by the limiter.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || d.len() != n {
            return Err(arg("hermite interpolant needs matching x, y, slope vectors of length >= 2"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(arg("hermite abscissae must be strictly increasing"));
        }
        limit_monotone(&x, &y, &mut d);
        Ok(Self { x, y, d })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Evaluates the interpolant; arguments outside the knot range are clamped.
    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= xq) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// First derivative of the interpolant (clamped like [`Pchip::eval`]).
    pub fn deriv(&self, xq: f64) -> f64 {
        let n = self.x.len();
        let xq = xq.clamp(self.x[0], self.x[n - 1]);
        let i = (self.x.partition_point(|&v| v <= xq).max(1) - 1).min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let t2 = t * t;
        let dh00 = (6.0 * t2 - 6.0 * t) / h;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = (-6.0 * t2 + 6.0 * t) / h;
        let dh11 = 3.0 * t2 - 2.0 * t;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Fritsch–Carlson limiter: zero slopes against the secant sign and shrink
/// pairs with `a^2 + b^2 > 9`.
fn limit_monotone(x: &[f64], y: &[f64], d: &mut [f64]) {
    for i in 0..x.len() - 1 {
        let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if delta == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        for j in [i, i + 1] {
            if d[j].is_nan() || d[j] * delta < 0.0 {
                d[j] = 0.0;
            } else if d[j].is_infinite() {
                d[j] = 3.0 * delta;
            }
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_knots_and_lines() {
        let x = vec![0.0, 0.3, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_abs_diff_eq!(p.eval(*xi), *yi, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.eval(0.77), 2.54, epsilon = 1e-14);
        assert_abs_diff_eq!(p.deriv(0.77), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_slopes_give_fourth_order_accuracy() {
        let x: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let p = Pchip::with_slopes(x, y.clone(), y).unwrap();
        for i in 0..=97 {
            let v = i as f64 / 97.0;
            assert_abs_diff_eq!(p.eval(v), v.exp(), epsilon = 1e-7);
        }
    }

    #[test]
    fn limiter_clips_infinite_slopes() {
        let p = Pchip::with_slopes(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5], vec![f64::INFINITY, 1.0, 0.5])
            .unwrap();
        let mut prev = 0.0;
        for i in 1..=200 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v.is_finite() && v >= prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(
            steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..1.0), 3..20)
        ) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let p = Pchip::new(x.clone(), y).unwrap();
            let hi = *x.last().unwrap();
            let mut prev = p.eval(0.0);
            for i in 1..=400 {
                let v = p.eval(hi * i as f64 / 400.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
