//! Adaptive Gauss–Kronrod (G7/K15) integration on finite intervals.
//!
//! The 15-point rule is also exposed node-by-node so that callers can
//! evaluate an expensive factor once per node and reuse it across several
//! integrands (see [`crate::bidding`]).

/// Kronrod abscissae on [-1, 1], nonnegative half, descending. Index 7 is the center.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching [`XGK`].
pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Number of points in the Kronrod rule.
pub const GK_POINTS: usize = 15;

const MAX_DEPTH: u32 = 48;

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    /// Sum of per-panel |K15 - G7| estimates.
    pub error: f64,
    pub evals: usize,
}

/// The 15 abscissae of the rule mapped onto [a, b], in ascending order.
pub fn gk_nodes(a: f64, b: f64) -> [f64; GK_POINTS] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; GK_POINTS];
    for i in 0..7 {
        out[i] = c - h * XGK[i];
        out[GK_POINTS - 1 - i] = c + h * XGK[i];
    }
    out[7] = c;
    out
}

/// Applies the K15/G7 pair to function values taken at [`gk_nodes`]`(a, b)`.
/// Returns `(kronrod, |kronrod - gauss|)`.
pub fn gk_apply(a: f64, b: f64, values: &[f64; GK_POINTS]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * values[7];
    let mut g = WG[3] * values[7];
    for i in 0..7 {
        let pair = values[i] + values[GK_POINTS - 1 - i];
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// One K15 panel on [a, b].
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let nodes = gk_nodes(a, b);
    let mut vals = [0.0; GK_POINTS];
    for (v, &x) in vals.iter_mut().zip(nodes.iter()) {
        *v = f(x);
    }
    gk_apply(a, b, &vals)
}

/// Adaptive bisection on [a, b] until every panel's error estimate is below
/// its share of `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Quad {
    if a == b {
        return Quad { value: 0.0, error: 0.0, evals: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut q = Quad { value: 0.0, error: 0.0, evals: 0 };
    recurse(&mut f, lo, hi, abs_tol.max(f64::MIN_POSITIVE), 0, &mut q);
    q.value *= sign;
    q
}

/// Continues adaptive refinement of a panel whose first K15 pass is already known.
pub fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    first: (f64, f64),
    abs_tol: f64,
) -> Quad {
    let mut q = Quad { value: 0.0, error: 0.0, evals: 0 };
    if first.1 <= abs_tol {
        q.value = first.0;
        q.error = first.1;
        return q;
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, 0.5 * abs_tol, 1, &mut q);
    recurse(f, m, b, 0.5 * abs_tol, 1, &mut q);
    q
}

fn recurse<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32, q: &mut Quad) {
    let (val, err) = gk15(f, a, b);
    q.evals += GK_POINTS;
    let m = 0.5 * (a + b);
    if err <= tol || depth >= MAX_DEPTH || m <= a || m >= b {
        q.value += val;
        q.error += err;
        return;
    }
    recurse(f, a, m, 0.5 * tol, depth + 1, q);
    recurse(f, m, b, 0.5 * tol, depth + 1, q);
}

/// Composite Simpson rule on a uniform grid with an odd number of points.
pub fn simpson_uniform(values: &[f64], a: f64, b: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of points >= 3");
    let h = (b - a) / (n - 1) as f64;
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree-22 polynomials exactly.
        let (v, _) = gk15(&mut |x: f64| x.powi(10) + 3.0 * x * x, 0.0, 1.0);
        assert_abs_diff_eq!(v, 1.0 / 11.0 + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_sharp_features() {
        let q = integrate(|x: f64| (-200.0 * x).exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(q.value, (1.0 - (-200.0f64).exp()) / 200.0, epsilon = 1e-12);
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-11);
        assert_abs_diff_eq!(q.value, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate(|x: f64| x, 1.0, 0.0, 1e-12);
        assert_abs_diff_eq!(q.value, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let n = gk_nodes(0.0, 2.0);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(n[7], 1.0);
        assert_abs_diff_eq!(n[0] + n[14], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert_abs_diff_eq!(simpson_uniform(&ys, 0.0, 1.0), 0.25, epsilon = 1e-15);
    }
}
