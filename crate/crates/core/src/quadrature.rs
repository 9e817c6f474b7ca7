//! Quadrature rules for integrands with algebraic endpoint singularities.
//!
//! Gauss–Jacobi rules come from the Golub–Welsch eigenvalue problem of the
//! Jacobi matrix. On a cell `[c, d]` a rule with exponents `(right, left)`
//! integrates `(d - s)^right (s - c)^left g(s)` exactly for polynomial `g`
//! of degree `< 2n`, which is how the singular factors are handled without
//! ever evaluating them at the singular point.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on `[-1, 1]` for the weight `(1 - x)^a (1 + x)^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_c^d (d - s)^a (s - c)^b g(s) ds`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, c: f64, d: f64, mut g: F) -> f64 {
        let half = 0.5 * (d - c);
        let mid = 0.5 * (c + d);
        let scale = half.powf(1.0 + self.a + self.b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(mid + half * x);
        }
        scale * acc
    }

    /// Maps the nodes into `[c, d]` and returns `(s_i, w_i)` such that
    /// `Σ w_i g(s_i)` approximates `∫_c^d (d - s)^a (s - c)^b g(s) ds`.
    pub fn mapped(&self, c: f64, d: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (d - c);
        let mid = 0.5 * (c + d);
        let scale = half.powf(1.0 + self.a + self.b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, scale * w))
    }
}

/// Gauss–Jacobi rule with `n` nodes for `(1 - x)^a (1 + x)^b`, `a, b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    assert!(n > 0, "rule needs at least one node");
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    let ab = a + b;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = beta.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        a,
        b,
    }
}

/// Cached rules keyed by `(n, a, b)`; rules are immutable once built.
pub fn cached_rule(n: usize, a: f64, b: f64) -> std::sync::Arc<GaussRule> {
    type Cache = Mutex<HashMap<(usize, u64, u64), std::sync::Arc<GaussRule>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
        return rule.clone();
    }
    let rule = std::sync::Arc::new(gauss_jacobi(n, a, b));
    cache
        .lock()
        .expect("rule cache poisoned")
        .entry(key)
        .or_insert(rule)
        .clone()
}

pub fn gauss_legendre(n: usize) -> std::sync::Arc<GaussRule> {
    cached_rule(n, 0.0, 0.0)
}

/// Options for [`graded`].
#[derive(Debug, Clone, Copy)]
pub struct GradedOptions {
    /// Nodes per panel.
    pub nodes: usize,
    /// Geometric refinement levels toward each singular end.
    pub levels: usize,
    /// Ratio between consecutive panel widths.
    pub ratio: f64,
}

impl Default for GradedOptions {
    fn default() -> Self {
        Self {
            nodes: 16,
            levels: 24,
            ratio: 0.2,
        }
    }
}

/// `∫_a^b f(s) ds` for `f` with algebraic singularities at the endpoints.
///
/// `left` / `right` give the leading singular exponent at each end (`None`
/// for a regular end). The interval is refined geometrically toward each
/// singular end; the innermost panel uses a Gauss–Jacobi rule for the
/// leading power, the other panels Gauss–Legendre. `f` is never evaluated at
/// the endpoints themselves.
pub fn graded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    opts: GradedOptions,
) -> f64 {
    graded_dyn(&mut f, a, b, left, right, opts)
}

/// Levels actually used: the innermost panel must stay resolvable next to
/// the endpoints in floating point.
fn grading_levels(a: f64, b: f64, opts: GradedOptions) -> usize {
    let floor = 1e-13 * a.abs().max(b.abs());
    let len = b - a;
    (1..=opts.levels)
        .take_while(|&l| len * opts.ratio.powi(l as i32) > floor)
        .last()
        .unwrap_or(0)
}

fn graded_dyn(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    opts: GradedOptions,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let legendre = gauss_legendre(opts.nodes);
    match (left, right) {
        (Some(_), Some(_)) => {
            let mid = 0.5 * (a + b);
            graded_dyn(f, a, mid, left, None, opts) + graded_dyn(f, mid, b, None, right, opts)
        }
        (None, None) => legendre.integrate(a, b, f),
        (Some(p), None) => {
            let mut total = 0.0;
            let mut hi = b;
            let len = b - a;
            for level in 1..=grading_levels(a, b, opts) {
                let lo = a + len * opts.ratio.powi(level as i32);
                total += legendre.integrate(lo, hi, &mut *f);
                hi = lo;
            }
            let rule = cached_rule(opts.nodes, 0.0, p);
            total + rule.integrate(a, hi, |s| f(s) / (s - a).powf(p))
        }
        (None, Some(p)) => {
            let mut total = 0.0;
            let mut lo = a;
            let len = b - a;
            for level in 1..=grading_levels(a, b, opts) {
                let hi = b - len * opts.ratio.powi(level as i32);
                total += legendre.integrate(lo, hi, &mut *f);
                lo = hi;
            }
            let rule = cached_rule(opts.nodes, p, 0.0);
            total + rule.integrate(lo, b, |s| f(s) / (b - s).powf(p))
        }
    }
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK15_KRONROD[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK15_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += GK15_KRONROD[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) with bisection until the local error
/// estimate meets `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let (whole, err) = gk15(&mut f, a, b);
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let mut total = 0.0;
    let target = abs_tol.max(rel_tol * whole.abs());
    let full = b - a;
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let share = target * (hi - lo) / full;
        if err <= share.max(1e-15 * val.abs()) || depth >= 48 {
            total += val;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (l, le) = gk15(&mut f, lo, mid);
        let (r, re) = gk15(&mut f, mid, hi);
        stack.push((lo, mid, l, le, depth + 1));
        stack.push((mid, hi, r, re, depth + 1));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn beta_fn(p: f64, q: f64) -> f64 {
        gamma(p) * gamma(q) / gamma(p + q)
    }

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let rule = gauss_legendre(5);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let exact = 2f64.powi(10) / 10.0 - 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-11 * exact.abs());
    }

    #[test]
    fn jacobi_moments_match_beta_function() {
        for &(a, b) in &[(-0.5, 0.0), (0.0, -0.75), (-0.3, -0.5), (-0.99, 0.2), (0.5, -0.5)] {
            let rule = gauss_jacobi(8, a, b);
            // ∫_0^1 (1-s)^a s^b s^k ds = B(b+k+1, a+1)
            for k in 0..6 {
                let v = rule.integrate(0.0, 1.0, |s| s.powi(k));
                let exact = beta_fn(b + k as f64 + 1.0, a + 1.0);
                assert!((v - exact).abs() < 1e-13 * exact, "a={a} b={b} k={k}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_are_positive_and_nodes_sorted() {
        let rule = gauss_jacobi(20, -0.4, -0.2);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn graded_handles_endpoint_singularities() {
        // ∫_0^1 s^{-1/2} (1 + s) ds = 2 + 2/3
        let v = graded(|s| s.powf(-0.5) * (1.0 + s), 0.0, 1.0, Some(-0.5), None, GradedOptions::default());
        assert!((v - 8.0 / 3.0).abs() < 1e-12);
        // Non-pure singularity s^{-1/4} + s^{1/3}
        let v = graded(
            |s| s.powf(-0.25) + s.powf(1.0 / 3.0),
            0.0,
            1.0,
            Some(-0.25),
            None,
            GradedOptions::default(),
        );
        assert!((v - (4.0 / 3.0 + 0.75)).abs() < 1e-12);
        // Both ends: B(0.3, 0.6)
        let v = graded(
            |s| s.powf(-0.7) * (1.0 - s).powf(-0.4),
            0.0,
            1.0,
            Some(-0.7),
            Some(-0.4),
            GradedOptions::default(),
        );
        assert!((v - beta_fn(0.3, 0.6)).abs() < 1e-11);
    }

    #[test]
    fn adaptive_integrates_smooth_and_peaked_functions() {
        let v = adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-9 * exact);
    }
}
