//! Central moments `a_n(λ) = E(N - λ)^n` of a Poisson variable with mean `λ`.

use statrs::function::gamma::ln_gamma;

/// `a_n` as a polynomial in `λ`, constant term first.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralMomentPoly {
    order: usize,
    coefficients: Vec<f64>,
}

impl CentralMomentPoly {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Index of the highest nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
    }
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

/// Builds `a_n` from `a_0 = 1`, `a_1 = 0` and
/// `a_{n+1}(λ) = λ (a_n'(λ) + n a_{n-1}(λ))`. Coefficients are integers and
/// exact in `f64` for all practical orders.
pub fn central_moment_poly(n: usize) -> CentralMomentPoly {
    let mut prev = vec![1.0];
    let mut cur = vec![0.0];
    if n == 0 {
        return CentralMomentPoly {
            order: 0,
            coefficients: prev,
        };
    }
    for k in 1..n {
        let d = derivative(&cur);
        let len = d.len().max(prev.len());
        let mut next = vec![0.0; len + 1];
        for i in 0..len {
            let a = d.get(i).copied().unwrap_or(0.0);
            let b = prev.get(i).copied().unwrap_or(0.0);
            next[i + 1] = a + k as f64 * b;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    CentralMomentPoly {
        order: n,
        coefficients: cur,
    }
}

/// Truncation point `λ + 40√λ + 50` for the brute-force sum.
pub fn pmf_truncation(lambda: f64) -> usize {
    (lambda + 40.0 * lambda.sqrt() + 50.0).ceil() as usize
}

/// `Σ_k (k - λ)^n P(N = k)` over `k <= λ + 40√λ + 50`.
pub fn central_moment_bruteforce(n: usize, lambda: f64) -> f64 {
    let ln_l = lambda.ln();
    (0..=pmf_truncation(lambda))
        .map(|k| {
            let kf = k as f64;
            let p = (kf * ln_l - lambda - ln_gamma(kf + 1.0)).exp();
            (kf - lambda).powi(n as i32) * p
        })
        .sum()
}
