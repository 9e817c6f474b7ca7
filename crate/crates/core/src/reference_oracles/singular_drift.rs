//! Linear SDE `dX = μ(t) X dt + σ0 X dW` with a drift that blows up at two
//! interior times:
//!
//! ```text
//! μ(s) = μ0 |s - s0|^{-α}  on (0, 1/2)
//!        μ1 |s - s1|^{-β}  on [1/2, 1]
//! ```
//!
//! The solution is `X_t = X_0 exp(M(t) - σ0² t / 2 + σ0 W_t)` with
//! `M(t) = ∫_0^t μ`, which has a closed-form antiderivative on each piece.

use crate::error::{Error, Result};
use crate::sde_engine::{ExactSolution, ScalarSde, SdeModel};

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SingularDriftParams {
    pub sigma0: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub s0: f64,
    pub s1: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SingularDriftParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SingularDriftParams {
    /// σ0 = 0.1, μ0 = 0.3, μ1 = 0.7, s0 = 0.4, s1 = 0.6, α = β = 0.5.
    pub fn reference() -> Self {
        Self {
            sigma0: 0.1,
            mu0: 0.3,
            mu1: 0.7,
            s0: 0.4,
            s1: 0.6,
            alpha: 0.5,
            beta: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma0, self.mu0, self.mu1].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("drift parameters must be finite"));
        }
        if !(self.s0 > 0.0 && self.s0 < 0.5) || !(self.s1 > 0.5 && self.s1 < 1.0) {
            return Err(Error::param("need s0 in (0, 1/2) and s1 in (1/2, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("need alpha, beta in (0, 1)"));
        }
        Ok(())
    }

    /// `μ(s)`; infinite exactly at `s0` and `s1`.
    pub fn mu(&self, s: f64) -> f64 {
        if s < 0.5 {
            if self.mu0 == 0.0 {
                0.0
            } else {
                self.mu0 * (s - self.s0).abs().powf(-self.alpha)
            }
        } else if self.mu1 == 0.0 {
            0.0
        } else {
            self.mu1 * (s - self.s1).abs().powf(-self.beta)
        }
    }

    pub fn sde_model(&self) -> impl SdeModel + '_ {
        let sigma0 = self.sigma0;
        ScalarSde::new(move |t, x| self.mu(t) * x, move |_, x| sigma0 * x)
            .with_singular_times(vec![self.s0, self.s1])
    }

    /// Exact solution driven by `W_t`, for the strong-error coupling.
    pub fn exact_solution(&self) -> impl ExactSolution + '_ {
        move |t: f64, x0: &[f64], w: &[f64], out: &mut [f64]| {
            out[0] = exact_linear_path_value(self, x0[0], t, w[0]).unwrap_or(f64::NAN);
        }
    }
}

/// `m sign(s - a) |s - a|^{1-p} / (1-p)`, an antiderivative of `m |s - a|^{-p}`.
fn antiderivative(s: f64, m: f64, a: f64, p: f64) -> f64 {
    let d = s - a;
    m * d.signum() * d.abs().powf(1.0 - p) / (1.0 - p)
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange { t, horizon: 1.0 })
    }
}

/// `∫_0^t μ(s) ds` for `t ∈ [0, 1]`.
pub fn mu_integral(p: &SingularDriftParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let first = |u: f64| antiderivative(u, p.mu0, p.s0, p.alpha);
    let second = |u: f64| antiderivative(u, p.mu1, p.s1, p.beta);
    Ok(if t <= 0.5 {
        first(t) - first(0.0)
    } else {
        (first(0.5) - first(0.0)) + (second(t) - second(0.5))
    })
}

/// `x0 exp(M(t) - σ0² t / 2 + σ0 w_t)`.
pub fn exact_linear_path_value(p: &SingularDriftParams, x0: f64, t: f64, w_t: f64) -> Result<f64> {
    let m = mu_integral(p, t)?;
    Ok(x0 * (m - 0.5 * p.sigma0 * p.sigma0 * t + p.sigma0 * w_t).exp())
}

/// `E X_t = E X_0 exp(M(t))`.
pub fn exact_linear_mean(p: &SingularDriftParams, t: f64, x0_mean: f64) -> Result<f64> {
    Ok(x0_mean * mu_integral(p, t)?.exp())
}

/// `E X_t² = E X_0² exp(2 M(t) + σ0² t)`.
pub fn exact_linear_second_moment(p: &SingularDriftParams, t: f64, x0_sq_mean: f64) -> Result<f64> {
    Ok(x0_sq_mean * (2.0 * mu_integral(p, t)? + p.sigma0 * p.sigma0 * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, graded, GradedOptions};

    fn quad_mu(p: &SingularDriftParams, t: f64) -> f64 {
        // split at the singular points and at 1/2
        let mut cuts = vec![0.0];
        for c in [p.s0, 0.5, p.s1] {
            if c < t {
                cuts.push(c);
            }
        }
        cuts.push(t);
        cuts.windows(2)
            .map(|w| {
                let exp = |x: f64| {
                    if x == p.s0 {
                        Some(-p.alpha)
                    } else if x == p.s1 {
                        Some(-p.beta)
                    } else {
                        None
                    }
                };
                let (left, right) = (exp(w[0]), exp(w[1]));
                if left.is_none() && right.is_none() {
                    // a singular point may sit just beyond the panel
                    adaptive(|s| p.mu(s), w[0], w[1], 1e-14, 1e-13)
                } else {
                    graded(|s| p.mu(s), w[0], w[1], left, right, GradedOptions::default())
                }
            })
            .sum()
    }

    #[test]
    fn hand_value_at_first_singularity() {
        let p = SingularDriftParams::reference();
        assert_eq!(mu_integral(&p, 0.0).unwrap(), 0.0);
        let v = mu_integral(&p, 0.4).unwrap();
        assert!((v - 0.379_473_319_220_205_519_84).abs() < 1e-14);
        assert!((v - quad_mu(&p, 0.4)).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature_on_lattice() {
        let p = SingularDriftParams::reference();
        for i in 0..=1000 {
            let t = i as f64 * 1e-3;
            let a = mu_integral(&p, t).unwrap();
            assert!((a - quad_mu(&p, t)).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn continuous_and_increasing_across_singularities() {
        let p = SingularDriftParams::reference();
        for c in [p.s0, 0.5, p.s1] {
            let lo = mu_integral(&p, c - 1e-6).unwrap();
            let mid = mu_integral(&p, c).unwrap();
            let hi = mu_integral(&p, c + 1e-6).unwrap();
            assert!(lo < mid && mid < hi);
            assert!(hi - lo < 1e-2);
        }
    }

    #[test]
    fn range_checked() {
        let p = SingularDriftParams::reference();
        assert!(mu_integral(&p, 1.5).is_err());
        assert!(mu_integral(&p, -0.1).is_err());
        assert!(exact_linear_mean(&p, 2.0, 1.0).is_err());
    }

    #[test]
    fn exact_path_cases() {
        let p = SingularDriftParams {
            sigma0: 0.0,
            mu0: 0.0,
            mu1: 0.0,
            ..SingularDriftParams::reference()
        };
        assert_eq!(exact_linear_path_value(&p, 2.0, 0.7, 1.3).unwrap(), 2.0);
        let p = SingularDriftParams::reference();
        let v = exact_linear_path_value(&p, 1.0, 1.0, 0.0).unwrap();
        assert!((v - (mu_integral(&p, 1.0).unwrap() - 0.005).exp()).abs() < 1e-15);
    }

    #[test]
    fn moments_at_origin_and_cauchy_schwarz() {
        let p = SingularDriftParams::reference();
        assert_eq!(exact_linear_mean(&p, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(exact_linear_second_moment(&p, 0.0, 1.0).unwrap(), 1.0);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let m = exact_linear_mean(&p, t, 1.0).unwrap();
            assert!(m * m <= exact_linear_second_moment(&p, t, 1.0).unwrap());
        }
        let m1 = exact_linear_mean(&p, 1.0, 1.0).unwrap();
        assert!((m1 - quad_mu(&p, 1.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(SingularDriftParams::reference().validate().is_ok());
        let bad = SingularDriftParams {
            s0: 0.6,
            ..SingularDriftParams::reference()
        };
        assert!(bad.validate().is_err());
        let bad = SingularDriftParams {
            alpha: 1.0,
            ..SingularDriftParams::reference()
        };
        assert!(bad.validate().is_err());
    }
}
