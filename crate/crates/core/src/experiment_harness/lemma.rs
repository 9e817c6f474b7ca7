use crate::error::Result;
use crate::stochastic_grid::{sample_jump_grid, PathStream, UniformSource};

use super::config::{ExperimentConfig, ExperimentKind, LemmaLattice};
use super::stats::{map_paths, rung_seed, Estimate};

/// A lattice point of one of the two moment bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCase {
    /// `E|r^α - (S_k^ε)^α|^β` at `r = kε` against `(kε)^{αβ} k^{-β/2}`.
    EpochPower { alpha: f64, beta: f64, k: usize, epsilon: f64 },
    /// `E|𝒩_t^ε - t|^p` against `ε^{p/2} (t^{p/2} ∨ t)`.
    ClockMoment { p: u32, t: f64, epsilon: f64 },
}

impl BoundCase {
    pub fn name(&self) -> &'static str {
        match self {
            BoundCase::EpochPower { .. } => "epoch-power",
            BoundCase::ClockMoment { .. } => "clock-moment",
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            BoundCase::EpochPower { alpha, beta, k, epsilon } => {
                let k = k as f64;
                (k * epsilon).powf(alpha * beta) * k.powf(-beta / 2.0)
            }
            BoundCase::ClockMoment { p, t, epsilon } => {
                let half = f64::from(p) / 2.0;
                epsilon.powf(half) * t.powf(half).max(t)
            }
        }
    }

    /// `key=value` pairs for tables.
    pub fn describe(&self) -> String {
        match *self {
            BoundCase::EpochPower { alpha, beta, k, epsilon } => {
                format!("alpha={alpha} beta={beta} k={k} epsilon={epsilon}")
            }
            BoundCase::ClockMoment { p, t, epsilon } => format!("p={p} t={t} epsilon={epsilon}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub case: BoundCase,
    pub estimate: Estimate,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// A Monte Carlo estimate of a quantity with a known exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub name: &'static str,
    pub case: BoundCase,
    pub estimate: Estimate,
    pub expected: f64,
    pub z: f64,
    pub pass: bool,
}

impl IdentityRow {
    fn new(name: &'static str, case: BoundCase, estimate: Estimate, expected: f64, k: f64) -> Self {
        Self {
            name,
            case,
            estimate,
            expected,
            z: estimate.z_score(expected),
            pass: estimate.within(expected, k, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub n_paths: usize,
    pub ratio_limit: f64,
    pub bounds: Vec<BoundRow>,
    pub identities: Vec<IdentityRow>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.bounds.iter().all(|r| r.pass) && self.identities.iter().all(|r| r.pass)
    }
}

/// Exact-identity checks use three standard errors.
pub const IDENTITY_SE_MULTIPLE: f64 = 3.0;

/// Samples of `𝒩_t^ε - t` for each `t`, one vector per path.
fn clock_deviations(seed: u64, n_paths: usize, epsilon: f64, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    map_paths(n_paths, |path| -> Result<Vec<f64>> {
        let mut stream = PathStream::new(seed, path);
        let grid = sample_jump_grid(epsilon, horizon, &mut stream)?;
        times
            .iter()
            .map(|&t| Ok(grid.rescaled_count(t)? - t))
            .collect()
    })
    .into_iter()
    .collect()
}

/// `E(𝒩_t^ε - t) = 0` and `E(𝒩_t^ε - t)^2 = εt` on the given lattice.
pub fn poisson_identity_checks(
    master_seed: u64,
    n_paths: usize,
    times: &[f64],
    epsilons: &[f64],
) -> Result<Vec<IdentityRow>> {
    let mut rows = Vec::new();
    for (r, &epsilon) in epsilons.iter().enumerate() {
        let samples = clock_deviations(rung_seed(master_seed, r), n_paths, epsilon, times)?;
        rows.extend(clock_identities(&samples, epsilon, times));
    }
    Ok(rows)
}

fn clock_identities(samples: &[Vec<f64>], epsilon: f64, times: &[f64]) -> Vec<IdentityRow> {
    let mut rows = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let dev = || samples.iter().map(move |v| v[i]);
        rows.push(IdentityRow::new(
            "clock-mean",
            BoundCase::ClockMoment { p: 1, t, epsilon },
            Estimate::from_values(dev()),
            0.0,
            IDENTITY_SE_MULTIPLE,
        ));
        rows.push(IdentityRow::new(
            "clock-variance",
            BoundCase::ClockMoment { p: 2, t, epsilon },
            Estimate::from_values(dev().map(|d| d * d)),
            epsilon * t,
            IDENTITY_SE_MULTIPLE,
        ));
    }
    rows
}

fn bound_row(case: BoundCase, estimate: Estimate, limit: f64) -> BoundRow {
    let bound = case.bound();
    let ratio = estimate.mean / bound;
    BoundRow {
        case,
        estimate,
        bound,
        ratio,
        pass: ratio.is_finite() && ratio <= limit,
    }
}

/// Ratios of Monte Carlo moments to the jump-epoch and clock bounds over
/// the lattice, plus the exact identities the bounds reduce to.
pub fn run_lemma_checks(cfg: &ExperimentConfig) -> Result<LemmaReport> {
    let cfg = cfg.clone().for_kind(ExperimentKind::LemmaChecks)?;
    cfg.validate()?;
    let LemmaLattice {
        alphas,
        betas,
        orders,
        jump_indices,
        times,
        epsilons,
        ratio_limit,
    } = &cfg.lemma;
    let n = cfg.n_paths;
    let mut bounds = Vec::new();
    let mut identities = Vec::new();

    // Unit-rate epochs S_k; the ε-epochs are ε S_k.
    let k_max = jump_indices.iter().copied().max().unwrap_or(0);
    let epoch_seed = rung_seed(cfg.master_seed, epsilons.len());
    let epochs: Vec<Vec<f64>> = map_paths(n, |path| {
        let mut stream = PathStream::new(epoch_seed, path);
        let mut partial = Vec::with_capacity(k_max + 1);
        partial.push(0.0);
        for _ in 0..k_max {
            let last = partial[partial.len() - 1];
            partial.push(last - stream.next_open01().ln());
        }
        jump_indices.iter().map(|&k| partial[k]).collect()
    });
    for &epsilon in epsilons {
        for (j, &k) in jump_indices.iter().enumerate() {
            let r = k as f64 * epsilon;
            let scaled = || epochs.iter().map(move |e| epsilon * e[j]);
            for &alpha in alphas {
                for &beta in betas {
                    let est = Estimate::from_values(scaled().map(|s| (r.powf(alpha) - s.powf(alpha)).abs().powf(beta)));
                    bounds.push(bound_row(BoundCase::EpochPower { alpha, beta, k, epsilon }, est, *ratio_limit));
                }
            }
            let case = BoundCase::EpochPower {
                alpha: 1.0,
                beta: 2.0,
                k,
                epsilon,
            };
            let est = Estimate::from_values(scaled().map(|s| (r - s) * (r - s)));
            identities.push(IdentityRow::new("epoch-variance", case, est, case.bound(), IDENTITY_SE_MULTIPLE));
        }
    }

    for (r, &epsilon) in epsilons.iter().enumerate() {
        let samples = clock_deviations(rung_seed(cfg.master_seed, r), n, epsilon, times)?;
        for (i, &t) in times.iter().enumerate() {
            for &p in orders {
                let est = Estimate::from_values(samples.iter().map(|v| v[i].abs().powi(p as i32)));
                bounds.push(bound_row(BoundCase::ClockMoment { p, t, epsilon }, est, *ratio_limit));
            }
        }
        identities.extend(clock_identities(&samples, epsilon, times));
    }
    Ok(LemmaReport {
        n_paths: n,
        ratio_limit: *ratio_limit,
        bounds,
        identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_at_hand_points() {
        let c = BoundCase::EpochPower {
            alpha: 1.0,
            beta: 2.0,
            k: 4,
            epsilon: 0.1,
        };
        assert!((c.bound() - 0.04).abs() < 1e-15);
        let c = BoundCase::ClockMoment { p: 2, t: 0.5, epsilon: 0.01 };
        assert!((c.bound() - 0.005).abs() < 1e-15);
        let c = BoundCase::ClockMoment { p: 4, t: 2.0, epsilon: 0.1 };
        assert!((c.bound() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn small_lattice_passes() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::LemmaChecks);
        cfg.n_paths = 4000;
        cfg.lemma.jump_indices = vec![1, 10];
        cfg.lemma.times = vec![0.5, 1.0];
        let r = run_lemma_checks(&cfg).unwrap();
        assert_eq!(r.bounds.len(), 2 * 2 * 2 * 2 + 2 * 2 * 3);
        assert!(r.pass(), "{:#?}", r.bounds.iter().filter(|b| !b.pass).collect::<Vec<_>>());
    }

    #[test]
    fn unsorted_indices_give_same_epochs() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::LemmaChecks);
        cfg.n_paths = 50;
        cfg.lemma.jump_indices = vec![1, 10];
        let a = run_lemma_checks(&cfg).unwrap();
        cfg.lemma.jump_indices = vec![10, 1];
        let b = run_lemma_checks(&cfg).unwrap();
        let find = |r: &LemmaReport, k: usize| {
            r.identities
                .iter()
                .find(|i| matches!(i.case, BoundCase::EpochPower { k: kk, epsilon, .. } if kk == k && epsilon == 0.1))
                .unwrap()
                .estimate
        };
        assert_eq!(find(&a, 10), find(&b, 10));
        assert_eq!(find(&a, 1), find(&b, 1));
    }
}
