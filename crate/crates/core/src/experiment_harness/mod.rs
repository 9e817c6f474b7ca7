//! Monte Carlo experiments: configuration, seeded parallel runs, estimators
//! and CSV output.

pub mod config;
pub mod lemma;
pub mod moments;
pub mod output;
pub mod rates;
pub mod stats;
pub mod tables;

pub use config::{ExperimentConfig, ExperimentKind, InitialLaw, TrackedMoment};
pub use lemma::{poisson_identity_checks, run_lemma_checks, LemmaReport};
pub use moments::{run_sde_moments, run_sve_moments, MomentReport};
pub use output::{emit_outputs, Report};
pub use rates::{run_strong_rate, run_weak_rate, ConvergenceReport, WeakErrorReport};
pub use stats::{Estimate, LineFit};
pub use tables::{run_kernel_table, run_oracle, KernelTable, OracleCurves};

use crate::error::Result;

/// Runs the experiment named by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let kind = cfg
        .kind
        .ok_or_else(|| crate::Error::Config("experiment kind not set".into()))?;
    Ok(match kind {
        ExperimentKind::SdeMoments => Report::Moments(run_sde_moments(cfg)?),
        ExperimentKind::SveMoments => Report::Moments(run_sve_moments(cfg)?),
        ExperimentKind::SdeStrongRate => Report::StrongRate(run_strong_rate(cfg)?),
        ExperimentKind::SveWeakRate => Report::WeakRate(run_weak_rate(cfg)?),
        ExperimentKind::LemmaChecks => Report::Lemma(run_lemma_checks(cfg)?),
        ExperimentKind::KernelTable => Report::Kernel(run_kernel_table(cfg)?),
        ExperimentKind::Oracle => Report::Oracle(run_oracle(cfg)?),
    })
}

impl Report {
    /// Outcome of the run's statistical checks under `checks`.
    pub fn passes(&self, checks: &config::CheckSettings) -> bool {
        match self {
            Report::Moments(r) => r.cp_passes(checks.se_multiple, checks.relative_band),
            Report::StrongRate(r) => r.pass(),
            Report::WeakRate(r) => (0..r.eval_times.len()).all(|i| r.monotone_at(i)),
            Report::Lemma(r) => r.pass(),
            Report::Kernel(r) => r.max_table_gap() < 1e-8,
            Report::Oracle(r) => {
                r.mean.report.terms_nonnegative && r.second.as_ref().is_none_or(|c| c.report.terms_nonnegative)
            }
        }
    }

    /// One-line human summary, including wall time where measured.
    pub fn summary(&self) -> String {
        match self {
            Report::Moments(r) => format!(
                "{}: {} paths, epsilon {}, cp singular hits {}, em singular hits {}, {:.2} s",
                r.kind.as_str(),
                r.n_paths,
                r.epsilon,
                r.cp.singular_hits,
                r.em.map_or("-".to_string(), |e| e.singular_hits.to_string()),
                r.wall_seconds
            ),
            Report::StrongRate(r) => format!(
                "strong rate: slope {} (theoretical {}), {} rungs, {:.2} s",
                r.slope().map_or("undefined".to_string(), |s| format!("{s:.4}")),
                r.theoretical_slope,
                r.rungs.len(),
                r.wall_seconds
            ),
            Report::WeakRate(r) => format!(
                "weak rate: {} rungs over {} times, bound exponent {:.4}, {:.2} s",
                r.rungs.len(),
                r.eval_times.len(),
                r.bound_exponent,
                r.wall_seconds
            ),
            Report::Lemma(r) => format!(
                "lemma checks: {}/{} bounds, {}/{} identities",
                r.bounds.iter().filter(|b| b.pass).count(),
                r.bounds.len(),
                r.identities.iter().filter(|b| b.pass).count(),
                r.identities.len()
            ),
            Report::Kernel(r) => format!(
                "kernel table: {} rows, {} rate reports, max table gap {:e}",
                r.rows.len(),
                r.rates.len(),
                r.max_table_gap()
            ),
            Report::Oracle(r) => format!(
                "oracle: {} times, {} mean terms",
                r.times.len(),
                r.mean.report.n_terms_used
            ),
        }
    }
}
