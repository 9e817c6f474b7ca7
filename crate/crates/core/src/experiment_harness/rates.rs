use std::time::Instant;

use crate::error::{Error, Result};
use crate::reference_oracles::{neumann_moment_curve_with, MomentKind, NeumannOptions, SingularDriftParams};
use crate::sde_engine::{grid_eval_times, strong_error_sample};
use crate::stochastic_grid::{sample_jump_grid, GridBrownian, PathStream, StreamTag};
use crate::sve_engine::cp_sve_values;

use super::config::{ExperimentConfig, ExperimentKind, TrackedMoment};
use super::stats::{map_paths, ols, rung_seed, Estimate, LineFit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungError {
    pub epsilon: f64,
    /// Mean over paths of `max_t |X^eps_t - X_t|^2`.
    pub sup_sq_error: Estimate,
    pub singular_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rungs: Vec<RungError>,
    /// Fit of `ln error` against `ln epsilon`; `None` when degenerate.
    pub fit: Option<LineFit>,
    /// Every rung had zero error, so no slope exists.
    pub degenerate: bool,
    pub theoretical_slope: f64,
    pub slope_band: [f64; 2],
    pub wall_seconds: f64,
}

impl ConvergenceReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn pass(&self) -> bool {
        self.rungs.iter().all(|r| r.singular_hits == 0)
            && self
                .slope()
                .is_some_and(|s| s >= self.slope_band[0] && s <= self.slope_band[1])
    }
}

/// `γ ∧ 1/2` for the singular-drift model, where `γ = 1 - max` of the
/// exponents of the nonzero drift pieces (`γ = 1` without drift).
pub fn theoretical_strong_slope(p: &SingularDriftParams) -> f64 {
    let mut worst: f64 = 0.0;
    if p.mu0 != 0.0 {
        worst = worst.max(p.alpha);
    }
    if p.mu1 != 0.0 {
        worst = worst.max(p.beta);
    }
    (1.0 - worst).min(0.5)
}

/// Coupled strong errors of the compound Poisson scheme against the exact
/// solution of the singular-drift SDE over the epsilon ladder. The supremum
/// is taken over the grid `j eps` and the horizon.
pub fn run_strong_rate(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let cfg = cfg.clone().for_kind(ExperimentKind::SdeStrongRate)?;
    cfg.validate()?;
    let started = Instant::now();
    let params = cfg.singular_drift;
    let model = params.sde_model();
    let exact = params.exact_solution();
    let mut rungs = Vec::new();
    for (r, &eps) in cfg.epsilon_ladder.iter().enumerate() {
        let seed = rung_seed(cfg.master_seed, r);
        let eval = grid_eval_times(eps, cfg.horizon);
        let grid_len = (cfg.horizon / eps).ceil() as usize;
        let samples = map_paths(cfg.n_paths, |path| -> Result<std::result::Result<f64, ()>> {
            let mut stream = PathStream::new(seed, path);
            let x0 = [cfg.x0.sample(&mut stream.auxiliary(StreamTag::InitialValue))];
            let grid = sample_jump_grid(eps, cfg.horizon, &mut stream)?;
            let mut brownian = GridBrownian::new(eps, 1)?;
            brownian.sample_increments(grid.count_cutoff().max(grid_len), &mut stream);
            let mut bridge = stream.auxiliary(StreamTag::Bridge);
            match strong_error_sample(&model, &x0, &exact, &grid, &brownian, &eval, &mut bridge) {
                Ok(s) => Ok(Ok(s.sup_sq_error)),
                Err(Error::SingularHit { .. }) => Ok(Err(())),
                Err(e) => Err(e),
            }
        });
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        rungs.push(RungError {
            epsilon: eps,
            sup_sq_error: Estimate::from_values(samples.iter().filter_map(|s| s.ok())),
            singular_hits: samples.iter().filter(|s| s.is_err()).count(),
        });
    }
    let degenerate = rungs.iter().all(|r| r.sup_sq_error.mean == 0.0);
    let x: Vec<f64> = rungs.iter().map(|r| r.epsilon.ln()).collect();
    let y: Vec<f64> = rungs.iter().map(|r| r.sup_sq_error.mean.ln()).collect();
    Ok(ConvergenceReport {
        fit: if degenerate { None } else { ols(&x, &y) },
        rungs,
        degenerate,
        theoretical_slope: theoretical_strong_slope(&params),
        slope_band: cfg.checks.slope_band,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakRung {
    pub epsilon: f64,
    /// Monte Carlo estimate per eval time.
    pub estimates: Vec<Estimate>,
    pub singular_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakErrorReport {
    pub moment: TrackedMoment,
    pub eval_times: Vec<f64>,
    pub reference: Vec<f64>,
    pub rungs: Vec<WeakRung>,
    /// Upper-bound exponent `γ / (2(2+γ))`, using the heuristic
    /// `γ = 1 - α - β` of the drift or diffusion pair in use. Informational.
    pub bound_exponent: f64,
    pub wall_seconds: f64,
}

impl WeakErrorReport {
    /// `|estimate - reference|` per rung at eval time `i`.
    pub fn abs_errors(&self, i: usize) -> Vec<f64> {
        self.rungs
            .iter()
            .map(|r| (r.estimates[i].mean - self.reference[i]).abs())
            .collect()
    }

    /// Strictly decreasing absolute error down the ladder at eval time `i`.
    pub fn monotone_at(&self, i: usize) -> bool {
        self.abs_errors(i).windows(2).all(|w| w[1] < w[0])
    }
}

/// Weak error of the compound Poisson scheme for the linear singular
/// Volterra equation, measured against the Neumann-series moment curve.
pub fn run_weak_rate(cfg: &ExperimentConfig) -> Result<WeakErrorReport> {
    let cfg = cfg.clone().for_kind(ExperimentKind::SveWeakRate)?;
    cfg.validate()?;
    let started = Instant::now();
    let params = cfg.volterra_params();
    let which = match cfg.moment {
        TrackedMoment::Mean => MomentKind::Mean,
        TrackedMoment::SecondMoment => MomentKind::SecondMoment,
    };
    let curve = neumann_moment_curve_with(
        &params,
        which,
        &cfg.eval_times,
        cfg.oracle.tol,
        cfg.oracle.max_terms,
        &NeumannOptions::with_step(cfg.oracle.step),
    )?;
    let model = params.sve_model();
    let power = if which == MomentKind::Mean { 1 } else { 2 };
    let mut rungs = Vec::new();
    for (r, &eps) in cfg.epsilon_ladder.iter().enumerate() {
        let seed = rung_seed(cfg.master_seed, r);
        let samples = map_paths(cfg.n_paths, |path| -> Result<Option<Vec<f64>>> {
            let mut stream = PathStream::new(seed, path);
            let x0 = [cfg.x0.sample(&mut stream.auxiliary(StreamTag::InitialValue))];
            let grid = sample_jump_grid(eps, cfg.horizon, &mut stream)?;
            let mut brownian = GridBrownian::new(eps, 1)?;
            brownian.sample_increments(grid.count_cutoff(), &mut stream);
            match cp_sve_values(&model, &x0, &grid, &brownian, &cfg.eval_times) {
                Ok(v) => Ok(Some((0..v.len()).map(|i| v.value(i)[0].powi(power)).collect())),
                Err(Error::SingularHit { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        });
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        let estimates = (0..cfg.eval_times.len())
            .map(|i| Estimate::from_values(samples.iter().flatten().map(|v| v[i])))
            .collect();
        rungs.push(WeakRung {
            epsilon: eps,
            estimates,
            singular_hits: samples.iter().filter(|s| s.is_none()).count(),
        });
    }
    let (alpha, beta) = match which {
        MomentKind::Mean => (params.alpha0, params.beta0),
        MomentKind::SecondMoment => (params.alpha1, params.beta1),
    };
    let gamma = 1.0 - alpha - beta;
    Ok(WeakErrorReport {
        moment: cfg.moment,
        eval_times: cfg.eval_times.clone(),
        reference: curve.values,
        rungs,
        bound_exponent: gamma / (2.0 * (2.0 + gamma)),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
