use std::time::Instant;

use crate::error::{Error, Result};
use crate::reference_oracles::{
    exact_linear_mean, exact_linear_second_moment, neumann_moment_curve_with, MomentKind, NeumannOptions,
    NeumannReport,
};
use crate::sde_engine::{cp_sde_path, em_sde_path, scheme_state_at};
use crate::stochastic_grid::{sample_jump_grid, GridBrownian, PathStream, StreamTag};
use crate::sve_engine::{cp_sve_values, em_sve_values};

use super::config::{ExperimentConfig, ExperimentKind};
use super::stats::{map_paths, Estimate};

/// Monte Carlo mean and second moment of one scheme at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeMoments {
    pub mean: Estimate,
    pub second: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub cp: SchemeMoments,
    pub em: Option<SchemeMoments>,
    pub reference_mean: Option<f64>,
    pub reference_second: Option<f64>,
}

impl MomentRow {
    pub fn cp_mean_z(&self) -> Option<f64> {
        self.reference_mean.map(|r| self.cp.mean.z_score(r))
    }

    pub fn cp_second_z(&self) -> Option<f64> {
        self.reference_second.map(|r| self.cp.second.z_score(r))
    }

    pub fn em_mean_z(&self) -> Option<f64> {
        Some(self.em?.mean.z_score(self.reference_mean?))
    }

    pub fn em_second_z(&self) -> Option<f64> {
        Some(self.em?.second.z_score(self.reference_second?))
    }
}

/// Per-scheme path accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeTally {
    pub paths: usize,
    /// Paths aborted on a non-finite coefficient.
    pub singular_hits: usize,
    /// Integration time of the first recorded hit (lowest path index).
    pub first_hit_time: Option<f64>,
    /// Mean number of time points per surviving path.
    pub mean_points: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub kind: ExperimentKind,
    pub n_paths: usize,
    pub epsilon: f64,
    pub em_step: Option<f64>,
    pub rows: Vec<MomentRow>,
    pub cp: SchemeTally,
    pub em: Option<SchemeTally>,
    /// Series diagnostics of the Volterra references (mean, second moment).
    pub series: Vec<(MomentKind, NeumannReport)>,
    pub wall_seconds: f64,
}

/// One acceptance comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCheck {
    pub t: f64,
    pub quantity: &'static str,
    pub estimate: Estimate,
    pub reference: f64,
    pub allowance: f64,
    pub pass: bool,
}

impl MomentReport {
    /// Compares the compound Poisson moments with the references:
    /// `|mc - ref| <= k se + rel |ref|`.
    pub fn cp_band_checks(&self, k: f64, rel: f64) -> Vec<BandCheck> {
        let mut out = Vec::new();
        for row in &self.rows {
            let pairs = [
                ("mean", row.cp.mean, row.reference_mean),
                ("second-moment", row.cp.second, row.reference_second),
            ];
            for (quantity, estimate, reference) in pairs {
                if let Some(reference) = reference {
                    out.push(BandCheck {
                        t: row.t,
                        quantity,
                        estimate,
                        reference,
                        allowance: k * estimate.se + rel * reference.abs(),
                        pass: estimate.within(reference, k, rel),
                    });
                }
            }
        }
        out
    }

    pub fn cp_passes(&self, k: f64, rel: f64) -> bool {
        self.cp.singular_hits == 0 && self.cp_band_checks(k, rel).iter().all(|c| c.pass)
    }
}

/// Values `x_t` (then `x_t^2`) at each eval time for one path, or the
/// integration time of a singular hit.
type PathValues = std::result::Result<(Vec<f64>, usize), f64>;

struct PathOutcome {
    cp: PathValues,
    em: Option<PathValues>,
}

fn hit_time(e: &Error) -> Option<f64> {
    match e {
        Error::SingularHit { time, .. } => Some(*time),
        _ => None,
    }
}

fn collect(result: Result<(Vec<f64>, usize)>) -> Result<PathValues> {
    match result {
        Ok(v) => Ok(Ok(v)),
        Err(e) => hit_time(&e).map(Err).ok_or(e),
    }
}

fn tally(outcomes: &[&PathValues]) -> SchemeTally {
    let hits = outcomes.iter().filter(|o| o.is_err()).count();
    let survivors: Vec<usize> = outcomes.iter().filter_map(|o| o.as_ref().ok().map(|v| v.1)).collect();
    SchemeTally {
        paths: outcomes.len(),
        singular_hits: hits,
        first_hit_time: outcomes.iter().find_map(|o| o.as_ref().err().copied()),
        mean_points: if survivors.is_empty() {
            0.0
        } else {
            survivors.iter().sum::<usize>() as f64 / survivors.len() as f64
        },
    }
}

fn moments_at(outcomes: &[&PathValues], i: usize) -> SchemeMoments {
    let values = || outcomes.iter().filter_map(move |o| o.as_ref().ok().map(|v| v.0[i]));
    SchemeMoments {
        mean: Estimate::from_values(values()),
        second: Estimate::from_values(values().map(|x| x * x)),
    }
}

fn assemble(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    outcomes: Vec<Result<PathOutcome>>,
    references: (Vec<Option<f64>>, Vec<Option<f64>>),
    series: Vec<(MomentKind, NeumannReport)>,
    started: Instant,
) -> Result<MomentReport> {
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let cp: Vec<&PathValues> = outcomes.iter().map(|o| &o.cp).collect();
    let em: Option<Vec<&PathValues>> = cfg
        .run_em
        .then(|| outcomes.iter().map(|o| o.em.as_ref().expect("baseline ran")).collect());
    let rows = cfg
        .eval_times
        .iter()
        .enumerate()
        .map(|(i, &t)| MomentRow {
            t,
            cp: moments_at(&cp, i),
            em: em.as_ref().map(|em| moments_at(em, i)),
            reference_mean: references.0[i],
            reference_second: references.1[i],
        })
        .collect();
    Ok(MomentReport {
        kind,
        n_paths: cfg.n_paths,
        epsilon: cfg.epsilon.unwrap_or(f64::NAN),
        em_step: cfg.run_em.then(|| cfg.em_step()).flatten(),
        rows,
        cp: tally(&cp),
        em: em.as_ref().map(|em| tally(em)),
        series,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn initial_value(cfg: &ExperimentConfig, stream: &PathStream) -> f64 {
    cfg.x0.sample(&mut stream.auxiliary(StreamTag::InitialValue))
}

/// Both schemes for the singular-drift linear SDE against its closed-form
/// moments. The baseline draws its own Brownian increments.
pub fn run_sde_moments(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let cfg = cfg.clone().for_kind(ExperimentKind::SdeMoments)?;
    cfg.validate()?;
    let started = Instant::now();
    let params = cfg.singular_drift;
    let (m1, m2) = (cfg.x0.mean(), cfg.x0.second_moment());
    let reference_mean = cfg
        .eval_times
        .iter()
        .map(|&t| exact_linear_mean(&params, t, m1).map(Some))
        .collect::<Result<Vec<_>>>()?;
    let reference_second = cfg
        .eval_times
        .iter()
        .map(|&t| exact_linear_second_moment(&params, t, m2).map(Some))
        .collect::<Result<Vec<_>>>()?;

    let eps = cfg.epsilon.expect("validated");
    let model = params.sde_model();
    let em_steps = cfg.em_step().map(|h| (cfg.horizon / h - 1e-9).ceil() as usize);
    let outcomes = map_paths(cfg.n_paths, |path| -> Result<PathOutcome> {
        let mut stream = PathStream::new(cfg.master_seed, path);
        let x0 = [initial_value(&cfg, &stream)];
        let grid = sample_jump_grid(eps, cfg.horizon, &mut stream)?;
        let mut brownian = GridBrownian::new(eps, 1)?;
        brownian.sample_increments(grid.count_cutoff(), &mut stream);
        let cp = collect(cp_sde_path(&model, &x0, &grid, &brownian).map(|p| {
            let v = cfg.eval_times.iter().map(|&t| scheme_state_at(&p, t)[0]).collect();
            (v, p.len())
        }))?;
        let em = if cfg.run_em {
            let h = cfg.em_step().expect("validated");
            let steps = em_steps.expect("validated");
            let mut b = GridBrownian::new(h, 1)?;
            b.sample_increments(steps, &mut stream.auxiliary(StreamTag::Baseline));
            Some(collect(em_sde_path(&model, &x0, h, steps, &b).map(|p| {
                let v = cfg.eval_times.iter().map(|&t| scheme_state_at(&p, t)[0]).collect();
                (v, p.len())
            }))?)
        } else {
            None
        };
        Ok(PathOutcome { cp, em })
    });
    assemble(
        &cfg,
        ExperimentKind::SdeMoments,
        outcomes,
        (reference_mean, reference_second),
        Vec::new(),
        started,
    )
}

/// Both schemes for the linear singular Volterra equation against the
/// Neumann-series curves (second moment only when `mu = 0`).
pub fn run_sve_moments(cfg: &ExperimentConfig) -> Result<MomentReport> {
    let cfg = cfg.clone().for_kind(ExperimentKind::SveMoments)?;
    cfg.validate()?;
    let started = Instant::now();
    let params = cfg.volterra_params();
    let opts = NeumannOptions::with_step(cfg.oracle.step);
    let curve = |which| {
        neumann_moment_curve_with(&params, which, &cfg.eval_times, cfg.oracle.tol, cfg.oracle.max_terms, &opts)
    };
    let mut series = Vec::new();
    let mean = curve(MomentKind::Mean)?;
    let reference_mean = mean.values.iter().map(|&v| Some(v)).collect();
    series.push((MomentKind::Mean, mean.report));
    let reference_second = if params.mu == 0.0 {
        let second = curve(MomentKind::SecondMoment)?;
        let values = second.values.iter().map(|&v| Some(v)).collect();
        series.push((MomentKind::SecondMoment, second.report));
        values
    } else {
        vec![None; cfg.eval_times.len()]
    };

    let eps = cfg.epsilon.expect("validated");
    let model = params.sve_model();
    let em_steps = if cfg.run_em {
        let h = cfg.em_step().expect("validated");
        let mut steps = 0usize;
        for &t in &cfg.eval_times {
            let i = (t / h).round();
            if (i * h - t).abs() > 1e-9 * h {
                return Err(Error::Config(format!("eval time {t} is not a multiple of em-step {h}")));
            }
            steps = steps.max(i as usize);
        }
        Some(steps)
    } else {
        None
    };
    let outcomes = map_paths(cfg.n_paths, |path| -> Result<PathOutcome> {
        let mut stream = PathStream::new(cfg.master_seed, path);
        let x0 = [initial_value(&cfg, &stream)];
        let grid = sample_jump_grid(eps, cfg.horizon, &mut stream)?;
        let mut brownian = GridBrownian::new(eps, 1)?;
        brownian.sample_increments(grid.count_cutoff(), &mut stream);
        let cp = collect(
            cp_sve_values(&model, &x0, &grid, &brownian, &cfg.eval_times)
                .map(|r| ((0..r.len()).map(|i| r.value(i)[0]).collect(), grid.count_cutoff())),
        )?;
        let em = match em_steps {
            Some(steps) => {
                let h = cfg.em_step().expect("validated");
                let mut b = GridBrownian::new(h, 1)?;
                b.sample_increments(steps, &mut stream.auxiliary(StreamTag::Baseline));
                Some(collect(
                    em_sve_values(&model, &x0, h, &cfg.eval_times, &b)
                        .map(|r| ((0..r.len()).map(|i| r.value(i)[0]).collect(), steps)),
                )?)
            }
            None => None,
        };
        Ok(PathOutcome { cp, em })
    });
    assemble(
        &cfg,
        ExperimentKind::SveMoments,
        outcomes,
        (reference_mean, reference_second),
        series,
        started,
    )
}
