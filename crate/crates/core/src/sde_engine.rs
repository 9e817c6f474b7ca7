//! Compound Poisson approximation and Euler–Maruyama baseline for
//! `X_t = X_0 + ∫ σ(s, X_s) dW_s + ∫ b(s, X_s) ds`.
//!
//! The compound Poisson scheme updates only at the jump epochs `S_k` of the
//! rescaled clock:
//!
//! ```text
//! X_k = X_{k-1} + σ(S_k, X_{k-1}) ΔW_k + eps * b(S_k, X_{k-1})
//! ```
//!
//! where `ΔW_k = W_{k eps} - W_{(k-1) eps}` is the `k`-th increment of the
//! deterministic grid, not the Brownian increment over `(S_{k-1}, S_k]`.
//! Coefficients are only ever evaluated at the random epochs, so a drift
//! singular at a fixed time is never hit.

use crate::error::{Error, Result};
use crate::stochastic_grid::{GaussianSource, GridBrownian, JumpGrid};

/// Coefficients of an SDE on `R^d` driven by an `m`-dimensional Brownian
/// motion. The diffusion is written row-major into a `d * m` buffer.
pub trait SdeModel: Sync {
    fn dim_d(&self) -> usize;
    fn dim_m(&self) -> usize;
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Times at which the coefficients are known to blow up.
    fn singular_times(&self) -> &[f64] {
        &[]
    }
}

/// One-dimensional model built from scalar closures.
pub struct ScalarSde<B, S> {
    drift: B,
    diffusion: S,
    singular_times: Vec<f64>,
}

impl<B, S> ScalarSde<B, S>
where
    B: Fn(f64, f64) -> f64 + Sync,
    S: Fn(f64, f64) -> f64 + Sync,
{
    pub fn new(drift: B, diffusion: S) -> Self {
        Self {
            drift,
            diffusion,
            singular_times: Vec::new(),
        }
    }

    pub fn with_singular_times(mut self, times: Vec<f64>) -> Self {
        self.singular_times = times;
        self
    }
}

impl<B, S> SdeModel for ScalarSde<B, S>
where
    B: Fn(f64, f64) -> f64 + Sync,
    S: Fn(f64, f64) -> f64 + Sync,
{
    fn dim_d(&self) -> usize {
        1
    }
    fn dim_m(&self) -> usize {
        1
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.drift)(t, x[0]);
    }
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.diffusion)(t, x[0]);
    }
    fn singular_times(&self) -> &[f64] {
        &self.singular_times
    }
}

/// General model from slice-based closures.
pub struct FnSde<B, S> {
    dim_d: usize,
    dim_m: usize,
    drift: B,
    diffusion: S,
}

impl<B, S> FnSde<B, S>
where
    B: Fn(f64, &[f64], &mut [f64]) + Sync,
    S: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim_d: usize, dim_m: usize, drift: B, diffusion: S) -> Self {
        Self {
            dim_d,
            dim_m,
            drift,
            diffusion,
        }
    }
}

impl<B, S> SdeModel for FnSde<B, S>
where
    B: Fn(f64, &[f64], &mut [f64]) + Sync,
    S: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dim_d(&self) -> usize {
        self.dim_d
    }
    fn dim_m(&self) -> usize {
        self.dim_m
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpretation {
    /// Value holds from its time until the next record (scheme output).
    LeftConstant,
    /// Value is only meaningful at its own time (exact solutions).
    Pointwise,
}

/// Time-indexed states of one trajectory, stored flat with stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    dim: usize,
    initial: Vec<f64>,
    times: Vec<f64>,
    values: Vec<f64>,
    interpretation: Interpretation,
}

impl PathSample {
    pub fn new(
        initial: Vec<f64>,
        times: Vec<f64>,
        values: Vec<f64>,
        interpretation: Interpretation,
    ) -> Result<Self> {
        let dim = initial.len();
        if dim == 0 || values.len() != times.len() * dim {
            return Err(Error::param("path values do not match times and dimension"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("path times must be strictly increasing"));
        }
        Ok(Self {
            dim,
            initial,
            times,
            values,
            interpretation,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    /// State after record `i` (0-based).
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Last recorded state, or the initial state for an empty path.
    pub fn terminal(&self) -> &[f64] {
        match self.times.len() {
            0 => &self.initial,
            n => self.value(n - 1),
        }
    }
}

/// Value at the largest recorded time `<= t`; the initial state before the
/// first record.
pub fn scheme_state_at(path: &PathSample, t: f64) -> &[f64] {
    match path.times.partition_point(|&s| s <= t) {
        0 => &path.initial,
        i => path.value(i - 1),
    }
}

fn check_dims(model: &dyn SdeModel, x0: &[f64], brownian: &GridBrownian) -> Result<()> {
    if x0.len() != model.dim_d() {
        return Err(Error::param(format!(
            "initial state has dimension {}, model expects {}",
            x0.len(),
            model.dim_d()
        )));
    }
    if brownian.dim_m() != model.dim_m() {
        return Err(Error::param(format!(
            "Brownian dimension {} does not match model noise dimension {}",
            brownian.dim_m(),
            model.dim_m()
        )));
    }
    Ok(())
}

/// Scratch buffers and the shared update `x += σ(t, x) dw + weight * b(t, x)`.
struct Stepper {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl Stepper {
    fn new(d: usize, m: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * m],
        }
    }

    /// Returns `false` when a coefficient is non-finite; `x` is then left
    /// unchanged.
    fn step(&mut self, model: &dyn SdeModel, t: f64, x: &mut [f64], dw: &[f64], weight: f64) -> bool {
        model.drift(t, x, &mut self.drift);
        model.diffusion(t, x, &mut self.diffusion);
        if !self.drift.iter().chain(&self.diffusion).all(|v| v.is_finite()) {
            return false;
        }
        let m = dw.len();
        for (i, xi) in x.iter_mut().enumerate() {
            let row = &self.diffusion[i * m..(i + 1) * m];
            let noise: f64 = row.iter().zip(dw).map(|(s, w)| s * w).sum();
            *xi = (*xi + noise) + weight * self.drift[i];
        }
        true
    }
}

/// Compound Poisson path at the epochs `S_1 .. S_N` of `grid`.
pub fn cp_sde_path(
    model: &dyn SdeModel,
    x0: &[f64],
    grid: &JumpGrid,
    brownian: &GridBrownian,
) -> Result<PathSample> {
    check_dims(model, x0, brownian)?;
    if brownian.epsilon() != grid.epsilon() {
        return Err(Error::param("Brownian grid spacing differs from the jump clock epsilon"));
    }
    let n = grid.count_cutoff();
    if brownian.len() < n {
        return Err(Error::NotPopulated {
            index: n,
            len: brownian.len(),
        });
    }
    let d = model.dim_d();
    let eps = grid.epsilon();
    let mut stepper = Stepper::new(d, model.dim_m());
    let mut x = x0.to_vec();
    let mut values = Vec::with_capacity(n * d);
    for (k, &s) in grid.within_horizon().iter().enumerate() {
        let dw = brownian.increment(k + 1)?;
        if !stepper.step(model, s, &mut x, dw, eps) {
            return Err(Error::SingularHit {
                index: k + 1,
                time: s,
                eval_time: None,
            });
        }
        values.extend_from_slice(&x);
    }
    PathSample::new(
        x0.to_vec(),
        grid.within_horizon().to_vec(),
        values,
        Interpretation::LeftConstant,
    )
}

/// Euler–Maruyama path on `t_k = k h`, `k = 1..=n_steps`, with left-point
/// coefficients. The Brownian increments must live on the same `h` grid.
pub fn em_sde_path(
    model: &dyn SdeModel,
    x0: &[f64],
    step_h: f64,
    n_steps: usize,
    brownian: &GridBrownian,
) -> Result<PathSample> {
    check_dims(model, x0, brownian)?;
    if brownian.epsilon() != step_h {
        return Err(Error::param("Brownian grid spacing differs from the Euler step"));
    }
    if brownian.len() < n_steps {
        return Err(Error::NotPopulated {
            index: n_steps,
            len: brownian.len(),
        });
    }
    let d = model.dim_d();
    let mut stepper = Stepper::new(d, model.dim_m());
    let mut x = x0.to_vec();
    let mut times = Vec::with_capacity(n_steps);
    let mut values = Vec::with_capacity(n_steps * d);
    for k in 0..n_steps {
        let t = k as f64 * step_h;
        let dw = brownian.increment(k + 1)?;
        if !stepper.step(model, t, &mut x, dw, step_h) {
            return Err(Error::SingularHit {
                index: k,
                time: t,
                eval_time: None,
            });
        }
        times.push((k + 1) as f64 * step_h);
        values.extend_from_slice(&x);
    }
    PathSample::new(x0.to_vec(), times, values, Interpretation::LeftConstant)
}

/// Exact solution as a function of time, initial state and the driving
/// Brownian value `W_t`.
pub trait ExactSolution: Sync {
    fn value(&self, t: f64, x0: &[f64], w_t: &[f64], out: &mut [f64]);
}

impl<F> ExactSolution for F
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]) + Sync,
{
    fn value(&self, t: f64, x0: &[f64], w_t: &[f64], out: &mut [f64]) {
        self(t, x0, w_t, out)
    }
}

/// Squared pathwise errors of one coupled sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongErrorSample {
    /// Max over the evaluation times of `|X^eps_t - X_t|^2`.
    pub sup_sq_error: f64,
    /// Squared error at the last evaluation time.
    pub terminal_sq_error: f64,
}

/// Grid points `j eps` up to `horizon`, plus `horizon` itself when it is not
/// a grid multiple.
pub fn grid_eval_times(epsilon: f64, horizon: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * epsilon;
        if t > horizon * (1.0 + 1e-12) {
            break;
        }
        times.push(t.min(horizon));
        j += 1;
    }
    if let Some(&last) = times.last() {
        if horizon - last > 1e-9 * epsilon {
            times.push(horizon);
        }
    }
    times
}

/// `W_t` consistent with the grid increments. Off-grid times use the
/// Brownian bridge between the neighbouring grid points, drawing one extra
/// normal per coordinate from `bridge`.
pub fn brownian_at<G: GaussianSource + ?Sized>(
    brownian: &GridBrownian,
    t: f64,
    bridge: &mut G,
    out: &mut [f64],
) -> Result<()> {
    let eps = brownian.epsilon();
    let j = (t / eps).round();
    if (j * eps - t).abs() <= 1e-9 * eps {
        out.copy_from_slice(brownian.prefix_sum(j as usize)?);
        return Ok(());
    }
    let j = (t / eps).floor() as usize;
    let theta = (t - j as f64 * eps) / eps;
    let base = brownian.prefix_sum(j)?;
    let next = brownian.increment(j + 1)?;
    let spread = (theta * (1.0 - theta) * eps).sqrt();
    for ((o, b), dw) in out.iter_mut().zip(base).zip(next) {
        *o = b + theta * dw + spread * bridge.next_standard_normal();
    }
    Ok(())
}

/// Sup and terminal squared errors between the compound Poisson path and the
/// exact solution driven by the same Brownian increments. The supremum over
/// `[0, T]` is approximated by the maximum over `eval_times`, which should be
/// grid multiples `j eps` plus the horizon.
#[allow(clippy::too_many_arguments)]
pub fn strong_error_sample<G: GaussianSource + ?Sized>(
    model: &dyn SdeModel,
    x0: &[f64],
    exact: &dyn ExactSolution,
    grid: &JumpGrid,
    brownian: &GridBrownian,
    eval_times: &[f64],
    bridge: &mut G,
) -> Result<StrongErrorSample> {
    let path = cp_sde_path(model, x0, grid, brownian)?;
    let d = model.dim_d();
    let mut w = vec![0.0; model.dim_m()];
    let mut x = vec![0.0; d];
    let mut sup = 0.0f64;
    let mut terminal = 0.0;
    for &t in eval_times {
        brownian_at(brownian, t, bridge, &mut w)?;
        exact.value(t, x0, &w, &mut x);
        let approx = scheme_state_at(&path, t);
        let err: f64 = approx.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        sup = sup.max(err);
        terminal = err;
    }
    Ok(StrongErrorSample {
        sup_sq_error: sup,
        terminal_sq_error: terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_grid::{sample_jump_grid, FixedDraws, PathStream};

    fn zero_model() -> ScalarSde<impl Fn(f64, f64) -> f64 + Sync, impl Fn(f64, f64) -> f64 + Sync> {
        ScalarSde::new(|_, _| 0.0, |_, _| 0.0)
    }

    fn sampled(eps: f64, horizon: f64, seed: u64) -> (JumpGrid, GridBrownian) {
        let mut stream = PathStream::new(seed, 0);
        let grid = sample_jump_grid(eps, horizon, &mut stream).unwrap();
        let mut b = GridBrownian::new(eps, 1).unwrap();
        b.sample_increments(grid.count_cutoff().max((horizon / eps).ceil() as usize + 1), &mut stream);
        (grid, b)
    }

    #[test]
    fn zero_dynamics_is_constant() {
        let (grid, b) = sampled(0.01, 1.0, 1);
        let path = cp_sde_path(&zero_model(), &[2.5], &grid, &b).unwrap();
        assert!(path.times().len() == grid.count_cutoff());
        assert!((0..path.len()).all(|i| path.value(i) == [2.5]));
        let em = em_sde_path(&zero_model(), &[2.5], 0.01, 100, &b).unwrap();
        assert_eq!(em.terminal(), &[2.5]);
    }

    #[test]
    fn unit_drift_counts_jumps() {
        let (grid, b) = sampled(0.02, 1.0, 2);
        let model = ScalarSde::new(|_, _| 1.0, |_, _| 0.0);
        let path = cp_sde_path(&model, &[0.5], &grid, &b).unwrap();
        let expected = 0.5 + grid.rescaled_count(1.0).unwrap();
        assert!((path.terminal()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn linear_drift_hand_recursion() {
        let grid = JumpGrid::from_jump_times(0.5, 1.0, vec![0.3, 0.9, 1.7]).unwrap();
        let mut b = GridBrownian::new(0.5, 1).unwrap();
        b.sample_increments(2, &mut FixedDraws::new(vec![0.3, -0.1]));
        let model = ScalarSde::new(|_, x| x, |_, _| 0.0);
        let path = cp_sde_path(&model, &[1.0], &grid, &b).unwrap();
        assert_eq!(path.value(0), &[1.5]);
        assert_eq!(path.value(1), &[2.25]);
    }

    #[test]
    fn unit_diffusion_reproduces_prefix_sums_bitwise() {
        let (grid, b) = sampled(0.01, 1.0, 3);
        let model = ScalarSde::new(|_, _| 0.0, |_, _| 1.0);
        let path = cp_sde_path(&model, &[0.0], &grid, &b).unwrap();
        for k in 1..=grid.count_cutoff() {
            assert_eq!(path.value(k - 1), b.prefix_sum(k).unwrap());
        }
        let em = em_sde_path(&model, &[0.0], 0.01, 100, &b).unwrap();
        assert_eq!(em.terminal(), b.prefix_sum(100).unwrap());
    }

    #[test]
    fn em_reports_singular_grid_time() {
        let b = {
            let mut b = GridBrownian::new(0.001, 1).unwrap();
            b.sample_increments(1000, &mut PathStream::new(4, 0));
            b
        };
        let model = ScalarSde::new(|t: f64, x: f64| 0.3 * (t - 0.4).abs().powf(-0.5) * x, |_, x| 0.1 * x);
        match em_sde_path(&model, &[1.0], 0.001, 1000, &b) {
            Err(Error::SingularHit { index, time, .. }) => {
                assert_eq!(index, 400);
                assert_eq!(time, 0.4);
            }
            other => panic!("expected singular hit, got {other:?}"),
        }
    }

    #[test]
    fn cp_reports_singular_epoch() {
        let grid = JumpGrid::from_jump_times(0.1, 1.0, vec![0.2, 0.4, 1.2]).unwrap();
        let mut b = GridBrownian::new(0.1, 1).unwrap();
        b.sample_increments(2, &mut FixedDraws::new(vec![0.0, 0.0]));
        let model = ScalarSde::new(|t: f64, _| (t - 0.4).abs().powf(-0.5), |_, _| 0.0);
        assert!(matches!(
            cp_sde_path(&model, &[0.0], &grid, &b),
            Err(Error::SingularHit { index: 2, time, .. }) if time == 0.4
        ));
    }

    #[test]
    fn state_lookup_is_left_constant() {
        let path = PathSample::new(
            vec![0.0],
            vec![0.3, 0.9],
            vec![1.0, 2.0],
            Interpretation::LeftConstant,
        )
        .unwrap();
        assert_eq!(scheme_state_at(&path, 0.5), &[1.0]);
        assert_eq!(scheme_state_at(&path, 0.9), &[2.0]);
        assert_eq!(scheme_state_at(&path, 0.1), &[0.0]);
    }

    #[test]
    fn dimension_and_population_checks() {
        let grid = JumpGrid::from_jump_times(0.1, 1.0, vec![0.2, 0.4, 1.2]).unwrap();
        let b = GridBrownian::new(0.1, 1).unwrap();
        assert!(matches!(
            cp_sde_path(&zero_model(), &[0.0], &grid, &b),
            Err(Error::NotPopulated { .. })
        ));
        assert!(cp_sde_path(&zero_model(), &[0.0, 1.0], &grid, &b).is_err());
        let other = GridBrownian::new(0.2, 1).unwrap();
        assert!(cp_sde_path(&zero_model(), &[0.0], &grid, &other).is_err());
    }

    #[test]
    fn two_dimensional_update_uses_matrix_rows() {
        let model = FnSde::new(
            2,
            2,
            |_, x: &[f64], out: &mut [f64]| {
                out[0] = x[1];
                out[1] = 0.0;
            },
            |_, _, out: &mut [f64]| out.copy_from_slice(&[1.0, 2.0, 0.0, 3.0]),
        );
        let grid = JumpGrid::from_jump_times(0.5, 1.0, vec![0.1, 1.5]).unwrap();
        let mut b = GridBrownian::new(0.5, 2).unwrap();
        b.sample_increments(1, &mut FixedDraws::new(vec![1.0, 1.0]));
        let dw = b.increment(1).unwrap().to_vec();
        let path = cp_sde_path(&model, &[0.0, 4.0], &grid, &b).unwrap();
        let expected0 = (dw[0] + 2.0 * dw[1]) + 0.5 * 4.0;
        let expected1 = 4.0 + 3.0 * dw[1];
        assert!((path.value(0)[0] - expected0).abs() < 1e-15);
        assert!((path.value(0)[1] - expected1).abs() < 1e-15);
    }

    #[test]
    fn exact_coupling_gives_zero_error_without_dynamics() {
        let (grid, b) = sampled(0.05, 1.0, 5);
        let exact = |_: f64, x0: &[f64], _: &[f64], out: &mut [f64]| out.copy_from_slice(x0);
        let times = grid_eval_times(0.05, 1.0);
        let e = strong_error_sample(
            &zero_model(),
            &[1.0],
            &exact,
            &grid,
            &b,
            &times,
            &mut PathStream::new(5, 0).auxiliary(crate::stochastic_grid::StreamTag::Bridge),
        )
        .unwrap();
        assert_eq!(e.sup_sq_error, 0.0);
        assert_eq!(e.terminal_sq_error, 0.0);
    }

    #[test]
    fn eval_times_cover_horizon() {
        let t = grid_eval_times(0.25, 1.0);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let t = grid_eval_times(0.3, 1.0);
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
    }

    #[test]
    fn bridge_interpolates_between_grid_points() {
        let mut b = GridBrownian::new(0.5, 1).unwrap();
        b.sample_increments(2, &mut FixedDraws::new(vec![1.0, 2.0]));
        let mut w = [0.0];
        brownian_at(&b, 0.5, &mut FixedDraws::new(vec![]), &mut w).unwrap();
        assert_eq!(w, [0.5f64.sqrt()]);
        // theta = 1/2 and zero bridge noise: midpoint of the segment.
        brownian_at(&b, 0.75, &mut FixedDraws::new(vec![0.0]), &mut w).unwrap();
        let mid = 0.5f64.sqrt() * (1.0 + 0.5 * 2.0);
        assert!((w[0] - mid).abs() < 1e-15);
    }
}
