//! Compound Poisson approximation and Euler–Maruyama baseline for stochastic
//! Volterra equations
//! `Y_t = Y_0 + ∫_0^t σ(t, s, Y_s) dW_s + ∫_0^t b(t, s, Y_s) ds`.
//!
//! Because the coefficients depend on the evaluation time `t`, the whole
//! history is reweighted at every query. The scheme first builds the states
//! seen by each jump,
//!
//! ```text
//! Z_k = Y_0 + Σ_{i<k} [ σ(S_k, S_i, Z_i) ΔW_i + eps * b(S_k, S_i, Z_i) ]
//! ```
//!
//! which is the left limit `Y_{S_k-}` (the kernel vanishes on the diagonal
//! `s = t`), and then evaluates
//!
//! ```text
//! Y_t = Y_0 + Σ_{S_i <= t} [ σ(t, S_i, Z_i) ΔW_i + eps * b(t, S_i, Z_i) ]
//! ```
//!
//! independently for every query time. For kernels that do not depend on
//! their first argument this collapses to the SDE recursion of
//! [`crate::sde_engine::cp_sde_path`], term for term.
//!
//! Building the states costs `O(N^2)` coefficient evaluations for `N` jumps;
//! each query adds `O(N)`.

use crate::error::{Error, Result};
use crate::stochastic_grid::{GridBrownian, JumpGrid};

/// Scratch space for coefficient evaluation.
#[derive(Debug, Clone)]
pub struct SveScratch {
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
}

impl SveScratch {
    pub fn new(d: usize, m: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * m],
        }
    }
}

/// Two-time coefficients `b(t, s, x)` and `σ(t, s, x)` (row-major `d * m`).
pub trait SveModel: Sync {
    fn dim_d(&self) -> usize;
    fn dim_m(&self) -> usize;
    fn drift(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]);

    /// Human-readable description of where the coefficients blow up.
    fn singular_note(&self) -> &str {
        ""
    }

    /// Number of per-jump values cached by [`SveModel::s_factors`].
    fn s_factor_len(&self) -> usize {
        0
    }

    /// Quantities depending only on the integration time `s`, computed once
    /// per jump and passed back to [`SveModel::accumulate`].
    fn s_factors(&self, _s: f64, _out: &mut [f64]) {}

    /// `acc <- (acc + σ(t, s, x) dw) + weight * b(t, s, x)`. Returns `false`
    /// (leaving `acc` untouched) when a coefficient is non-finite. Models
    /// with cheap closed forms may override this hot path.
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        t: f64,
        s: f64,
        _cached: &[f64],
        x: &[f64],
        dw: &[f64],
        weight: f64,
        acc: &mut [f64],
        scratch: &mut SveScratch,
    ) -> bool {
        self.drift(t, s, x, &mut scratch.drift);
        self.diffusion(t, s, x, &mut scratch.diffusion);
        if !scratch
            .drift
            .iter()
            .chain(&scratch.diffusion)
            .all(|v| v.is_finite())
        {
            return false;
        }
        let m = dw.len();
        for (i, a) in acc.iter_mut().enumerate() {
            let row = &scratch.diffusion[i * m..(i + 1) * m];
            let noise: f64 = row.iter().zip(dw).map(|(s, w)| s * w).sum();
            *a = (*a + noise) + weight * scratch.drift[i];
        }
        true
    }

    /// [`SveModel::accumulate`] over the pairs `(times[i], states[i],
    /// increments[i])` in order; `states` holds `d` values per pair,
    /// `increments` `m` and `cached` [`SveModel::s_factor_len`]. On a
    /// non-finite coefficient returns the offending pair offset.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_row(
        &self,
        t: f64,
        times: &[f64],
        cached: &[f64],
        states: &[f64],
        increments: &[f64],
        weight: f64,
        acc: &mut [f64],
        scratch: &mut SveScratch,
    ) -> std::result::Result<(), usize> {
        let (d, m, fl) = (self.dim_d(), self.dim_m(), self.s_factor_len());
        for (i, &s) in times.iter().enumerate() {
            let x = &states[i * d..(i + 1) * d];
            let dw = &increments[i * m..(i + 1) * m];
            let c = &cached[i * fl..(i + 1) * fl];
            if !self.accumulate(t, s, c, x, dw, weight, acc, scratch) {
                return Err(i);
            }
        }
        Ok(())
    }
}

/// Scalar model from closures `(t, s, x) -> value`.
pub struct ScalarSve<B, S> {
    drift: B,
    diffusion: S,
    note: String,
}

impl<B, S> ScalarSve<B, S>
where
    B: Fn(f64, f64, f64) -> f64 + Sync,
    S: Fn(f64, f64, f64) -> f64 + Sync,
{
    pub fn new(drift: B, diffusion: S) -> Self {
        Self {
            drift,
            diffusion,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

impl<B, S> SveModel for ScalarSve<B, S>
where
    B: Fn(f64, f64, f64) -> f64 + Sync,
    S: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn dim_d(&self) -> usize {
        1
    }
    fn dim_m(&self) -> usize {
        1
    }
    fn drift(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.drift)(t, s, x[0]);
    }
    fn diffusion(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]) {
        out[0] = (self.diffusion)(t, s, x[0]);
    }
    fn singular_note(&self) -> &str {
        &self.note
    }
}

/// Values of one path at the requested query times.
#[derive(Debug, Clone, PartialEq)]
pub struct SveQueryResult {
    dim: usize,
    query_times: Vec<f64>,
    values: Vec<f64>,
}

impl SveQueryResult {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query_times(&self) -> &[f64] {
        &self.query_times
    }

    pub fn len(&self) -> usize {
        self.query_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_times.is_empty()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_dims(model: &dyn SveModel, y0: &[f64], brownian: &GridBrownian) -> Result<()> {
    if y0.len() != model.dim_d() {
        return Err(Error::param(format!(
            "initial state has dimension {}, model expects {}",
            y0.len(),
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

/// Compound Poisson values at `query_times`, all within `[0, horizon]`.
pub fn cp_sve_values(
    model: &dyn SveModel,
    y0: &[f64],
    grid: &JumpGrid,
    brownian: &GridBrownian,
    query_times: &[f64],
) -> Result<SveQueryResult> {
    check_dims(model, y0, brownian)?;
    if brownian.epsilon() != grid.epsilon() {
        return Err(Error::param("Brownian grid spacing differs from the jump clock epsilon"));
    }
    let counts = query_times
        .iter()
        .map(|&t| grid.count_at(t))
        .collect::<Result<Vec<_>>>()?;
    let n = counts.iter().copied().max().unwrap_or(0);
    if brownian.len() < n {
        return Err(Error::NotPopulated {
            index: n,
            len: brownian.len(),
        });
    }
    let d = model.dim_d();
    let eps = grid.epsilon();
    let jumps = grid.within_horizon();
    let mut scratch = SveScratch::new(d, model.dim_m());
    let fl = model.s_factor_len();
    let mut factors = vec![0.0; n * fl];
    if fl > 0 {
        for (chunk, &s) in factors.chunks_exact_mut(fl).zip(jumps) {
            model.s_factors(s, chunk);
        }
    }
    let increments = brownian.leading(n)?;
    let m = model.dim_m();
    let row = |t: f64, count: usize, states: &[f64], acc: &mut Vec<f64>, scratch: &mut SveScratch| {
        acc.copy_from_slice(y0);
        model
            .accumulate_row(
                t,
                &jumps[..count],
                &factors[..count * fl],
                &states[..count * d],
                &increments[..count * m],
                eps,
                acc,
                scratch,
            )
            .map_err(|i| Error::SingularHit {
                index: i + 1,
                time: jumps[i],
                eval_time: Some(t),
            })
    };

    // Z_k for k = 1..n, stored at index k-1.
    let mut states = Vec::with_capacity(n * d);
    let mut acc = vec![0.0; d];
    for k in 0..n {
        row(jumps[k], k, &states, &mut acc, &mut scratch)?;
        states.extend_from_slice(&acc);
    }

    let mut values = Vec::with_capacity(query_times.len() * d);
    for (&t, &count) in query_times.iter().zip(&counts) {
        row(t, count, &states, &mut acc, &mut scratch)?;
        values.extend_from_slice(&acc);
    }
    Ok(SveQueryResult {
        dim: d,
        query_times: query_times.to_vec(),
        values,
    })
}

/// Index `i` with `i * h == t` up to rounding, or an error.
fn grid_index(t: f64, h: f64) -> Result<usize> {
    let i = (t / h).round();
    if t < 0.0 || (i * h - t).abs() > 1e-9 * h {
        return Err(Error::param(format!("query time {t} is not a multiple of the step {h}")));
    }
    Ok(i as usize)
}

/// Euler–Maruyama values with left-point kernels:
/// `Y_{t_i} = Y_0 + Σ_{j<i} [σ(t_i, t_j, Y_{t_j}) ΔW_{j+1} + h b(t_i, t_j, Y_{t_j})]`.
/// Interior singularities that fall on the grid are hit, not avoided.
pub fn em_sve_values(
    model: &dyn SveModel,
    y0: &[f64],
    step_h: f64,
    query_times: &[f64],
    brownian: &GridBrownian,
) -> Result<SveQueryResult> {
    check_dims(model, y0, brownian)?;
    if brownian.epsilon() != step_h {
        return Err(Error::param("Brownian grid spacing differs from the Euler step"));
    }
    let indices = query_times
        .iter()
        .map(|&t| grid_index(t, step_h))
        .collect::<Result<Vec<_>>>()?;
    let n = indices.iter().copied().max().unwrap_or(0);
    if brownian.len() < n {
        return Err(Error::NotPopulated {
            index: n,
            len: brownian.len(),
        });
    }
    let d = model.dim_d();
    let mut scratch = SveScratch::new(d, model.dim_m());
    let fl = model.s_factor_len();
    let times: Vec<f64> = (0..n).map(|j| j as f64 * step_h).collect();
    let mut factors = vec![0.0; n * fl];
    if fl > 0 {
        for (chunk, &s) in factors.chunks_exact_mut(fl).zip(&times) {
            model.s_factors(s, chunk);
        }
    }
    let increments = brownian.leading(n)?;
    let m = model.dim_m();
    // states[i] = Y_{t_i}, i = 0..=n
    let mut states = Vec::with_capacity((n + 1) * d);
    states.extend_from_slice(y0);
    let mut acc = vec![0.0; d];
    for i in 1..=n {
        let t = i as f64 * step_h;
        acc.copy_from_slice(y0);
        model
            .accumulate_row(
                t,
                &times[..i],
                &factors[..i * fl],
                &states[..i * d],
                &increments[..i * m],
                step_h,
                &mut acc,
                &mut scratch,
            )
            .map_err(|j| Error::SingularHit {
                index: j,
                time: times[j],
                eval_time: Some(t),
            })?;
        states.extend_from_slice(&acc);
    }
    let mut values = Vec::with_capacity(query_times.len() * d);
    for &i in &indices {
        values.extend_from_slice(&states[i * d..(i + 1) * d]);
    }
    Ok(SveQueryResult {
        dim: d,
        query_times: query_times.to_vec(),
        values,
    })
}
