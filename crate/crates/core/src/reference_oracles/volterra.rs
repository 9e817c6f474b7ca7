//! Moment curves of the linear Volterra equation
//!
//! ```text
//! X_t = X_0 + μ ∫_0^t (t-s)^{-α0} |s-s0|^{-β0} X_s ds
//!           + √σ ∫_0^t (t-s)^{-α1/2} |s-s1|^{-β1/2} X_s dW_s
//! ```
//!
//! Taking expectations (and, for `μ = 0`, the Itô isometry) gives linear
//! Volterra equations for `E X_t` and `E X_t²` driven by
//! `(K f)(t) = m ∫_0^t (t-s)^{-α} |s-a|^{-β} f(s) ds`, solved here by the
//! Neumann series `1 + Σ_n (K^n 1)(t)`.
//!
//! `K` is discretised by product integration: functions are piecewise
//! linear on a mesh containing `a`, and each cell moment
//! `∫ (t-s)^{-α} |s-a|^{-β} φ(s) ds` against the two hat pieces `φ` is
//! computed with Gauss–Jacobi rules that carry the endpoint singularities as
//! weights. The mesh is uniform with geometric refinement around `0` and
//! `a`, where the iterates lose smoothness. The resulting lower-triangular
//! matrix is assembled once and every series term is a matrix-vector
//! product.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::cached_rule;
use crate::sve_engine::{SveModel, SveScratch};

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VolterraMomentParams {
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub alpha0: f64,
    #[serde(default)]
    pub beta0: f64,
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(default)]
    pub s1: f64,
    #[serde(default = "one")]
    pub x0_mean: f64,
    #[serde(default = "one")]
    pub x0_sq_mean: f64,
}

fn one() -> f64 {
    1.0
}

impl VolterraMomentParams {
    /// μ = 0.2, σ = 0.1, α0 = 0.3, β0 = 0.5, α1 = 0.2, β1 = 0.4, s0 = 0.2, s1 = 0.
    pub fn reference_set1() -> Self {
        Self {
            mu: 0.2,
            sigma: 0.1,
            alpha0: 0.3,
            beta0: 0.5,
            alpha1: 0.2,
            beta1: 0.4,
            s0: 0.2,
            s1: 0.0,
            x0_mean: 1.0,
            x0_sq_mean: 1.0,
        }
    }

    /// μ = 0, σ = 0.3, α1 = 0.05, β1 = 0.25, s1 = 0.2.
    pub fn reference_set2() -> Self {
        Self {
            mu: 0.0,
            sigma: 0.3,
            alpha0: 0.0,
            beta0: 0.0,
            alpha1: 0.05,
            beta1: 0.25,
            s0: 0.0,
            s1: 0.2,
            x0_mean: 1.0,
            x0_sq_mean: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if ![self.alpha0, self.beta0, self.alpha1, self.beta1, self.s0, self.s1]
            .into_iter()
            .all(unit)
        {
            return Err(Error::param("alpha_i, beta_i and s_i must lie in [0, 1)"));
        }
        if !self.mu.is_finite() || !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::param("need finite mu and sigma >= 0"));
        }
        if self.alpha0 + self.beta0 >= 1.0 || self.alpha1 + self.beta1 >= 1.0 {
            return Err(Error::param("need alpha_i + beta_i < 1"));
        }
        Ok(())
    }

    pub fn sve_model(&self) -> LinearSingularSve {
        LinearSingularSve {
            params: *self,
            sqrt_sigma: self.sigma.sqrt(),
        }
    }
}

/// The linear singular Volterra equation as an [`SveModel`].
#[derive(Debug, Clone)]
pub struct LinearSingularSve {
    params: VolterraMomentParams,
    sqrt_sigma: f64,
}

impl LinearSingularSve {
    fn drift_coef(&self, t: f64, s: f64) -> f64 {
        let p = &self.params;
        if p.mu == 0.0 {
            return 0.0;
        }
        p.mu * (t - s).powf(-p.alpha0) * (s - p.s0).abs().powf(-p.beta0)
    }

    fn diffusion_coef(&self, t: f64, s: f64) -> f64 {
        let p = &self.params;
        if p.sigma == 0.0 {
            return 0.0;
        }
        self.sqrt_sigma * (t - s).powf(-0.5 * p.alpha1) * (s - p.s1).abs().powf(-0.5 * p.beta1)
    }
}

impl SveModel for LinearSingularSve {
    fn dim_d(&self) -> usize {
        1
    }
    fn dim_m(&self) -> usize {
        1
    }
    fn drift(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.drift_coef(t, s) * x[0];
    }
    fn diffusion(&self, t: f64, s: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.diffusion_coef(t, s) * x[0];
    }
    fn singular_note(&self) -> &str {
        "unbounded on the diagonal s = t and at the fixed times s0 (drift) and s1 (diffusion)"
    }

    fn s_factor_len(&self) -> usize {
        2
    }

    /// `μ |s-s0|^{-β0}` and `√σ |s-s1|^{-β1/2}`.
    fn s_factors(&self, s: f64, out: &mut [f64]) {
        let p = &self.params;
        out[0] = if p.mu == 0.0 {
            0.0
        } else {
            p.mu * (s - p.s0).abs().powf(-p.beta0)
        };
        out[1] = if p.sigma == 0.0 {
            0.0
        } else {
            self.sqrt_sigma * (s - p.s1).abs().powf(-0.5 * p.beta1)
        };
    }

    fn accumulate(
        &self,
        t: f64,
        s: f64,
        cached: &[f64],
        x: &[f64],
        dw: &[f64],
        weight: f64,
        acc: &mut [f64],
        _scratch: &mut SveScratch,
    ) -> bool {
        let p = &self.params;
        let ln_gap = (t - s).ln();
        let b = if cached[0] == 0.0 {
            0.0
        } else {
            cached[0] * (-p.alpha0 * ln_gap).exp()
        };
        let sig = if cached[1] == 0.0 {
            0.0
        } else {
            cached[1] * (-0.5 * p.alpha1 * ln_gap).exp()
        };
        if !(b.is_finite() && sig.is_finite()) {
            return false;
        }
        acc[0] = (acc[0] + sig * x[0] * dw[0]) + weight * (b * x[0]);
        true
    }

    fn accumulate_row(
        &self,
        t: f64,
        times: &[f64],
        cached: &[f64],
        states: &[f64],
        increments: &[f64],
        weight: f64,
        acc: &mut [f64],
        _scratch: &mut SveScratch,
    ) -> std::result::Result<(), usize> {
        let (a0, a1) = (self.params.alpha0, 0.5 * self.params.alpha1);
        let mut total = acc[0];
        let pairs = times.iter().zip(cached.chunks_exact(2)).zip(states.iter().zip(increments));
        for (i, ((&s, c), (&x, &dw))) in pairs.enumerate() {
            let ln_gap = (t - s).ln();
            let b = if c[0] == 0.0 { 0.0 } else { c[0] * (-a0 * ln_gap).exp() };
            let sig = if c[1] == 0.0 { 0.0 } else { c[1] * (-a1 * ln_gap).exp() };
            if !(b.is_finite() && sig.is_finite()) {
                acc[0] = total;
                return Err(i);
            }
            total = (total + sig * x * dw) + weight * (b * x);
        }
        acc[0] = total;
        Ok(())
    }
}

/// A function given by its values at increasing nodes, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::param("grid function needs matching, nonempty nodes and values"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("grid function nodes must increase strictly"));
        }
        Ok(Self { nodes, values })
    }

    pub fn constant(nodes: Vec<f64>, value: f64) -> Result<Self> {
        let values = vec![value; nodes.len()];
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation, constant beyond the end nodes.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.nodes.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.nodes.len() {
            return self.values[i - 1];
        }
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let w = (t - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }
}

/// Gauss nodes per panel in the product rules.
const CELL_NODES: usize = 12;

/// `∫_lo^hi (t-s)^{-α} |s-a|^{-β} φ(s) ds` for the hat pieces
/// `φ_L = (hi-s)/(hi-lo)` and `φ_R = (s-lo)/(hi-lo)`. Requires `t >= hi` and
/// `a` outside `(lo, hi)`. Singularities sitting on an endpoint become
/// Jacobi weights; those within one cell width of an endpoint are resolved
/// by geometric panels.
fn cell_moments(lo: f64, hi: f64, t: f64, a: f64, alpha: f64, beta: f64) -> [f64; 2] {
    let width = hi - lo;
    let mut near_right = f64::INFINITY;
    if alpha > 0.0 && t > hi {
        near_right = near_right.min(t - hi);
    }
    if beta > 0.0 && a > hi {
        near_right = near_right.min(a - hi);
    }
    let near_left = if beta > 0.0 && a < lo { lo - a } else { f64::INFINITY };

    let mut cuts = Vec::new();
    if near_right < width {
        let mut x = hi - near_right;
        let mut step = near_right;
        while x > lo + 0.5 * width.min(near_left) && x > lo {
            cuts.push(x);
            step *= 2.0;
            x -= step;
        }
    }
    if near_left < width {
        let mut x = lo + near_left;
        let mut step = near_left;
        while x < hi {
            cuts.push(x);
            step *= 2.0;
            x += step;
        }
    }
    cuts.retain(|&x| x > lo && x < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let t_on_right = t == hi;
    let a_on_right = a == hi && beta > 0.0;
    let a_on_left = a == lo && beta > 0.0;
    let mut m = [0.0; 2];
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let right_t = q == hi && t_on_right;
        let right_a = q == hi && a_on_right;
        let left_a = p == lo && a_on_left;
        let right_exp = if right_t { -alpha } else { 0.0 } + if right_a { -beta } else { 0.0 };
        let left_exp = if left_a { -beta } else { 0.0 };
        let rule = cached_rule(CELL_NODES, right_exp, left_exp);
        for (s, wq) in rule.mapped(p, q) {
            let mut g = wq;
            if !right_t && alpha > 0.0 {
                g *= (t - s).powf(-alpha);
            }
            if !(right_a || left_a) && beta > 0.0 {
                g *= (s - a).abs().powf(-beta);
            }
            let phi_r = (s - lo) / width;
            m[0] += g * (1.0 - phi_r);
            m[1] += g * phi_r;
        }
    }
    m
}

/// Lower-triangular product-integration matrix of `K` on a mesh.
struct SingularOperator {
    mesh: Vec<f64>,
    /// Row `i` holds entries `j = 0..=i`, starting at `i (i + 1) / 2`.
    weights: Vec<f64>,
}

impl SingularOperator {
    fn build(mesh: Vec<f64>, m: f64, a: f64, alpha: f64, beta: f64) -> Self {
        let n = mesh.len();
        let mut weights = vec![0.0; n * (n + 1) / 2];
        if m == 0.0 {
            return Self { mesh, weights };
        }
        // t-independent part of the regular cells: nodes and |s-a|^{-β} φ weights
        struct Cell {
            nodes: Vec<f64>,
            left: Vec<f64>,
            right: Vec<f64>,
        }
        let cells: Vec<Option<Cell>> = mesh
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let width = hi - lo;
                let touches = beta > 0.0 && (a == lo || a == hi);
                if beta > 0.0 && !touches && (a > hi && a - hi < width || a < lo && lo - a < width) {
                    return None;
                }
                let right_exp = if touches && a == hi { -beta } else { 0.0 };
                let left_exp = if touches && a == lo { -beta } else { 0.0 };
                let rule = cached_rule(CELL_NODES, right_exp, left_exp);
                let mut cell = Cell {
                    nodes: Vec::with_capacity(CELL_NODES),
                    left: Vec::with_capacity(CELL_NODES),
                    right: Vec::with_capacity(CELL_NODES),
                };
                for (s, wq) in rule.mapped(lo, hi) {
                    let g = if beta > 0.0 && !touches { wq * (s - a).abs().powf(-beta) } else { wq };
                    let phi_r = (s - lo) / width;
                    cell.nodes.push(s);
                    cell.left.push(m * g * (1.0 - phi_r));
                    cell.right.push(m * g * phi_r);
                }
                Some(cell)
            })
            .collect();

        for i in 1..n {
            let t = mesh[i];
            let row = &mut weights[i * (i + 1) / 2..(i + 1) * (i + 2) / 2];
            for j in 0..i {
                let (lo, hi) = (mesh[j], mesh[j + 1]);
                let regular = j + 1 < i && (alpha == 0.0 || t - hi >= hi - lo);
                let (wl, wr) = match (&cells[j], regular) {
                    (Some(cell), true) => {
                        let mut wl = 0.0;
                        let mut wr = 0.0;
                        for q in 0..cell.nodes.len() {
                            let k = if alpha > 0.0 { (t - cell.nodes[q]).powf(-alpha) } else { 1.0 };
                            wl += k * cell.left[q];
                            wr += k * cell.right[q];
                        }
                        (wl, wr)
                    }
                    _ => {
                        let [l, r] = cell_moments(lo, hi, t, a, alpha, beta);
                        (m * l, m * r)
                    }
                };
                row[j] += wl;
                row[j + 1] += wr;
            }
        }
        Self { mesh, weights }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.mesh.len())
            .map(|i| {
                let row = &self.weights[i * (i + 1) / 2..(i + 1) * (i + 2) / 2];
                row.iter().zip(f).map(|(w, v)| w * v).sum()
            })
            .collect()
    }
}

fn check_exponents(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) || !(0.0..1.0).contains(&beta) {
        return Err(Error::param(format!(
            "singular exponents must lie in [0, 1), got alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(())
}

fn merge_nodes(mut nodes: Vec<f64>) -> Vec<f64> {
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// `(K^{m,a}_{α,β} f)(t)` for each `t` in `eval_grid`, with `f` linear
/// between its nodes (which must start at 0 and reach `max(eval_grid)`).
pub fn apply_singular_operator(
    f: &GridFunction,
    m: f64,
    a: f64,
    alpha: f64,
    beta: f64,
    eval_grid: &[f64],
) -> Result<GridFunction> {
    check_exponents(alpha, beta)?;
    let top = eval_grid.iter().copied().fold(0.0, f64::max);
    if f.nodes[0] != 0.0 || *f.nodes.last().unwrap() < top || eval_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::param("grid function must cover [0, max(eval_grid)]"));
    }
    let mut mesh: Vec<f64> = f.nodes.iter().copied().filter(|&x| x <= top).collect();
    mesh.extend_from_slice(eval_grid);
    if beta > 0.0 && a > 0.0 && a < top {
        if alpha + beta >= 1.0 {
            return Err(Error::param("need alpha + beta < 1 when a lies inside the range"));
        }
        mesh.push(a);
    }
    let mesh = merge_nodes(mesh);
    let values: Vec<f64> = mesh.iter().map(|&x| f.eval(x)).collect();
    let op = SingularOperator::build(mesh, m, a, alpha, beta);
    let out = op.apply(&values);
    let picked = eval_grid
        .iter()
        .map(|t| out[op.mesh.partition_point(|x| x < t)])
        .collect();
    GridFunction::new(eval_grid.to_vec(), picked)
}

/// Mesh and truncation controls for the Neumann series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannOptions {
    /// Uniform spacing of the base mesh.
    pub step: f64,
    /// Half-width of the refined zones around `0` and `a`. Inside them a
    /// cell at distance `d` has width about `d * step / grading_reach`.
    pub grading_reach: f64,
    /// Smallest refined cell.
    pub grading_floor: f64,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            step: 1.0 / 1024.0,
            grading_reach: 1.0 / 32.0,
            grading_floor: 1e-10,
        }
    }
}

impl NeumannOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

fn neumann_mesh(horizon: f64, a: Option<f64>, extra: &[f64], opts: &NeumannOptions) -> Vec<f64> {
    let cells = (horizon / opts.step).ceil() as usize;
    let mut base: Vec<f64> = (0..=cells).map(|k| (k as f64 * opts.step).min(horizon)).collect();
    base.extend_from_slice(extra);
    base.push(horizon);
    let mut centres = vec![0.0];
    if let Some(a) = a {
        base.push(a);
        centres.push(a);
    }
    let mut base = merge_nodes(base);
    let reach = opts.grading_reach.max(opts.step);
    let ratio = 1.0 / (1.0 + opts.step / reach);
    let mut graded = Vec::new();
    for &c in &centres {
        let mut d = reach;
        while d > opts.grading_floor {
            for x in [c - d, c + d] {
                if x > 0.0 && x < horizon {
                    graded.push((x, d));
                }
            }
            d *= ratio;
        }
    }
    // drop refinement nodes that would leave a sliver next to a base node
    let min_gap = 0.5 * (1.0 - ratio);
    let graded: Vec<f64> = graded
        .into_iter()
        .filter(|&(x, d)| {
            let i = base.partition_point(|&b| b < x);
            let gap_lo = if i > 0 { x - base[i - 1] } else { f64::INFINITY };
            let gap_hi = if i < base.len() { base[i] - x } else { f64::INFINITY };
            gap_lo.min(gap_hi) > min_gap * d
        })
        .map(|(x, _)| x)
        .collect();
    base.extend(graded);
    merge_nodes(base)
}

/// Convergence record of a Neumann series.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannReport {
    /// Sup-norm over the mesh of each term `K^n 1`, `n = 1, 2, …`.
    pub term_norms: Vec<f64>,
    pub n_terms_used: usize,
    pub term_tail_norm: f64,
    /// Every term was nonnegative on the mesh.
    pub terms_nonnegative: bool,
    pub mesh_len: usize,
}

/// `1 + Σ_{n>=1} (K^n 1)(t)` for `t` in `eval_grid`, stopped once the
/// sup-norm of the latest term falls below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn neumann_series(
    m: f64,
    a: f64,
    alpha: f64,
    beta: f64,
    eval_grid: &[f64],
    tol: f64,
    max_terms: usize,
    opts: &NeumannOptions,
) -> Result<(Vec<f64>, NeumannReport)> {
    check_exponents(alpha, beta)?;
    if eval_grid.is_empty() || eval_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::param("evaluation grid must be nonempty and nonnegative"));
    }
    if !(opts.step > 0.0) || !(opts.grading_reach > 0.0) || !(opts.grading_floor > 0.0) {
        return Err(Error::param("invalid Neumann mesh options"));
    }
    let horizon = eval_grid.iter().copied().fold(0.0, f64::max).max(opts.step);
    let centre = (beta > 0.0 && a > 0.0 && a < horizon).then_some(a);
    if centre.is_some() && alpha + beta >= 1.0 {
        return Err(Error::param("need alpha + beta < 1 when a lies inside the range"));
    }
    let mesh = neumann_mesh(horizon, centre, eval_grid, opts);
    let op = SingularOperator::build(mesh, m, a, alpha, beta);
    let n = op.mesh.len();
    let mut term = vec![1.0; n];
    let mut total = vec![1.0; n];
    let mut norms = Vec::new();
    let mut nonnegative = true;
    let mut used = None;
    for k in 1..=max_terms {
        term = op.apply(&term);
        let norm = term.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        nonnegative &= term.iter().all(|&v| v >= 0.0);
        for (s, v) in total.iter_mut().zip(&term) {
            *s += v;
        }
        norms.push(norm);
        if norm < tol {
            used = Some(k);
            break;
        }
    }
    let last = norms.last().copied().unwrap_or(0.0);
    let Some(used) = used else {
        return Err(Error::Truncation {
            terms: max_terms,
            last_norm: last,
        });
    };
    let values = eval_grid
        .iter()
        .map(|t| total[op.mesh.partition_point(|x| x < t)])
        .collect();
    Ok((
        values,
        NeumannReport {
            term_norms: norms,
            n_terms_used: used,
            term_tail_norm: last,
            terms_nonnegative: nonnegative,
            mesh_len: n,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    Mean,
    SecondMoment,
}

/// A moment curve with its series diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub report: NeumannReport,
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_TERMS: usize = 60;

pub fn neumann_moment_curve(
    params: &VolterraMomentParams,
    which: MomentKind,
    eval_grid: &[f64],
    tol: f64,
    max_terms: usize,
) -> Result<MomentCurve> {
    neumann_moment_curve_with(params, which, eval_grid, tol, max_terms, &NeumannOptions::default())
}

pub fn neumann_moment_curve_with(
    params: &VolterraMomentParams,
    which: MomentKind,
    eval_grid: &[f64],
    tol: f64,
    max_terms: usize,
    opts: &NeumannOptions,
) -> Result<MomentCurve> {
    params.validate()?;
    let p = params;
    let (m, a, alpha, beta, scale) = match which {
        MomentKind::Mean => (p.mu, p.s0, p.alpha0, p.beta0, p.x0_mean),
        MomentKind::SecondMoment => {
            if p.mu != 0.0 {
                return Err(Error::param("the second-moment series needs mu = 0"));
            }
            (p.sigma, p.s1, p.alpha1, p.beta1, p.x0_sq_mean)
        }
    };
    let (series, report) = neumann_series(m, a, alpha, beta, eval_grid, tol, max_terms, opts)?;
    Ok(MomentCurve {
        times: eval_grid.to_vec(),
        values: series.into_iter().map(|v| scale * v).collect(),
        report,
    })
}

/// `Σ_{n>=0} (m Γ(1-α))^n t^{n(1-α)} / Γ(n(1-α) + 1)`, the series for
/// `β = 0`.
pub fn mittag_leffler_series(m: f64, alpha: f64, t: f64) -> f64 {
    if t <= 0.0 || m == 0.0 {
        return 1.0;
    }
    let q = 1.0 - alpha;
    let base = (m.abs() * gamma(q)).ln() + q * t.ln();
    let mut total = 1.0;
    for n in 1..2000 {
        let nf = n as f64;
        let mag = (nf * base - ln_gamma(nf * q + 1.0)).exp();
        let term = if m < 0.0 && n % 2 == 1 { -mag } else { mag };
        total += term;
        if mag < 1e-17 * total.abs() && nf * q > 1.0 + base.exp() {
            break;
        }
    }
    total
}

/// `(m Γ(1-α))^n t^{n(1-α)} / Γ(n(1-α) + 1)`, the `n`-th iterate of `K` on 1
/// for `β = 0`.
pub fn beta_zero_iterate(m: f64, alpha: f64, n: usize, t: f64) -> f64 {
    let q = 1.0 - alpha;
    let nf = n as f64;
    (m * gamma(q)).powi(n as i32) * t.powf(nf * q) / gamma(nf * q + 1.0)
}
