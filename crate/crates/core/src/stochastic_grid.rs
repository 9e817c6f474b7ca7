//! Randomness consumed by the schemes: the rescaled Poisson clock and the
//! Brownian increments on the deterministic `epsilon` grid.
//!
//! Every path owns a [`PathStream`] keyed by `(master_seed, path_index)`.
//! Each purpose (exponential waiting times, Gaussian increments, initial
//! values, bridge corrections) reads from its own ChaCha8 sub-stream: the key
//! is derived from `(master_seed, purpose)` and the ChaCha stream id is the
//! path index. A path's draws are therefore a pure function of its identity,
//! whatever else runs concurrently.
//!
//! Exponential waiting times use the inverse CDF `-eps * ln(U)` with `U` drawn
//! from the open interval `(0, 1)`. Standard normals use the Ziggurat sampler
//! of `rand_distr::StandardNormal`; this choice is fixed for a release so
//! reruns are bit-identical.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Purpose tags for the independent sub-streams of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamTag {
    Exponential = 0,
    Gaussian = 1,
    InitialValue = 2,
    Bridge = 3,
    /// Noise of a baseline scheme run alongside the main one.
    Baseline = 4,
}

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn substream(master_seed: u64, tag: StreamTag, path_index: u64) -> ChaCha8Rng {
    let mut state = mix64(master_seed ^ mix64((tag as u64).wrapping_add(0x9E37_79B9_7F4A_7C15)));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path_index);
    rng
}

/// Source of uniforms on the open interval (0, 1).
pub trait UniformSource {
    fn next_open01(&mut self) -> f64;
}

/// Source of standard normal variates.
pub trait GaussianSource {
    fn next_standard_normal(&mut self) -> f64;
}

/// Per-path random streams.
#[derive(Debug, Clone)]
pub struct PathStream {
    master_seed: u64,
    path_index: u64,
    exponential: ChaCha8Rng,
    gaussian: ChaCha8Rng,
}

impl PathStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
            exponential: substream(master_seed, StreamTag::Exponential, path_index),
            gaussian: substream(master_seed, StreamTag::Gaussian, path_index),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// A fresh generator for an auxiliary purpose of this path.
    pub fn auxiliary(&self, tag: StreamTag) -> ChaCha8Rng {
        substream(self.master_seed, tag, self.path_index)
    }
}

impl UniformSource for PathStream {
    fn next_open01(&mut self) -> f64 {
        self.exponential.sample(Open01)
    }
}

impl GaussianSource for PathStream {
    fn next_standard_normal(&mut self) -> f64 {
        self.gaussian.sample(StandardNormal)
    }
}

impl UniformSource for ChaCha8Rng {
    fn next_open01(&mut self) -> f64 {
        self.sample(Open01)
    }
}

impl GaussianSource for ChaCha8Rng {
    fn next_standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

/// Replays a fixed sequence of draws; panics once exhausted. Handy for
/// hand-checked examples.
#[derive(Debug, Clone)]
pub struct FixedDraws {
    values: Vec<f64>,
    next: usize,
}

impl FixedDraws {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self {
            values: values.into(),
            next: 0,
        }
    }

    fn pop(&mut self) -> f64 {
        let v = *self
            .values
            .get(self.next)
            .expect("FixedDraws exhausted");
        self.next += 1;
        v
    }
}

impl UniformSource for FixedDraws {
    fn next_open01(&mut self) -> f64 {
        self.pop()
    }
}

impl GaussianSource for FixedDraws {
    fn next_standard_normal(&mut self) -> f64 {
        self.pop()
    }
}

/// Realized jump epochs `S_k = eps * (T_1 + ... + T_k)` of the rescaled
/// Poisson clock. The list always ends with the first epoch beyond the
/// horizon, so `jump_times.len() == count_cutoff + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpGrid {
    epsilon: f64,
    horizon: f64,
    jump_times: Vec<f64>,
    count_cutoff: usize,
}

impl JumpGrid {
    /// Builds a grid from explicit epochs. Epochs must be strictly increasing
    /// and positive.
    pub fn from_jump_times(epsilon: f64, horizon: f64, jump_times: Vec<f64>) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("horizon", horizon)?;
        let mut prev = 0.0;
        for &s in &jump_times {
            if !(s > prev) {
                return Err(Error::param("jump times must be positive and strictly increasing"));
            }
            prev = s;
        }
        let count_cutoff = jump_times.partition_point(|&s| s <= horizon);
        Ok(Self {
            epsilon,
            horizon,
            jump_times,
            count_cutoff,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// All generated epochs, including the first one past the horizon.
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Epochs `S_1 .. S_N` with `S_N <= horizon`.
    pub fn within_horizon(&self) -> &[f64] {
        &self.jump_times[..self.count_cutoff]
    }

    /// `N`, the number of epochs not exceeding the horizon.
    pub fn count_cutoff(&self) -> usize {
        self.count_cutoff
    }

    /// Number of epochs `S_k <= t`, i.e. the unit-rate count at `t / eps`.
    pub fn count_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.within_horizon().partition_point(|&s| s <= t))
    }

    /// `eps * count_at(t)`, the rescaled clock.
    pub fn rescaled_count(&self, t: f64) -> Result<f64> {
        Ok(self.epsilon * self.count_at(t)? as f64)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Draws exponential waiting times with mean `epsilon` until the running
/// epoch exceeds `horizon`.
pub fn sample_jump_grid<U: UniformSource + ?Sized>(
    epsilon: f64,
    horizon: f64,
    uniforms: &mut U,
) -> Result<JumpGrid> {
    check_positive("epsilon", epsilon)?;
    check_positive("horizon", horizon)?;
    let mut jump_times = Vec::with_capacity((horizon / epsilon * 1.1) as usize + 8);
    let mut s = 0.0;
    loop {
        let next = s - epsilon * uniforms.next_open01().ln();
        // Waits below the ulp of s would break strict monotonicity; redraw.
        if next <= s {
            continue;
        }
        s = next;
        jump_times.push(s);
        if s > horizon {
            break;
        }
    }
    let count_cutoff = jump_times.len() - 1;
    Ok(JumpGrid {
        epsilon,
        horizon,
        jump_times,
        count_cutoff,
    })
}

/// Brownian increments `W_{k eps} - W_{(k-1) eps}` on the deterministic grid,
/// extended lazily, with cached prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBrownian {
    epsilon: f64,
    dim_m: usize,
    increments: Vec<f64>,
    /// `prefix[k*m .. (k+1)*m]` holds `W_{k eps}`; starts with the zero vector.
    prefix: Vec<f64>,
}

impl GridBrownian {
    pub fn new(epsilon: f64, dim_m: usize) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        if dim_m == 0 {
            return Err(Error::param("noise dimension must be at least 1"));
        }
        Ok(Self {
            epsilon,
            dim_m,
            increments: Vec::new(),
            prefix: vec![0.0; dim_m],
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    /// Number of populated increments.
    pub fn len(&self) -> usize {
        self.increments.len() / self.dim_m
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Populates every increment with index `<= up_to_index`. Existing
    /// increments are left untouched, so increment `k` is the `k`-th block of
    /// `dim_m` normals drawn from the source.
    pub fn sample_increments<G: GaussianSource + ?Sized>(&mut self, up_to_index: usize, normals: &mut G) {
        let m = self.dim_m;
        let scale = self.epsilon.sqrt();
        let have = self.len();
        if up_to_index <= have {
            return;
        }
        self.increments.reserve((up_to_index - have) * m);
        self.prefix.reserve((up_to_index - have) * m);
        for _ in have..up_to_index {
            let base = self.prefix.len() - m;
            for j in 0..m {
                let dw = scale * normals.next_standard_normal();
                self.increments.push(dw);
                let w = self.prefix[base + j] + dw;
                self.prefix.push(w);
            }
        }
    }

    /// Increment `k` (1-based).
    pub fn increment(&self, k: usize) -> Result<&[f64]> {
        if k == 0 || k > self.len() {
            return Err(Error::NotPopulated {
                index: k,
                len: self.len(),
            });
        }
        let m = self.dim_m;
        Ok(&self.increments[(k - 1) * m..k * m])
    }

    /// Increments `1..=n` as one flat slice of `n * dim_m` values.
    pub fn leading(&self, n: usize) -> Result<&[f64]> {
        if n > self.len() {
            return Err(Error::NotPopulated {
                index: n,
                len: self.len(),
            });
        }
        Ok(&self.increments[..n * self.dim_m])
    }

    /// `W_{k eps}`; the zero vector for `k = 0`.
    pub fn prefix_sum(&self, k: usize) -> Result<&[f64]> {
        if k > self.len() {
            return Err(Error::NotPopulated {
                index: k,
                len: self.len(),
            });
        }
        let m = self.dim_m;
        Ok(&self.prefix[k * m..(k + 1) * m])
    }
}
