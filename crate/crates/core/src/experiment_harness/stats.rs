use rayon::prelude::*;

/// Sample mean with its standard error `sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Two-pass estimate over `values`, summed in order. NaN for an empty
    /// sample; zero error for a single value.
    pub fn from_values<I>(values: I) -> Self
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let it = values.into_iter();
        let mut n = 0usize;
        let mut sum = 0.0;
        for v in it.clone() {
            n += 1;
            sum += v;
        }
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = sum / n as f64;
        if n == 1 {
            return Self { n, mean, se: 0.0 };
        }
        let ss: f64 = it.map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        Self {
            n,
            mean,
            se: sd / (n as f64).sqrt(),
        }
    }

    /// `(mean - reference) / se`; zero when both the deviation and the error
    /// vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }

    /// `|mean - reference| <= k se + rel |reference|`.
    pub fn within(&self, reference: f64, k: f64, rel: f64) -> bool {
        (self.mean - reference).abs() <= k * self.se + rel * reference.abs()
    }
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Worker count: `CPSIM_THREADS` if set, capped by the machine.
pub fn worker_count() -> usize {
    let machine = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    std::env::var("CPSIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(machine, |n| n.min(machine))
}

/// `f(0), …, f(n-1)` computed on the worker pool, returned in index order.
pub fn map_paths<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let threads = worker_count();
    if threads <= 1 {
        return (0..n as u64).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n as u64).into_par_iter().map(&f).collect()),
        Err(_) => (0..n as u64).map(f).collect(),
    }
}

/// Seed for rung `r` of a ladder, derived from the master seed.
pub fn rung_seed(master: u64, rung: usize) -> u64 {
    master ^ (rung as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
