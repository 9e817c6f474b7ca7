use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("increment index {index} beyond populated length {len}")]
    NotPopulated { index: usize, len: usize },

    /// A coefficient evaluated to a non-finite value. `index` is the jump or
    /// step number, `time` the integration time and `eval_time` the kernel's
    /// first argument for Volterra coefficients.
    #[error("singular coefficient at step {index} (s = {time}{})", eval_time.map(|t| format!(", t = {t}")).unwrap_or_default())]
    SingularHit {
        index: usize,
        time: f64,
        eval_time: Option<f64>,
    },

    /// The kernel has no finite value at this point (e.g. `s = 0`).
    #[error("kernel diverges at (t, s) = ({t}, {s})")]
    KernelDivergence { t: f64, s: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Neumann series not converged after {terms} terms (last term sup-norm {last_norm:e})")]
    Truncation { terms: usize, last_norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
