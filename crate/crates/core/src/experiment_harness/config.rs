use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference_oracles::{SingularDriftParams, VolterraMomentParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SdeMoments,
    SveMoments,
    SdeStrongRate,
    SveWeakRate,
    LemmaChecks,
    KernelTable,
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SdeMoments => "sde-moments",
            ExperimentKind::SveMoments => "sve-moments",
            ExperimentKind::SdeStrongRate => "sde-strong-rate",
            ExperimentKind::SveWeakRate => "sve-weak-rate",
            ExperimentKind::LemmaChecks => "lemma-checks",
            ExperimentKind::KernelTable => "kernel-table",
            ExperimentKind::Oracle => "oracle",
        }
    }
}

/// Law of the initial value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialLaw {
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::Constant { value: 1.0 }
    }
}

impl InitialLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Constant { value } => value,
            InitialLaw::Normal { mean, .. } => mean,
            InitialLaw::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            InitialLaw::Constant { value } => value * value,
            InitialLaw::Normal { mean, sd } => mean * mean + sd * sd,
            InitialLaw::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialLaw::Constant { value } => value,
            InitialLaw::Normal { mean, sd } => Normal::new(mean, sd).map(|d| d.sample(rng)).unwrap_or(mean),
            InitialLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialLaw::Constant { value } => value.is_finite(),
            InitialLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            InitialLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid initial-value law {self:?}")))
        }
    }
}

/// Which moment a weak-error run tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackedMoment {
    #[default]
    Mean,
    SecondMoment,
}

/// Acceptance bands applied to a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CheckSettings {
    /// Allowed deviation in units of the Monte Carlo standard error.
    pub se_multiple: f64,
    /// Additional allowance as a fraction of the reference value.
    pub relative_band: f64,
    /// Accepted interval for a fitted log-log slope.
    pub slope_band: [f64; 2],
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            se_multiple: 4.0,
            relative_band: 0.0,
            slope_band: [0.3, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct LemmaLattice {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub orders: Vec<u32>,
    pub jump_indices: Vec<usize>,
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub ratio_limit: f64,
}

impl Default for LemmaLattice {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.0],
            betas: vec![0.5, 1.0],
            orders: vec![1, 2, 4],
            jump_indices: vec![1, 10, 100],
            times: vec![0.5, 1.0, 2.0],
            epsilons: vec![0.1, 0.01],
            ratio_limit: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct KernelTableSettings {
    pub hursts: Vec<f64>,
    pub times: Vec<f64>,
    /// Values of `s / t` tabulated for each `t`.
    pub ratios: Vec<f64>,
    /// Hölder exponent of the drift and diffusion in the rate report.
    pub beta: f64,
    pub eps_prime: f64,
}

impl Default for KernelTableSettings {
    fn default() -> Self {
        Self {
            hursts: vec![0.25, 0.3, 0.75, 0.9],
            times: vec![0.5, 1.0, 2.0],
            ratios: vec![0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99],
            beta: 1.0,
            eps_prime: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct OracleSettings {
    pub tol: f64,
    pub max_terms: usize,
    pub step: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tol: crate::reference_oracles::volterra::DEFAULT_TOL,
            max_terms: crate::reference_oracles::volterra::DEFAULT_MAX_TERMS,
            step: 1.0 / 1024.0,
        }
    }
}

/// A full experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_ladder: Vec<f64>,
    /// Euler–Maruyama step; defaults to `epsilon`.
    #[serde(default)]
    pub em_step: Option<f64>,
    #[serde(default = "yes")]
    pub run_em: bool,
    #[serde(default)]
    pub eval_times: Vec<f64>,
    #[serde(default)]
    pub moment: TrackedMoment,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub x0: InitialLaw,
    #[serde(default)]
    pub singular_drift: SingularDriftParams,
    #[serde(default = "VolterraMomentParams::reference_set1")]
    pub volterra: VolterraMomentParams,
    #[serde(default)]
    pub checks: CheckSettings,
    #[serde(default)]
    pub lemma: LemmaLattice,
    #[serde(default)]
    pub kernel: KernelTableSettings,
    #[serde(default)]
    pub oracle: OracleSettings,
}

fn default_seed() -> u64 {
    20_240_501
}
fn default_paths() -> usize {
    10_000
}
fn default_horizon() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Defaults for `kind` with everything else at its default value.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut cfg: Self = toml::from_str("").expect("all fields have defaults");
        cfg.kind = Some(kind);
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serialisable")
    }

    /// Sets `kind`, failing if the file named a different experiment.
    pub fn for_kind(mut self, kind: ExperimentKind) -> Result<Self> {
        match self.kind {
            Some(k) if k != kind => Err(Error::Config(format!(
                "config describes a {} experiment, not {}",
                k.as_str(),
                kind.as_str()
            ))),
            _ => {
                self.kind = Some(kind);
                Ok(self)
            }
        }
    }

    pub fn em_step(&self) -> Option<f64> {
        self.em_step.or(self.epsilon)
    }

    /// The Volterra parameters with the initial moments taken from `x0`.
    pub fn volterra_params(&self) -> VolterraMomentParams {
        VolterraMomentParams {
            x0_mean: self.x0.mean(),
            x0_sq_mean: self.x0.second_moment(),
            ..self.volterra
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self
            .kind
            .ok_or_else(|| Error::Config("experiment kind not set".into()))?;
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.n_paths == 0 {
            return cfg("n-paths must be positive".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return cfg("horizon must be positive".into());
        }
        self.x0.validate()?;
        let needs_times = matches!(
            kind,
            ExperimentKind::SdeMoments | ExperimentKind::SveMoments | ExperimentKind::SveWeakRate | ExperimentKind::Oracle
        );
        if needs_times && self.eval_times.is_empty() {
            return cfg("eval-times must not be empty".into());
        }
        if self
            .eval_times
            .iter()
            .any(|&t| !(0.0..=self.horizon).contains(&t))
        {
            return cfg(format!("eval-times must lie in [0, {}]", self.horizon));
        }
        if matches!(kind, ExperimentKind::SdeMoments | ExperimentKind::SveMoments) {
            match self.epsilon {
                Some(e) if e > 0.0 && e.is_finite() => {}
                _ => return cfg("epsilon must be set and positive".into()),
            }
            if self.run_em && !self.em_step().is_some_and(|h| h > 0.0 && h.is_finite()) {
                return cfg("em-step must be positive".into());
            }
        }
        if matches!(kind, ExperimentKind::SdeStrongRate | ExperimentKind::SveWeakRate) {
            let min_len = if kind == ExperimentKind::SdeStrongRate { 4 } else { 2 };
            if self.epsilon_ladder.len() < min_len {
                return cfg(format!("epsilon-ladder needs at least {min_len} entries"));
            }
            if self.epsilon_ladder.iter().any(|&e| !(e > 0.0 && e.is_finite()))
                || self.epsilon_ladder.windows(2).any(|w| w[1] >= w[0])
            {
                return cfg("epsilon-ladder must be positive and strictly decreasing".into());
            }
        }
        if matches!(kind, ExperimentKind::SdeMoments | ExperimentKind::SdeStrongRate) {
            self.singular_drift.validate().map_err(|e| Error::Config(e.to_string()))?;
            if self.horizon > 1.0 {
                return cfg("the singular-drift model lives on [0, 1]".into());
            }
        }
        if matches!(kind, ExperimentKind::SveMoments | ExperimentKind::SveWeakRate | ExperimentKind::Oracle) {
            self.volterra.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if kind == ExperimentKind::SveWeakRate
            && self.moment == TrackedMoment::SecondMoment
            && self.volterra.mu != 0.0
        {
            return cfg("second-moment reference needs mu = 0".into());
        }
        if kind == ExperimentKind::LemmaChecks {
            let l = &self.lemma;
            if l.epsilons.iter().chain(&l.times).any(|&v| !(v > 0.0))
                || l.jump_indices.contains(&0)
                || l.orders.contains(&0)
            {
                return cfg("lemma lattice values must be positive".into());
            }
        }
        if kind == ExperimentKind::KernelTable {
            let k = &self.kernel;
            if k.hursts.iter().any(|&h| !(h > 0.0 && h < 1.0))
                || k.times.iter().any(|&t| !(t > 0.0))
                || k.ratios.iter().any(|&r| !(r > 0.0 && r < 1.0))
            {
                return cfg("kernel table needs H in (0,1), t > 0 and s/t in (0,1)".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::new(ExperimentKind::SdeMoments);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn kebab_case_file() {
        let text = r#"
            kind = "sve-moments"
            master-seed = 7
            n-paths = 200
            epsilon = 0.01
            eval-times = [0.5, 1.0]

            [x0]
            distribution = "uniform"
            low = 0.5
            high = 1.5

            [volterra]
            sigma = 0.3
            alpha1 = 0.05
            beta1 = 0.25
            s1 = 0.2
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind, Some(ExperimentKind::SveMoments));
        assert_eq!(cfg.em_step(), Some(0.01));
        let p = cfg.volterra_params();
        assert_eq!(p.mu, 0.0);
        assert_eq!(p.x0_mean, 1.0);
        assert!((p.x0_sq_mean - 13.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("n-paths = 10\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[volterra]\nmu = 0.1\nnu = 2").is_err());
    }

    #[test]
    fn empty_eval_times_rejected() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SdeMoments);
        cfg.epsilon = Some(0.001);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.eval_times = vec![0.5];
        cfg.validate().unwrap();
    }

    #[test]
    fn ladder_must_decrease() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SdeStrongRate);
        cfg.epsilon_ladder = vec![0.1, 0.05, 0.05, 0.01];
        assert!(cfg.validate().is_err());
        cfg.epsilon_ladder = vec![0.1, 0.05, 0.02, 0.01];
        cfg.validate().unwrap();
    }

    #[test]
    fn kind_mismatch_rejected() {
        let cfg = ExperimentConfig::new(ExperimentKind::Oracle);
        assert!(cfg.clone().for_kind(ExperimentKind::LemmaChecks).is_err());
        assert!(cfg.for_kind(ExperimentKind::Oracle).is_ok());
    }

    #[test]
    fn initial_law_moments() {
        let n = InitialLaw::Normal { mean: 1.0, sd: 2.0 };
        assert_eq!(n.second_moment(), 5.0);
        assert_eq!(InitialLaw::default().mean(), 1.0);
    }
}
