use crate::error::{Error, Result};
use crate::fbm_kernel::{fbm_rate_report, kernel_k, kernel_k_integral, FbmKernel, HurstParam, KernelMethod, RateReport};
use crate::reference_oracles::{neumann_moment_curve_with, MomentCurve, MomentKind, NeumannOptions};

use super::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub hurst: f64,
    pub t: f64,
    pub s: f64,
    /// Direct evaluation and the method used.
    pub value: f64,
    pub method: KernelMethod,
    /// Tabulated-F evaluation used by the simulator.
    pub tabulated: f64,
    /// Integral representation (`H > 1/2` only).
    pub integral: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub rows: Vec<KernelRow>,
    /// Rate statements for every `H != 1/2`.
    pub rates: Vec<RateReport>,
}

impl KernelTable {
    /// Largest relative gap between the direct and tabulated values.
    pub fn max_table_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| ((r.tabulated - r.value) / r.value).abs())
            .fold(0.0, f64::max)
    }
}

pub fn run_kernel_table(cfg: &ExperimentConfig) -> Result<KernelTable> {
    let cfg = cfg.clone().for_kind(ExperimentKind::KernelTable)?;
    cfg.validate()?;
    let k = &cfg.kernel;
    let mut rows = Vec::new();
    let mut rates = Vec::new();
    for &hv in &k.hursts {
        let h = HurstParam::new(hv)?;
        let kernel = FbmKernel::new(h);
        for &t in &k.times {
            for &ratio in &k.ratios {
                let s = ratio * t;
                let direct = kernel_k(t, s, h)?;
                rows.push(KernelRow {
                    hurst: hv,
                    t,
                    s,
                    value: direct.value,
                    method: direct.method,
                    tabulated: kernel.eval(t, s),
                    integral: (hv > 0.5).then(|| kernel_k_integral(t, s, h)).transpose()?,
                });
            }
        }
        if !h.is_half() {
            rates.push(fbm_rate_report(h, k.beta, k.eps_prime)?);
        }
    }
    Ok(KernelTable { rows, rates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCurves {
    pub times: Vec<f64>,
    pub mean: MomentCurve,
    /// Present only when `mu = 0`.
    pub second: Option<MomentCurve>,
}

pub fn run_oracle(cfg: &ExperimentConfig) -> Result<OracleCurves> {
    let cfg = cfg.clone().for_kind(ExperimentKind::Oracle)?;
    cfg.validate()?;
    let params = cfg.volterra_params();
    let o = cfg.oracle;
    if !(o.step > 0.0) || o.max_terms == 0 || !(o.tol > 0.0) {
        return Err(Error::Config("oracle needs step > 0, tol > 0 and max-terms >= 1".into()));
    }
    let opts = NeumannOptions::with_step(o.step);
    let curve = |which| neumann_moment_curve_with(&params, which, &cfg.eval_times, o.tol, o.max_terms, &opts);
    Ok(OracleCurves {
        times: cfg.eval_times.clone(),
        mean: curve(MomentKind::Mean)?,
        second: if params.mu == 0.0 {
            Some(curve(MomentKind::SecondMoment)?)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference_oracles::VolterraMomentParams;

    #[test]
    fn default_table_is_consistent() {
        let cfg = ExperimentConfig::new(ExperimentKind::KernelTable);
        let table = run_kernel_table(&cfg).unwrap();
        assert_eq!(table.rows.len(), 4 * 3 * 7);
        assert_eq!(table.rates.len(), 4);
        assert!(table.max_table_gap() < 1e-8);
        for r in table.rows.iter().filter(|r| r.hurst > 0.5) {
            let i = r.integral.unwrap();
            assert!(((i - r.value) / r.value).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn oracle_second_moment_only_without_drift() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Oracle);
        cfg.eval_times = vec![0.5, 1.0];
        cfg.oracle.step = 1.0 / 256.0;
        let c = run_oracle(&cfg).unwrap();
        assert!(c.second.is_none());
        cfg.volterra = VolterraMomentParams::reference_set2();
        let c = run_oracle(&cfg).unwrap();
        assert_eq!(c.mean.values, vec![1.0, 1.0]);
        assert!(c.second.unwrap().values[1] > 1.0);
    }
}
