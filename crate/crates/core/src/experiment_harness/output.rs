use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::lemma::LemmaReport;
use super::moments::MomentReport;
use super::rates::{ConvergenceReport, WeakErrorReport};
use super::tables::{KernelTable, OracleCurves};

/// Any finished run.
#[derive(Debug, Clone)]
pub enum Report {
    Moments(MomentReport),
    StrongRate(ConvergenceReport),
    WeakRate(WeakErrorReport),
    Lemma(LemmaReport),
    Kernel(KernelTable),
    Oracle(OracleCurves),
}

/// Shortest round-trip decimal; `NaN` for missing values.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    num(v.unwrap_or(f64::NAN))
}

struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(&path, e),
            other => Error::io(&path, std::io::Error::other(format!("{other:?}"))),
        };
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

fn plot_script(data: &str, title: &str, xlabel: &str, ylabel: &str, logscale: bool, series: &[(usize, usize, &str)]) -> String {
    let stem = data.trim_end_matches(".csv");
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    let _ = writeln!(s, "set output \"{stem}.png\"");
    let _ = writeln!(s, "set title \"{title}\"");
    let _ = writeln!(s, "set xlabel \"{xlabel}\"");
    let _ = writeln!(s, "set ylabel \"{ylabel}\"");
    if logscale {
        s.push_str("set logscale xy\n");
    }
    s.push_str("set key left top\n");
    let parts: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(i, (x, y, label))| {
            let file = if i == 0 { format!("\"{data}\"") } else { "\"\"".to_string() };
            format!("{file} using {x}:{y} skip 1 with linespoints title \"{label}\"")
        })
        .collect();
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

fn emit_moments(e: &mut Emitter, r: &MomentReport) -> Result<()> {
    let header = ["t", "cp_mc", "cp_se", "em_mc", "em_se", "exact"];
    let label = match r.kind {
        super::config::ExperimentKind::SveMoments => "Volterra",
        _ => "SDE",
    };
    for (file, second) in [("mean.csv", false), ("second_moment.csv", true)] {
        let rows = r.rows.iter().map(|row| {
            let pick = |m: &super::moments::SchemeMoments| if second { m.second } else { m.mean };
            let cp = pick(&row.cp);
            let em = row.em.as_ref().map(pick);
            let exact = if second { row.reference_second } else { row.reference_mean };
            vec![
                num(row.t),
                num(cp.mean),
                num(cp.se),
                opt(em.map(|m| m.mean)),
                opt(em.map(|m| m.se)),
                opt(exact),
            ]
        });
        e.csv(file, &header, rows)?;
        let what = if second { "E X_t^2" } else { "E X_t" };
        let script = plot_script(
            file,
            &format!("{label}: {what}, {} paths", r.n_paths),
            "t",
            what,
            false,
            &[(1, 2, "compound Poisson"), (1, 4, "Euler-Maruyama"), (1, 6, "reference")],
        );
        e.text(&file.replace(".csv", ".gp"), &script)?;
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "paths={} epsilon={} em_step={}", r.n_paths, num(r.epsilon), opt(r.em_step));
    let _ = writeln!(
        summary,
        "cp singular_hits={} mean_points={}",
        r.cp.singular_hits,
        num(r.cp.mean_points)
    );
    if let Some(em) = r.em {
        let _ = writeln!(
            summary,
            "em singular_hits={} first_hit_time={}",
            em.singular_hits,
            opt(em.first_hit_time)
        );
    }
    for (kind, rep) in &r.series {
        let _ = writeln!(
            summary,
            "series {kind:?} terms={} tail_norm={}",
            rep.n_terms_used,
            num(rep.term_tail_norm)
        );
    }
    e.text("summary.txt", &summary)
}

fn emit_strong(e: &mut Emitter, r: &ConvergenceReport) -> Result<()> {
    let rows = r.rungs.iter().map(|g| {
        vec![
            num(g.epsilon),
            num(g.sup_sq_error.mean),
            num(g.sup_sq_error.se),
            num(g.epsilon.ln()),
            num(g.sup_sq_error.mean.ln()),
        ]
    });
    e.csv("strong_rate.csv", &["epsilon", "mean_sup_sq_err", "se", "log_eps", "log_err"], rows)?;
    let line = match r.fit {
        Some(f) => format!(
            "slope={} intercept={} theoretical={} band=[{},{}] pass={}\n",
            num(f.slope),
            num(f.intercept),
            num(r.theoretical_slope),
            num(r.slope_band[0]),
            num(r.slope_band[1]),
            r.pass()
        ),
        None => format!("slope=undefined degenerate={} theoretical={}\n", r.degenerate, num(r.theoretical_slope)),
    };
    e.text("slope.txt", &line)?;
    e.text(
        "strong_rate.gp",
        &plot_script("strong_rate.csv", "mean sup squared error", "epsilon", "error", true, &[(1, 2, "compound Poisson")]),
    )
}

fn emit_weak(e: &mut Emitter, r: &WeakErrorReport) -> Result<()> {
    let mut rows = Vec::new();
    for g in &r.rungs {
        for (i, &t) in r.eval_times.iter().enumerate() {
            let est = g.estimates[i];
            rows.push(vec![
                num(g.epsilon),
                num(t),
                num(est.mean),
                num(est.se),
                num(r.reference[i]),
                num((est.mean - r.reference[i]).abs()),
            ]);
        }
    }
    e.csv("weak_rate.csv", &["epsilon", "t", "mc", "se", "reference", "abs_err"], rows)?;
    let mut summary = String::new();
    for (i, &t) in r.eval_times.iter().enumerate() {
        let _ = writeln!(summary, "t={} monotone={} bound_exponent={}", num(t), r.monotone_at(i), num(r.bound_exponent));
    }
    e.text("weak_summary.txt", &summary)
}

fn emit_lemma(e: &mut Emitter, r: &LemmaReport) -> Result<()> {
    let rows = r.bounds.iter().map(|b| {
        vec![
            b.case.name().to_string(),
            b.case.describe(),
            num(b.estimate.mean),
            num(b.estimate.se),
            num(b.bound),
            num(b.ratio),
            b.pass.to_string(),
        ]
    });
    e.csv("lemma_bounds.csv", &["check", "params", "estimate", "se", "bound", "ratio", "pass"], rows)?;
    let rows = r.identities.iter().map(|i| {
        vec![
            i.name.to_string(),
            i.case.describe(),
            num(i.estimate.mean),
            num(i.estimate.se),
            num(i.expected),
            num(i.z),
            i.pass.to_string(),
        ]
    });
    e.csv("lemma_identities.csv", &["check", "params", "estimate", "se", "expected", "z", "pass"], rows)
}

fn emit_kernel(e: &mut Emitter, r: &KernelTable) -> Result<()> {
    let rows = r.rows.iter().map(|k| {
        vec![
            num(k.hurst),
            num(k.t),
            num(k.s),
            num(k.value),
            k.method.as_str().to_string(),
            num(k.tabulated),
            opt(k.integral),
        ]
    });
    e.csv("kernel_table.csv", &["hurst", "t", "s", "k", "method", "k_tabulated", "k_integral"], rows)?;
    let rows = r.rates.iter().map(|g| {
        vec![
            num(g.hurst),
            num(g.beta),
            num(g.eps_prime),
            num(g.gamma),
            num(g.mse_rate),
            g.footnote.clone(),
        ]
    });
    e.csv("rate_report.csv", &["hurst", "beta", "eps_prime", "gamma", "mse_rate", "footnote"], rows)
}

fn emit_oracle(e: &mut Emitter, r: &OracleCurves) -> Result<()> {
    let terms = r.mean.report.n_terms_used.max(r.second.as_ref().map_or(0, |c| c.report.n_terms_used));
    let tail = r
        .mean
        .report
        .term_tail_norm
        .max(r.second.as_ref().map_or(0.0, |c| c.report.term_tail_norm));
    let rows = r.times.iter().enumerate().map(|(i, &t)| {
        vec![
            num(t),
            num(r.mean.values[i]),
            opt(r.second.as_ref().map(|c| c.values[i])),
            terms.to_string(),
            num(tail),
        ]
    });
    e.csv("oracle.csv", &["t", "mean", "second_moment", "n_terms_used", "term_tail_norm"], rows)?;
    e.text(
        "oracle.gp",
        &plot_script("oracle.csv", "Neumann-series moments", "t", "moment", false, &[(1, 2, "mean"), (1, 3, "second moment")]),
    )
}

/// Writes the CSVs, plot scripts and summaries of `report` into `dir` and
/// returns the written paths. Output depends only on the report contents.
pub fn emit_outputs(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut e = Emitter::new(dir)?;
    match report {
        Report::Moments(r) => emit_moments(&mut e, r)?,
        Report::StrongRate(r) => emit_strong(&mut e, r)?,
        Report::WeakRate(r) => emit_weak(&mut e, r)?,
        Report::Lemma(r) => emit_lemma(&mut e, r)?,
        Report::Kernel(r) => emit_kernel(&mut e, r)?,
        Report::Oracle(r) => emit_oracle(&mut e, r)?,
    }
    Ok(e.written)
}
