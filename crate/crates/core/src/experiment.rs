//! The experiment pipeline: source, degradation, whitening, adaptation,
//! restoration and scoring, with one CSV row per experiment.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::adapt1d::run_adapt;
use crate::adapt2d::run_adapt2d;
use crate::config::{AdaptSettings, ExperimentConfig, Shape, SourceSpec, Whitening};
use crate::degrade::DegradeSpec;
use crate::error::{Error, Result, StageContext};
use crate::io::{read_pgm, read_wav};
use crate::metrics::{aligned_correlation, normalized_correlation, parameter_error, Estimate, ParamErrors};
use crate::signals::{FilterTaps1D, Image2D, Kernel2D, Signal1D};
use crate::stats::kurtosis_excess;
use crate::synth::{source_1d, source_2d};
use crate::whitening::{fit_lpc, highpass_whiten, highpass_whiten_2d, lpc_whiten};

/// Column names of [`Report::csv_row`], in order.
pub const CSV_HEADER: &str = "id,seed,degrade,a1,a2,a3,delay,whiten,samples,passes,\
kurt_s,kurt_x,kurt_shat,rho_sx,rho_s_shat,shat_lag,shat_sign,\
true_p1,true_p2,true_p3,est_p1,est_p2,est_p3,err_p1,err_p2,err_p3,max_err";

#[derive(Debug, Clone, PartialEq)]
pub enum Restored {
    Signal(Signal1D),
    Image(Image2D),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    Taps(FilterTaps1D),
    Kernel(Kernel2D),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub id: String,
    pub seed: Option<u64>,
    pub degrade: Option<DegradeSpec>,
    pub whitening: Whitening,
    /// Samples (or pixels) in the source.
    pub samples: usize,
    pub passes: usize,
    pub kurt_s: f64,
    pub kurt_x: f64,
    pub kurt_shat: f64,
    pub rho_sx: f64,
    /// Magnitude of the source/restoration correlation after removing the
    /// delay and sign ambiguity.
    pub rho_s_shat: f64,
    pub shat_lag: isize,
    pub shat_sign: i8,
    /// `None` for the null experiment.
    pub params: Option<ParamErrors>,
    pub kurtosis_trace: Vec<f64>,
    pub filter: Filter,
    pub restored: Restored,
    /// Not part of the CSV row, which must be reproducible.
    pub wall_time: Duration,
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

impl Report {
    pub fn csv_row(&self) -> String {
        let mut f: Vec<String> = vec![self.id.clone(), self.seed.map(|s| s.to_string()).unwrap_or_default()];
        match &self.degrade {
            Some(d) => {
                f.push(d.kind.to_string());
                f.extend([num(d.a1), num(d.a2), num(d.a3), d.delay.to_string()]);
            }
            None => f.extend(["none".into(), String::new(), String::new(), String::new(), String::new()]),
        }
        f.push(match self.whitening {
            Whitening::None => "none".into(),
            Whitening::Highpass => "highpass".into(),
            Whitening::Lpc(order) => format!("lpc{order}"),
        });
        f.extend([self.samples.to_string(), self.passes.to_string()]);
        f.extend([self.kurt_s, self.kurt_x, self.kurt_shat, self.rho_sx, self.rho_s_shat].map(num));
        f.extend([self.shat_lag.to_string(), self.shat_sign.to_string()]);
        let cols = |v: Option<&Vec<f64>>| -> Vec<String> {
            (0..3).map(|i| v.and_then(|v| v.get(i)).map(|&x| num(x)).unwrap_or_default()).collect()
        };
        let p = self.params.as_ref();
        f.extend(cols(p.map(|p| &p.truth)));
        f.extend(cols(p.map(|p| &p.estimated)));
        f.extend(cols(p.map(|p| &p.errors)));
        f.push(p.map(|p| num(p.max_error())).unwrap_or_default());
        f.join(",")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment {}", self.id)?;
        writeln!(f, "  kurtosis   s {:+.4}  x {:+.4}  s_hat {:+.4}", self.kurt_s, self.kurt_x, self.kurt_shat)?;
        writeln!(
            f,
            "  rho        s,x {:.4}  s,s_hat {:.4} (lag {}, sign {:+})",
            self.rho_sx, self.rho_s_shat, self.shat_lag, self.shat_sign
        )?;
        if let Some(p) = &self.params {
            writeln!(f, "  true       {:.4?}", p.truth)?;
            writeln!(f, "  estimated  {:.4?}", p.estimated)?;
            writeln!(f, "  max error  {:.4}", p.max_error())?;
        }
        let trace: Vec<String> = self.kurtosis_trace.iter().map(|k| format!("{k:+.4}")).collect();
        writeln!(f, "  passes     {} (kurtosis per pass: {})", self.passes, trace.join(" "))?;
        write!(f, "  wall time  {:.3} s", self.wall_time.as_secs_f64())
    }
}

/// Header plus one row per report, LF-terminated.
pub fn reports_csv(reports: &[Report]) -> String {
    let mut out = String::with_capacity(256 * (reports.len() + 1));
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn write_reports(path: impl AsRef<Path>, reports: &[Report]) -> Result<()> {
    std::fs::write(path, reports_csv(reports))?;
    Ok(())
}

/// Runs one experiment. Errors carry the name of the failing stage.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let mut report = match cfg.adapt {
        AdaptSettings::OneD(_) => run_1d(cfg),
        AdaptSettings::TwoD(_) => run_2d(cfg),
    }?;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Runs experiments in parallel; results keep the input order.
pub fn run_experiments(cfgs: &[ExperimentConfig]) -> Vec<Result<Report>> {
    cfgs.par_iter().map(run_experiment).collect()
}

fn run_1d(cfg: &ExperimentConfig) -> Result<Report> {
    let AdaptSettings::OneD(acfg) = cfg.adapt else { unreachable!() };
    let s = match &cfg.source {
        SourceSpec::Synthetic { dist, shape: Shape::Signal(n), seed, color } => source_1d(*dist, *n, *seed, *color),
        SourceSpec::File(p) => read_wav(p),
        SourceSpec::Synthetic { .. } => Err(Error::contract("1-D experiment with an image source")),
    }
    .stage("source")?;
    let x = match &cfg.degrade {
        Some(d) => d.apply_1d(&s),
        None => Ok(s.clone()),
    }
    .stage("degrade")?;
    let x1 = match cfg.whitening {
        Whitening::None => Ok(x.clone()),
        Whitening::Highpass => highpass_whiten(&x),
        Whitening::Lpc(order) => fit_lpc(&x, order).and_then(|m| lpc_whiten(&x, &m)),
    }
    .stage("whiten")?;
    let x1 = if cfg.margin > 0 {
        if cfg.margin >= x1.len() {
            return Err(Error::degenerate("whitening margin covers the whole signal")).stage("whiten");
        }
        Signal1D::new(x1.samples()[cfg.margin..].to_vec()).stage("whiten")?
    } else {
        x1
    };
    let adapted = run_adapt(&x1, &acfg).stage("adapt")?;
    let shat = adapted.filter.apply(&x).stage("restore")?;
    let params = cfg
        .degrade
        .as_ref()
        .map(|d| parameter_error(d, Estimate::Taps(&adapted.filter)))
        .transpose()
        .stage("metrics")?;
    let max_lag = acfg.taps.min(s.len() - 1);
    let align = aligned_correlation(&s, &shat, max_lag).stage("metrics")?;
    Ok(Report {
        id: cfg.id.clone(),
        seed: cfg.seed(),
        degrade: cfg.degrade,
        whitening: cfg.whitening,
        samples: s.len(),
        passes: acfg.passes,
        kurt_s: kurtosis_excess(s.samples()).stage("metrics")?,
        kurt_x: kurtosis_excess(x.samples()).stage("metrics")?,
        kurt_shat: kurtosis_excess(shat.samples()).stage("metrics")?,
        rho_sx: normalized_correlation(&s, &x).stage("metrics")?,
        rho_s_shat: align.rho.abs(),
        shat_lag: align.lag,
        shat_sign: align.sign,
        params,
        kurtosis_trace: adapted.kurtosis_trace,
        filter: Filter::Taps(adapted.filter),
        restored: Restored::Signal(shat),
        wall_time: Duration::ZERO,
    })
}

fn run_2d(cfg: &ExperimentConfig) -> Result<Report> {
    let AdaptSettings::TwoD(acfg) = cfg.adapt else { unreachable!() };
    let s = match &cfg.source {
        SourceSpec::Synthetic { dist, shape: Shape::Image(h, w), seed, color } => {
            source_2d(*dist, *h, *w, *seed, *color)
        }
        SourceSpec::File(p) => read_pgm(p),
        SourceSpec::Synthetic { .. } => Err(Error::contract("2-D experiment with a 1-D source")),
    }
    .stage("source")?;
    let g = match &cfg.degrade {
        Some(d) => d.apply_2d(&s),
        None => Ok(s.clone()),
    }
    .stage("degrade")?;
    let g1 = match cfg.whitening {
        Whitening::None => Ok(g.clone()),
        Whitening::Highpass => highpass_whiten_2d(&g),
        Whitening::Lpc(_) => Err(Error::contract("lpc whitening is 1-D only")),
    }
    .stage("whiten")?;
    let m = cfg.margin;
    let g1 = if m > 0 {
        if m >= g1.height() || m >= g1.width() {
            return Err(Error::degenerate("whitening margin covers the whole image")).stage("whiten");
        }
        g1.crop(m, m, g1.height() - m, g1.width() - m).stage("whiten")?
    } else {
        g1
    };
    let adapted = run_adapt2d(&g1, &acfg).stage("adapt")?;
    let shat = adapted.kernel.apply(&g).and_then(|r| r.rescale_unit()).stage("restore")?;
    let params = cfg
        .degrade
        .as_ref()
        .map(|d| parameter_error(d, Estimate::Kernel(&adapted.kernel)))
        .transpose()
        .stage("metrics")?;
    let rho = normalized_correlation(&s, &shat).stage("metrics")?;
    Ok(Report {
        id: cfg.id.clone(),
        seed: cfg.seed(),
        degrade: cfg.degrade,
        whitening: cfg.whitening,
        samples: s.pixels().len(),
        passes: acfg.passes,
        kurt_s: kurtosis_excess(s.pixels()).stage("metrics")?,
        kurt_x: kurtosis_excess(g.pixels()).stage("metrics")?,
        kurt_shat: kurtosis_excess(shat.pixels()).stage("metrics")?,
        rho_sx: normalized_correlation(&s, &g).stage("metrics")?,
        rho_s_shat: rho.abs(),
        shat_lag: 0,
        shat_sign: if rho < 0.0 { -1 } else { 1 },
        params,
        kurtosis_trace: adapted.kurtosis_trace,
        filter: Filter::Kernel(adapted.kernel),
        restored: Restored::Image(shat),
        wall_time: Duration::ZERO,
    })
}
