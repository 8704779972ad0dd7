use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kurtdecon::adapt1d::{kurtosis_surface, run_adapt, symmetric_grid, AdaptConfig};
use kurtdecon::adapt2d::{run_adapt2d, Adapt2dConfig};
use kurtdecon::config::{ExperimentConfig, DEFAULT_IMAGE_MARGIN};
use kurtdecon::degrade::{DegradeKind, DegradeSpec};
use kurtdecon::experiment::{reports_csv, run_experiments, write_reports, Report};
use kurtdecon::io::dump::{format_kernel, format_taps};
use kurtdecon::io::{read_pgm, read_wav, write_pgm, write_wav};
use kurtdecon::metrics::{aligned_correlation, normalized_correlation};
use kurtdecon::stats::kurtosis_excess;
use kurtdecon::synth::{source_1d, source_2d, Distribution};
use kurtdecon::whitening::{fit_lpc, highpass_whiten, highpass_whiten_2d, lpc_whiten, DEFAULT_LPC_ORDER};
use kurtdecon::{Error, Image2D, Result, Signal1D};

/// Blind deconvolution by maximum-kurtosis adaptive inverse filtering.
#[derive(Debug, Parser)]
#[command(name = "kurtdecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply a synthetic degradation to a file or a synthetic source.
    Degrade(DegradeArgs),
    /// Whiten a signal or image.
    Whiten(WhitenArgs),
    /// Adapt an inverse filter and restore the input.
    Deconv(DeconvArgs),
    /// Kurtosis surface over a grid of AR(2) inverse filters.
    Sweep(SweepArgs),
    /// Run experiments from config files.
    Experiment(ExperimentArgs),
    /// Correlation and kurtosis of two files.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Input .wav or .pgm file; omit to use a synthetic source.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "laplace")]
    dist: Distribution,
    /// Length of a synthetic 1-D source.
    #[arg(long)]
    length: Option<usize>,
    /// Height and width of a synthetic image source.
    #[arg(long, num_args = 2, value_names = ["H", "W"])]
    size: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Leaky-integrator coefficient of the synthetic source.
    #[arg(long, default_value_t = 0.0)]
    color: f64,
}

#[derive(Debug, Args)]
struct DegradeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    kind: DegradeKind,
    #[arg(long, allow_hyphen_values = true)]
    a1: f64,
    #[arg(long, allow_hyphen_values = true)]
    a2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a3: f64,
    #[arg(long, default_value_t = 1)]
    delay: usize,
    /// Output .wav or .pgm file.
    #[arg(long, short)]
    output: PathBuf,
    /// Also write the clean source here.
    #[arg(long)]
    source_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    None,
    Highpass,
    Lpc,
}

#[derive(Debug, Args)]
struct WhitenArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value = "highpass")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_LPC_ORDER)]
    order: usize,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct DeconvArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value = "none")]
    whiten: Method,
    #[arg(long, default_value_t = DEFAULT_LPC_ORDER)]
    order: usize,
    /// Whitened samples (or image rows/columns) withheld from adaptation.
    #[arg(long)]
    margin: Option<usize>,
    /// Filter length (1-D).
    #[arg(long, default_value_t = AdaptConfig::default().taps)]
    taps: usize,
    /// Kernel rows and columns (images).
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    kernel: Option<Vec<usize>>,
    /// Step size magnitude; the sign comes from --source-class.
    #[arg(long, default_value_t = AdaptConfig::default().mu)]
    mu: f64,
    /// Defaults to super for audio and sub for images.
    #[arg(long)]
    source_class: Option<Class>,
    #[arg(long, default_value_t = AdaptConfig::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = AdaptConfig::default().warmup)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    passes: usize,
    /// Disable unit-norm renormalization of the filter.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, short)]
    output: PathBuf,
    /// Converged filter dump.
    #[arg(long)]
    filter: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Class {
    Super,
    Sub,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Input .wav file.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value = "none")]
    whiten: Method,
    #[arg(long, default_value_t = DEFAULT_LPC_ORDER)]
    order: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Grid spans [-limit, limit] on both axes.
    #[arg(long, default_value_t = 0.99)]
    limit: f64,
    /// Surface CSV (a1,a2,kurtosis).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Config files; each describes one experiment.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Override a config key for every experiment (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write all rows to this CSV instead of each config's report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    reference: PathBuf,
    estimate: PathBuf,
    /// Largest delay searched when aligning 1-D signals.
    #[arg(long, default_value_t = 0)]
    max_lag: usize,
}

enum Data {
    Signal(Signal1D),
    Image(Image2D),
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "pgm")
}

fn load(path: &Path) -> Result<Data> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("wav") => Ok(Data::Signal(read_wav(path)?)),
        Some("pgm") => Ok(Data::Image(read_pgm(path)?)),
        _ => Err(Error::Config(format!("{}: expected a .wav or .pgm file", path.display()))),
    }
}

/// Scales to a peak of 0.99 so the WAV encoder never clips.
fn peak_normalize(s: &Signal1D) -> Result<Signal1D> {
    let peak = s.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(s.clone());
    }
    s.map(|v| 0.99 * v / peak)
}

fn save(path: &Path, data: &Data) -> Result<()> {
    match (data, is_pgm(path)) {
        (Data::Signal(s), false) => {
            let clipped = write_wav(path, &peak_normalize(s)?)?;
            if clipped > 0 {
                println!("clipped {clipped} samples");
            }
            Ok(())
        }
        (Data::Image(img), true) => write_pgm(path, img),
        _ => Err(Error::Config(format!("{}: extension does not match the data", path.display()))),
    }
}

fn degrade(a: DegradeArgs) -> Result<()> {
    let spec = DegradeSpec { kind: a.kind, a1: a.a1, a2: a.a2, a3: a.a3, delay: a.delay };
    let s = &a.source;
    let data = match (&s.input, s.length, &s.size) {
        (Some(p), None, None) => {
            println!("input = {}", p.display());
            load(p)?
        }
        (None, Some(n), None) => {
            println!("source = synthetic {} length {n} color {} seed {}", s.dist, s.color, s.seed);
            Data::Signal(source_1d(s.dist, n, s.seed, s.color)?)
        }
        (None, None, Some(hw)) => {
            println!("source = synthetic {} {}x{} color {} seed {}", s.dist, hw[0], hw[1], s.color, s.seed);
            Data::Image(source_2d(s.dist, hw[0], hw[1], s.seed, s.color)?)
        }
        _ => return Err(Error::Config("give exactly one of --input, --length or --size".into())),
    };
    println!("degrade = {} a1 {} a2 {} a3 {} delay {}", spec.kind, spec.a1, spec.a2, spec.a3, spec.delay);
    if let Some(p) = &a.source_out {
        save(p, &data)?;
    }
    let out = match &data {
        Data::Signal(x) => Data::Signal(spec.apply_1d(x)?),
        Data::Image(img) => Data::Image(spec.apply_2d(img)?),
    };
    save(&a.output, &out)
}

fn whiten_signal(x: &Signal1D, method: Method, order: usize) -> Result<Signal1D> {
    match method {
        Method::None => Ok(x.clone()),
        Method::Highpass => highpass_whiten(x),
        Method::Lpc => {
            let model = fit_lpc(x, order)?;
            println!("lpc coefficients = {:?}", model.coeffs());
            lpc_whiten(x, &model)
        }
    }
}

fn whiten_image(g: &Image2D, method: Method) -> Result<Image2D> {
    match method {
        Method::None => Ok(g.clone()),
        Method::Highpass => highpass_whiten_2d(g),
        Method::Lpc => Err(Error::Config("lpc whitening is only available for 1-D signals".into())),
    }
}

fn whiten(a: WhitenArgs) -> Result<()> {
    println!("input = {}\nmethod = {:?} order {}\nseed = none", a.input.display(), a.method, a.order);
    let out = match load(&a.input)? {
        Data::Signal(x) => Data::Signal(whiten_signal(&x, a.method, a.order)?),
        Data::Image(g) => Data::Image(whiten_image(&g, a.method)?),
    };
    save(&a.output, &out)
}

fn deconv(a: DeconvArgs) -> Result<()> {
    let data = load(&a.input)?;
    let image = matches!(data, Data::Image(_));
    let class = a.source_class.unwrap_or(if image { Class::Sub } else { Class::Super });
    let mu = match class {
        Class::Super => a.mu.abs(),
        Class::Sub => -a.mu.abs(),
    };
    let margin = a.margin.unwrap_or(if image && a.whiten != Method::None { DEFAULT_IMAGE_MARGIN } else { 0 });
    println!("input = {}\nseed = none", a.input.display());
    println!("whiten = {:?} order {} margin {margin}", a.whiten, a.order);
    let (restored, dump) = match data {
        Data::Signal(x) => {
            let cfg = AdaptConfig {
                taps: a.taps,
                mu,
                beta: a.beta,
                warmup: a.warmup,
                passes: a.passes,
                normalize: !a.no_normalize,
            };
            println!("adapt = {cfg:?}");
            let x1 = whiten_signal(&x, a.whiten, a.order)?;
            if margin >= x1.len() {
                return Err(Error::Config("margin covers the whole signal".into()));
            }
            let r = run_adapt(&Signal1D::new(x1.samples()[margin..].to_vec())?, &cfg)?;
            println!("kurtosis per pass = {:?}", r.kurtosis_trace);
            let mut shat = r.filter.apply(&x)?;
            if let Some(rate) = x.sample_rate() {
                shat = shat.with_sample_rate(rate)?;
            }
            (Data::Signal(shat), format_taps(&r.filter))
        }
        Data::Image(g) => {
            let (rows, cols) = a.kernel.as_deref().map_or((3, 3), |k| (k[0], k[1]));
            let cfg = Adapt2dConfig {
                rows,
                cols,
                mu,
                beta: a.beta,
                warmup: a.warmup,
                passes: a.passes,
                normalize: !a.no_normalize,
            };
            println!("adapt = {cfg:?}");
            let g1 = whiten_image(&g, a.whiten)?;
            if margin >= g1.height() || margin >= g1.width() {
                return Err(Error::Config("margin covers the whole image".into()));
            }
            let g1 = g1.crop(margin, margin, g1.height() - margin, g1.width() - margin)?;
            let r = run_adapt2d(&g1, &cfg)?;
            println!("kurtosis per pass = {:?}", r.kurtosis_trace);
            (Data::Image(r.kernel.apply(&g)?.rescale_unit()?), format_kernel(&r.kernel))
        }
    };
    print!("filter =\n{dump}");
    if let Some(p) = &a.filter {
        fs::write(p, &dump)?;
    }
    save(&a.output, &restored)
}

fn sweep(a: SweepArgs) -> Result<()> {
    println!(
        "input = {}\nwhiten = {:?} order {}\ngrid = {} points on [-{}, {}]\nseed = none",
        a.input.display(),
        a.whiten,
        a.order,
        a.points,
        a.limit,
        a.limit
    );
    let Data::Signal(x) = load(&a.input)? else {
        return Err(Error::Config("sweep takes a 1-D .wav input".into()));
    };
    let x1 = whiten_signal(&x, a.whiten, a.order)?;
    let grid = symmetric_grid(a.limit, a.points);
    let surf = kurtosis_surface(&x1, &grid, &grid)?;
    let mut csv = String::from("a1,a2,abs_kurtosis\n");
    for (i, row) in surf.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let v = v.map(|v| format!("{v:.6}")).unwrap_or_default();
            csv.push_str(&format!("{:.6},{:.6},{v}\n", surf.grid_a1[i], surf.grid_a2[j]));
        }
    }
    fs::write(&a.output, csv)?;
    let (a1, a2) = surf.argmax_params();
    println!("argmax a1 = {a1:.4} a2 = {a2:.4}");
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfgs = a.configs.iter().map(|p| ExperimentConfig::load(p, &a.overrides)).collect::<Result<Vec<_>>>()?;
    for c in &cfgs {
        println!("# resolved config\n{c}");
    }
    let mut reports: Vec<Report> = Vec::with_capacity(cfgs.len());
    let mut first_err = None;
    for (cfg, r) in cfgs.iter().zip(run_experiments(&cfgs)) {
        match r {
            Ok(r) => {
                println!("{r}");
                reports.push(r);
            }
            Err(e) => {
                eprintln!("experiment {}: {e}", cfg.id);
                first_err.get_or_insert(e);
            }
        }
    }
    // Rows go to --report, else to each config's report path; the rest to stdout.
    let mut groups: Vec<(Option<PathBuf>, Vec<Report>)> = Vec::new();
    for r in reports {
        let dest = a.report.clone().or_else(|| cfgs.iter().find(|c| c.id == r.id).and_then(|c| c.report.clone()));
        match groups.iter_mut().find(|(d, _)| *d == dest) {
            Some((_, rows)) => rows.push(r),
            None => groups.push((dest, vec![r])),
        }
    }
    for (dest, rows) in &groups {
        match dest {
            Some(p) => write_reports(p, rows)?,
            None => print!("{}", reports_csv(rows)),
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn metrics(a: MetricsArgs) -> Result<()> {
    println!("reference = {}\nestimate = {}\nseed = none", a.reference.display(), a.estimate.display());
    match (load(&a.reference)?, load(&a.estimate)?) {
        (Data::Signal(s), Data::Signal(e)) => {
            let al = aligned_correlation(&s, &e, a.max_lag)?;
            println!("rho = {:.6}", normalized_correlation(&s, &e)?);
            println!("rho_aligned = {:.6} lag {} sign {:+}", al.rho.abs(), al.lag, al.sign);
            println!("kurtosis = {:.6} {:.6}", kurtosis_excess(s.samples())?, kurtosis_excess(e.samples())?);
        }
        (Data::Image(s), Data::Image(e)) => {
            println!("rho = {:.6}", normalized_correlation(&s, &e)?);
            println!("kurtosis = {:.6} {:.6}", kurtosis_excess(s.pixels())?, kurtosis_excess(e.pixels())?);
        }
        _ => return Err(Error::Config("cannot compare a signal with an image".into())),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Degrade(a) => degrade(a),
        Command::Whiten(a) => whiten(a),
        Command::Deconv(a) => deconv(a),
        Command::Sweep(a) => sweep(a),
        Command::Experiment(a) => experiment(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
