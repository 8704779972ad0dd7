//! Experiment configuration: a line-oriented `key = value` format with
//! dotted section prefixes and `#` comments.
//!
//! ```text
//! id = echo_d100
//! source.kind = synthetic        # or: file
//! source.dist = laplace
//! source.length = 200000         # images use source.height / source.width
//! source.seed = 7
//! degrade.kind = echo_iir
//! degrade.a1 = -0.6
//! degrade.a2 = 0.3
//! degrade.delay = 100
//! whiten.method = none
//! adapt.taps = 201
//! adapt.mu = 1e-6
//! adapt.passes = 3
//! report = echo.csv
//! ```
//!
//! Unknown or duplicated keys are errors, as are keys that do not apply to
//! the experiment's dimensionality.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::adapt1d::{choose_mu_sign, AdaptConfig, SourceClass};
use crate::adapt2d::Adapt2dConfig;
use crate::degrade::{DegradeKind, DegradeSpec};
use crate::error::{Error, Result};
use crate::synth::Distribution;
use crate::whitening::DEFAULT_LPC_ORDER;

/// Interior crop applied to whitened images unless configured otherwise.
/// The corner transient of the degradation (driven by the image's mean)
/// survives whitening and would otherwise dominate the kurtosis.
pub const DEFAULT_IMAGE_MARGIN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Synthetic {
        dist: Distribution,
        shape: Shape,
        seed: u64,
        /// Leaky-integrator coefficient in `[0, 1]`; 0 is i.i.d.
        color: f64,
    },
    /// A `.wav` (1-D) or `.pgm` (image) file.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Signal(usize),
    Image(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Whitening {
    None,
    Highpass,
    Lpc(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptSettings {
    OneD(AdaptConfig),
    TwoD(Adapt2dConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub source: SourceSpec,
    /// `None` runs the null experiment: the source is observed directly.
    pub degrade: Option<DegradeSpec>,
    pub whitening: Whitening,
    /// Leading samples (or top/left rows and columns) of the whitened
    /// observation that are withheld from adaptation.
    pub margin: usize,
    pub adapt: AdaptSettings,
    pub report: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn is_image(&self) -> bool {
        matches!(self.adapt, AdaptSettings::TwoD(_))
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            SourceSpec::Synthetic { seed, .. } => Some(seed),
            SourceSpec::File(_) => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides on top of it.
    pub fn parse_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut kv = Entries::parse(text)?;
        for o in overrides {
            let (k, v) = split_pair(o).ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            kv.map.insert(k.to_string(), (0, v.to_string()));
        }
        let cfg = from_entries(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_with(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (k, v) =
                split_pair(line).ok_or_else(|| Error::Config(format!("line {lineno}: expected key = value")))?;
            if k.is_empty() {
                return Err(Error::Config(format!("line {lineno}: empty key")));
            }
            if map.insert(k.to_string(), (lineno, v.to_string())).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{k}'")));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                let at = if line > 0 { format!("line {line}: ") } else { String::new() };
                Error::Config(format!("{at}invalid value '{v}' for {key}"))
            }),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn forbid(&mut self, keys: &[&str], why: &str) -> Result<()> {
        for k in keys {
            if self.map.contains_key(*k) {
                return Err(Error::Config(format!("{k} does not apply to {why}")));
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) if line > 0 => Err(Error::Config(format!("line {line}: unknown key '{k}'"))),
            Some((k, _)) => Err(Error::Config(format!("unknown key '{k}'"))),
        }
    }
}

fn parse_class(v: &str) -> Result<SourceClass> {
    match v {
        "super" => Ok(SourceClass::SuperGaussian),
        "sub" => Ok(SourceClass::SubGaussian),
        other => Err(Error::Config(format!("adapt.source_class must be super or sub, got '{other}'"))),
    }
}

fn from_entries(kv: &mut Entries) -> Result<ExperimentConfig> {
    let id: String = kv.require("id")?;

    let source_kind: String = kv.get("source.kind")?.unwrap_or_else(|| "synthetic".into());
    let source = match source_kind.as_str() {
        "synthetic" => {
            let dist = kv.get("source.dist")?.unwrap_or(Distribution::Laplace);
            let seed =
                kv.get("source.seed")?.ok_or_else(|| Error::Config("synthetic sources require source.seed".into()))?;
            let color = kv.get("source.color")?.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&color) {
                return Err(Error::Config(format!("source.color must lie in [0, 1], got {color}")));
            }
            let len: Option<usize> = kv.get("source.length")?;
            let h: Option<usize> = kv.get("source.height")?;
            let w: Option<usize> = kv.get("source.width")?;
            let shape = match (len, h, w) {
                (Some(n), None, None) if n > 0 => Shape::Signal(n),
                (None, Some(h), Some(w)) if h > 0 && w > 0 => Shape::Image(h, w),
                _ => {
                    return Err(Error::Config(
                        "synthetic sources need a positive source.length, or source.height and source.width".into(),
                    ))
                }
            };
            kv.forbid(&["source.path"], "synthetic sources")?;
            SourceSpec::Synthetic { dist, shape, seed, color }
        }
        "file" => {
            let path: String = kv.require("source.path")?;
            if path.is_empty() {
                return Err(Error::Config("source.path is empty".into()));
            }
            kv.forbid(
                &["source.dist", "source.seed", "source.color", "source.length", "source.height", "source.width"],
                "file sources",
            )?;
            SourceSpec::File(PathBuf::from(path))
        }
        other => return Err(Error::Config(format!("source.kind must be synthetic or file, got '{other}'"))),
    };
    let image = match &source {
        SourceSpec::Synthetic { shape, .. } => matches!(shape, Shape::Image(..)),
        SourceSpec::File(p) => match p.extension().and_then(|e| e.to_str()) {
            Some("wav") => false,
            Some("pgm") => true,
            _ => {
                return Err(Error::Config(format!(
                    "cannot tell the format of '{}' (expected .wav or .pgm)",
                    p.display()
                )))
            }
        },
    };

    let degrade_kind: String = kv.get("degrade.kind")?.unwrap_or_else(|| "none".into());
    let degrade = if degrade_kind == "none" {
        kv.forbid(&["degrade.a1", "degrade.a2", "degrade.a3", "degrade.delay"], "degrade.kind = none")?;
        None
    } else {
        let kind: DegradeKind = degrade_kind.parse()?;
        if kind.is_image() != image {
            return Err(Error::Config(format!(
                "degradation {kind} does not match a {} source",
                if image { "2-D" } else { "1-D" }
            )));
        }
        let mut spec = DegradeSpec::new(kind, kv.require("degrade.a1")?, kv.require("degrade.a2")?);
        if kind == DegradeKind::ImageIir3 {
            spec.a3 = kv.require("degrade.a3")?;
        } else {
            kv.forbid(&["degrade.a3"], "this degradation kind")?;
        }
        if kind == DegradeKind::EchoIir {
            spec.delay = kv.require("degrade.delay")?;
        } else {
            kv.forbid(&["degrade.delay"], "this degradation kind")?;
        }
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Some(spec)
    };

    let method: String = kv.get("whiten.method")?.unwrap_or_else(|| "none".into());
    let whitening = match method.as_str() {
        "none" => Whitening::None,
        "highpass" => Whitening::Highpass,
        "lpc" => {
            if image {
                return Err(Error::Config("lpc whitening is only available for 1-D signals".into()));
            }
            let order = kv.get("whiten.order")?.unwrap_or(DEFAULT_LPC_ORDER);
            if order == 0 {
                return Err(Error::Config("whiten.order must be at least 1".into()));
            }
            Whitening::Lpc(order)
        }
        other => return Err(Error::Config(format!("whiten.method must be none, highpass or lpc, got '{other}'"))),
    };
    if !matches!(whitening, Whitening::Lpc(_)) {
        kv.forbid(&["whiten.order"], "this whitening method")?;
    }
    let default_margin = if image && whitening != Whitening::None { DEFAULT_IMAGE_MARGIN } else { 0 };
    let margin = kv.get("whiten.margin")?.unwrap_or(default_margin);

    let class: Option<String> = kv.get("adapt.source_class")?;
    let class = class.as_deref().map(parse_class).transpose()?;
    let mu: Option<f64> = kv.get("adapt.mu")?;
    let resolve_mu = |default: f64| -> f64 {
        let mu = mu.unwrap_or(default);
        match class {
            Some(c) => choose_mu_sign(c) * mu.abs(),
            None => mu,
        }
    };
    let adapt = if image {
        kv.forbid(&["adapt.taps"], "2-D experiments")?;
        let d = Adapt2dConfig::default();
        let c = Adapt2dConfig {
            rows: kv.get("adapt.rows")?.unwrap_or(d.rows),
            cols: kv.get("adapt.cols")?.unwrap_or(d.cols),
            mu: resolve_mu(d.mu),
            beta: kv.get("adapt.beta")?.unwrap_or(d.beta),
            warmup: kv.get("adapt.warmup")?.unwrap_or(d.warmup),
            passes: kv.get("adapt.passes")?.unwrap_or(d.passes),
            normalize: kv.get("adapt.normalize")?.unwrap_or(d.normalize),
        };
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        AdaptSettings::TwoD(c)
    } else {
        kv.forbid(&["adapt.rows", "adapt.cols"], "1-D experiments")?;
        let d = AdaptConfig::default();
        let c = AdaptConfig {
            taps: kv.get("adapt.taps")?.unwrap_or(d.taps),
            mu: resolve_mu(d.mu),
            beta: kv.get("adapt.beta")?.unwrap_or(d.beta),
            warmup: kv.get("adapt.warmup")?.unwrap_or(d.warmup),
            passes: kv.get("adapt.passes")?.unwrap_or(d.passes),
            normalize: kv.get("adapt.normalize")?.unwrap_or(d.normalize),
        };
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        AdaptSettings::OneD(c)
    };

    let report: Option<String> = kv.get("report")?;
    Ok(ExperimentConfig {
        id,
        source,
        degrade,
        whitening,
        margin,
        adapt,
        report: report.filter(|r| !r.is_empty()).map(PathBuf::from),
    })
}

/// Prints the fully resolved configuration in the same `key = value` format,
/// so the output can be fed back to the parser.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "id = {}", self.id)?;
        match &self.source {
            SourceSpec::Synthetic { dist, shape, seed, color } => {
                writeln!(f, "source.kind = synthetic")?;
                writeln!(f, "source.dist = {dist}")?;
                match shape {
                    Shape::Signal(n) => writeln!(f, "source.length = {n}")?,
                    Shape::Image(h, w) => {
                        writeln!(f, "source.height = {h}")?;
                        writeln!(f, "source.width = {w}")?;
                    }
                }
                writeln!(f, "source.seed = {seed}")?;
                writeln!(f, "source.color = {color}")?;
            }
            SourceSpec::File(p) => {
                writeln!(f, "source.kind = file")?;
                writeln!(f, "source.path = {}", p.display())?;
            }
        }
        match &self.degrade {
            None => writeln!(f, "degrade.kind = none")?,
            Some(d) => {
                writeln!(f, "degrade.kind = {}", d.kind)?;
                writeln!(f, "degrade.a1 = {}", d.a1)?;
                writeln!(f, "degrade.a2 = {}", d.a2)?;
                if d.kind == DegradeKind::ImageIir3 {
                    writeln!(f, "degrade.a3 = {}", d.a3)?;
                }
                if d.kind == DegradeKind::EchoIir {
                    writeln!(f, "degrade.delay = {}", d.delay)?;
                }
            }
        }
        match self.whitening {
            Whitening::None => writeln!(f, "whiten.method = none")?,
            Whitening::Highpass => writeln!(f, "whiten.method = highpass")?,
            Whitening::Lpc(order) => {
                writeln!(f, "whiten.method = lpc")?;
                writeln!(f, "whiten.order = {order}")?;
            }
        }
        writeln!(f, "whiten.margin = {}", self.margin)?;
        match &self.adapt {
            AdaptSettings::OneD(c) => {
                writeln!(f, "adapt.taps = {}", c.taps)?;
                write_common(f, c.mu, c.beta, c.warmup, c.passes, c.normalize)?;
            }
            AdaptSettings::TwoD(c) => {
                writeln!(f, "adapt.rows = {}", c.rows)?;
                writeln!(f, "adapt.cols = {}", c.cols)?;
                write_common(f, c.mu, c.beta, c.warmup, c.passes, c.normalize)?;
            }
        }
        if let Some(r) = &self.report {
            writeln!(f, "report = {}", r.display())?;
        }
        Ok(())
    }
}

fn write_common(
    f: &mut fmt::Formatter<'_>,
    mu: f64,
    beta: f64,
    warmup: usize,
    passes: usize,
    normalize: bool,
) -> fmt::Result {
    writeln!(f, "adapt.mu = {mu:e}")?;
    writeln!(f, "adapt.beta = {beta}")?;
    writeln!(f, "adapt.warmup = {warmup}")?;
    writeln!(f, "adapt.passes = {passes}")?;
    writeln!(f, "adapt.normalize = {normalize}")
}
