//! Online maximum-kurtosis adaptive inverse filter for 1-D signals, and the
//! exhaustive two-parameter kurtosis surface.
//!
//! Each step filters the current regressor, folds the output into the
//! running moment estimates, and moves the taps along
//! `mu * feedback(y) * window`. A positive `mu` climbs toward larger
//! kurtosis (super-gaussian sources), a negative `mu` toward smaller
//! (sub-gaussian sources).

use crate::error::{Error, Result};
use crate::signals::{fill_window, fir_filter, FilterTaps1D, Signal1D};
use crate::stats::{kurtosis_excess, MomentState, DEFAULT_BETA};

/// Any tap beyond this magnitude is reported as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub taps: usize,
    pub mu: f64,
    pub beta: f64,
    pub warmup: usize,
    pub passes: usize,
    /// Rescale the taps to unit norm after every update.
    pub normalize: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self { taps: 3, mu: 1e-5, beta: DEFAULT_BETA, warmup: 256, passes: 1, normalize: true }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::contract("filter length must be at least 1"));
        }
        check_common(self.mu, self.beta, self.passes)
    }
}

pub(crate) fn check_common(mu: f64, beta: f64, passes: usize) -> Result<()> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::contract("step size must be finite and nonzero"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::contract(format!("beta must lie in (0, 1), got {beta}")));
    }
    if passes == 0 {
        return Err(Error::contract("at least one pass is required"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptResult {
    pub filter: FilterTaps1D,
    /// The input filtered with the converged taps.
    pub output: Signal1D,
    pub final_kurtosis: f64,
    /// Excess kurtosis of the filtered input after each pass.
    pub kurtosis_trace: Vec<f64>,
}

/// Whether the source is heavy-tailed (positive kurtosis) or light-tailed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceClass {
    SuperGaussian,
    SubGaussian,
}

/// Ascend kurtosis for super-gaussian sources, descend for sub-gaussian ones.
pub fn choose_mu_sign(class: SourceClass) -> f64 {
    match class {
        SourceClass::SuperGaussian => 1.0,
        SourceClass::SubGaussian => -1.0,
    }
}

/// Pass-through filter: unit tap 0, zeros elsewhere.
pub fn init_filter(len: usize) -> Result<FilterTaps1D> {
    if len == 0 {
        return Err(Error::contract("filter length must be at least 1"));
    }
    let mut taps = vec![0.0; len];
    taps[0] = 1.0;
    FilterTaps1D::new(taps)
}

/// Result of a single adaptive update.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<F> {
    pub y: f64,
    pub filter: F,
    pub state: MomentState,
}

/// One online update: filter, update moments, then move the taps.
/// Near-singular moments leave the taps unchanged.
pub fn adapt_step(h: &FilterTaps1D, state: &MomentState, window: &[f64], mu: f64) -> Result<Step<FilterTaps1D>> {
    if window.len() != h.len() {
        return Err(Error::contract(format!("window length {} does not match {} taps", window.len(), h.len())));
    }
    let mut taps = h.taps().to_vec();
    let mut st = *state;
    let y = step_in_place(&mut taps, &mut st, window, mu);
    Ok(Step { y, filter: FilterTaps1D::new(taps)?, state: st })
}

pub(crate) fn step_in_place(taps: &mut [f64], state: &mut MomentState, window: &[f64], mu: f64) -> f64 {
    let y: f64 = taps.iter().zip(window).map(|(h, x)| h * x).sum();
    *state = state.update(y);
    if let Ok(f) = state.feedback(y) {
        let g = mu * f;
        if g != 0.0 {
            for (h, x) in taps.iter_mut().zip(window) {
                *h += g * x;
            }
        }
    }
    y
}

pub(crate) fn diverged(taps: &[f64]) -> bool {
    taps.iter().any(|t| t.is_nan() || t.abs() > DIVERGENCE_LIMIT)
}

// Without this the tap norm drifts (the moment update is correlated with the
// current output), and the effective step size grows as the norm shrinks.
pub(crate) fn renormalize(taps: &mut [f64]) {
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm > 0.0 {
        taps.iter_mut().for_each(|t| *t /= norm);
    }
}

/// Adapts an inverse filter on the (whitened) signal `x1`.
///
/// The moment estimates are seeded from the first `warmup` samples of the
/// unfiltered input, then every pass sweeps the whole signal; taps and
/// moments carry over between passes. Divergence is checked on the raw
/// update, before any renormalization.
pub fn run_adapt(x1: &Signal1D, cfg: &AdaptConfig) -> Result<AdaptResult> {
    cfg.validate()?;
    if x1.len() <= cfg.warmup + cfg.taps {
        return Err(Error::degenerate(format!(
            "signal of {} samples is too short for warmup {} and {} taps",
            x1.len(),
            cfg.warmup,
            cfg.taps
        )));
    }
    let x = x1.samples();
    let mut taps = init_filter(cfg.taps)?.taps().to_vec();
    let mut state = MomentState::from_block(&x[..cfg.warmup], cfg.beta)?;
    let mut window = vec![0.0; cfg.taps];
    let mut trace = Vec::with_capacity(cfg.passes);
    for pass in 1..=cfg.passes {
        for n in 0..x.len() {
            fill_window(x, n, &mut window);
            step_in_place(&mut taps, &mut state, &window, cfg.mu);
            if diverged(&taps) {
                return Err(Error::Divergence { pass, sample: n });
            }
            if cfg.normalize {
                renormalize(&mut taps);
            }
        }
        trace.push(kurtosis_excess(&fir_filter(x, &taps))?);
    }
    let filter = FilterTaps1D::new(taps)?;
    let output = filter.apply(x1)?;
    let final_kurtosis = kurtosis_excess(output.samples())?;
    Ok(AdaptResult { filter, output, final_kurtosis, kurtosis_trace: trace })
}

/// |kurtosis| of `x1` filtered by `[1, -a1, -a2]` over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KurtosisSurface {
    pub grid_a1: Vec<f64>,
    pub grid_a2: Vec<f64>,
    /// `values[i][j]` belongs to `(grid_a1[i], grid_a2[j])`; `None` for a degenerate output.
    pub values: Vec<Vec<Option<f64>>>,
    /// Grid indices of the maximum.
    pub argmax: (usize, usize),
}

impl KurtosisSurface {
    pub fn argmax_params(&self) -> (f64, f64) {
        (self.grid_a1[self.argmax.0], self.grid_a2[self.argmax.1])
    }
}

/// `n` evenly spaced points on `[-limit, limit]`.
pub fn symmetric_grid(limit: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -limit + 2.0 * limit * i as f64 / (n - 1) as f64).collect()
}

pub fn kurtosis_surface(x1: &Signal1D, grid_a1: &[f64], grid_a2: &[f64]) -> Result<KurtosisSurface> {
    if grid_a1.is_empty() || grid_a2.is_empty() {
        return Err(Error::contract("parameter grids must be nonempty"));
    }
    if grid_a1.iter().chain(grid_a2).any(|v| v.is_nan() || v.abs() >= 1.0) {
        return Err(Error::contract("grid values must lie in (-1, 1)"));
    }
    let x = x1.samples();
    let mut best: Option<(f64, (usize, usize))> = None;
    let mut values = Vec::with_capacity(grid_a1.len());
    for (i, &a1) in grid_a1.iter().enumerate() {
        let mut row = Vec::with_capacity(grid_a2.len());
        for (j, &a2) in grid_a2.iter().enumerate() {
            let v = kurtosis_excess(&fir_filter(x, &[1.0, -a1, -a2])).ok().map(f64::abs);
            if let Some(v) = v {
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, (i, j)));
                }
            }
            row.push(v);
        }
        values.push(row);
    }
    let (_, argmax) = best.ok_or_else(|| Error::degenerate("every grid cell is degenerate"))?;
    Ok(KurtosisSurface { grid_a1: grid_a1.to_vec(), grid_a2: grid_a2.to_vec(), values, argmax })
}
