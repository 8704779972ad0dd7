//! Maximum-kurtosis adaptation with a center-anchored 2-D kernel.
//!
//! Pixels are visited in raster order (left to right, top to bottom); border
//! pixels adapt too, with zero-padded patches.

use crate::adapt1d::{check_common, diverged, renormalize, step_in_place};
use crate::error::{Error, Result};
use crate::signals::{fill_patch, Image2D, Kernel2D, Signal1D};
use crate::stats::{kurtosis_excess, MomentState, DEFAULT_BETA};

pub use crate::adapt1d::Step;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adapt2dConfig {
    pub rows: usize,
    pub cols: usize,
    pub mu: f64,
    pub beta: f64,
    /// Pixels (in raster order) used to seed the moment estimates.
    pub warmup: usize,
    pub passes: usize,
    /// Rescale the kernel to unit norm after every update.
    pub normalize: bool,
}

impl Default for Adapt2dConfig {
    fn default() -> Self {
        Self { rows: 3, cols: 3, mu: -1e-5, beta: DEFAULT_BETA, warmup: 256, passes: 1, normalize: true }
    }
}

impl Adapt2dConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_multiple_of(2) || self.cols.is_multiple_of(2) {
            return Err(Error::contract(format!("kernel dimensions must be odd, got {}x{}", self.rows, self.cols)));
        }
        check_common(self.mu, self.beta, self.passes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adapt2dResult {
    pub kernel: Kernel2D,
    /// The input filtered with the converged kernel.
    pub output: Image2D,
    pub final_kurtosis: f64,
    pub kurtosis_trace: Vec<f64>,
}

/// One online update on a row-major patch matching the kernel's shape.
pub fn adapt2d_step(w: &Kernel2D, state: &MomentState, patch: &[f64], mu: f64) -> Result<Step<Kernel2D>> {
    if patch.len() != w.weights().len() {
        return Err(Error::contract(format!(
            "patch of {} values does not match {}x{} kernel",
            patch.len(),
            w.rows(),
            w.cols()
        )));
    }
    let mut weights = w.weights().to_vec();
    let mut st = *state;
    let y = step_in_place(&mut weights, &mut st, patch, mu);
    Ok(Step { y, filter: Kernel2D::new(w.rows(), w.cols(), weights)?, state: st })
}

/// Adapts an inverse kernel on a whitened image, starting from the identity kernel.
pub fn run_adapt2d(img1: &Image2D, cfg: &Adapt2dConfig) -> Result<Adapt2dResult> {
    cfg.validate()?;
    // A 1xN image still adapts a 1x1 kernel, so only the total size has to
    // exceed the kernel's.
    let covers = img1.height() >= cfg.rows && img1.width() >= cfg.cols;
    if !covers || img1.pixels().len() <= cfg.rows * cfg.cols {
        return Err(Error::degenerate(format!(
            "{}x{} image is not larger than the {}x{} kernel",
            img1.height(),
            img1.width(),
            cfg.rows,
            cfg.cols
        )));
    }
    let npix = img1.pixels().len();
    if cfg.warmup >= npix {
        return Err(Error::degenerate("warmup covers the whole image"));
    }
    let mut weights = Kernel2D::identity(cfg.rows, cfg.cols)?.weights().to_vec();
    let mut state = MomentState::from_block(&img1.pixels()[..cfg.warmup], cfg.beta)?;
    let mut patch = vec![0.0; cfg.rows * cfg.cols];
    let mut trace = Vec::with_capacity(cfg.passes);
    for pass in 1..=cfg.passes {
        for r in 0..img1.height() {
            for c in 0..img1.width() {
                fill_patch(img1, r, c, cfg.rows, cfg.cols, &mut patch);
                step_in_place(&mut weights, &mut state, &patch, cfg.mu);
                if diverged(&weights) {
                    return Err(Error::Divergence { pass, sample: r * img1.width() + c });
                }
                if cfg.normalize {
                    renormalize(&mut weights);
                }
            }
        }
        let k = Kernel2D::new(cfg.rows, cfg.cols, weights.clone())?;
        trace.push(kurtosis_excess(k.apply(img1)?.pixels())?);
    }
    let kernel = Kernel2D::new(cfg.rows, cfg.cols, weights)?;
    let output = kernel.apply(img1)?;
    let final_kurtosis = kurtosis_excess(output.pixels())?;
    Ok(Adapt2dResult { kernel, output, final_kurtosis, kurtosis_trace: trace })
}

/// Row-major flattening of an image into one long signal.
///
/// A 1-D inverse filter on the chained rows would need to span a full row
/// and keep almost all of its taps pinned at zero, so the experiment
/// pipeline adapts 2-D kernels directly instead.
pub fn row_chain(img: &Image2D) -> Result<Signal1D> {
    Signal1D::new(img.pixels().to_vec())
}

/// Inverse of [`row_chain`] for known dimensions.
pub fn row_unchain(s: &Signal1D, height: usize, width: usize) -> Result<Image2D> {
    Image2D::new(height, width, s.samples().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapt1d::{run_adapt, AdaptConfig};
    use crate::degrade::image_iir;
    use crate::metrics::normalize_kernel;
    use crate::signals::patch_at;
    use crate::synth::{iid, Distribution};

    fn state() -> MomentState {
        MomentState::new(1.0, 1.8, 0.99).unwrap()
    }

    #[test]
    fn identity_kernel_outputs_center() {
        let img = Image2D::from_fn(4, 4, |r, c| (r * 4 + c) as f64).unwrap();
        let p = patch_at(&img, 2, 1, 3, 3).unwrap();
        let s = adapt2d_step(&Kernel2D::identity(3, 3).unwrap(), &state(), &p, -1e-3).unwrap();
        assert_eq!(s.y, img.get(2, 1));
    }

    #[test]
    fn zero_patch_leaves_kernel() {
        let w = Kernel2D::identity(3, 5).unwrap();
        let s = adapt2d_step(&w, &state(), &[0.0; 15], 0.5).unwrap();
        assert_eq!((s.y, &s.filter), (0.0, &w));
    }

    #[test]
    fn single_tap_matches_1d_step() {
        let w = Kernel2D::new(1, 1, vec![0.8]).unwrap();
        let h = crate::signals::FilterTaps1D::new(vec![0.8]).unwrap();
        let a = adapt2d_step(&w, &state(), &[1.7], 0.01).unwrap();
        let b = crate::adapt1d::adapt_step(&h, &state(), &[1.7], 0.01).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.state, b.state);
        assert_eq!(a.filter.weights(), b.filter.taps());
    }

    #[test]
    fn step_shape_mismatch() {
        let w = Kernel2D::identity(3, 3).unwrap();
        assert!(matches!(adapt2d_step(&w, &state(), &[0.0; 8], 0.1), Err(Error::Contract(_))));
    }

    #[test]
    fn config_rejects_even_kernel() {
        let cfg = Adapt2dConfig { rows: 2, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn image_must_exceed_kernel() {
        let img = Image2D::new(2, 10, iid(Distribution::Uniform, 20, 1)).unwrap();
        let cfg = Adapt2dConfig { warmup: 4, ..Default::default() };
        assert!(matches!(run_adapt2d(&img, &cfg), Err(Error::Degenerate(_))));
        let img = Image2D::new(3, 3, iid(Distribution::Uniform, 9, 1)).unwrap();
        assert!(matches!(run_adapt2d(&img, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_tap_run_matches_1d_run() {
        let v = iid(Distribution::Uniform, 4000, 2);
        let img = Image2D::new(1, 4000, v.clone()).unwrap();
        let sig = Signal1D::new(v).unwrap();
        let c2 = Adapt2dConfig { rows: 1, cols: 1, warmup: 64, passes: 3, ..Default::default() };
        let c1 = AdaptConfig { taps: 1, mu: c2.mu, warmup: 64, passes: 3, ..Default::default() };
        let a = run_adapt2d(&img, &c2).unwrap();
        let b = run_adapt(&sig, &c1).unwrap();
        assert_eq!(a.kernel.weights(), b.filter.taps());
        for (x, y) in a.kurtosis_trace.iter().zip(&b.kurtosis_trace) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn white_image_keeps_identity() {
        let img = Image2D::new(128, 128, iid(Distribution::Uniform, 128 * 128, 3)).unwrap();
        let cfg = Adapt2dConfig { passes: 2, ..Default::default() };
        let r = run_adapt2d(&img, &cfg).unwrap();
        let k = normalize_kernel(&r.kernel).unwrap();
        for (i, w) in k.weights().iter().enumerate() {
            if i != 4 {
                assert!(w.abs() <= 0.05, "{:?}", k.weights());
            }
        }
    }

    #[test]
    fn recovers_image_inverse_on_iid_source() {
        let f = Image2D::new(128, 128, iid(Distribution::Uniform, 128 * 128, 4)).unwrap();
        let g = image_iir(&f, 0.5, 0.4, 0.0).unwrap();
        let cfg = Adapt2dConfig { passes: 4, ..Default::default() };
        let r = run_adapt2d(&g, &cfg).unwrap();
        let k = normalize_kernel(&r.kernel).unwrap();
        assert!((k.get(0, 1) + 0.5).abs() <= 0.1 && (k.get(1, 0) + 0.4).abs() <= 0.1, "{:?}", k.weights());
        let k_in = kurtosis_excess(g.pixels()).unwrap();
        assert!(r.final_kurtosis.abs() > k_in.abs());
    }

    #[test]
    fn row_chain_examples() {
        let img = Image2D::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(row_chain(&img).unwrap().samples(), &[1.0, 2.0, 3.0, 4.0]);
        let line = Image2D::new(1, 3, vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(row_chain(&line).unwrap().samples(), &[5.0, 6.0, 7.0]);
        assert_eq!(row_unchain(&row_chain(&img).unwrap(), 2, 2).unwrap(), img);
    }
}
