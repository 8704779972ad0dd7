//! Sample and image containers, filter coefficient types, and the
//! window/patch extraction used by the adaptive filters.
//!
//! Out-of-range samples and pixels read as zero everywhere in this crate.
//! Tap 0 of a 1-D filter weights the current sample, tap `k` weights the
//! sample `k` steps in the past. A 2-D kernel is anchored at its center:
//! kernel row `i`, column `j` weights pixel `(r - (rows-1)/2 + i, c - (cols-1)/2 + j)`
//! when producing output pixel `(r, c)`.

use crate::error::{Error, Result};

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::degenerate(format!("{what} has non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Flat read access to sample data, shared by signals and images.
pub trait Grid {
    fn values(&self) -> &[f64];
    /// `(rows, cols)`; a signal is a single row.
    fn shape(&self) -> (usize, usize);
}

/// A finite, non-empty real-valued sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    samples: Vec<f64>,
    sample_rate: Option<u32>,
}

impl Signal1D {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::degenerate("signal must contain at least one sample"));
        }
        check_finite(&samples, "signal")?;
        Ok(Self { samples, sample_rate: None })
    }

    pub fn with_sample_rate(mut self, rate: u32) -> Result<Self> {
        if rate == 0 {
            return Err(Error::contract("sample rate must be positive"));
        }
        self.sample_rate = Some(rate);
        Ok(self)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> Option<u32> {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Applies `f` to every sample, keeping the sample rate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Signal1D::new(self.samples.iter().map(|&v| f(v)).collect())?;
        out.sample_rate = self.sample_rate;
        Ok(out)
    }

    /// Rebuilds a signal from new samples, keeping this signal's sample rate.
    pub(crate) fn derive(&self, samples: Vec<f64>) -> Result<Self> {
        let mut out = Signal1D::new(samples)?;
        out.sample_rate = self.sample_rate;
        Ok(out)
    }
}

impl Grid for Signal1D {
    fn values(&self) -> &[f64] {
        &self.samples
    }

    fn shape(&self) -> (usize, usize) {
        (1, self.samples.len())
    }
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image2D {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::degenerate(format!("image dimensions must be positive, got {height}x{width}")));
        }
        if pixels.len() != height * width {
            return Err(Error::contract(format!("pixel count {} does not match {height}x{width}", pixels.len())));
        }
        check_finite(&pixels, "image")?;
        Ok(Self { height, width, pixels })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Pixel read with zero padding outside the image.
    pub fn get_padded(&self, row: isize, col: isize) -> f64 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0.0
        } else {
            self.pixels[row as usize * self.width + col as usize]
        }
    }

    /// Sub-image of `height x width` starting at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::contract(format!(
                "crop {height}x{width}+{row}+{col} exceeds {}x{}",
                self.height, self.width
            )));
        }
        Self::from_fn(height, width, |r, c| self.get(row + r, col + c))
    }

    /// Affine map of the pixel range onto `[0, 1]`. A constant image maps to zeros.
    pub fn rescale_unit(&self) -> Result<Self> {
        let (lo, hi) =
            self.pixels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let pixels = if span > 0.0 {
            self.pixels.iter().map(|&v| (v - lo) / span).collect()
        } else {
            vec![0.0; self.pixels.len()]
        };
        Self::new(self.height, self.width, pixels)
    }
}

impl Grid for Image2D {
    fn values(&self) -> &[f64] {
        &self.pixels
    }

    fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Causal FIR coefficients; tap 0 weights the current sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTaps1D {
    taps: Vec<f64>,
}

impl FilterTaps1D {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::contract("filter needs at least one tap"));
        }
        check_finite(&taps, "filter")?;
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Causal filtering with zero initial conditions; output length equals input length.
    pub fn apply(&self, x: &Signal1D) -> Result<Signal1D> {
        x.derive(fir_filter(x.samples(), &self.taps))
    }
}

pub(crate) fn fir_filter(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (k, &t) in taps.iter().enumerate() {
        if t == 0.0 || k >= x.len() {
            continue;
        }
        for (o, &v) in out[k..].iter_mut().zip(x) {
            *o += t * v;
        }
    }
    out
}

/// Center-anchored 2-D kernel with odd dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        check_odd(rows, cols)?;
        if weights.len() != rows * cols {
            return Err(Error::contract(format!("kernel weight count {} does not match {rows}x{cols}", weights.len())));
        }
        check_finite(&weights, "kernel")?;
        Ok(Self { rows, cols, weights })
    }

    /// Unit impulse at the center.
    pub fn identity(rows: usize, cols: usize) -> Result<Self> {
        check_odd(rows, cols)?;
        let mut weights = vec![0.0; rows * cols];
        weights[(rows / 2) * cols + cols / 2] = 1.0;
        Self::new(rows, cols, weights)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    /// Zero-padded 2-D filtering; output has the input's dimensions.
    pub fn apply(&self, img: &Image2D) -> Result<Image2D> {
        let (h, w) = (img.height() as isize, img.width() as isize);
        let (hr, hc) = ((self.rows / 2) as isize, (self.cols / 2) as isize);
        let mut out = vec![0.0; img.pixels().len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let wt = self.get(i, j);
                if wt == 0.0 {
                    continue;
                }
                let (dr, dc) = (i as isize - hr, j as isize - hc);
                for r in 0..h {
                    let sr = r + dr;
                    if sr < 0 || sr >= h {
                        continue;
                    }
                    let c0 = (-dc).max(0);
                    let c1 = (w - dc).min(w);
                    if c0 >= c1 {
                        continue;
                    }
                    let dst = &mut out[(r * w + c0) as usize..(r * w + c1) as usize];
                    let src = &img.pixels()[(sr * w + c0 + dc) as usize..(sr * w + c1 + dc) as usize];
                    for (o, &v) in dst.iter_mut().zip(src) {
                        *o += wt * v;
                    }
                }
            }
        }
        Image2D::new(img.height(), img.width(), out)
    }
}

fn check_odd(rows: usize, cols: usize) -> Result<()> {
    if rows.is_multiple_of(2) || cols.is_multiple_of(2) {
        return Err(Error::contract(format!("kernel dimensions must be odd, got {rows}x{cols}")));
    }
    Ok(())
}

/// Regressor for sample `n`: element `k` is `x1[n - k]`, zero before the start.
pub fn window_at(x1: &Signal1D, n: usize, len: usize) -> Result<Vec<f64>> {
    if n >= x1.len() {
        return Err(Error::IndexOutOfRange { index: n, len: x1.len() });
    }
    let mut out = vec![0.0; len];
    fill_window(x1.samples(), n, &mut out);
    Ok(out)
}

pub(crate) fn fill_window(x: &[f64], n: usize, out: &mut [f64]) {
    let avail = (n + 1).min(out.len());
    for (k, o) in out[..avail].iter_mut().enumerate() {
        *o = x[n - k];
    }
    out[avail..].fill(0.0);
}

/// Row-major `rows x cols` neighborhood centered at `(row, col)`, zero outside the image.
pub fn patch_at(img: &Image2D, row: usize, col: usize, rows: usize, cols: usize) -> Result<Vec<f64>> {
    check_odd(rows, cols)?;
    if row >= img.height() || col >= img.width() {
        return Err(Error::IndexOutOfRange { index: row * img.width() + col, len: img.pixels().len() });
    }
    let mut out = vec![0.0; rows * cols];
    fill_patch(img, row, col, rows, cols, &mut out);
    Ok(out)
}

pub(crate) fn fill_patch(img: &Image2D, row: usize, col: usize, rows: usize, cols: usize, out: &mut [f64]) {
    let (r0, c0) = (row as isize - (rows / 2) as isize, col as isize - (cols / 2) as isize);
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = img.get_padded(r0 + i as isize, c0 + j as isize);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal1D {
        Signal1D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_at(&sig(&[1.0, 2.0, 3.0]), 2, 2).unwrap(), vec![3.0, 2.0]);
        assert_eq!(window_at(&sig(&[5.0]), 0, 3).unwrap(), vec![5.0, 0.0, 0.0]);
        assert_eq!(window_at(&sig(&[1.0; 4]), 3, 4).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn window_out_of_range() {
        let err = window_at(&sig(&[1.0, 2.0]), 2, 1).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 2, len: 2 }));
    }

    #[test]
    fn patch_examples() {
        let img = Image2D::new(3, 3, vec![7.0; 9]).unwrap();
        assert_eq!(patch_at(&img, 1, 1, 3, 3).unwrap(), vec![7.0; 9]);

        let img = Image2D::from_fn(4, 5, |r, c| (r * 5 + c + 1) as f64).unwrap();
        let p = patch_at(&img, 0, 0, 3, 3).unwrap();
        assert_eq!(&p[0..3], &[0.0, 0.0, 0.0]);
        assert_eq!([p[3], p[6]], [0.0, 0.0]);
        assert_eq!(p[4], 1.0);
        assert_eq!(p[8], 7.0);

        assert_eq!(patch_at(&img, 2, 3, 1, 1).unwrap(), vec![img.get(2, 3)]);
    }

    #[test]
    fn patch_rejects_even_size() {
        let img = Image2D::new(3, 3, vec![0.0; 9]).unwrap();
        assert!(matches!(patch_at(&img, 1, 1, 2, 3), Err(Error::Contract(_))));
        assert!(matches!(patch_at(&img, 1, 1, 3, 4), Err(Error::Contract(_))));
    }

    #[test]
    fn constructors_reject_bad_data() {
        assert!(Signal1D::new(vec![]).is_err());
        assert!(Signal1D::new(vec![1.0, f64::NAN]).is_err());
        assert!(Image2D::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Kernel2D::new(2, 1, vec![0.0; 2]).is_err());
        assert!(FilterTaps1D::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn fir_apply_is_causal_convolution() {
        let h = FilterTaps1D::new(vec![1.0, -0.5]).unwrap();
        let y = h.apply(&sig(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(y.samples(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn kernel_apply_matches_patch_inner_product() {
        let img = Image2D::from_fn(5, 6, |r, c| ((r * 7 + c * 3) % 5) as f64 - 1.5).unwrap();
        let k = Kernel2D::new(3, 5, (0..15).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let out = k.apply(&img).unwrap();
        for r in 0..5 {
            for c in 0..6 {
                let p = patch_at(&img, r, c, 3, 5).unwrap();
                let y: f64 = p.iter().zip(k.weights()).map(|(a, b)| a * b).sum();
                assert!((out.get(r, c) - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_patch_of_constant_image_is_constant() {
        let img = Image2D::new(6, 7, vec![0.25; 42]).unwrap();
        for r in 1..5 {
            for c in 2..5 {
                assert!(patch_at(&img, r, c, 3, 5).unwrap().iter().all(|&v| v == 0.25));
            }
        }
    }

    proptest! {
        #[test]
        fn window_is_shift_equivariant(
            x in prop::collection::vec(-10.0f64..10.0, 1..40),
            k in 0usize..10,
            len in 1usize..6,
        ) {
            let base = sig(&x);
            let mut padded = vec![0.0; k];
            padded.extend_from_slice(&x);
            let shifted = sig(&padded);
            for n in (len - 1)..x.len() {
                prop_assert_eq!(window_at(&base, n, len).unwrap(), window_at(&shifted, n + k, len).unwrap());
            }
        }

        #[test]
        fn window_head_reproduces_signal(x in prop::collection::vec(-10.0f64..10.0, 1..40), len in 1usize..6) {
            let s = sig(&x);
            let rebuilt: Vec<f64> = (0..x.len()).map(|n| window_at(&s, n, len).unwrap()[0]).collect();
            prop_assert_eq!(rebuilt, x);
        }
    }
}
