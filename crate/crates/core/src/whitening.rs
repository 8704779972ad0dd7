//! Pre-whitening of observations: first differences and LPC residuals.

use crate::error::{Error, Result};
use crate::signals::{fir_filter, Image2D, Signal1D};

/// Default linear-prediction order.
pub const DEFAULT_LPC_ORDER: usize = 5;

/// First difference `y(n) = x(n) - x(n-1)`, with `y(0) = x(0)`.
pub fn highpass_whiten(x: &Signal1D) -> Result<Signal1D> {
    if x.len() < 2 {
        return Err(Error::degenerate("highpass whitening needs at least two samples"));
    }
    x.derive(fir_filter(x.samples(), &[1.0, -1.0]))
}

/// Separable double difference `g(r,c) - g(r-1,c) - g(r,c-1) + g(r-1,c-1)`,
/// zero outside the image.
pub fn highpass_whiten_2d(img: &Image2D) -> Result<Image2D> {
    if img.height() < 2 || img.width() < 2 {
        return Err(Error::degenerate(format!(
            "2-D whitening needs at least 2x2 pixels, got {}x{}",
            img.height(),
            img.width()
        )));
    }
    Image2D::from_fn(img.height(), img.width(), |r, c| {
        let (r, c) = (r as isize, c as isize);
        img.get_padded(r, c) - img.get_padded(r - 1, c) - img.get_padded(r, c - 1) + img.get_padded(r - 1, c - 1)
    })
}

/// Forward linear predictor `x^(n) = sum_k coeffs[k-1] x(n-k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    coeffs: Vec<f64>,
}

impl LpcModel {
    /// Validates that the synthesis filter `1 / (1 - sum a_k z^-k)` is stable.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::contract("LPC order must be at least 1"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract("LPC coefficients must be finite"));
        }
        if !is_minimum_phase(&coeffs) {
            return Err(Error::contract("LPC synthesis filter is unstable"));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Inverse (analysis) filter taps `[1, -a_1, ..., -a_p]`.
    pub fn analysis_taps(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().map(|a| -a)).collect()
    }
}

// Step-down recursion: every reflection coefficient must have magnitude < 1.
fn is_minimum_phase(coeffs: &[f64]) -> bool {
    let mut a = coeffs.to_vec();
    while let Some(&k) = a.last() {
        if k.abs() >= 1.0 {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..p - 1).map(|j| (a[j] + k * a[p - 2 - j]) / denom).collect();
        a = prev;
    }
    true
}

/// Biased autocorrelation `r[k] = sum_n x(n) x(n-k) / N` for lags `0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|k| if k >= x.len() { 0.0 } else { x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n })
        .collect()
}

/// Levinson-Durbin recursion on an autocorrelation sequence.
///
/// Returns the order-`order` predictor coefficients and the prediction error
/// energy after each order (`errors[0] = r[0]`).
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if r.len() <= order {
        return Err(Error::contract("autocorrelation too short for requested order"));
    }
    if r[0] <= 0.0 {
        return Err(Error::degenerate("zero-energy signal"));
    }
    let mut a = vec![0.0; order];
    let mut errors = Vec::with_capacity(order + 1);
    let mut err = r[0];
    errors.push(err);
    for i in 0..order {
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        // A vanishing error means the signal is perfectly predictable already.
        let k = if err > 0.0 { acc / err } else { 0.0 };
        let prev = a.clone();
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
        errors.push(err.max(0.0));
    }
    Ok((a, errors))
}

/// Fits an order-`order` predictor by Levinson-Durbin on the biased autocorrelation.
pub fn fit_lpc(x: &Signal1D, order: usize) -> Result<LpcModel> {
    if order == 0 {
        return Err(Error::contract("LPC order must be at least 1"));
    }
    if x.len() <= 10 * order {
        return Err(Error::degenerate(format!(
            "LPC order {order} needs more than {} samples, got {}",
            10 * order,
            x.len()
        )));
    }
    let r = autocorrelation(x.samples(), order);
    let (coeffs, _) = levinson_durbin(&r, order)?;
    LpcModel::new(coeffs)
}

/// Prediction residual `e(n) = x(n) - sum_k a_k x(n-k)`.
pub fn lpc_whiten(x: &Signal1D, model: &LpcModel) -> Result<Signal1D> {
    x.derive(fir_filter(x.samples(), &model.analysis_taps()))
}
