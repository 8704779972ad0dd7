//! Restoration scoring: correlation, lag/sign-aligned correlation, and
//! parameter-recovery error with the blind gain/sign/shift ambiguity removed.

use crate::degrade::{DegradeKind, DegradeSpec};
use crate::error::{Error, Result};
use crate::signals::{FilterTaps1D, Grid, Kernel2D, Signal1D};

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Zero-lag Pearson correlation of two signals or two images of equal shape.
pub fn normalized_correlation<G: Grid>(a: &G, b: &G) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::contract(format!("shape mismatch {:?} vs {:?}", a.shape(), b.shape())));
    }
    pearson(a.values(), b.values()).ok_or_else(|| Error::degenerate("zero variance"))
}

/// Best correlation over integer lags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// Signed correlation at the lag of largest magnitude.
    pub rho: f64,
    /// Delay of `b` relative to `a`: `a(n)` is paired with `b(n + lag)`.
    pub lag: isize,
    /// Sign of `rho`.
    pub sign: i8,
}

/// Maximum-magnitude Pearson correlation over lags in `[-max_lag, max_lag]`,
/// computed on the overlapping samples. Ties go to the smaller `|lag|`.
pub fn aligned_correlation(a: &Signal1D, b: &Signal1D, max_lag: usize) -> Result<Alignment> {
    if a.len() != b.len() {
        return Err(Error::contract(format!("length mismatch {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if max_lag >= n {
        return Err(Error::contract("max_lag must be shorter than the signals"));
    }
    let (a, b) = (a.samples(), b.samples());
    let at = |lag: isize| -> Option<f64> {
        let m = n - lag.unsigned_abs();
        if m < 2 {
            return None;
        }
        if lag >= 0 {
            pearson(&a[..m], &b[lag as usize..])
        } else {
            pearson(&a[(-lag) as usize..], &b[..m])
        }
    };
    let mut best: Option<(f64, isize)> = None;
    let mut consider = |lag: isize| {
        if let Some(r) = at(lag) {
            if best.is_none_or(|(br, _)| r.abs() > br.abs()) {
                best = Some((r, lag));
            }
        }
    };
    consider(0);
    for l in 1..=max_lag as isize {
        consider(-l);
        consider(l);
    }
    let (rho, lag) = best.ok_or_else(|| Error::degenerate("zero variance at every lag"))?;
    Ok(Alignment { rho, lag, sign: if rho < 0.0 { -1 } else { 1 } })
}

/// An estimated inverse filter of either dimensionality.
#[derive(Debug, Clone, Copy)]
pub enum Estimate<'a> {
    Taps(&'a FilterTaps1D),
    Kernel(&'a Kernel2D),
}

/// Side-by-side true and estimated parameters with absolute errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamErrors {
    pub truth: Vec<f64>,
    pub estimated: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ParamErrors {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().cloned().fold(0.0, f64::max)
    }
}

/// Divides by the largest-magnitude tap (sign included) and shifts it to tap 0.
pub fn normalize_taps(taps: &[f64]) -> Result<Vec<f64>> {
    let (peak, &pv) = taps
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .ok_or_else(|| Error::degenerate("empty filter"))?;
    if pv == 0.0 {
        return Err(Error::degenerate("all-zero filter"));
    }
    Ok(taps[peak..].iter().map(|t| t / pv).collect())
}

/// Divides by the largest-magnitude weight and recenters it; weights shifted
/// outside the kernel are dropped, vacated positions read as zero.
pub fn normalize_kernel(k: &Kernel2D) -> Result<Kernel2D> {
    let (peak, &pv) =
        k.weights().iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).expect("kernel is non-empty");
    if pv == 0.0 {
        return Err(Error::degenerate("all-zero kernel"));
    }
    let (rows, cols) = (k.rows(), k.cols());
    let dr = (peak / cols) as isize - (rows / 2) as isize;
    let dc = (peak % cols) as isize - (cols / 2) as isize;
    let mut w = vec![0.0; rows * cols];
    for i in 0..rows as isize {
        for j in 0..cols as isize {
            let (si, sj) = (i + dr, j + dc);
            if si >= 0 && sj >= 0 && (si as usize) < rows && (sj as usize) < cols {
                w[(i as usize) * cols + j as usize] = k.get(si as usize, sj as usize) / pv;
            }
        }
    }
    Kernel2D::new(rows, cols, w)
}

/// Parameters of `spec` as they appear in its analytic inverse. For `fir2`
/// these are the inverse taps `h(1) = -(a1 + a2)` and `h(2) = a1^2 + a1 a2 + a2^2`.
pub fn true_parameters(spec: &DegradeSpec) -> Vec<f64> {
    match spec.kind {
        DegradeKind::EchoIir | DegradeKind::Ar2Iir | DegradeKind::ImageIir2 => vec![spec.a1, spec.a2],
        DegradeKind::ImageIir3 => vec![spec.a1, spec.a2, spec.a3],
        DegradeKind::Fir2 => {
            let (a1, a2) = (spec.a1, spec.a2);
            vec![-(a1 + a2), a1 * a1 + a1 * a2 + a2 * a2]
        }
    }
}

/// Reads estimated parameters out of a normalized filter at the tap positions
/// of the analytic inverse and compares them with the truth.
pub fn parameter_error(spec: &DegradeSpec, estimated: Estimate<'_>) -> Result<ParamErrors> {
    let tap = |t: &[f64], i: usize| t.get(i).copied().unwrap_or(0.0);
    let est = match (spec.kind, estimated) {
        (DegradeKind::Ar2Iir, Estimate::Taps(h)) => {
            let t = normalize_taps(h.taps())?;
            vec![-tap(&t, 1), -tap(&t, 2)]
        }
        (DegradeKind::EchoIir, Estimate::Taps(h)) => {
            let t = normalize_taps(h.taps())?;
            vec![-tap(&t, spec.delay), -tap(&t, 2 * spec.delay)]
        }
        (DegradeKind::Fir2, Estimate::Taps(h)) => {
            let t = normalize_taps(h.taps())?;
            vec![tap(&t, 1), tap(&t, 2)]
        }
        (DegradeKind::ImageIir2 | DegradeKind::ImageIir3, Estimate::Kernel(k)) => {
            if k.rows() < 3 || k.cols() < 3 {
                return Err(Error::contract("image inverse needs at least a 3x3 kernel"));
            }
            let w = normalize_kernel(k)?;
            let (cr, cc) = (k.rows() / 2, k.cols() / 2);
            let mut v = vec![-w.get(cr - 1, cc), -w.get(cr, cc - 1)];
            if spec.kind == DegradeKind::ImageIir3 {
                v.push(-w.get(cr - 1, cc - 1));
            }
            v
        }
        (kind, _) => {
            return Err(Error::contract(format!("estimate dimensionality does not match degradation kind {kind}")))
        }
    };
    let truth = true_parameters(spec);
    let errors = truth.iter().zip(&est).map(|(t, e)| (t - e).abs()).collect();
    Ok(ParamErrors { truth, estimated: est, errors })
}
