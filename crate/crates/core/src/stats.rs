//! Kurtosis, recursive moment tracking and the kurtosis-gradient feedback term.

use crate::error::{Error, Result};

/// Moment estimates below this are treated as silence; adaptive updates are skipped.
pub const MOMENT_FLOOR: f64 = 1e-8;

/// Default moment smoothing factor. Shorter memories (0.99) leave the moment
/// estimates correlated with the current output, which biases long filters
/// and 3-parameter image kernels away from the true inverse.
pub const DEFAULT_BETA: f64 = 0.999;

/// Excess kurtosis `mean(x^4) / mean(x^2)^2 - 3` of the mean-removed samples.
pub fn kurtosis_excess(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::degenerate("kurtosis needs at least two samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), &v| {
        let d = v - mean;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 <= 0.0 || !m2.is_finite() {
        return Err(Error::degenerate("zero variance"));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Kurtosis cost on raw (not mean-removed) moments, `E{y^4} / E^2{y^2} - 3`.
///
/// This is the quantity whose exact gradient [`batch_gradient`] returns.
pub fn batch_kurtosis(y: &[f64]) -> Result<f64> {
    let (m2, m4) = raw_moments(y);
    if y.is_empty() || m2 <= 0.0 {
        return Err(Error::degenerate("zero second moment"));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

fn raw_moments(y: &[f64]) -> (f64, f64) {
    if y.is_empty() {
        return (0.0, 0.0);
    }
    let n = y.len() as f64;
    let (m2, m4) = y.iter().fold((0.0, 0.0), |(m2, m4), &v| {
        let v2 = v * v;
        (m2 + v2, m4 + v2 * v2)
    });
    (m2 / n, m4 / n)
}

/// Exponentially weighted estimates of `E{y^2}` and `E{y^4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    m2: f64,
    m4: f64,
    beta: f64,
}

impl MomentState {
    pub fn new(m2: f64, m4: f64, beta: f64) -> Result<Self> {
        if !(m2.is_finite() && m4.is_finite() && m2 >= 0.0 && m4 >= 0.0) {
            return Err(Error::contract(format!("moments must be finite and nonnegative, got m2={m2}, m4={m4}")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::contract(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Self { m2, m4, beta })
    }

    /// Seeds the estimates with the plain sample moments of a warm-up block.
    pub fn from_block(block: &[f64], beta: f64) -> Result<Self> {
        let (m2, m4) = raw_moments(block);
        Self::new(m2, m4, beta)
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn m4(&self) -> f64 {
        self.m4
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[must_use]
    pub fn update(&self, y: f64) -> Self {
        let y2 = y * y;
        let b = self.beta;
        Self { m2: b * self.m2 + (1.0 - b) * y2, m4: b * self.m4 + (1.0 - b) * y2 * y2, beta: b }
    }

    /// Instantaneous kurtosis-gradient scale `4 (m2 y^2 - m4) y / m2^3`.
    pub fn feedback(&self, y: f64) -> Result<f64> {
        if self.m2 <= MOMENT_FLOOR {
            return Err(Error::NearSingular { m2: self.m2 });
        }
        let m2 = self.m2;
        Ok(4.0 * (m2 * y * y - self.m4) * y / (m2 * m2 * m2))
    }
}

/// Free-function form of [`MomentState::update`].
pub fn update_moments(state: &MomentState, y: f64) -> MomentState {
    state.update(y)
}

/// Free-function form of [`MomentState::feedback`].
pub fn feedback(state: &MomentState, y: f64) -> Result<f64> {
    state.feedback(y)
}

/// Exact gradient of [`batch_kurtosis`] of `y = h . window` with respect to `h`:
/// `4 (E{y^2} E{y^3 x} - E{y^4} E{y x}) / E^3{y^2}` with sample averages.
pub fn batch_gradient<W: AsRef<[f64]>>(y: &[f64], windows: &[W]) -> Result<Vec<f64>> {
    if y.len() != windows.len() {
        return Err(Error::contract(format!("{} outputs but {} windows", y.len(), windows.len())));
    }
    if y.is_empty() {
        return Err(Error::degenerate("empty batch"));
    }
    let taps = windows[0].as_ref().len();
    let (m2, m4) = raw_moments(y);
    if m2 <= MOMENT_FLOOR {
        return Err(Error::degenerate("zero second moment in batch"));
    }
    let mut e3x = vec![0.0; taps];
    let mut e1x = vec![0.0; taps];
    for (&yn, w) in y.iter().zip(windows) {
        let w = w.as_ref();
        if w.len() != taps {
            return Err(Error::contract("windows differ in length"));
        }
        let y3 = yn * yn * yn;
        for k in 0..taps {
            e3x[k] += y3 * w[k];
            e1x[k] += yn * w[k];
        }
    }
    let n = y.len() as f64;
    Ok(e3x.iter().zip(&e1x).map(|(a, b)| 4.0 * (m2 * a / n - m4 * b / n) / (m2 * m2 * m2)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{fill_window, fir_filter};
    use crate::synth::{iid, Distribution};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rademacher_is_exactly_minus_two() {
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        assert_eq!(kurtosis_excess(&x).unwrap(), -2.0);
    }

    // Monte-Carlo oracles against analytic moments:
    // uniform(-1,1): E x^2 = 1/3, E x^4 = 1/5 -> -6/5.
    // Laplace(b=1): E x^2 = 2, E x^4 = 24 -> 24/4 - 3 = 3.
    #[test]
    fn distribution_kurtosis_values() {
        let n = 1_000_000;
        let u = kurtosis_excess(&iid(Distribution::Uniform, n, 1)).unwrap();
        assert!((u + 1.2).abs() < 0.02, "uniform {u}");
        let g = kurtosis_excess(&iid(Distribution::Gaussian, n, 2)).unwrap();
        assert!(g.abs() < 0.02, "gaussian {g}");
        let l = kurtosis_excess(&iid(Distribution::Laplace, n, 3)).unwrap();
        assert!((l - 3.0).abs() < 0.1, "laplace {l}");
    }

    #[test]
    fn kurtosis_rejects_degenerate() {
        assert!(matches!(kurtosis_excess(&[1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(kurtosis_excess(&[2.0; 10]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn update_examples() {
        let s = MomentState::new(1.0, 1.0, 0.0).unwrap().update(2.0);
        assert_eq!((s.m2(), s.m4()), (4.0, 16.0));
        let s = MomentState::new(1.0, 1.0, 1.0).unwrap().update(2.0);
        assert_eq!((s.m2(), s.m4()), (1.0, 1.0));
        let s = MomentState::new(1.0, 1.0, 0.99).unwrap().update(2.0);
        assert_relative_eq!(s.m2(), 1.03, epsilon = 1e-12);
        assert_relative_eq!(s.m4(), 1.15, epsilon = 1e-12);
        assert_eq!(s.beta(), 0.99);
    }

    #[test]
    fn feedback_examples() {
        let s = MomentState::new(1.0, 1.0, 0.99).unwrap();
        assert_eq!(s.feedback(1.0).unwrap(), 0.0);
        let s = MomentState::new(1.0, 3.0, 0.99).unwrap();
        assert_eq!(s.feedback(2.0).unwrap(), 8.0);
        let s = MomentState::new(2.0, 4.0, 0.99).unwrap();
        assert_eq!(s.feedback(0.0).unwrap(), 0.0);
    }

    #[test]
    fn feedback_guards_silence() {
        let s = MomentState::new(1e-9, 0.0, 0.99).unwrap();
        assert!(matches!(s.feedback(1.0), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn invalid_state_rejected() {
        assert!(MomentState::new(-1.0, 0.0, 0.5).is_err());
        assert!(MomentState::new(1.0, f64::NAN, 0.5).is_err());
        assert!(MomentState::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn batch_gradient_zero_output_is_degenerate() {
        let w = vec![vec![1.0, 2.0]; 4];
        assert!(matches!(batch_gradient(&[0.0; 4], &w), Err(Error::Degenerate(_))));
    }

    // Straight-line oracle for a single tap: y = x, gradient is a scalar.
    #[test]
    fn batch_gradient_single_tap_oracle() {
        let x = iid(Distribution::Laplace, 5000, 11);
        let windows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let g = batch_gradient(&x, &windows).unwrap();
        let n = x.len() as f64;
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        let mut y3x = 0.0;
        let mut yx = 0.0;
        for &v in &x {
            m2 += v * v / n;
            m4 += v.powi(4) / n;
            y3x += v.powi(4) / n;
            yx += v * v / n;
        }
        let expected = 4.0 * (m2 * y3x - m4 * yx) / m2.powi(3);
        assert_relative_eq!(g[0], expected, max_relative = 1e-12, epsilon = 1e-14);
    }

    fn windows_of(x: &[f64], taps: usize) -> Vec<Vec<f64>> {
        (0..x.len())
            .map(|n| {
                let mut w = vec![0.0; taps];
                fill_window(x, n, &mut w);
                w
            })
            .collect()
    }

    #[test]
    fn batch_gradient_matches_finite_differences() {
        let x = iid(Distribution::Laplace, 10_000, 5);
        let h = [1.0, -0.3, 0.2];
        let windows = windows_of(&x, 3);
        let y = fir_filter(&x, &h);
        let g = batch_gradient(&y, &windows).unwrap();
        let step = 1e-5;
        for k in 0..3 {
            let mut hp = h;
            let mut hm = h;
            hp[k] += step;
            hm[k] -= step;
            let jp = batch_kurtosis(&fir_filter(&x, &hp)).unwrap();
            let jm = batch_kurtosis(&fir_filter(&x, &hm)).unwrap();
            let fd = (jp - jm) / (2.0 * step);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1e-12);
            assert!(rel <= 1e-5, "tap {k}: fd {fd} analytic {} rel {rel}", g[k]);
        }
    }

    proptest! {
        #[test]
        fn kurtosis_scale_and_shift_invariant(
            x in prop::collection::vec(-5.0f64..5.0, 8..64),
            c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
            d in -50.0f64..50.0,
        ) {
            prop_assume!(kurtosis_excess(&x).is_ok());
            let k = kurtosis_excess(&x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let shifted: Vec<f64> = x.iter().map(|v| v + d).collect();
            prop_assert!((kurtosis_excess(&scaled).unwrap() - k).abs() < 1e-9 * (1.0 + k.abs()));
            prop_assert!((kurtosis_excess(&shifted).unwrap() - k).abs() < 1e-6 * (1.0 + k.abs()));
        }

        #[test]
        fn update_is_convex_combination(
            m2 in 0.0f64..10.0, m4 in 0.0f64..100.0, beta in 0.0f64..=1.0, y in -5.0f64..5.0,
        ) {
            let s = MomentState::new(m2, m4, beta).unwrap();
            let t = s.update(y);
            let tol = 1e-12 * (1.0 + m4 + y.powi(4));
            prop_assert!(t.m2() >= m2.min(y * y) - tol && t.m2() <= m2.max(y * y) + tol);
            prop_assert!(t.m4() >= m4.min(y.powi(4)) - tol && t.m4() <= m4.max(y.powi(4)) + tol);
        }

        #[test]
        fn feedback_sign_follows_threshold(m2 in 0.1f64..10.0, ratio in 0.5f64..10.0, y in -5.0f64..5.0) {
            let s = MomentState::new(m2, ratio * m2, 0.99).unwrap();
            let f = s.feedback(y).unwrap();
            let expected = (y * y - ratio) * y;
            prop_assume!(expected.abs() > 1e-9);
            prop_assert_eq!(f > 0.0, expected > 0.0);
        }
    }
}
