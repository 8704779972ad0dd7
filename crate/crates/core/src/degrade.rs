//! Synthetic LTI degradations and their analytic inverses.
//!
//! All recursions run with zero initial and boundary conditions, so every
//! degradation/inverse pair is an exact identity on finite data. For images,
//! `g(x, y)` is read with `x` as the row index and `y` as the column index.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signals::{fir_filter, FilterTaps1D, Image2D, Kernel2D, Signal1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradeKind {
    /// `x(n) = a1 x(n-D) + a2 x(n-2D) + s(n)`
    EchoIir,
    /// `x(n) = a1 x(n-1) + a2 x(n-2) + s(n)`
    Ar2Iir,
    /// `x(n) = s(n) + (a1 + a2) s(n-1) + a1 a2 s(n-2)`
    Fir2,
    /// `g(x,y) = a1 g(x-1,y) + a2 g(x,y-1) + f(x,y)`
    ImageIir2,
    /// `g(x,y) = a1 g(x-1,y) + a2 g(x,y-1) + a3 g(x-1,y-1) + f(x,y)`
    ImageIir3,
}

impl DegradeKind {
    pub fn is_image(self) -> bool {
        matches!(self, Self::ImageIir2 | Self::ImageIir3)
    }
}

impl FromStr for DegradeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "echo_iir" => Self::EchoIir,
            "ar2_iir" => Self::Ar2Iir,
            "fir2" => Self::Fir2,
            "image_iir2" => Self::ImageIir2,
            "image_iir3" => Self::ImageIir3,
            other => return Err(Error::Config(format!("unknown degradation kind '{other}'"))),
        })
    }
}

impl fmt::Display for DegradeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EchoIir => "echo_iir",
            Self::Ar2Iir => "ar2_iir",
            Self::Fir2 => "fir2",
            Self::ImageIir2 => "image_iir2",
            Self::ImageIir3 => "image_iir3",
        })
    }
}

/// Parametric description of a degrading system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    pub kind: DegradeKind,
    pub a1: f64,
    pub a2: f64,
    /// Only used by [`DegradeKind::ImageIir3`].
    pub a3: f64,
    /// Echo delay; only used by [`DegradeKind::EchoIir`].
    pub delay: usize,
}

impl DegradeSpec {
    pub fn new(kind: DegradeKind, a1: f64, a2: f64) -> Self {
        Self { kind, a1, a2, a3: 0.0, delay: 1 }
    }

    pub fn echo(a1: f64, a2: f64, delay: usize) -> Self {
        Self { delay, ..Self::new(DegradeKind::EchoIir, a1, a2) }
    }

    pub fn image3(a1: f64, a2: f64, a3: f64) -> Self {
        Self { a3, ..Self::new(DegradeKind::ImageIir3, a1, a2) }
    }

    fn a3_effective(&self) -> f64 {
        if self.kind == DegradeKind::ImageIir3 {
            self.a3
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.a1, self.a2, self.a3].iter().all(|v| v.is_finite()) {
            return Err(Error::contract("degradation coefficients must be finite"));
        }
        match self.kind {
            DegradeKind::EchoIir | DegradeKind::Ar2Iir => {
                if self.kind == DegradeKind::EchoIir && self.delay == 0 {
                    return Err(Error::contract("echo delay must be at least 1"));
                }
                if !stability_check(self.a1, self.a2) {
                    return Err(Error::contract(format!("unstable recursion a1={}, a2={}", self.a1, self.a2)));
                }
            }
            DegradeKind::Fir2 => check_fir_roots(self.a1, self.a2)?,
            DegradeKind::ImageIir2 | DegradeKind::ImageIir3 => {
                if !stability_check_2d(self.a1, self.a2, self.a3_effective()) {
                    return Err(Error::contract(format!(
                        "unstable 2-D recursion a1={}, a2={}, a3={}",
                        self.a1,
                        self.a2,
                        self.a3_effective()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn apply_1d(&self, s: &Signal1D) -> Result<Signal1D> {
        match self.kind {
            DegradeKind::EchoIir => echo_iir(s, self.a1, self.a2, self.delay),
            DegradeKind::Ar2Iir => ar2_iir(s, self.a1, self.a2),
            DegradeKind::Fir2 => fir_degrade(s, self.a1, self.a2),
            k => Err(Error::contract(format!("{k} degrades images, not signals"))),
        }
    }

    pub fn apply_2d(&self, img: &Image2D) -> Result<Image2D> {
        if !self.kind.is_image() {
            return Err(Error::contract(format!("{} degrades signals, not images", self.kind)));
        }
        image_iir(img, self.a1, self.a2, self.a3_effective())
    }

    /// Analytic inverse filter of a 1-D degradation, at least `len` taps long
    /// (longer when the echo delay requires it).
    pub fn inverse_1d(&self, len: usize) -> Result<FilterTaps1D> {
        match self.kind {
            DegradeKind::EchoIir | DegradeKind::Ar2Iir => {
                let d = if self.kind == DegradeKind::EchoIir { self.delay } else { 1 };
                let mut taps = vec![0.0; len.max(2 * d + 1)];
                taps[0] = 1.0;
                taps[d] = -self.a1;
                taps[2 * d] = -self.a2;
                FilterTaps1D::new(taps)
            }
            DegradeKind::Fir2 => inverse_fir_taps(self.a1, self.a2, len.max(3)),
            k => Err(Error::contract(format!("{k} has no 1-D inverse"))),
        }
    }

    pub fn inverse_2d(&self) -> Result<Kernel2D> {
        if !self.kind.is_image() {
            return Err(Error::contract(format!("{} has no 2-D inverse", self.kind)));
        }
        inverse_kernel_2d(self.a1, self.a2, self.a3_effective())
    }
}

/// True iff both roots of `z^2 - a1 z - a2` lie strictly inside the unit circle.
pub fn stability_check(a1: f64, a2: f64) -> bool {
    a2.abs() < 1.0 && a2 + a1 < 1.0 && a2 - a1 < 1.0
}

/// Exact stability test for the first-quadrant recursion
/// `g = a1 g(x-1,y) + a2 g(x,y-1) + a3 g(x-1,y-1) + f`.
///
/// The denominator `1 - a1 z1 - a2 z2 - a3 z1 z2` must not vanish on the
/// closed unit bidisk. By Huang's theorem that reduces to `|a1| < 1` plus
/// `|1 - a1 z1| > |a2 + a3 z1|` on `|z1| = 1`, which in closed form is
/// `1 + a1^2 - a2^2 - a3^2 > 2 |a1 + a2 a3|`. With `a3 = 0` this is
/// `|a1| + |a2| < 1`.
pub fn stability_check_2d(a1: f64, a2: f64, a3: f64) -> bool {
    a1.abs() < 1.0 && 1.0 + a1 * a1 - a2 * a2 - a3 * a3 > 2.0 * (a1 + a2 * a3).abs()
}

fn delayed_ar2(s: &Signal1D, a1: f64, a2: f64, d: usize) -> Result<Signal1D> {
    if d == 0 {
        return Err(Error::contract("delay must be at least 1"));
    }
    if !stability_check(a1, a2) {
        return Err(Error::contract(format!("unstable recursion a1={a1}, a2={a2}")));
    }
    let mut x = s.samples().to_vec();
    for n in d..x.len() {
        let mut acc = a1 * x[n - d];
        if n >= 2 * d {
            acc += a2 * x[n - 2 * d];
        }
        x[n] += acc;
    }
    s.derive(x)
}

pub fn echo_iir(s: &Signal1D, a1: f64, a2: f64, delay: usize) -> Result<Signal1D> {
    delayed_ar2(s, a1, a2, delay)
}

pub fn ar2_iir(s: &Signal1D, a1: f64, a2: f64) -> Result<Signal1D> {
    delayed_ar2(s, a1, a2, 1)
}

fn check_fir_roots(a1: f64, a2: f64) -> Result<()> {
    if a1.abs() >= 1.0 || a2.abs() >= 1.0 {
        return Err(Error::contract(format!("FIR roots must lie inside the unit circle, got a1={a1}, a2={a2}")));
    }
    Ok(())
}

/// FIR degradation with taps `[1, a1 + a2, a1 a2]`.
pub fn fir_degrade(s: &Signal1D, a1: f64, a2: f64) -> Result<Signal1D> {
    check_fir_roots(a1, a2)?;
    s.derive(fir_filter(s.samples(), &[1.0, a1 + a2, a1 * a2]))
}

/// First `len` taps of the power-series inverse of `[1, a1 + a2, a1 a2]`.
pub fn inverse_fir_taps(a1: f64, a2: f64, len: usize) -> Result<FilterTaps1D> {
    check_fir_roots(a1, a2)?;
    if len < 3 {
        return Err(Error::contract("inverse FIR needs at least 3 taps"));
    }
    let (b1, b2) = (a1 + a2, a1 * a2);
    let mut h = vec![0.0; len];
    h[0] = 1.0;
    h[1] = -b1;
    for k in 2..len {
        h[k] = -b1 * h[k - 1] - b2 * h[k - 2];
    }
    FilterTaps1D::new(h)
}

/// Raster-order causal 2-D recursion with zero boundary conditions.
pub fn image_iir(img: &Image2D, a1: f64, a2: f64, a3: f64) -> Result<Image2D> {
    if !stability_check_2d(a1, a2, a3) {
        return Err(Error::contract(format!("unstable 2-D recursion a1={a1}, a2={a2}, a3={a3}")));
    }
    let (h, w) = (img.height(), img.width());
    let mut g = img.pixels().to_vec();
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            if r > 0 {
                acc += a1 * g[(r - 1) * w + c];
                if c > 0 {
                    acc += a3 * g[(r - 1) * w + c - 1];
                }
            }
            if c > 0 {
                acc += a2 * g[r * w + c - 1];
            }
            g[r * w + c] += acc;
        }
    }
    Image2D::new(h, w, g)
}

/// 3x3 inverse kernel `[[-a3, -a1, 0], [-a2, 1, 0], [0, 0, 0]]`.
pub fn inverse_kernel_2d(a1: f64, a2: f64, a3: f64) -> Result<Kernel2D> {
    Kernel2D::new(3, 3, vec![-a3, -a1, 0.0, -a2, 1.0, 0.0, 0.0, 0.0, 0.0])
}
