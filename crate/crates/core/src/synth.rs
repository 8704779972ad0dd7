//! Seeded synthetic sources.
//!
//! Sources are i.i.d. innovations, optionally passed through a leaky
//! integrator `s(n) = color * s(n-1) + e(n)` (applied along rows and then
//! columns for images). A color close to 1 gives a lowpass, speech- or
//! image-like spectrum whose first difference is nearly white.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::signals::{Image2D, Signal1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Unit-scale Laplace, excess kurtosis 3.
    Laplace,
    /// Uniform on (-1, 1), excess kurtosis -1.2.
    Uniform,
    /// Standard normal.
    Gaussian,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Self::Laplace),
            "uniform" => Ok(Self::Uniform),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Laplace => "laplace",
            Self::Uniform => "uniform",
            Self::Gaussian => "gaussian",
        })
    }
}

/// `n` i.i.d. draws from `dist`, reproducible from `seed`.
pub fn iid(dist: Distribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        Distribution::Laplace => (0..n)
            .map(|_| {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            })
            .collect(),
        Distribution::Uniform => {
            let u = Uniform::new(-1.0, 1.0).expect("valid range");
            (0..n).map(|_| rng.sample(u)).collect()
        }
        Distribution::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

fn leaky_integrate(x: &mut [f64], stride: usize, count: usize, color: f64) {
    for i in 1..count {
        x[i * stride] += color * x[(i - 1) * stride];
    }
}

fn check_color(color: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&color) {
        return Err(Error::Config(format!("color must lie in [0, 1], got {color}")));
    }
    Ok(())
}

/// Synthetic 1-D source of `len` samples.
pub fn source_1d(dist: Distribution, len: usize, seed: u64, color: f64) -> Result<Signal1D> {
    check_color(color)?;
    let mut x = iid(dist, len, seed);
    if color > 0.0 {
        leaky_integrate(&mut x, 1, len, color);
    }
    Signal1D::new(x)
}

/// Synthetic `height x width` image, rescaled to `[0, 1]`.
pub fn source_2d(dist: Distribution, height: usize, width: usize, seed: u64, color: f64) -> Result<Image2D> {
    check_color(color)?;
    let mut px = iid(dist, height * width, seed);
    if color > 0.0 {
        for r in 0..height {
            leaky_integrate(&mut px[r * width..(r + 1) * width], 1, width, color);
        }
        for c in 0..width {
            leaky_integrate(&mut px[c..], width, height, color);
        }
    }
    Image2D::new(height, width, px)?.rescale_unit()
}
