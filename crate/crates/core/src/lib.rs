//! Blind deconvolution by maximum-kurtosis adaptive inverse filtering.
//!
//! An unknown LTI degradation is identified by adapting an inverse filter
//! so that its (whitened) output is as far from gaussian as possible,
//! measured by excess kurtosis. The crate covers 1-D signals and 2-D
//! images, synthetic degradations with exact inverses, scoring metrics,
//! WAV/PGM I/O and a config-driven experiment pipeline.

pub mod adapt1d;
pub mod adapt2d;
pub mod config;
pub mod degrade;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod signals;
pub mod stats;
pub mod synth;
pub mod whitening;

pub use error::{Error, Result};
pub use signals::{FilterTaps1D, Grid, Image2D, Kernel2D, Signal1D};
