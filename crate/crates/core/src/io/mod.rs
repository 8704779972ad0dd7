//! File formats: WAV audio, PGM images and plain-text filter dumps.

pub mod dump;
pub mod pgm;
pub mod wav;

pub use pgm::{read_pgm, write_pgm};
pub use wav::{read_wav, write_wav};
