//! Binary PGM (`P5`, maxval 255) reading and writing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signals::Image2D;

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, field: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("invalid PGM {field}")))
    }
}

/// Parses a P5 image; pixels are divided by 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image2D> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::format(format!("magic={magic:?} unsupported (binary P5 only)")));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(format!("maxval={maxval} unsupported (255 only)")));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::format("missing whitespace after maxval"));
    }
    let raster = &bytes[h.pos + 1..];
    let need = width * height;
    if raster.len() < need {
        return Err(Error::format(format!("raster has {} bytes, expected {need}", raster.len())));
    }
    Image2D::new(height, width, raster[..need].iter().map(|&b| b as f64 / 255.0).collect())
        .map_err(|e| Error::format(e.to_string()))
}

/// Encodes a P5 image. Pixels inside `[0, 1]` map to `round(255 v)`; an image
/// with values outside that range is first rescaled affinely onto it.
pub fn encode_pgm(img: &Image2D) -> Result<Vec<u8>> {
    let in_range = img.pixels().iter().all(|v| (0.0..=1.0).contains(v));
    let scaled;
    let src = if in_range {
        img
    } else {
        scaled = img.rescale_unit()?;
        &scaled
    };
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(src.pixels().iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image2D> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image2D) -> Result<()> {
    fs::write(path, encode_pgm(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_scaled_pixels() {
        let mut b = b"P5\n2 2\n255\n".to_vec();
        b.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_pgm(&b).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert_eq!(img.get(0, 0), 0.0);
        assert_eq!(img.get(0, 1), 1.0);
        assert!((img.get(1, 0) - 0.50196).abs() < 1e-5);
        assert!((img.get(1, 1) - 0.25098).abs() < 1e-5);
    }

    #[test]
    fn header_comments_and_layout() {
        let mut b = b"P5 # made by hand\n3\t1 255 ".to_vec();
        b.extend_from_slice(&[10, 20, 30]);
        let img = decode_pgm(&b).unwrap();
        assert_eq!((img.height(), img.width()), (1, 3));
        assert_eq!(img.get(0, 2), 30.0 / 255.0);
    }

    #[test]
    fn rejects_ascii_and_deep_images() {
        assert!(matches!(decode_pgm(b"P2\n1 1\n255\n0\n"), Err(Error::Format(_))));
        let mut b = b"P5\n1 1\n65535\n".to_vec();
        b.extend_from_slice(&[0, 0]);
        assert!(matches!(decode_pgm(&b), Err(Error::Format(_))));
        assert!(matches!(decode_pgm(b"P5\n4 4\n255\n\x01"), Err(Error::Format(_))));
    }

    #[test]
    fn round_trip_within_quantization() {
        let img = Image2D::from_fn(5, 7, |r, c| ((r * 7 + c) as f64 / 34.0).powf(1.3)).unwrap();
        let back = decode_pgm(&encode_pgm(&img).unwrap()).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn out_of_range_image_is_stretched() {
        let img = Image2D::new(1, 3, vec![-2.0, 0.0, 2.0]).unwrap();
        let bytes = encode_pgm(&img).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = Image2D::from_fn(3, 4, |r, c| (r + c) as f64 / 5.0).unwrap();
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }
}
