//! 16-bit PCM mono RIFF/WAVE reading and writing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signals::Signal1D;

const PCM_SCALE: f64 = 32768.0;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a WAV byte stream; samples are scaled to `[-1, 1)` by 1/32768.
pub fn decode_wav(bytes: &[u8]) -> Result<Signal1D> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::format("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut rate = None;
    let mut data = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::format(format!("chunk size={size} runs past end of file")))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::format(format!("fmt chunk size={size} too small")));
                }
                let tag = u16_at(bytes, body);
                let channels = u16_at(bytes, body + 2);
                let bits = u16_at(bytes, body + 14);
                if tag != 1 {
                    return Err(Error::format(format!("format={tag} unsupported (PCM only)")));
                }
                if channels != 1 {
                    return Err(Error::format(format!("channels={channels} unsupported")));
                }
                if bits != 16 {
                    return Err(Error::format(format!("bits_per_sample={bits} unsupported")));
                }
                let r = u32_at(bytes, body + 4);
                if r == 0 {
                    return Err(Error::format("sample_rate=0 unsupported"));
                }
                rate = Some(r);
            }
            b"data" => data = Some(&bytes[body..end]),
            _ => {}
        }
        // chunks are word-aligned
        pos = end + (size & 1);
    }
    let rate = rate.ok_or_else(|| Error::format("missing fmt chunk"))?;
    let data = data.ok_or_else(|| Error::format("missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(Error::format(format!("data size={} is not a whole number of samples", data.len())));
    }
    let samples: Vec<f64> = data.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / PCM_SCALE).collect();
    if samples.is_empty() {
        return Err(Error::format("data chunk is empty"));
    }
    Signal1D::new(samples)?.with_sample_rate(rate)
}

/// Encodes 16-bit PCM mono; returns the bytes and the number of clipped samples.
///
/// Samples outside `[-1, 1)` are hard-clipped. A signal without a sample rate
/// is written at 8000 Hz.
pub fn encode_wav(s: &Signal1D) -> (Vec<u8>, usize) {
    let rate = s.sample_rate().unwrap_or(8000);
    let mut clipped = 0;
    let pcm: Vec<i16> = s
        .samples()
        .iter()
        .map(|&v| {
            if !(-1.0..1.0).contains(&v) {
                clipped += 1;
            }
            (v * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16
        })
        .collect();
    let data_len = (pcm.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for v in pcm {
        out.extend_from_slice(&v.to_le_bytes());
    }
    (out, clipped)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal1D> {
    decode_wav(&fs::read(path)?)
}

/// Writes `s` as 16-bit PCM mono and returns the clip count.
pub fn write_wav(path: impl AsRef<Path>, s: &Signal1D) -> Result<usize> {
    let (bytes, clipped) = encode_wav(s);
    fs::write(path, bytes)?;
    Ok(clipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm_file(channels: u16, format: u16, bits: u16, samples: &[i16]) -> Vec<u8> {
        let mut b = Vec::new();
        let data_len = (samples.len() * 2) as u32;
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data_len).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&format.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&16000u32.to_le_bytes());
        b.extend_from_slice(&(16000u32 * 2 * channels as u32).to_le_bytes());
        b.extend_from_slice(&(2 * channels).to_le_bytes());
        b.extend_from_slice(&bits.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&data_len.to_le_bytes());
        for s in samples {
            b.extend_from_slice(&s.to_le_bytes());
        }
        b
    }

    #[test]
    fn reads_scaled_samples() {
        let s = decode_wav(&pcm_file(1, 1, 16, &[0, 16384, -32768])).unwrap();
        assert_eq!(s.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(s.sample_rate(), Some(16000));
    }

    #[test]
    fn rejects_stereo() {
        let err = decode_wav(&pcm_file(2, 1, 16, &[0, 0])).unwrap_err();
        assert_eq!(err.to_string(), "format error: channels=2 unsupported");
    }

    #[test]
    fn rejects_non_pcm_and_other_depths() {
        assert!(matches!(decode_wav(&pcm_file(1, 3, 16, &[0])), Err(Error::Format(_))));
        assert!(matches!(decode_wav(&pcm_file(1, 1, 8, &[0])), Err(Error::Format(_))));
        assert!(matches!(decode_wav(b"RIFX0000WAVE"), Err(Error::Format(_))));
        let mut truncated = pcm_file(1, 1, 16, &[1, 2, 3]);
        truncated.truncate(truncated.len() - 3);
        assert!(matches!(decode_wav(&truncated), Err(Error::Format(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = pcm_file(1, 1, 16, &[100, -200]);
        let mut b = plain[..12].to_vec();
        b.extend_from_slice(b"LIST");
        b.extend_from_slice(&3u32.to_le_bytes());
        b.extend_from_slice(&[1, 2, 3, 0]);
        b.extend_from_slice(&plain[12..]);
        let s = decode_wav(&b).unwrap();
        assert_eq!(s.samples(), &[100.0 / 32768.0, -200.0 / 32768.0]);
    }

    #[test]
    fn clips_and_counts() {
        let s = Signal1D::new(vec![1.5, 0.25, -1.0]).unwrap();
        let (bytes, clipped) = encode_wav(&s);
        assert_eq!(clipped, 1);
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back.samples(), &[32767.0 / 32768.0, 0.25, -1.0]);
    }

    #[test]
    fn file_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let s = Signal1D::new((0..500).map(|i| (i as f64 * 0.1).sin() * 0.9).collect())
            .unwrap()
            .with_sample_rate(22050)
            .unwrap();
        assert_eq!(write_wav(&path, &s).unwrap(), 0);
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), Some(22050));
        for (a, b) in s.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let s = Signal1D::new(vec![0.0]).unwrap();
        let err = write_wav("/nonexistent-dir/x.wav", &s).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
