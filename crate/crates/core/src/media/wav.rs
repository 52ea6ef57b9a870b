//! Minimal RIFF/WAVE reader and writer: PCM 16-bit and IEEE float32,
//! mono or stereo. Samples are scaled to [-1, 1] on read.

use super::AudioTrack;
use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

fn u16_le(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn u32_le(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

pub fn read_wav(path: &Path) -> Result<AudioTrack> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format(format!(
            "{}: not a RIFF/WAVE file",
            path.display()
        )));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut off = 12;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = u32_le(&bytes, off + 4) as usize;
        let body_start = off + 8;
        let body_end = body_start.checked_add(size).filter(|e| *e <= bytes.len());
        let Some(body_end) = body_end else {
            return Err(Error::Format(format!(
                "{}: chunk {} overruns file",
                path.display(),
                String::from_utf8_lossy(id)
            )));
        };
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Format(format!("{}: short fmt chunk", path.display())));
                }
                fmt = Some((
                    u16_le(&bytes, body_start),
                    u16_le(&bytes, body_start + 2),
                    u32_le(&bytes, body_start + 4),
                    u16_le(&bytes, body_start + 14),
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned.
        off = body_end + (size & 1);
    }

    let (format, channels, sample_rate, bits) = fmt
        .ok_or_else(|| Error::Format(format!("{}: missing fmt chunk", path.display())))?;
    let data =
        data.ok_or_else(|| Error::Format(format!("{}: missing data chunk", path.display())))?;

    if channels != 1 && channels != 2 {
        return Err(Error::Unsupported(format!(
            "{}: {} channels (only mono/stereo)",
            path.display(),
            channels
        )));
    }
    if sample_rate == 0 {
        return Err(Error::Format(format!("{}: zero sample rate", path.display())));
    }

    let samples: Vec<f32> = match (format, bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| {
                let v = i16::from_le_bytes([c[0], c[1]]) as f32 / 32767.0;
                v.clamp(-1.0, 1.0)
            })
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]).clamp(-1.0, 1.0))
            .collect(),
        _ => {
            return Err(Error::Unsupported(format!(
                "{}: encoding format={format} bits={bits} (PCM16 or float32 only)",
                path.display()
            )))
        }
    };

    let trimmed = samples.len() - samples.len() % channels as usize;
    AudioTrack::new(samples[..trimmed].to_vec(), sample_rate, channels)
}

/// Writes 16-bit PCM. Read-back differs from the input by at most 1/32767.
pub fn write_wav(track: &AudioTrack, path: &Path) -> Result<()> {
    let data_len = track.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&track.channels.to_le_bytes());
    out.extend_from_slice(&track.sample_rate.to_le_bytes());
    let block_align = track.channels as u32 * 2;
    out.extend_from_slice(&(track.sample_rate * block_align).to_le_bytes()); // byte rate
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &track.samples {
        let q = (s * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
