//! Decode/encode for the media formats the toolkit exchanges with the
//! outside world: WAV (PCM16 / float32), PNG directories with a JSON
//! manifest, and Y4M streams.

mod frames;
mod wav;
mod y4m;

pub use frames::{read_frame_dir, write_frame_dir, Manifest};
pub use wav::{read_wav, write_wav};
pub use y4m::{read_y4m, write_y4m};

use crate::error::{Error, Result};
use std::path::Path;

/// BT.601 luma weights.
const LUMA_R: f32 = 0.299;
const LUMA_G: f32 = 0.587;
const LUMA_B: f32 = 0.114;

/// Decoded audio with interleaved samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl AudioTrack {
    pub fn new(samples: Vec<f32>, sample_rate: u32, channels: u16) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample_rate must be > 0".into()));
        }
        if channels != 1 && channels != 2 {
            return Err(Error::InvalidArgument(format!(
                "channels must be 1 or 2, got {channels}"
            )));
        }
        if samples.len() % channels as usize != 0 {
            return Err(Error::InvalidArgument(
                "sample count must be divisible by channel count".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::InvalidArgument(
                "samples must be finite and within [-1, 1]".into(),
            ));
        }
        Ok(AudioTrack {
            samples,
            sample_rate,
            channels,
        })
    }

    /// Duration in seconds: samples / (channels * sample_rate).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / (self.channels as f64 * self.sample_rate as f64)
    }

    pub fn frame_count(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    /// Downmix to mono by arithmetic mean across channels.
    pub fn downmix_mono(&self) -> AudioTrack {
        if self.channels == 1 {
            return self.clone();
        }
        let samples = self
            .samples
            .chunks_exact(2)
            .map(|lr| (lr[0] + lr[1]) / 2.0)
            .collect();
        AudioTrack {
            samples,
            sample_rate: self.sample_rate,
            channels: 1,
        }
    }

    /// Slice by sample-frame index range (per channel), keeping layout.
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<AudioTrack> {
        let ch = self.channels as usize;
        if start > end || end > self.frame_count() {
            return Err(Error::InvalidArgument(format!(
                "slice [{start}, {end}) out of range"
            )));
        }
        Ok(AudioTrack {
            samples: self.samples[start * ch..end * ch].to_vec(),
            sample_rate: self.sample_rate,
            channels: self.channels,
        })
    }
}

/// Single video frame: grayscale plane in [0, 1], optional RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub luma: Vec<f32>,
    pub rgb: Option<Vec<[f32; 3]>>,
}

impl Frame {
    pub fn from_luma(luma: Vec<f32>) -> Self {
        Frame { luma, rgb: None }
    }

    /// Builds a frame from RGB pixels; luma is the BT.601 projection.
    pub fn from_rgb(rgb: Vec<[f32; 3]>) -> Self {
        let luma = rgb
            .iter()
            .map(|[r, g, b]| LUMA_R * r + LUMA_G * g + LUMA_B * b)
            .collect();
        Frame {
            luma,
            rgb: Some(rgb),
        }
    }

    /// Pixel-wise linear blend `(1-w)*self + w*other`. Exact at w == 0 / 1.
    pub fn blend(&self, other: &Frame, w: f32) -> Frame {
        if w == 0.0 {
            return self.clone();
        }
        if w == 1.0 {
            return other.clone();
        }
        let luma = self
            .luma
            .iter()
            .zip(&other.luma)
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect();
        let rgb = match (&self.rgb, &other.rgb) {
            (Some(a), Some(b)) => Some(
                a.iter()
                    .zip(b)
                    .map(|(pa, pb)| {
                        [
                            pa[0] * (1.0 - w) + pb[0] * w,
                            pa[1] * (1.0 - w) + pb[1] * w,
                            pa[2] * (1.0 - w) + pb[2] * w,
                        ]
                    })
                    .collect(),
            ),
            _ => None,
        };
        Frame { luma, rgb }
    }
}

/// Ordered frames with shared geometry and a frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: f64, width: usize, height: usize) -> Result<Self> {
        if fps <= 0.0 || !fps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fps must be positive, got {fps}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("frame size must be nonzero".into()));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.luma.len() != width * height {
                return Err(Error::Format(format!(
                    "frame {i} has {} luma samples, expected {}",
                    f.luma.len(),
                    width * height
                )));
            }
            if let Some(rgb) = &f.rgb {
                if rgb.len() != width * height {
                    return Err(Error::Format(format!("frame {i} rgb size mismatch")));
                }
            }
        }
        Ok(FrameSequence {
            frames,
            fps,
            width,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Clip duration T = frame_count / fps.
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// Source time of frame k.
    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.fps
    }
}

/// Reads a frame sequence from a manifest directory or a `.y4m` file.
pub fn read_frames(path: &Path) -> Result<FrameSequence> {
    if path.is_file() || path.extension().is_some_and(|e| e == "y4m") {
        read_y4m(path)
    } else {
        read_frame_dir(path)
    }
}

/// Writes a frame sequence as a `.y4m` stream (by extension) or a PNG
/// directory with a JSON manifest.
pub fn write_frames(seq: &FrameSequence, path: &Path) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot write a zero-frame sequence".into(),
        ));
    }
    if path.extension().is_some_and(|e| e == "y4m") {
        write_y4m(seq, path)
    } else {
        write_frame_dir(seq, path)
    }
}
