//! Synthetic fixtures with known ground truth: click tracks for the audio
//! side and impact videos for the visual side. Every generator returns its
//! exact event times so detector output can be checked against construction,
//! never against another detector.
//!
//! Video impacts are encoded as abrupt motion onsets: the impact envelope
//! rectifies positive directogram flux, so a start registers while a stop
//! does not.

use crate::error::{Error, Result};
use crate::media::{AudioTrack, Frame, FrameSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f32::consts::TAU;

#[derive(Debug, Clone)]
pub struct ClickSpec {
    pub bpm: f64,
    pub duration: f64,
    pub click_gain: f32,
    pub noise_floor: f32,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for ClickSpec {
    fn default() -> Self {
        ClickSpec {
            bpm: 120.0,
            duration: 10.0,
            click_gain: 0.9,
            noise_floor: 0.0,
            sample_rate: 22050,
            seed: 0,
        }
    }
}

/// Click track with clicks at k * 60/bpm. Returns the track and the exact
/// click times.
pub fn make_click_track(spec: &ClickSpec) -> Result<(AudioTrack, Vec<f64>)> {
    if !(30.0..=300.0).contains(&spec.bpm) {
        return Err(Error::InvalidArgument(format!(
            "bpm must be in [30, 300], got {}",
            spec.bpm
        )));
    }
    if spec.duration < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "duration must be >= 1 s, got {}",
            spec.duration
        )));
    }
    let sr = spec.sample_rate as f32;
    let n = (spec.duration * sr as f64).round() as usize;
    let mut samples = vec![0.0f32; n];

    if spec.noise_floor > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for s in samples.iter_mut() {
            *s = spec.noise_floor * rng.gen_range(-1.0..1.0);
        }
    }

    let period = 60.0 / spec.bpm;
    let click_len = (0.010 * sr) as usize;
    let mut truth = Vec::new();
    let mut k = 0u32;
    loop {
        let t = k as f64 * period;
        if t >= spec.duration {
            break;
        }
        truth.push(t);
        let start = (t * sr as f64).round() as usize;
        for i in 0..click_len {
            let idx = start + i;
            if idx >= n {
                break;
            }
            let dt = i as f32 / sr;
            let burst = (-dt / 0.004).exp()
                * (0.6 * (TAU * 1500.0 * dt).sin() + 0.4 * (TAU * 4200.0 * dt).sin());
            samples[idx] = (samples[idx] + spec.click_gain * burst).clamp(-1.0, 1.0);
        }
        k += 1;
    }
    Ok((AudioTrack::new(samples, spec.sample_rate, 1)?, truth))
}

#[derive(Debug, Clone)]
pub struct ImpactVideoSpec {
    /// Seconds at which the square abruptly starts moving.
    pub impact_times: Vec<f64>,
    pub fps: f64,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub square_size: usize,
    /// Pixels per frame while the square is in motion.
    pub speed: i32,
    /// Frames of motion following each impact.
    pub burst_frames: usize,
    pub seed: u64,
}

impl Default for ImpactVideoSpec {
    fn default() -> Self {
        ImpactVideoSpec {
            impact_times: Vec::new(),
            fps: 8.0,
            frame_count: 25,
            width: 64,
            height: 64,
            square_size: 24,
            speed: 3,
            burst_frames: 2,
            seed: 0,
        }
    }
}

/// Textured square that sits still and starts moving at each impact time.
/// Returns the sequence and the impact times snapped to the frame grid.
pub fn make_impact_video(spec: &ImpactVideoSpec) -> Result<(FrameSequence, Vec<f64>)> {
    if spec.frame_count < 2 {
        return Err(Error::InvalidArgument("frame_count must be >= 2".into()));
    }
    if spec.square_size + 2 >= spec.width.min(spec.height) {
        return Err(Error::InvalidArgument("square does not fit the frame".into()));
    }
    let duration = spec.frame_count as f64 / spec.fps;

    let mut impact_frames: Vec<usize> = Vec::new();
    for (i, &t) in spec.impact_times.iter().enumerate() {
        if i > 0 && t <= spec.impact_times[i - 1] {
            return Err(Error::InvalidArgument(
                "impact times must be strictly increasing".into(),
            ));
        }
        if t < 0.0 || t >= duration {
            return Err(Error::InvalidArgument(format!(
                "impact at {t} s is outside the clip [0, {duration})"
            )));
        }
        let f = (t * spec.fps).round() as usize;
        let f = f.clamp(1, spec.frame_count - 1);
        if let Some(&prev) = impact_frames.last() {
            if f < prev + 2 {
                return Err(Error::InvalidArgument(format!(
                    "impacts at frames {prev} and {f} are closer than 2 frames"
                )));
            }
        }
        impact_frames.push(f);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.square_size;
    let texture: Vec<f32> = (0..s * s).map(|_| rng.gen_range(0.35..1.0)).collect();
    let background: Vec<f32> = (0..spec.width * spec.height)
        .map(|_| rng.gen_range(0.0..0.08))
        .collect();

    // Per-frame square velocity: zero except during post-impact bursts.
    let mut moving = vec![false; spec.frame_count];
    for &f in &impact_frames {
        for b in 0..spec.burst_frames {
            if f + b < spec.frame_count {
                moving[f + b] = true;
            }
        }
    }

    // Integer trajectory that bounces before leaving the frame.
    let mut x = 2i32;
    let mut y = (spec.height as i32 - s as i32) / 2;
    let mut dir = 1i32;
    let mut positions = Vec::with_capacity(spec.frame_count);
    positions.push((x, y));
    for k in 1..spec.frame_count {
        if moving[k] {
            if x + dir * spec.speed < 1 || x + dir * spec.speed + s as i32 > spec.width as i32 - 1 {
                dir = -dir;
            }
            x += dir * spec.speed;
        }
        positions.push((x, y));
    }

    let mut frames = Vec::with_capacity(spec.frame_count);
    for &(px, py) in &positions {
        let mut luma = background.clone();
        for ty in 0..s {
            for tx in 0..s {
                let (ix, iy) = (px as usize + tx, py as usize + ty);
                luma[iy * spec.width + ix] = texture[ty * s + tx];
            }
        }
        frames.push(Frame::from_luma(luma));
    }

    let truth = impact_frames
        .iter()
        .map(|&f| f as f64 / spec.fps)
        .collect();
    let seq = FrameSequence::new(frames, spec.fps, spec.width, spec.height)?;
    Ok((seq, truth))
}

#[derive(Debug, Clone)]
pub struct PairedSpec {
    pub bpm: f64,
    pub music_duration: f64,
    pub fps: f64,
    pub frame_count: usize,
    /// Exponent of the monotone time distortion mapping music time to
    /// video time; 1.0 means a pure linear squeeze.
    pub distortion: f64,
    pub seed: u64,
}

impl Default for PairedSpec {
    fn default() -> Self {
        PairedSpec {
            bpm: 100.0,
            music_duration: 5.3,
            fps: 8.0,
            frame_count: 25,
            distortion: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairedFixture {
    pub video: FrameSequence,
    pub audio: AudioTrack,
    /// Ground-truth visual impact times on the video timeline.
    pub video_impacts: Vec<f64>,
    /// Ground-truth click times on the music timeline.
    pub click_times: Vec<f64>,
}

/// Click track plus a video whose impacts are the clicks pushed through a
/// monotone time distortion. Clicks whose distorted images would violate
/// the two-frame impact spacing are left without a visual counterpart.
pub fn make_paired_fixture(spec: &PairedSpec) -> Result<PairedFixture> {
    let (audio, click_times) = make_click_track(&ClickSpec {
        bpm: spec.bpm,
        duration: spec.music_duration,
        seed: spec.seed,
        ..ClickSpec::default()
    })?;

    let video_duration = spec.frame_count as f64 / spec.fps;
    let t_m = spec.music_duration;
    let mut impacts: Vec<f64> = Vec::new();
    let mut last_frame: Option<usize> = None;
    for &c in &click_times {
        let mapped = video_duration * (c / t_m).powf(spec.distortion);
        let f = (mapped * spec.fps).round() as usize;
        if f < 1 || f + 1 >= spec.frame_count {
            continue;
        }
        if last_frame.is_some_and(|prev| f < prev + 2) {
            continue;
        }
        impacts.push(f as f64 / spec.fps);
        last_frame = Some(f);
    }

    let (video, video_impacts) = make_impact_video(&ImpactVideoSpec {
        impact_times: impacts,
        fps: spec.fps,
        frame_count: spec.frame_count,
        seed: spec.seed.wrapping_add(1),
        ..ImpactVideoSpec::default()
    })?;

    Ok(PairedFixture {
        video,
        audio,
        video_impacts,
        click_times,
    })
}
