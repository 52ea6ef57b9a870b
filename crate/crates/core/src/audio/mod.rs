//! Music analysis: onset envelope, tempo, beat tracking, and the
//! onset-strength segmentation that cuts a track into bar-scale clips.

mod spectral;

use crate::error::{Error, Result};
use crate::media::AudioTrack;
use crate::types::{BeatSequence, Envelope};

const TARGET_RATE: u32 = 22050;
const WIN_AT_TARGET: usize = 2048;
const HOP_AT_TARGET: usize = 512;
const N_MELS: usize = 128;
/// Tempo deviation penalty weight in the beat-tracking objective.
const BEAT_LAMBDA: f64 = 100.0;

/// Tempo estimate; beat and bar durations derive from bpm so that
/// `bar_duration == 4 * beat_period` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoEstimate {
    pub bpm: f64,
}

impl TempoEstimate {
    pub fn new(bpm: f64) -> Result<Self> {
        if !(30.0..=300.0).contains(&bpm) {
            return Err(Error::InvalidArgument(format!(
                "bpm must be in [30, 300], got {bpm}"
            )));
        }
        Ok(TempoEstimate { bpm })
    }

    /// Seconds per beat: 60 / bpm.
    pub fn beat_period(&self) -> f64 {
        60.0 / self.bpm
    }

    /// Seconds per four-beat bar: 4 * 60 / bpm.
    pub fn bar_duration(&self) -> f64 {
        4.0 * self.beat_period()
    }
}

/// Result of the bar-scale segmentation. Boundaries include 0 and the
/// track duration; clips tile the track with no gaps or overlaps.
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub boundaries: Vec<f64>,
    pub clips: Vec<(f64, f64)>,
    /// Set when the stopping criterion could not be met (track shorter
    /// than a bar, or segmentation points exhausted).
    pub warning: bool,
}

/// Onset envelope: positive half-wave rectified spectral flux on a
/// log-magnitude mel spectrogram. Input is decimated to 22050 Hz when the
/// rate is an integer multiple; otherwise the analysis window and hop are
/// scaled to the native rate.
pub fn onset_envelope(track: &AudioTrack) -> Result<Envelope> {
    if track.duration() < 0.5 {
        return Err(Error::InvalidArgument(format!(
            "input too short for onset analysis: {:.3} s < 0.5 s",
            track.duration()
        )));
    }
    let mono = track.downmix_mono();
    let (samples, rate) = if mono.sample_rate > TARGET_RATE && mono.sample_rate % TARGET_RATE == 0 {
        let factor = (mono.sample_rate / TARGET_RATE) as usize;
        let decimated = mono
            .samples
            .chunks(factor)
            .map(|c| c.iter().sum::<f32>() / c.len() as f32)
            .collect();
        (decimated, TARGET_RATE)
    } else {
        (mono.samples, mono.sample_rate)
    };

    let (win, hop) = if rate == TARGET_RATE {
        (WIN_AT_TARGET, HOP_AT_TARGET)
    } else {
        let scale = rate as f64 / TARGET_RATE as f64;
        let win = ((WIN_AT_TARGET as f64 * scale).round() as usize).max(16) & !1;
        let hop = ((HOP_AT_TARGET as f64 * scale).round() as usize).max(4);
        (win, hop)
    };

    let mel_db = spectral::log_mel_spectrogram(&samples, rate as f32, win, hop, N_MELS);
    let mut flux = vec![0.0f64; mel_db.len()];
    for t in 1..mel_db.len() {
        let mut acc = 0.0f64;
        for m in 0..N_MELS {
            acc += f64::from((mel_db[t][m] - mel_db[t - 1][m]).max(0.0));
        }
        flux[t] = acc / N_MELS as f64;
    }
    Envelope::new(flux, hop as f64 / rate as f64, 0.0)
}

/// Tempo from the autocorrelation of the onset envelope over lags covering
/// 30-300 bpm, with a log-normal octave prior centered at 120 bpm and
/// parabolic peak refinement.
pub fn estimate_tempo(env: &Envelope) -> Result<TempoEstimate> {
    if env.duration() < 4.0 {
        return Err(Error::InvalidArgument(format!(
            "need >= 4 s of envelope for tempo, got {:.2} s",
            env.duration()
        )));
    }
    if env.max_value() <= 0.0 {
        return Err(Error::Analysis("no rhythmic content".into()));
    }

    let n = env.len();
    let mean = env.values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = env.values.iter().map(|v| v - mean).collect();

    let lag_min = (0.2 / env.hop_time).ceil() as usize;
    let lag_max = ((2.0 / env.hop_time).floor() as usize).min(n - 1);
    if lag_min >= lag_max {
        return Err(Error::Analysis("envelope too coarse for tempo".into()));
    }

    let ac: Vec<f64> = (0..=lag_max)
        .map(|lag| (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>())
        .collect();
    let prior = |bpm: f64| (-0.5 * (bpm / 120.0).log2().powi(2)).exp();
    let score = |lag: usize| ac[lag].max(0.0) * prior(60.0 / (lag as f64 * env.hop_time));

    let mut best_lag = lag_min;
    let mut best_score = score(lag_min);
    for lag in lag_min + 1..=lag_max {
        let s = score(lag);
        if s > best_score {
            best_score = s;
            best_lag = lag;
        }
    }
    if best_score <= 0.0 {
        return Err(Error::Analysis("no rhythmic content".into()));
    }

    // Parabolic refinement on the raw autocorrelation around the winner.
    let mut lag = best_lag as f64;
    if best_lag > lag_min && best_lag < lag_max {
        let (a, b, c) = (ac[best_lag - 1], ac[best_lag], ac[best_lag + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-12 {
            let delta = 0.5 * (a - c) / denom;
            if delta.abs() <= 1.0 {
                lag += delta;
            }
        }
    }
    let bpm = (60.0 / (lag * env.hop_time)).clamp(30.0, 300.0);
    TempoEstimate::new(bpm)
}

/// Dynamic-programming beat tracker maximizing
/// `sum onset(beat) - lambda * sum ln(gap/period)^2` with lambda = 100.
pub fn track_beats(env: &Envelope, tempo: &TempoEstimate) -> Result<BeatSequence> {
    let total = env.duration();
    let max = env.max_value();
    if max <= 0.0 || env.len() < 2 {
        return Ok(BeatSequence::empty(total.max(f64::MIN_POSITIVE)));
    }
    let values: Vec<f64> = env.values.iter().map(|v| v / max).collect();
    let n = values.len();
    let period = tempo.beat_period() / env.hop_time;
    let lo = ((0.5 * period).ceil() as usize).max(1);
    let hi = ((2.0 * period).floor() as usize).max(lo + 1);

    let mut cumulative = vec![0.0f64; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut best = 0.0f64;
        let mut best_j = None;
        let j_lo = i.saturating_sub(hi);
        let j_hi = i.saturating_sub(lo);
        if i >= lo {
            for j in j_lo..=j_hi {
                let gap = (i - j) as f64 / period;
                let v = cumulative[j] - BEAT_LAMBDA * gap.ln().powi(2);
                if v > best {
                    best = v;
                    best_j = Some(j);
                }
            }
        }
        cumulative[i] = values[i] + best;
        prev[i] = best_j;
    }

    // End on the best-scoring frame within the final two periods.
    let tail_start = n.saturating_sub(hi);
    let mut end = tail_start;
    for i in tail_start..n {
        if cumulative[i] > cumulative[end] {
            end = i;
        }
    }

    let mut idx = Vec::new();
    let mut cur = Some(end);
    while let Some(i) = cur {
        idx.push(i);
        cur = prev[i];
    }
    idx.reverse();

    let times: Vec<f64> = idx.iter().map(|&i| env.time(i)).collect();
    let strengths: Vec<f64> = idx.iter().map(|&i| env.values[i]).collect();
    BeatSequence::new(times, strengths, total)
}

/// Iteratively inserts the strongest remaining envelope local maximum as a
/// segmentation point until the mean clip duration reaches the bar
/// duration. Candidates must keep every clip at least one beat long.
pub fn segment_music(
    track: &AudioTrack,
    env: &Envelope,
    tempo: &TempoEstimate,
) -> Result<SegmentationResult> {
    let duration = track.duration();
    let bar = tempo.bar_duration();
    let period = tempo.beat_period();

    if duration <= bar {
        return Ok(SegmentationResult {
            boundaries: vec![0.0, duration],
            clips: vec![(0.0, duration)],
            warning: true,
        });
    }

    // Candidate points: envelope local maxima, strongest first, earlier
    // time breaking ties.
    let mut candidates: Vec<(f64, f64)> = Vec::new(); // (strength, time)
    for i in 1..env.len().saturating_sub(1) {
        let v = env.values[i];
        if v > env.values[i - 1] && v >= env.values[i + 1] && v > 0.0 {
            let t = env.time(i);
            if t > 0.0 && t < duration {
                candidates.push((v, t));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));

    let mut boundaries = vec![0.0, duration];
    let mut used = vec![false; candidates.len()];
    let mut warning = false;
    loop {
        let mean = duration / (boundaries.len() - 1) as f64;
        if mean <= bar {
            break;
        }
        let pick = candidates.iter().enumerate().find(|(ci, (_, t))| {
            !used[*ci] && boundaries.iter().all(|b| (t - b).abs() >= period)
        });
        match pick {
            Some((ci, &(_, t))) => {
                used[ci] = true;
                let pos = boundaries.partition_point(|b| *b < t);
                boundaries.insert(pos, t);
            }
            None => {
                warning = true;
                break;
            }
        }
    }

    let clips = boundaries.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(SegmentationResult {
        boundaries,
        clips,
        warning,
    })
}

/// Full rhythm description of a music clip.
#[derive(Debug, Clone)]
pub struct MusicContext {
    pub envelope: Envelope,
    pub beats: BeatSequence,
    pub duration: f64,
}

impl MusicContext {
    /// Runs the full analysis chain on a track.
    pub fn from_track(track: &AudioTrack) -> Result<Self> {
        let envelope = onset_envelope(track)?;
        let tempo = estimate_tempo(&envelope)?;
        let beats = track_beats(&envelope, &tempo)?;
        Ok(MusicContext {
            envelope,
            beats,
            duration: track.duration(),
        })
    }

    /// Wraps precomputed analysis results.
    pub fn from_parts(envelope: Envelope, beats: BeatSequence, duration: f64) -> Self {
        MusicContext {
            envelope,
            beats,
            duration,
        }
    }

    /// Restricts the context to `[start, end)`, shifting times to be
    /// clip-local.
    pub fn slice(&self, start: f64, end: f64) -> Result<MusicContext> {
        if !(0.0..self.duration).contains(&start) || end <= start {
            return Err(Error::InvalidArgument(format!(
                "bad slice [{start}, {end})"
            )));
        }
        let hop = self.envelope.hop_time;
        let i0 = ((start - self.envelope.t0) / hop).ceil() as usize;
        let i1 = (((end - self.envelope.t0) / hop).floor() as usize).min(self.envelope.len());
        let values = self.envelope.values[i0.min(self.envelope.len())..i1].to_vec();
        let envelope = Envelope::new(values, hop, self.envelope.time(i0) - start)?;

        let dur = end - start;
        let mut times = Vec::new();
        let mut strengths = Vec::new();
        for (t, s) in self.beats.times.iter().zip(&self.beats.strengths) {
            if *t >= start && *t < end && *t - start < dur {
                times.push(*t - start);
                strengths.push(*s);
            }
        }
        let beats = BeatSequence::new(times, strengths, dur)?;
        Ok(MusicContext::from_parts(envelope, beats, dur))
    }
}
