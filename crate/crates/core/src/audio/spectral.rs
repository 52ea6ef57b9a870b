//! STFT and mel-spectrogram support for the onset envelope.

use rustfft::{num_complex::Complex, FftPlanner};

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f32::consts::TAU * i as f32 / n as f32).cos())
        .collect()
}

/// Center-padded power spectrogram: one row per analysis frame,
/// `win/2 + 1` bins per row.
pub fn power_spectrogram(samples: &[f32], win: usize, hop: usize) -> Vec<Vec<f32>> {
    let half = win / 2;
    // Reflect-pad so frame t is centered on sample t * hop.
    let mut padded = Vec::with_capacity(samples.len() + win);
    for i in (1..=half).rev() {
        padded.push(*samples.get(i).unwrap_or(&0.0));
    }
    padded.extend_from_slice(samples);
    for i in (0..half).map(|i| samples.len().saturating_sub(2 + i)) {
        padded.push(*samples.get(i).unwrap_or(&0.0));
    }

    let window = hann(win);
    let mut planner = FftPlanner::<f32>::new();
    let fft = planner.plan_fft_forward(win);
    let n_frames = samples.len() / hop + 1;
    let n_bins = half + 1;

    let mut rows = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0f32, 0.0); win];
    for t in 0..n_frames {
        let start = t * hop;
        for i in 0..win {
            let s = *padded.get(start + i).unwrap_or(&0.0);
            buf[i] = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        rows.push(buf[..n_bins].iter().map(|c| c.norm_sqr()).collect());
    }
    rows
}

fn hz_to_mel(f: f32) -> f32 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f32) -> f32 {
    700.0 * (10f32.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank (unit-area normalized), `n_mels x n_bins`.
pub fn mel_filterbank(n_mels: usize, n_bins: usize, sample_rate: f32, win: usize) -> Vec<Vec<f32>> {
    let f_max = sample_rate / 2.0;
    let mel_max = hz_to_mel(f_max);
    let mel_points: Vec<f32> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f32 / (n_mels + 1) as f32))
        .collect();
    let bin_hz: Vec<f32> = (0..n_bins)
        .map(|k| k as f32 * sample_rate / win as f32)
        .collect();

    let mut filters = Vec::with_capacity(n_mels);
    for m in 0..n_mels {
        let (lo, center, hi) = (mel_points[m], mel_points[m + 1], mel_points[m + 2]);
        let norm = 2.0 / (hi - lo);
        let row = bin_hz
            .iter()
            .map(|&f| {
                let up = (f - lo) / (center - lo).max(1e-9);
                let down = (hi - f) / (hi - center).max(1e-9);
                norm * up.min(down).max(0.0)
            })
            .collect();
        filters.push(row);
    }
    filters
}

/// Log-magnitude mel spectrogram in dB, `n_frames x n_mels`.
pub fn log_mel_spectrogram(
    samples: &[f32],
    sample_rate: f32,
    win: usize,
    hop: usize,
    n_mels: usize,
) -> Vec<Vec<f32>> {
    let power = power_spectrogram(samples, win, hop);
    let n_bins = win / 2 + 1;
    let filters = mel_filterbank(n_mels, n_bins, sample_rate, win);
    power
        .iter()
        .map(|row| {
            filters
                .iter()
                .map(|filt| {
                    let p: f32 = filt.iter().zip(row).map(|(w, x)| w * x).sum();
                    10.0 * p.max(1e-10).log10()
                })
                .collect()
        })
        .collect()
}
