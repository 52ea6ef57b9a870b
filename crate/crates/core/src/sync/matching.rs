//! Monotone one-to-one beat matching by dynamic programming.
//!
//! The shorter beat sequence is injected into the longer one. The local
//! cost combines mean-normalized beat strengths with relative beat times;
//! the recurrence accumulates `gamma(i, j) = d(i, j) + min_{j' < j}
//! gamma(i-1, j')`, so both index sequences come out strictly increasing.

use crate::error::{Error, Result};
use crate::types::{BeatSequence, Envelope};

/// Optimal monotone pairing of visual and music beats.
#[derive(Debug, Clone, Default)]
pub struct BeatMatching {
    /// `(visual_index, music_index)` pairs, strictly increasing in both.
    pub pairs: Vec<(usize, usize)>,
    /// True when the music sequence was the shorter side.
    pub swapped: bool,
    /// Total cumulative distance at the optimum.
    pub cost: f64,
}

impl BeatMatching {
    pub fn empty() -> Self {
        BeatMatching::default()
    }
}

/// Strengths rescaled by the envelope's min-max range, then divided by
/// their own mean, matching the normalized-envelope cost definition.
fn normalized_strengths(beats: &BeatSequence, env: &Envelope) -> Vec<f64> {
    let (min, max) = (env.min_value(), env.max_value());
    let span = max - min;
    let scaled: Vec<f64> = beats
        .strengths
        .iter()
        .map(|s| if span > 0.0 { (s - min).clamp(0.0, span) / span } else { 0.0 })
        .collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len().max(1) as f64;
    let mean = mean.max(1e-12);
    scaled.iter().map(|s| s / mean).collect()
}

pub fn match_beats(
    visual: &BeatSequence,
    music: &BeatSequence,
    u_v: &Envelope,
    u_m: &Envelope,
) -> Result<BeatMatching> {
    if visual.is_empty() || music.is_empty() {
        return Err(Error::InvalidArgument(
            "beat matching needs nonempty beat sequences".into(),
        ));
    }
    let vs = normalized_strengths(visual, u_v);
    let ms = normalized_strengths(music, u_m);
    let v_rel: Vec<f64> = visual
        .times
        .iter()
        .map(|t| t / visual.total_duration)
        .collect();
    let m_rel: Vec<f64> = music
        .times
        .iter()
        .map(|t| t / music.total_duration)
        .collect();

    let swapped = music.len() < visual.len();
    let (short_s, short_t, long_s, long_t) = if swapped {
        (&ms, &m_rel, &vs, &v_rel)
    } else {
        (&vs, &v_rel, &ms, &m_rel)
    };

    let (short_len, long_len) = (short_s.len(), long_s.len());
    let d = |i: usize, j: usize| -> f64 {
        (long_s[j] - short_s[i]).abs() + (long_t[j] - short_t[i]).abs()
    };

    const INF: f64 = f64::INFINITY;
    let mut gamma = vec![INF; short_len * long_len];
    let mut ptr = vec![usize::MAX; short_len * long_len];
    for j in 0..=long_len - short_len {
        gamma[j] = d(0, j);
    }
    for i in 1..short_len {
        let mut run_min = INF;
        let mut run_idx = usize::MAX;
        // j must leave room for the remaining short beats.
        for j in i..=long_len - short_len + i {
            let cand = gamma[(i - 1) * long_len + (j - 1)];
            if cand < run_min {
                run_min = cand;
                run_idx = j - 1;
            }
            if run_min < INF {
                gamma[i * long_len + j] = d(i, j) + run_min;
                ptr[i * long_len + j] = run_idx;
            }
        }
    }

    let last_row = &gamma[(short_len - 1) * long_len..];
    let mut best_j = short_len - 1;
    for j in short_len - 1..long_len {
        if last_row[j] < last_row[best_j] {
            best_j = j;
        }
    }
    let cost = last_row[best_j];

    let mut long_idx = vec![0usize; short_len];
    let mut j = best_j;
    for i in (0..short_len).rev() {
        long_idx[i] = j;
        if i > 0 {
            j = ptr[i * long_len + j];
        }
    }

    let pairs = long_idx
        .iter()
        .enumerate()
        .map(|(i, &j)| if swapped { (j, i) } else { (i, j) })
        .collect();
    Ok(BeatMatching {
        pairs,
        swapped,
        cost,
    })
}
