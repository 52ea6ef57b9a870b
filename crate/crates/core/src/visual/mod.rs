//! Visual rhythm extraction: directogram, bin-wise deceleration, impact
//! envelope, and discrete visual beats.

mod flow;

pub use flow::{optical_flow, FlowField};

use crate::error::{Error, Result};
use crate::media::FrameSequence;
use crate::types::{BeatSequence, Envelope};
use std::f64::consts::TAU;

pub const DEFAULT_N_BINS: usize = 12;
/// Half-width of the visual-beat picking window, seconds.
const BEAT_WINDOW_HALF: f64 = 0.0625;
/// A beat must exceed its local mean by this fraction of the global max.
const BEAT_MARGIN: f64 = 0.10;

/// Per-frame histogram of flow magnitude over flow direction.
///
/// Row `i` holds the binned flow into frame `i`; row 0 is all zero since
/// frame 0 has no predecessor. The inclusive indicator `|theta - phi| <=
/// 2*pi/n_bins` with bin spacing `2*pi/n_bins` overlaps neighboring bins:
/// a generic direction lands in exactly 2 bins, a direction exactly on a
/// bin center in 3. The normalization in beat matching cancels the
/// multiplicity.
#[derive(Debug, Clone)]
pub struct Directogram {
    values: Vec<f64>,
    pub n_bins: usize,
    pub n_frames: usize,
}

impl Directogram {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }
}

/// Temporal difference of the directogram; row 0 is all zero.
#[derive(Debug, Clone)]
pub struct FluxMatrix {
    values: Vec<f64>,
    pub n_bins: usize,
    pub n_frames: usize,
}

impl FluxMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_bins..(i + 1) * self.n_bins]
    }
}

/// Bins each flow field by direction. `flows[k]` describes the motion into
/// frame `k + 1`, so the output has `flows.len() + 1` rows.
pub fn directogram(flows: &[FlowField], n_bins: usize) -> Result<Directogram> {
    if n_bins < 4 || n_bins % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "n_bins must be even and >= 4, got {n_bins}"
        )));
    }
    let n_frames = flows.len() + 1;
    let mut values = vec![0.0f64; n_frames * n_bins];
    let bin_width = TAU / n_bins as f64;
    for (k, field) in flows.iter().enumerate() {
        let row = &mut values[(k + 1) * n_bins..(k + 2) * n_bins];
        for i in 0..field.u.len() {
            let mag = field.magnitude(i);
            if mag == 0.0 {
                continue;
            }
            let phi = (field.v[i] as f64).atan2(field.u[i] as f64);
            for (b, slot) in row.iter_mut().enumerate() {
                let theta = b as f64 * bin_width;
                let mut d = (theta - phi).abs() % TAU;
                if d > TAU / 2.0 {
                    d = TAU - d;
                }
                if d <= bin_width {
                    *slot += mag;
                }
            }
        }
    }
    Ok(Directogram {
        values,
        n_bins,
        n_frames,
    })
}

/// Bin-wise deceleration: `D_F(i,k) = D(i,k) - D(i-1,k)`.
pub fn flux_matrix(d: &Directogram) -> FluxMatrix {
    let mut values = vec![0.0f64; d.values.len()];
    for i in 1..d.n_frames {
        for k in 0..d.n_bins {
            values[i * d.n_bins + k] = d.row(i)[k] - d.row(i - 1)[k];
        }
    }
    FluxMatrix {
        values,
        n_bins: d.n_bins,
        n_frames: d.n_frames,
    }
}

/// Visual impact envelope: positive flux summed over bins via
/// `(D_F + |D_F|)/2`, one sample per frame, then min-max normalized
/// to [0, 1]. A flat envelope maps to all zeros.
pub fn impact_envelope(d: &Directogram, fps: f64) -> Result<Envelope> {
    if d.n_frames < 2 {
        return Err(Error::InvalidArgument(
            "impact envelope needs at least 2 frames".into(),
        ));
    }
    if fps <= 0.0 {
        return Err(Error::InvalidArgument("fps must be positive".into()));
    }
    let flux = flux_matrix(d);
    let values: Vec<f64> = (0..d.n_frames)
        .map(|i| flux.row(i).iter().map(|x| (x + x.abs()) / 2.0).sum())
        .collect();
    let raw = Envelope::new(values, 1.0 / fps, 0.0)?;
    Ok(raw.normalized())
}

/// Picks local maxima of the impact envelope within +-0.0625 s windows
/// that exceed the window mean by at least 10% of the global maximum.
/// The window never shrinks below one envelope sample per side; ties go
/// to the earlier sample.
pub fn detect_visual_beats(env: &Envelope, total_duration: f64) -> BeatSequence {
    let n = env.len();
    let gmax = env.max_value();
    if n == 0 || gmax <= 0.0 {
        return BeatSequence::empty(total_duration);
    }
    let half = ((BEAT_WINDOW_HALF / env.hop_time).round() as usize).max(1);

    let mut times = Vec::new();
    let mut strengths = Vec::new();
    for i in 0..n {
        let v = env.values[i];
        if v <= 0.0 {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let mut is_peak = true;
        let mut sum = 0.0;
        for j in lo..=hi {
            sum += env.values[j];
            if j < i && env.values[j] > v {
                is_peak = false;
            }
            if j > i && env.values[j] >= v {
                is_peak = false;
            }
        }
        let local_mean = sum / (hi - lo + 1) as f64;
        if is_peak && v >= local_mean + BEAT_MARGIN * gmax {
            let t = env.time(i);
            if t < total_duration {
                times.push(t);
                strengths.push(v);
            }
        }
    }
    BeatSequence {
        times,
        strengths,
        total_duration,
    }
}

/// Visual rhythm of a clip: impact envelope plus detected beats.
pub fn visual_context(seq: &FrameSequence, n_bins: usize) -> Result<(Envelope, BeatSequence)> {
    let flows = optical_flow(seq)?;
    let d = directogram(&flows, n_bins)?;
    let env = impact_envelope(&d, seq.fps)?;
    let beats = detect_visual_beats(&env, seq.duration());
    Ok((env, beats))
}
