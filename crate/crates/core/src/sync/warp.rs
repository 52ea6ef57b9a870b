//! Envelope-induced temporal warping.
//!
//! Within each inter-anchor segment the target times equalize the envelope
//! impulse `I_k = (G(t_{k+1}) - G(t_k)) * (u(k) + u(k+1) + eps) / 2`
//! between consecutive frames, which in closed form distributes the target
//! span proportionally to `w_k = 1 / (u(k) + u(k+1) + eps)`. Frames around
//! strong envelope values therefore play faster.

use crate::error::{Error, Result};
use crate::sync::matching::BeatMatching;
use crate::types::{BeatSequence, Envelope};

/// Floor added to envelope sums so all-zero stretches stay strictly
/// monotone.
pub const ENVELOPE_EPS: f64 = 1e-6;

/// Piecewise-linear map from source time to synchronized time, sampled at
/// the map knots. For the primary method and DTW the knots are the source
/// frames; for the unfolding baseline they are walk anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpMap {
    pub source_times: Vec<f64>,
    pub target_times: Vec<f64>,
    /// `(T_v, T_m)`: source clip duration and synchronized duration.
    pub clip_durations: (f64, f64),
}

/// Anchor list plus any pairs dropped for breaking monotonicity.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    /// `(source_time, target_time)`, strictly increasing in both.
    pub anchors: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Builds the anchor set `{(0,0), (T_v, T_m)} U {(t_v'_i, t_m'_i)}`.
/// Matched pairs that would collide with the clip boundaries (or an
/// earlier anchor) are dropped with a warning rather than clamped.
pub fn beat_anchor_times(
    matching: &BeatMatching,
    visual: &BeatSequence,
    music: &BeatSequence,
) -> AnchorSet {
    let t_v = visual.total_duration;
    let t_m = music.total_duration;
    let mut anchors = vec![(0.0, 0.0)];
    let mut warnings = Vec::new();
    for &(vi, mi) in &matching.pairs {
        let s = visual.times[vi];
        let g = music.times[mi];
        let last = anchors.last().unwrap();
        if s > last.0 && g > last.1 && s < t_v && g < t_m {
            anchors.push((s, g));
        } else {
            warnings.push(format!(
                "dropped anchor ({s:.6} -> {g:.6}): breaks monotonicity against boundaries"
            ));
        }
    }
    anchors.push((t_v, t_m));
    AnchorSet { anchors, warnings }
}

/// Solves the impulse-equalizing warp. The envelope must supply one value
/// per source frame (`hop_time = 1/fps`); anchors must start at `(0, 0)`,
/// increase strictly in source time, and not decrease in target time.
pub fn solve_warp(anchors: &[(f64, f64)], env: &Envelope, fps: f64) -> Result<(WarpMap, Vec<String>)> {
    if anchors.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 anchors".into()));
    }
    if anchors[0] != (0.0, 0.0) {
        return Err(Error::InvalidArgument("first anchor must be (0, 0)".into()));
    }
    for w in anchors.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidArgument(
                "anchor source times must be strictly increasing".into(),
            ));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidArgument(
                "anchor target times must be nondecreasing".into(),
            ));
        }
    }
    let n_frames = env.len();
    if n_frames == 0 {
        return Err(Error::InvalidArgument("empty envelope".into()));
    }
    let hop = env.hop_time;
    let frame_time = |k: usize| env.t0 + k as f64 * hop;
    let t_last = frame_time(n_frames - 1);
    let (t_v, t_m) = *anchors.last().unwrap();
    if t_last >= t_v + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "anchors end at {t_v} but frames extend to {t_last}"
        )));
    }

    let snap = hop * 1e-6;
    let mut target = vec![f64::NAN; n_frames];
    let mut warnings = Vec::new();

    for seg in anchors.windows(2) {
        let (s0, g0) = seg[0];
        let (s1, g1) = seg[1];
        // Frames inside (s0, s1), excluding ones that sit on an anchor.
        let k_from = ((s0 - env.t0) / hop).ceil() as usize;
        let mut interior = Vec::new();
        for k in k_from.min(n_frames)..n_frames {
            let t = frame_time(k);
            if t >= s1 - snap {
                break;
            }
            if (t - s0).abs() <= snap {
                target[k] = g0; // anchor frame: exact assignment
            } else if t > s0 {
                interior.push(k);
            }
        }

        let span = g1 - g0;
        if span <= 0.0 {
            for &k in &interior {
                target[k] = g0;
            }
            warnings.push(format!(
                "zero-span segment [{s0:.6}, {s1:.6}]: frames collapse to {g0:.6}"
            ));
            continue;
        }

        // Interval weights w = 1 / (u(left) + u(right) + eps) over the
        // points s0, interior frames, s1.
        let mut points = Vec::with_capacity(interior.len() + 2);
        points.push(s0);
        points.extend(interior.iter().map(|&k| frame_time(k)));
        points.push(s1);
        let weights: Vec<f64> = points
            .windows(2)
            .map(|p| 1.0 / (env.value_at(p[0]) + env.value_at(p[1]) + ENVELOPE_EPS))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut g = g0;
        for (idx, &k) in interior.iter().enumerate() {
            g += span * weights[idx] / total;
            target[k] = g;
        }
    }

    // The first anchor is (0, 0), so frame 0 is always assigned; any frame
    // at or beyond the last anchor would have been rejected above.
    debug_assert!(target.iter().all(|t| t.is_finite()));

    let source_times = (0..n_frames).map(frame_time).collect();
    Ok((
        WarpMap {
            source_times,
            target_times: target,
            clip_durations: (t_v, t_m),
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_of(values: Vec<f64>, fps: f64) -> Envelope {
        Envelope::new(values, 1.0 / fps, 0.0).unwrap()
    }

    #[test]
    fn anchors_from_empty_matching_are_boundaries() {
        let v = BeatSequence::empty(3.125);
        let m = BeatSequence::empty(5.3);
        let set = beat_anchor_times(&BeatMatching::empty(), &v, &m);
        assert_eq!(set.anchors, vec![(0.0, 0.0), (3.125, 5.3)]);
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn single_pair_anchor_arithmetic() {
        let v = BeatSequence::new(vec![1.0], vec![1.0], 3.125).unwrap();
        let m = BeatSequence::new(vec![2.0], vec![1.0], 5.3).unwrap();
        let matching = BeatMatching {
            pairs: vec![(0, 0)],
            swapped: false,
            cost: 0.0,
        };
        let set = beat_anchor_times(&matching, &v, &m);
        assert_eq!(set.anchors, vec![(0.0, 0.0), (1.0, 2.0), (3.125, 5.3)]);
    }

    #[test]
    fn boundary_violating_pair_is_dropped_with_warning() {
        // Music beat at time 0 collides with the (0, 0) pseudo-anchor.
        let v = BeatSequence::new(vec![1.0], vec![1.0], 3.125).unwrap();
        let m = BeatSequence::new(vec![0.0], vec![1.0], 5.3).unwrap();
        let matching = BeatMatching {
            pairs: vec![(0, 0)],
            swapped: false,
            cost: 0.0,
        };
        let set = beat_anchor_times(&matching, &v, &m);
        assert_eq!(set.anchors, vec![(0.0, 0.0), (3.125, 5.3)]);
        assert_eq!(set.warnings.len(), 1);
    }

    #[test]
    fn uniform_envelope_gives_linear_retiming() {
        let env = env_of(vec![0.7; 8], 8.0);
        let anchors = [(0.0, 0.0), (1.0, 2.5)];
        let (warp, _) = solve_warp(&anchors, &env, 8.0).unwrap();
        // Equal increments across the segment.
        let deltas: Vec<f64> = warp.target_times.windows(2).map(|w| w[1] - w[0]).collect();
        for d in &deltas {
            assert!((d - deltas[0]).abs() < 1e-12);
        }
        assert_eq!(warp.target_times[0], 0.0);
    }

    #[test]
    fn high_envelope_middle_plays_faster() {
        // u = [0, 1, 1, 0] over 4 frames, one segment spanning 3 s.
        // Weights: 1/(1+e), 1/(2+e), 1/(1+e); the middle interval is ~2x
        // faster than the outer ones.
        let env = env_of(vec![0.0, 1.0, 1.0, 0.0], 1.0);
        let anchors = [(0.0, 0.0), (4.0, 4.0)];
        let (warp, _) = solve_warp(&anchors, &env, 1.0).unwrap();
        let d0 = warp.target_times[1] - warp.target_times[0];
        let d1 = warp.target_times[2] - warp.target_times[1];
        let d2 = warp.target_times[3] - warp.target_times[2];
        assert!((d0 / d1 - 2.0).abs() < 1e-5, "d0/d1 = {}", d0 / d1);
        assert!((d2 / d1 - 2.0).abs() < 1e-5);
        // Interval span proportions against the closed form over the
        // first 3 intervals plus the tail to the virtual end point.
        let w = [1.0 / (1.0 + ENVELOPE_EPS), 1.0 / (2.0 + ENVELOPE_EPS), 1.0 / (1.0 + ENVELOPE_EPS)];
        let tail = 1.0 / (0.0 + 0.0 + ENVELOPE_EPS);
        let total: f64 = w.iter().sum::<f64>() + tail;
        assert!((d0 - 4.0 * w[0] / total).abs() < 1e-12);
    }

    #[test]
    fn anchor_frames_map_exactly() {
        let env = env_of(vec![0.3, 0.9, 0.1, 0.5, 0.2, 0.0, 0.4, 0.8], 8.0);
        // Beat frame at t = 3/8 anchored to 0.77 s.
        let anchors = [(0.0, 0.0), (3.0 / 8.0, 0.77), (1.0, 2.0)];
        let (warp, _) = solve_warp(&anchors, &env, 8.0).unwrap();
        assert_eq!(warp.target_times[3], 0.77);
        assert_eq!(warp.target_times[0], 0.0);
        assert!(warp.target_times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn all_zero_envelope_stays_strictly_monotone() {
        let env = env_of(vec![0.0; 16], 8.0);
        let anchors = [(0.0, 0.0), (2.0, 1.0)];
        let (warp, _) = solve_warp(&anchors, &env, 8.0).unwrap();
        assert!(warp.target_times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn impulse_equality_holds_within_segments() {
        let env = env_of(vec![0.1, 0.9, 0.3, 0.0, 0.7, 0.2, 0.5, 0.6], 8.0);
        let anchors = [(0.0, 0.0), (4.0 / 8.0, 1.3), (1.0, 2.0)];
        let (warp, _) = solve_warp(&anchors, &env, 8.0).unwrap();
        // Check I_k constant over the interior intervals of segment one.
        let impulses: Vec<f64> = (0..3)
            .map(|k| {
                let dg = warp.target_times[k + 1] - warp.target_times[k];
                dg * (env.values[k] + env.values[k + 1] + ENVELOPE_EPS) / 2.0
            })
            .collect();
        let max_i = impulses.iter().cloned().fold(0.0, f64::max);
        for w in impulses.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-9 * max_i);
        }
    }

    #[test]
    fn time_scale_equivariance_by_two() {
        let values = vec![0.2, 0.8, 0.0, 0.5, 0.9, 0.1];
        let env1 = env_of(values.clone(), 8.0);
        let env2 = Envelope::new(values, 2.0 / 8.0, 0.0).unwrap();
        let anchors1 = [(0.0, 0.0), (2.0 / 8.0, 0.4), (6.0 / 8.0, 1.5)];
        let anchors2: Vec<(f64, f64)> =
            anchors1.iter().map(|(s, g)| (2.0 * s, 2.0 * g)).collect();
        let (w1, _) = solve_warp(&anchors1, &env1, 8.0).unwrap();
        let (w2, _) = solve_warp(&anchors2, &env2, 4.0).unwrap();
        for (a, b) in w1.target_times.iter().zip(&w2.target_times) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn bad_anchor_orders_are_rejected() {
        let env = env_of(vec![0.0; 4], 8.0);
        assert!(solve_warp(&[(0.0, 0.0)], &env, 8.0).is_err());
        assert!(solve_warp(&[(0.1, 0.0), (0.5, 1.0)], &env, 8.0).is_err());
        assert!(solve_warp(&[(0.0, 0.0), (0.0, 1.0)], &env, 8.0).is_err());
        assert!(solve_warp(&[(0.0, 0.0), (0.5, 1.0), (0.4, 2.0)], &env, 8.0).is_err());
    }
}
