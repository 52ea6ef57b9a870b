//! Synchronization quality metrics and the cross-method comparison table.

use crate::error::{Error, Result};
use crate::media::{AudioTrack, FrameSequence};
use crate::sync::{self, Method, SyncOptions};
use crate::types::BeatSequence;
use serde::Serialize;
use std::collections::BTreeMap;

pub const DEFAULT_SIGMA: f64 = 0.1;

/// Beat alignment diagnostics: `bas` is the mean Gaussian kernel of each
/// visual beat's distance to its nearest music beat.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub bas: f64,
    pub per_beat_nearest: Vec<f64>,
    pub sigma: f64,
}

/// BAS = (1/|Bv|) * sum_i exp(-min_j (t_i^v - t_j^m)^2 / (2 sigma^2)).
pub fn beat_alignment_score(
    visual: &BeatSequence,
    music: &BeatSequence,
    sigma: f64,
) -> Result<AlignmentReport> {
    if visual.is_empty() {
        return Err(Error::InvalidArgument(
            "BAS undefined for empty visual beats".into(),
        ));
    }
    if music.is_empty() {
        return Err(Error::InvalidArgument(
            "BAS undefined for empty music beats".into(),
        ));
    }
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let per_beat_nearest: Vec<f64> = visual
        .times
        .iter()
        .map(|tv| {
            music
                .times
                .iter()
                .map(|tm| (tv - tm).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let bas = per_beat_nearest
        .iter()
        .map(|d| (-d * d / (2.0 * sigma * sigma)).exp())
        .sum::<f64>()
        / per_beat_nearest.len() as f64;
    Ok(AlignmentReport {
        bas,
        per_beat_nearest,
        sigma,
    })
}

/// One clip pair in a comparison corpus.
pub struct CorpusPair {
    pub id: String,
    pub video: FrameSequence,
    pub audio: AudioTrack,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub pair_id: String,
    pub method: String,
    pub bas: Option<f64>,
    pub n_visual_beats: usize,
    pub n_music_beats: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Mean BAS per method over the rows that scored.
    pub means: BTreeMap<String, f64>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_id,method,bas,n_visual_beats,n_music_beats\n");
        for r in &self.rows {
            let bas = match r.bas {
                Some(b) => format!("{b:.6}"),
                None => "error".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.pair_id, r.method, bas, r.n_visual_beats, r.n_music_beats
            ));
        }
        out
    }
}

/// Synchronizes every pair with each method and scores the results.
/// Per-pair failures become flagged rows, not errors.
pub fn compare_methods(
    corpus: &[CorpusPair],
    opts: &SyncOptions,
    phi: f64,
    seed: u64,
) -> Result<ComparisonTable> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let methods = [Method::Ours, Method::Dtw, Method::Unfold];
    let mut rows = Vec::new();
    for pair in corpus {
        let context = crate::audio::MusicContext::from_track(&pair.audio);
        for method in methods {
            let row = match &context {
                Ok(ctx) => {
                    match sync::run_method(&pair.video, ctx, method, phi, seed, opts) {
                        Ok(result) => ComparisonRow {
                            pair_id: pair.id.clone(),
                            method: method.name().to_string(),
                            bas: result.report.bas,
                            n_visual_beats: result.report.n_visual_beats,
                            n_music_beats: result.report.n_music_beats,
                            error: None,
                        },
                        Err(e) => ComparisonRow {
                            pair_id: pair.id.clone(),
                            method: method.name().to_string(),
                            bas: None,
                            n_visual_beats: 0,
                            n_music_beats: 0,
                            error: Some(e.to_string()),
                        },
                    }
                }
                Err(e) => ComparisonRow {
                    pair_id: pair.id.clone(),
                    method: method.name().to_string(),
                    bas: None,
                    n_visual_beats: 0,
                    n_music_beats: 0,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in &rows {
        if let Some(b) = r.bas {
            let e = sums.entry(r.method.clone()).or_insert((0.0, 0));
            e.0 += b;
            e.1 += 1;
        }
    }
    let means = sums
        .into_iter()
        .map(|(m, (s, n))| (m, s / n as f64))
        .collect();
    Ok(ComparisonTable { rows, means })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beats(times: &[f64], total: f64) -> BeatSequence {
        BeatSequence::new(times.to_vec(), vec![1.0; times.len()], total).unwrap()
    }

    #[test]
    fn identical_beats_score_one() {
        let b = beats(&[0.5, 1.0, 1.5], 2.0);
        let r = beat_alignment_score(&b, &b, DEFAULT_SIGMA).unwrap();
        assert_eq!(r.bas, 1.0);
    }

    #[test]
    fn single_offset_matches_formula() {
        let v = beats(&[0.5], 2.0);
        let m = beats(&[0.6], 2.0);
        let r = beat_alignment_score(&v, &m, 0.1).unwrap();
        assert!((r.bas - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn two_beat_mixed_offsets_match_formula() {
        let v = beats(&[0.5, 1.0], 2.0);
        let m = beats(&[0.5, 1.2], 2.0);
        let r = beat_alignment_score(&v, &m, 0.1).unwrap();
        let expected = (1.0 + (-2.0f64).exp()) / 2.0;
        assert!((r.bas - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_visual_is_explicit_error() {
        let v = BeatSequence::empty(1.0);
        let m = beats(&[0.5], 2.0);
        assert!(beat_alignment_score(&v, &m, 0.1).is_err());
        assert!(beat_alignment_score(&m, &v, 0.1).is_err());
    }

    #[test]
    fn music_permutation_invariance() {
        // Same beat set regardless of which music beat is nearest.
        let v = beats(&[0.4, 0.9, 1.6], 2.0);
        let m1 = beats(&[0.5, 1.0, 1.5], 2.0);
        let r1 = beat_alignment_score(&v, &m1, 0.1).unwrap().bas;
        // Adding a far-away music beat changes nothing.
        let m2 = beats(&[0.5, 1.0, 1.5, 1.99], 2.0);
        let r2 = beat_alignment_score(&v, &m2, 0.1).unwrap().bas;
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn shrinking_distances_increases_bas() {
        let m = beats(&[1.0], 4.0);
        let far = beats(&[1.3], 4.0);
        let near = beats(&[1.1], 4.0);
        let b_far = beat_alignment_score(&far, &m, 0.1).unwrap().bas;
        let b_near = beat_alignment_score(&near, &m, 0.1).unwrap().bas;
        assert!(b_near > b_far);
        assert!(b_far > 0.0 && b_near <= 1.0);
    }

    #[test]
    fn csv_shape() {
        let table = ComparisonTable {
            rows: vec![ComparisonRow {
                pair_id: "p0".into(),
                method: "ours".into(),
                bas: Some(0.9),
                n_visual_beats: 3,
                n_music_beats: 5,
                error: None,
            }],
            means: BTreeMap::new(),
        };
        let csv = table.to_csv();
        assert!(csv.starts_with("pair_id,method,bas,n_visual_beats,n_music_beats\n"));
        assert!(csv.contains("p0,ours,0.900000,3,5\n"));
    }
}
