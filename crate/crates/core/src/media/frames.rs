//! Frame-directory format: PNG files plus a JSON manifest
//! `{"fps": number, "frames": [string...], "width": int, "height": int}`.

use super::{Frame, FrameSequence};
use crate::error::{Error, Result};
use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub fps: f64,
    pub frames: Vec<String>,
    pub width: usize,
    pub height: usize,
}

pub fn read_frame_dir(dir: &Path) -> Result<FrameSequence> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;

    let mut frames = Vec::with_capacity(manifest.frames.len());
    for name in &manifest.frames {
        let fpath = dir.join(name);
        let bytes = fs::read(&fpath).map_err(|e| Error::io(&fpath, e))?;
        let img = image::load_from_memory(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", fpath.display())))?;
        if img.width() as usize != manifest.width || img.height() as usize != manifest.height {
            return Err(Error::Format(format!(
                "{}: frame is {}x{}, manifest says {}x{}",
                fpath.display(),
                img.width(),
                img.height(),
                manifest.width,
                manifest.height
            )));
        }
        frames.push(decode_frame(&img));
    }
    FrameSequence::new(frames, manifest.fps, manifest.width, manifest.height)
}

fn decode_frame(img: &DynamicImage) -> Frame {
    match img {
        DynamicImage::ImageLuma8(gray) => {
            Frame::from_luma(gray.pixels().map(|p| p.0[0] as f32 / 255.0).collect())
        }
        _ => {
            let rgb = img.to_rgb8();
            Frame::from_rgb(
                rgb.pixels()
                    .map(|p| {
                        [
                            p.0[0] as f32 / 255.0,
                            p.0[1] as f32 / 255.0,
                            p.0[2] as f32 / 255.0,
                        ]
                    })
                    .collect(),
            )
        }
    }
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_frame_dir(seq: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let name = format!("frame_{i:05}.png");
        let fpath = dir.join(&name);
        let (w, h) = (seq.width as u32, seq.height as u32);
        let result = match &frame.rgb {
            Some(rgb) => {
                let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_fn(w, h, |x, y| {
                    let p = rgb[(y as usize) * seq.width + x as usize];
                    Rgb([quantize(p[0]), quantize(p[1]), quantize(p[2])])
                });
                buf.save(&fpath)
            }
            None => {
                let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(w, h, |x, y| {
                    Luma([quantize(frame.luma[(y as usize) * seq.width + x as usize])])
                });
                buf.save(&fpath)
            }
        };
        result.map_err(|e| Error::Format(format!("{}: {e}", fpath.display())))?;
        names.push(name);
    }
    let manifest = Manifest {
        fps: seq.fps,
        frames: names,
        width: seq.width,
        height: seq.height,
    };
    let mpath = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Format(format!("manifest: {e}")))?;
    fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn patterned(n: usize, w: usize, h: usize, fps: f64) -> FrameSequence {
        let frames = (0..n)
            .map(|k| {
                Frame::from_rgb(
                    (0..w * h)
                        .map(|i| {
                            let v = ((i * 7 + k * 13) % 256) as f32 / 255.0;
                            [v, 1.0 - v, (k as f32 / n as f32)]
                        })
                        .collect(),
                )
            })
            .collect();
        FrameSequence::new(frames, fps, w, h).unwrap()
    }

    #[test]
    fn round_trip_within_quantization() {
        let dir = tempdir().unwrap();
        let seq = patterned(25, 16, 12, 8.0);
        write_frame_dir(&seq, dir.path()).unwrap();
        let back = read_frame_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 25);
        assert_eq!(back.fps, 8.0);
        let mut max_diff = 0.0f32;
        for (a, b) in seq.frames.iter().zip(&back.frames) {
            let (pa, pb) = (a.rgb.as_ref().unwrap(), b.rgb.as_ref().unwrap());
            for (x, y) in pa.iter().zip(pb) {
                for c in 0..3 {
                    max_diff = max_diff.max((x[c] - y[c]).abs());
                }
            }
        }
        assert!(max_diff <= 1.0 / 255.0 + 1e-6, "max diff {max_diff}");
    }

    #[test]
    fn missing_manifest_field_is_config_error() {
        let dir = tempdir().unwrap();
        fs::write(
            dir.path().join("manifest.json"),
            r#"{"fps": 8, "frames": ["a.png"]}"#,
        )
        .unwrap();
        let err = read_frame_dir(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err:?}");
    }

    #[test]
    fn missing_frame_file_is_io_error_naming_it() {
        let dir = tempdir().unwrap();
        fs::write(
            dir.path().join("manifest.json"),
            r#"{"fps": 8, "frames": ["gone.png"], "width": 4, "height": 4}"#,
        )
        .unwrap();
        let err = read_frame_dir(dir.path()).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.to_string_lossy().contains("gone.png")),
            other => panic!("expected Io error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_frame_size_is_format_error() {
        let dir = tempdir().unwrap();
        let seq = patterned(1, 8, 8, 8.0);
        write_frame_dir(&seq, dir.path()).unwrap();
        // Rewrite the manifest claiming a different size.
        fs::write(
            dir.path().join("manifest.json"),
            r#"{"fps": 8, "frames": ["frame_00000.png"], "width": 9, "height": 8}"#,
        )
        .unwrap();
        assert!(matches!(
            read_frame_dir(dir.path()).unwrap_err(),
            Error::Format(_)
        ));
    }

    #[test]
    fn single_frame_dir_is_valid() {
        let dir = tempdir().unwrap();
        write_frame_dir(&patterned(1, 8, 8, 8.0), dir.path()).unwrap();
        let seq = read_frame_dir(dir.path()).unwrap();
        assert_eq!(seq.len(), 1);
    }
}
