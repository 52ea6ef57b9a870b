//! YUV4MPEG2 stream support. Mono (Cmono) and 4:2:0 layouts are accepted;
//! only the Y plane is decoded. Writing uses full-range luma so that a
//! write/read round trip preserves pixel values.

use super::{Frame, FrameSequence};
use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

struct Header {
    width: usize,
    height: usize,
    fps: f64,
    chroma_div: Option<usize>, // plane size divisor for each chroma plane
}

fn parse_header(line: &str, path: &Path) -> Result<Header> {
    let mut tokens = line.split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::Format(format!(
            "{}: missing YUV4MPEG2 signature",
            path.display()
        )));
    }
    let (mut width, mut height, mut fps) = (None, None, None);
    let mut chroma = "420".to_string();
    for tok in tokens {
        let Some(tag) = tok.chars().next() else { continue };
        let val = &tok[1..];
        match tag {
            'W' => width = val.parse::<usize>().ok(),
            'H' => height = val.parse::<usize>().ok(),
            'F' => {
                let mut parts = val.splitn(2, ':');
                let num: f64 = parts.and_parse(path)?;
                let den: f64 = parts.and_parse(path)?;
                if den <= 0.0 {
                    return Err(Error::Format(format!("{}: bad frame rate", path.display())));
                }
                fps = Some(num / den);
            }
            'C' => chroma = val.to_string(),
            _ => {} // interlacing, aspect, extensions: ignored
        }
    }
    let width = width.ok_or_else(|| Error::Format(format!("{}: missing W", path.display())))?;
    let height = height.ok_or_else(|| Error::Format(format!("{}: missing H", path.display())))?;
    let fps = fps.ok_or_else(|| Error::Format(format!("{}: missing F", path.display())))?;
    let chroma_div = if chroma == "mono" {
        None
    } else if chroma.starts_with("420") {
        Some(4)
    } else {
        return Err(Error::Unsupported(format!(
            "{}: chroma mode C{chroma} (420 or mono only)",
            path.display()
        )));
    };
    Ok(Header {
        width,
        height,
        fps,
        chroma_div,
    })
}

trait AndParse {
    fn and_parse(&mut self, path: &Path) -> Result<f64>;
}

impl<'a, I: Iterator<Item = &'a str>> AndParse for I {
    fn and_parse(&mut self, path: &Path) -> Result<f64> {
        self.next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{}: bad frame rate field", path.display())))
    }
}

pub fn read_y4m(path: &Path) -> Result<FrameSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format(format!("{}: missing header line", path.display())))?;
    let header_line = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::Format(format!("{}: header is not UTF-8", path.display())))?;
    let hdr = parse_header(header_line, path)?;

    let y_size = hdr.width * hdr.height;
    let chroma_size = hdr.chroma_div.map_or(0, |d| y_size.div_ceil(d) * 2);
    let mut frames = Vec::new();
    let mut pos = nl + 1;
    while pos < bytes.len() {
        let line_end = bytes[pos..]
            .iter()
            .position(|b| *b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| Error::Format(format!("{}: truncated FRAME marker", path.display())))?;
        if !bytes[pos..line_end].starts_with(b"FRAME") {
            return Err(Error::Format(format!(
                "{}: expected FRAME marker at byte {pos}",
                path.display()
            )));
        }
        let data_start = line_end + 1;
        let data_end = data_start + y_size + chroma_size;
        if data_end > bytes.len() {
            return Err(Error::Format(format!(
                "{}: truncated frame payload",
                path.display()
            )));
        }
        let luma = bytes[data_start..data_start + y_size]
            .iter()
            .map(|b| *b as f32 / 255.0)
            .collect();
        frames.push(Frame::from_luma(luma));
        pos = data_end;
    }
    FrameSequence::new(frames, hdr.fps, hdr.width, hdr.height)
}

fn fps_rational(fps: f64) -> (u32, u32) {
    if fps.fract() == 0.0 {
        return (fps as u32, 1);
    }
    let num = (fps * 1000.0).round() as u32;
    let g = gcd(num, 1000);
    (num / g, 1000 / g)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn write_y4m(seq: &FrameSequence, path: &Path) -> Result<()> {
    let (num, den) = fps_rational(seq.fps);
    let color = seq.frames.iter().any(|f| f.rgb.is_some());
    let chroma = if color { "420jpeg" } else { "mono" };
    let (w, h) = (seq.width, seq.height);
    let mut out = Vec::new();
    out.extend_from_slice(
        format!("YUV4MPEG2 W{w} H{h} F{num}:{den} Ip A1:1 C{chroma}\n").as_bytes(),
    );
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    for frame in &seq.frames {
        out.extend_from_slice(b"FRAME\n");
        for v in &frame.luma {
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
        if color {
            let mut cb = vec![128u8; cw * ch];
            let mut cr = vec![128u8; cw * ch];
            if let Some(rgb) = &frame.rgb {
                for cy in 0..ch {
                    for cx in 0..cw {
                        // Average the up-to-2x2 block for 4:2:0 subsampling.
                        let (mut r, mut g, mut b, mut n) = (0.0, 0.0, 0.0, 0.0);
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let (x, y) = (cx * 2 + dx, cy * 2 + dy);
                                if x < w && y < h {
                                    let p = rgb[y * w + x];
                                    r += p[0];
                                    g += p[1];
                                    b += p[2];
                                    n += 1.0;
                                }
                            }
                        }
                        let (r, g, b) = (r / n, g / n, b / n);
                        // BT.601 full-range chroma.
                        let cbv = 128.0 - 37.797 * r - 74.203 * g + 112.0 * b;
                        let crv = 128.0 + 112.0 * r - 93.786 * g - 18.214 * b;
                        cb[cy * cw + cx] = cbv.round().clamp(0.0, 255.0) as u8;
                        cr[cy * cw + cx] = crv.round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
            out.extend_from_slice(&cb);
            out.extend_from_slice(&cr);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn mono_round_trip_is_exact_within_quantization() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("clip.y4m");
        let frames: Vec<Frame> = (0..5)
            .map(|k| {
                Frame::from_luma((0..64).map(|i| ((i + k * 11) % 256) as f32 / 255.0).collect())
            })
            .collect();
        let seq = FrameSequence::new(frames, 8.0, 8, 8).unwrap();
        write_y4m(&seq, &p).unwrap();
        let back = read_y4m(&p).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back.fps, 8.0);
        for (a, b) in seq.frames.iter().zip(&back.frames) {
            for (x, y) in a.luma.iter().zip(&b.luma) {
                assert!((x - y).abs() <= 1.0 / 255.0 + 1e-6);
            }
        }
    }

    #[test]
    fn color_write_keeps_luma_on_read() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("color.y4m");
        let rgb: Vec<[f32; 3]> = (0..36).map(|i| [i as f32 / 36.0, 0.5, 0.2]).collect();
        let seq = FrameSequence::new(vec![Frame::from_rgb(rgb)], 24.0, 6, 6).unwrap();
        write_y4m(&seq, &p).unwrap();
        let back = read_y4m(&p).unwrap();
        assert!(back.frames[0].rgb.is_none());
        for (x, y) in seq.frames[0].luma.iter().zip(&back.frames[0].luma) {
            assert!((x - y).abs() <= 1.0 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn fractional_fps_survives() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ntsc.y4m");
        let seq =
            FrameSequence::new(vec![Frame::from_luma(vec![0.5; 4])], 23.976, 2, 2).unwrap();
        write_y4m(&seq, &p).unwrap();
        let back = read_y4m(&p).unwrap();
        assert!((back.fps - 23.976).abs() < 1e-3);
    }

    #[test]
    fn garbage_is_format_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.y4m");
        fs::write(&p, b"MPEG4YUV nope\nFRAME\n").unwrap();
        assert!(matches!(read_y4m(&p).unwrap_err(), Error::Format(_)));
    }
}
