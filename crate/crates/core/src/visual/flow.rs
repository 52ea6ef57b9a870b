//! Dense two-frame optical flow via polynomial expansion (Farneback).
//!
//! Fixed parameters: 3 pyramid levels at scale 0.5, 15x15 aggregation
//! window, 3 iterations per level, 5-tap expansion with sigma 1.1.

use crate::error::{Error, Result};
use crate::media::FrameSequence;

const PYR_LEVELS: usize = 3;
const WIN_SIZE: usize = 15;
const ITERATIONS: usize = 3;
const POLY_N: usize = 5;
const POLY_SIGMA: f64 = 1.1;

/// Per-pixel displacement between one consecutive frame pair,
/// in pixels per frame.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub u: Vec<f32>,
    pub v: Vec<f32>,
    pub width: usize,
    pub height: usize,
}

impl FlowField {
    pub fn magnitude(&self, i: usize) -> f64 {
        (self.u[i] as f64).hypot(self.v[i] as f64)
    }
}

#[derive(Clone)]
struct Gray {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Gray {
    fn at(&self, x: i64, y: i64) -> f32 {
        let xc = x.clamp(0, self.w as i64 - 1) as usize;
        let yc = y.clamp(0, self.h as i64 - 1) as usize;
        self.data[yc * self.w + xc]
    }
}

/// One flow field for each consecutive pair of frames.
pub fn optical_flow(seq: &FrameSequence) -> Result<Vec<FlowField>> {
    if seq.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 frames for optical flow, got {}",
            seq.len()
        )));
    }
    let grays: Vec<Gray> = seq
        .frames
        .iter()
        .map(|f| Gray {
            w: seq.width,
            h: seq.height,
            data: f.luma.clone(),
        })
        .collect();
    let mut fields = Vec::with_capacity(grays.len() - 1);
    for pair in grays.windows(2) {
        fields.push(flow_pair(&pair[0], &pair[1]));
    }
    Ok(fields)
}

fn flow_pair(a: &Gray, b: &Gray) -> FlowField {
    // Pyramids, coarsest last; never descend below 8 px on a side.
    let mut pyr_a = vec![a.clone()];
    let mut pyr_b = vec![b.clone()];
    for _ in 1..PYR_LEVELS {
        let pa = pyr_a.last().unwrap();
        if pa.w / 2 < 8 || pa.h / 2 < 8 {
            break;
        }
        pyr_a.push(downsample(pa));
        pyr_b.push(downsample(pyr_b.last().unwrap()));
    }

    let coarsest = pyr_a.len() - 1;
    let mut flow_u = vec![0.0f32; pyr_a[coarsest].w * pyr_a[coarsest].h];
    let mut flow_v = vec![0.0f32; flow_u.len()];
    for level in (0..=coarsest).rev() {
        let (ga, gb) = (&pyr_a[level], &pyr_b[level]);
        let ra = poly_expand(ga);
        let rb = poly_expand(gb);
        for _ in 0..ITERATIONS {
            update_flow(ga.w, ga.h, &ra, &rb, &mut flow_u, &mut flow_v);
        }
        if level > 0 {
            let (nw, nh) = (pyr_a[level - 1].w, pyr_a[level - 1].h);
            flow_u = upsample2x(&flow_u, ga.w, ga.h, nw, nh);
            flow_v = upsample2x(&flow_v, ga.w, ga.h, nw, nh);
        }
    }
    FlowField {
        u: flow_u,
        v: flow_v,
        width: a.w,
        height: a.h,
    }
}

/// Binomial blur + decimation by 2.
fn downsample(img: &Gray) -> Gray {
    const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (w, h) = (img.w, img.h);
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, k) in K.iter().enumerate() {
                acc += k * img.at(x as i64 + j as i64 - 2, y as i64);
            }
            tmp[y * w + x] = acc;
        }
    }
    let blurred = Gray { w, h, data: tmp };
    let (nw, nh) = (w / 2, h / 2);
    let mut out = vec![0.0f32; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            let mut acc = 0.0;
            for (j, k) in K.iter().enumerate() {
                acc += k * blurred.at(x as i64 * 2, y as i64 * 2 + j as i64 - 2);
            }
            out[y * nw + x] = acc;
        }
    }
    Gray {
        w: nw,
        h: nh,
        data: out,
    }
}

/// Bilinear upsample of a flow component, doubling the displacement scale.
fn upsample2x(src: &[f32], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; dw * dh];
    for y in 0..dh {
        for x in 0..dw {
            let fx = (x as f32 / 2.0).min(sw as f32 - 1.0);
            let fy = (y as f32 / 2.0).min(sh as f32 - 1.0);
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
            let (ax, ay) = (fx - x0 as f32, fy - y0 as f32);
            let top = src[y0 * sw + x0] * (1.0 - ax) + src[y0 * sw + x1] * ax;
            let bot = src[y1 * sw + x0] * (1.0 - ax) + src[y1 * sw + x1] * ax;
            out[y * dw + x] = 2.0 * (top * (1.0 - ay) + bot * ay);
        }
    }
    out
}

/// Per-pixel quadratic fit coefficients [bx, by, axx, ayy, axy].
fn poly_expand(img: &Gray) -> Vec<[f32; 5]> {
    let half = (POLY_N / 2) as i64;
    // Normalized Gaussian applicability and its moments.
    let g: Vec<f64> = (-half..=half)
        .map(|d| (-((d * d) as f64) / (2.0 * POLY_SIGMA * POLY_SIGMA)).exp())
        .collect();
    let gsum: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / gsum).collect();
    let s2: f64 = g
        .iter()
        .enumerate()
        .map(|(i, v)| ((i as f64 - half as f64).powi(2)) * v)
        .sum();
    let s4: f64 = g
        .iter()
        .enumerate()
        .map(|(i, v)| ((i as f64 - half as f64).powi(4)) * v)
        .sum();

    // Inverse of the (1, x^2, y^2) normal-equation block.
    let inv3 = invert_3x3([[1.0, s2, s2], [s2, s4, s2 * s2], [s2, s2 * s2, s4]]);

    let xg: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 - half as f64) * v)
        .collect();
    let xxg: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 - half as f64).powi(2) * v)
        .collect();

    let (w, h) = (img.w, img.h);
    // Vertical passes with g, yg, yyg.
    let mut vg = vec![0.0f64; w * h];
    let mut vyg = vec![0.0f64; w * h];
    let mut vyyg = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for j in 0..POLY_N {
                let s = img.at(x as i64, y as i64 + j as i64 - half) as f64;
                a += g[j] * s;
                b += xg[j] * s;
                c += xxg[j] * s;
            }
            let i = y * w + x;
            vg[i] = a;
            vyg[i] = b;
            vyyg[i] = c;
        }
    }

    let sample = |buf: &[f64], x: i64, y: i64| -> f64 {
        let xc = x.clamp(0, w as i64 - 1) as usize;
        let yc = y.clamp(0, h as i64 - 1) as usize;
        buf[yc * w + xc]
    };

    let mut out = vec![[0.0f32; 5]; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut m1, mut mx, mut mxx) = (0.0, 0.0, 0.0);
            let (mut my, mut mxy) = (0.0, 0.0);
            let mut myy = 0.0;
            for j in 0..POLY_N {
                let dx = x as i64 + j as i64 - half;
                let a = sample(&vg, dx, y as i64);
                let b = sample(&vyg, dx, y as i64);
                let c = sample(&vyyg, dx, y as i64);
                m1 += g[j] * a;
                mx += xg[j] * a;
                mxx += xxg[j] * a;
                my += g[j] * b;
                mxy += xg[j] * b;
                myy += g[j] * c;
            }
            let bx = mx / s2;
            let by = my / s2;
            let axy = mxy / (s2 * s2);
            let axx = inv3[1][0] * m1 + inv3[1][1] * mxx + inv3[1][2] * myy;
            let ayy = inv3[2][0] * m1 + inv3[2][1] * mxx + inv3[2][2] * myy;
            out[y * w + x] = [bx as f32, by as f32, axx as f32, ayy as f32, axy as f32];
        }
    }
    out
}

fn invert_3x3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0f64; 3]; 3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    inv
}

/// One Gauss-Newton sweep: build the local 2x2 systems from the two
/// expansions and the current flow, aggregate over the window, solve.
fn update_flow(w: usize, h: usize, ra: &[[f32; 5]], rb: &[[f32; 5]], fu: &mut [f32], fv: &mut [f32]) {
    let mut m = vec![[0.0f32; 5]; w * h]; // g00 g01 g11 h0 h1
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (dx, dy) = (fu[i], fv[i]);
            let fx = (x as f32 + dx).clamp(0.0, w as f32 - 1.0);
            let fy = (y as f32 + dy).clamp(0.0, h as f32 - 1.0);
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (ax, ay) = (fx - x0 as f32, fy - y0 as f32);
            let mut rb_i = [0.0f32; 5];
            for c in 0..5 {
                let top = rb[y0 * w + x0][c] * (1.0 - ax) + rb[y0 * w + x1][c] * ax;
                let bot = rb[y1 * w + x0][c] * (1.0 - ax) + rb[y1 * w + x1][c] * ax;
                rb_i[c] = top * (1.0 - ay) + bot * ay;
            }
            let a = &ra[i];
            let axx = (a[2] + rb_i[2]) * 0.5;
            let ayy = (a[3] + rb_i[3]) * 0.5;
            let axy = (a[4] + rb_i[4]) * 0.25;
            let mut db_x = (a[0] - rb_i[0]) * 0.5;
            let mut db_y = (a[1] - rb_i[1]) * 0.5;
            db_x += axx * dx + axy * dy;
            db_y += axy * dx + ayy * dy;
            m[i] = [
                axx * axx + axy * axy,
                (axx + ayy) * axy,
                ayy * ayy + axy * axy,
                axx * db_x + axy * db_y,
                axy * db_x + ayy * db_y,
            ];
        }
    }

    let blurred = box_blur(&m, w, h, WIN_SIZE / 2);
    for i in 0..w * h {
        let [g00, g01, g11, h0, h1] = blurred[i];
        let det = g00 as f64 * g11 as f64 - g01 as f64 * g01 as f64;
        if det.abs() > 1e-9 {
            fu[i] = ((g11 as f64 * h0 as f64 - g01 as f64 * h1 as f64) / det) as f32;
            fv[i] = ((g00 as f64 * h1 as f64 - g01 as f64 * h0 as f64) / det) as f32;
        }
        // Under-determined neighborhoods keep their prior estimate.
    }
}

/// Separable box blur with edge clamping over all 5 channels.
fn box_blur(m: &[[f32; 5]], w: usize, h: usize, r: usize) -> Vec<[f32; 5]> {
    let norm = 1.0 / (2 * r + 1) as f32;
    let mut tmp = vec![[0.0f32; 5]; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 5];
            for j in 0..=2 * r {
                let xs = (x as i64 + j as i64 - r as i64).clamp(0, w as i64 - 1) as usize;
                for c in 0..5 {
                    acc[c] += m[y * w + xs][c];
                }
            }
            for (c, a) in acc.iter().enumerate() {
                tmp[y * w + x][c] = a * norm;
            }
        }
    }
    let mut out = vec![[0.0f32; 5]; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 5];
            for j in 0..=2 * r {
                let ys = (y as i64 + j as i64 - r as i64).clamp(0, h as i64 - 1) as usize;
                for c in 0..5 {
                    acc[c] += tmp[ys * w + x][c];
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out[y * w + x][c] = a * norm;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Frame;
    use rand::{Rng, SeedableRng};

    fn textured(w: usize, h: usize, seed: u64) -> Vec<f32> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f32> = (0..w * h).map(|_| rng.gen_range(0.0..1.0f32)).collect();
        // Light smoothing so the pattern has trackable structure.
        let img = Gray { w, h, data: noise };
        let mut out = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        acc += img.at(x as i64 + dx, y as i64 + dy);
                    }
                }
                out[y * w + x] = acc / 9.0;
            }
        }
        out
    }

    fn shift_wrap(data: &[f32], w: usize, h: usize, dx: usize) -> Vec<f32> {
        let mut out = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] = data[y * w + (x + w - dx) % w];
            }
        }
        out
    }

    fn median(mut v: Vec<f32>) -> f32 {
        v.sort_by(f32::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn static_scene_has_near_zero_flow() {
        let data = textured(64, 64, 3);
        let frames = vec![
            Frame::from_luma(data.clone()),
            Frame::from_luma(data.clone()),
        ];
        let seq = FrameSequence::new(frames, 8.0, 64, 64).unwrap();
        let fields = optical_flow(&seq).unwrap();
        let max_mag = (0..64 * 64)
            .map(|i| fields[0].magnitude(i))
            .fold(0.0f64, f64::max);
        assert!(max_mag < 0.05, "max magnitude {max_mag}");
    }

    #[test]
    fn rightward_translation_is_recovered() {
        let a = textured(64, 64, 11);
        let b = shift_wrap(&a, 64, 64, 3);
        let seq = FrameSequence::new(
            vec![Frame::from_luma(a), Frame::from_luma(b)],
            8.0,
            64,
            64,
        )
        .unwrap();
        let f = &optical_flow(&seq).unwrap()[0];
        let med_u = median(f.u.clone());
        let med_v = median(f.v.iter().map(|v| v.abs()).collect());
        assert!((2.5..=3.5).contains(&med_u), "median u = {med_u}");
        assert!(med_v < 0.5, "median |v| = {med_v}");
    }

    #[test]
    fn textureless_input_stays_finite_and_small() {
        let frames = vec![
            Frame::from_luma(vec![0.5; 32 * 32]),
            Frame::from_luma(vec![0.5; 32 * 32]),
        ];
        let seq = FrameSequence::new(frames, 8.0, 32, 32).unwrap();
        let f = &optical_flow(&seq).unwrap()[0];
        for i in 0..32 * 32 {
            assert!(f.u[i].is_finite() && f.v[i].is_finite());
            assert!(f.magnitude(i) < 0.5);
        }
    }

    #[test]
    fn single_frame_is_argument_error() {
        let seq =
            FrameSequence::new(vec![Frame::from_luma(vec![0.0; 16])], 8.0, 4, 4).unwrap();
        assert!(matches!(
            optical_flow(&seq).unwrap_err(),
            Error::InvalidArgument(_)
        ));
    }
}
