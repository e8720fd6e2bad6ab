//! Integer block-matching motion between consecutive frames, refined
//! coarse to fine over a two-level spatial pyramid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::video::{Dims, Video};

/// Single-channel frame.
struct Plane<'a> {
    h: usize,
    w: usize,
    px: &'a [f32],
}

impl Plane<'_> {
    #[inline]
    fn at(&self, y: i64, x: i64) -> f32 {
        let y = y.clamp(0, self.h as i64 - 1) as usize;
        let x = x.clamp(0, self.w as i64 - 1) as usize;
        self.px[y * self.w + x]
    }

    /// SSD between the block of `self` centered at `(y, x)` and the block of
    /// `next` centered at `(y + dy, x + dx)`; reads outside clamp to the edge.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn block_ssd(&self, next: &Plane, y: i64, x: i64, dy: i64, dx: i64, half: i64, bound: f32) -> Option<f32> {
        let mut acc = 0.0f32;
        for oy in -half..=half {
            for ox in -half..=half {
                let d = self.at(y + oy, x + ox) - next.at(y + oy + dy, x + ox + dx);
                acc += d * d;
            }
            if acc > bound {
                return None;
            }
        }
        Some(acc)
    }
}

fn downsample2(p: &Plane) -> Vec<f32> {
    let (h, w) = (p.h / 2, p.w / 2);
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let s = p.px[2 * y * p.w + 2 * x] + p.px[2 * y * p.w + 2 * x + 1] + p.px[(2 * y + 1) * p.w + 2 * x] + p.px[(2 * y + 1) * p.w + 2 * x + 1];
            out.push(s * 0.25);
        }
    }
    out
}

/// Preference order for equal-cost displacements: shorter first, then
/// lexicographic `(dy, dx)`.
#[inline]
fn better(cost: f32, d: (i64, i64), best_cost: f32, best: (i64, i64)) -> bool {
    if cost != best_cost {
        return cost < best_cost;
    }
    let (m, bm) = (d.0 * d.0 + d.1 * d.1, best.0 * best.0 + best.1 * best.1);
    m < bm || (m == bm && d < best)
}

fn search(
    a: &Plane,
    b: &Plane,
    y: i64,
    x: i64,
    half: i64,
    candidates: impl Iterator<Item = (i64, i64)>,
) -> (i64, i64) {
    let mut best = (0i64, 0i64);
    let mut best_cost = f32::INFINITY;
    for d in candidates {
        // ties must still be examined, so prune only on strictly larger cost
        if let Some(c) = a.block_ssd(b, y, x, d.0, d.1, half, best_cost) {
            if better(c, d, best_cost, best) {
                best = d;
                best_cost = c;
            }
        }
    }
    best
}

fn pair_displacements(a: &Plane, b: &Plane, window: usize, max_disp: i64) -> Vec<(i64, i64)> {
    let half = (window / 2) as i64;
    let (h, w) = (a.h, a.w);
    let coarse_half = half / 2;
    let coarse_ok = h as i64 / 2 > 2 * coarse_half && w as i64 / 2 > 2 * coarse_half && max_disp > 0;
    let coarse: Option<(usize, Vec<(i64, i64)>)> = coarse_ok.then(|| {
        let (ca, cb) = (downsample2(a), downsample2(b));
        let pa = Plane { h: h / 2, w: w / 2, px: &ca };
        let pb = Plane { h: h / 2, w: w / 2, px: &cb };
        let cmax = (max_disp + 1) / 2;
        let d: Vec<(i64, i64)> = (0..pa.h * pa.w)
            .into_par_iter()
            .map(|i| {
                let (y, x) = ((i / pa.w) as i64, (i % pa.w) as i64);
                let cands = (-cmax..=cmax).flat_map(|dy| (-cmax..=cmax).map(move |dx| (dy, dx)));
                search(&pa, &pb, y, x, coarse_half, cands)
            })
            .collect();
        (pa.w, d)
    });
    (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (y, x) = ((i / w) as i64, (i % w) as i64);
            match &coarse {
                Some((cw, cd)) => {
                    let (cy, cx) = (((y / 2) as usize).min(h / 2 - 1), ((x / 2) as usize).min(cw - 1));
                    let (gy, gx) = cd[cy * cw + cx];
                    // around the coarse guess, plus small motions in case
                    // the coarse level aliased them away
                    let near_guess = |(dy, dx): (i64, i64)| (dy - 2 * gy).abs() <= 2 && (dx - 2 * gx).abs() <= 2;
                    let around = (-2..=2).flat_map(move |oy| (-2..=2).map(move |ox| (2 * gy + oy, 2 * gx + ox)));
                    let small = (-2..=2)
                        .flat_map(|oy| (-2..=2).map(move |ox| (oy, ox)))
                        .filter(move |d| !near_guess(*d));
                    let cands = around
                        .chain(small)
                        .filter(|(dy, dx)| dy.abs() <= max_disp && dx.abs() <= max_disp);
                    search(a, b, y, x, half, cands)
                }
                None => {
                    let cands = (-max_disp..=max_disp).flat_map(|dy| (-max_disp..=max_disp).map(move |dx| (dy, dx)));
                    search(a, b, y, x, half, cands)
                }
            }
        })
        .collect()
}

/// Per-voxel motion magnitude in pixels per frame. Frame `t` holds the
/// motion from `t` to `t + 1`; the last frame repeats the one before it and
/// a single-frame video is all zeros.
pub fn estimate_flow_magnitude(v: &Video, window: usize, max_disp: usize) -> Result<Video> {
    let d = v.dims();
    if window == 0 {
        return Err(Error::invalid("block window must be >= 1"));
    }
    if window > d.h || window > d.w {
        return Err(Error::invalid(format!(
            "block window {window} larger than frame {}x{}",
            d.h, d.w
        )));
    }
    let frame_len = d.h * d.w;
    let mut out = vec![0.0f32; d.voxels()];
    if d.t < 2 {
        return Ok(Video::from_raw(d, 1, out));
    }
    let gray = v.grayscale();
    for t in 0..d.t - 1 {
        let a = Plane {
            h: d.h,
            w: d.w,
            px: gray.frame(t),
        };
        let b = Plane {
            h: d.h,
            w: d.w,
            px: gray.frame(t + 1),
        };
        let disp = pair_displacements(&a, &b, window, max_disp as i64);
        for (o, (dy, dx)) in out[t * frame_len..(t + 1) * frame_len].iter_mut().zip(disp) {
            *o = ((dy * dy + dx * dx) as f32).sqrt();
        }
    }
    let (head, tail) = out.split_at_mut((d.t - 1) * frame_len);
    tail.copy_from_slice(&head[(d.t - 2) * frame_len..]);
    Ok(Video::from_raw(Dims::new(d.t, d.h, d.w), 1, out))
}
