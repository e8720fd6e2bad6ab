//! Synthetic clips used by tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::video::{Dims, Video};

/// Spatial period of [`periodic_texture`].
pub const TEXTURE_PERIOD: usize = 16;

/// A band-limited random texture, periodic with [`TEXTURE_PERIOD`] along
/// height and width and drifting one pixel per frame along the width. Each
/// channel sums low spatial harmonics with random phases and amplitudes
/// scaled to total 0.4, so values stay inside `[0.1, 0.9]`.
pub fn periodic_texture(dims: Dims, seed: u64) -> Video {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let p = TEXTURE_PERIOD as f64;
    // (ky, kx, amplitude, phase) per channel
    let waves: Vec<Vec<(f64, f64, f64, f64)>> = (0..3)
        .map(|_| {
            [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (2.0, 1.0), (1.0, 2.0)]
                .iter()
                .map(|&(ky, kx)| (ky, kx, rng.gen_range(0.5..1.0), rng.gen_range(0.0..tau)))
                .collect::<Vec<_>>()
        })
        .map(|mut ws| {
            let total: f64 = ws.iter().map(|w| w.2).sum();
            ws.iter_mut().for_each(|w| w.2 *= 0.4 / total);
            ws
        })
        .collect();
    Video::from_fn(dims, 3, |t, h, w, c| {
        let (y, x) = (h as f64, (w + t) as f64);
        let v: f64 = waves[c]
            .iter()
            .map(|&(ky, kx, a, ph)| a * (tau * (ky * y + kx * x) / p + ph).cos())
            .sum();
        (0.5 + v) as f32
    })
    .expect("finite")
}

fn disc_mask(h: usize, w: usize, cy: f64, cx: f64, r: f64) -> bool {
    let (dy, dx) = (h as f64 + 0.5 - cy, w as f64 + 0.5 - cx);
    dy * dy + dx * dx <= r * r
}

/// A solid square moving left to right by `speed` pixels per frame over a
/// static mid-gray background.
pub fn moving_square(dims: Dims, side: usize, speed: usize) -> Video {
    let top = dims.h.saturating_sub(side) / 2;
    Video::from_fn(dims, 3, |t, h, w, c| {
        let left = 2 + t * speed;
        let inside = (top..top + side).contains(&h) && (left..left + side).contains(&w);
        if inside {
            [0.9, 0.8, 0.2][c]
        } else {
            0.35
        }
    })
    .expect("finite")
}

/// A checkered disc moving right to left by `speed` pixels per frame over a
/// static textured background.
pub fn moving_disc(dims: Dims, radius: f64, speed: usize, seed: u64) -> Video {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg: Vec<f32> = (0..dims.h * dims.w).map(|_| rng.gen_range(0.05..0.25)).collect();
    let cy = dims.h as f64 / 2.0;
    Video::from_fn(dims, 3, |t, h, w, c| {
        let cx = dims.w as f64 - radius - 2.0 - (t * speed) as f64;
        if disc_mask(h, w, cy, cx, radius) {
            let check = ((h / 2 + w / 2) % 2) as f32;
            [0.2 + 0.6 * check, 0.9 - 0.5 * check, 0.5][c]
        } else {
            bg[h * dims.w + w]
        }
    })
    .expect("finite")
}

/// A flat-colored disc moving left to right over a flat background.
pub fn disc_on_flat(dims: Dims, radius: f64, speed: usize) -> Video {
    let cy = dims.h as f64 / 2.0;
    Video::from_fn(dims, 3, |t, h, w, c| {
        let cx = radius + 2.0 + (t * speed) as f64;
        if disc_mask(h, w, cy, cx, radius) {
            [0.85, 0.3, 0.25][c]
        } else {
            [0.2, 0.45, 0.7][c]
        }
    })
    .expect("finite")
}
