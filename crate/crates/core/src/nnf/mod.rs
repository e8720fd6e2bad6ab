//! Nearest-neighbor fields between the space-time patches of two videos.
//!
//! Patches are "valid only": a patch shape `(p_t, p_h, p_w)` over a video of
//! dims `(T, H, W)` yields a patch grid of `(T-p_t+1, H-p_h+1, W-p_w+1)`
//! positions, each identified by its first voxel. Distances are plain sums of
//! squared differences over every voxel and channel of the patch.

pub(crate) mod brute;
mod patchmatch;

pub use brute::brute_force_nnf;
pub use patchmatch::{patchmatch_nnf, Schedule, Solver};

use crate::error::{Error, Result};
use crate::video::{Dims, Video};

/// Space-time patch extent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PatchShape {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl PatchShape {
    pub const fn new(t: usize, h: usize, w: usize) -> Self {
        PatchShape { t, h, w }
    }

    pub fn as_dims(&self) -> Dims {
        Dims::new(self.t, self.h, self.w)
    }

    pub fn voxels(&self) -> usize {
        self.t * self.h * self.w
    }

    /// Patch-grid dims over a video of `d`, or an error when the patch does
    /// not fit.
    pub fn grid(&self, d: Dims) -> Result<Dims> {
        if self.t == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::invalid("patch shape axes must be >= 1"));
        }
        if !d.covers(self.as_dims()) {
            return Err(Error::invalid(format!(
                "patch {}x{}x{} does not fit in {d}",
                self.t, self.h, self.w
            )));
        }
        Ok(Dims::new(d.t - self.t + 1, d.h - self.h + 1, d.w - self.w + 1))
    }
}

impl Default for PatchShape {
    fn default() -> Self {
        PatchShape::new(3, 7, 7)
    }
}

/// How the solver seeds its field before the first sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    #[default]
    Random,
    /// Each query cell starts at the same key cell. Needs equal grids.
    Identity,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InitMode::Random),
            "identity" => Ok(InitMode::Identity),
            other => Err(Error::invalid(format!("unknown init mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverParams {
    pub iterations: usize,
    /// Random-search radius decay per step, in (0,1).
    pub alpha: f64,
    pub init: InitMode,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            iterations: 5,
            alpha: 0.5,
            init: InitMode::Random,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("solver iterations must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("search decay {} outside (0,1)", self.alpha)));
        }
        Ok(())
    }
}

/// Best key-patch coordinate and its distance for every query patch.
#[derive(Clone, Debug, PartialEq)]
pub struct NNField {
    grid: Dims,
    key_grid: Dims,
    targets: Vec<[u32; 3]>,
    distances: Vec<f32>,
}

impl NNField {
    pub(crate) fn from_parts(grid: Dims, key_grid: Dims, targets: Vec<[u32; 3]>, distances: Vec<f32>) -> Self {
        debug_assert_eq!(targets.len(), grid.voxels());
        debug_assert_eq!(distances.len(), grid.voxels());
        NNField {
            grid,
            key_grid,
            targets,
            distances,
        }
    }

    /// Build a field from explicit targets, computing exact distances.
    pub fn from_targets(q: &Video, k: &Video, shape: PatchShape, targets: Vec<[u32; 3]>) -> Result<Self> {
        let metric = Metric::new(q, k, shape)?;
        if targets.len() != metric.q_grid.voxels() {
            return Err(Error::invalid(format!(
                "{} targets for a query grid of {}",
                targets.len(),
                metric.q_grid
            )));
        }
        let kg = metric.k_grid;
        if targets
            .iter()
            .any(|t| t[0] as usize >= kg.t || t[1] as usize >= kg.h || t[2] as usize >= kg.w)
        {
            return Err(Error::invalid("target outside the key patch grid"));
        }
        let qg = metric.q_grid;
        let distances = targets
            .iter()
            .enumerate()
            .map(|(i, tg)| {
                let cell = unflatten(i, qg);
                metric.distance(cell, *tg, f32::INFINITY).unwrap()
            })
            .collect();
        Ok(NNField::from_parts(qg, kg, targets, distances))
    }

    /// Query patch-grid dims.
    pub fn grid(&self) -> Dims {
        self.grid
    }

    pub fn key_grid(&self) -> Dims {
        self.key_grid
    }

    pub fn targets(&self) -> &[[u32; 3]] {
        &self.targets
    }

    pub fn distances(&self) -> &[f32] {
        &self.distances
    }

    pub fn target(&self, t: usize, h: usize, w: usize) -> [u32; 3] {
        self.targets[(t * self.grid.h + h) * self.grid.w + w]
    }

    pub fn distance(&self, t: usize, h: usize, w: usize) -> f32 {
        self.distances[(t * self.grid.h + h) * self.grid.w + w]
    }

    pub fn mean_distance(&self) -> f64 {
        mean_f32(&self.distances)
    }
}

pub(crate) fn mean_f32(v: &[f32]) -> f64 {
    v.iter().map(|&d| d as f64).sum::<f64>() / v.len() as f64
}

#[inline]
pub(crate) fn unflatten(i: usize, g: Dims) -> [u32; 3] {
    let w = i % g.w;
    let h = (i / g.w) % g.h;
    let t = i / (g.w * g.h);
    [t as u32, h as u32, w as u32]
}

/// Patch SSD between `q` at `q_pos` and `k` at `k_pos`, both `(t, h, w)`
/// patch-grid coordinates.
pub fn patch_distance(q: &Video, q_pos: [usize; 3], k: &Video, k_pos: [usize; 3], shape: PatchShape) -> Result<f32> {
    let metric = Metric::new(q, k, shape)?;
    let inside = |p: [usize; 3], g: Dims| p[0] < g.t && p[1] < g.h && p[2] < g.w;
    if !inside(q_pos, metric.q_grid) || !inside(k_pos, metric.k_grid) {
        return Err(Error::invalid(format!(
            "patch position {q_pos:?}/{k_pos:?} outside grids {}/{}",
            metric.q_grid, metric.k_grid
        )));
    }
    let as_u32 = |p: [usize; 3]| [p[0] as u32, p[1] as u32, p[2] as u32];
    Ok(metric.distance(as_u32(q_pos), as_u32(k_pos), f32::INFINITY).unwrap())
}

/// Patch SSD with early exit. The summation order is fixed, so a distance is
/// bit-identical no matter which caller computes it.
pub(crate) struct Metric<'a> {
    q: &'a [f32],
    k: &'a [f32],
    /// Offsets of each contiguous `p_w * C` run within a patch.
    q_rows: Vec<usize>,
    k_rows: Vec<usize>,
    row_len: usize,
    q_dims: Dims,
    k_dims: Dims,
    channels: usize,
    pub q_grid: Dims,
    pub k_grid: Dims,
}

impl<'a> Metric<'a> {
    pub fn new(q: &'a Video, k: &'a Video, shape: PatchShape) -> Result<Self> {
        if q.channels() != k.channels() {
            return Err(Error::invalid(format!(
                "query has {} channels but key has {}",
                q.channels(),
                k.channels()
            )));
        }
        let q_grid = shape.grid(q.dims())?;
        let k_grid = shape.grid(k.dims())?;
        let c = q.channels();
        let rows = |d: Dims| {
            let mut r = Vec::with_capacity(shape.t * shape.h);
            for dt in 0..shape.t {
                for dh in 0..shape.h {
                    r.push((dt * d.h + dh) * d.w * c);
                }
            }
            r
        };
        Ok(Metric {
            q: q.data(),
            k: k.data(),
            q_rows: rows(q.dims()),
            k_rows: rows(k.dims()),
            row_len: shape.w * c,
            q_dims: q.dims(),
            k_dims: k.dims(),
            channels: c,
            q_grid,
            k_grid,
        })
    }

    #[inline]
    fn q_base(&self, p: [u32; 3]) -> usize {
        ((p[0] as usize * self.q_dims.h + p[1] as usize) * self.q_dims.w + p[2] as usize) * self.channels
    }

    #[inline]
    fn k_base(&self, p: [u32; 3]) -> usize {
        ((p[0] as usize * self.k_dims.h + p[1] as usize) * self.k_dims.w + p[2] as usize) * self.channels
    }

    /// Exact SSD, or `None` as soon as a partial sum reaches `bound`.
    /// Partial sums of nonnegative terms never decrease, so `None` implies
    /// the full distance is `>= bound`.
    #[inline]
    pub fn distance(&self, q_pos: [u32; 3], k_pos: [u32; 3], bound: f32) -> Option<f32> {
        let qb = self.q_base(q_pos);
        let kb = self.k_base(k_pos);
        let n = self.row_len;
        let mut total = 0.0f32;
        for (qo, ko) in self.q_rows.iter().zip(&self.k_rows) {
            let a = &self.q[qb + qo..qb + qo + n];
            let b = &self.k[kb + ko..kb + ko + n];
            total += row_ssd(a, b);
            if total >= bound {
                return None;
            }
        }
        Some(total)
    }
}

#[inline(always)]
fn row_ssd(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Which key patches may be matched. `true` marks a usable key cell.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyMask {
    grid: Dims,
    valid: Vec<bool>,
}

impl KeyMask {
    pub fn new(grid: Dims, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != grid.voxels() {
            return Err(Error::invalid("key mask length does not match its grid"));
        }
        Ok(KeyMask { grid, valid })
    }

    /// Mark every key patch that touches a nonzero voxel of `hole` invalid.
    /// `hole` is a one-channel raster with the key video's dims.
    pub fn excluding_hole(hole: &Video, shape: PatchShape) -> Result<Self> {
        let grid = shape.grid(hole.dims())?;
        let d = hole.dims();
        // 3-D prefix sum of hole voxels for O(1) box queries.
        let (pt, ph, pw) = (d.t + 1, d.h + 1, d.w + 1);
        let mut s = vec![0u32; pt * ph * pw];
        let at = |t: usize, h: usize, w: usize| (t * ph + h) * pw + w;
        for t in 0..d.t {
            for h in 0..d.h {
                for w in 0..d.w {
                    let v = (hole.get(t, h, w, 0) != 0.0) as u32;
                    s[at(t + 1, h + 1, w + 1)] = v + s[at(t, h + 1, w + 1)] + s[at(t + 1, h, w + 1)] + s[at(t + 1, h + 1, w)]
                        - s[at(t, h, w + 1)]
                        - s[at(t, h + 1, w)]
                        - s[at(t + 1, h, w)]
                        + s[at(t, h, w)];
                }
            }
        }
        let mut valid = Vec::with_capacity(grid.voxels());
        for t in 0..grid.t {
            for h in 0..grid.h {
                for w in 0..grid.w {
                    let (t1, h1, w1) = (t + shape.t, h + shape.h, w + shape.w);
                    let n = s[at(t1, h1, w1)] + s[at(t, h, w1)] + s[at(t, h1, w)] + s[at(t1, h, w)]
                        - s[at(t, h, w)]
                        - s[at(t1, h1, w)]
                        - s[at(t1, h, w1)]
                        - s[at(t, h1, w1)];
                    valid.push(n == 0);
                }
            }
        }
        Ok(KeyMask { grid, valid })
    }

    pub fn grid(&self) -> Dims {
        self.grid
    }

    #[inline]
    pub fn is_valid(&self, p: [u32; 3]) -> bool {
        self.valid[(p[0] as usize * self.grid.h + p[1] as usize) * self.grid.w + p[2] as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub(crate) fn valid_cells(&self) -> Vec<[u32; 3]> {
        self.valid
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| unflatten(i, self.grid))
            .collect()
    }
}
