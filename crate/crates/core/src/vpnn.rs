//! One patch nearest-neighbor replacement step: unfold, match, replace, fold.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nnf::{unflatten, KeyMask, NNField, PatchShape, Schedule, Solver, SolverParams};
use crate::video::{Dims, Video};

/// Query/key/value rasters for one step. Distances are measured between
/// `q` and `k` after scaling each channel by `channel_weights`; copied
/// content always comes from `v`.
#[derive(Clone, Debug)]
pub struct QKVBundle {
    pub q: Video,
    pub k: Video,
    pub v: Video,
    pub channel_weights: Vec<f32>,
}

impl QKVBundle {
    pub fn new(q: Video, k: Video, v: Video, channel_weights: Vec<f32>) -> Result<Self> {
        let b = QKVBundle {
            q,
            k,
            v,
            channel_weights,
        };
        b.validate()?;
        Ok(b)
    }

    /// Unit weights on every query channel.
    pub fn unweighted(q: Video, k: Video, v: Video) -> Result<Self> {
        let w = vec![1.0; q.channels()];
        QKVBundle::new(q, k, v, w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.channels() != self.k.channels() {
            return Err(Error::invalid(format!(
                "query has {} channels, key has {}",
                self.q.channels(),
                self.k.channels()
            )));
        }
        if self.k.dims() != self.v.dims() {
            return Err(Error::invalid(format!(
                "key dims {} differ from value dims {}",
                self.k.dims(),
                self.v.dims()
            )));
        }
        if self.channel_weights.len() != self.q.channels() {
            return Err(Error::invalid(format!(
                "{} channel weights for {} query channels",
                self.channel_weights.len(),
                self.q.channels()
            )));
        }
        if self.channel_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("channel weights must be finite and >= 0"));
        }
        if self.channel_weights.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid("at least one channel weight must be positive"));
        }
        Ok(())
    }

    /// Weighted query and key with zero-weight channels dropped. A zero
    /// weight contributes nothing to any distance, so removing the channel
    /// leaves every distance and every solver decision unchanged.
    pub fn weighted_qk(&self) -> Result<(Video, Video)> {
        let keep: Vec<usize> = (0..self.channel_weights.len())
            .filter(|&c| self.channel_weights[c] > 0.0)
            .collect();
        let w: Vec<f32> = keep.iter().map(|&c| self.channel_weights[c]).collect();
        let prep = |x: &Video| -> Result<Video> {
            let x = if keep.len() == x.channels() {
                x.clone()
            } else {
                x.select_channels(&keep)?
            };
            if w.iter().all(|&v| v == 1.0) {
                Ok(x)
            } else {
                x.scale_channels(&w)
            }
        };
        Ok((prep(&self.q)?, prep(&self.k)?))
    }
}

/// Every valid patch of a video, flattened in `(t, h, w, c)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    grid: Dims,
    shape: PatchShape,
    channels: usize,
    data: Vec<f32>,
}

impl PatchSet {
    pub fn grid(&self) -> Dims {
        self.grid
    }

    pub fn shape(&self) -> PatchShape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn patch_len(&self) -> usize {
        self.shape.voxels() * self.channels
    }

    pub fn len(&self) -> usize {
        self.grid.voxels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, t: usize, h: usize, w: usize) -> &[f32] {
        let i = (t * self.grid.h + h) * self.grid.w + w;
        self.cell_at(i)
    }

    pub fn cell_at(&self, i: usize) -> &[f32] {
        let n = self.patch_len();
        &self.data[i * n..(i + 1) * n]
    }
}

fn extract(v: &Video, at: [u32; 3], shape: PatchShape, out: &mut Vec<f32>) {
    let row = shape.w * v.channels();
    for dt in 0..shape.t {
        for dh in 0..shape.h {
            let s = v.index(at[0] as usize + dt, at[1] as usize + dh, at[2] as usize, 0);
            out.extend_from_slice(&v.data()[s..s + row]);
        }
    }
}

pub fn unfold(v: &Video, shape: PatchShape) -> Result<PatchSet> {
    let grid = shape.grid(v.dims())?;
    let mut data = Vec::with_capacity(grid.voxels() * shape.voxels() * v.channels());
    for i in 0..grid.voxels() {
        extract(v, unflatten(i, grid), shape, &mut data);
    }
    Ok(PatchSet {
        grid,
        shape,
        channels: v.channels(),
        data,
    })
}

/// Patch of `values` at each cell's target.
pub fn replace(nnf: &NNField, values: &Video, shape: PatchShape) -> Result<PatchSet> {
    let vg = shape.grid(values.dims())?;
    if vg != nnf.key_grid() {
        return Err(Error::invalid(format!(
            "field targets a {} key grid but values have a {} patch grid",
            nnf.key_grid(),
            vg
        )));
    }
    let mut data = Vec::with_capacity(nnf.grid().voxels() * shape.voxels() * values.channels());
    for tg in nnf.targets() {
        extract(values, *tg, shape, &mut data);
    }
    Ok(PatchSet {
        grid: nnf.grid(),
        shape,
        channels: values.channels(),
        data,
    })
}

/// Lower median: element `(n-1)/2` in sorted order.
#[inline]
fn lower_median(buf: &mut [f32]) -> f32 {
    let mid = (buf.len() - 1) / 2;
    *buf.select_nth_unstable_by(mid, f32::total_cmp).1
}

/// Patch-grid cells covering output position `p` along one axis.
#[inline]
fn covering(p: usize, patch: usize, grid: usize) -> std::ops::Range<usize> {
    p.saturating_sub(patch - 1)..(p + 1).min(grid)
}

/// Fold overlapping patches back into a video, taking at every voxel and
/// channel the lower median of all suggestions.
pub fn fold_median(p: &PatchSet, out_dims: Dims, shape: PatchShape) -> Result<Video> {
    if shape != p.shape {
        return Err(Error::invalid("patch shape differs from the patch set's shape"));
    }
    let grid = shape.grid(out_dims)?;
    if grid != p.grid {
        return Err(Error::invalid(format!(
            "patch grid {} inconsistent with output {out_dims}",
            p.grid
        )));
    }
    let c = p.channels;
    let plen = p.patch_len();
    fold_with(out_dims, c, shape, grid, |cell, dt, dh, dw, ch| {
        p.data[cell * plen + ((dt * shape.h + dh) * shape.w + dw) * c + ch]
    })
}

/// `fold_median(replace(nnf, values))` without materializing the patches.
pub fn vote(nnf: &NNField, values: &Video, shape: PatchShape) -> Result<Video> {
    let vg = shape.grid(values.dims())?;
    if vg != nnf.key_grid() {
        return Err(Error::invalid("field key grid does not match the value video"));
    }
    let g = nnf.grid();
    let out_dims = Dims::new(g.t + shape.t - 1, g.h + shape.h - 1, g.w + shape.w - 1);
    let tg = nnf.targets();
    let vd = values.data();
    fold_with(out_dims, values.channels(), shape, g, |cell, dt, dh, dw, ch| {
        let k = tg[cell];
        vd[values.index(k[0] as usize + dt, k[1] as usize + dh, k[2] as usize + dw, ch)]
    })
}

fn fold_with(
    out_dims: Dims,
    c: usize,
    shape: PatchShape,
    grid: Dims,
    suggestion: impl Fn(usize, usize, usize, usize, usize) -> f32 + Sync,
) -> Result<Video> {
    let row_len = out_dims.w * c;
    let mut out = vec![0.0f32; out_dims.voxels() * c];
    out.par_chunks_mut(row_len).enumerate().for_each(|(row, orow)| {
        let (t, h) = (row / out_dims.h, row % out_dims.h);
        let mut bufs: Vec<Vec<f32>> = vec![Vec::with_capacity(shape.voxels()); c];
        for w in 0..out_dims.w {
            for b in bufs.iter_mut() {
                b.clear();
            }
            for gt in covering(t, shape.t, grid.t) {
                for gh in covering(h, shape.h, grid.h) {
                    let base = (gt * grid.h + gh) * grid.w;
                    for gw in covering(w, shape.w, grid.w) {
                        let cell = base + gw;
                        for (ch, b) in bufs.iter_mut().enumerate() {
                            b.push(suggestion(cell, t - gt, h - gh, w - gw, ch));
                        }
                    }
                }
            }
            for (ch, b) in bufs.iter_mut().enumerate() {
                orow[w * c + ch] = lower_median(b);
            }
        }
    });
    Ok(Video::from_raw(out_dims, c, out))
}

/// Result of one step along with the field that produced it.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub video: Video,
    pub nnf: NNField,
}

/// Knobs for [`vpnn_step_with`] beyond the solver parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepOptions<'a> {
    pub key_mask: Option<&'a KeyMask>,
    pub schedule: Schedule,
    /// Warm start for the solver, e.g. the previous step's field.
    pub initial: Option<&'a NNField>,
}

pub fn vpnn_step(b: &QKVBundle, shape: PatchShape, params: SolverParams) -> Result<Video> {
    Ok(vpnn_step_with(b, shape, params, StepOptions::default())?.video)
}

pub fn vpnn_step_with(b: &QKVBundle, shape: PatchShape, params: SolverParams, opts: StepOptions<'_>) -> Result<StepOutput> {
    b.validate()?;
    let (q, k) = b.weighted_qk()?;
    let mut solver = Solver::new(&q, &k, shape, params)?.with_schedule(opts.schedule);
    if let Some(m) = opts.key_mask {
        solver = solver.with_key_mask(m)?;
    }
    if let Some(f) = opts.initial {
        solver = solver.with_initial(f.targets())?;
    }
    let nnf = solver.solve();
    let video = vote(&nnf, &b.v, shape)?;
    Ok(StepOutput { video, nnf })
}
