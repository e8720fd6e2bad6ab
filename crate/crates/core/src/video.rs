//! Dense space-time rasters and separable resampling.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Space-time extent `(frames, height, width)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Dims {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub const fn new(t: usize, h: usize, w: usize) -> Self {
        Dims { t, h, w }
    }

    pub fn voxels(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.t, self.h, self.w]
    }

    pub fn from_array(a: [usize; 3]) -> Self {
        Dims::new(a[0], a[1], a[2])
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0 || self.h == 0 || self.w == 0
    }

    /// True when every axis of `self` is at least the matching axis of `other`.
    pub fn covers(&self, other: Dims) -> bool {
        self.t >= other.t && self.h >= other.h && self.w >= other.w
    }

    /// `round_half_up(self * ratio)` per axis.
    pub fn scaled(&self, rt: f64, rh: f64, rw: f64) -> Dims {
        Dims::new(
            round_half_up(self.t as f64 * rt),
            round_half_up(self.h as f64 * rh),
            round_half_up(self.w as f64 * rw),
        )
    }

    pub fn max(&self, other: Dims) -> Dims {
        Dims::new(self.t.max(other.t), self.h.max(other.h), self.w.max(other.w))
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.t, self.h, self.w)
    }
}

/// Round to nearest with halves going up. Inputs are nonnegative extents.
pub fn round_half_up(x: f64) -> usize {
    // Products like 144 * 0.75 are exact, but 13 * 0.85 may land a hair
    // below a true .5; a tiny epsilon keeps the rounding stable.
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// A `frames x height x width x channels` grid of `f32`, stored row-major
/// in `(t, h, w, c)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    dims: Dims,
    channels: usize,
    data: Vec<f32>,
}

impl Video {
    pub fn new(dims: Dims, channels: usize, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || channels == 0 {
            return Err(Error::invalid(format!(
                "video dims must be positive, got {dims} with {channels} channels"
            )));
        }
        if data.len() != dims.voxels() * channels {
            return Err(Error::invalid(format!(
                "data length {} does not match {dims}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("video data contains non-finite values"));
        }
        Ok(Video { dims, channels, data })
    }

    pub fn filled(dims: Dims, channels: usize, value: f32) -> Result<Self> {
        Video::new(dims, channels, vec![value; dims.voxels() * channels])
    }

    pub fn from_fn(dims: Dims, channels: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.voxels() * channels);
        for t in 0..dims.t {
            for h in 0..dims.h {
                for w in 0..dims.w {
                    for c in 0..channels {
                        data.push(f(t, h, w, c));
                    }
                }
            }
        }
        Video::new(dims, channels, data)
    }

    /// Internal constructor for buffers produced by our own arithmetic.
    pub(crate) fn from_raw(dims: Dims, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), dims.voxels() * channels);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Video { dims, channels, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.dims.t
    }

    pub fn height(&self) -> usize {
        self.dims.h
    }

    pub fn width(&self) -> usize {
        self.dims.w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, t: usize, h: usize, w: usize, c: usize) -> usize {
        ((t * self.dims.h + h) * self.dims.w + w) * self.channels + c
    }

    #[inline]
    pub fn get(&self, t: usize, h: usize, w: usize, c: usize) -> f32 {
        self.data[self.index(t, h, w, c)]
    }

    /// Samples of one frame, `h x w x c`.
    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.dims.h * self.dims.w * self.channels;
        &self.data[t * n..(t + 1) * n]
    }

    /// Apply `f` to every sample. `f` must map finite values to finite values.
    pub fn map(&self, f: impl Fn(f32) -> f32 + Sync) -> Video {
        let data = self.data.par_iter().map(|&v| f(v)).collect();
        Video::from_raw(self.dims, self.channels, data)
    }

    pub fn clamp01(&self) -> Video {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Keep only the listed channels, in the given order.
    pub fn select_channels(&self, which: &[usize]) -> Result<Video> {
        if which.is_empty() || which.iter().any(|&c| c >= self.channels) {
            return Err(Error::invalid(format!(
                "channel selection {which:?} invalid for {} channels",
                self.channels
            )));
        }
        let mut data = Vec::with_capacity(self.dims.voxels() * which.len());
        for px in self.data.chunks_exact(self.channels) {
            data.extend(which.iter().map(|&c| px[c]));
        }
        Ok(Video::from_raw(self.dims, which.len(), data))
    }

    /// Stack the channels of several same-sized videos.
    pub fn concat_channels(parts: &[&Video]) -> Result<Video> {
        let first = parts.first().ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        if parts.iter().any(|p| p.dims != first.dims) {
            return Err(Error::invalid("channel concatenation needs equal dims"));
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(first.dims.voxels() * channels);
        for i in 0..first.dims.voxels() {
            for p in parts {
                data.extend_from_slice(&p.data[i * p.channels..(i + 1) * p.channels]);
            }
        }
        Ok(Video::from_raw(first.dims, channels, data))
    }

    /// Multiply each channel by its weight.
    pub fn scale_channels(&self, weights: &[f32]) -> Result<Video> {
        if weights.len() != self.channels {
            return Err(Error::invalid(format!(
                "{} channel weights for {} channels",
                weights.len(),
                self.channels
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("channel weights must be finite and nonnegative"));
        }
        let c = self.channels;
        let data = self
            .data
            .par_chunks(c)
            .flat_map_iter(|px| px.iter().zip(weights).map(|(v, w)| v * w))
            .collect();
        Ok(Video::from_raw(self.dims, c, data))
    }

    /// Mean of channels, one channel out.
    pub fn grayscale(&self) -> Video {
        let c = self.channels as f32;
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f32>() / c)
            .collect();
        Video::from_raw(self.dims, 1, data)
    }

    pub fn max_abs_diff(&self, other: &Video) -> f32 {
        assert_eq!(self.dims, other.dims);
        assert_eq!(self.channels, other.channels);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    pub fn mean_abs_diff(&self, other: &Video) -> f64 {
        assert_eq!(self.dims, other.dims);
        assert_eq!(self.channels, other.channels);
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() as f64)
            .sum();
        s / self.data.len() as f64
    }
}

/// Interpolation scheme used by [`resize_video`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResizeFilter {
    /// Catmull-Rom cubic along height and width, linear along time.
    #[default]
    CubicSpatialLinearTemporal,
    /// Nearest sample on every axis. Used for label rasters.
    Nearest,
    /// Exact box average over each output voxel's footprint. A binary mask
    /// resized this way holds the covered fraction.
    Area,
}

fn catmull_rom(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Precomputed taps for resampling one axis from `src` to `dst` samples.
struct AxisTaps {
    /// `(first source index, weights)` per destination sample; source indices
    /// are already clamped, so `idx[k]` may repeat at the edges.
    idx: Vec<Vec<usize>>,
    wts: Vec<Vec<f32>>,
}

impl AxisTaps {
    fn new(src: usize, dst: usize, kind: Kernel) -> Self {
        let scale = src as f64 / dst as f64;
        let mut idx = Vec::with_capacity(dst);
        let mut wts = Vec::with_capacity(dst);
        for i in 0..dst {
            let x = (i as f64 + 0.5) * scale - 0.5;
            let clampi = |j: i64| j.clamp(0, src as i64 - 1) as usize;
            match kind {
                Kernel::Cubic => {
                    let base = x.floor() as i64;
                    let mut ii = Vec::with_capacity(4);
                    let mut ww = Vec::with_capacity(4);
                    for j in base - 1..=base + 2 {
                        ii.push(clampi(j));
                        ww.push(catmull_rom(x - j as f64));
                    }
                    let s: f64 = ww.iter().sum();
                    wts.push(ww.iter().map(|w| (w / s) as f32).collect());
                    idx.push(ii);
                }
                Kernel::Linear => {
                    let x = x.max(0.0);
                    let base = x.floor() as i64;
                    let frac = x - base as f64;
                    idx.push(vec![clampi(base), clampi(base + 1)]);
                    wts.push(vec![(1.0 - frac) as f32, frac as f32]);
                }
                Kernel::Nearest => {
                    let j = ((i as f64 + 0.5) * scale).floor() as i64;
                    idx.push(vec![clampi(j)]);
                    wts.push(vec![1.0]);
                }
                Kernel::Area => {
                    let (lo, hi) = (i as f64 * scale, (i as f64 + 1.0) * scale);
                    let mut ii = Vec::new();
                    let mut ww = Vec::new();
                    for j in lo.floor() as usize..(hi.ceil() as usize).min(src) {
                        let overlap = hi.min(j as f64 + 1.0) - lo.max(j as f64);
                        if overlap > 0.0 {
                            ii.push(j);
                            ww.push(overlap);
                        }
                    }
                    let s: f64 = ww.iter().sum();
                    wts.push(ww.iter().map(|w| (w / s) as f32).collect());
                    idx.push(ii);
                }
            }
        }
        AxisTaps { idx, wts }
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    Cubic,
    Linear,
    Nearest,
    Area,
}

/// Resample `data` (laid out as `outer x len x inner`) along the middle axis.
fn resample_axis(data: &[f32], outer: usize, len: usize, inner: usize, dst: usize, kind: Kernel) -> Vec<f32> {
    let taps = AxisTaps::new(len, dst, kind);
    let mut out = vec![0.0f32; outer * dst * inner];
    out.par_chunks_mut(dst * inner)
        .zip(data.par_chunks(len * inner))
        .for_each(|(o, src)| {
            for (i, orow) in o.chunks_exact_mut(inner).enumerate() {
                let (ii, ww) = (&taps.idx[i], &taps.wts[i]);
                for (&j, &w) in ii.iter().zip(ww) {
                    let srow = &src[j * inner..(j + 1) * inner];
                    for (a, &b) in orow.iter_mut().zip(srow) {
                        *a += w * b;
                    }
                }
            }
        });
    out
}

/// Resize `v` to `target` frames/height/width; channel count is preserved.
///
/// Axes whose length is unchanged are copied untouched, so resizing to the
/// same dims is the identity. Values are not clamped.
pub fn resize_video(v: &Video, target: Dims, filter: ResizeFilter) -> Result<Video> {
    if target.is_empty() {
        return Err(Error::invalid(format!("resize target {target} has a zero axis")));
    }
    let (spatial, temporal) = match filter {
        ResizeFilter::CubicSpatialLinearTemporal => (Kernel::Cubic, Kernel::Linear),
        ResizeFilter::Nearest => (Kernel::Nearest, Kernel::Nearest),
        ResizeFilter::Area => (Kernel::Area, Kernel::Area),
    };
    let c = v.channels;
    let mut cur = v.dims;
    let mut data = std::borrow::Cow::Borrowed(&v.data[..]);
    if target.t != cur.t {
        data = resample_axis(&data, 1, cur.t, cur.h * cur.w * c, target.t, temporal).into();
        cur.t = target.t;
    }
    if target.h != cur.h {
        data = resample_axis(&data, cur.t, cur.h, cur.w * c, target.h, spatial).into();
        cur.h = target.h;
    }
    if target.w != cur.w {
        data = resample_axis(&data, cur.t * cur.h, cur.w, c, target.w, spatial).into();
    }
    Ok(Video::from_raw(target, c, data.into_owned()))
}
