//! Motion descriptors: optical-flow magnitude quantized into a few bins.
//!
//! The quantized raster stores bin centroids rather than bin ids, so two
//! videos quantized against the same centroids can be compared directly
//! as an extra guidance channel.

mod flo;
mod flow;
mod kmeans;

use std::path::{Path, PathBuf};

pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FlowField};
pub use flow::estimate_flow_magnitude;
pub use kmeans::{kmeans_1d, nearest, KMeans1D};

use crate::error::{Error, Result};
use crate::video::{Dims, Video};

pub const DEFAULT_BINS: usize = 5;

/// Magnitude rasters from a sequence of `.flo` files, one per consecutive
/// frame pair. The result has `paths.len() + 1` frames, the last repeating
/// the one before it.
pub fn load_flo<P: AsRef<Path>>(paths: &[P]) -> Result<Video> {
    if paths.is_empty() {
        return Err(Error::invalid("no .flo files given"));
    }
    let mut size = None;
    let mut data = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let f = read_flo(p)?;
        match size {
            None => size = Some((f.height, f.width)),
            Some(s) if s != (f.height, f.width) => {
                return Err(Error::Format {
                    path: Some(p.to_path_buf()),
                    offset: Some(4),
                    message: format!(
                        "flow size {}x{} differs from earlier frames ({}x{})",
                        f.height, f.width, s.0, s.1
                    ),
                });
            }
            _ => {}
        }
        data.extend(f.magnitudes());
    }
    let (h, w) = size.unwrap();
    let last = data[data.len() - h * w..].to_vec();
    data.extend(last);
    Video::new(Dims::new(paths.len() + 1, h, w), 1, data)
}

/// Bin centroids (ascending) and per-voxel bin ids.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedDynamics {
    /// One channel holding bin ids as `0.0, 1.0, ...`.
    pub labels: Video,
    pub centroids: Vec<f64>,
}

impl QuantizedDynamics {
    /// Replace every label by its centroid.
    pub fn centroid_video(&self) -> Video {
        let c = &self.centroids;
        self.labels.map(|l| c[l as usize] as f32)
    }

    pub fn bins(&self) -> usize {
        self.centroids.len()
    }
}

fn check_magnitudes(m: &Video) -> Result<()> {
    if m.channels() != 1 {
        return Err(Error::invalid("flow magnitude must have one channel"));
    }
    if m.data().iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("flow magnitudes must be nonnegative"));
    }
    Ok(())
}

/// 1-D k-means over every magnitude value.
pub fn kmeans_quantize(m: &Video, k: usize, seed: u64) -> Result<QuantizedDynamics> {
    check_magnitudes(m)?;
    let km = kmeans_1d(m.data(), k, seed);
    let labels = km.labels.iter().map(|&l| l as f32).collect();
    Ok(QuantizedDynamics {
        labels: Video::new(m.dims(), 1, labels)?,
        centroids: km.centroids,
    })
}

/// Label `m` against fixed centroids (nearest, ties to the lower bin).
pub fn quantize_with(m: &Video, centroids: &[f64]) -> Result<QuantizedDynamics> {
    check_magnitudes(m)?;
    if centroids.is_empty() {
        return Err(Error::invalid("no centroids"));
    }
    let labels = m.map(|x| nearest(centroids, x as f64) as f32);
    Ok(QuantizedDynamics {
        labels,
        centroids: centroids.to_vec(),
    })
}

/// Where motion magnitudes come from.
#[derive(Clone, Debug, PartialEq)]
pub enum FlowSource {
    /// Built-in block matcher.
    Builtin { window: usize, max_disp: usize },
    /// Externally computed flow, one file per frame pair.
    Flo(Vec<PathBuf>),
}

impl Default for FlowSource {
    fn default() -> Self {
        FlowSource::Builtin { window: 7, max_disp: 4 }
    }
}

pub fn flow_magnitude(v: &Video, source: &FlowSource) -> Result<Video> {
    match source {
        FlowSource::Builtin { window, max_disp } => estimate_flow_magnitude(v, *window, *max_disp),
        FlowSource::Flo(paths) => {
            let m = load_flo(paths)?;
            if m.dims() != v.dims() {
                return Err(Error::invalid(format!(
                    "flow files describe {} but the video is {}",
                    m.dims(),
                    v.dims()
                )));
            }
            Ok(m)
        }
    }
}

/// Quantized motion raster of one video, holding centroid values.
pub fn dyn_video(v: &Video, k: usize, seed: u64, source: &FlowSource) -> Result<Video> {
    let m = flow_magnitude(v, source)?;
    Ok(kmeans_quantize(&m, k, seed)?.centroid_video())
}

/// Motion rasters for a content/style pair, quantized jointly so both use
/// the same bins.
#[derive(Clone, Debug)]
pub struct DynPair {
    pub content: QuantizedDynamics,
    pub style: QuantizedDynamics,
}

pub fn dyn_pair(content: &Video, style: &Video, k: usize, seed: u64, sources: (&FlowSource, &FlowSource)) -> Result<DynPair> {
    let mc = flow_magnitude(content, sources.0)?;
    let ms = flow_magnitude(style, sources.1)?;
    let mut all = Vec::with_capacity(mc.data().len() + ms.data().len());
    all.extend_from_slice(mc.data());
    all.extend_from_slice(ms.data());
    let km = kmeans_1d(&all, k, seed);
    Ok(DynPair {
        content: quantize_with(&mc, &km.centroids)?,
        style: quantize_with(&ms, &km.centroids)?,
    })
}
