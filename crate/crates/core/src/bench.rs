//! Wall time of generation against input size.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::pipeline::{generate, GenerationConfig};
use crate::video::{resize_video, Dims, ResizeFilter, Video};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BenchEntry {
    pub dims: Dims,
    pub voxels: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub entries: Vec<BenchEntry>,
    /// Least-squares slope of ln(seconds) against ln(voxels). Needs at
    /// least two distinct sizes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Time [`generate`] on `input(dims)` for every size in `sizes`.
pub fn bench(sizes: &[Dims], cfg: &GenerationConfig, mut input: impl FnMut(Dims) -> Video) -> Result<BenchReport> {
    if sizes.is_empty() {
        return Err(Error::invalid("bench needs at least one resolution"));
    }
    cfg.validate()?;
    let mut entries = Vec::with_capacity(sizes.len());
    for &d in sizes {
        let x = input(d);
        if x.dims() != d {
            return Err(Error::invalid(format!("bench input is {} not {d}", x.dims())));
        }
        let start = Instant::now();
        generate(&x, cfg)?;
        entries.push(BenchEntry {
            dims: d,
            voxels: d.voxels(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let lx: Vec<f64> = entries.iter().map(|e| (e.voxels as f64).ln()).collect();
    let ly: Vec<f64> = entries.iter().map(|e| e.seconds.max(1e-9).ln()).collect();
    Ok(BenchReport {
        schema: crate::metrics::REPORT_SCHEMA,
        slope: fit_slope(&lx, &ly),
        entries,
    })
}

/// Bench input made by resizing one clip to each size.
pub fn resized(source: &Video) -> impl FnMut(Dims) -> Video + '_ {
    move |d| resize_video(source, d, ResizeFilter::default()).expect("valid bench size")
}
