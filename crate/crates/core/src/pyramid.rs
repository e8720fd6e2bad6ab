//! Space-time pyramids and coarse-level noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::video::{resize_video, Dims, ResizeFilter, Video};

/// Per-level downscale ratios. Spatial axes share one ratio.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScaleFactor {
    pub r_t: f64,
    pub r_h: f64,
    pub r_w: f64,
}

impl ScaleFactor {
    pub fn new(r_t: f64, r_h: f64, r_w: f64) -> Result<Self> {
        let s = ScaleFactor { r_t, r_h, r_w };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(r: f64) -> Result<Self> {
        ScaleFactor::new(r, r, r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r_t", self.r_t), ("r_h", self.r_h), ("r_w", self.r_w)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid(format!("scale factor {name}={r} outside (0,1]")));
            }
        }
        if self.r_t == 1.0 && self.r_h == 1.0 && self.r_w == 1.0 {
            return Err(Error::invalid("scale factor (1,1,1) does not contract"));
        }
        Ok(())
    }

    pub fn apply(&self, d: Dims) -> Dims {
        d.scaled(self.r_t, self.r_h, self.r_w)
    }
}

impl Default for ScaleFactor {
    fn default() -> Self {
        ScaleFactor {
            r_t: 0.75,
            r_h: 0.75,
            r_w: 0.75,
        }
    }
}

/// Smallest coarsest-level extent; fits a 3x7x7 patch with room to move.
pub const DEFAULT_MIN_DIMS: Dims = Dims::new(3, 21, 21);

/// Dims of every pyramid level, finest first, without touching pixel data.
pub fn level_dims(src: Dims, r: ScaleFactor, min_dims: Dims) -> Result<Vec<Dims>> {
    r.validate()?;
    if !src.covers(min_dims) {
        return Err(Error::invalid(format!(
            "input {src} is smaller than the pyramid minimum {min_dims}"
        )));
    }
    let mut out = vec![src];
    loop {
        let prev = *out.last().unwrap();
        let next = r.apply(prev);
        if !next.covers(min_dims) || next == prev {
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// Progressively downscaled copies of one video; `levels[0]` is the source.
#[derive(Clone, Debug)]
pub struct SpaceTimePyramid {
    pub levels: Vec<Video>,
    pub factor: ScaleFactor,
}

impl SpaceTimePyramid {
    pub fn coarsest_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &Video {
        &self.levels[n]
    }

    pub fn dims(&self) -> Vec<Dims> {
        self.levels.iter().map(Video::dims).collect()
    }
}

/// Build the pyramid `x_0 .. x_N`, each level resized from the previous one.
pub fn build_pyramid(v: &Video, r: ScaleFactor, min_dims: Dims) -> Result<SpaceTimePyramid> {
    let dims = level_dims(v.dims(), r, min_dims)?;
    let mut levels = Vec::with_capacity(dims.len());
    levels.push(v.clone());
    for d in &dims[1..] {
        let next = resize_video(levels.last().unwrap(), *d, ResizeFilter::default())?;
        levels.push(next);
    }
    Ok(SpaceTimePyramid { levels, factor: r })
}

/// Resize a label-like raster onto each dims in turn with nearest sampling
/// from the full-resolution source, so no label is ever interpolated.
pub fn nearest_pyramid(v: &Video, dims: &[Dims]) -> Result<Vec<Video>> {
    dims.iter()
        .map(|d| {
            if *d == v.dims() {
                Ok(v.clone())
            } else {
                resize_video(v, *d, ResizeFilter::Nearest)
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    pub temporal_replicate: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma: 0.5,
            seed: 0,
            temporal_replicate: true,
        }
    }
}

/// The noise raster `add_noise` would add to a video of `dims x channels`.
pub fn noise_field(dims: Dims, channels: usize, spec: NoiseSpec) -> Result<Video> {
    if spec.sigma < 0.0 || !spec.sigma.is_finite() {
        return Err(Error::invalid(format!("noise sigma {} must be >= 0", spec.sigma)));
    }
    let n = dims.voxels() * channels;
    if spec.sigma == 0.0 {
        return Video::new(dims, channels, vec![0.0; n]);
    }
    let normal = Normal::new(0.0f32, spec.sigma as f32).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draws = if spec.temporal_replicate { n / dims.t } else { n };
    let z: Vec<f32> = (0..draws).map(|_| normal.sample(&mut rng)).collect();
    let data = (0..n).map(|i| z[i % draws]).collect();
    Ok(Video::from_raw(dims, channels, data))
}

/// Add i.i.d. Gaussian noise. With `temporal_replicate` one `h x w x c`
/// slice is drawn and added to every frame. Values are not clamped.
pub fn add_noise(v: &Video, spec: NoiseSpec) -> Result<Video> {
    let z = noise_field(v.dims(), v.channels(), spec)?;
    if spec.sigma == 0.0 {
        return Ok(v.clone());
    }
    let data = v.data().iter().zip(z.data()).map(|(a, b)| a + b).collect();
    Ok(Video::from_raw(v.dims(), v.channels(), data))
}
