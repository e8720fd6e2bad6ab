use super::{GenerationConfig, LevelRunner, PipelineTrace};
use crate::error::{Error, Result};
use crate::pyramid::{build_pyramid, level_dims, nearest_pyramid};
use crate::video::{resize_video, ResizeFilter, Video};
use crate::vpnn::QKVBundle;

/// Content layout plus style appearance, each with its quantized motion
/// raster (one channel of bin centroids, same extent as its video).
#[derive(Clone, Debug)]
pub struct AnalogyInputs {
    pub content: Video,
    pub style: Video,
    pub dyn_content: Video,
    pub dyn_style: Video,
    /// Weight of the motion channel next to the RGB guidance at finer levels.
    pub dyn_weight: f32,
}

impl AnalogyInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, d, v) in [
            ("content", &self.dyn_content, &self.content),
            ("style", &self.dyn_style, &self.style),
        ] {
            if d.channels() != 1 {
                return Err(Error::invalid(format!("{name} motion raster must have one channel")));
            }
            if d.dims() != v.dims() {
                return Err(Error::invalid(format!(
                    "{name} motion raster is {} but the video is {}",
                    d.dims(),
                    v.dims()
                )));
            }
        }
        if !(self.dyn_weight >= 0.0 && self.dyn_weight.is_finite()) {
            return Err(Error::invalid("dyn_weight must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Motion guide stacked in front of the RGB channels, with weights.
pub(crate) fn guided(dyn_raster: &Video, rgb: &Video, dyn_weight: f32) -> Result<(Video, Vec<f32>)> {
    let v = Video::concat_channels(&[dyn_raster, rgb])?;
    let mut w = vec![1.0; v.channels()];
    w[0] = dyn_weight;
    Ok((v, w))
}

/// Render the content's motion layout with the style's appearance.
///
/// The coarsest level matches on motion alone. Every later step matches on
/// motion plus the current RGB estimate; the first step at a finer level
/// compares against the style upscaled from the coarser level so both sides
/// carry the same blur.
pub fn analogy(a: &AnalogyInputs, cfg: &GenerationConfig) -> Result<Video> {
    Ok(analogy_traced(a, cfg)?.0)
}

pub fn analogy_traced(a: &AnalogyInputs, cfg: &GenerationConfig) -> Result<(Video, PipelineTrace)> {
    cfg.validate()?;
    a.validate()?;
    let s_pyr = build_pyramid(&a.style, cfg.scale_factor, cfg.min_dims)?;
    let c_dims_all = level_dims(a.content.dims(), cfg.scale_factor, cfg.min_dims)?;
    let levels = s_pyr.levels.len().min(c_dims_all.len());
    let s_dims: Vec<_> = s_pyr.dims()[..levels].to_vec();
    let c_dims = &c_dims_all[..levels];
    let dyn_s = nearest_pyramid(&a.dyn_style, &s_dims)?;
    let dyn_c = nearest_pyramid(&a.dyn_content, c_dims)?;
    let coarsest = levels - 1;
    let w = a.dyn_weight;
    let mut trace = PipelineTrace::default();

    let s_n = s_pyr.level(coarsest);
    let mut runner = LevelRunner::new(cfg, coarsest, c_dims[coarsest]);
    let mut y = runner.step(&QKVBundle::unweighted(
        dyn_c[coarsest].clone(),
        dyn_s[coarsest].clone(),
        s_n.clone(),
    )?)?;
    let (k_full, kw) = guided(&dyn_s[coarsest], s_n, w)?;
    for _ in 1..cfg.em_iters_per_level {
        let (q, _) = guided(&dyn_c[coarsest], &y, w)?;
        y = runner.step(&QKVBundle::new(q, k_full.clone(), s_n.clone(), kw.clone())?)?;
    }
    trace.levels.push(runner.trace);

    for n in (0..coarsest).rev() {
        let s_n = s_pyr.level(n);
        let mut runner = LevelRunner::new(cfg, n, c_dims[n]);
        let up = resize_video(&y, c_dims[n], ResizeFilter::default())?;
        let s_up = resize_video(s_pyr.level(n + 1), s_dims[n], ResizeFilter::default())?;
        let (q, qw) = guided(&dyn_c[n], &up, w)?;
        let (k, _) = guided(&dyn_s[n], &s_up, w)?;
        y = runner.step(&QKVBundle::new(q, k, s_n.clone(), qw)?)?;
        let (k_full, kw) = guided(&dyn_s[n], s_n, w)?;
        for _ in 1..cfg.em_iters_per_level {
            let (q, _) = guided(&dyn_c[n], &y, w)?;
            y = runner.step(&QKVBundle::new(q, k_full.clone(), s_n.clone(), kw.clone())?)?;
        }
        trace.levels.push(runner.trace);
    }
    Ok((y.clamp01(), trace))
}
