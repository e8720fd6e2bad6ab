use super::{at_least_patch, child_seed, GenerationConfig, LevelRunner, PipelineTrace, SeedUse};
use crate::error::Result;
use crate::pyramid::{add_noise, build_pyramid, NoiseSpec};
use crate::video::{resize_video, Dims, ResizeFilter, Video};
use crate::vpnn::QKVBundle;

/// Output extent at every pyramid level for the configured output scaling.
pub fn output_dims(level_dims: &[Dims], cfg: &GenerationConfig) -> Vec<Dims> {
    let (ts, ss) = (cfg.output_time_scale, cfg.output_space_scale);
    level_dims
        .iter()
        .map(|d| at_least_patch(d.scaled(ts, ss, ss), cfg.patch_shape))
        .collect()
}

/// Sample a new video with the patch statistics of `x`.
pub fn generate(x: &Video, cfg: &GenerationConfig) -> Result<Video> {
    Ok(generate_traced(x, cfg)?.0)
}

pub fn generate_traced(x: &Video, cfg: &GenerationConfig) -> Result<(Video, PipelineTrace)> {
    cfg.validate()?;
    let pyr = build_pyramid(x, cfg.scale_factor, cfg.min_dims)?;
    let dims = pyr.dims();
    let out = output_dims(&dims, cfg);
    let coarsest = pyr.coarsest_index();
    let mut trace = PipelineTrace::default();

    let x_n = pyr.level(coarsest);
    let noise = NoiseSpec {
        seed: child_seed(cfg.seed, SeedUse::Noise, coarsest, 0),
        ..cfg.noise
    };
    let mut y = add_noise(&resize_video(x_n, out[coarsest], ResizeFilter::default())?, noise)?;
    let mut runner = LevelRunner::new(cfg, coarsest, out[coarsest]);
    for _ in 0..cfg.em_iters_per_level {
        y = runner.step(&QKVBundle::unweighted(y, x_n.clone(), x_n.clone())?)?;
    }
    trace.levels.push(runner.trace);

    for n in (0..coarsest).rev() {
        let x_n = pyr.level(n);
        let q = resize_video(&y, out[n], ResizeFilter::default())?;
        let k = resize_video(pyr.level(n + 1), dims[n], ResizeFilter::default())?;
        let mut runner = LevelRunner::new(cfg, n, out[n]);
        y = runner.step(&QKVBundle::unweighted(q, k, x_n.clone())?)?;
        for _ in 1..cfg.em_iters_per_level {
            y = runner.step(&QKVBundle::unweighted(y, x_n.clone(), x_n.clone())?)?;
        }
        trace.levels.push(runner.trace);
    }
    Ok((y.clamp01(), trace))
}
