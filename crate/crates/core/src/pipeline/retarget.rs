use super::{at_least_patch, GenerationConfig, LevelRunner, PipelineTrace};
use crate::error::{Error, Result};
use crate::pyramid::build_pyramid;
use crate::video::{resize_video, Dims, ResizeFilter, Video};
use crate::vpnn::QKVBundle;

/// Largest per-stage change of any axis.
const STAGE_RATIO: f64 = 1.25;

/// Number of coarsest-level passes used to reach `target` from `src`.
pub fn retarget_stages(src: Dims, target: Dims) -> usize {
    let worst = src
        .as_array()
        .iter()
        .zip(target.as_array())
        .map(|(&s, t)| (t as f64 / s as f64).ln().abs())
        .fold(0.0, f64::max);
    if worst <= STAGE_RATIO.ln() + 1e-12 {
        1
    } else {
        (worst / STAGE_RATIO.ln() - 1e-9).ceil() as usize
    }
}

/// Resynthesize `x` at new frame count and/or frame size.
pub fn retarget(x: &Video, target: Dims, cfg: &GenerationConfig) -> Result<Video> {
    Ok(retarget_traced(x, target, cfg)?.0)
}

pub fn retarget_traced(x: &Video, target: Dims, cfg: &GenerationConfig) -> Result<(Video, PipelineTrace)> {
    cfg.validate()?;
    if target.is_empty() {
        return Err(Error::invalid(format!("retarget size {target} has a zero axis")));
    }
    if !target.covers(cfg.patch_shape.as_dims()) {
        return Err(Error::invalid(format!("retarget size {target} is smaller than the patch")));
    }
    let src = x.dims();
    let ratio = [
        target.t as f64 / src.t as f64,
        target.h as f64 / src.h as f64,
        target.w as f64 / src.w as f64,
    ];
    let pyr = build_pyramid(x, cfg.scale_factor, cfg.min_dims)?;
    let dims = pyr.dims();
    let mut out: Vec<Dims> = dims
        .iter()
        .map(|d| at_least_patch(d.scaled(ratio[0], ratio[1], ratio[2]), cfg.patch_shape))
        .collect();
    out[0] = target;
    let coarsest = pyr.coarsest_index();
    let stages = retarget_stages(src, target);
    let mut trace = PipelineTrace::default();

    let x_n = pyr.level(coarsest);
    let mut y = x_n.clone();
    for s in 1..=stages {
        let d = if s == stages {
            out[coarsest]
        } else {
            let f = s as f64 / stages as f64;
            at_least_patch(
                dims[coarsest].scaled(ratio[0].powf(f), ratio[1].powf(f), ratio[2].powf(f)),
                cfg.patch_shape,
            )
        };
        y = resize_video(&y, d, ResizeFilter::default())?;
        let mut runner = LevelRunner::new(cfg, coarsest, d);
        runner.iter_offset = (s - 1) * cfg.em_iters_per_level;
        for _ in 0..cfg.em_iters_per_level {
            y = runner.step(&QKVBundle::unweighted(y, x_n.clone(), x_n.clone())?)?;
        }
        trace.levels.push(runner.trace);
    }

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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_counts() {
        let s = Dims::new(13, 64, 64);
        assert_eq!(retarget_stages(s, s), 1);
        assert_eq!(retarget_stages(s, Dims::new(13, 64, 80)), 1);
        // 7/13 = 0.538: log_1.25(1.857) = 2.77 -> 3
        assert_eq!(retarget_stages(s, Dims::new(7, 64, 64)), 3);
        // halving: log_1.25(2) = 3.1 -> 4
        assert_eq!(retarget_stages(s, Dims::new(13, 64, 32)), 4);
    }
}
