use super::{GenerationConfig, LevelRunner, PipelineTrace};
use crate::error::{Error, Result};
use crate::nnf::KeyMask;
use crate::pyramid::build_pyramid;
use crate::video::{resize_video, Dims, ResizeFilter, Video};
use crate::vpnn::QKVBundle;

/// One-channel `{0, 1}` raster; `1` marks voxels to synthesize.
#[derive(Clone, Debug, PartialEq)]
pub struct InpaintMask {
    mask: Video,
}

impl InpaintMask {
    pub fn new(mask: Video) -> Result<Self> {
        if mask.channels() != 1 {
            return Err(Error::invalid("inpainting mask must have one channel"));
        }
        if mask.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("inpainting mask values must be 0 or 1"));
        }
        if mask.data().iter().all(|&v| v == 1.0) {
            return Err(Error::invalid("inpainting mask covers the whole video"));
        }
        Ok(InpaintMask { mask })
    }

    /// Mask from any raster: a voxel is a hole when its first channel > 0.5.
    pub fn from_threshold(v: &Video) -> Result<Self> {
        let one = v.select_channels(&[0])?;
        InpaintMask::new(one.map(|x| (x > 0.5) as u8 as f32))
    }

    /// A box-shaped hole `[t0,t1) x [h0,h1) x [w0,w1)`.
    pub fn boxed(dims: Dims, t: (usize, usize), h: (usize, usize), w: (usize, usize)) -> Result<Self> {
        let m = Video::from_fn(dims, 1, |tt, hh, ww, _| {
            let inside = (t.0..t.1).contains(&tt) && (h.0..h.1).contains(&hh) && (w.0..w.1).contains(&ww);
            inside as u8 as f32
        })?;
        InpaintMask::new(m)
    }

    pub fn video(&self) -> &Video {
        &self.mask
    }

    pub fn dims(&self) -> Dims {
        self.mask.dims()
    }

    pub fn is_hole(&self, i: usize) -> bool {
        self.mask.data()[i] != 0.0
    }

    pub fn hole_count(&self) -> usize {
        self.mask.data().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Hole masks for every level: a coarse voxel is a hole when more than half
/// of its footprint in the full-resolution mask is.
pub fn mask_pyramid(m: &InpaintMask, dims: &[Dims]) -> Result<Vec<Video>> {
    dims.iter()
        .map(|d| {
            if *d == m.dims() {
                return Ok(m.mask.clone());
            }
            let frac = resize_video(&m.mask, *d, ResizeFilter::Area)?;
            Ok(frac.map(|f| (f > 0.5) as u8 as f32))
        })
        .collect()
}

/// Per-channel mean of the voxels where `hole` is zero.
fn known_mean(v: &Video, hole: &Video) -> Option<Vec<f32>> {
    let c = v.channels();
    let mut sum = vec![0.0f64; c];
    let mut n = 0usize;
    for (px, &h) in v.data().chunks_exact(c).zip(hole.data()) {
        if h == 0.0 {
            n += 1;
            for (s, &x) in sum.iter_mut().zip(px) {
                *s += x as f64;
            }
        }
    }
    (n > 0).then(|| sum.iter().map(|s| (*s / n as f64) as f32).collect())
}

/// Replace hole voxels of `v` by `fill`.
fn fill_hole(v: &Video, hole: &Video, fill: &[f32]) -> Video {
    let c = v.channels();
    let mut data = v.data().to_vec();
    for (px, &h) in data.chunks_exact_mut(c).zip(hole.data()) {
        if h != 0.0 {
            px.copy_from_slice(fill);
        }
    }
    Video::from_raw(v.dims(), c, data)
}

/// Take `known` everywhere outside the hole and `synth` inside it.
fn reset_known(synth: &Video, known: &Video, hole: &Video) -> Video {
    let c = synth.channels();
    let mut data = known.data().to_vec();
    for ((px, s), &h) in data.chunks_exact_mut(c).zip(synth.data().chunks_exact(c)).zip(hole.data()) {
        if h != 0.0 {
            px.copy_from_slice(s);
        }
    }
    Video::from_raw(known.dims(), c, data)
}

/// Fill the masked region of `x` with content coherent with the rest of it.
/// Voxels outside the hole are returned unchanged.
pub fn inpaint(x: &Video, m: &InpaintMask, cfg: &GenerationConfig) -> Result<Video> {
    Ok(inpaint_traced(x, m, cfg)?.0)
}

pub fn inpaint_traced(x: &Video, m: &InpaintMask, cfg: &GenerationConfig) -> Result<(Video, PipelineTrace)> {
    cfg.validate()?;
    if m.dims() != x.dims() {
        return Err(Error::invalid(format!(
            "mask is {} but the video is {}",
            m.dims(),
            x.dims()
        )));
    }
    let mut trace = PipelineTrace::default();
    if m.hole_count() == 0 {
        return Ok((x.clone(), trace));
    }
    // Hole content is unknown; neutralize it before it bleeds into coarse levels.
    let mean = known_mean(x, &m.mask).expect("mask is not all hole");
    let x_known = fill_hole(x, &m.mask, &mean);
    let pyr = build_pyramid(&x_known, cfg.scale_factor, cfg.min_dims)?;
    let dims = pyr.dims();
    let holes = mask_pyramid(m, &dims)?;
    let key_masks = holes
        .iter()
        .map(|h| {
            let km = KeyMask::excluding_hole(h, cfg.patch_shape)?;
            if km.valid_count() == 0 {
                return Err(Error::Unsatisfiable(format!(
                    "the hole touches every {}x{}x{} patch of the {} level",
                    cfg.patch_shape.t,
                    cfg.patch_shape.h,
                    cfg.patch_shape.w,
                    h.dims()
                )));
            }
            Ok(km)
        })
        .collect::<Result<Vec<_>>>()?;
    let coarsest = pyr.coarsest_index();

    let x_n = pyr.level(coarsest);
    let hole = &holes[coarsest];
    let fill = known_mean(x_n, hole).ok_or_else(|| Error::Unsatisfiable("no known voxels at the coarsest level".into()))?;
    let mut y = fill_hole(x_n, hole, &fill);
    let mut runner = LevelRunner::new(cfg, coarsest, dims[coarsest]);
    runner.key_mask = Some(&key_masks[coarsest]);
    for _ in 0..cfg.em_iters_per_level {
        let s = runner.step(&QKVBundle::unweighted(y, x_n.clone(), x_n.clone())?)?;
        y = reset_known(&s, x_n, hole);
    }
    trace.levels.push(runner.trace);

    for n in (0..coarsest).rev() {
        let x_n = pyr.level(n);
        let hole = &holes[n];
        let mut runner = LevelRunner::new(cfg, n, dims[n]);
        runner.key_mask = Some(&key_masks[n]);
        let q = reset_known(&resize_video(&y, dims[n], ResizeFilter::default())?, x_n, hole);
        let k = resize_video(pyr.level(n + 1), dims[n], ResizeFilter::default())?;
        let s = runner.step(&QKVBundle::unweighted(q, k, x_n.clone())?)?;
        y = reset_known(&s, x_n, hole);
        for _ in 1..cfg.em_iters_per_level {
            let s = runner.step(&QKVBundle::unweighted(y, x_n.clone(), x_n.clone())?)?;
            y = reset_known(&s, x_n, hole);
        }
        trace.levels.push(runner.trace);
    }
    Ok((reset_known(&y.clamp01(), x, &m.mask), trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_validation() {
        let d = Dims::new(2, 3, 3);
        assert!(InpaintMask::new(Video::filled(d, 1, 1.0).unwrap()).is_err());
        assert!(InpaintMask::new(Video::filled(d, 1, 0.5).unwrap()).is_err());
        assert!(InpaintMask::new(Video::filled(d, 2, 0.0).unwrap()).is_err());
        assert_eq!(InpaintMask::new(Video::filled(d, 1, 0.0).unwrap()).unwrap().hole_count(), 0);
    }

    #[test]
    fn coarse_hole_needs_majority_coverage() {
        let dims = Dims::new(2, 4, 4);
        // 3 of every 4 voxels in the left 2x2 spatial blocks are hole
        let m = InpaintMask::new(
            Video::from_fn(dims, 1, |_, h, w, _| (w < 2 && !(h % 2 == 0 && w == 0)) as u8 as f32).unwrap(),
        )
        .unwrap();
        let p = mask_pyramid(&m, &[dims, Dims::new(2, 2, 2)]).unwrap();
        assert_eq!(p[0], *m.video());
        assert_eq!(p[1].data(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn reset_keeps_known_voxels() {
        let d = Dims::new(1, 2, 2);
        let known = Video::from_fn(d, 1, |_, h, w, _| (h * 2 + w) as f32).unwrap();
        let synth = Video::filled(d, 1, 9.0).unwrap();
        let hole = Video::new(d, 1, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(reset_known(&synth, &known, &hole).data(), &[0.0, 9.0, 2.0, 3.0]);
    }
}
