//! Coarse-to-fine synthesis over a space-time pyramid.
//!
//! Every pipeline follows the same skeleton: solve the coarsest level from
//! an initial guess, then at each finer level start from the upscaled
//! result and run a few search-and-vote refinements against that level of
//! the input pyramid.

mod analogy;
mod generate;
mod inpaint;
mod retarget;

pub use analogy::{analogy, analogy_traced, AnalogyInputs};
pub use generate::{generate, generate_traced, output_dims};
pub use inpaint::{inpaint, inpaint_traced, mask_pyramid, InpaintMask};
pub use retarget::{retarget, retarget_stages, retarget_traced};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nnf::{KeyMask, NNField, PatchShape, SolverParams};
use crate::pyramid::{NoiseSpec, ScaleFactor, DEFAULT_MIN_DIMS};
use crate::video::{Dims, Video};
use crate::vpnn::{vpnn_step_with, QKVBundle, StepOptions};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenerationConfig {
    pub scale_factor: ScaleFactor,
    /// Coarsest-level noise. Its `seed` is ignored: pipelines derive every
    /// seed from `seed` below.
    pub noise: NoiseSpec,
    pub em_iters_per_level: usize,
    /// Solver settings; `seed` is likewise replaced per step.
    pub solver: SolverParams,
    pub patch_shape: PatchShape,
    pub output_time_scale: f64,
    pub output_space_scale: f64,
    /// Smallest allowed extent of the coarsest pyramid level.
    pub min_dims: Dims,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            scale_factor: ScaleFactor::default(),
            noise: NoiseSpec::default(),
            em_iters_per_level: 5,
            solver: SolverParams::default(),
            patch_shape: PatchShape::default(),
            output_time_scale: 0.85,
            output_space_scale: 1.0,
            min_dims: DEFAULT_MIN_DIMS,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        self.scale_factor.validate()?;
        self.solver.validate()?;
        if self.em_iters_per_level == 0 {
            return Err(Error::invalid("em_iters_per_level must be >= 1"));
        }
        if !(self.output_time_scale > 0.0 && self.output_time_scale <= 1.0) {
            return Err(Error::invalid(format!(
                "output_time_scale {} outside (0,1]",
                self.output_time_scale
            )));
        }
        if !(self.output_space_scale > 0.0 && self.output_space_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "output_space_scale {} must be positive",
                self.output_space_scale
            )));
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be >= 0"));
        }
        self.patch_shape.grid(self.min_dims).map_err(|_| {
            Error::invalid(format!(
                "pyramid minimum {} is smaller than the patch shape",
                self.min_dims
            ))
        })?;
        Ok(())
    }
}

/// What a step seed is used for; part of the derivation key.
#[derive(Clone, Copy)]
#[repr(u64)]
pub(crate) enum SeedUse {
    Noise = 1,
    Solve = 2,
}

/// Child seed for one `(use, level, iteration)` slot. Each slot reads its own
/// ChaCha stream, so adding levels or iterations never perturbs the others.
pub(crate) fn child_seed(master: u64, what: SeedUse, level: usize, iter: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((what as u64) << 56) | ((level as u64) << 28) | iter as u64);
    rng.next_u64()
}

/// Mean NNF distance of every step, grouped by level (coarsest first).
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct PipelineTrace {
    pub levels: Vec<LevelTrace>,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct LevelTrace {
    pub level: usize,
    pub dims: Dims,
    pub step_mean_distance: Vec<f64>,
}

/// Shared driver for one level: a sequence of steps where each step's
/// query is built from the current estimate.
pub(crate) struct LevelRunner<'a> {
    pub cfg: &'a GenerationConfig,
    pub level: usize,
    pub key_mask: Option<&'a KeyMask>,
    /// Added to the step index when deriving seeds.
    pub iter_offset: usize,
    pub trace: LevelTrace,
    /// Field of the previous step, reused as the next step's starting point.
    last: Option<NNField>,
}

impl<'a> LevelRunner<'a> {
    pub fn new(cfg: &'a GenerationConfig, level: usize, dims: Dims) -> Self {
        LevelRunner {
            cfg,
            level,
            key_mask: None,
            iter_offset: 0,
            trace: LevelTrace {
                level,
                dims,
                step_mean_distance: Vec::new(),
            },
            last: None,
        }
    }

    pub fn step(&mut self, bundle: &QKVBundle) -> Result<Video> {
        let iter = self.iter_offset + self.trace.step_mean_distance.len();
        let params = SolverParams {
            seed: child_seed(self.cfg.seed, SeedUse::Solve, self.level, iter),
            ..self.cfg.solver
        };
        // query and key sizes are fixed within a level, so the previous
        // field always fits
        let opts = StepOptions {
            key_mask: self.key_mask,
            initial: self.last.as_ref(),
            ..Default::default()
        };
        let out = vpnn_step_with(bundle, self.cfg.patch_shape, params, opts)?;
        self.trace.step_mean_distance.push(out.nnf.mean_distance());
        self.last = Some(out.nnf);
        Ok(out.video)
    }
}

/// Output-level dims never drop below the patch.
pub(crate) fn at_least_patch(d: Dims, shape: PatchShape) -> Dims {
    d.max(shape.as_dims())
}
