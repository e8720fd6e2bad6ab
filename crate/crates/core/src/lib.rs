//! Generate new videos from a single example by repeatedly replacing every
//! space-time patch with its nearest neighbor from the example, coarse to
//! fine over a space-time pyramid.

pub mod dynamics;
pub mod bench;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod metrics;
pub mod nnf;
pub mod pipeline;
pub mod pyramid;
pub mod video;
pub mod vpnn;

pub use error::{Error, Result};
pub use nnf::{brute_force_nnf, patch_distance, patchmatch_nnf, InitMode, KeyMask, NNField, PatchShape, SolverParams};
pub use pipeline::{analogy, generate, inpaint, retarget, AnalogyInputs, GenerationConfig, InpaintMask};
pub use pyramid::{add_noise, build_pyramid, noise_field, NoiseSpec, ScaleFactor, SpaceTimePyramid};
pub use video::{resize_video, Dims, ResizeFilter, Video};
pub use vpnn::{fold_median, replace, unfold, vpnn_step, PatchSet, QKVBundle};
