use patchvid::dynamics::{dyn_pair, FlowSource};
use patchvid::fixtures::{disc_on_flat, moving_disc, moving_square, periodic_texture};
use patchvid::metrics::{coherence, coherence_masked, patches_touching};
use patchvid::pipeline::{analogy_traced, generate_traced, output_dims};
use patchvid::{
    analogy, generate, inpaint, retarget, AnalogyInputs, Dims, Error, GenerationConfig, InitMode, InpaintMask, KeyMask,
    PatchShape, Video,
};

fn small() -> GenerationConfig {
    GenerationConfig {
        min_dims: Dims::new(3, 15, 15),
        patch_shape: PatchShape::new(3, 5, 5),
        ..Default::default()
    }
}

fn noiseless_identity(mut cfg: GenerationConfig) -> GenerationConfig {
    cfg.noise.sigma = 0.0;
    cfg.output_time_scale = 1.0;
    cfg.solver.init = InitMode::Identity;
    cfg
}

#[test]
fn generate_is_deterministic_and_seed_dependent() {
    let x = periodic_texture(Dims::new(8, 32, 32), 1);
    let cfg = small();
    let a = generate(&x, &cfg).unwrap();
    assert_eq!(a, generate(&x, &cfg).unwrap());
    let b = generate(&x, &GenerationConfig { seed: 1, ..cfg.clone() }).unwrap();
    assert!(a.mean_abs_diff(&b) > 0.0);
    assert_eq!(a.dims(), output_dims(&[x.dims()], &cfg)[0]);
    assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn generate_output_size_follows_scales() {
    let x = periodic_texture(Dims::new(8, 32, 32), 1);
    let cfg = GenerationConfig {
        output_time_scale: 0.5,
        output_space_scale: 1.5,
        ..small()
    };
    assert_eq!(generate(&x, &cfg).unwrap().dims(), Dims::new(4, 48, 48));
}

#[test]
fn noiseless_generate_is_a_fixed_point() {
    let x = periodic_texture(Dims::new(8, 32, 32), 2);
    let y = generate(&x, &noiseless_identity(small())).unwrap();
    assert!(y.max_abs_diff(&x) <= 1e-4);
}

#[test]
fn em_steps_never_increase_nnf_distance() {
    let x = periodic_texture(Dims::new(8, 32, 32), 3);
    let (_, trace) = generate_traced(&x, &small()).unwrap();
    assert!(trace.levels.len() >= 2);
    for (i, level) in trace.levels.iter().enumerate() {
        // the first step of a finer level compares against blurrier keys
        let from = if i == 0 { 0 } else { 1 };
        for w in level.step_mean_distance[from..].windows(2) {
            assert!(w[1] <= w[0], "level {}: {:?}", level.level, level.step_mean_distance);
        }
    }
}

#[test]
fn config_errors_are_invalid_argument() {
    let x = periodic_texture(Dims::new(8, 32, 32), 1);
    let bad = GenerationConfig {
        em_iters_per_level: 0,
        ..small()
    };
    assert!(matches!(generate(&x, &bad), Err(Error::InvalidArgument(_))));
    let tiny = periodic_texture(Dims::new(2, 10, 10), 1);
    assert!(matches!(generate(&tiny, &small()), Err(Error::InvalidArgument(_))));
}

#[test]
fn empty_mask_returns_input() {
    let x = periodic_texture(Dims::new(6, 24, 24), 4);
    let m = InpaintMask::new(Video::filled(x.dims(), 1, 0.0).unwrap()).unwrap();
    assert_eq!(inpaint(&x, &m, &small()).unwrap(), x);
}

#[test]
fn hole_in_constant_region_gets_that_color() {
    let d = Dims::new(6, 32, 32);
    let x = Video::from_fn(d, 3, |_, _, w, c| if w < 20 { [0.3, 0.6, 0.1][c] } else { 0.9 }).unwrap();
    let m = InpaintMask::boxed(d, (0, 6), (10, 18), (4, 12)).unwrap();
    let y = inpaint(&x, &m, &small()).unwrap();
    assert!(y.max_abs_diff(&x) <= 1e-3, "{}", y.max_abs_diff(&x));
}

#[test]
fn inpaint_keeps_known_voxels_and_fills_coherently() {
    let d = Dims::new(8, 40, 40);
    let x = periodic_texture(d, 5);
    let m = InpaintMask::boxed(d, (0, 8), (12, 28), (12, 28)).unwrap();
    // scramble the hole so the input carries no hint of the answer
    let damaged = Video::from_fn(d, 3, |t, h, w, c| {
        if m.is_hole(m.video().index(t, h, w, 0)) {
            ((t * 7 + h * 3 + w * 5 + c) % 11) as f32 / 10.0
        } else {
            x.get(t, h, w, c)
        }
    })
    .unwrap();
    let cfg = small();
    let y = inpaint(&damaged, &m, &cfg).unwrap();
    for i in 0..d.voxels() {
        if !m.is_hole(i) {
            assert_eq!(&y.data()[i * 3..i * 3 + 3], &damaged.data()[i * 3..i * 3 + 3]);
        }
    }
    let q = patches_touching(m.video(), cfg.patch_shape).unwrap();
    let km = KeyMask::excluding_hole(m.video(), cfg.patch_shape).unwrap();
    let coh = coherence_masked(&y, &damaged, cfg.patch_shape, Some(&q), Some(&km)).unwrap();
    assert!(coh <= 1e-3, "coherence {coh}");
}

#[test]
fn hole_touching_every_patch_is_unsatisfiable() {
    let d = Dims::new(6, 24, 24);
    let x = periodic_texture(d, 1);
    // a hole in every frame's middle row and column hits every 5x5 patch
    let m = InpaintMask::new(Video::from_fn(d, 1, |_, h, w, _| (h % 4 == 2 || w % 4 == 2) as u8 as f32).unwrap()).unwrap();
    assert!(matches!(inpaint(&x, &m, &small()), Err(Error::Unsatisfiable(_))));
}

#[test]
fn identity_retarget_reproduces_input() {
    let x = periodic_texture(Dims::new(8, 32, 32), 6);
    let y = retarget(&x, x.dims(), &noiseless_identity(small())).unwrap();
    assert!(y.max_abs_diff(&x) <= 1e-4);
}

#[test]
fn temporal_retarget_keeps_frame_size() {
    let x = periodic_texture(Dims::new(13, 32, 32), 6);
    let y = retarget(&x, Dims::new(7, 32, 32), &small()).unwrap();
    assert_eq!(y.dims(), Dims::new(7, 32, 32));
}

/// Fraction of voxels per color, keyed on the 8-bit code.
fn histogram(v: &Video) -> std::collections::BTreeMap<[u8; 3], f64> {
    let mut h = std::collections::BTreeMap::new();
    let n = v.dims().voxels() as f64;
    for px in v.data().chunks_exact(3) {
        let key = [0, 1, 2].map(|c| patchvid::io::quantize_u8(px[c]));
        *h.entry(key).or_insert(0.0) += 1.0 / n;
    }
    h
}

#[test]
fn halving_width_keeps_patches_and_background() {
    let x = disc_on_flat(Dims::new(8, 32, 48), 4.0, 2);
    let cfg = small();
    let y = retarget(&x, Dims::new(8, 32, 24), &cfg).unwrap();
    assert_eq!(y.dims(), Dims::new(8, 32, 24));
    let coh = coherence(&y, &x, cfg.patch_shape).unwrap();
    assert!(coh <= 1e-3, "coherence {coh}");
    let bg = [0.2f32, 0.45, 0.7].map(patchvid::io::quantize_u8);
    let (hx, hy) = (histogram(&x), histogram(&y));
    let l1 = (hx.get(&bg).unwrap_or(&0.0) - hy.get(&bg).unwrap_or(&0.0)).abs();
    assert!(l1 <= 0.05, "background share {} vs {}", hx[&bg], hy.get(&bg).unwrap_or(&0.0));
}

fn analogy_inputs(c: Video, s: Video, weight: f32) -> AnalogyInputs {
    let src = FlowSource::default();
    let p = dyn_pair(&c, &s, 3, 0, (&src, &src)).unwrap();
    AnalogyInputs {
        content: c,
        style: s,
        dyn_content: p.content.centroid_video(),
        dyn_style: p.style.centroid_video(),
        dyn_weight: weight,
    }
}

#[test]
fn identity_analogy_reproduces_style() {
    let s = moving_disc(Dims::new(8, 32, 32), 7.0, 2, 1);
    let a = analogy_inputs(s.clone(), s.clone(), 1.0);
    let mut cfg = small();
    cfg.solver.init = InitMode::Identity;
    assert!(analogy(&a, &cfg).unwrap().max_abs_diff(&s) <= 1e-4);
}

#[test]
fn analogy_output_has_content_layout() {
    let d = Dims::new(8, 32, 40);
    let a = analogy_inputs(moving_square(d, 8, 2), moving_disc(d, 7.0, 2, 1), 1.0);
    let y = analogy(&a, &small()).unwrap();
    assert_eq!(y.dims(), d);
    assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn zero_dyn_weight_leaves_finer_levels_to_rgb() {
    let d = Dims::new(8, 32, 40);
    let base = analogy_inputs(moving_square(d, 8, 2), moving_disc(d, 7.0, 2, 1), 0.0);
    // doubling both rasters scales every coarsest distance by exactly 4, so
    // the coarsest level is unchanged; finer levels must then ignore them
    let mut doubled = base.clone();
    doubled.dyn_content = base.dyn_content.map(|v| v * 2.0);
    doubled.dyn_style = base.dyn_style.map(|v| v * 2.0);
    let cfg = small();
    let (ya, ta) = analogy_traced(&base, &cfg).unwrap();
    let (yb, tb) = analogy_traced(&doubled, &cfg).unwrap();
    assert_eq!(ya, yb);
    assert_eq!(ta.levels[1..], tb.levels[1..]);
    let first = |t: &patchvid::pipeline::PipelineTrace| t.levels[0].step_mean_distance[0];
    assert_eq!(first(&tb), 4.0 * first(&ta));
}

#[test]
fn analogy_rejects_mismatched_rasters() {
    let d = Dims::new(8, 32, 40);
    let mut a = analogy_inputs(moving_square(d, 8, 2), moving_disc(d, 7.0, 2, 1), 1.0);
    a.dyn_style = Video::filled(Dims::new(8, 32, 39), 1, 0.0).unwrap();
    assert!(matches!(analogy(&a, &small()), Err(Error::InvalidArgument(_))));
    a.dyn_style = a.dyn_content.clone();
    a.dyn_weight = -1.0;
    assert!(matches!(analogy(&a, &small()), Err(Error::InvalidArgument(_))));
}
