//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::time::Instant;

use patchvid::bench::bench;
use patchvid::dynamics::{dyn_pair, estimate_flow_magnitude, flow_magnitude, kmeans_1d, quantize_with, FlowSource};
use patchvid::fixtures::{disc_on_flat, moving_disc, moving_square, periodic_texture};
use patchvid::io::{encode_y4m, quantize_u8, FrameRate};
use patchvid::metrics::{coherence, coherence_masked, diversity, min_pairwise_mad, patches_touching};
use patchvid::nnf::Solver;
use patchvid::pyramid::level_dims;
use patchvid::vpnn::{vpnn_step_with, StepOptions};
use patchvid::{
    analogy, brute_force_nnf, build_pyramid, generate, inpaint, patch_distance, resize_video, retarget, AnalogyInputs, Dims,
    GenerationConfig, InitMode, InpaintMask, KeyMask, PatchShape, QKVBundle, ResizeFilter, SolverParams, Video,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_video(dims: Dims, seed: u64) -> Video {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Video::from_fn(dims, 3, |_, _, _, _| rng.gen::<f32>()).unwrap()
}

fn nnf_pairs() -> Vec<(Video, Video)> {
    (0..10u64)
        .map(|s| (random_video(Dims::new(5, 24, 24), 2 * s), random_video(Dims::new(5, 24, 24), 2 * s + 1)))
        .collect()
}

fn a1() -> Outcome {
    let shape = PatchShape::new(3, 5, 5);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (i, (q, k)) in nnf_pairs().iter().enumerate() {
        let params = SolverParams {
            iterations: 10,
            seed: i as u64,
            ..Default::default()
        };
        let approx = patchvid::patchmatch_nnf(q, k, shape, params).unwrap();
        let exact = brute_force_nnf(q, k, shape).unwrap();
        worst = worst.max(approx.mean_distance() / exact.mean_distance());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1.05 && secs < 10.0,
        format!("oracle equivalence: worst mean ratio {worst:.4} (<= 1.05), {secs:.2}s (< 10s)"),
    )
}

fn a2() -> Outcome {
    let shape = PatchShape::new(3, 5, 5);
    let (mut monotone, mut worst_recompute, mut dominated) = (true, 0.0f32, true);
    for (i, (q, k)) in nnf_pairs().iter().enumerate() {
        let params = SolverParams {
            iterations: 10,
            seed: 100 + i as u64,
            ..Default::default()
        };
        let (f, trace) = Solver::new(q, k, shape, params).unwrap().solve_traced();
        monotone &= trace.windows(2).all(|w| w[1] <= w[0]);
        let exact = brute_force_nnf(q, k, shape).unwrap();
        let g = f.grid();
        for t in 0..g.t {
            for h in 0..g.h {
                for w in 0..g.w {
                    let tg = f.target(t, h, w).map(|x| x as usize);
                    let d = patch_distance(q, [t, h, w], k, tg, shape).unwrap();
                    worst_recompute = worst_recompute.max((d - f.distance(t, h, w)).abs());
                    dominated &= exact.distance(t, h, w) <= f.distance(t, h, w);
                }
            }
        }
    }
    check(
        monotone && worst_recompute <= 1e-4 && dominated,
        format!(
            "monotone sweeps {monotone}, worst recomputed distance error {worst_recompute:.2e} (<= 1e-4), brute force dominates {dominated}"
        ),
    )
}

fn background_share(v: &Video, rgb: [f32; 3]) -> f64 {
    let key = rgb.map(quantize_u8);
    let hits = v.data().chunks_exact(3).filter(|px| [0, 1, 2].map(|c| quantize_u8(px[c])) == key).count();
    hits as f64 / v.dims().voxels() as f64
}

fn a3() -> Outcome {
    let cfg = GenerationConfig::default();
    let shape = cfg.patch_shape;
    let d = Dims::new(13, 64, 64);
    let x = periodic_texture(d, 3);
    let gen = coherence(&generate(&x, &cfg).unwrap(), &x, shape).unwrap();

    // hole over one spatial period in every frame, with scrambled content
    let m = InpaintMask::boxed(d, (0, 13), (24, 40), (24, 40)).unwrap();
    let damaged = Video::from_fn(d, 3, |t, h, w, c| {
        if m.is_hole(m.video().index(t, h, w, 0)) {
            ((t * 7 + h * 3 + w * 5 + c) % 11) as f32 / 10.0
        } else {
            x.get(t, h, w, c)
        }
    })
    .unwrap();
    let filled = inpaint(&damaged, &m, &cfg).unwrap();
    let q = patches_touching(m.video(), shape).unwrap();
    let km = KeyMask::excluding_hole(m.video(), shape).unwrap();
    let inp = coherence_masked(&filled, &damaged, shape, Some(&q), Some(&km)).unwrap();

    let disc = disc_on_flat(d, 6.0, 2);
    let narrow = retarget(&disc, Dims::new(13, 64, 32), &cfg).unwrap();
    let ret = coherence(&narrow, &disc, shape).unwrap();
    let bg = [0.2, 0.45, 0.7];
    let hist = (background_share(&narrow, bg) - background_share(&disc, bg)).abs();
    check(
        gen <= 1e-3 && inp <= 1e-3 && ret <= 1e-3 && hist <= 0.05,
        format!(
            "coherence: generate {gen:.2e}, inpaint hole {inp:.2e}, retarget {ret:.2e} (all <= 1e-3); retarget background share change {hist:.4} (<= 0.05)"
        ),
    )
}

fn a4() -> Outcome {
    let x = periodic_texture(Dims::new(13, 64, 64), 3);
    let samples: Vec<Video> = (1..=5)
        .map(|seed| {
            generate(
                &x,
                &GenerationConfig {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap()
        })
        .collect();
    let div = diversity(&samples).unwrap();
    let mad = min_pairwise_mad(&samples);
    let mut cfg = GenerationConfig::default();
    cfg.noise.sigma = 0.0;
    cfg.output_time_scale = 1.0;
    cfg.solver.init = InitMode::Identity;
    let fixed = generate(&x, &cfg).unwrap().max_abs_diff(&x);
    check(
        div >= 0.01 && mad >= 0.01 && fixed <= 1e-4,
        format!("diversity {div:.4} (>= 0.01), min pairwise mean |diff| {mad:.4} (>= 0.01), noiseless fixed point error {fixed:.2e} (<= 1e-4)"),
    )
}

fn a5() -> Outcome {
    let x = periodic_texture(Dims::new(13, 48, 48), 9);
    let cfg = GenerationConfig {
        seed: 77,
        ..Default::default()
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| encode_y4m(&generate(&x, &cfg).unwrap(), FrameRate::default()).unwrap())
    };
    let (a, b, c) = (run(1), run(1), run(4));
    check(a == b && a == c, format!("identical output bytes for 1, 1 and 4 threads: {}", a == b && a == c))
}

fn a6() -> Outcome {
    let cfg = GenerationConfig::default();
    let sizes = [Dims::new(13, 64, 64), Dims::new(13, 128, 128), Dims::new(13, 256, 256)];
    let report = bench(&sizes, &cfg, |d| periodic_texture(d, 1)).unwrap();
    let times: Vec<String> = report.entries.iter().map(|e| format!("{}: {:.2}s", e.dims, e.seconds)).collect();
    let slope = report.slope.unwrap_or(f64::NAN);
    check(
        (0.8..=1.4).contains(&slope),
        format!("log-log time slope {slope:.3} (in [0.8, 1.4]); {}", times.join(", ")),
    )
}

fn a7() -> Outcome {
    let x = periodic_texture(Dims::new(13, 144, 256), 2);
    let start = Instant::now();
    generate(&x, &GenerationConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        secs <= 120.0,
        format!("generate at 13x144x256 in {secs:.1}s on {} worker(s) (<= 120s)", rayon::current_num_threads()),
    )
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn a8() -> Outcome {
    let d = Dims::new(13, 1280, 1920);
    let start = Instant::now();
    let x = Video::from_fn(d, 3, |t, h, w, c| (((h * 7 + w * 3 + t * 5 + c * 11) % 64) as f32) / 63.0).unwrap();
    let cfg = GenerationConfig::default();
    let pyr = build_pyramid(&x, cfg.scale_factor, cfg.min_dims).unwrap();
    drop(x);
    let coarse = pyr.level(pyr.coarsest_index());
    let bundle = QKVBundle::unweighted(coarse.clone(), coarse.clone(), coarse.clone()).unwrap();
    let step = vpnn_step_with(&bundle, cfg.patch_shape, cfg.solver, StepOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let limit = 16u64 << 30;
    match peak_rss_bytes() {
        Some(peak) => check(
            peak < limit,
            format!(
                "full HD: {} levels, coarsest {}, step output {}, peak resident {:.2} GiB (< 16 GiB), {secs:.1}s",
                pyr.levels.len(),
                coarse.dims(),
                step.video.dims(),
                peak as f64 / (1u64 << 30) as f64
            ),
        ),
        None => check(false, "peak resident memory unavailable (/proc/self/status)"),
    }
}

fn a9() -> Outcome {
    let cfg = GenerationConfig::default();
    let d = Dims::new(13, 64, 64);
    let content = moving_square(d, 16, 2);
    let style = moving_disc(d, 12.0, 2, 5);
    let src = FlowSource::default();
    let bins = patchvid::dynamics::DEFAULT_BINS;
    let pair = dyn_pair(&content, &style, bins, 0, (&src, &src)).unwrap();
    let inputs = AnalogyInputs {
        content: content.clone(),
        style: style.clone(),
        dyn_content: pair.content.centroid_video(),
        dyn_style: pair.style.centroid_video(),
        dyn_weight: 1.0,
    };
    let y = analogy(&inputs, &cfg).unwrap();
    let relabeled = quantize_with(&flow_magnitude(&y, &src).unwrap(), &pair.content.centroids).unwrap();
    let coarsest = *level_dims(d, cfg.scale_factor, cfg.min_dims).unwrap().last().unwrap();
    let a = resize_video(&relabeled.labels, coarsest, ResizeFilter::Nearest).unwrap();
    let b = resize_video(&pair.content.labels, coarsest, ResizeFilter::Nearest).unwrap();
    let agree = a.data().iter().zip(b.data()).filter(|(p, q)| p == q).count() as f64 / a.data().len() as f64;
    let moving: Vec<_> = a.data().iter().zip(b.data()).filter(|(_, q)| **q > 0.0).collect();
    let recall = moving.iter().filter(|(p, q)| p == q).count() as f64 / moving.len().max(1) as f64;

    let ident_pair = dyn_pair(&style, &style, bins, 0, (&src, &src)).unwrap();
    let ident = AnalogyInputs {
        content: style.clone(),
        style: style.clone(),
        dyn_content: ident_pair.content.centroid_video(),
        dyn_style: ident_pair.style.centroid_video(),
        dyn_weight: 1.0,
    };
    let mut icfg = cfg.clone();
    icfg.solver.init = InitMode::Identity;
    let err = analogy(&ident, &icfg).unwrap().max_abs_diff(&style);
    check(
        agree >= 0.7 && err <= 1e-4,
        format!(
            "analogy: coarsest-level label agreement {agree:.3} (>= 0.70; moving-voxel agreement {recall:.3}), identity analogy error {err:.2e} (<= 1e-4)"
        ),
    )
}

fn a10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let frame: Vec<f32> = (0..32 * 48).map(|_| rng.gen()).collect();
    let still = Video::from_fn(Dims::new(4, 32, 48), 3, |_, h, w, _| frame[h * 48 + w]).unwrap();
    let zero = estimate_flow_magnitude(&still, 7, 4).unwrap().data().iter().all(|&m| m == 0.0);

    let (window, max_disp) = (5usize, 3usize);
    let shifted = Video::from_fn(Dims::new(4, 32, 48), 3, |t, h, w, _| frame[h * 48 + (w + 48 - (2 * t) % 48) % 48]).unwrap();
    let m = estimate_flow_magnitude(&shifted, window, max_disp).unwrap();
    let margin = window / 2 + max_disp;
    let mut exact = true;
    for t in 0..4 {
        for h in margin..32 - margin {
            for w in margin..48 - margin {
                exact &= m.get(t, h, w, 0) == 2.0;
            }
        }
    }
    let km = kmeans_1d(&[0.0, 0.0, 1.0, 1.0, 10.0, 10.0], 2, 0);
    let cents = km.centroids == [0.5, 10.0];
    check(
        zero && exact && cents,
        format!("static flow all zero {zero}, shifted interior exactly 2.0 {exact}, k-means centroids {:?}", km.centroids),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let o = f();
        println!("{name} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
