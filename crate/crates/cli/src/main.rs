use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use patchvid::bench::{bench, resized};
use patchvid::config::RunConfig;
use patchvid::dynamics::{dyn_pair, flow_magnitude, kmeans_quantize, FlowSource};
use patchvid::io::{read_video, write_video};
use patchvid::metrics::{coherence, diversity, MetricsReport};
use patchvid::pyramid::build_pyramid;
use patchvid::{analogy, generate, inpaint, retarget, AnalogyInputs, Dims, Error, InpaintMask, Result};

/// Single-example video generation by space-time patch nearest neighbors.
#[derive(Parser, Debug)]
#[command(name = "patchvid", version)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set noise.sigma=0.25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output path: `*.y4m` for a y4m file, anything else for a directory
    /// of PPM frames. JSON commands write here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a new clip from one example.
    Generate {
        input: PathBuf,
        /// Also write a JSON run report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render the content clip's motion layout with the style clip's look.
    Analogy {
        content: PathBuf,
        style: PathBuf,
        /// Flow files for the content clip, one per frame pair.
        #[arg(long, num_args = 1..)]
        content_flo: Vec<PathBuf>,
        /// Flow files for the style clip, one per frame pair.
        #[arg(long, num_args = 1..)]
        style_flo: Vec<PathBuf>,
    },
    /// Resynthesize at a new size.
    Retarget {
        input: PathBuf,
        /// Target size as `T,H,W` or `TxHxW`.
        #[arg(long, value_parser = parse_dims)]
        size: Dims,
    },
    /// Fill the masked region of a clip.
    Inpaint {
        input: PathBuf,
        /// Mask clip; voxels brighter than 0.5 in the first channel are holes.
        mask: PathBuf,
    },
    /// Estimate per-voxel motion magnitude and write it as a gray clip.
    Flow {
        input: PathBuf,
        /// Magnitude that maps to white (default: the search range).
        #[arg(long)]
        scale: Option<f32>,
    },
    /// Quantize motion magnitude into bins; writes bin ids as gray levels
    /// and prints the centroids.
    Quantize { input: PathBuf },
    /// Coherence of a clip against its source, and diversity of samples.
    Metrics {
        output: PathBuf,
        source: PathBuf,
        /// More generated clips; diversity is computed over all of them.
        #[arg(long, num_args = 1..)]
        samples: Vec<PathBuf>,
    },
    /// Time generation at several sizes and fit the scaling slope.
    Bench {
        /// Sizes as `T,H,W`, comma or `x` separated, space separated list.
        #[arg(long, value_parser = parse_dims, num_args = 1.., default_values = ["13,64,64", "13,128,128", "13,256,256"])]
        sizes: Vec<Dims>,
        /// Clip to resize for every size (default: a synthetic texture).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Write every pyramid level (debugging aid).
    Pyramid { input: PathBuf },
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| format!("bad size {s:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match nums.as_slice() {
        [t, h, w] if *t > 0 && *h > 0 && *w > 0 => Ok(Dims::new(*t, *h, *w)),
        _ => Err(format!("size {s:?} must be three positive integers T,H,W")),
    }
}

fn resolve_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        cfg.apply_text(&text).map_err(|e| e.with_path(path))?;
    }
    for pair in &g.set {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = g.seed {
        cfg.generation.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(g: &Global) -> Result<&Path> {
    g.out
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("this command needs --out".into()))
}

fn emit_json(g: &Global, json: &str) -> Result<()> {
    match &g.out {
        Some(p) => std::fs::write(p, format!("{json}\n")).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn timed<T>(report: &mut MetricsReport, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    report.wall_time_seconds.insert(stage.into(), start.elapsed().as_secs_f64());
    log::info!("{stage}: {:.2}s", start.elapsed().as_secs_f64());
    Ok(out)
}

fn flow_source(cfg: &RunConfig, flo: &[PathBuf]) -> FlowSource {
    if flo.is_empty() {
        FlowSource::Builtin {
            window: cfg.flow_window,
            max_disp: cfg.flow_max_disp,
        }
    } else {
        FlowSource::Flo(flo.to_vec())
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let g = &cli.global;
    let gen = &cfg.generation;
    match &cli.command {
        Command::Generate { input, report } => {
            let out = out_path(g)?;
            let mut r = MetricsReport::new(gen.seed);
            let x = timed(&mut r, "read", || read_video(input))?;
            let y = timed(&mut r, "generate", || generate(&x, gen))?;
            timed(&mut r, "write", || write_video(&y, out))?;
            r.dims = vec![x.dims(), y.dims()];
            if let Some(p) = report {
                std::fs::write(p, r.to_json()).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
            }
        }
        Command::Analogy {
            content,
            style,
            content_flo,
            style_flo,
        } => {
            let out = out_path(g)?;
            let c = read_video(content)?;
            let s = read_video(style)?;
            let pair = dyn_pair(
                &c,
                &s,
                cfg.dyn_bins,
                gen.seed,
                (&flow_source(cfg, content_flo), &flow_source(cfg, style_flo)),
            )?;
            let inputs = AnalogyInputs {
                content: c,
                style: s,
                dyn_content: pair.content.centroid_video(),
                dyn_style: pair.style.centroid_video(),
                dyn_weight: cfg.dyn_weight,
            };
            write_video(&analogy(&inputs, gen)?, out)?;
        }
        Command::Retarget { input, size } => {
            let out = out_path(g)?;
            write_video(&retarget(&read_video(input)?, *size, gen)?, out)?;
        }
        Command::Inpaint { input, mask } => {
            let out = out_path(g)?;
            let x = read_video(input)?;
            let m = InpaintMask::from_threshold(&read_video(mask)?)?;
            write_video(&inpaint(&x, &m, gen)?, out)?;
        }
        Command::Flow { input, scale } => {
            let out = out_path(g)?;
            let src = flow_source(cfg, &[]);
            let m = flow_magnitude(&read_video(input)?, &src)?;
            let white = scale.unwrap_or(cfg.flow_max_disp as f32 * std::f32::consts::SQRT_2);
            if white.is_nan() || white <= 0.0 {
                return Err(Error::InvalidArgument("--scale must be positive".into()));
            }
            write_video(&m.map(|v| v / white), out)?;
        }
        Command::Quantize { input } => {
            let out = out_path(g)?;
            let m = flow_magnitude(&read_video(input)?, &flow_source(cfg, &[]))?;
            let q = kmeans_quantize(&m, cfg.dyn_bins, gen.seed)?;
            let top = (q.bins().max(2) - 1) as f32;
            write_video(&q.labels.map(|l| l / top), out)?;
            println!("{}", serde_json::json!({ "schema": 1, "centroids": q.centroids }));
        }
        Command::Metrics {
            output,
            source,
            samples,
        } => {
            let mut r = MetricsReport::new(gen.seed);
            let (y, x) = timed(&mut r, "read", || Ok((read_video(output)?, read_video(source)?)))?;
            r.dims = vec![y.dims(), x.dims()];
            r.coherence = Some(timed(&mut r, "coherence", || coherence(&y, &x, gen.patch_shape))?);
            if !samples.is_empty() {
                let mut all = vec![y];
                for p in samples {
                    all.push(read_video(p)?);
                }
                r.diversity = Some(timed(&mut r, "diversity", || diversity(&all))?);
            }
            emit_json(g, &r.to_json())?;
        }
        Command::Bench { sizes, input } => {
            let report = match input {
                Some(p) => {
                    let v = read_video(p)?;
                    bench(sizes, gen, resized(&v))?
                }
                None => bench(sizes, gen, |d| patchvid::fixtures::periodic_texture(d, gen.seed))?,
            };
            emit_json(g, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
        }
        Command::Pyramid { input } => {
            let out = out_path(g)?;
            let p = build_pyramid(&read_video(input)?, gen.scale_factor, gen.min_dims)?;
            std::fs::create_dir_all(out).map_err(|e| Error::Io {
                path: out.into(),
                source: e,
            })?;
            for (n, level) in p.levels.iter().enumerate() {
                write_video(level, &out.join(format!("level_{n}.y4m")))?;
            }
            let dims: Vec<Dims> = p.dims();
            println!("{}", serde_json::json!({ "schema": 1, "levels": dims }));
        }
    }
    Ok(())
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("patchvid: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match resolve_config(&cli.global) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let result = match cli.global.threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli, &cfg)),
            Err(e) => Err(Error::InvalidArgument(format!("cannot start {n} threads: {e}"))),
        },
        None => run(&cli, &cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
