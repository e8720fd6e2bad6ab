//! `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Later assignments of a key override earlier ones.

use crate::dynamics::DEFAULT_BINS;
use crate::error::{Error, Result};
use crate::nnf::PatchShape;
use crate::pipeline::GenerationConfig;
use crate::pyramid::ScaleFactor;
use crate::video::Dims;

/// Everything a command needs besides its input files.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub generation: GenerationConfig,
    /// Motion magnitude bins for analogies and `quantize`.
    pub dyn_bins: usize,
    pub dyn_weight: f32,
    pub flow_window: usize,
    pub flow_max_disp: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            generation: GenerationConfig::default(),
            dyn_bins: DEFAULT_BINS,
            dyn_weight: 1.0,
            flow_window: 7,
            flow_max_disp: 4,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "seed",
    "scale_factor",
    "scale_factor.t",
    "scale_factor.h",
    "scale_factor.w",
    "noise.sigma",
    "noise.temporal_replicate",
    "em_iters_per_level",
    "solver.iterations",
    "solver.alpha",
    "solver.init",
    "patch_shape",
    "output_time_scale",
    "output_space_scale",
    "min_dims",
    "dyn.bins",
    "dyn.weight",
    "flow.window",
    "flow.max_disp",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {v:?}")))
}

fn triple(key: &str, v: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => Ok([num(key, a)?, num(key, b)?, num(key, c)?]),
        _ => Err(Error::invalid(format!("{key}: expected T,H,W but got {v:?}"))),
    }
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    /// Set one key. Nothing is validated until [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.generation;
        let v = value.trim();
        match key.trim() {
            "seed" => g.seed = num("seed", v)?,
            "scale_factor" => {
                let r = num(key, v)?;
                g.scale_factor = ScaleFactor { r_t: r, r_h: r, r_w: r };
            }
            "scale_factor.t" => g.scale_factor.r_t = num(key, v)?,
            "scale_factor.h" => g.scale_factor.r_h = num(key, v)?,
            "scale_factor.w" => g.scale_factor.r_w = num(key, v)?,
            "noise.sigma" => g.noise.sigma = num(key, v)?,
            "noise.temporal_replicate" => g.noise.temporal_replicate = boolean(key, v)?,
            "em_iters_per_level" => g.em_iters_per_level = num(key, v)?,
            "solver.iterations" => g.solver.iterations = num(key, v)?,
            "solver.alpha" => g.solver.alpha = num(key, v)?,
            "solver.init" => g.solver.init = v.parse()?,
            "patch_shape" => {
                let [t, h, w] = triple(key, v)?;
                g.patch_shape = PatchShape::new(t, h, w);
            }
            "output_time_scale" => g.output_time_scale = num(key, v)?,
            "output_space_scale" => g.output_space_scale = num(key, v)?,
            "min_dims" => g.min_dims = Dims::from_array(triple(key, v)?),
            "dyn.bins" => self.dyn_bins = num(key, v)?,
            "dyn.weight" => self.dyn_weight = num(key, v)?,
            "flow.window" => self.flow_window = num(key, v)?,
            "flow.max_disp" => self.flow_max_disp = num(key, v)?,
            other => {
                return Err(Error::invalid(format!(
                    "unknown config key {other:?} (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("override {pair:?} is not key=value")))?;
        self.set(k, v)
    }

    /// Apply every line of a config file on top of `self`. Errors report
    /// the byte offset of the offending line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut offset = 0u64;
        for (n, raw) in text.split_inclusive('\n').enumerate() {
            let line = raw.trim();
            let at = offset;
            offset += raw.len() as u64;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |msg: String| Error::format(Some(at), format!("line {}: {msg}", n + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fail("expected key = value".into()))?;
            self.set(k, v).map_err(|e| match e {
                Error::InvalidArgument(m) => fail(m),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.generation.validate()?;
        if self.dyn_bins == 0 {
            return Err(Error::invalid("dyn.bins must be >= 1"));
        }
        if !(self.dyn_weight >= 0.0 && self.dyn_weight.is_finite()) {
            return Err(Error::invalid("dyn.weight must be finite and >= 0"));
        }
        if self.flow_window.is_multiple_of(2) {
            return Err(Error::invalid("flow.window must be odd"));
        }
        Ok(())
    }

    /// The config as text that [`RunConfig::parse`] reads back identically.
    pub fn to_text(&self) -> String {
        let g = &self.generation;
        let p = g.patch_shape;
        let m = g.min_dims;
        let init = match g.solver.init {
            crate::nnf::InitMode::Random => "random",
            crate::nnf::InitMode::Identity => "identity",
        };
        format!(
            "seed = {}\nscale_factor.t = {:?}\nscale_factor.h = {:?}\nscale_factor.w = {:?}\n\
             noise.sigma = {:?}\nnoise.temporal_replicate = {}\nem_iters_per_level = {}\n\
             solver.iterations = {}\nsolver.alpha = {:?}\nsolver.init = {init}\n\
             patch_shape = {},{},{}\noutput_time_scale = {:?}\noutput_space_scale = {:?}\n\
             min_dims = {},{},{}\ndyn.bins = {}\ndyn.weight = {:?}\nflow.window = {}\nflow.max_disp = {}\n",
            g.seed,
            g.scale_factor.r_t,
            g.scale_factor.r_h,
            g.scale_factor.r_w,
            g.noise.sigma,
            g.noise.temporal_replicate,
            g.em_iters_per_level,
            g.solver.iterations,
            g.solver.alpha,
            p.t,
            p.h,
            p.w,
            g.output_time_scale,
            g.output_space_scale,
            m.t,
            m.h,
            m.w,
            self.dyn_bins,
            self.dyn_weight,
            self.flow_window,
            self.flow_max_disp,
        )
    }
}
