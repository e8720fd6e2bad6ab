//! Patch coherence, sample diversity, and the JSON report.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nnf::brute::exact_minima;
use crate::nnf::{mean_f32, KeyMask, PatchShape, Solver, SolverParams};
use crate::video::{Dims, Video};

/// Above this many query plus key patches, coherence trusts the
/// approximate field instead of confirming minima exhaustively.
pub const EXACT_COHERENCE_LIMIT: usize = 100_000;

const COHERENCE_SWEEPS: usize = 8;

/// Mean over output patches of the smallest SSD to any source patch,
/// divided by the number of values in a patch. Zero means every output
/// patch occurs verbatim in the source.
pub fn coherence(output: &Video, source: &Video, shape: PatchShape) -> Result<f64> {
    coherence_masked(output, source, shape, None, None)
}

/// [`coherence`] restricted to selected output patches (`query_cells`, over
/// the output patch grid) and to usable source patches (`key_mask`).
pub fn coherence_masked(
    output: &Video,
    source: &Video,
    shape: PatchShape,
    query_cells: Option<&[bool]>,
    key_mask: Option<&KeyMask>,
) -> Result<f64> {
    let per_patch = (shape.voxels() * output.channels()) as f64;
    let minima = patch_minima(output, source, shape, key_mask)?;
    let vals: Vec<f32> = match query_cells {
        Some(sel) => {
            if sel.len() != minima.len() {
                return Err(Error::invalid("query selection does not match the output patch grid"));
            }
            minima.iter().zip(sel).filter(|(_, s)| **s).map(|(d, _)| *d).collect()
        }
        None => minima,
    };
    if vals.is_empty() {
        return Err(Error::invalid("no output patches selected"));
    }
    Ok(mean_f32(&vals) / per_patch)
}

/// Smallest distance from each output patch to the source patches.
pub fn patch_minima(output: &Video, source: &Video, shape: PatchShape, key_mask: Option<&KeyMask>) -> Result<Vec<f32>> {
    let params = SolverParams {
        iterations: COHERENCE_SWEEPS,
        seed: 0x5eed,
        ..Default::default()
    };
    let mut solver = Solver::new(output, source, shape, params)?;
    if let Some(m) = key_mask {
        solver = solver.with_key_mask(m)?;
    }
    let approx = solver.solve();
    let patches = approx.grid().voxels() + approx.key_grid().voxels();
    if patches <= EXACT_COHERENCE_LIMIT {
        exact_minima(output, source, shape, key_mask, approx.distances())
    } else {
        Ok(approx.distances().to_vec())
    }
}

/// Output patches that overlap a nonzero voxel of `hole`.
pub fn patches_touching(hole: &Video, shape: PatchShape) -> Result<Vec<bool>> {
    let km = KeyMask::excluding_hole(hole, shape)?;
    let g = km.grid();
    Ok((0..g.voxels())
        .map(|i| !km.is_valid(crate::nnf::unflatten(i, g)))
        .collect())
}

/// Mean over voxels and channels of the population standard deviation
/// across samples.
pub fn diversity(samples: &[Video]) -> Result<f64> {
    let first = samples.first().ok_or_else(|| Error::invalid("no samples"))?;
    if samples
        .iter()
        .any(|s| s.dims() != first.dims() || s.channels() != first.channels())
    {
        return Err(Error::invalid("samples differ in size"));
    }
    let n = samples.len() as f64;
    let len = first.data().len();
    let mut total = 0.0f64;
    for i in 0..len {
        let mean = samples.iter().map(|s| s.data()[i] as f64).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|s| {
                let d = s.data()[i] as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        total += var.sqrt();
    }
    Ok(total / len as f64)
}

/// Smallest mean absolute difference over all sample pairs.
pub fn min_pairwise_mad(samples: &[Video]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            best = best.min(samples[i].mean_abs_diff(&samples[j]));
        }
    }
    best
}

pub const REPORT_SCHEMA: u32 = 1;

/// One JSON object summarizing a run.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub schema: u32,
    pub coherence: Option<f64>,
    pub diversity: Option<f64>,
    pub wall_time_seconds: BTreeMap<String, f64>,
    pub dims: Vec<Dims>,
    pub seed: u64,
}

impl MetricsReport {
    pub fn new(seed: u64) -> Self {
        MetricsReport {
            schema: REPORT_SCHEMA,
            coherence: None,
            diversity: None,
            wall_time_seconds: BTreeMap::new(),
            dims: Vec::new(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnf::brute_force_nnf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_video(dims: Dims, c: usize, seed: u64) -> Video {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Video::from_fn(dims, c, |_, _, _, _| rng.gen::<f32>()).unwrap()
    }

    #[test]
    fn self_coherence_is_zero() {
        let v = random_video(Dims::new(4, 12, 12), 3, 1);
        assert_eq!(coherence(&v, &v, PatchShape::new(3, 5, 5)).unwrap(), 0.0);
    }

    #[test]
    fn shifted_output_matches_brute_force() {
        let shape = PatchShape::new(2, 3, 3);
        let src = random_video(Dims::new(4, 10, 10), 3, 2);
        let out = src.map(|x| x + 0.1);
        let got = coherence(&out, &src, shape).unwrap();
        let oracle = brute_force_nnf(&out, &src, shape).unwrap();
        let want = oracle.mean_distance() / (shape.voxels() * 3) as f64;
        assert!(got >= 0.0);
        assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
    }

    #[test]
    fn diversity_fixtures() {
        let d = Dims::new(2, 3, 3);
        let a = Video::filled(d, 3, 0.0).unwrap();
        let b = Video::filled(d, 3, 1.0).unwrap();
        assert_eq!(diversity(&[a.clone(), a.clone(), a.clone()]).unwrap(), 0.0);
        assert_eq!(diversity(&[a.clone(), b.clone()]).unwrap(), 0.5);
        assert_eq!(min_pairwise_mad(&[a, b]), 1.0);
        assert!(diversity(&[]).is_err());
    }

    #[test]
    fn report_has_every_field() {
        let mut r = MetricsReport::new(7);
        r.coherence = Some(0.0);
        r.wall_time_seconds.insert("generate".into(), 1.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["schema", "coherence", "diversity", "wall_time_seconds", "dims", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["schema"], 1);
    }
}
