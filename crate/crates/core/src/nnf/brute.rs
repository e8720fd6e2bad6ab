use rayon::prelude::*;

use super::{unflatten, KeyMask, Metric, NNField, PatchShape};
use crate::error::{Error, Result};
use crate::video::Video;

/// Exhaustive search: every query patch gets its globally closest key patch.
/// Ties go to the lexicographically smallest `(t, h, w)` key coordinate.
pub fn brute_force_nnf(q: &Video, k: &Video, shape: PatchShape) -> Result<NNField> {
    brute_force_masked(q, k, shape, None)
}

pub(crate) fn brute_force_masked(q: &Video, k: &Video, shape: PatchShape, mask: Option<&KeyMask>) -> Result<NNField> {
    let metric = Metric::new(q, k, shape)?;
    let (qg, kg) = (metric.q_grid, metric.k_grid);
    if let Some(m) = mask {
        if m.grid() != kg {
            return Err(Error::invalid("key mask grid does not match key patches"));
        }
        if m.valid_count() == 0 {
            return Err(Error::Unsatisfiable("no usable key patch".into()));
        }
    }
    let keys: Vec<[u32; 3]> = match mask {
        Some(m) => m.valid_cells(),
        None => (0..kg.voxels()).map(|i| unflatten(i, kg)).collect(),
    };
    let (targets, distances): (Vec<_>, Vec<_>) = (0..qg.voxels())
        .into_par_iter()
        .map(|i| {
            let cell = unflatten(i, qg);
            let mut best = (keys[0], f32::INFINITY);
            for &key in &keys {
                if let Some(d) = metric.distance(cell, key, best.1) {
                    best = (key, d);
                }
            }
            best
        })
        .unzip();
    Ok(NNField::from_parts(qg, kg, targets, distances))
}

/// Per-channel value sums of every patch, `grid.voxels() * C` long.
fn patch_sums(v: &Video, shape: PatchShape) -> Result<Vec<f64>> {
    let g = shape.grid(v.dims())?;
    let d = v.dims();
    let c = v.channels();
    // 3-D inclusive prefix sums with a zero border
    let (pt, ph, pw) = (d.t + 1, d.h + 1, d.w + 1);
    let mut pre = vec![0.0f64; pt * ph * pw * c];
    let at = |t: usize, h: usize, w: usize| ((t * ph + h) * pw + w) * c;
    for t in 1..pt {
        for h in 1..ph {
            for w in 1..pw {
                for ch in 0..c {
                    let x = v.get(t - 1, h - 1, w - 1, ch) as f64;
                    pre[at(t, h, w) + ch] = x + pre[at(t - 1, h, w) + ch] + pre[at(t, h - 1, w) + ch]
                        + pre[at(t, h, w - 1) + ch]
                        - pre[at(t - 1, h - 1, w) + ch]
                        - pre[at(t - 1, h, w - 1) + ch]
                        - pre[at(t, h - 1, w - 1) + ch]
                        + pre[at(t - 1, h - 1, w - 1) + ch];
                }
            }
        }
    }
    let mut out = Vec::with_capacity(g.voxels() * c);
    for i in 0..g.voxels() {
        let [t0, h0, w0] = unflatten(i, g).map(|x| x as usize);
        let (t1, h1, w1) = (t0 + shape.t, h0 + shape.h, w0 + shape.w);
        for ch in 0..c {
            let s = pre[at(t1, h1, w1) + ch] - pre[at(t0, h1, w1) + ch] - pre[at(t1, h0, w1) + ch]
                - pre[at(t1, h1, w0) + ch]
                + pre[at(t0, h0, w1) + ch]
                + pre[at(t0, h1, w0) + ch]
                + pre[at(t1, h0, w0) + ch]
                - pre[at(t0, h0, w0) + ch];
            out.push(s);
        }
    }
    Ok(out)
}

/// Smallest distance from each query patch to any key patch, starting the
/// scan from a known upper bound per cell (e.g. an approximate field).
///
/// Keys are visited in order of their total value sum. Per channel,
/// `SSD >= (sum_q - sum_k)^2 / n`, which both skips keys individually and
/// ends the scan once the sum gap alone exceeds the bound.
pub(crate) fn exact_minima(q: &Video, k: &Video, shape: PatchShape, mask: Option<&KeyMask>, bounds: &[f32]) -> Result<Vec<f32>> {
    let metric = Metric::new(q, k, shape)?;
    let (qg, kg) = (metric.q_grid, metric.k_grid);
    if bounds.len() != qg.voxels() {
        return Err(Error::invalid("one bound per query patch is required"));
    }
    let c = q.channels();
    let n = shape.voxels() as f64;
    let qs = patch_sums(q, shape)?;
    let ks = patch_sums(k, shape)?;
    let mut keys: Vec<(f64, usize)> = (0..kg.voxels())
        .filter(|&i| mask.is_none_or(|m| m.is_valid(unflatten(i, kg))))
        .map(|i| (ks[i * c..(i + 1) * c].iter().sum(), i))
        .collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // f32 distances against f64 bounds: never prune on a margin this thin
    let slack = |b: f32| b as f64 * (1.0 + 1e-5) + 1e-9;
    Ok((0..qg.voxels())
        .into_par_iter()
        .map(|i| {
            let cell = unflatten(i, qg);
            let qsum = &qs[i * c..(i + 1) * c];
            let total: f64 = qsum.iter().sum();
            let mut best = bounds[i];
            // sum gap g over C channels gives SSD >= g^2 / (n C)
            let reach = |b: f32| (slack(b) * n * c as f64).sqrt();
            let start = keys.partition_point(|(s, _)| *s < total - reach(best));
            for &(s, ki) in &keys[start..] {
                if s > total + reach(best) {
                    break;
                }
                let ksum = &ks[ki * c..(ki + 1) * c];
                let lb: f64 = qsum.iter().zip(ksum).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
                if lb > slack(best) {
                    continue;
                }
                if let Some(d) = metric.distance(cell, unflatten(ki, kg), best) {
                    best = d;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_video;
    use super::*;
    use crate::video::Dims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_match_has_zero_distance() {
        let v = random_video(Dims::new(4, 8, 8), 3, 5);
        let f = brute_force_nnf(&v, &v, PatchShape::new(2, 3, 3)).unwrap();
        assert!(f.distances().iter().all(|&d| d == 0.0));
        // random content has no duplicate patches, so the match is the cell itself
        for (i, t) in f.targets().iter().enumerate() {
            assert_eq!(*t, unflatten(i, f.grid()));
        }
    }

    #[test]
    fn crop_has_exact_matches() {
        let k = random_video(Dims::new(5, 10, 12), 2, 6);
        let q = Video::from_fn(Dims::new(3, 6, 7), 2, |t, h, w, c| k.get(t + 1, h + 2, w + 3, c)).unwrap();
        let f = brute_force_nnf(&q, &k, PatchShape::new(2, 3, 3)).unwrap();
        assert!(f.distances().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn ties_go_to_lexicographically_first_key() {
        let k = Video::filled(Dims::new(3, 5, 5), 1, 0.5).unwrap();
        let q = Video::filled(Dims::new(3, 4, 4), 1, 0.5).unwrap();
        let f = brute_force_nnf(&q, &k, PatchShape::new(3, 3, 3)).unwrap();
        assert!(f.targets().iter().all(|t| *t == [0, 0, 0]));
    }

    #[test]
    fn dominates_random_mappings() {
        let shape = PatchShape::new(3, 5, 5);
        let q = random_video(Dims::new(4, 12, 12), 3, 10);
        let k = random_video(Dims::new(4, 12, 12), 3, 11);
        let f = brute_force_nnf(&q, &k, shape).unwrap();
        let kg = f.key_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let targets: Vec<[u32; 3]> = (0..f.grid().voxels())
                .map(|_| {
                    [
                        rng.gen_range(0..kg.t as u32),
                        rng.gen_range(0..kg.h as u32),
                        rng.gen_range(0..kg.w as u32),
                    ]
                })
                .collect();
            let other = NNField::from_targets(&q, &k, shape, targets).unwrap();
            for (a, b) in f.distances().iter().zip(other.distances()) {
                assert!(a <= b);
            }
        }
    }

    #[test]
    fn oversized_shape_rejected() {
        let v = random_video(Dims::new(2, 4, 4), 1, 1);
        assert!(brute_force_nnf(&v, &v, PatchShape::new(3, 1, 1)).is_err());
    }

    #[test]
    fn exact_minima_match_brute_force() {
        let shape = PatchShape::new(2, 3, 3);
        let q = random_video(Dims::new(3, 9, 10), 3, 11);
        let k = random_video(Dims::new(4, 8, 8), 3, 12);
        let oracle = brute_force_nnf(&q, &k, shape).unwrap();
        let loose = vec![f32::INFINITY; oracle.grid().voxels()];
        assert_eq!(exact_minima(&q, &k, shape, None, &loose).unwrap(), oracle.distances());
        // a bound above the true minimum still finds it
        let padded: Vec<f32> = oracle.distances().iter().map(|d| d * 1.5 + 0.01).collect();
        assert_eq!(exact_minima(&q, &k, shape, None, &padded).unwrap(), oracle.distances());

        let valid: Vec<bool> = (0..oracle.key_grid().voxels()).map(|i| i % 3 != 0).collect();
        let mask = KeyMask::new(oracle.key_grid(), valid).unwrap();
        let masked = brute_force_masked(&q, &k, shape, Some(&mask)).unwrap();
        assert_eq!(exact_minima(&q, &k, shape, Some(&mask), &loose).unwrap(), masked.distances());
    }
}
