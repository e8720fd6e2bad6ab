use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITERS: usize = 100;
const REL_TOL: f64 = 1e-6;

/// Outcome of 1-D k-means: ascending centroids and per-value labels.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeans1D {
    pub centroids: Vec<f64>,
    pub labels: Vec<u32>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub objective_trace: Vec<f64>,
}

/// Index of the nearest centroid; ties go to the lower index.
#[inline]
pub fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut bd = (x - centroids[0]).abs();
    for (i, &c) in centroids.iter().enumerate().skip(1) {
        let d = (x - c).abs();
        if d < bd {
            best = i;
            bd = d;
        }
    }
    best
}

fn objective(values: &[f32], centroids: &[f64], labels: &[u32]) -> f64 {
    values
        .iter()
        .zip(labels)
        .map(|(&v, &l)| {
            let d = v as f64 - centroids[l as usize];
            d * d
        })
        .sum()
}

/// Lloyd's algorithm with k-means++ seeding. `k` shrinks to the number of
/// distinct values when there are fewer; clusters that empty out are dropped.
pub fn kmeans_1d(values: &[f32], k: usize, seed: u64) -> KMeans1D {
    assert!(!values.is_empty(), "k-means needs at least one value");
    let k = k.max(1);
    let mut distinct: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = k.min(distinct.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Vec::with_capacity(k);
    centroids.push(values[rng.gen_range(0..values.len())] as f64);
    while centroids.len() < k {
        let d2: Vec<f64> = values
            .iter()
            .map(|&v| {
                let v = v as f64;
                centroids.iter().map(|c| (v - c) * (v - c)).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = d2.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            values[idx] as f64
        } else {
            // every value coincides with a centroid; take an unused distinct one
            *distinct.iter().find(|v| !centroids.contains(v)).unwrap()
        };
        if centroids.contains(&pick) {
            let alt = distinct.iter().find(|v| !centroids.contains(v)).copied().unwrap();
            centroids.push(alt);
        } else {
            centroids.push(pick);
        }
    }
    centroids.sort_by(f64::total_cmp);

    let mut labels = vec![0u32; values.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERS {
        for (l, &v) in labels.iter_mut().zip(values) {
            *l = nearest(&centroids, v as f64) as u32;
        }
        let mut sum = vec![0.0f64; centroids.len()];
        let mut count = vec![0usize; centroids.len()];
        for (&l, &v) in labels.iter().zip(values) {
            sum[l as usize] += v as f64;
            count[l as usize] += 1;
        }
        let next: Vec<f64> = sum
            .iter()
            .zip(&count)
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| s / n as f64)
            .collect();
        let moved = if next.len() != centroids.len() {
            f64::INFINITY
        } else {
            let scale = centroids.iter().map(|c| c.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            next.iter().zip(&centroids).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        };
        if next.len() == centroids.len() {
            trace.push(objective(values, &next, &labels));
        }
        centroids = next;
        centroids.sort_by(f64::total_cmp);
        centroids.dedup();
        if moved < REL_TOL {
            break;
        }
    }
    for (l, &v) in labels.iter_mut().zip(values) {
        *l = nearest(&centroids, v as f64) as u32;
    }
    trace.push(objective(values, &centroids, &labels));
    KMeans1D {
        centroids,
        labels,
        objective_trace: trace,
    }
}
