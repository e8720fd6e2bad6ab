//! Randomized PatchMatch over space-time patch grids.
//!
//! One sweep is a full propagation pass followed by a random-search pass.
//! Propagation visits cells in raster order (reverse raster on odd sweeps)
//! and proposes each already-visited neighbor's target shifted by one step.
//! A proposal replaces the incumbent only if it is strictly closer.
//!
//! A cell's propagation reads only its own state and its three predecessor
//! neighbors, so every order consistent with those dependencies gives the
//! same field as the plain raster scan. The parallel schedule walks the
//! anti-diagonal planes `t + h + w = s`; random search uses one RNG stream
//! per grid row. Results therefore never depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{mean_f32, unflatten, InitMode, KeyMask, Metric, NNField, PatchShape, SolverParams};
use crate::error::{Error, Result};
use crate::video::{Dims, Video};

/// Propagation ordering. Both produce bit-identical fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Sequential raster scan when running on one worker, wavefront otherwise.
    #[default]
    Auto,
    Sequential,
    Wavefront,
}

/// Approximate nearest-neighbor field from `q` to `k`.
pub fn patchmatch_nnf(q: &Video, k: &Video, shape: PatchShape, params: SolverParams) -> Result<NNField> {
    Ok(Solver::new(q, k, shape, params)?.solve())
}

pub struct Solver<'a> {
    metric: Metric<'a>,
    params: SolverParams,
    mask: Option<&'a KeyMask>,
    valid_keys: Option<Vec<[u32; 3]>>,
    schedule: Schedule,
    initial: Option<&'a [[u32; 3]]>,
}

const STREAM_INIT: u64 = 1 << 62;
const STREAM_SEARCH: u64 = 2 << 62;

impl<'a> Solver<'a> {
    pub fn new(q: &'a Video, k: &'a Video, shape: PatchShape, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let metric = Metric::new(q, k, shape)?;
        if params.init == InitMode::Identity && metric.q_grid != metric.k_grid {
            return Err(Error::invalid(format!(
                "identity init needs equal patch grids, got {} and {}",
                metric.q_grid, metric.k_grid
            )));
        }
        Ok(Solver {
            metric,
            params,
            mask: None,
            valid_keys: None,
            schedule: Schedule::Auto,
            initial: None,
        })
    }

    /// Restrict matches to the key cells marked valid.
    pub fn with_key_mask(mut self, mask: &'a KeyMask) -> Result<Self> {
        if mask.grid() != self.metric.k_grid {
            return Err(Error::invalid(format!(
                "key mask grid {} does not match key patch grid {}",
                mask.grid(),
                self.metric.k_grid
            )));
        }
        let cells = mask.valid_cells();
        if cells.is_empty() {
            return Err(Error::Unsatisfiable("every key patch is excluded".into()));
        }
        self.valid_keys = Some(cells);
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// Start from an existing field instead of `params.init`. Targets the
    /// key mask excludes are redrawn at random.
    pub fn with_initial(mut self, targets: &'a [[u32; 3]]) -> Result<Self> {
        let (qg, kg) = (self.metric.q_grid, self.metric.k_grid);
        if targets.len() != qg.voxels() {
            return Err(Error::invalid(format!(
                "initial field has {} cells but the query grid {qg} has {}",
                targets.len(),
                qg.voxels()
            )));
        }
        let k = kg.as_array();
        if let Some(p) = targets.iter().find(|p| (0..3).any(|a| p[a] as usize >= k[a])) {
            return Err(Error::invalid(format!("initial target {p:?} is outside the key grid {kg}")));
        }
        self.initial = Some(targets);
        Ok(self)
    }

    pub fn query_grid(&self) -> Dims {
        self.metric.q_grid
    }

    pub fn solve(&self) -> NNField {
        self.run(|_| {})
    }

    /// Solve and report the mean distance after initialization and after
    /// each sweep (`iterations + 1` entries).
    pub fn solve_traced(&self) -> (NNField, Vec<f64>) {
        let mut trace = Vec::with_capacity(self.params.iterations + 1);
        let f = self.run(|d| trace.push(mean_f32(d)));
        (f, trace)
    }

    /// Per-sweep snapshots of the whole field, initialization first.
    pub fn solve_snapshots(&self) -> Vec<NNField> {
        let mut snaps = Vec::new();
        let qg = self.metric.q_grid;
        let kg = self.metric.k_grid;
        self.run_full(|t, d| snaps.push(NNField::from_parts(qg, kg, t.to_vec(), d.to_vec())));
        snaps
    }

    fn run(&self, mut on_sweep: impl FnMut(&[f32])) -> NNField {
        let mut last = None;
        self.run_full(|t, d| {
            on_sweep(d);
            last = Some((t.to_vec(), d.to_vec()));
        });
        let (t, d) = last.unwrap();
        NNField::from_parts(self.metric.q_grid, self.metric.k_grid, t, d)
    }

    fn run_full(&self, mut on_sweep: impl FnMut(&[[u32; 3]], &[f32])) {
        let base = ChaCha8Rng::seed_from_u64(self.params.seed);
        let (mut targets, mut dist) = self.initialize(&base);
        on_sweep(&targets, &dist);
        let wavefront = match self.schedule {
            Schedule::Auto => rayon::current_num_threads() > 1,
            Schedule::Sequential => false,
            Schedule::Wavefront => true,
        };
        for sweep in 0..self.params.iterations {
            let reverse = sweep % 2 == 1;
            if wavefront {
                self.propagate_wavefront(&mut targets, &mut dist, reverse);
            } else {
                self.propagate_sequential(&mut targets, &mut dist, reverse);
            }
            self.random_search(&base, sweep as u64, &mut targets, &mut dist);
            on_sweep(&targets, &dist);
        }
    }

    #[inline]
    fn key_ok(&self, p: [u32; 3]) -> bool {
        self.mask.is_none_or(|m| m.is_valid(p))
    }

    fn row_rng(base: &ChaCha8Rng, stream: u64) -> ChaCha8Rng {
        let mut r = base.clone();
        r.set_stream(stream);
        r
    }

    fn random_key(&self, rng: &mut ChaCha8Rng) -> [u32; 3] {
        match &self.valid_keys {
            Some(cells) => cells[rng.gen_range(0..cells.len())],
            None => {
                let kg = self.metric.k_grid;
                [
                    rng.gen_range(0..kg.t as u32),
                    rng.gen_range(0..kg.h as u32),
                    rng.gen_range(0..kg.w as u32),
                ]
            }
        }
    }

    fn initialize(&self, base: &ChaCha8Rng) -> (Vec<[u32; 3]>, Vec<f32>) {
        let qg = self.metric.q_grid;
        let rows = qg.t * qg.h;
        let per_row: Vec<(Vec<[u32; 3]>, Vec<f32>)> = (0..rows)
            .into_par_iter()
            .map(|row| {
                let mut rng = Self::row_rng(base, STREAM_INIT | row as u64);
                let (t, h) = ((row / qg.h) as u32, (row % qg.h) as u32);
                let mut tg = Vec::with_capacity(qg.w);
                let mut ds = Vec::with_capacity(qg.w);
                for w in 0..qg.w as u32 {
                    let cell = [t, h, w];
                    let i = (row * qg.w) + w as usize;
                    let key = match (self.initial, self.params.init) {
                        (Some(init), _) if self.key_ok(init[i]) => init[i],
                        (None, InitMode::Identity) if self.key_ok(cell) => cell,
                        _ => self.random_key(&mut rng),
                    };
                    tg.push(key);
                    ds.push(self.metric.distance(cell, key, f32::INFINITY).unwrap());
                }
                (tg, ds)
            })
            .collect();
        let mut targets = Vec::with_capacity(qg.voxels());
        let mut dist = Vec::with_capacity(qg.voxels());
        for (t, d) in per_row {
            targets.extend(t);
            dist.extend(d);
        }
        (targets, dist)
    }

    /// Best of the incumbent and the three shifted-neighbor proposals for
    /// `cell`, or `None` if nothing strictly improves.
    #[inline]
    fn propose(&self, cell: [u32; 3], targets: &[[u32; 3]], dist: &[f32], reverse: bool) -> Option<([u32; 3], f32)> {
        let qg = self.metric.q_grid;
        let kg = self.metric.k_grid.as_array();
        let qa = qg.as_array();
        let idx = |p: [u32; 3]| (p[0] as usize * qg.h + p[1] as usize) * qg.w + p[2] as usize;
        let me = idx(cell);
        let mut best = (targets[me], dist[me]);
        let mut changed = false;
        for axis in 0..3 {
            let mut nb = cell;
            let mut cand;
            if !reverse {
                if cell[axis] == 0 {
                    continue;
                }
                nb[axis] -= 1;
                cand = targets[idx(nb)];
                cand[axis] += 1;
                if cand[axis] as usize >= kg[axis] {
                    continue;
                }
            } else {
                if cell[axis] as usize + 1 >= qa[axis] {
                    continue;
                }
                nb[axis] += 1;
                cand = targets[idx(nb)];
                if cand[axis] == 0 {
                    continue;
                }
                cand[axis] -= 1;
            }
            if cand == best.0 || !self.key_ok(cand) {
                continue;
            }
            if let Some(d) = self.metric.distance(cell, cand, best.1) {
                best = (cand, d);
                changed = true;
            }
        }
        changed.then_some(best)
    }

    fn propagate_sequential(&self, targets: &mut [[u32; 3]], dist: &mut [f32], reverse: bool) {
        let qg = self.metric.q_grid;
        let n = qg.voxels();
        for step in 0..n {
            let i = if reverse { n - 1 - step } else { step };
            let cell = unflatten(i, qg);
            if let Some((t, d)) = self.propose(cell, targets, dist, reverse) {
                targets[i] = t;
                dist[i] = d;
            }
        }
    }

    fn propagate_wavefront(&self, targets: &mut [[u32; 3]], dist: &mut [f32], reverse: bool) {
        let qg = self.metric.q_grid;
        let planes = qg.t + qg.h + qg.w - 2;
        let mut updates: Vec<(usize, [u32; 3], f32)> = Vec::new();
        for step in 0..planes {
            let s = if reverse { planes - 1 - step } else { step };
            let (tg, ds) = (&*targets, &*dist);
            updates.clear();
            updates.par_extend((0..qg.t * qg.h).into_par_iter().filter_map(|row| {
                let (t, h) = (row / qg.h, row % qg.h);
                let w = s.checked_sub(t + h)?;
                if w >= qg.w {
                    return None;
                }
                let cell = [t as u32, h as u32, w as u32];
                self.propose(cell, tg, ds, reverse)
                    .map(|(k, d)| ((t * qg.h + h) * qg.w + w, k, d))
            }));
            for &(i, k, d) in &updates {
                targets[i] = k;
                dist[i] = d;
            }
        }
    }

    fn random_search(&self, base: &ChaCha8Rng, sweep: u64, targets: &mut [[u32; 3]], dist: &mut [f32]) {
        let qg = self.metric.q_grid;
        let kg = self.metric.k_grid;
        let kmax = [kg.t as i64 - 1, kg.h as i64 - 1, kg.w as i64 - 1];
        let start = kg.t.max(kg.h).max(kg.w) as f64;
        let alpha = self.params.alpha;
        targets
            .par_chunks_mut(qg.w)
            .zip(dist.par_chunks_mut(qg.w))
            .enumerate()
            .for_each(|(row, (tg, ds))| {
                let mut rng = Self::row_rng(base, STREAM_SEARCH | (sweep << 40) | row as u64);
                let (t, h) = ((row / qg.h) as u32, (row % qg.h) as u32);
                for w in 0..qg.w {
                    let cell = [t, h, w as u32];
                    let mut radius = start;
                    while radius >= 1.0 {
                        let r = radius.floor() as i64;
                        let cur = tg[w];
                        let mut cand = [0u32; 3];
                        for a in 0..3 {
                            let off = rng.gen_range(-r..=r);
                            cand[a] = (cur[a] as i64 + off).clamp(0, kmax[a]) as u32;
                        }
                        radius *= alpha;
                        if cand == cur || !self.key_ok(cand) {
                            continue;
                        }
                        if let Some(d) = self.metric.distance(cell, cand, ds[w]) {
                            tg[w] = cand;
                            ds[w] = d;
                        }
                    }
                }
            });
    }
}
