//! Sampled abstraction of a control system over a grid on `T`, the
//! controllable-cell fixpoint, and the most permissive strategy.
//!
//! Transitions are sampled, not guaranteed: each cell contributes a lattice
//! of support points, each combined with a few disturbance samples. The
//! resulting shield is empirically sound at the sampling density used.

mod boundary;
mod fixpoint;

pub use boundary::{extract_boundaries, fit_polynomial, Boundary};
pub use fixpoint::{bounded_fixpoint, fixpoint, fixpoint_ordered, most_permissive, FixpointStats};

use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SynthesisError;
use crate::grid::{Aabb, Containment, GridSpec, Region};
use crate::models::ControlModel;
use crate::transform::Transform;
use crate::{mix_seed, Rng};

/// How cells and disturbances are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Support points per axis and cell.
    pub per_axis: usize,
    /// Random disturbance draws per support point, on top of the extremes.
    pub random_disturbances: usize,
    /// Lattice used for cells where no regular support point has a preimage.
    pub fallback_per_axis: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { per_axis: 4, random_disturbances: 2, fallback_per_axis: 16, seed: 0 }
    }
}

/// The regular lattice of `per_axis^d` points spanning `b`. Both faces are
/// pulled inward by `1e-9` of the box diameter, so every point belongs to
/// the half-open box and rounding in the dynamics cannot push an image of a
/// boundary point across a cell face it never crosses.
pub fn support_points(b: &Aabb, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(1);
    let d = b.dim();
    let coords: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let w = b.hi[i] - b.lo[i];
            if per_axis == 1 {
                return vec![b.lo[i] + 0.5 * w];
            }
            let (bottom, top) = (b.lo[i] + 1e-9 * w, b.hi[i] - 1e-9 * w);
            (0..per_axis)
                .map(|k| bottom + (top - bottom) * k as f64 / (per_axis - 1) as f64)
                .collect()
        })
        .collect();
    let total = per_axis.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for mut n in 0..total {
        let mut p = vec![0.0; d];
        for i in (0..d).rev() {
            p[i] = coords[i][n % per_axis];
            n /= per_axis;
        }
        out.push(p);
    }
    out
}

/// Sampled transition relation `C --a--> C'` in compressed row form.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable {
    cells: usize,
    actions: usize,
    // successors of pair p = cell * actions + action are
    // targets[offsets[p]..offsets[p + 1]], sorted and deduplicated
    offsets: Vec<usize>,
    targets: Vec<u32>,
    escapes: Vec<bool>,
    // cells without any sampled preimage point
    empty: Vec<bool>,
}

impl TransitionTable {
    /// Assemble a table from explicit successor lists, indexed by
    /// `cell * actions + action`.
    pub fn from_lists(cells: usize, actions: usize, lists: Vec<(Vec<u32>, bool)>) -> Self {
        assert_eq!(lists.len(), cells * actions, "one list per (cell, action)");
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        let mut escapes = Vec::with_capacity(lists.len());
        offsets.push(0);
        for (mut succ, esc) in lists {
            succ.sort_unstable();
            succ.dedup();
            assert!(succ.iter().all(|&c| (c as usize) < cells), "successor out of range");
            targets.extend_from_slice(&succ);
            offsets.push(targets.len());
            escapes.push(esc);
        }
        Self { cells, actions, offsets, targets, escapes, empty: vec![false; cells] }
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn successors(&self, cell: usize, action: usize) -> &[u32] {
        let p = cell * self.actions + action;
        &self.targets[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn escapes(&self, cell: usize, action: usize) -> bool {
        self.escapes[cell * self.actions + action]
    }

    /// Whether no sampled point of the cell had a preimage in `S`.
    pub fn has_empty_preimage(&self, cell: usize) -> bool {
        self.empty[cell]
    }

    pub fn transition_count(&self) -> usize {
        self.targets.len()
    }
}

/// A set of cells, indexed by linear cell index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafeSet {
    bits: Vec<bool>,
}

impl SafeSet {
    pub fn empty(cells: usize) -> Self {
        Self { bits: vec![false; cells] }
    }

    pub fn full(cells: usize) -> Self {
        Self { bits: vec![true; cells] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.bits[cell]
    }

    pub fn insert(&mut self, cell: usize) {
        self.bits[cell] = true;
    }

    pub fn remove(&mut self, cell: usize) {
        self.bits[cell] = false;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn cell_count(&self) -> usize {
        self.bits.len()
    }

    pub fn is_subset(&self, other: &SafeSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Disturbance samples for one support point: every corner of `[0, 1]^k`
/// followed by `random` uniform draws. A single empty sample for `k = 0`.
fn disturbance_samples(arity: usize, random: usize, rng: &mut Rng, out: &mut Vec<Vec<f64>>) {
    out.clear();
    if arity == 0 {
        out.push(Vec::new());
        return;
    }
    for corner in 0..(1usize << arity) {
        out.push((0..arity).map(|i| ((corner >> i) & 1) as f64).collect());
    }
    for _ in 0..random {
        out.push((0..arity).map(|_| rng.gen::<f64>()).collect());
    }
}

/// Build the sampled transition relation of `model` under `transform` over
/// `grid`, whose box must equal the transform's codomain.
///
/// A sampled successor escapes when it leaves `S`, when `f` is undefined at
/// it, or when its image leaves the grid box. Results only depend on
/// `cfg.seed`, not on scheduling.
pub fn compute_transitions<M: ControlModel + ?Sized>(
    model: &M,
    transform: &Transform,
    grid: &GridSpec,
    cfg: &SamplingConfig,
) -> Result<TransitionTable, SynthesisError> {
    if !grid.bounds().approx_eq(transform.codomain(), 1e-9) || model.dim() != transform.dim() {
        return Err(SynthesisError::ConfigMismatch);
    }
    let cells = grid.cell_count();
    let actions = model.action_count();
    let s_box = transform.domain().clone();
    let arity = model.disturbance_arity();

    let per_cell: Vec<(Vec<(Vec<u32>, bool)>, bool)> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let cbox = grid.linear_cell_box(cell);
            let mut preimages = preimage_samples(transform, &cbox, cfg.per_axis);
            if preimages.is_empty() && cfg.fallback_per_axis > cfg.per_axis && transform.preimage_bounds(&cbox).is_some()
            {
                preimages = preimage_samples(transform, &cbox, cfg.fallback_per_axis);
            }
            let empty = preimages.is_empty();
            let mut next = vec![0.0; model.dim()];
            let mut img = vec![0.0; transform.codomain().dim()];
            let mut us = Vec::new();
            let lists = (0..actions)
                .map(|a| {
                    let mut rng = Rng::seed_from_u64(mix_seed(cfg.seed, &[cell as u64, a as u64]));
                    let mut succ = Vec::new();
                    let mut escapes = false;
                    for s in &preimages {
                        disturbance_samples(arity, cfg.random_disturbances, &mut rng, &mut us);
                        for u in &us {
                            model.step_into(s, a, u, &mut next);
                            if !in_closed_box(&s_box, &next) || !transform.forward_into(&next, &mut img) {
                                escapes = true;
                                continue;
                            }
                            match grid.linear_cell_of(&img) {
                                Some(c) => succ.push(c as u32),
                                None => escapes = true,
                            }
                        }
                    }
                    succ.sort_unstable();
                    succ.dedup();
                    (succ, escapes)
                })
                .collect();
            (lists, empty)
        })
        .collect();

    let mut empty = Vec::with_capacity(cells);
    let mut lists = Vec::with_capacity(cells * actions);
    for (l, e) in per_cell {
        lists.extend(l);
        empty.push(e);
    }
    let mut table = TransitionTable::from_lists(cells, actions, lists);
    table.empty = empty;
    Ok(table)
}

fn preimage_samples(transform: &Transform, cbox: &Aabb, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for t in support_points(cbox, per_axis) {
        transform.preimage_each(&t, |s| out.push(s.to_vec()));
    }
    out
}

fn in_closed_box(b: &Aabb, p: &[f64]) -> bool {
    (0..b.dim()).all(|i| p[i] >= b.lo[i] && p[i] <= b.hi[i])
}

// Depth of the preimage subdivision used to decide initial safety.
const SAFE_REFINE_DEPTH: usize = 6;

/// Cells of `grid` whose whole preimage lies in `phi`, excluding cells with
/// an empty preimage.
///
/// The preimage of each cell is enclosed in boxes by recursive subdivision
/// of the cell in `T`; a cell is safe when every enclosure with a nonempty
/// preimage lies inside `phi`. This is exact for the identity and an
/// under-approximation otherwise.
pub fn initial_safe(grid: &GridSpec, transform: &Transform, phi: &Region) -> SafeSet {
    let bits = (0..grid.cell_count())
        .into_par_iter()
        .map(|cell| matches!(classify_preimage(transform, phi, &grid.linear_cell_box(cell), SAFE_REFINE_DEPTH), Some(true)))
        .collect();
    SafeSet::from_bits(bits)
}

// Some(true): nonempty preimage inside phi; Some(false): some preimage point
// may be outside phi; None: empty preimage.
fn classify_preimage(transform: &Transform, phi: &Region, cell: &Aabb, depth: usize) -> Option<bool> {
    let bounds = transform.preimage_bounds(cell)?;
    match phi.classify(&bounds) {
        Containment::Inside => Some(true),
        _ if depth == 0 => {
            let any_preimage = support_points(cell, 3).iter().any(|t| !transform.preimage(t).is_empty());
            let outside = phi.classify(&bounds) == Containment::Outside;
            if outside && !any_preimage {
                None
            } else {
                Some(false)
            }
        }
        _ => {
            let mut nonempty = false;
            for part in halves(cell) {
                match classify_preimage(transform, phi, &part, depth - 1) {
                    Some(false) => return Some(false),
                    Some(true) => nonempty = true,
                    None => {}
                }
            }
            nonempty.then_some(true)
        }
    }
}

// Split a box into 2^d equal parts.
fn halves(b: &Aabb) -> Vec<Aabb> {
    let d = b.dim();
    (0..1usize << d)
        .map(|m| {
            let mut lo = b.lo.clone();
            let mut hi = b.hi.clone();
            for i in 0..d {
                let mid = 0.5 * (b.lo[i] + b.hi[i]);
                if (m >> i) & 1 == 0 {
                    hi[i] = mid;
                } else {
                    lo[i] = mid;
                }
            }
            Aabb::new(lo, hi)
        })
        .collect()
}
