//! Exact decision-tree compression of a strategy's cell map.

use std::path::Path;

use super::io::{self, FileHeader, Reader, TREE_MAGIC};
use super::Strategy;
use crate::error::ShieldError;
use crate::grid::GridSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Points with `t[dim] < threshold` go to `left`, the others to `right`.
    Split { dim: usize, threshold: f64, left: usize, right: usize },
    Leaf(u8),
}

/// Axis-aligned decision tree over `T` with thresholds on cell boundaries.
/// Nodes are stored in preorder; the root is node 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    header: FileHeader,
    nodes: Vec<Node>,
}

// Tolerance for comparing split costs; keeps tie-breaking deterministic.
const COST_EPS: f64 = 1e-9;

impl DecisionTree {
    /// Builds a tree that agrees with `st` on every cell. Two-dimensional
    /// grids with at most `EXACT_BOX_LIMIT` sub-boxes get a tree with the
    /// fewest leaves over all splits on cell boundaries. Otherwise the tree
    /// is grown greedily top-down: a box of cells with a single mask becomes
    /// a leaf, any other box is split at the cell boundary that minimizes the
    /// count-weighted entropy of the masks on both sides. Ties go to the
    /// lowest dimension, then the lowest threshold.
    pub fn from_strategy(st: &Strategy) -> Self {
        let grid = st.grid();
        let mut nodes = Vec::new();
        match Exact::new(grid, st.masks()) {
            Some(ex) => {
                let c = grid.counts();
                ex.emit(grid, [0, c[0], 0, c[1]], &mut nodes);
            }
            None => {
                build(grid, st.masks(), vec![0; grid.dim()], grid.counts(), &mut nodes);
            }
        }
        Self { header: st.header(), nodes }
    }

    /// The greedy tree, regardless of grid size.
    pub fn greedy(st: &Strategy) -> Self {
        let grid = st.grid();
        let mut nodes = Vec::new();
        build(grid, st.masks(), vec![0; grid.dim()], grid.counts(), &mut nodes);
        Self { header: st.header(), nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn header(&self) -> &FileHeader {
        &self.header
    }

    pub fn eval(&self, t: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(m) => return m,
                Node::Split { dim, threshold, left, right } => i = if t[dim] < threshold { left } else { right },
            }
        }
    }

    /// Check the tree against every cell center of `st`.
    pub fn verify(&self, st: &Strategy) -> Result<(), ShieldError> {
        let g = st.grid();
        for (c, &m) in st.masks().iter().enumerate() {
            if self.eval(&g.linear_cell_box(c).center()) != m {
                return Err(ShieldError::TreeMismatch(c));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        io::write_header(&mut buf, TREE_MAGIC, &self.header);
        buf.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for n in &self.nodes {
            match *n {
                Node::Split { dim, threshold, .. } => {
                    buf.push(0);
                    buf.extend_from_slice(&(dim as u32).to_le_bytes());
                    buf.extend_from_slice(&threshold.to_le_bytes());
                }
                Node::Leaf(m) => {
                    buf.push(1);
                    buf.push(m);
                }
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShieldError> {
        let mut r = Reader::new(bytes);
        let header = io::read_header(&mut r, TREE_MAGIC)?;
        let count = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(count.min(1 << 24));
        parse(&mut r, &mut nodes, header.grid.dim(), count)?;
        if nodes.len() != count || !r.is_done() {
            return Err(ShieldError::Corrupt("node count does not match the node list".into()));
        }
        Ok(Self { header, nodes })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ShieldError> {
        let bytes = std::fs::read(path.as_ref())
            .map_err(|e| ShieldError::Corrupt(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_bytes(&bytes)
    }
}

fn parse(r: &mut Reader<'_>, nodes: &mut Vec<Node>, dim: usize, limit: usize) -> Result<usize, ShieldError> {
    if nodes.len() >= limit {
        return Err(ShieldError::Corrupt("more nodes than declared".into()));
    }
    let at = nodes.len();
    match r.u8()? {
        0 => {
            let d = r.u32()? as usize;
            if d >= dim {
                return Err(ShieldError::Corrupt(format!("split on dimension {d}")));
            }
            let threshold = r.f64()?;
            nodes.push(Node::Leaf(0));
            let left = parse(r, nodes, dim, limit)?;
            let right = parse(r, nodes, dim, limit)?;
            nodes[at] = Node::Split { dim: d, threshold, left, right };
        }
        1 => nodes.push(Node::Leaf(r.u8()?)),
        k => return Err(ShieldError::Corrupt(format!("unknown node kind {k}"))),
    }
    Ok(at)
}

// Upper bound on (nx + 1)^2 (ny + 1)^2 for the exact construction.
const EXACT_BOX_LIMIT: usize = 1 << 23;
const MIXED: u16 = 256;

// Minimum leaf counts for every sub-box [x0, x1) x [y0, y1) of a 2-D grid.
struct Exact {
    nx: usize,
    ny: usize,
    leaves: Vec<u32>,
    uniform: Vec<u16>,
}

impl Exact {
    fn new(grid: &GridSpec, masks: &[u8]) -> Option<Self> {
        if grid.dim() != 2 {
            return None;
        }
        let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
        let size = (nx + 1).checked_mul(nx + 1)?.checked_mul(ny + 1)?.checked_mul(ny + 1)?;
        if size > EXACT_BOX_LIMIT {
            return None;
        }
        let mut ex = Self { nx, ny, leaves: vec![0; size], uniform: vec![MIXED; size] };
        for w in 1..=nx {
            for h in 1..=ny {
                for x0 in 0..=nx - w {
                    for y0 in 0..=ny - h {
                        let b = [x0, x0 + w, y0, y0 + h];
                        let i = ex.idx(b);
                        if w == 1 && h == 1 {
                            ex.uniform[i] = masks[x0 * ny + y0] as u16;
                            ex.leaves[i] = 1;
                            continue;
                        }
                        let (l, r) = if w > 1 { ex.halves(b, 0, x0 + 1) } else { ex.halves(b, 1, y0 + 1) };
                        let u = ex.uniform[ex.idx(l)];
                        if u != MIXED && u == ex.uniform[ex.idx(r)] {
                            ex.uniform[i] = u;
                            ex.leaves[i] = 1;
                            continue;
                        }
                        ex.leaves[i] = ex.splits(b).map(|(_, _, c)| c).min().expect("box spans two cells");
                    }
                }
            }
        }
        Some(ex)
    }

    fn idx(&self, b: [usize; 4]) -> usize {
        ((b[0] * (self.nx + 1) + b[1]) * (self.ny + 1) + b[2]) * (self.ny + 1) + b[3]
    }

    fn halves(&self, b: [usize; 4], dim: usize, at: usize) -> ([usize; 4], [usize; 4]) {
        let (mut l, mut r) = (b, b);
        l[2 * dim + 1] = at;
        r[2 * dim] = at;
        (l, r)
    }

    // All splits of `b` in tie-breaking order with their leaf counts.
    fn splits(&self, b: [usize; 4]) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..2).flat_map(move |d| {
            (b[2 * d] + 1..b[2 * d + 1]).map(move |at| {
                let (l, r) = self.halves(b, d, at);
                (d, at, self.leaves[self.idx(l)] + self.leaves[self.idx(r)])
            })
        })
    }

    fn emit(&self, grid: &GridSpec, b: [usize; 4], nodes: &mut Vec<Node>) -> usize {
        let at = nodes.len();
        let i = self.idx(b);
        if self.uniform[i] != MIXED {
            nodes.push(Node::Leaf(self.uniform[i] as u8));
            return at;
        }
        let best = self.leaves[i];
        let (d, split, _) = self.splits(b).find(|s| s.2 == best).expect("optimal split exists");
        nodes.push(Node::Leaf(0));
        let (l, r) = self.halves(b, d, split);
        let left = self.emit(grid, l, nodes);
        let right = self.emit(grid, r, nodes);
        nodes[at] = Node::Split { dim: d, threshold: grid.boundary(d, split), left, right };
        at
    }
}

// Linear indices of the cells in the index box [lo, hi).
fn box_cells(grid: &GridSpec, lo: &[usize], hi: &[usize]) -> Vec<(Vec<usize>, usize)> {
    let counts = grid.counts();
    let d = lo.len();
    let mut out = Vec::new();
    let mut idx = lo.to_vec();
    loop {
        let lin = idx.iter().zip(&counts).fold(0, |acc, (&i, &c)| acc * c + i);
        out.push((idx.clone(), lin));
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < hi[k] {
                break;
            }
            idx[k] = lo[k];
        }
    }
}

// n * H for a histogram: n ln n - sum c ln c.
fn weighted_entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let xlx = |x: u64| if x == 0 { 0.0 } else { x as f64 * (x as f64).ln() };
    xlx(n) - counts.iter().map(|&c| xlx(c)).sum::<f64>()
}

fn build(grid: &GridSpec, masks: &[u8], lo: Vec<usize>, hi: Vec<usize>, nodes: &mut Vec<Node>) -> usize {
    let cells = box_cells(grid, &lo, &hi);
    let mut ids = [usize::MAX; 256];
    let mut distinct = Vec::new();
    for &(_, c) in &cells {
        let m = masks[c] as usize;
        if ids[m] == usize::MAX {
            ids[m] = distinct.len();
            distinct.push(m as u8);
        }
    }
    let at = nodes.len();
    if distinct.len() == 1 {
        nodes.push(Node::Leaf(distinct[0]));
        return at;
    }
    let k = distinct.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for d in 0..grid.dim() {
        let len = hi[d] - lo[d];
        if len < 2 {
            continue;
        }
        let mut hist = vec![0u64; len * k];
        for (idx, c) in &cells {
            hist[(idx[d] - lo[d]) * k + ids[masks[*c] as usize]] += 1;
        }
        let total: Vec<u64> = (0..k).map(|j| (0..len).map(|s| hist[s * k + j]).sum()).collect();
        let mut left = vec![0u64; k];
        for s in 1..len {
            for j in 0..k {
                left[j] += hist[(s - 1) * k + j];
            }
            let right: Vec<u64> = (0..k).map(|j| total[j] - left[j]).collect();
            let cost = weighted_entropy(&left) + weighted_entropy(&right);
            if best.map_or(true, |(b, _, _)| cost < b - COST_EPS) {
                best = Some((cost, d, lo[d] + s));
            }
        }
    }
    let (_, d, split) = best.expect("a box with two masks spans at least two cells");
    nodes.push(Node::Leaf(0));
    let mut left_hi = hi.clone();
    left_hi[d] = split;
    let mut right_lo = lo.clone();
    right_lo[d] = split;
    let left = build(grid, masks, lo, left_hi, nodes);
    let right = build(grid, masks, right_lo, hi, nodes);
    nodes[at] = Node::Split { dim: d, threshold: grid.boundary(d, split), left, right };
    at
}
