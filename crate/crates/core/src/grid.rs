//! Axis-aligned regular grids over bounded boxes.
//!
//! Cells are half-open in every dimension, `[low, high)`, so every point of
//! the bounding box belongs to exactly one cell. Cells are stored and
//! addressed in row-major order (the last dimension varies fastest).

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// An axis-aligned box `[lo_0, hi_0) x ... x [lo_{d-1}, hi_{d-1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal dimension");
        Self { lo, hi }
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        Self {
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Half-open membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() >= self.dim()
            && (0..self.dim()).all(|i| p[i] >= self.lo[i] && p[i] < self.hi[i])
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h))
    }

    /// Intersection of two boxes; `None` if empty.
    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        let b = Aabb { lo, hi };
        (!b.is_empty()).then_some(b)
    }

    /// Equal bounds up to an absolute tolerance.
    pub fn approx_eq(&self, other: &Aabb, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| (a - b).abs() <= tol)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// One dimension of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(low: f64, high: f64, count: usize) -> Self {
        Self { low, high, count }
    }

    pub fn diameter(&self) -> f64 {
        (self.high - self.low) / self.count as f64
    }
}

/// Integer coordinates of a cell, one per dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub Vec<usize>);

impl CellIndex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<usize>> for CellIndex {
    fn from(v: Vec<usize>) -> Self {
        CellIndex(v)
    }
}

/// A regular axis-aligned partition of a bounded box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
    // row-major strides, derived from `axes`
    #[serde(skip)]
    strides: Vec<usize>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self, GridError> {
        if axes.is_empty() {
            return Err(GridError::InvalidSpec("grid needs at least one dimension".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.low.is_finite() && a.high.is_finite()) || !(a.low < a.high) {
                return Err(GridError::InvalidSpec(format!(
                    "axis {i}: need finite low < high, got [{}, {})",
                    a.low, a.high
                )));
            }
            if a.count == 0 {
                return Err(GridError::InvalidSpec(format!("axis {i}: cell count must be positive")));
            }
            if !(a.diameter() > 0.0) {
                return Err(GridError::InvalidSpec(format!("axis {i}: cell diameter underflows")));
            }
        }
        let mut strides = vec![1usize; axes.len()];
        for i in (0..axes.len() - 1).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(axes[i + 1].count)
                .ok_or_else(|| GridError::InvalidSpec("cell count overflows".into()))?;
        }
        strides[0]
            .checked_mul(axes[0].count)
            .ok_or_else(|| GridError::InvalidSpec("cell count overflows".into()))?;
        Ok(Self { axes, strides })
    }

    /// Uniform grid helper: `bounds[i] = (low, high)`, `counts[i]` cells.
    pub fn uniform(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self, GridError> {
        if bounds.len() != counts.len() {
            return Err(GridError::InvalidSpec("bounds and counts differ in length".into()));
        }
        Self::new(
            bounds
                .iter()
                .zip(counts)
                .map(|(&(l, h), &c)| Axis::new(l, h, c))
                .collect(),
        )
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            lo: self.axes.iter().map(|a| a.low).collect(),
            hi: self.axes.iter().map(|a| a.high).collect(),
        }
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::diameter).collect()
    }

    /// Index of the cell along one axis, or `None` outside `[low, high)`.
    #[inline]
    pub fn axis_index(&self, dim: usize, x: f64) -> Option<usize> {
        let a = &self.axes[dim];
        if !(x >= a.low && x < a.high) {
            return None;
        }
        let k = ((x - a.low) / a.diameter()).floor() as usize;
        // x < high but rounding can still push k to count
        Some(k.min(a.count - 1))
    }

    /// `[s]`: the unique cell containing `s`.
    pub fn cell_of(&self, s: &[f64]) -> Result<CellIndex, GridError> {
        self.check_point_dim(s)?;
        let mut idx = Vec::with_capacity(self.dim());
        for (i, &x) in s.iter().take(self.dim()).enumerate() {
            idx.push(self.axis_index(i, x).ok_or(GridError::OutOfBounds)?);
        }
        Ok(CellIndex(idx))
    }

    /// Row-major linear index of the cell containing `s`; reads only the
    /// first `dim()` coordinates of `s`.
    #[inline]
    pub fn linear_cell_of(&self, s: &[f64]) -> Option<usize> {
        if s.len() < self.dim() {
            return None;
        }
        let mut lin = 0;
        for i in 0..self.dim() {
            lin += self.axis_index(i, s[i])? * self.strides[i];
        }
        Some(lin)
    }

    pub fn linear(&self, c: &CellIndex) -> Result<usize, GridError> {
        self.check_index(c)?;
        Ok(c.0.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    pub fn unlinear(&self, mut lin: usize) -> Result<CellIndex, GridError> {
        if lin >= self.cell_count() {
            return Err(GridError::InvalidIndex);
        }
        let mut idx = vec![0; self.dim()];
        for i in 0..self.dim() {
            idx[i] = lin / self.strides[i];
            lin %= self.strides[i];
        }
        Ok(CellIndex(idx))
    }

    pub fn cell_box(&self, c: &CellIndex) -> Result<Aabb, GridError> {
        self.check_index(c)?;
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for (a, &k) in self.axes.iter().zip(&c.0) {
            let d = a.diameter();
            lo.push(a.low + k as f64 * d);
            // the last cell ends exactly at the grid bound
            hi.push(if k + 1 == a.count { a.high } else { a.low + (k + 1) as f64 * d });
        }
        Ok(Aabb { lo, hi })
    }

    pub fn linear_cell_box(&self, lin: usize) -> Aabb {
        let c = self.unlinear(lin).expect("linear index in range");
        self.cell_box(&c).expect("valid index")
    }

    pub fn cell_center(&self, c: &CellIndex) -> Result<Vec<f64>, GridError> {
        Ok(self.cell_box(c)?.center())
    }

    /// Boundary coordinate `k` (0..=count) along `dim`.
    pub fn boundary(&self, dim: usize, k: usize) -> f64 {
        let a = &self.axes[dim];
        if k >= a.count {
            a.high
        } else {
            a.low + k as f64 * a.diameter()
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.cell_count()).map(|l| self.unlinear(l).expect("in range"))
    }

    /// Cells whose box intersects `region`.
    pub fn outer_cells(&self, region: &Region) -> Vec<CellIndex> {
        self.cells()
            .filter(|c| {
                let b = self.cell_box(c).expect("valid");
                region.classify(&b) != Containment::Outside
            })
            .collect()
    }

    /// Cells whose box is a subset of `region`.
    pub fn inner_cells(&self, region: &Region) -> Vec<CellIndex> {
        self.cells()
            .filter(|c| {
                let b = self.cell_box(c).expect("valid");
                region.classify(&b) == Containment::Inside
            })
            .collect()
    }

    fn check_point_dim(&self, s: &[f64]) -> Result<(), GridError> {
        if s.len() < self.dim() {
            return Err(GridError::DimensionMismatch { expected: self.dim(), got: s.len() });
        }
        Ok(())
    }

    fn check_index(&self, c: &CellIndex) -> Result<(), GridError> {
        if c.dim() != self.dim() || c.0.iter().zip(&self.axes).any(|(&k, a)| k >= a.count) {
            return Err(GridError::InvalidIndex);
        }
        Ok(())
    }

    /// Rebuild derived fields after deserialization.
    pub fn rebuild(self) -> Result<Self, GridError> {
        Self::new(self.axes)
    }
}

/// Three-valued relation between a box and a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    /// The whole box lies in the region.
    Inside,
    /// The box and the region are disjoint.
    Outside,
    Straddles,
}

impl Containment {
    fn complement(self) -> Self {
        match self {
            Containment::Inside => Containment::Outside,
            Containment::Outside => Containment::Inside,
            Containment::Straddles => Containment::Straddles,
        }
    }
}

/// Geometric regions used for safety properties and obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Closed ball `|x - center| <= radius`.
    Disc { center: Vec<f64>, radius: f64 },
    /// Closed half-space `normal . x <= offset`.
    HalfPlane { normal: Vec<f64>, offset: f64 },
    /// Half-open box `[lo, hi)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed box `[lo, hi]`; infinite bounds are allowed.
    ClosedBox { lo: Vec<f64>, hi: Vec<f64> },
    Union { parts: Vec<Region> },
    Intersection { parts: Vec<Region> },
    Complement { inner: std::boxed::Box<Region> },
}

impl Region {
    pub fn disc(center: Vec<f64>, radius: f64) -> Self {
        Region::Disc { center, radius }
    }

    pub fn union(parts: Vec<Region>) -> Self {
        Region::Union { parts }
    }

    pub fn intersection(parts: Vec<Region>) -> Self {
        Region::Intersection { parts }
    }

    pub fn complement(inner: Region) -> Self {
        Region::Complement { inner: std::boxed::Box::new(inner) }
    }

    /// Everything.
    pub fn everything() -> Self {
        Region::complement(Region::union(vec![]))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Disc { center, radius } => {
                let d2: f64 = center.iter().zip(p).map(|(c, x)| (x - c) * (x - c)).sum();
                d2 <= radius * radius
            }
            Region::HalfPlane { normal, offset } => {
                normal.iter().zip(p).map(|(n, x)| n * x).sum::<f64>() <= *offset
            }
            Region::Box { lo, hi } => (0..lo.len()).all(|i| p[i] >= lo[i] && p[i] < hi[i]),
            Region::ClosedBox { lo, hi } => (0..lo.len()).all(|i| p[i] >= lo[i] && p[i] <= hi[i]),
            Region::Union { parts } => parts.iter().any(|r| r.contains(p)),
            Region::Intersection { parts } => parts.iter().all(|r| r.contains(p)),
            Region::Complement { inner } => !inner.contains(p),
        }
    }

    /// Relation between the half-open box `b` and this region.
    ///
    /// Exact for the primitives. Combinators propagate the three-valued
    /// result, so a box covered jointly by several straddling parts of a
    /// union is reported as `Straddles`.
    pub fn classify(&self, b: &Aabb) -> Containment {
        match self {
            Region::Disc { center, radius } => {
                let r2 = radius * radius;
                let mut near2 = 0.0;
                let mut far2 = 0.0;
                for i in 0..b.dim() {
                    let c = center[i];
                    let nearest = c.clamp(b.lo[i], b.hi[i]);
                    near2 += (nearest - c) * (nearest - c);
                    let far = (c - b.lo[i]).abs().max((b.hi[i] - c).abs());
                    far2 += far * far;
                }
                if far2 <= r2 {
                    Containment::Inside
                } else if near2 < r2 || (near2 == r2 && nearest_in_half_open(b, center)) {
                    Containment::Straddles
                } else {
                    Containment::Outside
                }
            }
            Region::HalfPlane { normal, offset } => {
                let (mut min, mut max) = (0.0, 0.0);
                for i in 0..b.dim() {
                    let (a, c) = (normal[i] * b.lo[i], normal[i] * b.hi[i]);
                    min += a.min(c);
                    max += a.max(c);
                }
                if max <= *offset {
                    Containment::Inside
                } else if min > *offset {
                    Containment::Outside
                } else {
                    Containment::Straddles
                }
            }
            Region::Box { lo, hi } => {
                let disjoint = (0..b.dim()).any(|i| !(b.lo[i].max(lo[i]) < b.hi[i].min(hi[i])));
                if disjoint {
                    Containment::Outside
                } else if (0..b.dim()).all(|i| b.lo[i] >= lo[i] && b.hi[i] <= hi[i]) {
                    Containment::Inside
                } else {
                    Containment::Straddles
                }
            }
            Region::ClosedBox { lo, hi } => {
                // [b.lo, b.hi) meets [lo, hi] iff b.lo <= hi and lo < b.hi
                let disjoint = (0..b.dim()).any(|i| !(b.lo[i] <= hi[i] && lo[i] < b.hi[i]));
                if disjoint {
                    Containment::Outside
                } else if (0..b.dim()).all(|i| b.lo[i] >= lo[i] && b.hi[i] <= hi[i]) {
                    Containment::Inside
                } else {
                    Containment::Straddles
                }
            }
            Region::Union { parts } => {
                let mut all_out = true;
                for p in parts {
                    match p.classify(b) {
                        Containment::Inside => return Containment::Inside,
                        Containment::Straddles => all_out = false,
                        Containment::Outside => {}
                    }
                }
                if all_out {
                    Containment::Outside
                } else {
                    Containment::Straddles
                }
            }
            Region::Intersection { parts } => {
                let mut all_in = true;
                for p in parts {
                    match p.classify(b) {
                        Containment::Outside => return Containment::Outside,
                        Containment::Straddles => all_in = false,
                        Containment::Inside => {}
                    }
                }
                if all_in {
                    Containment::Inside
                } else {
                    Containment::Straddles
                }
            }
            Region::Complement { inner } => inner.classify(b).complement(),
        }
    }
}

// Tangency case of the disc test: the nearest point must itself be a member
// of the half-open box.
fn nearest_in_half_open(b: &Aabb, center: &[f64]) -> bool {
    (0..b.dim()).all(|i| center[i] < b.hi[i])
}
