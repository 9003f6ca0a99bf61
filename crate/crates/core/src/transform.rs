//! State-space transformations `f: S -> T` with set-valued inverses.
//!
//! A [`Transform`] knows its domain box `S` and codomain box `T`. The
//! inverse returns the preimage of a point restricted to (the closure of)
//! `S`, so points of `T` without a preimage map to the empty set. All
//! built-in transforms are injective; the set-valued interface leaves room
//! for ones that are not.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::TransformError;
use crate::grid::Aabb;
use crate::models::ControlModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    /// `(x, y) -> (atan2(y, x), sqrt(x^2 + y^2))`, undefined within
    /// `origin_eps` of the origin.
    Polar { r_max: f64, origin_eps: f64 },
    /// `(v, p) -> (m g p + m v^2 / 2, v)`.
    Energy { mass: f64, gravity: f64, energy_max: f64 },
    /// `(theta, omega) -> (theta, omega - p(theta))`; `coefficients[i]`
    /// multiplies `theta^i`, degree at most 3.
    PolyOffset { coefficients: Vec<f64> },
}

impl TransformKind {
    pub fn tag(&self) -> u32 {
        match self {
            TransformKind::Identity => 0,
            TransformKind::Polar { .. } => 1,
            TransformKind::Energy { .. } => 2,
            TransformKind::PolyOffset { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Polar { .. } => "polar",
            TransformKind::Energy { .. } => "energy",
            TransformKind::PolyOffset { .. } => "poly_offset",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            TransformKind::Identity => vec![],
            TransformKind::Polar { r_max, origin_eps } => vec![*r_max, *origin_eps],
            TransformKind::Energy { mass, gravity, energy_max } => vec![*mass, *gravity, *energy_max],
            TransformKind::PolyOffset { coefficients } => coefficients.clone(),
        }
    }

    pub fn from_tag(tag: u32, params: &[f64]) -> Result<Self, TransformError> {
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(TransformError::InvalidParams(format!(
                    "transform tag {tag} takes {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        match tag {
            0 => want(0).map(|_| TransformKind::Identity),
            1 => want(2).map(|_| TransformKind::Polar { r_max: params[0], origin_eps: params[1] }),
            2 => want(3).map(|_| TransformKind::Energy {
                mass: params[0],
                gravity: params[1],
                energy_max: params[2],
            }),
            3 => Ok(TransformKind::PolyOffset { coefficients: params.to_vec() }),
            _ => Err(TransformError::InvalidParams(format!("unknown transform tag {tag}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transform {
    kind: TransformKind,
    domain: Aabb,
    codomain: Aabb,
}

impl Transform {
    /// Build a transform of the given kind over the domain box `S`. The
    /// codomain box is derived from the kind's parameters.
    pub fn new(kind: TransformKind, domain: Aabb) -> Result<Self, TransformError> {
        let codomain = match &kind {
            TransformKind::Identity => domain.clone(),
            TransformKind::Polar { r_max, origin_eps } => {
                need_dim(&domain, 2)?;
                if !(*r_max > 0.0 && *origin_eps >= 0.0) {
                    return Err(TransformError::InvalidParams("polar needs r_max > 0, origin_eps >= 0".into()));
                }
                Aabb::new(vec![-PI, 0.0], vec![PI, *r_max])
            }
            TransformKind::Energy { mass, gravity, energy_max } => {
                need_dim(&domain, 2)?;
                if !(*mass > 0.0 && *gravity > 0.0 && *energy_max > 0.0) {
                    return Err(TransformError::InvalidParams("energy needs positive m, g, E_max".into()));
                }
                Aabb::new(vec![0.0, domain.lo[0]], vec![*energy_max, domain.hi[0]])
            }
            TransformKind::PolyOffset { coefficients } => {
                need_dim(&domain, 2)?;
                if coefficients.len() > 4 {
                    return Err(TransformError::InvalidParams(
                        "polynomial offset supports degree at most 3".into(),
                    ));
                }
                domain.clone()
            }
        };
        Ok(Self { kind, domain, codomain })
    }

    pub fn identity_transform(domain: Aabb) -> Self {
        Self::new(TransformKind::Identity, domain).expect("identity is always valid")
    }

    pub fn polar_transform(domain: Aabb, r_max: f64) -> Result<Self, TransformError> {
        Self::new(TransformKind::Polar { r_max, origin_eps: 1e-9 }, domain)
    }

    pub fn energy_transform(domain: Aabb, mass: f64, gravity: f64, energy_max: f64) -> Result<Self, TransformError> {
        Self::new(TransformKind::Energy { mass, gravity, energy_max }, domain)
    }

    /// `p(theta) = sum coefficients[i] theta^i`.
    pub fn poly_offset_transform(domain: Aabb, coefficients: Vec<f64>) -> Result<Self, TransformError> {
        Self::new(TransformKind::PolyOffset { coefficients }, domain)
    }

    /// Reassemble a transform from serialized parts, checking the codomain.
    pub fn from_parts(kind: TransformKind, domain: Aabb, codomain: &Aabb) -> Result<Self, TransformError> {
        let t = Self::new(kind, domain)?;
        if !t.codomain.approx_eq(codomain, 1e-12) {
            return Err(TransformError::InvalidParams("codomain does not match transform".into()));
        }
        Ok(t)
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn codomain(&self) -> &Aabb {
        &self.codomain
    }

    pub fn is_injective(&self) -> bool {
        true
    }

    /// Whether every point of the codomain box has a preimage.
    pub fn is_surjective(&self) -> bool {
        matches!(self.kind, TransformKind::Identity)
    }

    /// Dimension of the points this transform reads.
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `f(s)`, reading the first `dim()` coordinates of `s`. Returns `false`
    /// where `f` is undefined.
    #[inline]
    pub fn forward_into(&self, s: &[f64], out: &mut [f64]) -> bool {
        match &self.kind {
            TransformKind::Identity => {
                let d = self.dim();
                out[..d].copy_from_slice(&s[..d]);
                true
            }
            TransformKind::Polar { origin_eps, .. } => {
                let r = s[0].hypot(s[1]);
                if !(r > *origin_eps) {
                    return false;
                }
                let mut theta = s[1].atan2(s[0]);
                if theta >= PI {
                    theta -= 2.0 * PI;
                }
                out[0] = theta;
                out[1] = r;
                true
            }
            TransformKind::Energy { mass, gravity, .. } => {
                let (v, p) = (s[0], s[1]);
                out[0] = mass * gravity * p + 0.5 * mass * v * v;
                out[1] = v;
                true
            }
            TransformKind::PolyOffset { coefficients } => {
                out[0] = s[0];
                out[1] = s[1] - poly_eval(coefficients, s[0]);
                true
            }
        }
    }

    pub fn forward(&self, s: &[f64]) -> Result<Vec<f64>, TransformError> {
        let mut out = vec![0.0; self.codomain.dim()];
        if self.forward_into(s, &mut out) {
            Ok(out)
        } else {
            Err(TransformError::Undefined)
        }
    }

    /// Maps the leading `dim()` coordinates and keeps the remaining ones,
    /// e.g. `(theta, omega, x, v) -> (theta, z, x, v)`.
    pub fn forward_state(&self, s: &[f64]) -> Result<Vec<f64>, TransformError> {
        let mut out = self.forward(s)?;
        out.extend_from_slice(&s[self.dim().min(s.len())..]);
        Ok(out)
    }

    /// Calls `visit` once per preimage point of `t` within `S`.
    #[inline]
    pub fn preimage_each(&self, t: &[f64], mut visit: impl FnMut(&[f64])) {
        let mut s = [0.0f64; 8];
        let d = self.dim();
        let ok = match &self.kind {
            TransformKind::Identity => {
                s[..d].copy_from_slice(&t[..d]);
                true
            }
            TransformKind::Polar { origin_eps, .. } => {
                let (theta, r) = (t[0], t[1]);
                let (sin, cos) = theta.sin_cos();
                s[0] = r * cos;
                s[1] = r * sin;
                r > *origin_eps
            }
            TransformKind::Energy { mass, gravity, .. } => {
                let (e, v) = (t[0], t[1]);
                s[0] = v;
                s[1] = (e - 0.5 * mass * v * v) / (mass * gravity);
                true
            }
            TransformKind::PolyOffset { coefficients } => {
                s[0] = t[0];
                s[1] = t[1] + poly_eval(coefficients, t[0]);
                true
            }
        };
        if ok && in_closed_box(&self.domain, &s[..d]) {
            visit(&s[..d]);
        }
    }

    /// `f^{-1}(t)`: every point of `S` mapping to `t`.
    pub fn preimage(&self, t: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        self.preimage_each(t, |s| out.push(s.to_vec()));
        out
    }

    /// An axis-aligned box containing `f^{-1}(cell)`, or `None` when the
    /// cell has no preimage in `S`. Exact for the identity; a tight bound
    /// for the other kinds.
    pub fn preimage_bounds(&self, cell: &Aabb) -> Option<Aabb> {
        let raw = match &self.kind {
            TransformKind::Identity => cell.clone(),
            TransformKind::Polar { origin_eps, .. } => {
                let (t0, t1) = (cell.lo[0], cell.hi[0]);
                let (r0, r1) = (cell.lo[1].max(*origin_eps), cell.hi[1]);
                if r1 <= r0 {
                    return None;
                }
                let (cmin, cmax) = trig_range(t0, t1, f64::cos, &[0.0], &[-PI, PI]);
                let (smin, smax) = trig_range(t0, t1, f64::sin, &[PI / 2.0], &[-PI / 2.0]);
                let (xl, xh) = bilinear_range(r0, r1, cmin, cmax);
                let (yl, yh) = bilinear_range(r0, r1, smin, smax);
                Aabb::new(vec![xl, yl], vec![xh, yh])
            }
            TransformKind::Energy { mass, gravity, .. } => {
                let (e0, e1) = (cell.lo[0], cell.hi[0]);
                let (v0, v1) = (cell.lo[1].max(self.domain.lo[0]), cell.hi[1].min(self.domain.hi[0]));
                if v1 < v0 {
                    return None;
                }
                let vmin2 = if v0 <= 0.0 && 0.0 <= v1 { 0.0 } else { (v0 * v0).min(v1 * v1) };
                let vmax2 = (v0 * v0).max(v1 * v1);
                let mg = mass * gravity;
                let p0 = (e0 - 0.5 * mass * vmax2) / mg;
                let p1 = (e1 - 0.5 * mass * vmin2) / mg;
                Aabb::new(vec![v0, p0], vec![v1, p1])
            }
            TransformKind::PolyOffset { coefficients } => {
                let (t0, t1) = (cell.lo[0].max(self.domain.lo[0]), cell.hi[0].min(self.domain.hi[0]));
                if t1 < t0 {
                    return None;
                }
                let (pmin, pmax) = poly_range(coefficients, t0, t1);
                Aabb::new(vec![t0, cell.lo[1] + pmin], vec![t1, cell.hi[1] + pmax])
            }
        };
        closed_intersection(&raw, &self.domain)
    }
}

/// `delta_T(t, a) = f(delta_S(f^{-1}(t), a))`, one image per preimage point
/// and disturbance sample. Successors where `f` is undefined are dropped.
pub fn transformed_successor<M: ControlModel + ?Sized>(
    model: &M,
    tr: &Transform,
    t: &[f64],
    action: usize,
    disturbances: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let mut images = Vec::new();
    let mut next = vec![0.0; model.dim()];
    let no_disturbance = [Vec::new()];
    let samples: &[Vec<f64>] = if disturbances.is_empty() { &no_disturbance } else { disturbances };
    tr.preimage_each(t, |s| {
        for u in samples {
            model.step_into(s, action, u, &mut next);
            if let Ok(img) = tr.forward(&next) {
                images.push(img);
            }
        }
    });
    images
}

fn need_dim(b: &Aabb, d: usize) -> Result<(), TransformError> {
    if b.dim() == d {
        Ok(())
    } else {
        Err(TransformError::InvalidParams(format!("transform needs a {d}-dimensional domain, got {}", b.dim())))
    }
}

fn in_closed_box(b: &Aabb, p: &[f64]) -> bool {
    (0..b.dim()).all(|i| p[i] >= b.lo[i] && p[i] <= b.hi[i])
}

fn closed_intersection(a: &Aabb, b: &Aabb) -> Option<Aabb> {
    let lo: Vec<f64> = a.lo.iter().zip(&b.lo).map(|(x, y)| x.max(*y)).collect();
    let hi: Vec<f64> = a.hi.iter().zip(&b.hi).map(|(x, y)| x.min(*y)).collect();
    lo.iter().zip(&hi).all(|(l, h)| l <= h).then(|| Aabb::new(lo, hi))
}

fn bilinear_range(r0: f64, r1: f64, c0: f64, c1: f64) -> (f64, f64) {
    let v = [r0 * c0, r0 * c1, r1 * c0, r1 * c1];
    (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

// Range of a trig function over [t0, t1] within [-pi, pi], given where it
// attains its maximum and minimum.
fn trig_range(t0: f64, t1: f64, f: fn(f64) -> f64, maxima: &[f64], minima: &[f64]) -> (f64, f64) {
    let (a, b) = (f(t0), f(t1));
    let mut lo = a.min(b);
    let mut hi = a.max(b);
    if maxima.iter().any(|&m| t0 <= m && m <= t1) {
        hi = 1.0;
    }
    if minima.iter().any(|&m| t0 <= m && m <= t1) {
        lo = -1.0;
    }
    (lo, hi)
}

pub(crate) fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

// Exact range of a polynomial of degree <= 3 over [a, b].
fn poly_range(c: &[f64], a: f64, b: f64) -> (f64, f64) {
    let mut xs = vec![a, b];
    let get = |i: usize| c.get(i).copied().unwrap_or(0.0);
    // p'(x) = c1 + 2 c2 x + 3 c3 x^2
    let (qa, qb, qc) = (3.0 * get(3), 2.0 * get(2), get(1));
    if qa != 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            xs.push((-qb + sq) / (2.0 * qa));
            xs.push((-qb - sq) / (2.0 * qa));
        }
    } else if qb != 0.0 {
        xs.push(-qc / qb);
    }
    let vals: Vec<f64> = xs.into_iter().filter(|x| *x >= a && *x <= b).map(|x| poly_eval(c, x)).collect();
    (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}
