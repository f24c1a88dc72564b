//! Planar convex-body kernel.
//!
//! Polygons are stored as counterclockwise vertex lists together with the
//! outward normal angle of every edge. Edge `i` runs from `verts[i]` to
//! `verts[i + 1]` and its direction is `v_t` for `t = normals[i]`, so the
//! start of an edge is `v⁻(t)` and its end is `v⁺(t)`.
//!
//! Carrying the normals explicitly (instead of re-deriving them with `atan2`)
//! keeps the atoms of the surface-area measure on the exact angles that built
//! the polygon, which matters when short edges appear in optimized caps.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeomError;

/// Tolerance used when matching a query angle against an edge normal.
pub const ANGLE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// `self × o`, the z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Vec2, lambda: f64) -> Vec2 {
        self * (1.0 - lambda) + o * lambda
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// `u_t = (cos t, sin t)`.
#[inline]
pub fn u(t: f64) -> Vec2 {
    let (s, c) = t.sin_cos();
    Vec2::new(c, s)
}

/// `v_t = (−sin t, cos t)`.
#[inline]
pub fn v(t: f64) -> Vec2 {
    let (s, c) = t.sin_cos();
    Vec2::new(-s, c)
}

/// Representative of `t` in `[0, 2π)`. Values within `ANGLE_EPS` of `2π` map to 0.
pub fn canonical(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if TAU - r < ANGLE_EPS {
        0.0
    } else {
        r
    }
}

/// True when `t` lies strictly inside the arc `(a, b)` taken counterclockwise, `b − a ≤ 2π`.
pub fn in_open_arc(t: f64, a: f64, b: f64) -> bool {
    let off = (t - a).rem_euclid(TAU);
    off > ANGLE_EPS && off < (b - a) - ANGLE_EPS
}

/// Angle newtype holding the canonical representative in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(t: f64) -> Self {
        Angle(canonical(t))
    }

    #[inline]
    pub fn rad(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn u(self) -> Vec2 {
        u(self.0)
    }

    #[inline]
    pub fn v(self) -> Vec2 {
        v(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Closed,
    Open,
}

/// `H₋(t, h) = {p·u_t ≤ h}` or `H₊(t, h) = {p·u_t ≥ h}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub t: f64,
    pub h: f64,
    pub side: Side,
    pub boundary: Boundary,
}

impl HalfPlane {
    pub fn minus(t: f64, h: f64) -> Self {
        Self { t, h, side: Side::Minus, boundary: Boundary::Closed }
    }

    pub fn plus(t: f64, h: f64) -> Self {
        Self { t, h, side: Side::Plus, boundary: Boundary::Closed }
    }

    /// The same set written as `H₋`: `H₊(t, h) = H₋(t + π, −h)`.
    pub fn to_minus(self) -> Self {
        match self.side {
            Side::Minus => Self { t: canonical(self.t), ..self },
            Side::Plus => Self {
                t: canonical(self.t + PI),
                h: -self.h,
                side: Side::Minus,
                boundary: self.boundary,
            },
        }
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let s = p.dot(u(self.t));
        match (self.side, self.boundary) {
            (Side::Minus, Boundary::Closed) => s <= self.h + tol,
            (Side::Minus, Boundary::Open) => s < self.h - tol,
            (Side::Plus, Boundary::Closed) => s >= self.h - tol,
            (Side::Plus, Boundary::Open) => s > self.h + tol,
        }
    }
}

/// Atoms `(t, weight)` sorted by canonical angle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `Σ w v_t`; vanishes for the measure of a closed polygon.
    pub fn closure_sum(&self) -> Vec2 {
        self.atoms.iter().fold(Vec2::ZERO, |acc, &(t, w)| acc + v(t) * w)
    }

    /// Weight at `t`, or 0 when no atom sits there.
    pub fn weight_at(&self, t: f64) -> f64 {
        let t = canonical(t);
        self.atoms
            .iter()
            .find(|a| angle_close(a.0, t))
            .map_or(0.0, |a| a.1)
    }

    /// Sum of weights on the open arc `(a, b)`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        self.atoms.iter().filter(|x| in_open_arc(x.0, a, b)).map(|x| x.1).sum()
    }
}

fn angle_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d < ANGLE_EPS || TAU - d < ANGLE_EPS
}

/// Convex polygon, counterclockwise, possibly degenerate (segment or point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPoly {
    verts: Vec<Vec2>,
    /// `normals[i]` is the outward normal angle of the edge `verts[i] → verts[i+1]`.
    normals: Vec<f64>,
}

impl ConvexPoly {
    /// Builds a polygon from a counterclockwise vertex list.
    ///
    /// Consecutive duplicates and collinear middle vertices are dropped
    /// (cross product below `1e−12 · scale²`). Clockwise turns are rejected.
    pub fn from_vertices(pts: &[Vec2]) -> Result<Self, GeomError> {
        if pts.is_empty() {
            return Err(GeomError::EmptyVertexList);
        }
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let scale = pts.iter().fold(1.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
        let len_tol = 1e-12 * scale;
        let cross_tol = 1e-12 * scale * scale;

        let mut ring: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts {
            if ring.last().is_none_or(|q| (p - *q).norm() > len_tol) {
                ring.push(p);
            }
        }
        while ring.len() > 1 && (ring[0] - ring[ring.len() - 1]).norm() <= len_tol {
            ring.pop();
        }
        // Drop collinear vertices until the ring is stable.
        loop {
            let m = ring.len();
            if m < 3 {
                break;
            }
            let mut removed = false;
            for i in 0..m {
                let a = ring[(i + m - 1) % m];
                let b = ring[i];
                let c = ring[(i + 1) % m];
                let cr = (b - a).cross(c - b);
                if cr < -cross_tol {
                    return Err(GeomError::NotConvex);
                }
                if cr.abs() <= cross_tol && (b - a).dot(c - b) >= 0.0 {
                    ring.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }
        if ring.len() == 3 {
            // A back-and-forth triple is a segment.
            let (a, b, c) = (ring[0], ring[1], ring[2]);
            if ((b - a).cross(c - a)).abs() <= cross_tol {
                ring = collinear_extremes(&ring);
            }
        }
        let normals = ring_normals(&ring);
        let total_turn = winding(&normals);
        if ring.len() >= 3 && (total_turn - TAU).abs() > 1e-6 {
            return Err(GeomError::NotConvex);
        }
        Ok(Self::canonical_start(ring, normals))
    }

    /// Polygon from vertices with known edge normals; drops edges shorter than `len_tol`.
    pub(crate) fn from_parts(verts: Vec<Vec2>, normals: Vec<f64>, len_tol: f64) -> Self {
        debug_assert_eq!(verts.len(), normals.len());
        let m = verts.len();
        if m <= 1 {
            return Self { verts, normals: Vec::new() };
        }
        let mut vs = Vec::with_capacity(m);
        let mut ns = Vec::with_capacity(m);
        for i in 0..m {
            let a = verts[i];
            let b = verts[(i + 1) % m];
            if (b - a).norm() > len_tol {
                vs.push(a);
                ns.push(canonical(normals[i]));
            }
        }
        if vs.is_empty() {
            return Self { verts: vec![verts[0]], normals: Vec::new() };
        }
        // Dropped edges leave their start vertex out; the kept edges still chain.
        Self::canonical_start(vs, ns)
    }

    fn canonical_start(verts: Vec<Vec2>, normals: Vec<f64>) -> Self {
        if normals.is_empty() {
            return Self { verts, normals };
        }
        let k = normals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut verts = verts;
        let mut normals = normals;
        verts.rotate_left(k);
        normals.rotate_left(k);
        Self { verts, normals }
    }

    pub fn point(p: Vec2) -> Self {
        Self { verts: vec![p], normals: Vec::new() }
    }

    #[inline]
    pub fn verts(&self) -> &[Vec2] {
        &self.verts
    }

    #[inline]
    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn edge_count(&self) -> usize {
        self.normals.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.verts.len() < 3
    }

    /// `h_P(t)`; the vertex found by [`Self::vertex`] and its two neighbours
    /// are compared so that rounding in the stored normals cannot lose the maximum.
    pub fn support(&self, t: f64) -> f64 {
        let d = u(t);
        let m = self.verts.len();
        if m <= 3 || self.normals.is_empty() {
            return self.verts.iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max);
        }
        let i = self.cone_index(canonical(t));
        [i + m - 1, i, i + 1].iter().map(|&j| self.verts[j % m].dot(d)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first edge whose normal is at least `t`, modulo the edge count.
    ///
    /// Normals are stored ascending from the smallest, so vertex `i` owns the
    /// normal cone between edges `i − 1` and `i`.
    fn cone_index(&self, t: f64) -> usize {
        self.normals.partition_point(|&n| n < t) % self.normals.len()
    }

    /// Index of the edge whose normal equals `t`, if any.
    fn edge_index(&self, t: f64) -> Option<usize> {
        let m = self.normals.len();
        if m == 0 {
            return None;
        }
        let t = canonical(t);
        let i = self.cone_index(t);
        [i, (i + m - 1) % m, 0, m - 1].into_iter().find(|&j| angle_close(self.normals[j], t))
    }

    /// `v⁺(t)` (side `Plus`) or `v⁻(t)` (side `Minus`).
    pub fn vertex(&self, t: f64, side: Side) -> Vec2 {
        let m = self.verts.len();
        if m == 1 || self.normals.is_empty() {
            return self.verts[0];
        }
        if let Some(i) = self.edge_index(t) {
            return match side {
                Side::Minus => self.verts[i],
                Side::Plus => self.verts[(i + 1) % m],
            };
        }
        self.verts[self.cone_index(canonical(t))]
    }

    pub fn sigma(&self) -> DiscreteMeasure {
        let m = self.verts.len();
        if m < 2 {
            return DiscreteMeasure::default();
        }
        let mut atoms: Vec<(f64, f64)> = (0..m)
            .map(|i| (self.normals[i], (self.verts[(i + 1) % m] - self.verts[i]).norm()))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        DiscreteMeasure { atoms }
    }

    /// Length of the edge with normal `t` (0 when the face is a vertex).
    pub fn edge_length(&self, t: f64) -> f64 {
        let m = self.verts.len();
        self.edge_index(t)
            .map_or(0.0, |i| (self.verts[(i + 1) % m] - self.verts[i]).norm())
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let m = self.verts.len();
        if m < 3 {
            return 0.0;
        }
        let s: f64 = (0..m).map(|i| self.verts[i].cross(self.verts[(i + 1) % m])).sum();
        0.5 * s
    }

    /// `½ Σ h(t_i) σ(t_i)`.
    pub fn area_from_measure(&self) -> f64 {
        0.5 * self.sigma().atoms.iter().map(|&(t, w)| self.support(t) * w).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.sigma().total()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.verts.iter().enumerate() {
            for b in &self.verts[i + 1..] {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let m = self.verts.len();
        match m {
            1 => (p - self.verts[0]).norm() <= tol,
            _ => (0..m).all(|i| p.dot(u(self.normals[i])) <= self.verts[i].dot(u(self.normals[i])) + tol),
        }
    }

    pub fn translate(&self, d: Vec2) -> Self {
        Self {
            verts: self.verts.iter().map(|&p| p + d).collect(),
            normals: self.normals.clone(),
        }
    }
}

/// For a collinear ring, the two extreme points as a segment ring.
fn collinear_extremes(ring: &[Vec2]) -> Vec<Vec2> {
    let a = ring[0];
    let dir = ring.iter().map(|&p| p - a).max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap_or(Vec2::ZERO);
    let key = |p: &Vec2| (*p - a).dot(dir);
    let lo = *ring.iter().min_by(|x, y| key(x).total_cmp(&key(y))).unwrap_or(&a);
    let hi = *ring.iter().max_by(|x, y| key(x).total_cmp(&key(y))).unwrap_or(&a);
    vec![lo, hi]
}

fn ring_normals(ring: &[Vec2]) -> Vec<f64> {
    let m = ring.len();
    if m < 2 {
        return Vec::new();
    }
    (0..m)
        .map(|i| {
            let e = ring[(i + 1) % m] - ring[i];
            canonical(f64::atan2(-e.x, e.y))
        })
        .collect()
}

fn winding(normals: &[f64]) -> f64 {
    let m = normals.len();
    (0..m).map(|i| (normals[(i + 1) % m] - normals[i]).rem_euclid(TAU)).sum()
}

pub fn support_at(p: &ConvexPoly, t: f64) -> f64 {
    p.support(t)
}

pub fn vertex_at(p: &ConvexPoly, t: f64, side: Side) -> Vec2 {
    p.vertex(t, side)
}

pub fn sigma_of(p: &ConvexPoly) -> DiscreteMeasure {
    p.sigma()
}

pub fn area(p: &ConvexPoly) -> f64 {
    p.area()
}

/// A clipping line `p·u_t ≤ h` tagged with the caller's index.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Line {
    pub t: f64,
    pub h: f64,
    pub n: Vec2,
    pub id: usize,
}

impl Line {
    pub fn new(t: f64, h: f64, id: usize) -> Self {
        Self { t: canonical(t), h, n: u(t), id }
    }

    /// Intersection of the two boundary lines; `None` when parallel.
    #[inline]
    pub fn meet(&self, o: &Line) -> Option<Vec2> {
        let det = self.n.cross(o.n);
        if det.abs() < 1e-15 {
            return None;
        }
        Some(Vec2::new(
            (self.h * o.n.y - o.h * self.n.y) / det,
            (self.n.x * o.h - o.n.x * self.h) / det,
        ))
    }

    #[inline]
    fn slack(&self, p: Vec2) -> f64 {
        self.h - self.n.dot(p)
    }
}

/// Result of clipping with provenance: vertex `i` starts the edge lying on `lines[ids[i]]`.
pub(crate) struct Clipped {
    pub verts: Vec<Vec2>,
    pub ids: Vec<usize>,
}

/// Half-plane intersection of `p·u_t ≤ h` constraints.
///
/// Returns `Ok(None)` when empty. Lines need not be sorted. Ties in angle keep
/// the smaller offset. Unbounded intersections are an error.
pub(crate) fn clip_lines(lines: &[Line]) -> Result<Option<Clipped>, GeomError> {
    if lines.is_empty() {
        return Err(GeomError::Unbounded);
    }
    let mut ls: Vec<Line> = lines.to_vec();
    ls.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.h.total_cmp(&b.h)));
    ls.dedup_by(|later, earlier| angle_close(later.t, earlier.t));
    // A wrap-around duplicate (near 0 and near 2π).
    if ls.len() > 1 && angle_close(ls[0].t, ls[ls.len() - 1].t) {
        let last = ls.pop().expect("len > 1");
        if last.h < ls[0].h {
            ls[0] = last;
        }
    }
    let scale = 1.0 + ls.iter().fold(0.0f64, |m, l| m.max(l.h.abs()));
    let max_gap = max_angle_gap(&ls);
    if max_gap >= PI - 1e-12 {
        // Possibly unbounded: decide emptiness inside a large box.
        let r = 1e6 * scale;
        let mut boxed = ls.clone();
        for k in 0..4 {
            boxed.push(Line::new(k as f64 * PI / 2.0, r, usize::MAX));
        }
        boxed.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.h.total_cmp(&b.h)));
        boxed.dedup_by(|later, earlier| angle_close(later.t, earlier.t));
        return match deque_clip(&boxed, scale)? {
            None => Ok(None),
            Some(_) => Err(GeomError::Unbounded),
        };
    }
    deque_clip(&ls, scale)
}

fn max_angle_gap(ls: &[Line]) -> f64 {
    let m = ls.len();
    if m == 1 {
        return TAU;
    }
    (0..m)
        .map(|i| (ls[(i + 1) % m].t - ls[i].t).rem_euclid(TAU))
        .map(|g| if g == 0.0 { TAU } else { g })
        .fold(0.0, f64::max)
}

/// Sorted-angle deque intersection. Lines must be sorted by angle with distinct angles
/// and a bounded normal span.
fn deque_clip(ls: &[Line], scale: f64) -> Result<Option<Clipped>, GeomError> {
    let eps = 1e-12 * scale;
    let mut dq: std::collections::VecDeque<Line> = std::collections::VecDeque::with_capacity(ls.len());
    for l in ls {
        while dq.len() >= 2 {
            let k = dq.len();
            match dq[k - 2].meet(&dq[k - 1]) {
                Some(p) if l.slack(p) < -eps => {
                    dq.pop_back();
                }
                _ => break,
            }
        }
        while dq.len() >= 2 {
            match dq[0].meet(&dq[1]) {
                Some(p) if l.slack(p) < -eps => {
                    dq.pop_front();
                }
                _ => break,
            }
        }
        if let Some(back) = dq.back() {
            // A turn of π or more between consecutive survivors means the region vanished.
            let turn = (l.t - back.t).rem_euclid(TAU);
            if turn >= PI - 1e-15 {
                if turn <= PI + 1e-12 && back.h + l.h >= -eps {
                    // Antiparallel pair bounding a strip of width ≥ 0; keep going.
                } else {
                    return Ok(None);
                }
            }
        }
        dq.push_back(*l);
    }
    loop {
        let k = dq.len();
        if k < 3 {
            break;
        }
        let pb = dq[k - 2].meet(&dq[k - 1]);
        if matches!(pb, Some(p) if dq[0].slack(p) < -eps) {
            dq.pop_back();
            continue;
        }
        let pf = dq[0].meet(&dq[1]);
        if matches!(pf, Some(p) if dq[k - 1].slack(p) < -eps) {
            dq.pop_front();
            continue;
        }
        break;
    }
    let k = dq.len();
    if k < 2 {
        return Ok(None);
    }
    // Consecutive survivors must turn by less than π for a closed ring.
    for i in 0..k {
        let turn = (dq[(i + 1) % k].t - dq[i].t).rem_euclid(TAU);
        if turn > PI + 1e-12 {
            return Ok(None);
        }
    }
    // Nearly concurrent triples can leave a redundant middle line whose edge
    // runs backwards; such lines are dropped until every edge is forward.
    let mut ring: Vec<Line> = dq.into_iter().collect();
    let verts = loop {
        let k = ring.len();
        if k < 2 {
            return Ok(None);
        }
        let mut verts = Vec::with_capacity(k);
        for i in 0..k {
            let prev = &ring[(i + k - 1) % k];
            let cur = &ring[i];
            let p = match prev.meet(cur) {
                Some(p) => p,
                // Antiparallel neighbours of a degenerate strip: project onto the current line.
                None => match cur.meet(&ring[(i + 1) % k]) {
                    Some(q) => q,
                    None => return Ok(None),
                },
            };
            verts.push(p);
        }
        if k < 4 {
            break verts;
        }
        let keep: Vec<bool> = (0..k).map(|i| (verts[(i + 1) % k] - verts[i]).dot(v(ring[i].t)) >= -eps).collect();
        if keep.iter().all(|&x| x) {
            break verts;
        }
        ring = ring.into_iter().zip(keep).filter_map(|(l, x)| x.then_some(l)).collect();
    };
    let ids: Vec<usize> = ring.iter().map(|l| l.id).collect();
    let dq = ring;
    // Every vertex must satisfy every surviving constraint.
    for p in &verts {
        if dq.iter().any(|l| l.slack(*p) < -1e-9 * scale) {
            return Ok(None);
        }
    }
    Ok(Some(Clipped { verts, ids }))
}

/// Intersection of closed half-planes, `None` when empty.
pub fn clip_halfplanes(hps: &[HalfPlane]) -> Result<Option<ConvexPoly>, GeomError> {
    if hps.iter().any(|h| !h.t.is_finite() || !h.h.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let lines: Vec<Line> = hps
        .iter()
        .enumerate()
        .map(|(i, hp)| {
            let m = hp.to_minus();
            Line::new(m.t, m.h, i)
        })
        .collect();
    let scale = 1.0 + lines.iter().fold(0.0f64, |m, l| m.max(l.h.abs()));
    Ok(clip_lines(&lines)?.map(|c| {
        let normals = c.ids.iter().map(|&i| lines[i].t).collect();
        ConvexPoly::from_parts(c.verts, normals, 1e-12 * scale)
    }))
}

/// Minkowski barycenter `(1−λ)P₁ + λP₂`.
pub fn lerp(p1: &ConvexPoly, p2: &ConvexPoly, lambda: f64) -> ConvexPoly {
    let mut ts: Vec<f64> = p1.normals.iter().chain(p2.normals.iter()).copied().collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| angle_close(*a, *b));
    if ts.len() > 1 && angle_close(ts[0], ts[ts.len() - 1]) {
        ts.pop();
    }
    if ts.is_empty() {
        return ConvexPoly::point(p1.verts[0].lerp(p2.verts[0], lambda));
    }
    let verts: Vec<Vec2> = ts
        .iter()
        .map(|&t| p1.vertex(t, Side::Minus).lerp(p2.vertex(t, Side::Minus), lambda))
        .collect();
    let scale = verts.iter().fold(1.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    ConvexPoly::from_parts(verts, ts, 1e-13 * scale)
}

/// Reflection across the line through `O` and `o_ω = (tan(π/4 − ω/2), 1)`.
pub fn mirror(p: &ConvexPoly, omega: f64) -> ConvexPoly {
    let alpha = PI / 4.0 + omega / 2.0;
    let d = u(alpha);
    let refl = |q: Vec2| d * (2.0 * q.dot(d)) - q;
    let m = p.verts.len();
    if m == 1 {
        return ConvexPoly::point(refl(p.verts[0]));
    }
    // Edge i (v_i → v_{i+1}, normal n_i) maps to R(v_{i+1}) → R(v_i) with normal 2α − n_i.
    let verts: Vec<Vec2> = (0..m).map(|j| refl(p.verts[(2 * m - j) % m])).collect();
    let normals: Vec<f64> = (0..m).map(|j| canonical(2.0 * alpha - p.normals[(2 * m - j - 1) % m])).collect();
    ConvexPoly::canonical_start(verts, normals)
}
