//! Caps, supporting hallways, wedges, niche polylines and the polygon
//! sofa-area functional `A_Θ`.
//!
//! Heights are indexed in the sorted order of `Θ⋄`: the angles of `Θ`, then
//! `ω`, then `π/2` (merged with `ω` when `ω = π/2`), then `Θ + π/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::envelope::{integrate, max_merge, upper_envelope, Pl, XLine};
use crate::error::CapError;
use crate::geometry::{clip_lines, u, v, ConvexPoly, Line, Side, Vec2};

/// Tolerance for the four support conditions of a cap.
pub const CAP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub omega: f64,
    pub thetas: Vec<f64>,
}

impl AngleSet {
    pub fn new(omega: f64, thetas: Vec<f64>) -> Result<Self, CapError> {
        if !(omega > 0.0 && omega <= FRAC_PI_2 + 1e-12) {
            return Err(CapError::InvalidAngleSet(format!("omega {omega} outside (0, π/2]")));
        }
        let omega = if (omega - FRAC_PI_2).abs() <= 1e-12 { FRAC_PI_2 } else { omega };
        if thetas.is_empty() {
            return Err(CapError::InvalidAngleSet("empty angle list".into()));
        }
        for w in thetas.windows(2) {
            if w[1] <= w[0] {
                return Err(CapError::InvalidAngleSet("angles must be strictly increasing".into()));
            }
        }
        if thetas[0] <= 0.0 || *thetas.last().expect("nonempty") >= omega {
            return Err(CapError::InvalidAngleSet("angles must lie strictly inside (0, ω)".into()));
        }
        Ok(Self { omega, thetas })
    }

    /// `{ω i / n : 1 ≤ i < n}`; for `ω = π/2` this is the right-angle set `Θ_n`.
    pub fn uniform(n: usize, omega: f64) -> Result<Self, CapError> {
        if n < 2 {
            return Err(CapError::InvalidAngleSet(format!("n = {n} must be at least 2")));
        }
        Self::new(omega, (1..n).map(|i| omega * i as f64 / n as f64).collect())
    }

    pub fn right_angle(n: usize) -> Result<Self, CapError> {
        Self::uniform(n, FRAC_PI_2)
    }

    #[inline]
    pub fn is_right(&self) -> bool {
        self.omega == FRAC_PI_2
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    #[inline]
    pub fn idx_omega(&self) -> usize {
        self.thetas.len()
    }

    #[inline]
    pub fn idx_half(&self) -> usize {
        if self.is_right() {
            self.thetas.len()
        } else {
            self.thetas.len() + 1
        }
    }

    #[inline]
    pub fn idx_perp(&self, i: usize) -> usize {
        self.idx_half() + 1 + i
    }

    pub fn len_diamond(&self) -> usize {
        self.idx_perp(self.thetas.len())
    }

    /// `Θ⋄` in increasing order.
    pub fn diamond(&self) -> Vec<f64> {
        let mut out = self.thetas.clone();
        out.push(self.omega);
        if !self.is_right() {
            out.push(FRAC_PI_2);
        }
        out.extend(self.thetas.iter().map(|t| t + FRAC_PI_2));
        out
    }

    /// Indices of heights that move freely; `h(ω)` and `h(π/2)` are pinned by standard position.
    pub fn free_indices(&self) -> Vec<usize> {
        let (io, ih) = (self.idx_omega(), self.idx_half());
        (0..self.len_diamond()).filter(|&i| i != io && i != ih).collect()
    }
}

/// Heights on `Θ⋄`, aligned with [`AngleSet::diamond`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightFn {
    pub values: Vec<f64>,
}

impl HeightFn {
    pub fn constant(theta: &AngleSet, c: f64) -> Self {
        Self { values: vec![c; theta.len_diamond()] }
    }

    /// Support function of `poly` sampled on `Θ⋄`.
    pub fn of_poly(theta: &AngleSet, poly: &ConvexPoly) -> Self {
        Self { values: theta.diamond().iter().map(|&t| poly.support(t)).collect() }
    }

    fn check(&self, theta: &AngleSet) -> Result<(), CapError> {
        let expected = theta.len_diamond();
        if self.values.len() != expected {
            return Err(CapError::HeightLength { expected, got: self.values.len() });
        }
        if self.values.iter().any(|x| !x.is_finite()) {
            return Err(CapError::NotACap("non-finite height".into()));
        }
        Ok(())
    }
}

/// A polygon cap with its angle set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub poly: ConvexPoly,
    pub theta: AngleSet,
    /// Set when some prescribed height exceeds the support of the clipped polygon.
    pub reduced: bool,
}

impl Cap {
    /// Wraps a polygon, checking `h(ω) = h(π/2) = 1` and `h(ω+π) = h(3π/2) = 0`.
    pub fn from_poly(poly: ConvexPoly, theta: AngleSet) -> Result<Self, CapError> {
        let w = theta.omega;
        let checks = [
            (poly.support(w), 1.0, "h(ω)"),
            (poly.support(FRAC_PI_2), 1.0, "h(π/2)"),
            (poly.support(w + PI), 0.0, "h(ω+π)"),
            (poly.support(3.0 * FRAC_PI_2), 0.0, "h(3π/2)"),
        ];
        for (got, want, name) in checks {
            if (got - want).abs() > CAP_TOL {
                return Err(CapError::NotACap(format!("{name} = {got}, expected {want}")));
            }
        }
        Ok(Self { poly, theta, reduced: false })
    }

    pub fn heights(&self) -> HeightFn {
        HeightFn::of_poly(&self.theta, &self.poly)
    }

    #[inline]
    pub fn support(&self, t: f64) -> f64 {
        self.poly.support(t)
    }
}

const BOTTOM_OMEGA: usize = usize::MAX - 2;
const BOTTOM_HALF: usize = usize::MAX - 1;

fn cap_line_set(theta: &AngleSet, h: &HeightFn) -> Vec<Line> {
    let diamond = theta.diamond();
    let mut lines: Vec<Line> = diamond.iter().zip(&h.values).enumerate().map(|(i, (&t, &hv))| Line::new(t, hv, i)).collect();
    let w = theta.omega;
    if !theta.is_right() {
        lines.push(Line::new(w + PI, 1.0 - h.values[theta.idx_omega()], BOTTOM_OMEGA));
    }
    lines.push(Line::new(3.0 * FRAC_PI_2, 1.0 - h.values[theta.idx_half()], BOTTOM_HALF));
    lines
}

/// Cap polygon plus edge lengths per diamond index and for the two bottom lines.
struct CapBuild {
    poly: ConvexPoly,
    edge: Vec<f64>,
    bottom_omega: f64,
    bottom_half: f64,
}

fn build_cap(theta: &AngleSet, h: &HeightFn) -> Result<CapBuild, CapError> {
    h.check(theta)?;
    let lines = cap_line_set(theta, h);
    let clipped = clip_lines(&lines)?.ok_or(CapError::EmptyCap)?;
    let nd = theta.len_diamond();
    let mut edge = vec![0.0; nd];
    let (mut bottom_omega, mut bottom_half) = (0.0, 0.0);
    let m = clipped.verts.len();
    let mut normals = Vec::with_capacity(m);
    for i in 0..m {
        let len = (clipped.verts[(i + 1) % m] - clipped.verts[i]).norm();
        let id = clipped.ids[i];
        match id {
            BOTTOM_OMEGA => bottom_omega += len,
            BOTTOM_HALF => bottom_half += len,
            _ => edge[id] += len,
        }
        normals.push(lines.iter().find(|l| l.id == id).map_or(0.0, |l| l.t));
    }
    if theta.is_right() {
        bottom_omega = bottom_half;
    }
    let scale = 1.0 + h.values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let poly = ConvexPoly::from_parts(clipped.verts, normals, 1e-13 * scale);
    if poly.verts().len() < 3 {
        return Err(CapError::EmptyCap);
    }
    Ok(CapBuild { poly, edge, bottom_omega, bottom_half })
}

/// `C_Θ(h)`, the polygon cut out by the heights.
pub fn cap_from_heights(theta: &AngleSet, h: &HeightFn) -> Result<Cap, CapError> {
    let b = build_cap(theta, h)?;
    let reduced = theta
        .diamond()
        .iter()
        .zip(&h.values)
        .any(|(&t, &hv)| hv - b.poly.support(t) > CAP_TOL);
    Ok(Cap { poly: b.poly, theta: theta.clone(), reduced })
}

/// Wall lines of the hallways as graphs over x, and the floor of the fan.
struct NicheInput {
    lines: Vec<XLine>,
    n_walls: usize,
    floor_ids: Vec<usize>,
}

impl NicheInput {
    fn new(theta: &AngleSet, hv: &[f64]) -> Self {
        let n = theta.n_theta();
        let mut lines = Vec::with_capacity(2 * n + 2);
        for (i, &t) in theta.thetas.iter().enumerate() {
            let (s, c) = t.sin_cos();
            let cb = hv[i] - 1.0;
            let cd = hv[theta.idx_perp(i)] - 1.0;
            lines.push(XLine { m: -c / s, c: cb / s });
            lines.push(XLine { m: s / c, c: cd / c });
        }
        let y0 = hv[theta.idx_half()] - 1.0;
        lines.push(XLine { m: 0.0, c: y0 });
        let mut floor_ids = vec![2 * n];
        if !theta.is_right() {
            let (s, c) = theta.omega.sin_cos();
            let cw = hv[theta.idx_omega()] - 1.0;
            lines.push(XLine { m: -c / s, c: cw / s });
            floor_ids.push(2 * n + 1);
        }
        Self { lines, n_walls: 2 * n, floor_ids }
    }

    /// Open x-interval where `line` lies strictly above every floor line.
    fn above_floor(&self, line: XLine) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &f in &self.floor_ids {
            let fl = self.lines[f];
            let dm = line.m - fl.m;
            let dc = line.c - fl.c;
            if dm == 0.0 {
                if dc <= 0.0 {
                    return None;
                }
            } else if dm > 0.0 {
                lo = lo.max(-dc / dm);
            } else {
                hi = hi.min(-dc / dm);
            }
        }
        (lo < hi).then_some((lo, hi))
    }
}

/// Envelope data of a niche.
struct NicheData {
    area: f64,
    b_len: Vec<f64>,
    d_len: Vec<f64>,
    base_half: f64,
    base_omega: f64,
    combined: Option<Pl>,
    input: NicheInput,
}

fn piece_len(l: XLine, a: f64, b: f64) -> f64 {
    (b - a) * (1.0 + l.m * l.m).sqrt()
}

/// Niche of the height vector `hv`; `cover` forces the envelope range to include an interval.
fn niche_data(theta: &AngleSet, hv: &[f64], cover: Option<(f64, f64)>) -> NicheData {
    let input = NicheInput::new(theta, hv);
    let n = theta.n_theta();
    let lines = &input.lines;
    let mut intervals: Vec<Option<(f64, f64)>> = Vec::with_capacity(n);
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n {
        let ib = input.above_floor(lines[2 * k]);
        let id = input.above_floor(lines[2 * k + 1]);
        let iv = match (ib, id) {
            (Some(a), Some(b)) => {
                let (lo, hi) = (a.0.max(b.0), a.1.min(b.1));
                (lo < hi).then_some((lo, hi))
            }
            _ => None,
        };
        if let Some((lo, hi)) = iv {
            x0 = x0.min(lo);
            x1 = x1.max(hi);
        }
        intervals.push(iv);
    }
    if let Some((a, b)) = cover {
        x0 = x0.min(a);
        x1 = x1.max(b);
    }
    let mut data = NicheData {
        area: 0.0,
        b_len: vec![0.0; n],
        d_len: vec![0.0; n],
        base_half: 0.0,
        base_omega: 0.0,
        combined: None,
        input: NicheInput { lines: Vec::new(), n_walls: 0, floor_ids: Vec::new() },
    };
    if x0.partial_cmp(&x1) != Some(std::cmp::Ordering::Less) {
        data.input = input;
        return data;
    }
    let tents: Vec<Pl> = (0..n)
        .filter(|&k| intervals[k].is_some())
        .map(|k| {
            let (b, d) = (lines[2 * k], lines[2 * k + 1]);
            let xa = (d.c - b.c) / (b.m - d.m);
            if xa <= x0 {
                Pl::single(x0, x1, 2 * k)
            } else if xa >= x1 {
                Pl::single(x0, x1, 2 * k + 1)
            } else {
                Pl { xs: vec![x0, xa, x1], ids: vec![2 * k + 1, 2 * k] }
            }
        })
        .collect();
    let mut floor = Pl::single(x0, x1, input.floor_ids[0]);
    for &f in &input.floor_ids[1..] {
        floor = max_merge(&floor, &Pl::single(x0, x1, f), lines);
    }
    let combined = match upper_envelope(&tents, lines) {
        Some(env) => max_merge(&env, &floor, lines),
        None => floor.clone(),
    };
    for (a, b, id) in combined.pieces() {
        if id >= input.n_walls || b <= a {
            continue;
        }
        let wl = lines[id];
        data.area += 0.5 * (wl.at(a) + wl.at(b)) * (b - a) - integrate(&floor, lines, a, b);
        if id % 2 == 0 {
            data.b_len[id / 2] += piece_len(wl, a, b);
        } else {
            data.d_len[id / 2] += piece_len(wl, a, b);
        }
        for (fa, fb, fid) in floor.pieces() {
            let (lo, hi) = (fa.max(a), fb.min(b));
            if hi > lo {
                let len = piece_len(lines[fid], lo, hi);
                if fid == 2 * n {
                    data.base_half += len;
                } else {
                    data.base_omega += len;
                }
            }
        }
    }
    if theta.is_right() {
        data.base_omega = data.base_half;
    }
    data.area = data.area.max(0.0);
    data.combined = Some(combined);
    data.input = input;
    data
}

/// Value and gradient of `A_Θ` at a height vector.
#[derive(Clone, Debug)]
pub struct AreaEval {
    pub area: f64,
    pub cap_area: f64,
    pub niche_area: f64,
    /// First-order change of `A_Θ` per unit increase of each height, aligned with `Θ⋄`.
    pub grad: Vec<f64>,
}

/// Evaluates `A_Θ(h) = |C_Θ(h)| − |N_Θ(h)|` and its gradient.
pub fn evaluate(theta: &AngleSet, h: &HeightFn) -> Result<AreaEval, CapError> {
    let cb = build_cap(theta, h)?;
    let nd = niche_data(theta, &h.values, None);
    let mut grad = cb.edge.clone();
    for i in 0..theta.n_theta() {
        grad[i] -= nd.b_len[i];
        grad[theta.idx_perp(i)] -= nd.d_len[i];
    }
    let (io, ih) = (theta.idx_omega(), theta.idx_half());
    if theta.is_right() {
        grad[ih] += nd.base_half - cb.bottom_half;
    } else {
        grad[io] += nd.base_omega - cb.bottom_omega;
        grad[ih] += nd.base_half - cb.bottom_half;
    }
    let cap_area = cb.poly.area();
    Ok(AreaEval { area: cap_area - nd.area, cap_area, niche_area: nd.area, grad })
}

/// `A_Θ(h)`.
pub fn sofa_area(theta: &AngleSet, h: &HeightFn) -> Result<f64, CapError> {
    evaluate(theta, h).map(|e| e.area)
}

/// Inner corner `x_K(t) = (h(t) − 1)u_t + (h(t + π/2) − 1)v_t`.
pub fn inner_corner(poly: &ConvexPoly, t: f64) -> Vec2 {
    u(t) * (poly.support(t) - 1.0) + v(t) * (poly.support(t + FRAC_PI_2) - 1.0)
}

/// Rotated hallway touching the cap at angles `t` and `t + π/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportingHallway {
    pub t: f64,
    pub x_corner: Vec2,
    pub y_corner: Vec2,
    /// Lines as `(normal angle, offset)`.
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
    pub d: (f64, f64),
}

pub fn hallway_frame(k: &Cap, t: f64) -> SupportingHallway {
    let ht = k.support(t);
    let hp = k.support(t + FRAC_PI_2);
    let x = u(t) * (ht - 1.0) + v(t) * (hp - 1.0);
    SupportingHallway {
        t,
        x_corner: x,
        y_corner: x + u(t) + v(t),
        a: (t, ht),
        b: (t, ht - 1.0),
        c: (t + FRAC_PI_2, hp),
        d: (t + FRAC_PI_2, hp - 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeInfo {
    pub t: f64,
    pub w_point: Vec2,
    pub z_point: Vec2,
    pub w: f64,
    pub z: f64,
}

/// Right and left ends of the wedge at `t` and their gaps to the cap's bottom corners.
pub fn wedge(k: &Cap, t: f64) -> WedgeInfo {
    let w_ang = k.theta.omega;
    let b = Line::new(t, k.support(t) - 1.0, 0);
    let d = Line::new(t + FRAC_PI_2, k.support(t + FRAC_PI_2) - 1.0, 1);
    let floor = Line::new(FRAC_PI_2, 0.0, 2);
    let side = Line::new(w_ang, 0.0, 3);
    let nan = Vec2::new(f64::NAN, f64::NAN);
    let wp = b.meet(&floor).unwrap_or(nan);
    let zp = d.meet(&side).unwrap_or(nan);
    let a_minus = k.poly.vertex(0.0, Side::Minus);
    let c_plus = k.poly.vertex(w_ang + FRAC_PI_2, Side::Plus);
    WedgeInfo { t, w_point: wp, z_point: zp, w: (a_minus - wp).dot(u(0.0)), z: (c_plus - zp).dot(v(w_ang)) }
}

/// Boundary of `F ∖ N` between the cap's bottom corners, with per-normal lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NichePolyline {
    pub points: Vec<Vec2>,
    /// `(t, τ(t))` for every `t ∈ Θ⋄`.
    pub tau: Vec<(f64, f64)>,
    pub niche_area: f64,
}

pub fn niche_polyline(k: &Cap) -> NichePolyline {
    let theta = &k.theta;
    let hv = k.heights().values;
    let c_plus = k.poly.vertex(theta.omega + FRAC_PI_2, Side::Plus);
    let a_minus = k.poly.vertex(0.0, Side::Minus);
    let (xl, xr) = (c_plus.x, a_minus.x);
    let nd = niche_data(theta, &hv, Some((xl.min(xr), xr.max(xl))));
    let n = theta.n_theta();
    let diamond = theta.diamond();
    let mut tau = vec![0.0; diamond.len()];
    let mut points = Vec::new();
    if let Some(comb) = &nd.combined {
        let lines = &nd.input.lines;
        let mut push = |p: Vec2| {
            if points.last().is_none_or(|q: &Vec2| (*q - p).norm() > 1e-15) {
                points.push(p);
            }
        };
        for (a, b, id) in comb.pieces() {
            let (lo, hi) = (a.max(xl), b.min(xr));
            if hi <= lo {
                continue;
            }
            let l = lines[id];
            push(Vec2::new(lo, l.at(lo)));
            push(Vec2::new(hi, l.at(hi)));
            let len = piece_len(l, lo, hi);
            let idx = if id < 2 * n {
                if id % 2 == 0 {
                    id / 2
                } else {
                    theta.idx_perp(id / 2)
                }
            } else if id == 2 * n {
                theta.idx_half()
            } else {
                theta.idx_omega()
            };
            tau[idx] += len;
        }
    }
    if points.is_empty() {
        points = vec![c_plus, a_minus];
    }
    // The polyline starts and ends on the cap's bottom corners.
    points[0] = c_plus;
    let last = points.len() - 1;
    points[last] = a_minus;
    NichePolyline { points, tau: diamond.into_iter().zip(tau).collect(), niche_area: nd.area }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NicheCheck {
    pub holds: bool,
    /// A violating angle and its inner corner.
    pub witness: Option<(f64, Vec2)>,
}

/// Checks that each inner corner is outside the open fan or inside the cap.
pub fn niche_in_cap(k: &Cap) -> NicheCheck {
    niche_in_cap_grid(k, 1024)
}

pub fn niche_in_cap_grid(k: &Cap, grid: usize) -> NicheCheck {
    let w = k.theta.omega;
    let uw = u(w);
    let tol = CAP_TOL;
    let grid_pts = (1..=grid).map(|j| w * j as f64 / (grid + 1) as f64);
    for t in k.theta.thetas.iter().copied().chain(grid_pts) {
        let x = inner_corner(&k.poly, t);
        let in_open_fan = x.y > tol && x.dot(uw) > tol;
        if in_open_fan && !k.poly.contains(x, tol) {
            return NicheCheck { holds: false, witness: Some((t, x)) };
        }
    }
    NicheCheck { holds: true, witness: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmLengths {
    pub f_plus: f64,
    pub f_minus: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl ArmLengths {
    pub fn min(&self) -> f64 {
        self.f_plus.min(self.f_minus).min(self.g_plus).min(self.g_minus)
    }
}

/// Distances from the outer corner `y_K(t)` to the contact points on the outer walls.
pub fn arm_lengths(k: &Cap, t: f64) -> ArmLengths {
    let y = hallway_frame(k, t).y_corner;
    let (ut, vt) = (u(t), v(t));
    let a = |s| k.poly.vertex(t, s);
    let c = |s| k.poly.vertex(t + FRAC_PI_2, s);
    ArmLengths {
        f_plus: (y - a(Side::Plus)).dot(vt),
        f_minus: (y - a(Side::Minus)).dot(vt),
        g_plus: (y - c(Side::Plus)).dot(ut),
        g_minus: (y - c(Side::Minus)).dot(ut),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mirror;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    pub(crate) fn hexagon() -> (AngleSet, HeightFn) {
        let th = AngleSet::new(FRAC_PI_2, vec![FRAC_PI_4]).unwrap();
        let h = HeightFn::constant(&th, 1.0);
        (th, h)
    }

    fn rect_cap(x1: f64) -> Cap {
        let p = ConvexPoly::from_vertices(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(x1, 0.0),
            Vec2::new(x1, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        Cap::from_poly(p, AngleSet::new(FRAC_PI_2, vec![FRAC_PI_4]).unwrap()).unwrap()
    }

    #[test]
    fn hexagonal_cap_geometry() {
        let (th, h) = hexagon();
        let k = cap_from_heights(&th, &h).unwrap();
        assert!(!k.reduced);
        assert_abs_diff_eq!(k.poly.area(), 2.0 * SQRT_2 - 1.0, epsilon = 1e-14);
        let e = evaluate(&th, &h).unwrap();
        assert_abs_diff_eq!(e.niche_area, 0.0);
        assert_abs_diff_eq!(e.area, 2.0 * SQRT_2 - 1.0, epsilon = 1e-14);
        // σ(π/4) = σ(3π/4) = √2 with an empty niche; moving the strip up trades the
        // top edge 2√2 − 2 against the bottom edge 2√2.
        assert_abs_diff_eq!(e.grad[0], SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(e.grad[2], SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(e.grad[1], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn redundant_and_infeasible_heights() {
        let th = AngleSet::right_angle(4).unwrap();
        let mut h = HeightFn::constant(&th, 1.0);
        h.values[1] = 100.0;
        let k = cap_from_heights(&th, &h).unwrap();
        assert!(k.reduced);
        assert!(k.support(FRAC_PI_4) < 2.0);
        h.values[0] = -10.0;
        assert_eq!(cap_from_heights(&th, &h).unwrap_err(), CapError::EmptyCap);
    }

    #[test]
    fn hexagon_frame_and_wedge() {
        let (th, h) = hexagon();
        let k = cap_from_heights(&th, &h).unwrap();
        let f = hallway_frame(&k, FRAC_PI_4);
        assert!(f.x_corner.norm() < 1e-15);
        assert!((f.y_corner - (u(FRAC_PI_4) + v(FRAC_PI_4))).norm() < 1e-15);
        let w = wedge(&k, FRAC_PI_4);
        assert!(w.w_point.norm() < 1e-15 && w.z_point.norm() < 1e-15);
        assert_abs_diff_eq!(w.w, SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(w.z, SQRT_2, epsilon = 1e-14);
        let np = niche_polyline(&k);
        assert_eq!(np.niche_area, 0.0);
        // The whole polyline runs along the bottom edge.
        let tau_half = np.tau.iter().find(|x| x.0 == FRAC_PI_2).unwrap().1;
        assert_abs_diff_eq!(tau_half, 2.0 * SQRT_2, epsilon = 1e-14);
        assert!(niche_in_cap(&k).holds);
    }

    #[test]
    fn long_cap_niche_is_clipped_triangle() {
        let k = rect_cap(100.0);
        let np = niche_polyline(&k);
        // Quadrant at π/4: x + y < √2(h(π/4) − 1), −x + y < √2(h(3π/4) − 1), y ≥ 0.
        let cb = SQRT_2 * (k.support(FRAC_PI_4) - 1.0);
        let cd = SQRT_2 * (k.support(3.0 * FRAC_PI_4) - 1.0);
        let (xr, xl) = (cb, -cd);
        let apex_y = (cb + cd) / 2.0;
        let expect = 0.5 * (xr - xl) * apex_y;
        assert_abs_diff_eq!(np.niche_area, expect, epsilon = 1e-9);
        assert!(wedge(&k, FRAC_PI_4).w > 0.0);
        let chk = niche_in_cap(&k);
        assert!(!chk.holds);
        assert_abs_diff_eq!(chk.witness.unwrap().0, FRAC_PI_4);
    }

    #[test]
    fn unit_square_arms() {
        let k = rect_cap(1.0);
        let a = arm_lengths(&k, FRAC_PI_4);
        for x in [a.f_plus, a.f_minus, a.g_plus, a.g_minus] {
            assert_abs_diff_eq!(x, SQRT_2 / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn mirror_equivariance_of_wedges_and_arms() {
        let th = AngleSet::right_angle(8).unwrap();
        let mut h = HeightFn::constant(&th, 1.0);
        for (i, x) in h.values.iter_mut().enumerate() {
            *x += 0.03 * (i * 7 % 5) as f64;
        }
        let (io, ih) = (th.idx_omega(), th.idx_half());
        h.values[io] = 1.0;
        h.values[ih] = 1.0;
        let k = cap_from_heights(&th, &h).unwrap();
        let km = Cap::from_poly(mirror(&k.poly, th.omega), th.clone()).unwrap();
        for t in [0.2, 0.5, 0.9, 1.3] {
            assert_abs_diff_eq!(wedge(&k, t).z, wedge(&km, th.omega - t).w, epsilon = 1e-12);
            assert_abs_diff_eq!(arm_lengths(&km, t).f_plus, arm_lengths(&k, th.omega - t).g_minus, epsilon = 1e-12);
        }
    }

    #[test]
    fn angle_set_layout() {
        let th = AngleSet::uniform(4, 1.2).unwrap();
        let d = th.diamond();
        assert_eq!(d.len(), 8);
        assert_eq!(d[th.idx_omega()], 1.2);
        assert_eq!(d[th.idx_half()], FRAC_PI_2);
        assert_abs_diff_eq!(d[th.idx_perp(0)], 0.3 + FRAC_PI_2, epsilon = 1e-15);
        for w in d.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(AngleSet::new(FRAC_PI_2, vec![]).is_err());
        assert!(AngleSet::new(1.0, vec![1.0]).is_err());
    }

    fn wobbly(n: usize, omega: f64, seed: u64) -> (AngleSet, HeightFn) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let th = AngleSet::uniform(n, omega).unwrap();
        let mut h = HeightFn::constant(&th, 1.0);
        for &i in &th.free_indices() {
            h.values[i] = 1.0 + rng.gen_range(0.0..0.4);
        }
        (th, h)
    }

    /// Midpoint-rule niche area straight from the definition.
    fn riemann_niche(th: &AngleSet, h: &HeightFn, steps: usize) -> f64 {
        let y0 = h.values[th.idx_half()] - 1.0;
        let floor = |x: f64| {
            let mut f = y0;
            if !th.is_right() {
                let (s, c) = th.omega.sin_cos();
                f = f.max((h.values[th.idx_omega()] - 1.0 - x * c) / s);
            }
            f
        };
        let env = |x: f64| {
            th.thetas
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let (s, c) = t.sin_cos();
                    let b = (h.values[i] - 1.0 - x * c) / s;
                    let d = (h.values[th.idx_perp(i)] - 1.0 + x * s) / c;
                    b.min(d)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (lo, hi) = (-4.0, 4.0);
        let dx = (hi - lo) / steps as f64;
        (0..steps)
            .map(|k| {
                let x = lo + (k as f64 + 0.5) * dx;
                (env(x) - floor(x)).max(0.0) * dx
            })
            .sum()
    }

    #[test]
    fn niche_area_matches_riemann_sum() {
        for (seed, omega) in [(1, FRAC_PI_2), (2, FRAC_PI_2), (3, 1.2), (4, 0.9)] {
            let (th, h) = wobbly(6, omega, seed);
            let e = evaluate(&th, &h).unwrap();
            assert!(e.niche_area > 1e-3);
            assert_abs_diff_eq!(e.niche_area, riemann_niche(&th, &h, 400_000), epsilon = 2e-6);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (seed, omega) in [(5, FRAC_PI_2), (6, 1.2)] {
            let (th, h) = wobbly(7, omega, seed);
            let e = evaluate(&th, &h).unwrap();
            let eps = 1e-6;
            for i in 0..th.len_diamond() {
                let (mut hp, mut hm) = (h.clone(), h.clone());
                hp.values[i] += eps;
                hm.values[i] -= eps;
                let fd = (sofa_area(&th, &hp).unwrap() - sofa_area(&th, &hm).unwrap()) / (2.0 * eps);
                assert_abs_diff_eq!(e.grad[i], fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn polyline_lengths_close_up() {
        for (seed, omega) in [(7, FRAC_PI_2), (8, 1.1)] {
            let (th, h) = wobbly(9, omega, seed);
            let k = cap_from_heights(&th, &h).unwrap();
            let np = niche_polyline(&k);
            let sum = np.tau.iter().fold(Vec2::new(0.0, 0.0), |acc, &(t, l)| acc + v(t) * l);
            let c_plus = k.poly.vertex(th.omega + FRAC_PI_2, Side::Plus);
            let a_minus = k.poly.vertex(0.0, Side::Minus);
            assert!((sum - (c_plus - a_minus)).norm() < 1e-12);
            for w in np.points.windows(2) {
                assert!(w[1].x >= w[0].x - 1e-15);
            }
        }
    }
}
