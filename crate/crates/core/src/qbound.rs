//! The quadratic upper bound `Q(K, B, D)` on sofa area, its ingredients and
//! its optimality probes.
//!
//! Curves are compared through the curve area functional
//! `𝓙(x) = ½ ∫ x × dx`; a segment contributes `𝓙(p, q) = ½ p × q`.
//! The right tail `B` lives below the inner walls `b_K(t)`, `t ∈ [φ^R, π/2]`,
//! and the left tail `D` below `d_K(t)`, `t ∈ [0, φ^L]`, with
//! `φ^L = π/2 − φ^R`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, QError};
use crate::geometry::{clip_halfplanes, in_open_arc, lerp, u, v, ConvexPoly, HalfPlane, Line, Side, Vec2};
use crate::hallway::{cap_from_heights, evaluate, inner_corner, AngleSet, Cap, HeightFn};

/// Sampling grid for the inner-corner curve `x_K` and the `ι_K` integral.
pub const CORE_GRID: usize = 2048;
/// Uniform wall angles used to cut the tails out of the cap.
pub const TAIL_GRID: usize = 32768;
/// Default `φ^R`.
pub const PHI_DEFAULT: f64 = 0.0395;
/// Tolerance on `X_B = x_K^R` and `Y_D = x_K^L`.
pub const HYPOTHESIS_TOL: f64 = 1e-4;
/// Mass threshold of the `φ` estimator.
pub const PHI_MASS: f64 = 1e-4;

const THREE_HALVES_PI: f64 = 3.0 * FRAC_PI_2;

/// Parametrized polyline `t_i ↦ p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    pub params: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>, params: Vec<f64>) -> Result<Self, GeomError> {
        if points.len() < 2 || points.len() != params.len() {
            return Err(GeomError::EmptyVertexList);
        }
        if points.iter().any(|p| !p.is_finite()) || params.iter().any(|t| !t.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { points, params })
    }

    /// Samples `f` at `n ≥ 2` uniform parameters of `[a, b]`, endpoints included.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Vec2) -> Self {
        let params = linspace(a, b, n.max(2));
        let points = params.iter().map(|&t| f(t)).collect();
        Self { points, params }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

/// `𝓙(p, q) = ½ p × q`.
#[inline]
pub fn segment_area(p: Vec2, q: Vec2) -> f64 {
    0.5 * p.cross(q)
}

/// `½ Σ p_i × p_{i+1}`.
pub fn curve_area(c: &Polyline) -> f64 {
    0.5 * c.points.windows(2).map(|w| w[0].cross(w[1])).sum::<f64>()
}

fn check_range(a: f64, b: f64) -> Result<(), QError> {
    if a < b && b < a + PI {
        Ok(())
    } else {
        Err(QError::InvalidAngleRange(a, b))
    }
}

/// `𝓙(u_P^{a,b}) = ½ Σ h_P(t) σ_P({t})` over atoms strictly inside `(a, b)`.
pub fn convex_arc_area(p: &ConvexPoly, a: f64, b: f64) -> Result<f64, QError> {
    check_range(a, b)?;
    Ok(0.5
        * p.sigma()
            .atoms
            .iter()
            .filter(|x| in_open_arc(x.0, a, b))
            .map(|&(t, w)| p.support(t) * w)
            .sum::<f64>())
}

/// `z(t) = v_P(t) + α(t) v_t` on `n` uniform parameters of `[a, b]`.
///
/// `v_P` jumps along the edge at every normal of `P`, so each normal inside
/// `(a, b)` contributes both one-sided points `v⁻ + α v` and `v⁺ + α v` at
/// the same parameter; the polyline then follows the jump exactly.
pub fn tangent_offset_curve(p: &ConvexPoly, a: f64, b: f64, n: usize, alpha: impl Fn(f64) -> f64) -> Polyline {
    let mut knots: Vec<(f64, Side)> = linspace(a, b, n.max(2)).into_iter().map(|t| (t, Side::Plus)).collect();
    for &nrm in p.normals() {
        let t = a + (nrm - a).rem_euclid(2.0 * PI);
        if t > a && t < b {
            knots.push((t, Side::Minus));
            knots.push((t, Side::Plus));
        }
    }
    // Minus before Plus at a shared parameter.
    knots.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1 == Side::Plus).cmp(&(y.1 == Side::Plus))));
    let points = knots.iter().map(|&(t, side)| p.vertex(t, side) + v(t) * alpha(t)).collect();
    let params = knots.iter().map(|k| k.0).collect();
    Polyline { points, params }
}

/// Meeting point `v_P(s, t)` of the supporting lines at `s` and `t`.
fn tangent_meet(p: &ConvexPoly, s: f64, t: f64) -> Option<Vec2> {
    Line::new(s, p.support(s), 0).meet(&Line::new(t, p.support(t), 1))
}

/// `h'_P(t) = ⟨v_P(t), v_t⟩`, one-sided at the normals.
fn support_derivative(p: &ConvexPoly, t: f64) -> f64 {
    p.vertex(t, Side::Minus).dot(v(t))
}

/// Both values of the Mamikon area of `P` over `[a, b]` for the curve `z`.
///
/// Returns `(𝓙(v⁺(a), z(a)) + 𝓙(z) + 𝓙(z(b), v⁻(b)) − 𝓙(u^{a,b}), ½ ∫ α²)` with
/// `α(t) = ⟨z(t) − v⁺(t), v_t⟩`; the integral is the trapezoid rule on the
/// curve's parameters, which must run from `a` to `b`. A curve that jumps at
/// a normal repeats that parameter, as [`tangent_offset_curve`] does.
pub fn mamikon(p: &ConvexPoly, a: f64, b: f64, z: &Polyline) -> Result<(f64, f64), QError> {
    check_range(a, b)?;
    let (t0, t1) = (z.params[0], *z.params.last().expect("nonempty"));
    if (t0 - a).abs() > 1e-12 || (t1 - b).abs() > 1e-12 {
        return Err(QError::InvalidAngleRange(t0, t1));
    }
    let scale = 1.0 + z.points.iter().fold(0.0f64, |m, q| m.max(q.norm()));
    for (&t, &q) in z.params.iter().zip(&z.points) {
        let off = (q.dot(u(t)) - p.support(t)).abs();
        if off > 1e-9 * scale {
            return Err(QError::OffLine(t, off));
        }
    }
    let first = z.points[0];
    let last = *z.points.last().expect("nonempty");
    let boundary = segment_area(p.vertex(a, Side::Plus), first) + curve_area(z) + segment_area(last, p.vertex(b, Side::Minus))
        - convex_arc_area(p, a, b)?;
    // One-sided values: an interval starts after `v⁺` and ends before `v⁻`.
    let alpha2 = |t: f64, q: Vec2, side: Side| {
        let al = (q - p.vertex(t, side)).dot(v(t));
        al * al
    };
    let integral = 0.5
        * z.params
            .windows(2)
            .zip(z.points.windows(2))
            .map(|(t, q)| 0.5 * (alpha2(t[0], q[0], Side::Plus) + alpha2(t[1], q[1], Side::Minus)) * (t[1] - t[0]))
            .sum::<f64>();
    Ok((boundary, integral))
}

/// `½ ∫_a^b α²` for `z(s) = v_P(s, t)`, by the composite midpoint rule on
/// roughly `n` cells split at the atoms of `P`, where `α` is smooth.
fn mamikon_line_integral(p: &ConvexPoly, a: f64, b: f64, t: f64, n: usize) -> f64 {
    let mut cuts = vec![a];
    for &(s, _) in &p.sigma().atoms {
        // Atom angles are canonical; bring them into [a, b].
        let s = a + (s - a).rem_euclid(2.0 * PI);
        if s > a && s < b {
            cuts.push(s);
        }
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let total = b - a;
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let m = ((n as f64 * len / total).ceil() as usize).max(1);
        let h = len / m as f64;
        for k in 0..m {
            let s = w[0] + (k as f64 + 0.5) * h;
            let Some(z) = tangent_meet(p, s, t) else { continue };
            let al = (z - p.vertex(s, Side::Plus)).dot(v(s));
            acc += al * al * h;
        }
    }
    0.5 * acc
}

/// Cap with its right and left tails; `phi_l = π/2 − phi_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub k: Cap,
    pub b: ConvexPoly,
    pub d: ConvexPoly,
    pub phi_r: f64,
    pub phi_l: f64,
}

/// Largest `t` with `σ_K([0, t)) < PHI_MASS`, capped below `π/4`.
pub fn estimate_phi(k: &ConvexPoly) -> f64 {
    let mut acc = 0.0;
    for &(t, w) in &k.sigma().atoms {
        if t >= FRAC_PI_2 / 2.0 {
            break;
        }
        acc += w;
        if acc >= PHI_MASS {
            return t;
        }
    }
    FRAC_PI_2 / 2.0
}

/// Signed offset along the wall `b_K(φ)`, in direction `v_φ`, from `x_K(φ)`
/// to the tail's corner `X_B`.
///
/// On the wall `x = c u_φ + s v_φ`, every later wall and every edge line of
/// `K` whose normal turns clockwise from `φ` bounds `s` from below; `X_B` is
/// the largest of these bounds.
fn contact_offset(k: &ConvexPoly, phi: f64, grid: usize) -> f64 {
    let c = k.support(phi) - 1.0;
    let walls = wall_grid(k, phi, FRAC_PI_2, 0.0, grid)
        .into_iter()
        .filter(|&t| t > phi)
        .map(|t| ((k.support(t) - 1.0) - c * (t - phi).cos()) / (t - phi).sin());
    let edges = k.normals().iter().filter_map(|&nrm| {
        let sn = (nrm - phi).sin();
        (sn < -1e-12).then(|| (k.support(nrm) - c * (nrm - phi).cos()) / sn)
    });
    let s_lo = walls.chain(edges).fold(f64::NEG_INFINITY, f64::max);
    s_lo - (k.support(phi + FRAC_PI_2) - 1.0)
}

/// `φ^R` at which the right tail touches the inner corner, i.e. `X_B = x_K^R`.
///
/// Bisects the sign change of [`contact_offset`] on `(0, π/4)` found by a
/// coarse scan; the offset jumps at the normals of `K`, so the root can sit
/// on a normal, where the residual gap is that of the nearer side. Falls back
/// to [`estimate_phi`] when no sign change exists.
pub fn estimate_phi_contact(k: &ConvexPoly) -> f64 {
    let f = |phi: f64| contact_offset(k, phi, TAIL_GRID);
    let scan = linspace(1e-6, FRAC_PI_2 / 2.0, 512);
    for w in scan.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let fa = f(a);
        if fa == 0.0 {
            return a;
        }
        if fa.signum() == f(b).signum() {
            continue;
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m).signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        return if f(a).abs() <= f(b).abs() { a } else { b };
    }
    estimate_phi(k)
}

/// Wall angles: `n` uniform points of `[lo, hi]` plus every `t` there at which
/// `t + shift` is a normal of `K`.
fn wall_grid(k: &ConvexPoly, lo: f64, hi: f64, shift: f64, n: usize) -> Vec<f64> {
    let mut ts = linspace(lo, hi, n.max(2));
    for &nrm in k.normals() {
        let t = (nrm - shift).rem_euclid(2.0 * PI);
        if t > lo && t < hi {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn cap_halfplanes(k: &ConvexPoly) -> Vec<HalfPlane> {
    k.normals().iter().map(|&t| HalfPlane::minus(t, k.support(t))).collect()
}

/// `B_K = K ∩ ⋂ H₊(t, h_K(t) − 1)` over `t ∈ [φ^R, π/2]` and
/// `D_K = K ∩ ⋂ H₊(t + π/2, h_K(t + π/2) − 1)` over `t ∈ [0, φ^L]`, with the
/// wall angles sampled on `grid_n` uniform points plus the cap's own normals.
pub fn build_tails(k: &Cap, phi_r: f64, grid_n: usize) -> Result<(ConvexPoly, ConvexPoly), QError> {
    if !(phi_r > 0.0 && phi_r < FRAC_PI_2) {
        return Err(QError::InvalidAngleRange(phi_r, FRAC_PI_2));
    }
    let phi_l = FRAC_PI_2 - phi_r;
    let poly = &k.poly;
    let tail = |ts: Vec<f64>, shift: f64| -> Result<ConvexPoly, QError> {
        let mut hps = cap_halfplanes(poly);
        hps.extend(ts.iter().map(|&t| HalfPlane::plus(t + shift, poly.support(t + shift) - 1.0)));
        match clip_halfplanes(&hps) {
            Ok(Some(p)) if !p.is_degenerate() && p.area() > 0.0 => Ok(p),
            Ok(_) => Err(QError::EmptyTail),
            Err(e) => Err(QError::Cap(e.into())),
        }
    };
    let b = tail(wall_grid(poly, phi_r, FRAC_PI_2, 0.0, grid_n), 0.0)?;
    let d = tail(wall_grid(poly, 0.0, phi_l, FRAC_PI_2, grid_n), FRAC_PI_2)?;
    Ok((b, d))
}

impl Triple {
    /// `(K, B_K, D_K)` at the given `φ^R`.
    pub fn from_cap(k: Cap, phi_r: f64, grid_n: usize) -> Result<Self, QError> {
        let (b, d) = build_tails(&k, phi_r, grid_n)?;
        Ok(Self { k, b, d, phi_r, phi_l: FRAC_PI_2 - phi_r })
    }

    fn poly(&self) -> &ConvexPoly {
        &self.k.poly
    }

    pub fn x_r(&self) -> Vec2 {
        inner_corner(self.poly(), self.phi_r)
    }

    pub fn x_l(&self) -> Vec2 {
        inner_corner(self.poly(), self.phi_l)
    }

    /// `X_B = v_B⁺(π + φ^R)`.
    pub fn x_b(&self) -> Vec2 {
        self.b.vertex(PI + self.phi_r, Side::Plus)
    }

    /// `Y_D = v_D⁻(3π/2 + φ^L)`.
    pub fn y_d(&self) -> Vec2 {
        self.d.vertex(THREE_HALVES_PI + self.phi_l, Side::Minus)
    }

    /// `W_K^R`: the wall `b_K(φ^R)` on the x-axis.
    pub fn w_r(&self) -> Vec2 {
        let h = self.poly().support(self.phi_r) - 1.0;
        Vec2::new(h / self.phi_r.cos(), 0.0)
    }

    /// `Z_K^L`: the wall `d_K(φ^L)` on the x-axis.
    pub fn z_l(&self) -> Vec2 {
        let h = self.poly().support(self.phi_l + FRAC_PI_2) - 1.0;
        Vec2::new(-h / self.phi_l.sin(), 0.0)
    }

    /// Largest violation of the membership conditions of the triple space.
    pub fn violation(&self) -> TripleCheck {
        let k = self.poly();
        let grid = linspace(0.0, 2.0 * PI, 721);
        let containment = grid
            .iter()
            .map(|&t| (self.b.support(t) - k.support(t)).max(self.d.support(t) - k.support(t)))
            .fold(f64::NEG_INFINITY, f64::max);
        let fb = |t: f64| k.support(t) + self.b.support(PI + t) - 1.0;
        let fd = |t: f64| k.support(FRAC_PI_2 + t) + self.d.support(THREE_HALVES_PI + t) - 1.0;
        let ineq = linspace(self.phi_r, FRAC_PI_2, 512)
            .into_iter()
            .map(fb)
            .chain(linspace(0.0, self.phi_l, 512).into_iter().map(fd))
            .fold(f64::NEG_INFINITY, f64::max);
        let equality = [fb(self.phi_r), fb(FRAC_PI_2), fd(0.0), fd(self.phi_l)]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        TripleCheck { containment, ineq, equality }
    }
}

/// Worst slacks of `B, D ⊆ K`, of the wall inequalities and of their end equalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleCheck {
    pub containment: f64,
    pub ineq: f64,
    pub equality: f64,
}

impl TripleCheck {
    pub fn holds(&self) -> bool {
        self.containment <= 1e-9 && self.ineq <= 1e-9 && self.equality <= 1e-6
    }
}

/// The six terms of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTerms {
    pub area_k: f64,
    pub tail_d: f64,
    pub seg_left: f64,
    pub core: f64,
    pub seg_right: f64,
    pub tail_b: f64,
}

impl QTerms {
    pub fn q(&self) -> f64 {
        self.area_k + self.tail_d + self.seg_left - self.core + self.seg_right + self.tail_b
    }
}

fn core_curve(t: &Triple, grid: usize) -> Polyline {
    Polyline::sample(t.phi_r, t.phi_l, grid, |s| inner_corner(t.poly(), s))
}

pub fn q_terms(t: &Triple, grid: usize) -> Result<QTerms, QError> {
    Ok(QTerms {
        area_k: t.poly().area(),
        tail_d: convex_arc_area(&t.d, THREE_HALVES_PI, THREE_HALVES_PI + t.phi_l)?,
        seg_left: segment_area(t.y_d(), t.x_l()),
        core: curve_area(&core_curve(t, grid)),
        seg_right: segment_area(t.x_r(), t.x_b()),
        tail_b: convex_arc_area(&t.b, PI + t.phi_r, THREE_HALVES_PI)?,
    })
}

/// `Q(K, B, D)` with `x_K` sampled on [`CORE_GRID`] points.
pub fn eval_q(t: &Triple) -> Result<f64, QError> {
    q_terms(t, CORE_GRID).map(|q| q.q())
}

/// `P_K = |K| + 𝓙(Z^L, x^L) − 𝓙(x_K|I) + 𝓙(x^R, W^R)`.
pub fn p_k(t: &Triple, grid: usize) -> f64 {
    t.poly().area() + segment_area(t.z_l(), t.x_l()) - curve_area(&core_curve(t, grid)) + segment_area(t.x_r(), t.w_r())
}

/// `R_B` and `L_D` as Mamikon integrals `½ ∫ α²` on about `grid` cells each.
///
/// `R_B` sweeps `B` over `[π + φ^R, 3π/2]` towards its supporting line at
/// `3π/2`; `L_D` sweeps `D` over `[3π/2, 3π/2 + φ^L]` towards its line at
/// `3π/2 + φ^L`.
pub fn tail_mamikons(t: &Triple, grid: usize) -> (f64, f64) {
    let r = mamikon_line_integral(&t.b, PI + t.phi_r, THREE_HALVES_PI, THREE_HALVES_PI, grid);
    let end = THREE_HALVES_PI + t.phi_l;
    let l = mamikon_line_integral(&t.d, THREE_HALVES_PI, end, end, grid);
    (r, l)
}

/// `|Q − (P_K − R_B − L_D)|` with `R_B`, `L_D` integrated on `grid` cells.
pub fn decomposition_residual_with(t: &Triple, grid: usize) -> Result<f64, QError> {
    let q = q_terms(t, CORE_GRID)?.q();
    let (r, l) = tail_mamikons(t, grid);
    Ok((q - (p_k(t, CORE_GRID) - r - l)).abs())
}

pub fn decomposition_residual(t: &Triple) -> Result<f64, QError> {
    decomposition_residual_with(t, CORE_GRID)
}

/// `i_K` on `(0, π]`: `⟨x_K'(t), v_t⟩` for `t ≤ π/2`, `⟨−x_K'(t − π/2), u_{t−π/2}⟩` beyond.
pub fn iota_density(k: &ConvexPoly, t: f64) -> f64 {
    if t <= FRAC_PI_2 {
        k.support(t) - 1.0 + support_derivative(k, t + FRAC_PI_2)
    } else {
        let s = t - FRAC_PI_2;
        k.support(t) - 1.0 - support_derivative(k, s)
    }
}

/// Cells of `I` split at every `t` where `t` or `t + π/2` is a normal of `K`.
fn iota_cells(t: &Triple, grid: usize) -> Vec<f64> {
    let mut ts = linspace(t.phi_r, t.phi_l, grid.max(2));
    for &nrm in t.poly().normals() {
        for s in [nrm, nrm - FRAC_PI_2] {
            if s > t.phi_r && s < t.phi_l {
                ts.push(s);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `∫_{I ∪ (I+π/2)} f dι_K` by two-point Gauss on cells where `i_K` is smooth.
fn iota_integral(t: &Triple, grid: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 / 3f64.sqrt();
    let k = t.poly();
    iota_cells(t, grid)
        .windows(2)
        .map(|w| {
            let (m, h) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
            [m - g * h, m + g * h]
                .iter()
                .map(|&s| f(s) * iota_density(k, s) + f(s + FRAC_PI_2) * iota_density(k, s + FRAC_PI_2))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// `DQ(T; T*)` at a triple with `X_B = x_K^R` and `Y_D = x_K^L`.
pub fn directional_derivative(t: &Triple, ts: &Triple) -> Result<f64, QError> {
    let gap_r = (t.x_b() - t.x_r()).norm();
    let gap_l = (t.y_d() - t.x_l()).norm();
    if gap_r > HYPOTHESIS_TOL || gap_l > HYPOTHESIS_TOL {
        return Err(QError::HypothesisViolated(format!("|X_B − x^R| = {gap_r:.3e}, |Y_D − x^L| = {gap_l:.3e}")));
    }
    Ok(dq_terms(t, ts, CORE_GRID).iter().sum())
}

/// The four brackets of `DQ`: `σ_K`, `ι_K`, `σ̆_B` and `σ̆_D` parts.
pub fn dq_terms(t: &Triple, ts: &Triple, grid: usize) -> [f64; 4] {
    let (k, ks) = (t.poly(), ts.poly());
    let dh = |s: f64| ks.support(s) - k.support(s);
    let cap = k
        .sigma()
        .atoms
        .iter()
        .filter(|a| a.0 <= PI + 1e-12)
        .map(|&(s, w)| dh(s) * w)
        .sum::<f64>();
    let iota = iota_integral(t, grid, dh);
    let tail = |p: &ConvexPoly, ps: &ConvexPoly, a: f64, b: f64| {
        p.sigma()
            .atoms
            .iter()
            .filter(|x| in_open_arc(x.0, a, b))
            .map(|&(s, w)| (ps.support(s) - p.support(s)) * w)
            .sum::<f64>()
    };
    let bt = tail(&t.b, &ts.b, PI + t.phi_r, THREE_HALVES_PI);
    let dt = tail(&t.d, &ts.d, THREE_HALVES_PI, THREE_HALVES_PI + t.phi_l);
    [cap, -iota, bt, dt]
}

/// Minkowski barycenter of two triples sharing `φ`.
pub fn lerp_triple(t1: &Triple, t2: &Triple, lambda: f64) -> Result<Triple, QError> {
    let poly = lerp(&t1.k.poly, &t2.k.poly, lambda);
    let k = Cap::from_poly(poly, t1.k.theta.clone())?;
    Ok(Triple {
        k,
        b: lerp(&t1.b, &t2.b, lambda),
        d: lerp(&t1.d, &t2.d, lambda),
        phi_r: t1.phi_r,
        phi_l: t1.phi_l,
    })
}

/// `min_λ Q(T_λ) − [(1 − λ)Q(T₁) + λQ(T₂)]`.
pub fn concavity_probe(t1: &Triple, t2: &Triple, lambdas: &[f64]) -> Result<f64, QError> {
    let (q1, q2) = (eval_q(t1)?, eval_q(t2)?);
    let mut slack = f64::INFINITY;
    for &l in lambdas {
        let q = if l == 0.0 {
            q1
        } else if l == 1.0 {
            q2
        } else {
            eval_q(&lerp_triple(t1, t2, l)?)?
        };
        slack = slack.min(q - ((1.0 - l) * q1 + l * q2));
    }
    Ok(slack)
}

/// Random member of the triple space near `t`.
///
/// The cap heights on `Θ⋄` get a sum of three Gaussian bumps of amplitude
/// up to `amp` (the heights at `ω` and `π/2` stay fixed), the tails are
/// rebuilt from the new cap, and each tail is then blended towards a copy
/// with a corner shaved off its far side. Candidates failing
/// [`TripleCheck::holds`] are redrawn.
pub fn random_feasible<R: Rng>(t: &Triple, rng: &mut R, amp: f64) -> Result<Triple, QError> {
    let theta: &AngleSet = &t.k.theta;
    let diamond = theta.diamond();
    let base = HeightFn::of_poly(theta, t.poly());
    let free = theta.free_indices();
    let mut last = QError::EmptyTail;
    for _ in 0..32 {
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(0.0..PI), rng.gen_range(0.1..0.5), rng.gen_range(-amp..=amp)))
            .collect();
        let mut h = base.clone();
        for &i in &free {
            let s = diamond[i];
            h.values[i] += bumps.iter().map(|&(c, w, a)| a * (-((s - c) / w).powi(2)).exp()).sum::<f64>();
        }
        let k = match cap_from_heights(theta, &h) {
            Ok(k) => Cap { poly: k.poly, theta: theta.clone(), reduced: false },
            Err(e) => {
                last = e.into();
                continue;
            }
        };
        let mut cand = match Triple::from_cap(k, t.phi_r, TAIL_GRID) {
            Ok(c) => c,
            Err(e) => {
                last = e;
                continue;
            }
        };
        let mu = rng.gen_range(0.0..1.0);
        cand.b = shave(&cand.b, rng.gen_range(0.2..1.2), rng.gen_range(0.0..0.15), mu);
        cand.d = shave(&cand.d, rng.gen_range(PI - 1.2..PI - 0.2), rng.gen_range(0.0..0.15), mu);
        if cand.violation().holds() {
            return Ok(cand);
        }
        last = QError::HypothesisViolated("perturbed triple left the triple space".into());
    }
    Err(last)
}

/// `(1 − μ)P + μ(P ∩ H₋(s, h_P(s) − depth))`; `P` itself when the cut empties it.
fn shave(p: &ConvexPoly, s: f64, depth: f64, mu: f64) -> ConvexPoly {
    let mut hps = cap_halfplanes(p);
    hps.push(HalfPlane::minus(s, p.support(s) - depth));
    match clip_halfplanes(&hps) {
        Ok(Some(c)) if !c.is_degenerate() => lerp(p, &c, mu),
        _ => p.clone(),
    }
}

/// `sup |F|` for the cumulative sum `F` of signed atoms `(t, w)` on `[a, b)`,
/// or on `(a, b]` when `upper` is set.
fn cumulative_gap(mut atoms: Vec<(f64, f64)>, a: f64, b: f64, upper: bool) -> f64 {
    let eps = 1e-12;
    atoms.retain(|x| if upper { x.0 > a + eps && x.0 <= b + eps } else { x.0 >= a - eps && x.0 < b - eps });
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for (_, w) in atoms {
        acc += w;
        worst = worst.max(acc.abs());
    }
    worst
}

/// `ι_K` as atoms: its mass on each cell of a fine grid, placed at the cell midpoint.
fn iota_atoms(t: &Triple, a: f64, b: f64, sign: f64, grid: usize) -> Vec<(f64, f64)> {
    let k = t.poly();
    let g = 0.5 / 3f64.sqrt();
    linspace(a, b, grid.max(2))
        .windows(2)
        .map(|w| {
            let (m, h) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
            let mass = 0.5 * h * (iota_density(k, m - g * h) + iota_density(k, m + g * h));
            (m, sign * mass)
        })
        .collect()
}

/// `θ` from the onset of `σ̆_B`: `π/2 − t₃` with `t₃` the first `t > φ^R` where
/// the cumulative `σ_B` mass at `π + t` reaches [`PHI_MASS`]·10.
pub fn estimate_theta(t: &Triple) -> f64 {
    let mut acc = 0.0;
    for &(s, w) in &t.b.sigma().atoms {
        let r = s - PI;
        if r > t.phi_r + 1e-12 && r < FRAC_PI_2 {
            acc += w;
            if acc >= 10.0 * PHI_MASS {
                return FRAC_PI_2 - r;
            }
        }
    }
    0.0
}

/// Discrepancies of the measure identities on `J_1, …, J_10` at a near-optimal triple.
///
/// Each entry is the Kolmogorov distance on the interval between `σ_K` and
/// the measure it should equal, with `ι_K` discretized on [`CORE_GRID`]
/// cells. `θ` comes from [`estimate_theta`] and is reported as `"theta"`.
pub fn gerver_measure_residuals(t: &Triple) -> BTreeMap<String, f64> {
    let phi = t.phi_r;
    let theta = estimate_theta(t);
    let ts = [0.0, phi, theta, FRAC_PI_2 - theta, FRAC_PI_2 - phi, FRAC_PI_2];
    let sig_k: Vec<(f64, f64)> = t.poly().sigma().atoms.into_iter().filter(|a| a.0 <= PI + 1e-12).collect();
    let rev = |p: &ConvexPoly| -> Vec<(f64, f64)> {
        p.sigma().atoms.iter().map(|&(s, w)| ((s - PI).rem_euclid(2.0 * PI), -w)).collect()
    };
    let (sb, sd) = (rev(&t.b), rev(&t.d));
    let iota_lo = iota_atoms(t, phi, FRAC_PI_2 - phi, -1.0, CORE_GRID);
    let iota_hi = iota_atoms(t, FRAC_PI_2 + phi, PI - phi, -1.0, CORE_GRID)
        .into_iter()
        .collect::<Vec<_>>();
    let interval = |i: usize| -> (f64, f64) {
        if i <= 5 {
            (ts[i - 1], ts[i])
        } else {
            (PI - ts[11 - i], PI - ts[10 - i])
        }
    };
    let mut out = BTreeMap::new();
    let mut put = |name: &str, lo: usize, hi: usize, with_b: bool, with_d: bool, with_iota: bool| {
        let (a, b) = (interval(lo).0, interval(hi).1);
        let mut atoms = sig_k.clone();
        if with_b {
            atoms.extend(sb.iter().copied());
        }
        if with_d {
            atoms.extend(sd.iter().copied());
        }
        if with_iota {
            atoms.extend(iota_lo.iter().copied());
            atoms.extend(iota_hi.iter().copied());
        }
        out.insert(name.to_string(), cumulative_gap(atoms, a, b, lo >= 6));
    };
    put("J1", 1, 1, false, false, false);
    put("J2_J3", 2, 3, false, false, true);
    put("J4", 4, 4, true, false, true);
    put("J5", 5, 5, true, false, false);
    put("J6", 6, 6, false, true, false);
    put("J7", 7, 7, false, true, true);
    put("J8_J9", 8, 9, false, false, true);
    put("J10", 10, 10, false, false, false);
    out.insert("theta".into(), theta);
    out
}

/// Probe sizes for [`report`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub dq_samples: usize,
    pub concavity_pairs: usize,
    pub lambdas: usize,
    pub amp: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { dq_samples: 100, concavity_pairs: 100, lambdas: 11, amp: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub gap: f64,
    pub dq_max: f64,
    pub concavity_min_slack: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// `A_Θ` of the triple's cap on its own angle set.
pub fn polygon_area(t: &Triple) -> Result<f64, QError> {
    let h = HeightFn::of_poly(&t.k.theta, t.poly());
    Ok(evaluate(&t.k.theta, &h)?.area)
}

/// `A(K)` against every hallway angle in `(0, ω)`.
///
/// `A_Θ(K)` on the uniform sets of `N = 16m` and `32m` angles, with `m − 1`
/// the size of the triple's own set, extrapolated by one Richardson step:
/// adding hallways only carves more niche, and the excess decays like `1/N`.
pub fn limit_area(t: &Triple) -> Result<f64, QError> {
    let m = t.k.theta.n_theta() + 1;
    let at = |n: usize| -> Result<f64, QError> {
        let th = AngleSet::uniform(n, t.k.theta.omega)?;
        Ok(evaluate(&th, &HeightFn::of_poly(&th, t.poly()))?.area)
    };
    Ok(2.0 * at(32 * m)? - at(16 * m)?)
}

/// One probe sample on its own ChaCha stream `i` of `seed`: `DQ(T; T*)` for
/// `i < dq_samples`, the concavity slack of a random pair otherwise.
pub fn probe_sample(t: &Triple, cfg: &ProbeConfig, seed: u64, i: usize) -> Result<f64, QError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    if i < cfg.dq_samples {
        let ts = random_feasible(t, &mut rng, cfg.amp)?;
        return directional_derivative(t, &ts);
    }
    let t1 = random_feasible(t, &mut rng, cfg.amp)?;
    let t2 = random_feasible(t, &mut rng, cfg.amp)?;
    concavity_probe(&t1, &t2, &linspace(0.0, 1.0, cfg.lambdas.max(2)))
}

/// Full report against `A = A(K)` from [`limit_area`]; the polygon value
/// `A_Θ` is listed among the residuals. `dq_max` is `NaN` when the hypothesis
/// of `DQ` fails, and the hypothesis gaps are always listed.
pub fn report(t: &Triple, cfg: &ProbeConfig, seed: u64) -> Result<QReport, QError> {
    report_with(t, cfg, seed, |n, f| (0..n).map(f).collect())
}

/// [`report`] with the probe samples `0..n` evaluated by `run`, which may
/// reorder or parallelize them; the reductions are order-independent.
pub fn report_with<F>(t: &Triple, cfg: &ProbeConfig, seed: u64, run: F) -> Result<QReport, QError>
where
    F: FnOnce(usize, &(dyn Fn(usize) -> Result<f64, QError> + Sync)) -> Vec<Result<f64, QError>>,
{
    let q = eval_q(t)?;
    let a = limit_area(t)?;
    let mut residuals = gerver_measure_residuals(t);
    residuals.insert("A_theta".into(), polygon_area(t)?);
    residuals.insert("decomposition".into(), decomposition_residual(t)?);
    residuals.insert("x_b_gap".into(), (t.x_b() - t.x_r()).norm());
    residuals.insert("y_d_gap".into(), (t.y_d() - t.x_l()).norm());
    let n = cfg.dq_samples + cfg.concavity_pairs;
    let samples = run(n, &|i| probe_sample(t, cfg, seed, i));
    let (mut dq_max, mut slack, mut hypothesis) = (f64::NEG_INFINITY, f64::INFINITY, true);
    for (i, s) in samples.into_iter().enumerate() {
        match (i < cfg.dq_samples, s) {
            (true, Ok(d)) => dq_max = dq_max.max(d),
            (true, Err(QError::HypothesisViolated(_))) => hypothesis = false,
            (false, Ok(s)) => slack = slack.min(s),
            (_, Err(e)) => return Err(e),
        }
    }
    if !hypothesis {
        dq_max = f64::NAN;
    }
    Ok(QReport { q, a, gap: q - a, dq_max, concavity_min_slack: slack, residuals })
}
