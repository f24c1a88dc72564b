//! Numerics behind the rotation-angle argument for `ω ∈ [sec⁻¹ 2.2, π/2)`.
//!
//! Conventions follow [`crate::hallway`]: the parallelogram `P_ω` is
//! `{0 ≤ y ≤ 1} ∩ {0 ≤ x·u_ω ≤ 1}`, its top-right corner is
//! `o_ω = (c_ω, 1)` and `c_ω = sec ω − tan ω`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::AngleBoundError;
use crate::geometry::{clip_halfplanes, u, v, HalfPlane, Vec2};
use crate::hallway::{cap_from_heights, evaluate, AngleSet, Cap, HeightFn};

/// Area threshold of the argument.
pub const AREA_THRESHOLD: f64 = 2.2;
/// Default grid size for the interval checks.
pub const GRID: usize = 512;
/// Tolerance of the quadrant membership test.
pub const QUADRANT_TOL: f64 = 1e-9;

/// `sec⁻¹(2.2)`, the smallest admissible rotation angle.
pub fn omega_lo() -> f64 {
    (1.0 / AREA_THRESHOLD).acos()
}

/// `tan⁻¹(2.2)`, where `d_{ω,min}` switches.
pub fn omega_mid() -> f64 {
    AREA_THRESHOLD.atan()
}

fn check_omega(omega: f64) -> Result<(), AngleBoundError> {
    if omega.is_finite() && omega >= omega_lo() - 1e-15 && omega < FRAC_PI_2 {
        Ok(())
    } else {
        Err(AngleBoundError::OutOfRange(omega))
    }
}

/// `c_ω = tan(π/4 − ω/2) = sec ω − tan ω`.
pub fn c_omega(omega: f64) -> f64 {
    (FRAC_PI_4 - omega / 2.0).tan()
}

/// `o_ω`, the corner of `P_ω` on the lines `y = 1` and `x·u_ω = 1`.
pub fn o_omega(omega: f64) -> Vec2 {
    Vec2::new(c_omega(omega), 1.0)
}

/// `1.25` below `tan⁻¹(2.2)` and `1.1` from there on.
pub fn d_min(omega: f64) -> Result<f64, AngleBoundError> {
    check_omega(omega)?;
    Ok(if omega < omega_mid() { 1.25 } else { 1.1 })
}

fn parallelogram(omega: f64) -> Vec<HalfPlane> {
    vec![
        HalfPlane::minus(FRAC_PI_2, 1.0),
        HalfPlane::plus(FRAC_PI_2, 0.0),
        HalfPlane::minus(omega, 1.0),
        HalfPlane::plus(omega, 0.0),
    ]
}

/// `|P_ω|` by clipping; equals `sec ω`.
pub fn parallelogram_area(omega: f64) -> f64 {
    clip_halfplanes(&parallelogram(omega)).ok().flatten().map_or(0.0, |p| p.area())
}

fn check_d(omega: f64, d: f64) -> Result<(), AngleBoundError> {
    check_omega(omega)?;
    if d.is_finite() && d >= 0.0 && d <= omega.tan() {
        Ok(())
    } else {
        Err(AngleBoundError::OutOfRange(d))
    }
}

/// `|R_{ω,d}|` for `R_{ω,d} = P_ω ∩ H₋(0, d + c_ω) ∩ H₋(ω + π/2, d + c_ω)`.
///
/// Below `tan⁻¹(2.2)` this is `P_ω` minus two right triangles with legs
/// `tan ω − d` and `(tan ω − d) cot ω`. From there on it is the quadrilateral
/// `O, c_ω u_0, o_ω, c_ω v_ω` plus twice the unit-height strip of width `d`
/// beside it, less the corner triangle `d² cot ω / 2` the slanted wall cuts.
pub fn r_region_area(omega: f64, d: f64) -> Result<f64, AngleBoundError> {
    check_d(omega, d)?;
    let cot = 1.0 / omega.tan();
    if omega < omega_mid() {
        let b = omega.tan() - d;
        return Ok(1.0 / omega.cos() - b * b * cot);
    }
    let c = c_omega(omega);
    let quad = [Vec2::new(0.0, 0.0), u(0.0) * c, o_omega(omega), v(omega) * c];
    let q1 = 0.5 * (0..4).map(|i| quad[i].cross(quad[(i + 1) % 4])).sum::<f64>();
    Ok(q1 + 2.0 * (d - 0.5 * d * d * cot))
}

/// `|R_{ω,d}|` by clipping `P_ω` with the two support half-planes.
pub fn r_region_area_clip(omega: f64, d: f64) -> Result<f64, AngleBoundError> {
    check_d(omega, d)?;
    let c = c_omega(omega);
    let mut hps = parallelogram(omega);
    hps.push(HalfPlane::minus(0.0, d + c));
    hps.push(HalfPlane::minus(omega + FRAC_PI_2, d + c));
    Ok(clip_halfplanes(&hps).ok().flatten().map_or(0.0, |p| p.area()))
}

/// Bound on `|R_{ω,d}|` over all `ω ∈ [sec⁻¹ 2.2, tan⁻¹ 2.2]`: `sec ω` at its
/// largest (`√146/5`), `tan ω` at its smallest (`√96/5`) and `cot ω` at its
/// smallest (`1/2.2`). Valid for `d ≤ √96/5`.
pub fn r_region_interval_bound(d: f64) -> f64 {
    let (sec_hi, tan_lo) = (146f64.sqrt() / 5.0, 96f64.sqrt() / 5.0);
    sec_hi - (tan_lo - d).powi(2) / AREA_THRESHOLD
}

/// `r_y`, `g`, `q_0`, `q_1` and `c_ω` for given `ω` and `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalcVars {
    pub omega: f64,
    pub d: f64,
    pub r_y: f64,
    pub g: f64,
    pub q0: Vec2,
    pub q1: Vec2,
    pub c_omega: f64,
}

impl CalcVars {
    /// Requires `ω` admissible and `r_y = 1 − d cot ω ∈ [−1, 1]`.
    pub fn new(omega: f64, d: f64) -> Result<Self, AngleBoundError> {
        check_omega(omega)?;
        let r_y = 1.0 - d / omega.tan();
        if !(-1.0..=1.0).contains(&r_y) {
            return Err(AngleBoundError::OutOfRange(d));
        }
        let g = (1.0 - r_y * r_y).sqrt();
        let o = o_omega(omega);
        Ok(Self {
            omega,
            d,
            r_y,
            g,
            q0: o - v(0.0) + u(0.0) * d,
            q1: o - u(0.0) * g,
            c_omega: c_omega(omega),
        })
    }
}

/// Margins `(d sin ω − 1, g − 2 cos ω)` of the two point inequalities.
///
/// The first is `(q_0 − (o_ω − v_0))·u_{π/2−ω} − 1`; the second is the
/// reduced form of `(q_1 − (o_ω − u_ω))·v_{π/2−ω} > 1`.
pub fn calc_inequalities(omega: f64, d: f64) -> Result<(f64, f64), AngleBoundError> {
    if d < d_min(omega)? {
        return Err(AngleBoundError::OutOfRange(d));
    }
    let cv = CalcVars::new(omega, d)?;
    if cv.r_y < 0.0 {
        return Err(AngleBoundError::OutOfRange(d));
    }
    Ok((d * omega.sin() - 1.0, cv.g - 2.0 * omega.cos()))
}

/// `(1 − d cot ω)² + 4 cos² ω`, which must stay below one.
pub fn omega_calc(omega: f64, d: f64) -> f64 {
    let cot = omega.cos() / omega.sin();
    (1.0 - d * cot).powi(2) + 4.0 * omega.cos().powi(2)
}

/// [`omega_calc`] at the ends of the two intervals of constant `d_{ω,min}`:
/// `(sec⁻¹ 2.2, 1.25)`, `(tan⁻¹ 2.2, 1.25)`, `(tan⁻¹ 2.2, 1.1)`, `(π/2, 1.1)`.
pub fn omega_calc_endpoints() -> [f64; 4] {
    [
        omega_calc(omega_lo(), 1.25),
        omega_calc(omega_mid(), 1.25),
        omega_calc(omega_mid(), 1.1),
        omega_calc(FRAC_PI_2, 1.1),
    ]
}

/// `d²/dω² (1 − d cot ω)² = 2d csc⁴ω (2d + d cos 2ω − sin 2ω)`.
pub fn second_derivative(d: f64, omega: f64) -> f64 {
    let csc = 1.0 / omega.sin();
    2.0 * d * csc.powi(4) * (2.0 * d + d * (2.0 * omega).cos() - (2.0 * omega).sin())
}

/// Minimum of [`second_derivative`] on `grid` points of `[π/4, π/2]`.
pub fn convexity_check(d: f64, grid: usize) -> f64 {
    let n = grid.max(2);
    (0..n)
        .map(|i| FRAC_PI_4 + FRAC_PI_4 * i as f64 / (n - 1) as f64)
        .map(|w| second_derivative(d, w))
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of [`triangle_disjoint_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleProbe {
    /// First angle found whose closed inner quadrant holds all three points.
    pub found_t: Option<f64>,
    pub contains_all: bool,
    pub area: f64,
}

/// Whether `O`, `c_ω u_0` and `c_ω v_ω` lie in the closed quadrant
/// `{x·u_t ≤ h_K(t) − 1, x·v_t ≤ h_K(t + π/2) − 1}`.
pub fn quadrant_holds_triangle(k: &Cap, t: f64) -> bool {
    let c = c_omega(k.theta.omega);
    let (a, b) = (k.support(t) - 1.0, k.support(t + FRAC_PI_2) - 1.0);
    [Vec2::new(0.0, 0.0), u(0.0) * c, v(k.theta.omega) * c]
        .iter()
        .all(|p| p.dot(u(t)) <= a + QUADRANT_TOL && p.dot(v(t)) <= b + QUADRANT_TOL)
}

/// Geometric part of [`triangle_disjoint_probe`], without the area precondition.
pub fn triangle_probe_unchecked(theta: &AngleSet, h: &HeightFn) -> Result<TriangleProbe, AngleBoundError> {
    check_omega(theta.omega)?;
    let k = cap_from_heights(theta, h).map_err(|_| AngleBoundError::OutOfRange(theta.omega))?;
    let area = evaluate(theta, h).map_err(|_| AngleBoundError::OutOfRange(theta.omega))?.area;
    let w = theta.omega;
    let grid = (1..GRID).map(|i| w * i as f64 / GRID as f64);
    let found_t = std::iter::once(FRAC_PI_2 - w).chain(grid).find(|&t| quadrant_holds_triangle(&k, t));
    Ok(TriangleProbe { found_t, contains_all: found_t.is_some(), area })
}

/// Searches `t = π/2 − ω`, then a grid of `(0, ω)`, for a quadrant of the cap
/// containing the triangle `O, o_ω − v_0, o_ω − u_ω`.
///
/// The conclusion is only claimed for caps with `A_ω ≥ 2.2`; smaller caps get
/// `PreconditionArea`, and [`triangle_probe_unchecked`] still runs the search.
pub fn triangle_disjoint_probe(theta: &AngleSet, h: &HeightFn) -> Result<TriangleProbe, AngleBoundError> {
    let r = triangle_probe_unchecked(theta, h)?;
    if r.area < AREA_THRESHOLD {
        return Err(AngleBoundError::PreconditionArea(r.area));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants() {
        assert_abs_diff_eq!(omega_lo().cos() * 2.2, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(omega_mid().tan() / 2.2, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(omega_lo().to_degrees(), 62.96, epsilon = 5e-3);
        for w in [1.1, 1.3, 1.5] {
            assert_abs_diff_eq!(c_omega(w), 1.0 / w.cos() - w.tan(), epsilon = 1e-13);
            assert_abs_diff_eq!(parallelogram_area(w), 1.0 / w.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn d_min_values() {
        assert_eq!(d_min(1.10).unwrap(), 1.25);
        assert_eq!(d_min(1.30).unwrap(), 1.1);
        assert_eq!(d_min(omega_lo()).unwrap(), 1.25);
        assert!(matches!(d_min(1.0), Err(AngleBoundError::OutOfRange(_))));
        assert!(matches!(d_min(FRAC_PI_2), Err(AngleBoundError::OutOfRange(_))));
    }

    #[test]
    fn interval_bound_value() {
        let b = r_region_interval_bound(1.25);
        assert_abs_diff_eq!(b, 2.187736, epsilon = 1e-6);
        // The bound dominates every area of the first interval.
        for i in 0..=64 {
            let w = omega_lo() + (omega_mid() - omega_lo()) * i as f64 / 64.0;
            let w = w.min(omega_mid() - 1e-12);
            assert!(r_region_area(w, 1.25).unwrap() <= b);
        }
    }

    #[test]
    fn areas_below_threshold_at_d_min() {
        for i in 0..GRID {
            let w = omega_lo() + (FRAC_PI_2 - omega_lo()) * i as f64 / GRID as f64;
            let d = d_min(w).unwrap();
            assert!(r_region_area(w, d).unwrap() < AREA_THRESHOLD, "ω = {w}");
        }
    }

    #[test]
    fn closed_forms_match_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let w = rng.gen_range(omega_lo()..FRAC_PI_2 - 1e-3);
            let d = rng.gen_range(0.0..w.tan());
            assert_abs_diff_eq!(r_region_area(w, d).unwrap(), r_region_area_clip(w, d).unwrap(), epsilon = 1e-10);
        }
        let m = omega_mid();
        let (lo, hi) = (r_region_area_clip(m - 1e-9, 1.1).unwrap(), r_region_area_clip(m + 1e-9, 1.1).unwrap());
        assert!((lo - hi).abs() < 1e-6);
        assert!(r_region_area(1.2, 10.0).is_err());
    }

    #[test]
    fn sine_margins() {
        let (m1, m2) = calc_inequalities(omega_lo(), 1.25).unwrap();
        assert_abs_diff_eq!(m1, 0.1134, epsilon = 1e-4);
        assert!(m2 > 0.0);
        let (m1, m2) = calc_inequalities(omega_mid(), 1.1).unwrap();
        assert_abs_diff_eq!(m1, 0.0014, epsilon = 1e-4);
        assert!(m1 > 0.0 && m2 > 0.0);
        assert!(calc_inequalities(1.3, 1.0).is_err());
    }

    #[test]
    fn second_inequality_matches_its_reduced_form() {
        // (q_1 − (o_ω − u_ω))·v_{π/2−ω} − 1 has the sign of g − 2cos ω.
        for (w, d) in [(omega_lo(), 1.25), (1.2, 1.3), (omega_mid(), 1.1), (1.45, 1.2)] {
            let cv = CalcVars::new(w, d).unwrap();
            let lhs = (cv.q1 - (o_omega(w) - u(w))).dot(v(FRAC_PI_2 - w)) - 1.0;
            let (_, m2) = calc_inequalities(w, d).unwrap();
            assert_eq!(lhs > 0.0, m2 > 0.0);
            let first = (cv.q0 - (o_omega(w) - v(0.0))).dot(u(FRAC_PI_2 - w)) - 1.0;
            assert_abs_diff_eq!(first, d * w.sin() - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn omega_calc_endpoint_values() {
        let e = omega_calc_endpoints();
        assert!(e[0] < 0.9576 && e[1] < 0.8714 && e[2] < 0.9350);
        assert!(e[0] > 0.9575 && e[1] > 0.8713 && e[2] > 0.9349);
        assert_abs_diff_eq!(e[3], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn convexity() {
        assert_abs_diff_eq!(second_derivative(1.0, FRAC_PI_4), 8.0, epsilon = 1e-12);
        assert!(convexity_check(1.25, GRID) >= 0.0);
        assert!(convexity_check(1.0, GRID) >= 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = |d: f64, w: f64| (1.0 - d / w.tan()).powi(2);
        for _ in 0..100 {
            let d = rng.gen_range(1.0..2.0);
            let w = rng.gen_range(FRAC_PI_4 + 0.01..FRAC_PI_2 - 0.01);
            let h = 1e-4;
            let fd = (f(d, w + h) - 2.0 * f(d, w) + f(d, w - h)) / (h * h);
            let exact = second_derivative(d, w);
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "{fd} {exact}");
        }
    }

    #[test]
    fn calc_vars_coordinates() {
        let w = 1.2;
        let cv = CalcVars::new(w, 1.3).unwrap();
        assert_abs_diff_eq!(cv.q0.x, cv.c_omega + 1.3, epsilon = 1e-15);
        assert_eq!(cv.q0.y, 0.0);
        assert_abs_diff_eq!(cv.q1.x, cv.c_omega - cv.g, epsilon = 1e-15);
        assert_abs_diff_eq!(cv.r_y, 1.0 - 1.3 / w.tan(), epsilon = 1e-15);
        // o_ω − v_0 = c_ω u_0 and o_ω − u_ω = c_ω v_ω.
        assert!((o_omega(w) - v(0.0) - u(0.0) * cv.c_omega).norm() < 1e-15);
        assert!((o_omega(w) - u(w) - v(w) * cv.c_omega).norm() < 1e-15);
    }

    #[test]
    fn probe_rejects_right_angle_and_small_caps() {
        let th = AngleSet::right_angle(4).unwrap();
        let h = HeightFn::constant(&th, 1.0);
        assert!(matches!(triangle_disjoint_probe(&th, &h), Err(AngleBoundError::OutOfRange(_))));
        let th = AngleSet::uniform(4, 1.2).unwrap();
        let h = HeightFn::constant(&th, 1.0);
        assert!(matches!(triangle_disjoint_probe(&th, &h), Err(AngleBoundError::PreconditionArea(_))));
        assert!(triangle_probe_unchecked(&th, &h).is_ok());
    }
}
