//! Maximization of `A_Θ` over height vectors and certification of optima.
//!
//! The ascent runs cyclic coordinate moves first and then polishes with
//! damped Newton steps. `A_Θ` is piecewise quadratic in the heights, so the
//! Hessian taken by differencing the exact gradient is exact away from the
//! combinatorial breakpoints.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm_bounds::k0_m0;
use crate::error::{CapError, OptError};
use crate::hallway::{arm_lengths, cap_from_heights, evaluate, niche_in_cap, wedge, AngleSet, AreaEval, Cap, HeightFn};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptOptions {
    pub tol_balance: f64,
    pub max_iters: usize,
    pub step_init: f64,
    pub shrink: f64,
    pub multistart: usize,
    pub seed: u64,
    /// Coordinate sweeps before the Newton polish.
    pub ascent_sweeps: usize,
    pub newton: bool,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            tol_balance: 1e-9,
            max_iters: 1000,
            step_init: 0.05,
            shrink: 0.5,
            multistart: 0,
            seed: 0,
            ascent_sweeps: 2,
            newton: true,
        }
    }
}

impl OptOptions {
    fn validate(&self) -> Result<(), OptError> {
        if self.tol_balance.is_nan() || self.tol_balance <= 0.0 {
            return Err(OptError::BadOptions("tol_balance must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(OptError::BadOptions("shrink must lie in (0, 1)".into()));
        }
        if self.step_init.is_nan() || self.step_init <= 0.0 {
            return Err(OptError::BadOptions("step_init must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub heights: HeightFn,
    pub area: f64,
    /// `(t, σ_K(t) − τ_K(t))` over `Θ⋄`.
    pub residuals: Vec<(f64, f64)>,
    pub iters: usize,
    pub trace: Vec<(usize, f64)>,
}

impl OptResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }
}

/// `σ_K(t) − τ_K(t)` for every `t ∈ Θ⋄`, i.e. the derivative of `A_Θ` in `h(t)`.
pub fn balance_gradient(theta: &AngleSet, h: &HeightFn) -> Result<Vec<(f64, f64)>, CapError> {
    let e = evaluate(theta, h)?;
    Ok(theta.diamond().into_iter().zip(e.grad).collect())
}

fn max_abs(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

struct State {
    h: HeightFn,
    e: AreaEval,
}

impl State {
    fn resid(&self) -> f64 {
        max_abs(&self.e.grad)
    }
}

fn try_eval(theta: &AngleSet, h: &HeightFn) -> Option<AreaEval> {
    evaluate(theta, h).ok().filter(|e| e.area.is_finite())
}

/// Lowers redundant heights onto the cap's support. The cap is unchanged and
/// the hallway walls only move inward, so the niche cannot grow.
fn tighten(theta: &AngleSet, st: &mut State) {
    let Ok(k) = cap_from_heights(theta, &st.h) else { return };
    if !k.reduced {
        return;
    }
    let mut h = st.h.clone();
    for (x, t) in h.values.iter_mut().zip(theta.diamond()) {
        *x = x.min(k.support(t));
    }
    if let Some(e) = try_eval(theta, &h) {
        if e.area >= st.e.area {
            st.h = h;
            st.e = e;
        }
    }
}

/// Horizontal translation so that `h_K(0) = h_K(π)`; only used when `ω = π/2`.
fn recenter(theta: &AngleSet, st: &mut State) {
    let Ok(k) = cap_from_heights(theta, &st.h) else { return };
    let s = 0.5 * (k.support(std::f64::consts::PI) - k.support(0.0));
    if s == 0.0 {
        return;
    }
    let mut h = st.h.clone();
    for (x, t) in h.values.iter_mut().zip(theta.diamond()) {
        if t != FRAC_PI_2 {
            *x += s * t.cos();
        }
    }
    if let Some(e) = try_eval(theta, &h) {
        st.h = h;
        st.e = e;
    }
}

fn coordinate_sweep(theta: &AngleSet, st: &mut State, free: &[usize], opts: &OptOptions) {
    for &i in free {
        let g = st.e.grad[i];
        if g.abs() < 0.1 * opts.tol_balance {
            continue;
        }
        let trial = |d: f64| {
            let mut h = st.h.clone();
            h.values[i] += d;
            try_eval(theta, &h).map(|e| (h, e))
        };
        let mut best: Option<(HeightFn, AreaEval)> = None;
        let mut d = opts.step_init.copysign(g);
        if let Some((h1, e1)) = trial(d) {
            // Secant curvature along the coordinate; a concave piece gives a Newton step.
            let c = (e1.grad[i] - g) / d;
            if c < 0.0 {
                let dn = -g / c;
                if let Some((hn, en)) = trial(dn) {
                    if en.area > st.e.area && en.area >= e1.area {
                        best = Some((hn, en));
                    }
                }
            }
            if best.is_none() && e1.area > st.e.area {
                best = Some((h1, e1));
            }
        }
        while best.is_none() && d.abs() > 1e-14 {
            d *= opts.shrink;
            if let Some((h1, e1)) = trial(d) {
                if e1.area > st.e.area {
                    best = Some((h1, e1));
                }
            }
        }
        if let Some((h, e)) = best {
            st.h = h;
            st.e = e;
        }
    }
}

/// One damped Newton step on the free coordinates; `false` when no step is accepted.
fn newton_step(theta: &AngleSet, st: &mut State, free: &[usize], lambda: &mut f64) -> bool {
    let m = free.len();
    let g = DVector::from_iterator(m, free.iter().map(|&i| st.e.grad[i]));
    let eps = 1e-7;
    let mut hess = DMatrix::<f64>::zeros(m, m);
    for (col, &j) in free.iter().enumerate() {
        let mut h = st.h.clone();
        h.values[j] += eps;
        let Some(e) = try_eval(theta, &h) else { return false };
        for (row, &i) in free.iter().enumerate() {
            hess[(row, col)] = (e.grad[i] - st.e.grad[i]) / eps;
        }
    }
    let neg_h = -(&hess + hess.transpose()) * 0.5;
    // The horizontal translation direction is a null direction of A_Θ when ω = π/2.
    let gauge = theta.is_right().then(|| {
        let d = theta.diamond();
        let c = DVector::from_iterator(m, free.iter().map(|&i| d[i].cos()));
        let n2 = c.norm_squared();
        (&c * c.transpose()) / n2
    });
    let scale = (0..m).map(|i| neg_h[(i, i)].abs()).fold(1e-12, f64::max);
    let r0 = st.resid();
    while *lambda <= 1e12 {
        let mut a = neg_h.clone();
        for i in 0..m {
            a[(i, i)] += *lambda * scale;
        }
        if let Some(p) = &gauge {
            a += p * scale;
        }
        let Some(p) = a.lu().solve(&g) else {
            *lambda *= 10.0;
            continue;
        };
        // Backtrack along the damped direction before raising the damping.
        let mut alpha = 1.0;
        for _ in 0..4 {
            let mut h = st.h.clone();
            for (k, &i) in free.iter().enumerate() {
                h.values[i] += alpha * p[k];
            }
            if let Some(e) = try_eval(theta, &h) {
                let r = max_abs(&e.grad);
                if e.area > st.e.area || (e.area >= st.e.area - 1e-15 && r < r0) {
                    st.h = h;
                    st.e = e;
                    if alpha == 1.0 {
                        *lambda = (*lambda * 0.1).max(1e-14);
                    }
                    return true;
                }
            }
            alpha *= 0.25;
        }
        *lambda *= 10.0;
    }
    false
}

fn ascend(theta: &AngleSet, h0: &HeightFn, opts: &OptOptions) -> Result<OptResult, OptError> {
    let e0 = evaluate(theta, h0)?;
    let mut st = State { h: h0.clone(), e: e0 };
    let free = theta.free_indices();
    let mut trace = vec![(0, st.e.area)];
    let mut iters = 0;
    let done = |st: &State| st.resid() < opts.tol_balance;
    let start_area = st.e.area;
    for _ in 0..opts.ascent_sweeps {
        if done(&st) || iters >= opts.max_iters {
            break;
        }
        coordinate_sweep(theta, &mut st, &free, opts);
        tighten(theta, &mut st);
        if theta.is_right() {
            recenter(theta, &mut st);
        }
        iters += 1;
        trace.push((iters, st.e.area));
    }
    let mut lambda = 1e-6;
    let mut stalled = false;
    while opts.newton && !done(&st) && iters < opts.max_iters {
        if !newton_step(theta, &mut st, &free, &mut lambda) {
            stalled = true;
            break;
        }
        iters += 1;
        trace.push((iters, st.e.area));
    }
    if theta.is_right() && iters > 0 {
        recenter(theta, &mut st);
    }
    if stalled && !done(&st) && st.e.area <= start_area {
        return Err(OptError::Diverged);
    }
    let residuals = theta.diamond().into_iter().zip(st.e.grad.iter().copied()).collect();
    Ok(OptResult { heights: st.h, area: st.e.area, residuals, iters, trace })
}

/// Maximizes `A_Θ` from `h0` and from `opts.multistart` perturbed copies of it.
pub fn maximize(theta: &AngleSet, h0: &HeightFn, opts: &OptOptions) -> Result<OptResult, OptError> {
    opts.validate()?;
    let mut best = ascend(theta, h0, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let free = theta.free_indices();
    for _ in 0..opts.multistart {
        let mut h = h0.clone();
        for &i in &free {
            h.values[i] += rng.gen_range(-0.1..=0.1);
        }
        let Ok(r) = ascend(theta, &h, opts) else { continue };
        let better = r.area > best.area
            || (r.area == best.area
                && r.heights.values.iter().zip(&best.heights.values).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Less));
        if better {
            best = r;
        }
    }
    Ok(best)
}

/// Solves on `Θ_n` for each `n` in turn, warm-starting from the previous cap.
pub fn refine_and_resolve(schedule: &[usize], opts: &OptOptions) -> Result<Vec<OptResult>, OptError> {
    let ok = !schedule.is_empty()
        && schedule.iter().all(|&n| n >= 2 && n.is_power_of_two())
        && schedule.windows(2).all(|w| w[1] > w[0]);
    if !ok {
        return Err(OptError::BadSchedule);
    }
    let mut out: Vec<OptResult> = Vec::with_capacity(schedule.len());
    let mut prev: Option<Cap> = None;
    for &n in schedule {
        let theta = AngleSet::right_angle(n)?;
        let h0 = match &prev {
            Some(k) => HeightFn::of_poly(&theta, &k.poly),
            None => HeightFn::constant(&theta, 1.0),
        };
        let r = maximize(&theta, &h0, opts)?;
        prev = Some(cap_from_heights(&theta, &r.heights)?);
        out.push(r);
    }
    Ok(out)
}

/// Grid and tolerance parameters of [`certify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub wz_grid: usize,
    pub wz_tol: f64,
    pub arm_grid: usize,
    /// `C = c_factor · diameter` in the discrete inequality.
    pub c_factor: f64,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self { wz_grid: 1024, wz_tol: 1e-6, arm_grid: 512, c_factor: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub balance_max_resid: f64,
    pub niche_in_cap: bool,
    pub wz_bound_ok: bool,
    pub injectivity_ok: bool,
    pub discrete_ineq_ok: bool,
    /// Diagnostics behind the flags.
    pub w_circ: f64,
    pub z_circ: f64,
    pub min_arm: f64,
    pub max_discrete_excess: f64,
}

pub fn certify(theta: &AngleSet, result: &OptResult) -> Certificate {
    certify_with(theta, &result.heights, &CertifyParams::default())
}

/// Certificate computed from the heights alone.
pub fn certify_with(theta: &AngleSet, heights: &HeightFn, p: &CertifyParams) -> Certificate {
    let (Ok(k), Ok(e)) = (cap_from_heights(theta, heights), evaluate(theta, heights)) else {
        return Certificate {
            balance_max_resid: f64::INFINITY,
            niche_in_cap: false,
            wz_bound_ok: false,
            injectivity_ok: false,
            discrete_ineq_ok: false,
            w_circ: f64::NAN,
            z_circ: f64::NAN,
            min_arm: f64::NAN,
            max_discrete_excess: f64::NAN,
        };
    };
    let w = theta.omega;
    let open_grid = |n: usize| (0..n).map(move |k| w * (k as f64 + 0.5) / n as f64);
    let (mut w_circ, mut z_circ) = (f64::INFINITY, f64::INFINITY);
    for t in open_grid(p.wz_grid) {
        let wi = wedge(&k, t);
        if wi.w.is_finite() {
            w_circ = w_circ.min(wi.w);
        }
        if wi.z.is_finite() {
            z_circ = z_circ.min(wi.z);
        }
    }
    let wz_bound_ok = w_circ <= k.poly.edge_length(FRAC_PI_2) + p.wz_tol && z_circ <= k.poly.edge_length(w) + p.wz_tol;
    let min_arm = open_grid(p.arm_grid).map(|t| arm_lengths(&k, t).min()).fold(f64::INFINITY, f64::min);
    let delta = w / (theta.n_theta() + 1) as f64;
    let c = p.c_factor * k.poly.diameter();
    let max_discrete_excess = theta
        .thetas
        .iter()
        .map(|&t| {
            let g = arm_lengths(&k, t).g_plus.max(0.0);
            let k0 = k0_m0(g).map_or(f64::INFINITY, |x| x.0);
            k.poly.edge_length(t) - (k0 * delta + c * delta * delta)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Certificate {
        balance_max_resid: max_abs(&e.grad),
        niche_in_cap: niche_in_cap(&k).holds,
        wz_bound_ok,
        injectivity_ok: min_arm > 1.0,
        discrete_ineq_ok: max_discrete_excess <= 0.0,
        w_circ,
        z_circ,
        min_arm,
        max_discrete_excess,
    }
}
