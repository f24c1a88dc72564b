//! Lower bounds on hallway arm lengths via the integral operator `𝓕`.
//!
//! `𝓕 f(x) = 1 + ∫₀ˣ m₀(f(π/2 − u)) du`. Iterating `f ↦ max(f, 𝓕f)` from
//! `f₀ = 0` gives functions that stay below the arm length of every balanced
//! maximum cap, and `f₁₁ > 1` on `(0, π/2]`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::ArmError;

/// Uniform grid size used by the lower-mode operator and the checks.
pub const DEFAULT_GRID: usize = 4096;
/// Breakpoints closer than this are merged.
pub const MERGE_EPS: f64 = 1e-9;
/// Step of the `j_c` ladder.
pub const D0: f64 = 1.0 / 12.0;

/// `k₀(x) = max(|x − 1|, (|x − 1| + 1)/2)` and `m₀(x) = x − k₀(x)`.
pub fn k0_m0(x: f64) -> Result<(f64, f64), ArmError> {
    if x.is_nan() || x < 0.0 {
        return Err(ArmError::NegativeInput(x));
    }
    let a = (x - 1.0).abs();
    let k0 = a.max((a + 1.0) / 2.0);
    Ok((k0, x - k0))
}

/// `m₀` written branchwise; inputs are clamped at zero.
#[inline]
fn m0(x: f64) -> f64 {
    let x = x.max(0.0);
    if x <= 1.0 {
        1.5 * x - 1.0
    } else if x <= 2.0 {
        0.5 * x
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFn {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinearFn {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ArmError> {
        let ok = breakpoints.len() >= 2
            && breakpoints.len() == values.len()
            && breakpoints[0] == 0.0
            && *breakpoints.last().expect("nonempty") == FRAC_PI_2
            && breakpoints.windows(2).all(|w| w[1] > w[0])
            && values.iter().all(|v| v.is_finite());
        if !ok {
            return Err(ArmError::BadBreakpoints);
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(c: f64) -> Self {
        Self { breakpoints: vec![0.0, FRAC_PI_2], values: vec![c, c] }
    }

    /// `j_c(x) = max(1 − x, c)`.
    pub fn j(c: f64) -> Self {
        let kink = 1.0 - c;
        let mut bp = vec![0.0];
        if kink > 0.0 && kink < FRAC_PI_2 {
            bp.push(kink);
        }
        bp.push(FRAC_PI_2);
        let values = bp.iter().map(|&x| j_value(c, x)).collect();
        Self { breakpoints: bp, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let i = bp.partition_point(|&b| b <= x);
        if i == 0 {
            return self.values[0];
        }
        if i == bp.len() {
            return *self.values.last().expect("nonempty");
        }
        let (x0, x1) = (bp[i - 1], bp[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn lipschitz(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| ((v[1] - v[0]) / (b[1] - b[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise maximum, exact on the union of breakpoints and crossings.
    pub fn max(&self, other: &Self) -> Self {
        let mut xs = union_sorted(&self.breakpoints, &other.breakpoints);
        let mut extra = Vec::new();
        for w in xs.windows(2) {
            let d0 = self.eval(w[0]) - other.eval(w[0]);
            let d1 = self.eval(w[1]) - other.eval(w[1]);
            if (d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0) {
                extra.push(w[0] + (w[1] - w[0]) * d0 / (d0 - d1));
            }
        }
        if !extra.is_empty() {
            xs = union_sorted(&xs, &extra);
        }
        let pts = xs.iter().map(|&x| (x, self.eval(x).max(other.eval(x)))).collect();
        from_points(pts)
    }
}

#[inline]
fn j_value(c: f64, x: f64) -> f64 {
    (1.0 - x).max(c)
}

fn union_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Builds a function from sorted points, merging points closer than [`MERGE_EPS`] by min.
fn from_points(mut pts: Vec<(f64, f64)>) -> PiecewiseLinearFn {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bp: Vec<f64> = Vec::with_capacity(pts.len());
    let mut vals: Vec<f64> = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        match bp.last() {
            Some(&lx) if x - lx < MERGE_EPS => {
                let last = bp.len() - 1;
                // Keep 0 as the first breakpoint; otherwise keep the later position.
                if lx != 0.0 {
                    bp[last] = x;
                }
                vals[last] = vals[last].min(y);
            }
            _ => {
                bp.push(x);
                vals.push(y);
            }
        }
    }
    let last = bp.len() - 1;
    bp[0] = 0.0;
    bp[last] = FRAC_PI_2;
    PiecewiseLinearFn { breakpoints: bp, values: vals }
}

/// Exact `𝓕f`: the integrand is linear between the nodes, so cumulative
/// trapezoids are exact there and `𝓕f` is quadratic inside each cell.
struct ExactF {
    xs: Vec<f64>,
    g: Vec<f64>,
    cum: Vec<f64>,
}

impl ExactF {
    fn new(f: &PiecewiseLinearFn) -> Self {
        let mut xs: Vec<f64> = f.breakpoints.iter().map(|b| FRAC_PI_2 - b).collect();
        // Kinks of m₀ ∘ f where f crosses 1 or 2.
        for (b, v) in f.breakpoints.windows(2).zip(f.values.windows(2)) {
            for level in [1.0, 2.0] {
                let (d0, d1) = (v[0] - level, v[1] - level);
                if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
                    xs.push(FRAC_PI_2 - (b[0] + (b[1] - b[0]) * d0 / (d0 - d1)));
                }
            }
        }
        xs.push(0.0);
        xs.push(FRAC_PI_2);
        for x in xs.iter_mut() {
            *x = x.clamp(0.0, FRAC_PI_2);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let g: Vec<f64> = xs.iter().map(|&u| m0(f.eval(FRAC_PI_2 - u))).collect();
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (g[i - 1] + g[i]) * (xs[i] - xs[i - 1]);
            cum.push(acc);
        }
        Self { xs, g, cum }
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&b| b <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let gx = self.g[i - 1] + (self.g[i] - self.g[i - 1]) * (x - x0) / (x1 - x0);
        1.0 + self.cum[i - 1] + 0.5 * (self.g[i - 1] + gx) * (x - x0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FMode {
    /// Conservative piecewise-linear lower bound on a uniform grid of this size.
    Lower(usize),
    /// Plain interpolation of the exact values at this many uniform points.
    Grid(usize),
}

fn uniform(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| if k == n { FRAC_PI_2 } else { FRAC_PI_2 * k as f64 / n as f64 })
}

/// `𝓕f` in the requested representation.
pub fn apply_f(f: &PiecewiseLinearFn, mode: FMode) -> PiecewiseLinearFn {
    let ex = ExactF::new(f);
    match mode {
        FMode::Grid(n) => {
            let n = n.max(1);
            let pts = uniform(n).map(|x| (x, ex.eval(x))).collect();
            from_points(pts)
        }
        FMode::Lower(n) => {
            // |(𝓕f)''| = |m₀'| · |f'| ≤ (3/2) Lip(f); a chord misses a quadratic by at most M Δ²/8.
            let m = 1.5 * f.lipschitz();
            let xs = union_sorted(&uniform(n.max(1)).collect::<Vec<_>>(), &ex.xs);
            let k = xs.len();
            let pts = (0..k)
                .map(|i| {
                    let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
                    let right = if i + 1 < k { xs[i + 1] - xs[i] } else { 0.0 };
                    let d = left.max(right);
                    // m₀ ≥ −1 makes 1 − x a lower bound for any f.
                    let y = (ex.eval(xs[i]) - m * d * d / 8.0).max(1.0 - xs[i]);
                    (xs[i], y)
                })
                .collect();
            from_points(pts)
        }
    }
}

/// `[f₀, …, f_n]` with the default grid.
pub fn iterate_sequence(n: usize) -> Vec<PiecewiseLinearFn> {
    iterate_sequence_with(n, DEFAULT_GRID)
}

pub fn iterate_sequence_with(n: usize, grid: usize) -> Vec<PiecewiseLinearFn> {
    let mut seq = vec![PiecewiseLinearFn::constant(0.0)];
    for _ in 0..n {
        let f = seq.last().expect("nonempty");
        let next = f.max(&apply_f(f, FMode::Lower(grid)));
        seq.push(next);
    }
    seq
}

/// Minimum over the grid of `𝓕j_c − (c + 1/12)`.
///
/// Where `j_{c+1/12} = 1 − x` the inequality holds with equality allowed, since
/// `m₀ ≥ −1`, so only the constant branch carries a margin.
pub fn verify_j_step(c: f64, grid_n: usize) -> f64 {
    let ex = ExactF::new(&PiecewiseLinearFn::j(c));
    uniform(grid_n.max(1)).map(|x| ex.eval(x) - (c + D0)).fold(f64::INFINITY, f64::min)
}

/// Minimum over the grid of `𝓕j_c − j_{c+1/12}`; zero when the `1 − x` branch binds.
pub fn j_step_gap(c: f64, grid_n: usize) -> f64 {
    let ex = ExactF::new(&PiecewiseLinearFn::j(c));
    uniform(grid_n.max(1)).map(|x| ex.eval(x) - j_value(c + D0, x)).fold(f64::INFINITY, f64::min)
}

/// Minimum of `f₁₁ − 1` over `{kπ/(2 grid_n) : 1 ≤ k ≤ grid_n}`.
pub fn threshold_check(grid_n: usize) -> f64 {
    let seq = iterate_sequence_with(11, grid_n);
    let f11 = &seq[11];
    uniform(grid_n.max(1)).skip(1).map(|x| f11.eval(x) - 1.0).fold(f64::INFINITY, f64::min)
}

/// `x, f_0(x), …, f_n(x)` rows on a uniform grid.
pub fn sequence_csv(seq: &[PiecewiseLinearFn], grid_n: usize) -> String {
    let mut out = String::from("x");
    for i in 0..seq.len() {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    for x in uniform(grid_n.max(1)) {
        out.push_str(&format!("{x}"));
        for f in seq {
            out.push_str(&format!(",{}", f.eval(x)));
        }
        out.push('\n');
    }
    out
}
