use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde_json::{json, Value};

use sofa_core::angle_bounds::{
    calc_inequalities, convexity_check, d_min, omega_calc_endpoints, omega_lo, omega_mid, r_region_area,
    r_region_interval_bound, triangle_disjoint_probe, AREA_THRESHOLD, GRID,
};
use sofa_core::arm_bounds::{iterate_sequence_with, sequence_csv, verify_j_step, PiecewiseLinearFn, D0};
use sofa_core::balance_opt::{certify_with, maximize, CertifyParams, OptOptions, OptResult};
use sofa_core::hallway::cap_from_heights;
use sofa_core::io::{cap_to_value, load_cap, save_cap};
use sofa_core::qbound::{estimate_phi_contact, report_with, ProbeConfig, Triple, HYPOTHESIS_TOL, TAIL_GRID};
use sofa_core::svg::{render_svg, Extras};
use sofa_core::{AngleSet, HeightFn, QError};

use crate::Common;

/// A report and whether every checked property held.
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
}

/// Slack allowed on `Q ≥ A` and on the concavity probe.
const SLACK: f64 = 1e-6;
/// Rounding allowance where interpolated iterates meet the kink of `j_c`.
const ROUNDING: f64 = 1e-12;

#[derive(Args)]
pub struct OptimizeArgs {
    /// Number of hallway angle intervals; a power of two.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Rotation angle in radians.
    #[arg(long, default_value_t = FRAC_PI_2)]
    omega: f64,
    /// Target balancedness residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Perturbed restarts per stage.
    #[arg(long, default_value_t = 0)]
    multistart: usize,
    /// Cap JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// CSV of `n,iter,area` over the refinement chain.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Certify this cap instead of optimizing.
    #[arg(long = "in")]
    in_path: Option<PathBuf>,
    /// Bound on the balancedness residual.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
pub struct QboundArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long = "in")]
    in_path: Option<PathBuf>,
    /// `φ_R` in radians; estimated from the cap's contact angle when absent.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long, default_value_t = 100)]
    dq_samples: usize,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 11)]
    lambdas: usize,
    /// Amplitude of the random perturbations.
    #[arg(long, default_value_t = 0.05)]
    amp: f64,
    /// Bound on the directional derivative.
    #[arg(long, default_value_t = HYPOTHESIS_TOL)]
    dq_tol: f64,
    #[arg(long, default_value_t = TAIL_GRID)]
    tail_grid: usize,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct ArmArgs {
    #[arg(long, default_value_t = 11)]
    iters: usize,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// CSV of the iterates on the grid.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct AngleArgs {
    /// Also evaluate the bounds at this rotation angle.
    #[arg(long)]
    omega: Option<f64>,
    /// Run the triangle probe on this cap (ω < π/2, area ≥ 2.2).
    #[arg(long = "in")]
    in_path: Option<PathBuf>,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long = "in")]
    in_path: PathBuf,
    #[arg(long)]
    svg: PathBuf,
    /// Overlay the tails and core curve (right-angle caps only).
    #[arg(long)]
    tails: bool,
    #[arg(long)]
    phi: Option<f64>,
}

fn check_n(n: usize) -> Result<()> {
    ensure!(n >= 2 && n.is_power_of_two(), "--n must be a power of two at least 2, got {n}");
    Ok(())
}

/// Values within this distance of π/2 are read as π/2, so that a decimal
/// such as 1.5707963268 selects the right-angle hallway.
const RIGHT_ANGLE_SNAP: f64 = 1e-9;

fn check_omega(omega: f64) -> Result<f64> {
    if (omega - FRAC_PI_2).abs() <= RIGHT_ANGLE_SNAP {
        return Ok(FRAC_PI_2);
    }
    ensure!(omega > 0.0 && omega < FRAC_PI_2, "--omega must lie in (0, π/2] radians, got {omega}");
    Ok(omega)
}

/// `(n, iteration, area)` rows over a refinement chain.
type Trace = Vec<(usize, usize, f64)>;

/// Solves on `n = 8, 16, …` up to the target, warm-starting each stage.
fn solve_chain(n: usize, omega: f64, opts: &OptOptions) -> Result<(AngleSet, OptResult, Trace)> {
    check_n(n)?;
    let omega = check_omega(omega)?;
    let mut stage = n.min(8);
    let mut prev: Option<(AngleSet, OptResult)> = None;
    let mut trace = Vec::new();
    loop {
        let theta = AngleSet::uniform(stage, omega)?;
        let h0 = match &prev {
            Some((th, r)) => HeightFn::of_poly(&theta, &cap_from_heights(th, &r.heights)?.poly),
            None => HeightFn::constant(&theta, 1.0),
        };
        let r = maximize(&theta, &h0, opts)?;
        trace.extend(r.trace.iter().map(|&(i, a)| (stage, i, a)));
        prev = Some((theta, r));
        if stage >= n {
            break;
        }
        stage *= 2;
    }
    let (theta, r) = prev.expect("at least one stage");
    Ok((theta, r, trace))
}

fn default_opts(tol: f64, c: Common) -> OptOptions {
    OptOptions { tol_balance: tol.min(1e-9), seed: c.seed, ..OptOptions::default() }
}

fn cap_source(in_path: &Option<PathBuf>, n: usize, c: Common) -> Result<(AngleSet, HeightFn)> {
    match in_path {
        Some(p) => load_cap(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let (theta, r, _) = solve_chain(n, FRAC_PI_2, &default_opts(1e-9, c))?;
            Ok((theta, r.heights))
        }
    }
}

pub fn optimize(a: OptimizeArgs, c: Common) -> Result<Outcome> {
    ensure!(a.tol > 0.0, "--tol must be positive");
    let opts = OptOptions { max_iters: a.max_iters, multistart: a.multistart, ..default_opts(a.tol, c) };
    let (theta, r, trace) = solve_chain(a.n, a.omega, &opts)?;
    let residual = r.max_residual();
    if let Some(p) = &a.out {
        save_cap(p, &theta, &r.heights).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.svg {
        render_svg(&cap_from_heights(&theta, &r.heights)?, &Extras::default(), p)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.trace {
        let mut s = String::from("n,iter,area\n");
        for (n, i, area) in &trace {
            let _ = writeln!(s, "{n},{i},{area}");
        }
        std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?;
    }
    let cap = cap_to_value(&theta, &r.heights)?;
    let report = json!({
        "command": "optimize",
        "n": a.n,
        "omega": theta.omega,
        "area": r.area,
        "residual": residual,
        "iters": r.iters,
        "heights": cap["heights"],
    });
    Ok(Outcome { report, passed: residual <= a.tol })
}

pub fn verify_gerver(a: VerifyArgs, c: Common) -> Result<Outcome> {
    let (theta, h) = cap_source(&a.in_path, a.n, c)?;
    ensure!(theta.is_right(), "verify-gerver needs a right-angle cap");
    let cert = certify_with(&theta, &h, &CertifyParams::default());
    let area = sofa_core::hallway::sofa_area(&theta, &h)?;
    let passed = cert.balance_max_resid <= a.tol
        && cert.niche_in_cap
        && cert.wz_bound_ok
        && cert.injectivity_ok
        && cert.discrete_ineq_ok;
    let mut report = json!({ "command": "verify-gerver", "n": theta.n_theta() + 1, "area": area });
    merge(&mut report, serde_json::to_value(cert)?);
    Ok(Outcome { report, passed })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn qbound(a: QboundArgs, c: Common) -> Result<Outcome> {
    let (theta, h) = cap_source(&a.in_path, a.n, c)?;
    ensure!(theta.is_right(), "qbound needs a right-angle cap");
    let k = cap_from_heights(&theta, &h)?;
    let phi = a.phi.unwrap_or_else(|| estimate_phi_contact(&k.poly));
    ensure!(phi > 0.0 && phi < std::f64::consts::FRAC_PI_4, "--phi must lie in (0, π/4), got {phi}");
    let t = Triple::from_cap(k, phi, a.tail_grid)?;
    let cfg = ProbeConfig { dq_samples: a.dq_samples, concavity_pairs: a.pairs, lambdas: a.lambdas, amp: a.amp };
    let r = report_with(&t, &cfg, c.seed, |n, f: &(dyn Fn(usize) -> Result<f64, QError> + Sync)| {
        (0..n).into_par_iter().map(f).collect()
    })?;
    if let Some(p) = &a.svg {
        render_svg(&t.k, &Extras { triple: Some(&t) }, p).with_context(|| format!("writing {}", p.display()))?;
    }
    let dq_ok = a.dq_samples == 0 || r.dq_max <= a.dq_tol;
    let conc_ok = a.pairs == 0 || r.concavity_min_slack >= -SLACK;
    let passed = r.gap >= -SLACK && dq_ok && conc_ok;
    let report = json!({
        "command": "qbound",
        "n": theta.n_theta() + 1,
        "phi": phi,
        "Q": r.q,
        "A": r.a,
        "gap": r.gap,
        "dq_max": finite_or_null(r.dq_max),
        "concavity_min_slack": finite_or_null(r.concavity_min_slack),
        "residuals": r.residuals,
    });
    Ok(Outcome { report, passed })
}

pub fn armbounds(a: ArmArgs, _c: Common) -> Result<Outcome> {
    ensure!(a.grid >= 1, "--grid must be positive");
    let seq = iterate_sequence_with(a.iters, a.grid);
    if let Some(p) = &a.csv {
        std::fs::write(p, sequence_csv(&seq, a.grid)).with_context(|| format!("writing {}", p.display()))?;
    }
    let xs: Vec<f64> = (1..=a.grid).map(|k| FRAC_PI_2 * k as f64 / a.grid as f64).collect();
    let last = seq.last().expect("f0 present");
    let min_last = xs.iter().map(|&x| last.eval(x) - 1.0).fold(f64::INFINITY, f64::min);
    // f_i ≥ j_{(i−1)/12} for 1 ≤ i ≤ min(iters, 10).
    let ladder = (1..seq.len().min(11))
        .map(|i| {
            let j = PiecewiseLinearFn::j((i - 1) as f64 * D0);
            xs.iter().map(|&x| seq[i].eval(x) - j.eval(x)).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let margins: Vec<f64> = (0..=8).map(|i| verify_j_step(i as f64 * D0, a.grid)).collect();
    let passed = (a.iters < 11 || min_last > 0.0) && ladder >= -ROUNDING && margins.iter().all(|&m| m > 0.0);
    let report = json!({
        "command": "armbounds",
        "iters": a.iters,
        "grid": a.grid,
        "min_f_minus_1": min_last,
        "ladder_min_slack": finite_or_null(ladder),
        "j_step_margins": margins,
    });
    Ok(Outcome { report, passed })
}

pub fn anglebounds(a: AngleArgs, _c: Common) -> Result<Outcome> {
    let bound = r_region_interval_bound(1.25);
    let (m1_lo, m2_lo) = calc_inequalities(omega_lo(), 1.25)?;
    let (m1_mid, m2_mid) = calc_inequalities(omega_mid(), 1.1)?;
    let ends = omega_calc_endpoints();
    let convex = convexity_check(1.1, GRID);
    let max_area = (0..GRID)
        .map(|i| omega_lo() + (FRAC_PI_2 - omega_lo()) * i as f64 / GRID as f64)
        .map(|w| d_min(w).and_then(|d| r_region_area(w, d)))
        .try_fold(f64::NEG_INFINITY, |acc, x| x.map(|x| acc.max(x)))?;
    let mut passed = bound < AREA_THRESHOLD
        && max_area < AREA_THRESHOLD
        && [m1_lo, m2_lo, m1_mid, m2_mid].iter().all(|&m| m > 0.0)
        && ends[..3].iter().all(|&e| e < 1.0)
        && convex >= 0.0;
    let mut report = json!({
        "command": "anglebounds",
        "omega_lo": omega_lo(),
        "omega_mid": omega_mid(),
        "r_region_bound": bound,
        "r_region_area_mid": r_region_area(omega_mid(), 1.25)?,
        "max_r_region_area_at_d_min": max_area,
        "sine_margins": [[m1_lo, m2_lo], [m1_mid, m2_mid]],
        "omega_calc_endpoints": ends,
        "convexity_min": convex,
    });
    if let Some(w) = a.omega {
        let d = d_min(w).with_context(|| format!("--omega {w} outside [sec⁻¹ 2.2, π/2)"))?;
        let area = r_region_area(w, d)?;
        let (m1, m2) = calc_inequalities(w, d)?;
        passed &= area < AREA_THRESHOLD && m1 > 0.0 && m2 > 0.0;
        report["at_omega"] = json!({ "omega": w, "d_min": d, "r_region_area": area, "sine_margins": [m1, m2] });
    }
    if let Some(p) = &a.in_path {
        let (theta, h) = load_cap(p).with_context(|| format!("reading {}", p.display()))?;
        match triangle_disjoint_probe(&theta, &h) {
            Ok(r) => {
                passed &= r.contains_all;
                report["triangle"] = serde_json::to_value(r)?;
            }
            Err(e @ sofa_core::AngleBoundError::PreconditionArea(_)) => {
                passed = false;
                report["triangle"] = json!({ "precondition": e.to_string() });
            }
            Err(e) => bail!(e),
        }
    }
    Ok(Outcome { report, passed })
}

pub fn render(a: RenderArgs, _c: Common) -> Result<Outcome> {
    let (theta, h) = load_cap(&a.in_path).with_context(|| format!("reading {}", a.in_path.display()))?;
    let k = cap_from_heights(&theta, &h)?;
    let triple = if a.tails {
        ensure!(theta.is_right(), "--tails needs a right-angle cap");
        let phi = a.phi.unwrap_or_else(|| estimate_phi_contact(&k.poly));
        Some(Triple::from_cap(k.clone(), phi, TAIL_GRID)?)
    } else {
        None
    };
    render_svg(&k, &Extras { triple: triple.as_ref() }, &a.svg).with_context(|| format!("writing {}", a.svg.display()))?;
    let report = json!({
        "command": "render",
        "svg": a.svg.display().to_string(),
        "tails": a.tails,
        "n": theta.n_theta() + 1,
    });
    Ok(Outcome { report, passed: true })
}
