//! SVG 1.1 figures of a cap, its niche and, optionally, its tails and core curve.
//!
//! Output is byte-deterministic: coordinates are printed with fixed precision
//! and the five layer groups always appear in the same order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::IoError;
use crate::geometry::{ConvexPoly, Vec2};
use crate::hallway::{inner_corner, niche_polyline, Cap};
use crate::qbound::Triple;

/// Layer names, in drawing order.
pub const LAYERS: [&str; 5] = ["cap", "niche", "polyline", "tails", "core"];
/// Fraction of the content extent added on each side of the view box.
pub const MARGIN: f64 = 0.05;
/// Samples of the core curve `x_K` on `[φ_R, φ_L]`.
pub const CORE_SAMPLES: usize = 256;

/// Optional overlays.
#[derive(Clone, Debug, Default)]
pub struct Extras<'a> {
    /// Draws `B` and `D` in "tails" and `x_K` on `[φ_R, φ_L]` in "core".
    pub triple: Option<&'a Triple>,
}

fn fmt_pt(out: &mut String, p: Vec2) {
    // SVG's y axis points down.
    let _ = write!(out, "{:.6},{:.6}", p.x, -p.y);
}

fn path_d(pts: &[Vec2], closed: bool) -> String {
    let mut d = String::new();
    for (i, &p) in pts.iter().enumerate() {
        d.push(if i == 0 { 'M' } else { 'L' });
        fmt_pt(&mut d, p);
        d.push(' ');
    }
    if closed {
        d.push('Z');
    }
    d.trim_end().to_string()
}

struct Layer {
    name: &'static str,
    style: &'static str,
    paths: Vec<(Vec<Vec2>, bool)>,
}

fn layers(k: &Cap, extras: &Extras) -> Vec<Layer> {
    let poly_path = |p: &ConvexPoly| (p.verts().to_vec(), true);
    let np = niche_polyline(k);
    let niche = if np.niche_area > 0.0 { vec![(np.points.clone(), true)] } else { Vec::new() };
    let (tails, core) = match extras.triple {
        Some(t) => {
            let pts: Vec<Vec2> = (0..CORE_SAMPLES)
                .map(|i| t.phi_r + (t.phi_l - t.phi_r) * i as f64 / (CORE_SAMPLES - 1) as f64)
                .map(|s| inner_corner(&k.poly, s))
                .collect();
            (vec![poly_path(&t.b), poly_path(&t.d)], vec![(pts, false)])
        }
        None => (Vec::new(), Vec::new()),
    };
    vec![
        Layer { name: "cap", style: "fill=\"#dde6f0\" stroke=\"#1f3b57\"", paths: vec![poly_path(&k.poly)] },
        Layer { name: "niche", style: "fill=\"#ffffff\" stroke=\"#8a8a8a\"", paths: niche },
        Layer { name: "polyline", style: "fill=\"none\" stroke=\"#b03a2e\"", paths: vec![(np.points, false)] },
        Layer { name: "tails", style: "fill=\"#f5e6b8\" fill-opacity=\"0.6\" stroke=\"#9a7d0a\"", paths: tails },
        Layer { name: "core", style: "fill=\"none\" stroke=\"#196f3d\"", paths: core },
    ]
}

/// SVG document text.
pub fn render_svg_string(k: &Cap, extras: &Extras) -> String {
    let layers = layers(k, extras);
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in layers.iter().flat_map(|l| l.paths.iter()).flat_map(|(pts, _)| pts.iter()) {
        let q = Vec2::new(p.x, -p.y);
        lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    let ext = Vec2::new((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
    let (x0, y0) = (lo.x - MARGIN * ext.x, lo.y - MARGIN * ext.y);
    let (w, h) = ((1.0 + 2.0 * MARGIN) * ext.x, (1.0 + 2.0 * MARGIN) * ext.y);
    let stroke = 0.004 * ext.x.max(ext.y);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\" width=\"{:.0}\" height=\"{:.0}\">",
        800.0,
        800.0 * h / w
    );
    for l in &layers {
        let _ = writeln!(out, "  <g id=\"{}\" {} stroke-width=\"{stroke:.6}\">", l.name, l.style);
        for (pts, closed) in &l.paths {
            let _ = writeln!(out, "    <path d=\"{}\"/>", path_d(pts, *closed));
        }
        let _ = writeln!(out, "  </g>");
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(k: &Cap, extras: &Extras, path: impl AsRef<Path>) -> Result<(), IoError> {
    fs::write(path, render_svg_string(k, extras))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hallway::{cap_from_heights, AngleSet, HeightFn};
    use crate::qbound::PHI_DEFAULT;

    fn group<'a>(svg: &'a str, name: &str) -> &'a str {
        let open = format!("<g id=\"{name}\"");
        let start = svg.find(&open).expect("layer present");
        let end = start + svg[start..].find("</g>").expect("closed");
        &svg[start..end]
    }

    #[test]
    fn hexagon_has_one_cap_path_and_empty_niche() {
        let th = AngleSet::right_angle(2).unwrap();
        let k = cap_from_heights(&th, &HeightFn::constant(&th, 1.0)).unwrap();
        let svg = render_svg_string(&k, &Extras::default());
        assert_eq!(group(&svg, "cap").matches("<path").count(), 1);
        assert_eq!(group(&svg, "niche").matches("<path").count(), 0);
        for l in LAYERS {
            assert!(svg.contains(&format!("<g id=\"{l}\"")));
        }
    }

    #[test]
    fn tails_and_core_layers_are_filled() {
        let th = AngleSet::right_angle(16).unwrap();
        let k = cap_from_heights(&th, &HeightFn::constant(&th, 1.0)).unwrap();
        let t = Triple::from_cap(k.clone(), PHI_DEFAULT, 1024).unwrap();
        let svg = render_svg_string(&k, &Extras { triple: Some(&t) });
        assert_eq!(group(&svg, "tails").matches("<path").count(), 2);
        assert_eq!(group(&svg, "core").matches("<path").count(), 1);
        assert_eq!(group(&svg, "niche").matches("<path").count(), 1);
        assert_eq!(svg, render_svg_string(&k, &Extras { triple: Some(&t) }));
    }

    #[test]
    fn view_box_has_margin() {
        let th = AngleSet::right_angle(2).unwrap();
        let k = cap_from_heights(&th, &HeightFn::constant(&th, 1.0)).unwrap();
        let svg = render_svg_string(&k, &Extras::default());
        let vb: Vec<f64> = svg.split("viewBox=\"").nth(1).unwrap().split('"').next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
        let xs: Vec<f64> = k.poly.verts().iter().map(|p| p.x).collect();
        let (lo, hi) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        assert!((vb[0] - (lo - 0.05 * (hi - lo))).abs() < 1e-5);
        assert!((vb[2] - 1.1 * (hi - lo)).abs() < 1e-5);
    }
}
