//! Property tests of the polygon kernel against brute-force oracles.

use proptest::prelude::*;
use sofa_core::geometry::*;
use std::f64::consts::TAU;

/// Convex polygon with vertices on an ellipse at sorted random angles.
fn poly_strategy() -> impl Strategy<Value = ConvexPoly> {
    (3usize..200, 0.3f64..3.0, 0.3f64..3.0, -2.0f64..2.0, -2.0f64..2.0, any::<u64>()).prop_map(|(m, a, b, cx, cy, seed)| {
        let mut s = seed | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut ts: Vec<f64> = (0..m).map(|_| next() * TAU).collect();
        ts.sort_by(f64::total_cmp);
        let pts: Vec<Vec2> = ts.iter().map(|&t| Vec2::new(cx + a * t.cos(), cy + b * t.sin())).collect();
        ConvexPoly::from_vertices(&pts).unwrap()
    })
}

fn brute_support(p: &ConvexPoly, t: f64) -> f64 {
    p.verts().iter().map(|q| q.dot(u(t))).fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #[test]
    fn support_matches_vertex_maximum(p in poly_strategy(), t in -10.0f64..10.0) {
        prop_assert!((p.support(t) - brute_support(&p, t)).abs() < 1e-12);
    }

    #[test]
    fn vertex_attains_support(p in poly_strategy(), t in -10.0f64..10.0) {
        let h = brute_support(&p, t);
        for side in [Side::Plus, Side::Minus] {
            prop_assert!((p.vertex(t, side).dot(u(t)) - h).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_at_normals_spans_the_edge(p in poly_strategy()) {
        let m = p.verts().len();
        for (i, &n) in p.normals().iter().enumerate() {
            prop_assert_eq!(p.vertex(n, Side::Minus), p.verts()[i]);
            prop_assert_eq!(p.vertex(n, Side::Plus), p.verts()[(i + 1) % m]);
        }
    }

    #[test]
    fn shoelace_matches_measure_form(p in poly_strategy()) {
        prop_assert!((p.area() - p.area_from_measure()).abs() < 1e-10);
        prop_assert!(p.sigma().closure_sum().norm() < 1e-10);
    }
}
