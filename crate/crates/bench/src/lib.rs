//! Fixtures shared by the criterion benches.

use sofa_core::balance_opt::{maximize, OptOptions};
use sofa_core::hallway::{cap_from_heights, AngleSet, Cap, HeightFn};
use sofa_core::{ConvexPoly, Vec2};

/// Ellipse inscribed polygon with `m` vertices.
pub fn ellipse(m: usize) -> ConvexPoly {
    let pts: Vec<Vec2> = (0..m)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / m as f64;
            Vec2::new(1.7 * t.cos(), 0.9 * t.sin())
        })
        .collect();
    ConvexPoly::from_vertices(&pts).expect("convex")
}

/// Balanced cap on `Θ_n`, solved cold.
pub fn optimized_cap(n: usize) -> Cap {
    let theta = AngleSet::right_angle(n).expect("n ≥ 2");
    let r = maximize(&theta, &HeightFn::constant(&theta, 1.0), &OptOptions::default()).expect("solves");
    cap_from_heights(&theta, &r.heights).expect("cap")
}
