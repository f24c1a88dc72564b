//! Computational core for polygon-cap bounds on the moving sofa problem.
//!
//! The crate is organised bottom-up: [`geometry`] is the convex-polygon
//! kernel, [`hallway`] builds caps and their niches, [`balance_opt`] maximizes
//! the polygon area functional, [`arm_bounds`] runs the arm-length lower-bound
//! iteration, [`qbound`] evaluates the quadratic upper bound and its probes,
//! and [`angle_bounds`] holds the rotation-angle numerics.

pub mod angle_bounds;
pub mod arm_bounds;
pub mod balance_opt;
pub mod error;
pub mod geometry;
pub mod hallway;
pub mod io;
pub mod qbound;
pub mod svg;

mod envelope;

pub use error::{AngleBoundError, ArmError, CapError, GeomError, IoError, OptError, QError};
pub use geometry::{Angle, ConvexPoly, DiscreteMeasure, HalfPlane, Side, Vec2};
pub use hallway::{AngleSet, Cap, HeightFn, NichePolyline, SupportingHallway, WedgeInfo};
