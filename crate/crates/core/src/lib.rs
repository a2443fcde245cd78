//! Hyperbolic lattice-point orbits of cocompact surface groups, modular
//! symbols along the orbit, and the twisted Huber series built from them.
//!
//! The pipeline is: build a [`SurfaceGroup`], enumerate an [`OrbitBall`]
//! `{g : r(g z, w) <= x}`, pair each element's homology class with a
//! [`PeriodForm`], then aggregate ([`stats`]) or sum as a Dirichlet series
//! ([`dirichlet`]).

// `!(x >= 0.0)` style guards deliberately reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirichlet;
pub mod error;
pub mod group;
pub mod halfplane;
pub mod modsym;
pub mod orbit;
pub mod output;
pub mod scalar;
pub mod stats;
pub mod summation;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use group::{GroupElement, GroupRecord, Letter, SurfaceGroup, Word};
pub use modsym::PeriodForm;
pub use orbit::{EnumerationOptions, OrbitBall, OrbitRecord};
pub use scalar::Scalar;
pub use stats::MomentReport;
pub use tolerance::Tolerances;

/// Double-precision point of the upper half-plane.
pub type Point = halfplane::Point<f64>;
/// Double-precision PSL2 map.
pub type MoebiusMap = halfplane::Moebius<f64>;
/// Complex scalar used for the series argument `s` and series values.
pub type Complex = num_complex::Complex64;

/// Crate version, stamped into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
