//! Quadrature rules for 2D elements cut by implicit or parametric boundaries.
//!
//! A background Cartesian mesh is intersected by a domain boundary given either
//! as a level set φ (active region = {φ ≤ 0}) or as a closed chain of rational
//! Bézier curves. Cut cells need tailored quadrature rules; this crate builds
//! them with five method families:
//!
//! * [`quadtree`] — recursive bisection with masked Gauss points or a
//!   marching-squares tessellation on the finest level,
//! * [`momentfit`] — Lagrange-basis moment fitting against a quadtree
//!   reference, and hierarchical moment fitting (divergence-free interface
//!   rule + divergence-theorem volume rule),
//! * [`dimreduce`] — height-function dimension reduction for level sets and
//!   Green's-theorem quadrature for parametric boundary chains.
//!
//! [`analysis`] predicts the algebraic degree of transformed integrands and
//! fits convergence rates; [`bench`] holds reference oracles, study drivers
//! and CSV output; [`cli`] exposes everything on the command line.
//!
//! All rule generators are pure and deterministic: identical inputs produce
//! bit-identical rules.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod dimreduce;
pub mod geometry;
pub mod momentfit;
pub mod poly;
pub mod quad;
pub mod quadtree;

mod parallel;

pub use quad::{AffineMap2D, Gauss1D, Point2, QuadratureRule, Rect};

/// Error type shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("non-finite evaluation at ({x}, {y})")]
    NonFiniteEval { x: f64, y: f64 },
    #[error("coefficient magnitude out of range: {0}")]
    NumericRange(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("method failure: {0}")]
    MethodFailure(String),
    #[error("degenerate normal: {0}")]
    DegenerateNormal(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown identifier: {0}")]
    UnknownId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Relative errors below this value are reported as exactly this value.
pub const MACHINE_FLOOR: f64 = 2.22e-15;
