//! Wide-stencil finite-difference discretizations of the Monge-Ampère
//! equation with measure data: lattice domains, exact slab-clipping geometry,
//! the discrete operators, source-measure handling and the damped Euler solver.

pub mod error;
pub mod geometry;
pub mod lattice;
pub mod measure;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{ConvexPolygon, HalfPlane, SlabConstraint, Vec2};
pub use lattice::{
    DomainShape, LatticeDirection, LatticeDomain, MeshFunction, Multiplier, OrthogonalBasis,
    PointKind, StencilPolicy,
};
pub use operators::{OperatorKind, PolarProfile, Stencil};
pub use measure::{BorelBox, Density, Dirac, DiscretizedSource, SourceMeasure};
pub use solver::{BoundaryData, Init, SolveReport, SolverConfig, Stability, Sweep};

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
