//! Mean-value averaging operators for the Monge-Ampere equation
//! `det D^2 u = f`, together with the pieces they are built from: small
//! symmetric matrix calculus, ellipsoid geometry inside convex domains,
//! high-order ball/sphere/ellipsoid quadrature, a catalog of exact test
//! functions, constrained search over det-one shapes, remainder-rate
//! reporting, and a wide-stencil Dirichlet solver.

pub mod error;
pub mod functions;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod search;
pub mod solver;

pub use error::{Error, Result};
pub use functions::{Convexity, Smoothness, TestFunction};
pub use geometry::{ConvexDomain, Ellipsoid, KinkSet};
pub use linalg::{Matrix, SpdShape, SymMatrix, TraceInf};
pub use operators::{MvConfig, MvResult, PhiSpec, RemainderSeries, Variant};
pub use quadrature::QuadratureRule;
pub use report::RateFit;
pub use search::{SearchBudget, SearchResult};
pub use solver::{Grid2, SolveParams, SolveReport};
