//! Error type shared by all modules of the crate.

use std::fmt;

/// Errors produced by matrix calculus, geometry, quadrature, search, and the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input matrix is singular, non-square, or violates a determinant precondition.
    InvalidMatrix(String),
    /// A symmetric matrix expected to be strictly positive definite has a
    /// non-positive eigenvalue.
    NotStrictlyConvex(String),
    /// The Jacobi eigensolver did not reach its off-diagonal tolerance.
    EigenNoConvergence,
    /// A point expected in the interior of a domain lies outside it.
    PointOutsideDomain,
    /// Domain construction failed (non-convex polygon, inverted box, bad radius).
    InvalidDomain(String),
    /// An integrand returned a non-finite value at a quadrature node.
    NonFiniteIntegrand { node: Vec<f64> },
    /// An ellipsoid average was requested for an ellipsoid not contained in the
    /// integrand's domain.
    EllipsoidEscapesDomain,
    /// A stencil endpoint left the domain of the sampled function.
    StencilOutOfDomain { point: Vec<f64> },
    /// Eigenvalue bound below 1; the det-one constraint leaves no feasible shape.
    InfeasibleBound { bound: f64 },
    /// The search objective returned a non-finite value; the offending shape is
    /// reported in display form.
    NonFiniteObjective { shape: String },
    /// A paraboloid supplied to a viscosity check does not touch the function in
    /// the stated direction on the stated neighborhood.
    NotATouchingParaboloid { detail: String },
    /// The fixed-point iteration exhausted its sweep budget.
    NotConverged { iterations: usize, residual: f64 },
    /// A right-hand side sample was negative.
    InvalidRhs { point: Vec<f64>, value: f64 },
    /// Configuration rejected before execution.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMatrix(msg) => write!(f, "invalid matrix: {msg}"),
            Error::NotStrictlyConvex(msg) => {
                write!(f, "matrix is not strictly positive definite: {msg}")
            }
            Error::EigenNoConvergence => write!(f, "Jacobi eigendecomposition did not converge"),
            Error::PointOutsideDomain => write!(f, "point lies outside the domain"),
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            Error::NonFiniteIntegrand { node } => {
                write!(f, "integrand is non-finite at node {node:?}")
            }
            Error::EllipsoidEscapesDomain => {
                write!(f, "ellipsoid is not contained in the function's domain")
            }
            Error::StencilOutOfDomain { point } => {
                write!(f, "stencil endpoint {point:?} lies outside the domain")
            }
            Error::InfeasibleBound { bound } => {
                write!(f, "eigenvalue bound {bound} < 1 admits no det-one shape")
            }
            Error::NonFiniteObjective { shape } => {
                write!(f, "objective is non-finite at shape {shape}")
            }
            Error::NotATouchingParaboloid { detail } => {
                write!(f, "paraboloid contact validation failed: {detail}")
            }
            Error::NotConverged {
                iterations,
                residual,
            } => write!(
                f,
                "iteration did not converge after {iterations} sweeps (residual {residual:.3e})"
            ),
            Error::InvalidRhs { point, value } => {
                write!(f, "right-hand side is negative at {point:?}: {value}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
