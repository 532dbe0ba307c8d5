//! Crate-wide error type.

/// Errors produced by grid construction, geometry queries, problem
/// validation, and linear solves.
///
/// Diagnostic payloads are carried as `f64` so the error type stays
/// independent of the scalar parameter.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Domain bounds are not ordered or not finite.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// The requested grid would not have square cells.
    #[error("grid cells are not square: hx = {hx}, hy = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },

    /// Fewer than two interior points per axis.
    #[error("grid needs at least two interior points per axis, got n = {0}")]
    GridTooSmall(usize),

    /// A query point lies outside the closed domain beyond snapping
    /// tolerance.
    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutOfDomain { x: f64, y: f64 },

    /// A ray starts on the boundary and immediately leaves the domain.
    #[error("degenerate ray: origin on the boundary with outward direction")]
    DegenerateRay,

    /// Problem data violates its contract (e.g. negative source samples).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The iterative linear solver failed to reach its tolerance.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// An assembled system is not the M-matrix the monotone scheme
    /// guarantees — a bug, not a data problem.
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),

    /// Inconsistent configuration (sizes, sample counts, tolerances).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The damped Newton iteration of the non-monotone scheme failed.
    #[error("newton iteration failed: {0}")]
    Newton(String),
}
