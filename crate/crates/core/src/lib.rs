//! Monotone finite difference solver for the two-dimensional Monge-Ampère
//! Dirichlet problem
//!
//! ```text
//! det D²u = u_xx u_yy − u_xy² = f   in Ω,
//!       u = g                        on ∂Ω,
//!       u convex,
//! ```
//!
//! via its equivalent Hamilton-Jacobi-Bellman formulation
//!
//! ```text
//! sup_{(a,θ)} { −α₁₁ u_xx − 2α₁₂ u_xy − α₂₂ u_yy + 2√(a(1−a) f) } = 0,
//! ```
//!
//! where the controls `(a, θ) ∈ [0,1] × [−π/4, π/4)` parametrize trace-one
//! positive semidefinite coefficient matrices. The discretization mixes the
//! standard 7-point stencil (second order, usable where its monotonicity
//! conditions hold) with a semi-Lagrangian wide stencil of length `√h`
//! (first order, monotone for every control), so the global scheme is
//! monotone and converges to the viscosity solution while retaining
//! second-order accuracy wherever the 7-point stencil wins.
//!
//! The crate provides:
//!
//! * [`grid`] — uniform square grids, bilinear interpolation stencils, and
//!   boundary ray tracing for truncated stencil arms;
//! * [`controls`] — closed-form optimization of the HJB control over the
//!   six monotonicity regions of control space;
//! * [`discretization`] — stencil evaluation and monotone (M-matrix) row
//!   assembly;
//! * [`linalg`] — sparse CSR storage with an ILU(0)-preconditioned
//!   restarted GMRES;
//! * [`solver`] — policy iteration (Howard's algorithm);
//! * [`problems`] — the five benchmark problems and user-defined ones;
//! * [`diagnostics`] — error norms, convergence rates, convexity and
//!   stability checks, consistency probes;
//! * [`nonmonotone`] — a deliberately non-monotone 9-point Newton baseline
//!   used to demonstrate what monotonicity buys.
//!
//! All numerics are generic over the scalar type via [`Scalar`]; the
//! `f64`-concrete aliases below are the intended entry point.

pub mod controls;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod nonmonotone;
pub mod problems;
pub mod scalar;
pub mod solver;

pub use error::Error;
pub use scalar::Scalar;

/// Double-precision domain.
pub type Domain = grid::Domain<f64>;
/// Double-precision grid.
pub type Grid = grid::Grid<f64>;
/// Double-precision point.
pub type Point = grid::Point<f64>;
/// Control pair with the default scalar type.
pub type ControlPair = controls::ControlPair<f64>;
/// Grid function with the default scalar type.
pub type GridFunction = discretization::GridFunction<f64>;
/// Problem description with the default scalar type.
pub type Problem = problems::Problem<f64>;
/// Solver configuration with the default scalar type.
pub type SolverConfig = solver::SolverConfig<f64>;
/// Solve outcome with the default scalar type.
pub type SolveOutcome = solver::SolveOutcome<f64>;
