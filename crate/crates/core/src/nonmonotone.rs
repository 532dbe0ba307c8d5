//! The non-monotone reference discretization: standard central differences
//! applied directly to the Monge-Ampère operator, solved by damped Newton.
//!
//! At every interior node the discrete equation is
//!
//! ```text
//! G(u) = δ²ₓₓu · δ²ᵧᵧu − (δ²ₓᵧu)² − f = 0,
//! ```
//!
//! with the familiar 3-point second differences along the axes and the
//! 4-point cross difference
//! `δ²ₓᵧu = (u₊₊ − u₊₋ − u₋₊ + u₋₋) / (4h²)`.
//!
//! This is the "obvious" discretization — second order, compact, cheap —
//! and it is deliberately *not* monotone: `G` depends on the curvatures
//! only through products and squares, so it is invariant under flipping
//! the sign of the Hessian. With zero boundary data the discrete root set
//! is symmetric under `u ↦ −u`, and root-finding can converge to a concave
//! root that satisfies every discrete equation to machine precision yet
//! approximates no convex solution of the PDE. The monotone scheme in
//! [`crate::solver`] is measured against precisely this failure mode.
//!
//! [`solve_nonmonotone`] is plain damped Newton from a caller-supplied
//! seed: the exact 9-point Jacobian, step halving until the residual
//! sup-norm decreases. Newton's basins for this system are small and
//! intertwined — on the constant-source benchmark the simple paraboloid
//! seeds `±¼(x²+y²)` converge to genuine but *spurious* mixed-curvature
//! roots, not to the principal convex/concave pair. [`solve_branch`] is
//! the reliable driver for the principal roots: it seeds Newton on a
//! coarse grid with the monotone solver's solution (mirrored for the
//! concave branch) and continues to the target resolution by smoothed
//! bilinear prolongation, staying inside the target basin at every step.

use rayon::prelude::*;

use crate::discretization::GridFunction;
use crate::error::Error;
use crate::grid::Grid;
use crate::linalg::{gmres_solve, CsrMatrix, GmresOptions, Ilu0};
use crate::problems::{Field, Problem};
use crate::scalar::Scalar;
use crate::solver::{solve, SolveError, SolverConfig};

/// Initial iterate for one Newton solve.
#[derive(Clone)]
pub enum NewtonSeed<T> {
    /// `u⁰(x, y) = +¼ (x² + y²)`.
    PositiveParaboloid,
    /// `u⁰(x, y) = −¼ (x² + y²)`.
    NegativeParaboloid,
    /// Any caller-supplied field, sampled at the interior nodes.
    Custom(Field<T>),
}

impl<T> std::fmt::Debug for NewtonSeed<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NewtonSeed::PositiveParaboloid => f.write_str("PositiveParaboloid"),
            NewtonSeed::NegativeParaboloid => f.write_str("NegativeParaboloid"),
            NewtonSeed::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Parameters of the damped Newton solve (the seed is passed separately).
#[derive(Debug, Clone)]
pub struct NewtonConfig<T> {
    /// Residual sup-norm at which the iteration stops.
    pub tolerance: T,
    /// Hard cap on Newton steps.
    pub max_iterations: usize,
    pub gmres: GmresOptions<T>,
}

impl<T: Scalar> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            max_iterations: 50,
            gmres: GmresOptions::default(),
        }
    }
}

/// Convergence record of one Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    /// Newton steps taken (linear solves).
    pub iterations: usize,
    /// Residual sup-norm before each step (`len == iterations`).
    pub residual_history: Vec<T>,
    /// Residual sup-norm of the returned iterate.
    pub final_residual: T,
    /// Total step halvings across all line searches.
    pub halvings: usize,
}

/// Residual `G(u)` of the central-difference discretization at every
/// interior node, in grid index order.
fn residual<T: Scalar>(u: &GridFunction<T>, f_samples: &[T]) -> Vec<T> {
    let grid = *u.grid();
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.ij(idx);
            let u0 = u.node_value(i, j);
            let dxx = (u.node_value(i + 1, j) - T::two() * u0 + u.node_value(i - 1, j)) / h2;
            let dyy = (u.node_value(i, j + 1) - T::two() * u0 + u.node_value(i, j - 1)) / h2;
            let dxy = (u.node_value(i + 1, j + 1) - u.node_value(i + 1, j - 1)
                - u.node_value(i - 1, j + 1)
                + u.node_value(i - 1, j - 1))
                / (T::lit(4.0) * h2);
            dxx * dyy - dxy * dxy - f_samples[idx]
        })
        .collect()
}

/// Exact 9-point Jacobian `∂G/∂u` at the current iterate. Only interior
/// unknowns appear as columns; boundary neighbors are data.
fn jacobian<T: Scalar>(u: &GridFunction<T>) -> CsrMatrix<T> {
    let grid = *u.grid();
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let rows: Vec<Vec<(usize, T)>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.ij(idx);
            let u0 = u.node_value(i, j);
            let dxx = (u.node_value(i + 1, j) - T::two() * u0 + u.node_value(i - 1, j)) / h2;
            let dyy = (u.node_value(i, j + 1) - T::two() * u0 + u.node_value(i, j - 1)) / h2;
            let dxy = (u.node_value(i + 1, j + 1) - u.node_value(i + 1, j - 1)
                - u.node_value(i - 1, j + 1)
                + u.node_value(i - 1, j - 1))
                / (T::lit(4.0) * h2);
            let mut row = Vec::with_capacity(9);
            let mut push = |ix: usize, iy: usize, coeff: T| {
                if grid.is_interior(ix, iy) {
                    row.push((grid.index(ix, iy), coeff));
                }
            };
            // ∂(δxx·δyy)/∂u: the center couples through both factors.
            push(i, j, -T::two() * (dxx + dyy) / h2);
            push(i + 1, j, dyy / h2);
            push(i - 1, j, dyy / h2);
            push(i, j + 1, dxx / h2);
            push(i, j - 1, dxx / h2);
            // ∂(−δxy²)/∂u = −2 δxy · ∂δxy/∂u over the four corners.
            let c = dxy / (T::two() * h2);
            push(i + 1, j + 1, -c);
            push(i + 1, j - 1, c);
            push(i - 1, j + 1, c);
            push(i - 1, j - 1, -c);
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Solves the central-difference discretization of `det D²u = f`, `u = g`
/// on the boundary, by damped Newton from `seed`.
///
/// Returns whichever root the iteration converges to — with this scheme
/// that is *not* guaranteed to approximate the convex solution; see the
/// module docs. Non-convergence within `config.max_iterations`, a stalled
/// line search, and linear-solver failures all surface as errors carrying
/// the iteration diagnostics.
pub fn solve_nonmonotone<T: Scalar>(
    problem: &Problem<T>,
    n: usize,
    seed: &NewtonSeed<T>,
    config: &NewtonConfig<T>,
) -> Result<(GridFunction<T>, NewtonReport<T>), Error> {
    if config.tolerance <= T::zero() {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let grid = Grid::new(problem.domain(), n)?;
    let boundary = problem.boundary_fn();
    let quarter = T::lit(0.25);
    let u = match seed {
        NewtonSeed::PositiveParaboloid => {
            GridFunction::sample(grid, boundary, |p| quarter * (p.x * p.x + p.y * p.y))
        }
        NewtonSeed::NegativeParaboloid => {
            GridFunction::sample(grid, boundary, |p| -quarter * (p.x * p.x + p.y * p.y))
        }
        NewtonSeed::Custom(field) => {
            let field = field.clone();
            GridFunction::sample(grid, boundary, move |p| field(p))
        }
    };
    newton_iterate(problem, u, config)
}

/// The Newton loop on an already-materialized initial iterate.
fn newton_iterate<T: Scalar>(
    problem: &Problem<T>,
    mut u: GridFunction<T>,
    config: &NewtonConfig<T>,
) -> Result<(GridFunction<T>, NewtonReport<T>), Error> {
    let f_samples = problem.source_samples(u.grid())?;
    let mut res = residual(&u, &f_samples);
    let mut res_norm = sup_norm(&res);
    let mut residual_history = Vec::new();
    let mut halvings = 0usize;

    for _ in 0..=config.max_iterations {
        if res_norm <= config.tolerance {
            return Ok((
                u,
                NewtonReport {
                    iterations: residual_history.len(),
                    residual_history,
                    final_residual: res_norm,
                    halvings,
                },
            ));
        }
        if residual_history.len() == config.max_iterations {
            break;
        }
        let jac = jacobian(&u);
        let ilu = Ilu0::new(&jac)?;
        let neg_res: Vec<T> = res.iter().map(|&r| -r).collect();
        let step = gmres_solve(&jac, &ilu, &neg_res, None, &config.gmres)?.x;

        // Line search: halve until the residual sup-norm decreases.
        let mut scale = T::one();
        let base = u.values().to_vec();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<T> = base
                .iter()
                .zip(&step)
                .map(|(&b, &s)| b + scale * s)
                .collect();
            u.set_values(trial);
            let trial_res = residual(&u, &f_samples);
            let trial_norm = sup_norm(&trial_res);
            if trial_norm < res_norm {
                residual_history.push(res_norm);
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            scale = scale * T::half();
            halvings += 1;
        }
        if !accepted {
            return Err(Error::Newton(format!(
                "line search stalled after {} iterations at residual {:e}",
                residual_history.len(),
                res_norm.as_f64(),
            )));
        }
    }

    Err(Error::Newton(format!(
        "no convergence in {} iterations: residual {:e} above tolerance {:e}",
        config.max_iterations,
        res_norm.as_f64(),
        config.tolerance.as_f64(),
    )))
}

/// Which principal root [`solve_branch`] aims for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootBranch {
    /// The root approximating the convex solution of the PDE.
    Convex,
    /// Its non-convex sibling — the demonstration that this scheme can
    /// converge, with machine-zero residuals, to a non-solution.
    Concave,
}

/// Largest grid used for the monotone base seed of [`solve_branch`];
/// coarser targets are seeded directly.
const BRANCH_BASE_N: usize = 31;

/// Computes a principal root of the non-monotone scheme at resolution `n`
/// by mesh continuation.
///
/// The base iterate on a coarse grid (at most [`BRANCH_BASE_N`] interior
/// points per axis) is the monotone solver's solution — negated for the
/// concave branch, which is an equally valid root whenever the boundary
/// data is zero. Each refinement prolongs the current root bilinearly and
/// applies a few local averaging sweeps before handing it to Newton: a raw
/// bilinear interpolant is flat inside every coarse cell, which zeroes the
/// Jacobian diagonal at the inserted nodes and stalls the linear solver,
/// while the smoothed iterate stays deep inside the target root's basin.
///
/// The returned report is the final (target-resolution) Newton solve's.
pub fn solve_branch<T: Scalar>(
    problem: &Problem<T>,
    n: usize,
    branch: RootBranch,
    config: &NewtonConfig<T>,
) -> Result<(GridFunction<T>, NewtonReport<T>), Error> {
    // Halve the resolution until the monotone base solve is cheap.
    let mut levels = vec![n];
    while *levels.last().unwrap() > BRANCH_BASE_N {
        levels.push(levels.last().unwrap() / 2);
    }
    levels.reverse();

    let base_n = levels[0];
    let monotone = match solve(problem, base_n, &SolverConfig::default()) {
        Ok(outcome) => outcome.u,
        Err(SolveError::Fault(e)) => return Err(e),
        Err(e @ SolveError::NonConvergence(_)) => {
            return Err(Error::Newton(format!(
                "monotone base solve for the continuation seed failed: {e}"
            )));
        }
    };
    let sign = match branch {
        RootBranch::Convex => T::one(),
        RootBranch::Concave => -T::one(),
    };
    let seeded = GridFunction::new(
        *monotone.grid(),
        monotone.values().iter().map(|&v| sign * v).collect(),
        problem.boundary_fn(),
    );
    let (mut root, mut report) = newton_iterate(problem, seeded, config)?;

    for &fine_n in &levels[1..] {
        let fine_grid = Grid::new(problem.domain(), fine_n)?;
        let prolonged = prolong_smoothed(&root, fine_grid)?;
        let next = newton_iterate(problem, prolonged, config)?;
        root = next.0;
        report = next.1;
    }
    Ok((root, report))
}

/// Bilinear prolongation onto `fine` followed by three local averaging
/// sweeps (`u ← ½u + ⅛Σ neighbors`), which restore curvature to the
/// cell-interior nodes where the interpolant is flat.
fn prolong_smoothed<T: Scalar>(
    coarse: &GridFunction<T>,
    fine: Grid<T>,
) -> Result<GridFunction<T>, Error> {
    let n = fine.n();
    let mut vals = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let stencil = coarse.grid().locate(fine.node(i, j))?;
            vals.push(coarse.interpolate(&stencil));
        }
    }
    let mut u = GridFunction::new(fine, vals, coarse.boundary_fn().clone());
    let half = T::half();
    let eighth = T::lit(0.125);
    for _ in 0..3 {
        let mut next = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                let ring = u.node_value(i + 1, j)
                    + u.node_value(i - 1, j)
                    + u.node_value(i, j + 1)
                    + u.node_value(i, j - 1);
                next.push(half * u.node_value(i, j) + eighth * ring);
            }
        }
        u.set_values(next);
    }
    Ok(u)
}
