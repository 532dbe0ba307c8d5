//! Discrete operators: grid functions, narrow and wide second
//! differences, and monotone row assembly with M-matrix verification.
//!
//! Every discrete ingredient of the HJB operator lives here:
//!
//! * [`GridFunction`] — interior nodal values plus the Dirichlet closure,
//!   so stencils can read across the boundary transparently;
//! * [`second_diffs`] — the three 7-point second differences (`δxx`,
//!   `δyy`, and the two skewed cross differences);
//! * [`wide_geometry`] / [`wide_second_diffs`] — the semi-Lagrangian
//!   stencil: four arms of target length `√h` along the rotated axes,
//!   truncated exactly on the boundary where necessary, with bilinearly
//!   interpolated endpoint values and the unequal-arm second difference
//!   `δ = 2 (η₂ v₁ + η₁ v₂ − (η₁+η₂) u₀) / (η₁ η₂ (η₁+η₂))`;
//! * [`assemble_row`] / [`assemble_system`] — the linear system
//!   `A u = F` for a frozen control field, with boundary values and the
//!   source strength folded into `F` so that `A u − F` reproduces the HJB
//!   objective at every interior node to roundoff;
//! * [`verify_m_matrix`] — the always-on structural check (positive
//!   diagonal, nonpositive off-diagonal, weak diagonal dominance, and
//!   reachability of a strictly dominant row) that guards monotonicity.

use std::sync::Arc;

use rayon::prelude::*;

use crate::controls::{
    coefficients, source_strength, OptimizerResult, SecondDerivativeSamples, StencilMode,
};
use crate::error::Error;
use crate::grid::{Grid, InterpolationStencil, Point};
use crate::linalg::CsrMatrix;
use crate::scalar::Scalar;

/// Shared Dirichlet-data closure.
pub type BoundaryFn<T> = Arc<dyn Fn(Point<T>) -> T + Send + Sync>;

/// A discrete function: values on the interior nodes plus the boundary
/// closure `g`, so that any node of the closed grid can be read.
#[derive(Clone)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
    boundary: BoundaryFn<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>, boundary: BoundaryFn<T>) -> Self {
        assert_eq!(
            values.len(),
            grid.num_interior(),
            "value vector must cover the interior"
        );
        Self {
            grid,
            values,
            boundary,
        }
    }

    /// Samples `f` at every interior node.
    pub fn sample(grid: Grid<T>, boundary: BoundaryFn<T>, f: impl Fn(Point<T>) -> T) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                values.push(f(grid.node(i, j)));
            }
        }
        Self::new(grid, values, boundary)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Replaces the interior values (length-checked).
    pub fn set_values(&mut self, values: Vec<T>) {
        assert_eq!(values.len(), self.grid.num_interior());
        self.values = values;
    }

    pub fn boundary_fn(&self) -> &BoundaryFn<T> {
        &self.boundary
    }

    /// Value at any node of the closed grid (`0 ..= n+1` per axis):
    /// interior nodes read the vector, boundary nodes evaluate `g`.
    pub fn node_value(&self, ix: usize, iy: usize) -> T {
        if self.grid.is_interior(ix, iy) {
            self.values[self.grid.index(ix, iy)]
        } else {
            (self.boundary)(self.grid.node(ix, iy))
        }
    }

    /// Bilinear interpolation through a located stencil.
    pub fn interpolate(&self, stencil: &InterpolationStencil<T>) -> T {
        let mut acc = T::zero();
        for (&(ix, iy), &w) in stencil.nodes.iter().zip(&stencil.weights) {
            if w != T::zero() {
                acc = acc + w * self.node_value(ix, iy);
            }
        }
        acc
    }

    /// Dirichlet datum at a boundary point.
    pub fn boundary_at(&self, p: Point<T>) -> T {
        (self.boundary)(p)
    }
}

/// The three 7-point second differences at interior node `(i, j)`,
/// packaged with the source sample for the control optimizers.
///
/// `dxy1` is exact for cross terms with `α₁₂ ≥ 0` (it leans on the main
/// diagonal), `dxy2` for `α₁₂ ≤ 0` (anti-diagonal).
pub fn second_diffs<T: Scalar>(
    u: &GridFunction<T>,
    i: usize,
    j: usize,
    f_val: T,
) -> SecondDerivativeSamples<T> {
    let h = u.grid().h();
    let h2 = h * h;
    let u0 = u.node_value(i, j);
    let e = u.node_value(i + 1, j);
    let w = u.node_value(i - 1, j);
    let n = u.node_value(i, j + 1);
    let s = u.node_value(i, j - 1);
    let ne = u.node_value(i + 1, j + 1);
    let sw = u.node_value(i - 1, j - 1);
    let nw = u.node_value(i - 1, j + 1);
    let se = u.node_value(i + 1, j - 1);
    let two = T::two();
    SecondDerivativeSamples {
        dxx: (e - two * u0 + w) / h2,
        dyy: (n - two * u0 + s) / h2,
        dxy1: (two * u0 + ne + sw - e - w - n - s) / (two * h2),
        dxy2: (-two * u0 - se - nw + e + w + n + s) / (two * h2),
        f_val,
    }
}

/// Where a wide-stencil arm ends.
#[derive(Debug, Clone)]
pub enum ArmEndpoint<T> {
    /// Inside the domain: value is bilinearly interpolated.
    Interpolated(InterpolationStencil<T>),
    /// On the boundary (truncated arm): value is `g` at the exit point.
    Boundary(Point<T>),
}

/// One arm of the wide stencil: its actual length `η` and endpoint.
#[derive(Debug, Clone)]
pub struct WideArm<T> {
    pub length: T,
    pub end: ArmEndpoint<T>,
}

/// Geometry of the four-arm wide stencil at one node and angle: arms 0, 1
/// run along `±e_z`, arms 2, 3 along `±e_w`, where `e_z` is the unit
/// vector at angle `φ = −θ` and `e_w` its counter-clockwise normal.
#[derive(Debug, Clone)]
pub struct WideStencilGeometry<T> {
    pub origin: (usize, usize),
    pub arms: [WideArm<T>; 4],
}

impl<T> WideStencilGeometry<T> {
    /// True when some rotated axis lost *both* of its interpolation anchors
    /// to boundary truncation. This happens only inside the `√h × √h` corner
    /// boxes of the domain, where the two opposite arms exit through the two
    /// perpendicular walls. The resulting second difference runs over two
    /// boundary samples at unequal tiny spacings, so its nonuniform-spacing
    /// error term (proportional to the spacing gap times the third
    /// derivative) is no longer controlled by the `√h` design length — such
    /// an angle is not an admissible wide-stencil rotation and the search
    /// skips it. Narrow candidates (including the diagonal ones) keep the
    /// node covered.
    pub fn degenerate_axis(&self) -> bool {
        let cut = |a: &WideArm<T>| matches!(a.end, ArmEndpoint::Boundary(_));
        (cut(&self.arms[0]) && cut(&self.arms[1])) || (cut(&self.arms[2]) && cut(&self.arms[3]))
    }

    /// Number of boundary-truncated arms (0–4).
    pub fn truncated_arms(&self) -> usize {
        self.arms
            .iter()
            .filter(|a| matches!(a.end, ArmEndpoint::Boundary(_)))
            .count()
    }
}

/// Builds the wide stencil of target arm length `√h` at interior node
/// `(i, j)` for angle `θ`; arms hitting the boundary are truncated exactly
/// onto it.
pub fn wide_geometry<T: Scalar>(
    grid: &Grid<T>,
    i: usize,
    j: usize,
    theta: T,
) -> Result<WideStencilGeometry<T>, Error> {
    debug_assert!(grid.is_interior(i, j));
    let origin = grid.node(i, j);
    let arm_len = grid.h().sqrt();
    let phi = -theta;
    let (sin_phi, cos_phi) = phi.sin_cos();
    let dirs = [
        Point { x: cos_phi, y: sin_phi },
        Point { x: -cos_phi, y: -sin_phi },
        Point { x: -sin_phi, y: cos_phi },
        Point { x: sin_phi, y: -cos_phi },
    ];
    let mut arms = Vec::with_capacity(4);
    for dir in dirs {
        let exit = grid.ray_exit(origin, dir, arm_len)?;
        let end = if exit.truncated {
            ArmEndpoint::Boundary(exit.endpoint)
        } else {
            ArmEndpoint::Interpolated(grid.locate(exit.endpoint)?)
        };
        arms.push(WideArm {
            length: exit.length,
            end,
        });
    }
    let arms: [WideArm<T>; 4] = arms.try_into().expect("exactly four arms");
    Ok(WideStencilGeometry {
        origin: (i, j),
        arms,
    })
}

/// Value of `u` at an arm endpoint.
fn arm_value<T: Scalar>(u: &GridFunction<T>, arm: &WideArm<T>) -> T {
    match &arm.end {
        ArmEndpoint::Interpolated(stencil) => u.interpolate(stencil),
        ArmEndpoint::Boundary(p) => u.boundary_at(*p),
    }
}

/// Second difference along one opposite arm pair, exact on quadratics even
/// with unequal arm lengths.
fn unequal_second_diff<T: Scalar>(u0: T, v1: T, eta1: T, v2: T, eta2: T) -> T {
    T::two() * (eta2 * v1 + eta1 * v2 - (eta1 + eta2) * u0) / (eta1 * eta2 * (eta1 + eta2))
}

/// Wide-stencil directional second differences `(δ_zz, δ_ww)` of `u` on a
/// prepared geometry.
pub fn wide_second_diffs<T: Scalar>(
    u: &GridFunction<T>,
    geom: &WideStencilGeometry<T>,
) -> (T, T) {
    let (i, j) = geom.origin;
    let u0 = u.node_value(i, j);
    let vals = [
        arm_value(u, &geom.arms[0]),
        arm_value(u, &geom.arms[1]),
        arm_value(u, &geom.arms[2]),
        arm_value(u, &geom.arms[3]),
    ];
    let dzz = unequal_second_diff(u0, vals[0], geom.arms[0].length, vals[1], geom.arms[1].length);
    let dww = unequal_second_diff(u0, vals[2], geom.arms[2].length, vals[3], geom.arms[3].length);
    (dzz, dww)
}

/// Closure evaluating `θ ↦ (δ_zz, δ_ww)` of `u` at node `(i, j)` — the
/// shape the wide-region control search expects. Returns `None` for angles
/// whose stencil degenerates (see [`WideStencilGeometry::degenerate_axis`]);
/// the search treats those rotations as inadmissible.
///
/// Boundary truncation alone does not disqualify a rotation here: near a
/// corner every rotation has two or more cut arms, and a pure-wide search
/// must keep such nodes covered. Searches that do have a narrow fallback
/// can be stricter via [`wide_evaluator_capped`].
pub fn wide_evaluator<T: Scalar>(
    u: &GridFunction<T>,
    i: usize,
    j: usize,
) -> impl Fn(T) -> Option<(T, T)> + '_ {
    wide_evaluator_capped(u, i, j, 4)
}

/// Like [`wide_evaluator`], but additionally treats rotations with more
/// than `max_truncated` boundary-truncated arms as inadmissible.
///
/// A truncated arm trades the `√h` design length for the distance to the
/// wall, so its second-difference weight grows like `1/(ℓ√h)` instead of
/// `1/h`. One short arm per rotation is harmless — the opposite arm of
/// that axis keeps full length and the error stays controlled. Once two
/// arms are cut, the rotated second differences are dominated by
/// third-derivative terms at the wall, which a solution with a boundary
/// singularity does not bound; such rotations can then win the control
/// search with spurious objectives. Capping the cut count removes them
/// while leaving every interior-dominated rotation available.
pub fn wide_evaluator_capped<T: Scalar>(
    u: &GridFunction<T>,
    i: usize,
    j: usize,
    max_truncated: usize,
) -> impl Fn(T) -> Option<(T, T)> + '_ {
    move |theta| {
        let geom = wide_geometry(u.grid(), i, j, theta)
            .expect("wide stencil from an interior node cannot degenerate");
        if geom.degenerate_axis() || geom.truncated_arms() > max_truncated {
            return None;
        }
        Some(wide_second_diffs(u, &geom))
    }
}

/// One assembled row: interior-column coefficients (diagonal included,
/// duplicates allowed — the matrix constructor merges them) and the
/// right-hand side with boundary and source contributions folded in.
#[derive(Debug, Clone)]
pub struct SparseRow<T> {
    pub entries: Vec<(usize, T)>,
    pub rhs: T,
}

/// Assembled policy system `A u = F`.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
}

/// Pushes one stencil coefficient: interior nodes become matrix entries,
/// boundary nodes move `−coeff · g` to the right-hand side.
fn push_coeff<T: Scalar>(
    grid: &Grid<T>,
    boundary: &BoundaryFn<T>,
    row: &mut SparseRow<T>,
    ix: usize,
    iy: usize,
    coeff: T,
) {
    if coeff == T::zero() {
        return;
    }
    if grid.is_interior(ix, iy) {
        row.entries.push((grid.index(ix, iy), coeff));
    } else {
        row.rhs = row.rhs - coeff * (boundary)(grid.node(ix, iy));
    }
}

/// Assembles the monotone operator row of the winning control at interior
/// node `(i, j)`.
///
/// The row realizes `(A u)_i − F_i = L_{a,θ} u (x_i)` exactly (same
/// arithmetic as the objective evaluation), so a policy step that stops at
/// a small residual certifies a small HJB defect.
pub fn assemble_row<T: Scalar>(
    grid: &Grid<T>,
    boundary: &BoundaryFn<T>,
    i: usize,
    j: usize,
    winner: &OptimizerResult<T>,
    f_val: T,
) -> Result<SparseRow<T>, Error> {
    let mut row = SparseRow {
        entries: Vec::with_capacity(17),
        rhs: -source_strength(winner.control.a, f_val),
    };
    let h2 = grid.h() * grid.h();
    match winner.mode {
        StencilMode::SevenPoint1 | StencilMode::SevenPoint2 => {
            let k = coefficients(winner.control);
            let first = winner.mode == StencilMode::SevenPoint1;
            // The winning control guarantees the sign of α₁₂ up to the
            // classification tolerance; clamp the cross weight so roundoff
            // can't flip an off-diagonal sign.
            let cross = if first { k.a12 } else { -k.a12 }.max(T::zero());
            let diag = T::two() * (k.a11 + k.a22 - cross) / h2;
            let ax = -(k.a11 - cross) / h2;
            let ay = -(k.a22 - cross) / h2;
            let ad = -cross / h2;
            row.entries.push((grid.index(i, j), diag));
            push_coeff(grid, boundary, &mut row, i + 1, j, ax);
            push_coeff(grid, boundary, &mut row, i - 1, j, ax);
            push_coeff(grid, boundary, &mut row, i, j + 1, ay);
            push_coeff(grid, boundary, &mut row, i, j - 1, ay);
            if first {
                push_coeff(grid, boundary, &mut row, i + 1, j + 1, ad);
                push_coeff(grid, boundary, &mut row, i - 1, j - 1, ad);
            } else {
                push_coeff(grid, boundary, &mut row, i + 1, j - 1, ad);
                push_coeff(grid, boundary, &mut row, i - 1, j + 1, ad);
            }
        }
        StencilMode::Wide => {
            let geom = wide_geometry(grid, i, j, winner.control.theta)?;
            let a = winner.control.a.max(T::zero()).min(T::one());
            let weights = [a, a, T::one() - a, T::one() - a];
            let mut diag = T::zero();
            for pair in [(0usize, 1usize), (2, 3)] {
                let (eta1, eta2) = (geom.arms[pair.0].length, geom.arms[pair.1].length);
                let weight = weights[pair.0];
                if weight == T::zero() {
                    continue;
                }
                diag = diag + T::two() * weight / (eta1 * eta2);
                for (arm_idx, eta) in [(pair.0, eta1), (pair.1, eta2)] {
                    let coeff = -T::two() * weight / (eta * (eta1 + eta2));
                    match &geom.arms[arm_idx].end {
                        ArmEndpoint::Boundary(p) => {
                            row.rhs = row.rhs - coeff * (boundary)(*p);
                        }
                        ArmEndpoint::Interpolated(stencil) => {
                            for (&(ix, iy), &w) in stencil.nodes.iter().zip(&stencil.weights) {
                                if w != T::zero() {
                                    push_coeff(grid, boundary, &mut row, ix, iy, coeff * w);
                                }
                            }
                        }
                    }
                }
            }
            row.entries.push((grid.index(i, j), diag));
        }
    }
    Ok(row)
}

/// Assembles the full policy system for a frozen control field
/// (`winners[grid.index(i, j)]` is the chosen control at `(i, j)`).
pub fn assemble_system<T: Scalar>(
    grid: &Grid<T>,
    boundary: &BoundaryFn<T>,
    winners: &[OptimizerResult<T>],
    f_samples: &[T],
) -> Result<AssembledSystem<T>, Error> {
    let n = grid.n();
    assert_eq!(winners.len(), n * n, "one winning control per node");
    assert_eq!(f_samples.len(), n * n, "one source sample per node");
    let rows: Result<Vec<SparseRow<T>>, Error> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.ij(idx);
            assemble_row(grid, boundary, i, j, &winners[idx], f_samples[idx])
        })
        .collect();
    let rows = rows?;
    let mut rhs = Vec::with_capacity(n * n);
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        rhs.push(row.rhs);
        entries.push(row.entries);
    }
    Ok(AssembledSystem {
        matrix: CsrMatrix::from_rows(entries),
        rhs,
    })
}

/// Structural monotonicity check: `A` must be an M-matrix in the sense the
/// scheme guarantees — positive diagonal, nonpositive off-diagonal, weak
/// diagonal dominance in every row, and every row connected through the
/// sparsity graph to a strictly dominant row (so `A` is irreducibly
/// dominant enough to be nonsingular).
///
/// Tolerances are relative to each row's diagonal, to absorb the `1/h²`
/// scaling.
pub fn verify_m_matrix<T: Scalar>(a: &CsrMatrix<T>) -> Result<(), Error> {
    let n = a.n();
    let off_tol = T::lit(1e-12);
    let dom_tol = T::lit(1e-10);
    let mut strict = Vec::new();
    let mut reach_from: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut diag = T::zero();
        let mut found_diag = false;
        let mut row_sum = T::zero();
        for (&c, &v) in cols.iter().zip(vals) {
            row_sum = row_sum + v;
            if c == i {
                diag = v;
                found_diag = true;
            }
        }
        if !found_diag || diag <= T::zero() {
            return Err(Error::Monotonicity(format!(
                "row {i} has nonpositive or missing diagonal ({diag})"
            )));
        }
        for (&c, &v) in cols.iter().zip(vals) {
            if c != i {
                if v > off_tol * diag {
                    return Err(Error::Monotonicity(format!(
                        "row {i} has positive off-diagonal entry {v} at column {c}"
                    )));
                }
                if v != T::zero() {
                    reach_from[c].push(i as u32);
                }
            }
        }
        if row_sum < -dom_tol * diag {
            return Err(Error::Monotonicity(format!(
                "row {i} is not weakly diagonally dominant (row sum {row_sum})"
            )));
        }
        if row_sum > dom_tol * diag {
            strict.push(i as u32);
        }
    }
    if strict.is_empty() {
        return Err(Error::Monotonicity(
            "no strictly diagonally dominant row; the system could be singular".into(),
        ));
    }
    // Reverse breadth-first search: which rows reach a strict row through
    // their off-diagonal couplings?
    let mut seen = vec![false; n];
    let mut queue: Vec<u32> = strict;
    for &s in &queue {
        seen[s as usize] = true;
    }
    while let Some(j) = queue.pop() {
        for &i in &reach_from[j as usize] {
            if !seen[i as usize] {
                seen[i as usize] = true;
                queue.push(i);
            }
        }
    }
    if let Some(stranded) = seen.iter().position(|&v| !v) {
        return Err(Error::Monotonicity(format!(
            "row {stranded} cannot reach a strictly dominant row; \
             the system decouples from the boundary"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{optimize_control, ControlPair, RegionTag};
    use crate::grid::Domain;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quadratic(hxx: f64, hxy: f64, hyy: f64) -> impl Fn(Point<f64>) -> f64 + Clone {
        move |p: Point<f64>| {
            0.5 * hxx * p.x * p.x + hxy * p.x * p.y + 0.5 * hyy * p.y * p.y + 0.3 * p.x - 0.7 * p.y
                + 2.0
        }
    }

    fn grid_fn(grid: Grid<f64>, f: impl Fn(Point<f64>) -> f64 + Clone + Send + Sync + 'static) -> GridFunction<f64> {
        let boundary: BoundaryFn<f64> = Arc::new(f.clone());
        GridFunction::sample(grid, boundary, f)
    }

    #[test]
    fn grid_function_reads_across_boundary() {
        let grid = Grid::new(Domain::square(0.0, 1.0).unwrap(), 3).unwrap();
        let u = grid_fn(grid, |p| p.x + 2.0 * p.y);
        assert_relative_eq!(u.node_value(2, 2), 0.5 + 1.0); // interior node
        assert_relative_eq!(u.node_value(0, 3), 2.0 * 0.75); // boundary node
        let stencil = grid.locate(Point { x: 0.3, y: 0.95 }).unwrap();
        assert_relative_eq!(u.interpolate(&stencil), 0.3 + 1.9, max_relative = 1e-13);
    }

    #[test]
    fn second_diffs_exact_on_quadratics() {
        let grid = Grid::new(Domain::square(-1.0, 1.0).unwrap(), 9).unwrap();
        let u = grid_fn(grid, quadratic(3.0, -0.75, 1.0));
        for (i, j) in [(1, 1), (5, 5), (9, 3), (2, 8)] {
            let s = second_diffs(&u, i, j, 0.0);
            assert_relative_eq!(s.dxx, 3.0, max_relative = 1e-10);
            assert_relative_eq!(s.dyy, 1.0, max_relative = 1e-10);
            assert_relative_eq!(s.dxy1, -0.75, max_relative = 1e-9);
            assert_relative_eq!(s.dxy2, -0.75, max_relative = 1e-9);
        }
    }

    #[test]
    fn wide_geometry_interior_and_truncated() {
        let grid: Grid<f64> = Grid::new(Domain::square(0.0, 1.0).unwrap(), 15).unwrap();
        let root_h = grid.h().sqrt();

        // Center node: all four arms reach their full length.
        let geom = wide_geometry(&grid, 8, 8, 0.19).unwrap();
        for arm in &geom.arms {
            assert_relative_eq!(arm.length, root_h, max_relative = 1e-14);
            assert!(matches!(arm.end, ArmEndpoint::Interpolated(_)));
        }

        // Node next to the left wall: the arm pointing into the wall is
        // truncated onto it (√h = 0.25 > h here).
        let geom = wide_geometry(&grid, 1, 8, 0.0).unwrap();
        let into_wall = &geom.arms[1]; // −e_z = (−1, 0) for θ = 0
        assert!(into_wall.length < root_h);
        match &into_wall.end {
            ArmEndpoint::Boundary(p) => assert_eq!(p.x, 0.0),
            other => panic!("expected truncated arm, got {other:?}"),
        }
    }

    #[test]
    fn wide_diffs_exact_on_affine_and_bilinear() {
        let grid = Grid::new(Domain::square(-1.0, 1.0).unwrap(), 12).unwrap();
        // Affine: all second differences vanish identically.
        let u = grid_fn(grid, |p| 1.3 * p.x - 0.4 * p.y + 0.2);
        for (i, j) in [(1, 1), (6, 6), (12, 2)] {
            for theta in [-0.6, 0.0, 0.31] {
                let geom = wide_geometry(&grid, i, j, theta).unwrap();
                let (dzz, dww) = wide_second_diffs(&u, &geom);
                assert!(dzz.abs() < 1e-11 && dww.abs() < 1e-11, "({dzz}, {dww})");
            }
        }
        // u = xy is bilinear (interpolation-exact) and quadratic along
        // every ray, so the wide differences match e·H e = ±sin 2φ
        // exactly, truncated arms included.
        let u = grid_fn(grid, |p| p.x * p.y);
        for (i, j) in [(1, 1), (6, 6), (12, 2), (1, 12)] {
            for theta in [-0.5, 0.17, 0.7] {
                let geom = wide_geometry(&grid, i, j, theta).unwrap();
                let (dzz, dww) = wide_second_diffs(&u, &geom);
                let phi = -theta;
                assert_relative_eq!(dzz, (2.0 * phi).sin(), epsilon = 1e-10);
                assert_relative_eq!(dww, -(2.0 * phi).sin(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn wide_diffs_first_order_on_general_quadratics() {
        // General quadratics are not bilinear, so interpolation costs
        // O(h²)/η² = O(h); halving h must roughly halve the error.
        let domain = Domain::square(-1.0, 1.0).unwrap();
        let errs: Vec<f64> = [15usize, 31]
            .iter()
            .map(|&n| {
                let grid = Grid::new(domain, n).unwrap();
                let u = grid_fn(grid, quadratic(2.0, 0.6, 1.2));
                let mid = (n + 1) / 2;
                let geom = wide_geometry(&grid, mid, mid, 0.37).unwrap();
                let (dzz, _) = wide_second_diffs(&u, &geom);
                let phi: f64 = -0.37;
                let (s, c) = phi.sin_cos();
                let exact = c * c * 2.0 + 2.0 * c * s * 0.6 + s * s * 1.2;
                (dzz - exact).abs()
            })
            .collect();
        assert!(
            errs[1] < 0.75 * errs[0],
            "wide stencil error did not shrink: {errs:?}"
        );
    }

    /// The invariant the solver rests on: applying an assembled row to the
    /// current iterate and subtracting the right-hand side reproduces the
    /// optimizer's objective value at that node.
    #[test]
    fn assembled_rows_reproduce_objectives() {
        let grid = Grid::new(Domain::square(-1.0, 1.0).unwrap(), 10).unwrap();
        let boundary: BoundaryFn<f64> = Arc::new(|p| 0.5 * (p.x * p.x + p.y * p.y));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..grid.num_interior())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let u = GridFunction::new(grid, values, boundary.clone());

        for i in 1..=grid.n() {
            for j in 1..=grid.n() {
                let f_val = rng.gen_range(0.0..4.0);
                let s = second_diffs(&u, i, j, f_val);
                let winner = optimize_control(&s, wide_evaluator(&u, i, j), 24);
                let row = assemble_row(&grid, &boundary, i, j, &winner, f_val).unwrap();
                let mut lhs = 0.0;
                for &(col, coeff) in &row.entries {
                    lhs += coeff * u.values()[col];
                }
                let resid = lhs - row.rhs;
                assert_relative_eq!(resid, winner.objective, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn assembled_system_is_m_matrix() {
        let grid = Grid::new(Domain::square(-1.0, 1.0).unwrap(), 8).unwrap();
        let boundary: BoundaryFn<f64> = Arc::new(|p| 0.5 * (p.x * p.x + p.y * p.y));
        let u = GridFunction::sample(grid, boundary.clone(), |p| {
            0.5 * (p.x * p.x + p.y * p.y)
        });
        let n = grid.n();
        let f_samples = vec![1.0; n * n];
        let mut winners = Vec::with_capacity(n * n);
        for idx in 0..n * n {
            let (i, j) = grid.ij(idx);
            let s = second_diffs(&u, i, j, f_samples[idx]);
            winners.push(optimize_control(&s, wide_evaluator(&u, i, j), 16));
        }
        let sys = assemble_system(&grid, &boundary, &winners, &f_samples).unwrap();
        verify_m_matrix(&sys.matrix).unwrap();
        assert_eq!(sys.rhs.len(), n * n);
    }

    #[test]
    fn forced_wide_rows_stay_monotone() {
        // Wide rows near the boundary exercise truncation and interpolated
        // corners; they must still assemble to M-matrix rows.
        let grid = Grid::new(Domain::square(0.0, 1.0).unwrap(), 8).unwrap();
        let boundary: BoundaryFn<f64> = Arc::new(|_| 0.0);
        let n = grid.n();
        let f_samples = vec![2.0; n * n];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let winners: Vec<_> = (0..n * n)
            .map(|_| OptimizerResult {
                control: ControlPair::new(rng.gen_range(0.0..=1.0), rng.gen_range(-0.78..0.78)),
                objective: 0.0,
                region: RegionTag::G3,
                mode: StencilMode::Wide,
            })
            .collect();
        let sys = assemble_system(&grid, &boundary, &winners, &f_samples).unwrap();
        verify_m_matrix(&sys.matrix).unwrap();
    }

    #[test]
    fn m_matrix_check_rejects_defects() {
        // Positive off-diagonal.
        let bad = CsrMatrix::from_rows(vec![vec![(0, 2.0), (1, 0.5)], vec![(1, 2.0)]]);
        assert!(matches!(
            verify_m_matrix(&bad),
            Err(Error::Monotonicity(_))
        ));
        // Weak dominance everywhere but no strict row.
        let singularish = CsrMatrix::from_rows(vec![
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -1.0), (1, 1.0)],
        ]);
        assert!(matches!(
            verify_m_matrix(&singularish),
            Err(Error::Monotonicity(_))
        ));
        // A zero-row-sum block that never couples to the dominant row.
        let stranded = CsrMatrix::from_rows(vec![
            vec![(0, 2.0)],
            vec![(1, 1.0), (2, -1.0)],
            vec![(1, -1.0), (2, 1.0)],
        ]);
        assert!(matches!(
            verify_m_matrix(&stranded),
            Err(Error::Monotonicity(_))
        ));
        // Healthy Laplacian-like rows pass.
        let good = CsrMatrix::from_rows(vec![
            vec![(0, 2.0), (1, -1.0)],
            vec![(0, -1.0), (1, 2.0), (2, -1.0)],
            vec![(1, -1.0), (2, 2.0)],
        ]);
        verify_m_matrix(&good).unwrap();
    }
}
