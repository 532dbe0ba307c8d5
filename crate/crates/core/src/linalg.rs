//! Sparse linear algebra: CSR storage, ILU(0) preconditioning, and
//! right-preconditioned restarted GMRES.
//!
//! The policy-iteration linear systems are sparse nonsymmetric M-matrices
//! (up to 17 nonzeros per row once wide stencils appear), which is exactly
//! the setting where an incomplete LU factorization on the original
//! sparsity pattern combines well with a Krylov solver:
//!
//! * for a weakly diagonally dominant M-matrix the ILU(0) factorization
//!   exists (it is a regular splitting), so no pivoting is needed;
//! * right preconditioning keeps the GMRES residual equal to the true
//!   residual of the original system, so the convergence test is honest.
//!
//! The restart loop recomputes the true residual `b − Ax` at every cycle,
//! which doubles as iterative refinement: the final answer is accepted
//! only if the recomputed relative residual meets the caller's tolerance.

use crate::error::Error;
use crate::scalar::Scalar;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a square matrix from per-row `(column, value)` lists.
    /// Entries are sorted and duplicate columns merged additively; exact
    /// zeros are kept (the ILU(0) pattern may rely on them).
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < n, "column {c} out of bounds for dimension {n}");
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    let last = values.last_mut().unwrap();
                    *last = *last + v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc = acc + v * x[c];
            }
            y[i] = acc;
        }
    }

    /// `r = b − A x`.
    pub fn residual(&self, x: &[T], b: &[T], r: &mut [T]) {
        self.matvec(x, r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }
}

/// Zero-fill incomplete LU factorization stored on the pattern of `A`
/// (unit lower-triangular `L` and upper-triangular `U` share the array).
#[derive(Debug, Clone)]
pub struct Ilu0<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    diag_idx: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    /// Factorizes `A` in the IKJ ordering. Vanishing pivots (impossible
    /// for the weakly diagonally dominant M-matrices of the monotone
    /// scheme, possible for Newton Jacobians of the nonmonotone one) are
    /// nudged to a scaled floor rather than aborting, since the
    /// factorization is only a preconditioner.
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, Error> {
        let n = a.n;
        let row_ptr = a.row_ptr.clone();
        let col_idx = a.col_idx.clone();
        let mut values = a.values.clone();
        let mut diag_idx = vec![usize::MAX; n];
        for i in 0..n {
            for idx in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[idx] == i {
                    diag_idx[i] = idx;
                }
            }
            if diag_idx[i] == usize::MAX {
                return Err(Error::LinearSolve(format!(
                    "row {i} has no diagonal entry; ILU(0) needs a full diagonal"
                )));
            }
        }

        // Scatter buffer: column -> value index within the current row.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for idx in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[idx]] = idx;
            }
            let mut idx = row_ptr[i];
            while idx < row_ptr[i + 1] && col_idx[idx] < i {
                let k = col_idx[idx];
                let pivot = Self::guarded_pivot(values[diag_idx[k]], &values, &row_ptr, k);
                let lik = values[idx] / pivot;
                values[idx] = lik;
                for kidx in diag_idx[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[kidx];
                    let target = pos[j];
                    if target != usize::MAX && target > idx {
                        values[target] = values[target] - lik * values[kidx];
                    }
                }
                idx += 1;
            }
            for idx in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[idx]] = usize::MAX;
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            diag_idx,
        })
    }

    /// Returns the pivot, pushed away from zero when elimination has
    /// cancelled it.
    fn guarded_pivot(pivot: T, values: &[T], row_ptr: &[usize], k: usize) -> T {
        if pivot != T::zero() {
            return pivot;
        }
        let row_scale = values[row_ptr[k]..row_ptr[k + 1]]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::one());
        row_scale * T::lit(1e-14)
    }

    /// Applies the preconditioner: solves `L U z = r`.
    pub fn apply(&self, r: &[T], z: &mut [T]) {
        debug_assert_eq!(r.len(), self.n);
        // Forward substitution with unit diagonal L.
        for i in 0..self.n {
            let mut acc = r[i];
            for idx in self.row_ptr[i]..self.diag_idx[i] {
                acc = acc - self.values[idx] * z[self.col_idx[idx]];
            }
            z[i] = acc;
        }
        // Backward substitution with U.
        for i in (0..self.n).rev() {
            let mut acc = z[i];
            for idx in self.diag_idx[i] + 1..self.row_ptr[i + 1] {
                acc = acc - self.values[idx] * z[self.col_idx[idx]];
            }
            let d = self.values[self.diag_idx[i]];
            let d = if d == T::zero() { T::lit(1e-300) } else { d };
            z[i] = acc / d;
        }
    }
}

/// Tuning knobs for [`gmres_solve`].
#[derive(Debug, Clone)]
pub struct GmresOptions<T> {
    /// Krylov dimension per restart cycle.
    pub restart: usize,
    /// Cap on total Arnoldi iterations across cycles.
    pub max_iters: usize,
    /// Convergence target, relative to `‖b‖₂`.
    pub rel_tol: T,
    /// Acceptance threshold for the recomputed true relative residual; a
    /// result worse than this is an error, not an answer.
    pub accept_rel: T,
}

impl<T: Scalar> Default for GmresOptions<T> {
    fn default() -> Self {
        Self {
            restart: 80,
            max_iters: 20_000,
            rel_tol: T::lit(1e-12),
            accept_rel: T::lit(1e-10),
        }
    }
}

/// Converged solution of a linear system together with solve statistics.
#[derive(Debug, Clone)]
pub struct GmresSolution<T> {
    pub x: Vec<T>,
    /// True relative residual `‖b − Ax‖₂ / ‖b‖₂` of the returned `x`.
    pub rel_residual: T,
    /// Total Arnoldi steps performed.
    pub iterations: usize,
}

fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Solves `A x = b` by restarted GMRES with right ILU(0) preconditioning
/// and modified Gram-Schmidt orthogonalization.
///
/// `x0` seeds the iteration (pass the previous policy iterate for a warm
/// start). The result is accepted only if the true relative residual,
/// recomputed from scratch, is at most `opts.accept_rel`.
pub fn gmres_solve<T: Scalar>(
    a: &CsrMatrix<T>,
    precond: &Ilu0<T>,
    b: &[T],
    x0: Option<&[T]>,
    opts: &GmresOptions<T>,
) -> Result<GmresSolution<T>, Error> {
    let n = a.n();
    assert_eq!(b.len(), n, "rhs length mismatch");
    let b_norm = norm2(b);
    if b_norm == T::zero() {
        return Ok(GmresSolution {
            x: vec![T::zero(); n],
            rel_residual: T::zero(),
            iterations: 0,
        });
    }
    let target = opts.rel_tol * b_norm;
    let mut x = match x0 {
        Some(seed) => {
            assert_eq!(seed.len(), n, "seed length mismatch");
            seed.to_vec()
        }
        None => vec![T::zero(); n],
    };

    let m = opts.restart.max(1);
    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut iterations = 0usize;

    'outer: loop {
        a.residual(&x, b, &mut r);
        let beta = norm2(&r);
        if beta <= target || iterations >= opts.max_iters {
            break;
        }

        // Arnoldi cycle on the right-preconditioned operator A·M⁻¹.
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&v| v / beta).collect());
        let mut hess: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut givens: Vec<(T, T)> = Vec::with_capacity(m);
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut cycle_dim = 0usize;

        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            a.matvec(&z, &mut w);
            let mut col = vec![T::zero(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                for (wk, &vk) in w.iter_mut().zip(v) {
                    *wk = *wk - hij * vk;
                }
            }
            let h_next = norm2(&w);
            col[j + 1] = h_next;

            for (i, &(c, s)) in givens.iter().enumerate() {
                let t0 = c * col[i] + s * col[i + 1];
                let t1 = -s * col[i] + c * col[i + 1];
                col[i] = t0;
                col[i + 1] = t1;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == T::zero() {
                (T::one(), T::zero())
            } else {
                (col[j] / denom, col[j + 1] / denom)
            };
            col[j] = denom;
            col[j + 1] = T::zero();
            g[j + 1] = -s * g[j];
            g[j] = c * g[j];
            givens.push((c, s));
            hess.push(col);

            iterations += 1;
            cycle_dim = j + 1;
            let breakdown = h_next == T::zero();
            let converged = g[j + 1].abs() <= target;
            if breakdown || converged || iterations >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|&v| v / h_next).collect());
        }

        // Back-substitute H y = g on the rotated system.
        let mut y = vec![T::zero(); cycle_dim];
        for i in (0..cycle_dim).rev() {
            let mut acc = g[i];
            for (k, yk) in y.iter().enumerate().take(cycle_dim).skip(i + 1) {
                acc = acc - hess[k][i] * *yk;
            }
            let d = hess[i][i];
            if d == T::zero() {
                break 'outer; // singular projected system; accept current x
            }
            y[i] = acc / d;
        }
        // x += M⁻¹ (V y): combine in vector space first, precondition once.
        let mut update = vec![T::zero(); n];
        for (k, yk) in y.iter().enumerate() {
            for (u, &vk) in update.iter_mut().zip(&basis[k]) {
                *u = *u + *yk * vk;
            }
        }
        precond.apply(&update, &mut z);
        for (xi, &zi) in x.iter_mut().zip(&z) {
            *xi = *xi + zi;
        }
    }

    a.residual(&x, b, &mut r);
    let rel_residual = norm2(&r) / b_norm;
    if rel_residual <= opts.accept_rel {
        Ok(GmresSolution {
            x,
            rel_residual,
            iterations,
        })
    } else {
        Err(Error::LinearSolve(format!(
            "GMRES stalled at relative residual {rel_residual:.3e} \
             (acceptance threshold {:.3e}, {iterations} iterations)",
            opts.accept_rel
        )))
    }
}
