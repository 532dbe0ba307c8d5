//! Uniform square grid on a rectangular domain.
//!
//! The grid has `n × n` interior points and one layer of boundary nodes on
//! each side, with spacing `h = (x_max - x_min) / (n + 1)`. Global node
//! indices run `0 ..= n + 1` per axis; index `0` and `n + 1` are boundary
//! nodes, `1 ..= n` are interior. Interior unknowns are stored
//! lexicographically: `index(i, j) = n * (i - 1) + (j - 1)` with `i` the
//! x-index and `j` the y-index.
//!
//! Besides plain indexing, the grid answers the two geometric queries the
//! wide (semi-Lagrangian) stencil needs:
//!
//! * [`Grid::locate`] — the bilinear interpolation stencil of an arbitrary
//!   point of the closed domain, and
//! * [`Grid::ray_exit`] — where a ray from an interior point first meets the
//!   boundary, so stencil arms can be truncated onto the boundary exactly.

use crate::error::Error;
use crate::scalar::Scalar;

/// Absolute snapping tolerance (domain units): points this close to the
/// boundary are treated as lying on it.
pub const BOUNDARY_SNAP: f64 = 1e-12;

/// Snapping tolerance for barycentric cell coordinates: offsets below this
/// fraction of a cell are collapsed so that nodal coincidence produces exact
/// 0/1 interpolation weights.
const NODE_SNAP: f64 = 1e-9;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangular domain `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy)]
pub struct Domain<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Scalar> Domain<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Result<Self, Error> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidDomain(format!(
                "bounds must be finite with x_min < x_max and y_min < y_max, got \
                 [{}, {}] × [{}, {}]",
                x_min, x_max, y_min, y_max
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Square domain `[lo, hi]²`.
    pub fn square(lo: T, hi: T) -> Result<Self, Error> {
        Self::new(lo, hi, lo, hi)
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    /// Largest distance from the origin to a point of the closed domain
    /// (attained at a corner). Appears in the discrete stability bound.
    pub fn max_radius(&self) -> T {
        let xs = [self.x_min, self.x_max];
        let ys = [self.y_min, self.y_max];
        let mut r2 = T::zero();
        for &x in &xs {
            for &y in &ys {
                r2 = r2.max(x * x + y * y);
            }
        }
        r2.sqrt()
    }
}

/// Uniform grid with `n × n` interior nodes and square cells of side `h`.
#[derive(Debug, Clone, Copy)]
pub struct Grid<T> {
    domain: Domain<T>,
    n: usize,
    h: T,
}

/// Bilinear interpolation stencil: the four corner nodes of the cell
/// containing a point, with non-negative weights summing to one.
///
/// Corner nodes are global `(ix, iy)` node indices and may be boundary
/// nodes. When the point coincides with a node (up to snapping), one weight
/// is exactly `1` and the others exactly `0`.
#[derive(Debug, Clone, Copy)]
pub struct InterpolationStencil<T> {
    pub nodes: [(usize, usize); 4],
    pub weights: [T; 4],
}

/// Result of tracing a ray against the domain boundary.
#[derive(Debug, Clone, Copy)]
pub struct RayExit<T> {
    /// Distance travelled: the full requested length, or the distance to the
    /// boundary if the ray left the domain first.
    pub length: T,
    /// `origin + length · dir`, with exit coordinates snapped exactly onto
    /// the boundary when truncated.
    pub endpoint: Point<T>,
    /// True when the boundary cut the ray short.
    pub truncated: bool,
}

impl<T: Scalar> Grid<T> {
    /// Builds an `n × n` interior grid over `domain`.
    ///
    /// Fails if `n < 2` or if the domain would not produce square cells
    /// (the discretization assumes a single spacing `h` for both axes).
    pub fn new(domain: Domain<T>, n: usize) -> Result<Self, Error> {
        if n < 2 {
            return Err(Error::GridTooSmall(n));
        }
        let np1 = T::from_usize(n + 1).expect("n + 1 must convert to Scalar");
        let hx = domain.width() / np1;
        let hy = domain.height() / np1;
        let tol = T::lit(1e-12) * hx.abs().max(hy.abs());
        if (hx - hy).abs() > tol {
            return Err(Error::NonSquareCells {
                hx: hx.as_f64(),
                hy: hy.as_f64(),
            });
        }
        Ok(Self { domain, n, h: hx })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    /// Number of interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell side length.
    pub fn h(&self) -> T {
        self.h
    }

    /// Total number of interior unknowns, `n²`.
    pub fn num_interior(&self) -> usize {
        self.n * self.n
    }

    /// Lexicographic index of interior node `(i, j)`, both in `1 ..= n`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        self.n * (i - 1) + (j - 1)
    }

    /// Inverse of [`Grid::index`].
    #[inline]
    pub fn ij(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.num_interior());
        (index / self.n + 1, index % self.n + 1)
    }

    /// x-coordinate of global node index `ix ∈ 0 ..= n + 1`.
    #[inline]
    pub fn x_of(&self, ix: usize) -> T {
        self.domain.x_min + T::from_usize(ix).expect("node index converts") * self.h
    }

    /// y-coordinate of global node index `iy ∈ 0 ..= n + 1`.
    #[inline]
    pub fn y_of(&self, iy: usize) -> T {
        self.domain.y_min + T::from_usize(iy).expect("node index converts") * self.h
    }

    /// Coordinates of global node `(ix, iy)`.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Point<T> {
        Point::new(self.x_of(ix), self.y_of(iy))
    }

    /// Whether global node `(ix, iy)` is interior.
    #[inline]
    pub fn is_interior(&self, ix: usize, iy: usize) -> bool {
        (1..=self.n).contains(&ix) && (1..=self.n).contains(&iy)
    }

    /// Snaps a point onto the boundary when within [`BOUNDARY_SNAP`] of it
    /// and verifies it lies in the closed domain.
    fn snap(&self, p: Point<T>) -> Result<Point<T>, Error> {
        let snap = T::lit(BOUNDARY_SNAP);
        let mut q = p;
        if (q.x - self.domain.x_min).abs() <= snap {
            q.x = self.domain.x_min;
        }
        if (q.x - self.domain.x_max).abs() <= snap {
            q.x = self.domain.x_max;
        }
        if (q.y - self.domain.y_min).abs() <= snap {
            q.y = self.domain.y_min;
        }
        if (q.y - self.domain.y_max).abs() <= snap {
            q.y = self.domain.y_max;
        }
        let inside = q.x >= self.domain.x_min
            && q.x <= self.domain.x_max
            && q.y >= self.domain.y_min
            && q.y <= self.domain.y_max;
        if !inside {
            return Err(Error::OutOfDomain {
                x: p.x.as_f64(),
                y: p.y.as_f64(),
            });
        }
        Ok(q)
    }

    /// Bilinear interpolation stencil of a point of the closed domain.
    ///
    /// Points within [`BOUNDARY_SNAP`] of the boundary are snapped onto it
    /// first; anything farther outside is rejected.
    pub fn locate(&self, p: Point<T>) -> Result<InterpolationStencil<T>, Error> {
        let p = self.snap(p)?;
        let (ix, tx) = self.cell_coord(p.x, self.domain.x_min);
        let (iy, ty) = self.cell_coord(p.y, self.domain.y_min);
        let one = T::one();
        Ok(InterpolationStencil {
            nodes: [(ix, iy), (ix + 1, iy), (ix, iy + 1), (ix + 1, iy + 1)],
            weights: [
                (one - tx) * (one - ty),
                tx * (one - ty),
                (one - tx) * ty,
                tx * ty,
            ],
        })
    }

    /// Splits a coordinate into (cell index, barycentric offset in `[0, 1]`),
    /// snapping offsets within [`NODE_SNAP`] of a node to exactly 0 or 1.
    fn cell_coord(&self, v: T, v_min: T) -> (usize, T) {
        let np1 = self.n + 1;
        let f = ((v - v_min) / self.h)
            .max(T::zero())
            .min(T::from_usize(np1).expect("node count converts"));
        let mut cell = f.floor().to_usize().unwrap_or(0).min(self.n);
        let mut t = f - T::from_usize(cell).expect("cell index converts");
        let snap = T::lit(NODE_SNAP);
        if t <= snap {
            t = T::zero();
        } else if t >= T::one() - snap {
            // Attribute the point to the far node of this cell rather than
            // switching cells, so boundary cells stay in range.
            t = T::one();
        }
        // Keep the invariant cell ∈ 0..=n even after floating adjustments.
        if cell > self.n {
            cell = self.n;
            t = T::one();
        }
        (cell, t)
    }

    /// Traces the ray `origin + t · dir`, `t ∈ [0, len]`, against the
    /// boundary.
    ///
    /// `dir` must be a unit vector. If the segment stays inside the closed
    /// domain the untruncated endpoint is returned; otherwise the exit point,
    /// with the crossing coordinate set exactly onto the boundary. A ray that
    /// exits immediately (origin on the boundary, outward direction) is an
    /// error — this cannot happen for rays cast from interior grid points.
    pub fn ray_exit(&self, origin: Point<T>, dir: Point<T>, len: T) -> Result<RayExit<T>, Error> {
        debug_assert!(
            ((dir.x * dir.x + dir.y * dir.y).sqrt() - T::one()).abs() < T::lit(1e-9),
            "ray_exit expects a unit direction"
        );
        let o = self.snap(origin)?;
        let inf = T::infinity();
        let tx = if dir.x > T::zero() {
            (self.domain.x_max - o.x) / dir.x
        } else if dir.x < T::zero() {
            (self.domain.x_min - o.x) / dir.x
        } else {
            inf
        };
        let ty = if dir.y > T::zero() {
            (self.domain.y_max - o.y) / dir.y
        } else if dir.y < T::zero() {
            (self.domain.y_min - o.y) / dir.y
        } else {
            inf
        };
        let t_exit = tx.min(ty);

        if len <= t_exit {
            let p = Point::new(o.x + len * dir.x, o.y + len * dir.y);
            return Ok(RayExit {
                length: len,
                endpoint: self.clamp_into_domain(p),
                truncated: false,
            });
        }
        if t_exit <= T::lit(BOUNDARY_SNAP) {
            return Err(Error::DegenerateRay);
        }
        let mut p = Point::new(o.x + t_exit * dir.x, o.y + t_exit * dir.y);
        // Land exactly on the crossed boundary coordinate(s).
        if tx <= ty {
            p.x = if dir.x > T::zero() {
                self.domain.x_max
            } else {
                self.domain.x_min
            };
        }
        if ty <= tx {
            p.y = if dir.y > T::zero() {
                self.domain.y_max
            } else {
                self.domain.y_min
            };
        }
        Ok(RayExit {
            length: t_exit,
            endpoint: self.clamp_into_domain(p),
            truncated: true,
        })
    }

    fn clamp_into_domain(&self, p: Point<T>) -> Point<T> {
        Point::new(
            p.x.max(self.domain.x_min).min(self.domain.x_max),
            p.y.max(self.domain.y_min).min(self.domain.y_max),
        )
    }
}
