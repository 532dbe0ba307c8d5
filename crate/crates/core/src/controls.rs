//! HJB control optimization over the six monotonicity regions.
//!
//! The Monge-Ampère equation `det D²u = f` is rewritten as the
//! Hamilton-Jacobi-Bellman equation
//!
//! ```text
//! max_{(a,θ)} L_{a,θ} u = 0,
//! L_{a,θ} u = −α₁₁ u_xx − 2 α₁₂ u_xy − α₂₂ u_yy + 2 √(a (1−a) f),
//! ```
//!
//! where the control pair `(a, θ) ∈ [0,1] × [−π/4, π/4)` parametrizes every
//! symmetric positive semidefinite matrix with unit trace:
//!
//! ```text
//! α₁₁ = ½ (1 − (1−2a) cos 2θ),   α₂₂ = ½ (1 + (1−2a) cos 2θ),
//! α₁₂ = ½ (1−2a) sin 2θ.
//! ```
//!
//! Discretely, `u_xy` must be approximated by one of two skewed 7-point
//! cross differences, and the resulting row is monotone (an M-matrix row)
//! only under sign conditions on the coefficients:
//!
//! * condition 1: `α₁₁ ≥ |α₁₂|`, `α₂₂ ≥ |α₁₂|`, `α₁₂ ≥ 0` — region `Γ¹`;
//! * condition 2: the mirrored case `α₁₂ ≤ 0` — region `Γ²`;
//! * otherwise only the wide (semi-Lagrangian) stencil is monotone —
//!   region `Γ³`.
//!
//! The pointwise maximization therefore splits into six closed-form or
//! one-dimensional sub-problems: the interiors `Γ¹`, `Γ²`, `Γ³`, the line
//! `θ = 0` (`∂Γ⁰`), and the two boundary curves `∂Γ¹³`, `∂Γ²³` where the
//! monotonicity conditions hold with equality. Everything except the `Γ³`
//! line search is O(1) per grid point.

use crate::scalar::Scalar;

/// Tolerance for region membership and for the winner tie-break.
const CLASSIFY_TOL: f64 = 1e-12;

/// An admissible control: `a ∈ [0, 1]`, `θ ∈ [−π/4, π/4)`.
///
/// The parametrization satisfies `L_{a,θ} = L_{1−a, θ±π/2}`, which is how
/// angles outside the reduced range are folded back into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPair<T> {
    pub a: T,
    pub theta: T,
}

impl<T: Scalar> ControlPair<T> {
    pub fn new(a: T, theta: T) -> Self {
        Self { a, theta }
    }
}

/// Coefficients of the diffusion matrix `A(a, θ)`.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients<T> {
    pub a11: T,
    pub a12: T,
    pub a22: T,
}

/// The six monotonicity regions of control space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    /// Interior of `Γ¹` (condition 1 strictly, `α₁₂ > 0`).
    G1,
    /// Interior of `Γ²` (condition 2 strictly, `α₁₂ < 0`).
    G2,
    /// `Γ³`: neither condition holds; wide stencil required.
    G3,
    /// The line `θ = 0` separating `Γ¹` from `Γ²`.
    B0,
    /// The curve `min(α₁₁, α₂₂) = α₁₂ > 0` separating `Γ¹` from `Γ³`.
    B13,
    /// The curve `min(α₁₁, α₂₂) = −α₁₂ > 0` separating `Γ²` from `Γ³`.
    B23,
}

impl RegionTag {
    /// Tie-break priority (lower wins) when objectives are equal within
    /// [`CLASSIFY_TOL`]: `B0 > G1 > G2 > B13 > B23 > G3`.
    fn rank(self) -> u8 {
        match self {
            RegionTag::B0 => 0,
            RegionTag::G1 => 1,
            RegionTag::G2 => 2,
            RegionTag::B13 => 3,
            RegionTag::B23 => 4,
            RegionTag::G3 => 5,
        }
    }
}

/// Which monotone discretization the winning control dictates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilMode {
    /// 7-point stencil with the first cross difference (`α₁₂ ≥ 0`).
    SevenPoint1,
    /// 7-point stencil with the second cross difference (`α₁₂ ≤ 0`).
    SevenPoint2,
    /// Semi-Lagrangian wide stencil of length `√h`.
    Wide,
}

impl RegionTag {
    /// The discretization a control from this region must use.
    pub fn mode(self) -> StencilMode {
        match self {
            RegionTag::G1 | RegionTag::B0 | RegionTag::B13 => StencilMode::SevenPoint1,
            RegionTag::G2 | RegionTag::B23 => StencilMode::SevenPoint2,
            RegionTag::G3 => StencilMode::Wide,
        }
    }
}

/// Frozen second-difference samples of the current iterate at one grid
/// point, together with the source sample `f ≥ 0` there.
///
/// `dxy1` is the cross difference skewed toward the main diagonal (exact
/// for `α₁₂ ≥ 0` rows), `dxy2` the one skewed toward the anti-diagonal.
#[derive(Debug, Clone, Copy)]
pub struct SecondDerivativeSamples<T> {
    pub dxx: T,
    pub dyy: T,
    pub dxy1: T,
    pub dxy2: T,
    pub f_val: T,
}

/// Outcome of a regional (or the global) control optimization.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerResult<T> {
    pub control: ControlPair<T>,
    /// Value of the discrete HJB objective at `control`.
    pub objective: T,
    pub region: RegionTag,
    pub mode: StencilMode,
}

/// Diffusion coefficients of control `(a, θ)`.
#[inline]
pub fn coefficients<T: Scalar>(c: ControlPair<T>) -> Coefficients<T> {
    let t = T::one() - T::two() * c.a;
    let (sin2, cos2) = (T::two() * c.theta).sin_cos();
    Coefficients {
        a11: T::half() * (T::one() - t * cos2),
        a12: T::half() * t * sin2,
        a22: T::half() * (T::one() + t * cos2),
    }
}

/// Region of control space a control pair belongs to.
///
/// Membership in the boundary curves is decided within a `1e-12` tolerance
/// so that controls constructed to lie on a curve classify onto it despite
/// roundoff.
pub fn classify<T: Scalar>(c: ControlPair<T>) -> RegionTag {
    if c.theta == T::zero() {
        return RegionTag::B0;
    }
    let k = coefficients(c);
    let tol = T::lit(CLASSIFY_TOL);
    let margin = k.a11.min(k.a22) - k.a12.abs();
    if margin.abs() <= tol {
        if k.a12 > T::zero() {
            RegionTag::B13
        } else {
            RegionTag::B23
        }
    } else if margin < T::zero() {
        RegionTag::G3
    } else if k.a12 >= T::zero() {
        RegionTag::G1
    } else {
        RegionTag::G2
    }
}

/// Source term `2 √(a (1−a) f)` with `a` clamped into `[0, 1]` against
/// roundoff. Row assembly must use the same expression so that residual
/// evaluation and assembled right-hand sides agree to roundoff.
#[inline]
pub fn source_strength<T: Scalar>(a: T, f: T) -> T {
    let a = a.max(T::zero()).min(T::one());
    T::two() * (a * (T::one() - a) * f.max(T::zero())).sqrt()
}

/// 7-point objective `−α₁₁ dxx − 2 α₁₂ dcross − α₂₂ dyy + 2√(a(1−a)f)`.
#[inline]
fn seven_point_objective<T: Scalar>(c: ControlPair<T>, dcross: T, s: &SecondDerivativeSamples<T>) -> T {
    let k = coefficients(c);
    -k.a11 * s.dxx - T::two() * k.a12 * dcross - k.a22 * s.dyy + source_strength(c.a, s.f_val)
}

/// Wide-stencil objective `−a dzz − (1−a) dww + 2√(a(1−a)f)`.
#[inline]
fn wide_objective<T: Scalar>(a: T, dzz: T, dww: T, f: T) -> T {
    -a * dzz - (T::one() - a) * dww + source_strength(a, f)
}

/// Optimal `a` for fixed difference gap `d = d₁ − d₂` when the objective is
/// `−a d₁ − (1−a) d₂ + 2√(a(1−a)f)`: the stationary point
/// `a = ½ (1 − d / √(4f + d²))`, with the degenerate `0/0` case yielding
/// `½`.
#[inline]
fn stationary_a<T: Scalar>(gap: T, f: T) -> T {
    let denom = (T::lit(4.0) * f.max(T::zero()) + gap * gap).sqrt();
    if denom == T::zero() {
        T::half()
    } else {
        (T::half() * (T::one() - gap / denom)).max(T::zero()).min(T::one())
    }
}

/// Maximizes over the line `∂Γ⁰ = {θ = 0}`, where the objective is
/// `−a dxx − (1−a) dyy + 2√(a(1−a)f)` and the optimal `a` is closed-form.
pub fn optimize_b0<T: Scalar>(s: &SecondDerivativeSamples<T>) -> OptimizerResult<T> {
    let a = stationary_a(s.dxx - s.dyy, s.f_val);
    let control = ControlPair::new(a, T::zero());
    OptimizerResult {
        control,
        objective: seven_point_objective(control, s.dxy1, s),
        region: RegionTag::B0,
        mode: StencilMode::SevenPoint1,
    }
}

/// Shared interior stationary point of the 7-point objective for a given
/// cross difference: `θ* = ½ atan2(2 dcross, dyy − dxx)` folded into
/// `[−π/4, π/4)` (the fold swaps `a ↦ 1 − a`, which happens implicitly by
/// evaluating `λ` at the folded angle), then
/// `λ = (dxx − dyy) cos 2θ* − 2 dcross sin 2θ*` and
/// `a* = ½ (1 − λ/√(4f + λ²))`.
fn seven_point_stationary<T: Scalar>(dcross: T, s: &SecondDerivativeSamples<T>) -> ControlPair<T> {
    let num = T::two() * dcross;
    let den = s.dyy - s.dxx;
    let mut theta = if num == T::zero() && den == T::zero() {
        T::zero() // degenerate: every θ is stationary; pick the axis case
    } else {
        T::half() * num.atan2(den)
    };
    if theta >= T::FRAC_PI_4() {
        theta = theta - T::FRAC_PI_2();
    } else if theta < -T::FRAC_PI_4() {
        theta = theta + T::FRAC_PI_2();
    }
    let (sin2, cos2) = (T::two() * theta).sin_cos();
    let lambda = (s.dxx - s.dyy) * cos2 - T::two() * dcross * sin2;
    ControlPair::new(stationary_a(lambda, s.f_val), theta)
}

/// Does condition 1 (resp. 2 for `positive_cross = false`) hold at `c`,
/// within tolerance? Used to test whether an interior stationary point
/// actually landed in its region's closure.
fn condition_holds<T: Scalar>(c: ControlPair<T>, positive_cross: bool) -> bool {
    let k = coefficients(c);
    let tol = T::lit(CLASSIFY_TOL);
    let sign_ok = if positive_cross {
        k.a12 >= -tol
    } else {
        k.a12 <= tol
    };
    sign_ok && k.a11.min(k.a22) >= k.a12.abs() - tol
}

/// Maximizes over the interior of `Γ¹`.
///
/// Returns `None` when the unconstrained stationary point of the
/// `dxy1`-objective falls outside the closure of `Γ¹`; the region's
/// maximum then lies on a boundary curve and is produced by the boundary
/// optimizers instead.
pub fn optimize_g1<T: Scalar>(s: &SecondDerivativeSamples<T>) -> Option<OptimizerResult<T>> {
    let control = seven_point_stationary(s.dxy1, s);
    condition_holds(control, true).then(|| OptimizerResult {
        control,
        objective: seven_point_objective(control, s.dxy1, s),
        region: RegionTag::G1,
        mode: StencilMode::SevenPoint1,
    })
}

/// Maximizes over the interior of `Γ²` (the `dxy2` mirror of
/// [`optimize_g1`]).
pub fn optimize_g2<T: Scalar>(s: &SecondDerivativeSamples<T>) -> Option<OptimizerResult<T>> {
    let control = seven_point_stationary(s.dxy2, s);
    condition_holds(control, false).then(|| OptimizerResult {
        control,
        objective: seven_point_objective(control, s.dxy2, s),
        region: RegionTag::G2,
        mode: StencilMode::SevenPoint2,
    })
}

/// Stationary points of the 7-point objective restricted to one of the two
/// monotonicity-boundary curves, in closed form.
///
/// On the curve branch selected by the signs `(s_a, s_θ)` of `a − ½` and
/// `θ`, substituting the curve equation
/// `a(θ) = ½ (1 + s_a / (√2 sin(2|θ| + π/4)))` into the objective reduces
/// the stationarity condition to a quadratic in `tan 2|θ|` with root
///
/// ```text
/// γ  = s_a (dyy − dxx − 2 s_θ dcross) / (2√f),
/// θ* = (s_θ/2) arctan(1 + γ² − γ √(2 + γ²)).
/// ```
///
/// Requires `f > 0` (the stationary point escapes to the curve endpoints as
/// `f → 0`: to `θ = 0` on the line covered by [`optimize_b0`] or to the
/// `θ = ±π/4` corners covered by [`optimize_corners`]), so this returns no
/// candidates then.
fn optimize_boundary_curve<T: Scalar>(
    s: &SecondDerivativeSamples<T>,
    dcross: T,
    sections: [(T, T); 2],
    region: RegionTag,
) -> Vec<OptimizerResult<T>> {
    if s.f_val <= T::zero() {
        return Vec::new();
    }
    let sqrt_f = s.f_val.sqrt();
    let sqrt2 = T::SQRT_2();
    sections
        .iter()
        .map(|&(sign_a, sign_theta)| {
            let gamma = sign_a * (s.dyy - s.dxx - T::two() * sign_theta * dcross)
                / (T::two() * sqrt_f);
            // `1 + γ² − γ √(2 + γ²)` loses all digits to cancellation (and
            // overflows to NaN) for large positive γ; since
            // `(1 + γ²)² − γ²(2 + γ²) = 1` the reciprocal form is exact.
            let root = if gamma > T::zero() {
                T::one()
                    / (T::one() + gamma * gamma + gamma * (T::two() + gamma * gamma).sqrt())
            } else {
                T::one() + gamma * gamma - gamma * (T::two() + gamma * gamma).sqrt()
            };
            let theta = T::half() * sign_theta * root.atan();
            let curve = sqrt2 * (T::two() * theta.abs() + T::FRAC_PI_4()).sin();
            let a = (T::half() * (T::one() + sign_a / curve))
                .max(T::zero())
                .min(T::one());
            let control = ControlPair::new(a, theta);
            OptimizerResult {
                control,
                objective: seven_point_objective(control, dcross, s),
                region,
                mode: region.mode(),
            }
        })
        .collect()
}

/// Maximizes over the curve `∂Γ¹³` (two branches: `a > ½, θ < 0` and
/// `a < ½, θ > 0`). Empty when `f = 0`.
pub fn optimize_b13<T: Scalar>(s: &SecondDerivativeSamples<T>) -> Vec<OptimizerResult<T>> {
    let one = T::one();
    optimize_boundary_curve(
        s,
        s.dxy1,
        [(one, -one), (-one, one)],
        RegionTag::B13,
    )
}

/// Maximizes over the curve `∂Γ²³` (branches `a > ½, θ > 0` and
/// `a < ½, θ < 0`). Empty when `f = 0`.
pub fn optimize_b23<T: Scalar>(s: &SecondDerivativeSamples<T>) -> Vec<OptimizerResult<T>> {
    let one = T::one();
    optimize_boundary_curve(
        s,
        s.dxy2,
        [(one, one), (-one, -one)],
        RegionTag::B23,
    )
}

/// The two corner controls `(a, θ) = (1, −π/4)` and `(0, −π/4)` where the
/// monotonicity-boundary curves meet the edge of the reduced control set.
///
/// Both have coefficients `(α11, α22, α12) = (½, ½, ±½)` and reduce the
/// 7-point objective to a pure diagonal second difference (main diagonal
/// for the first, anti-diagonal for the second); the source term vanishes
/// because `a(1−a) = 0`. They are the `θ → ±π/4` limits of the curve
/// suprema and are the only curve candidates left when `f = 0`, where the
/// closed-form stationary points of [`optimize_b13`]/[`optimize_b23`] do
/// not exist. Omitting them lets the pointwise maximum fall below the
/// value of a previously selected policy, which breaks the monotone
/// improvement property of the policy iteration on degenerate (`f = 0`)
/// nodes.
pub fn optimize_corners<T: Scalar>(
    s: &SecondDerivativeSamples<T>,
) -> [OptimizerResult<T>; 2] {
    let main = ControlPair::new(T::one(), -T::FRAC_PI_4());
    let anti = ControlPair::new(T::zero(), -T::FRAC_PI_4());
    [
        OptimizerResult {
            control: main,
            objective: seven_point_objective(main, s.dxy1, s),
            region: RegionTag::B13,
            mode: StencilMode::SevenPoint1,
        },
        OptimizerResult {
            control: anti,
            objective: seven_point_objective(anti, s.dxy2, s),
            region: RegionTag::B23,
            mode: StencilMode::SevenPoint2,
        },
    ]
}

/// The two curve values `C±(θ) = ½ (1 ± 1/(√2 sin(2|θ| + π/4)))` bounding
/// the `Γ³` slice at angle `θ`.
#[inline]
fn gamma3_bounds<T: Scalar>(theta: T) -> (T, T) {
    let tau = T::one() / (T::SQRT_2() * (T::two() * theta.abs() + T::FRAC_PI_4()).sin());
    (T::half() * (T::one() - tau), T::half() * (T::one() + tau))
}

/// Midpoint sample angles `θ_k = −π/4 + (k + ½) (π/2) / m`, `k = 0..m`.
///
/// Midpoints never hit `θ = 0` or `θ = ±π/4` exactly, keeping the samples
/// off the region-boundary curves.
#[inline]
pub fn theta_samples<T: Scalar>(m: usize) -> impl Iterator<Item = T> {
    let step = T::FRAC_PI_2() / T::from_usize(m).expect("sample count converts");
    (0..m).map(move |k| {
        -T::FRAC_PI_4() + (T::from_usize(k).expect("index converts") + T::half()) * step
    })
}

/// Maximizes over `Γ³` by a one-dimensional search over `m` midpoint angle
/// samples; `wide_eval(θ)` must return the wide-stencil second differences
/// `(dzz, dww)` along the `θ`-rotated axes, or `None` when the stencil at
/// that rotation is geometrically inadmissible (an axis truncated on both
/// sides near a domain corner) — such angles are skipped.
///
/// At each angle the objective is concave in `a` with unconstrained
/// stationary point `C_λ = ½ (1 − (dzz − dww)/√(4f + (dzz−dww)²))`. The
/// slice of `Γ³` at that angle is the part of `[0, 1]` outside the band
/// `[C−, C+]`, so the angle contributes a candidate `(C_λ, θ)` exactly
/// when `C_λ` falls outside the band; when `C_λ` lies strictly inside, the
/// slice supremum sits on the band edge — a control *on* the
/// monotonicity-boundary curve, which the scheme discretizes with the
/// 7-point stencil and which the closed-form curve optimizers
/// ([`optimize_b13`]/[`optimize_b23`]/[`optimize_corners`]) already cover
/// exactly. Returning such a control here with a wide-stencil objective
/// would assign it two different values; the wide value is the wrong one
/// (and near boundary-truncated arms its `O(√h)` evaluation error can
/// shadow the exact 7-point value, visibly corrupting solutions near
/// boundary singularities), so band-interior angles yield no candidate.
pub fn optimize_g3<T: Scalar>(
    mut wide_eval: impl FnMut(T) -> Option<(T, T)>,
    f_val: T,
    m: usize,
) -> Option<OptimizerResult<T>> {
    let mut best: Option<OptimizerResult<T>> = None;
    for theta in theta_samples::<T>(m) {
        let Some((dzz, dww)) = wide_eval(theta) else {
            continue;
        };
        let a = stationary_a(dzz - dww, f_val);
        let (c_lo, c_hi) = gamma3_bounds(theta);
        if a > c_lo && a < c_hi {
            continue;
        }
        let cand = OptimizerResult {
            control: ControlPair::new(a, theta),
            objective: wide_objective(a, dzz, dww, f_val),
            region: RegionTag::G3,
            mode: StencilMode::Wide,
        };
        if best.map_or(true, |b| cand.objective > b.objective) {
            best = Some(cand);
        }
    }
    best
}

/// Pure-wide variant of [`optimize_g3`]: the stencil is forced wide at
/// every control, so `a` takes the unconstrained stationary value `C_λ`
/// without being pushed onto the `Γ³` band edges. Geometrically
/// inadmissible rotations are skipped exactly as in [`optimize_g3`]; every
/// interior node keeps admissible rotations (near-axis angles never lose
/// both anchors of one axis), so the search never comes up empty for
/// `m ≥ 2`.
pub fn optimize_pure_wide<T: Scalar>(
    mut wide_eval: impl FnMut(T) -> Option<(T, T)>,
    f_val: T,
    m: usize,
) -> Option<OptimizerResult<T>> {
    let mut best: Option<OptimizerResult<T>> = None;
    for theta in theta_samples::<T>(m) {
        let Some((dzz, dww)) = wide_eval(theta) else {
            continue;
        };
        let a = stationary_a(dzz - dww, f_val);
        let cand = OptimizerResult {
            control: ControlPair::new(a, theta),
            objective: wide_objective(a, dzz, dww, f_val),
            region: RegionTag::G3,
            mode: StencilMode::Wide,
        };
        if best.map_or(true, |b| cand.objective > b.objective) {
            best = Some(cand);
        }
    }
    best
}

/// Global pointwise maximization: collects the candidates of all six
/// regional optimizers plus the two curve-corner controls and returns the
/// best.
///
/// Objectives equal within `1e-12` are resolved by region priority
/// `B0 > G1 > G2 > B13 > B23 > G3`, which keeps the winner (and hence the
/// assembled matrix) deterministic.
pub fn optimize_control<T: Scalar>(
    s: &SecondDerivativeSamples<T>,
    wide_eval: impl FnMut(T) -> Option<(T, T)>,
    m: usize,
) -> OptimizerResult<T> {
    let mut best = optimize_b0(s);
    let mut consider = |cand: OptimizerResult<T>| {
        let tol = T::lit(CLASSIFY_TOL);
        let better = cand.objective > best.objective + tol
            || ((cand.objective - best.objective).abs() <= tol
                && cand.region.rank() < best.region.rank());
        if better {
            best = cand;
        }
    };
    if let Some(c) = optimize_g1(s) {
        consider(c);
    }
    if let Some(c) = optimize_g2(s) {
        consider(c);
    }
    for c in optimize_b13(s) {
        consider(c);
    }
    for c in optimize_b23(s) {
        consider(c);
    }
    for c in optimize_corners(s) {
        consider(c);
    }
    if let Some(c) = optimize_g3(wide_eval, s.f_val, m) {
        consider(c);
    }
    best
}

/// Reference objective of the mixed scheme at an arbitrary control: the
/// 7-point objective with the cross difference its region mandates, or the
/// wide objective for `Γ³` controls. A `Γ³` control whose rotation is
/// geometrically inadmissible is outside the scheme's candidate set and
/// scores `−∞`.
///
/// This is the function [`brute_force`] should be given when validating
/// [`optimize_control`].
pub fn scheme_objective<T: Scalar>(
    s: &SecondDerivativeSamples<T>,
    mut wide_eval: impl FnMut(T) -> Option<(T, T)>,
    control: ControlPair<T>,
) -> T {
    match classify(control).mode() {
        StencilMode::SevenPoint1 => seven_point_objective(control, s.dxy1, s),
        StencilMode::SevenPoint2 => seven_point_objective(control, s.dxy2, s),
        StencilMode::Wide => match wide_eval(control.theta) {
            Some((dzz, dww)) => wide_objective(control.a, dzz, dww, s.f_val),
            None => T::neg_infinity(),
        },
    }
}

/// Exhaustive tensor-grid search: `m` equispaced `a`-samples in `[0, 1]`
/// (endpoints included) times the `m` midpoint angle samples of
/// [`theta_samples`]. Returns the best control and its objective.
///
/// O(m²) evaluations — the oracle the closed-form optimizers are tested
/// against, not something to call inside a solve.
pub fn brute_force<T: Scalar>(
    mut objective: impl FnMut(ControlPair<T>) -> T,
    m: usize,
) -> (ControlPair<T>, T) {
    assert!(m >= 2, "brute force needs at least two samples per axis");
    let thetas: Vec<T> = theta_samples(m).collect();
    let denom = T::from_usize(m - 1).expect("sample count converts");
    let mut best = (ControlPair::new(T::zero(), thetas[0]), T::neg_infinity());
    for i in 0..m {
        let a = T::from_usize(i).expect("index converts") / denom;
        for &theta in &thetas {
            let c = ControlPair::new(a, theta);
            let val = objective(c);
            if val > best.1 {
                best = (c, val);
            }
        }
    }
    best
}
