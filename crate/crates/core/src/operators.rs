//! Cutter operators: metric projections onto hyperplanes and half-spaces,
//! subgradient projectors onto sublevel sets of convex functionals, and
//! caller-supplied projectors.
//!
//! An operator `T` is a cutter when every fixed point `q` satisfies
//! `⟨Tx − x, q − x⟩ ≥ ‖Tx − x‖²`. [`cutter_gap`] evaluates the slack of that
//! inequality so tests can check it on sampled points.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Relative tolerance for hyperplane membership, scaled by `1 + |b|`.
pub const HYPERPLANE_MEMBERSHIP_TOL: f64 = 1e-9;
/// Absolute tolerance for half-space membership `⟨a, x⟩ ≤ b + tol`.
pub const HALFSPACE_MEMBERSHIP_TOL: f64 = 1e-12;
/// Absolute tolerance for sublevel-set membership `c(x) ≤ tol`.
pub const SUBLEVEL_MEMBERSHIP_TOL: f64 = 1e-12;

fn check_normal(normal: &Vector, offset: f64) -> Result<f64> {
    if !offset.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "offset {offset} is not finite"
        )));
    }
    let normal_sq = normal.norm_sq();
    if normal_sq == 0.0 || !normal_sq.is_finite() {
        return Err(Error::ZeroNormal);
    }
    Ok(normal_sq)
}

/// The hyperplane `{x : ⟨a, x⟩ = b}` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vector,
    offset: f64,
    normal_sq: f64,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let normal_sq = check_normal(&normal, offset)?;
        Ok(Self {
            normal,
            offset,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn normal_sq(&self) -> f64 {
        self.normal_sq
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `⟨a, x⟩ − b`.
    pub fn residual(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.dim() == self.dim()
            && self.residual(x).abs() <= HYPERPLANE_MEMBERSHIP_TOL * (1.0 + self.offset.abs())
    }
}

/// The half-space `{x : ⟨a, x⟩ ≤ b}` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
    normal_sq: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let normal_sq = check_normal(&normal, offset)?;
        Ok(Self {
            normal,
            offset,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn normal_sq(&self) -> f64 {
        self.normal_sq
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `⟨a, x⟩ − b`; positive when `x` violates the constraint.
    pub fn residual(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.dim() == self.dim() && self.residual(x) <= HALFSPACE_MEMBERSHIP_TOL
    }
}

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type SubgradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ProjectFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ContainsFn = Arc<dyn Fn(&Vector) -> bool + Send + Sync>;

#[derive(Clone)]
enum Functional {
    Affine {
        normal: Vector,
        offset: f64,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    Custom {
        dim: usize,
        value: ValueFn,
        subgradient: SubgradientFn,
    },
}

/// A continuous convex functional `c` together with a subgradient selection
/// `g(x) ∈ ∂c(x)`. Its zero sublevel set `{c ≤ 0}` is the constraint set.
#[derive(Clone)]
pub struct ConvexFunctional(Functional);

impl ConvexFunctional {
    /// `c(x) = ⟨a, x⟩ − b`, subgradient `a`.
    pub fn affine(normal: Vector, offset: f64) -> Result<Self> {
        check_normal(&normal, offset)?;
        Ok(Self(Functional::Affine { normal, offset }))
    }

    /// `c(x) = ‖x − center‖² − radius²`, subgradient `2(x − center)`.
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be finite and non-negative, got {radius}"
            )));
        }
        Ok(Self(Functional::Ball { center, radius }))
    }

    /// A user-supplied functional. The caller is responsible for `subgradient`
    /// returning an element of the subdifferential of a convex `value`.
    pub fn custom(dim: usize, value: ValueFn, subgradient: SubgradientFn) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self(Functional::Custom {
            dim,
            value,
            subgradient,
        }))
    }

    pub fn dim(&self) -> usize {
        match &self.0 {
            Functional::Affine { normal, .. } => normal.dim(),
            Functional::Ball { center, .. } => center.dim(),
            Functional::Custom { dim, .. } => *dim,
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match &self.0 {
            Functional::Affine { normal, offset } => normal.dot(x) - offset,
            Functional::Ball { center, radius } => x.dist_sq(center) - radius * radius,
            Functional::Custom { value, .. } => value(x),
        }
    }

    pub fn subgradient(&self, x: &Vector) -> Vector {
        match &self.0 {
            Functional::Affine { normal, .. } => normal.clone(),
            Functional::Ball { center, .. } => &(x - center) * 2.0,
            Functional::Custom { subgradient, .. } => subgradient(x),
        }
    }

    /// `(a, b)` when this is the affine functional `⟨a, x⟩ − b`.
    pub fn as_affine(&self) -> Option<(&Vector, f64)> {
        match &self.0 {
            Functional::Affine { normal, offset } => Some((normal, *offset)),
            _ => None,
        }
    }

    /// `(center, radius)` when this is a ball functional.
    pub fn as_ball(&self) -> Option<(&Vector, f64)> {
        match &self.0 {
            Functional::Ball { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.dim() == self.dim() && self.value(x) <= SUBLEVEL_MEMBERSHIP_TOL
    }
}

impl fmt::Debug for ConvexFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Functional::Affine { normal, offset } => f
                .debug_struct("Affine")
                .field("normal", normal)
                .field("offset", offset)
                .finish(),
            Functional::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Functional::Custom { dim, .. } => f
                .debug_struct("Custom")
                .field("dim", dim)
                .finish_non_exhaustive(),
        }
    }
}

/// A caller-supplied cutter: a map together with a membership test for its
/// fixed-point set.
#[derive(Clone)]
pub struct CustomCutter {
    dim: usize,
    project: ProjectFn,
    contains: ContainsFn,
}

impl CustomCutter {
    pub fn new(dim: usize, project: ProjectFn, contains: ContainsFn) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self {
            dim,
            project,
            contains,
        })
    }
}

impl fmt::Debug for CustomCutter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCutter")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// One constituent operator `U_i` of a cyclic composition.
#[derive(Debug, Clone)]
pub enum Cutter {
    Hyperplane(Hyperplane),
    HalfSpace(HalfSpace),
    Subgradient(ConvexFunctional),
    Custom(CustomCutter),
}

impl Cutter {
    pub fn dim(&self) -> usize {
        match self {
            Cutter::Hyperplane(h) => h.dim(),
            Cutter::HalfSpace(h) => h.dim(),
            Cutter::Subgradient(f) => f.dim(),
            Cutter::Custom(c) => c.dim,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Cutter::Hyperplane(_) => "hyperplane",
            Cutter::HalfSpace(_) => "half-space",
            Cutter::Subgradient(_) => "subgradient",
            Cutter::Custom(_) => "custom",
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        match self {
            Cutter::Hyperplane(h) => project_hyperplane(h, x),
            Cutter::HalfSpace(h) => project_halfspace(h, x),
            Cutter::Subgradient(f) => subgradient_project(f, x),
            Cutter::Custom(c) => {
                x.check_dim(c.dim)?;
                let y = (c.project)(x);
                y.check_dim(c.dim)?;
                Ok(y)
            }
        }
    }

    /// Fixed-point membership test with the default tolerances.
    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            Cutter::Hyperplane(h) => h.contains(x),
            Cutter::HalfSpace(h) => h.contains(x),
            Cutter::Subgradient(f) => f.contains(x),
            Cutter::Custom(c) => x.dim() == c.dim && (c.contains)(x),
        }
    }
}

impl From<Hyperplane> for Cutter {
    fn from(h: Hyperplane) -> Self {
        Cutter::Hyperplane(h)
    }
}

impl From<HalfSpace> for Cutter {
    fn from(h: HalfSpace) -> Self {
        Cutter::HalfSpace(h)
    }
}

impl From<ConvexFunctional> for Cutter {
    fn from(f: ConvexFunctional) -> Self {
        Cutter::Subgradient(f)
    }
}

impl From<CustomCutter> for Cutter {
    fn from(c: CustomCutter) -> Self {
        Cutter::Custom(c)
    }
}

/// Metric projection onto a hyperplane: `x − ((⟨a,x⟩ − b)/‖a‖²)·a`.
pub fn project_hyperplane(h: &Hyperplane, x: &Vector) -> Result<Vector> {
    x.check_dim(h.dim())?;
    Ok(hyperplane_step(h, x, h.residual(x)))
}

pub(crate) fn hyperplane_step(h: &Hyperplane, x: &Vector, residual: f64) -> Vector {
    x.add_scaled(-residual / h.normal_sq, &h.normal)
}

pub(crate) fn halfspace_step(h: &HalfSpace, x: &Vector, residual: f64) -> Vector {
    if residual <= 0.0 {
        x.clone()
    } else {
        x.add_scaled(-residual / h.normal_sq, &h.normal)
    }
}

/// Metric projection onto a half-space; the identity on interior points.
pub fn project_halfspace(h: &HalfSpace, x: &Vector) -> Result<Vector> {
    x.check_dim(h.dim())?;
    Ok(halfspace_step(h, x, h.residual(x)))
}

/// Subgradient projection onto `{c ≤ 0}`:
/// `x − (c(x)₊/‖g(x)‖²)·g(x)`, or `x` when `g(x) = 0`.
pub fn subgradient_project(f: &ConvexFunctional, x: &Vector) -> Result<Vector> {
    Ok(subgradient_step(f, x)?.point)
}

pub(crate) struct SubgradientStep {
    pub point: Vector,
    pub value: f64,
    /// `g(x)` and `‖g(x)‖²`, evaluated only when `c(x) > 0`.
    pub subgradient: Option<(Vector, f64)>,
}

pub(crate) fn subgradient_step(f: &ConvexFunctional, x: &Vector) -> Result<SubgradientStep> {
    x.check_dim(f.dim())?;
    let value = f.value(x);
    if value <= 0.0 {
        return Ok(SubgradientStep {
            point: x.clone(),
            value,
            subgradient: None,
        });
    }
    let g = f.subgradient(x);
    g.check_dim(f.dim())?;
    let g_sq = g.norm_sq();
    let point = if g_sq == 0.0 {
        x.clone()
    } else {
        x.add_scaled(-value / g_sq, &g)
    };
    Ok(SubgradientStep {
        point,
        value,
        subgradient: Some((g, g_sq)),
    })
}

/// Moves from `x` towards (or past) `tx`: `x + t·(tx − x)`.
///
/// `t == 1` returns `tx` itself so that unit steps are bit-identical to the
/// underlying operator.
pub(crate) fn step_towards(x: &Vector, tx: &Vector, t: f64) -> Vector {
    if t == 1.0 {
        return tx.clone();
    }
    let coords = x
        .iter()
        .zip(tx.iter())
        .map(|(xi, ti)| xi + t * (ti - xi))
        .collect();
    Vector::new(coords).unwrap_or_else(|_| unreachable!("finite inputs give finite steps"))
}

fn check_lambda_open(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "relaxation parameter must lie in (0, 2), got {lambda}"
        )))
    }
}

/// Relaxation `T_λ x = x + λ(Tx − x)` for `λ ∈ (0, 2)`.
pub fn relax(t: &Cutter, lambda: f64, x: &Vector) -> Result<Vector> {
    check_lambda_open(lambda)?;
    let tx = t.apply(x)?;
    Ok(step_towards(x, &tx, lambda))
}

/// Generalized relaxation `U_{σ,λ} x = x + λσ(Ux − x)` with `σ > 0` and
/// `λ ∈ (0, 2]`.
pub fn generalized_relaxation<F>(u: F, sigma: f64, lambda: f64, x: &Vector) -> Result<Vector>
where
    F: FnOnce(&Vector) -> Vector,
{
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {sigma}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation parameter must lie in (0, 2], got {lambda}"
        )));
    }
    let ux = u(x);
    ux.check_dim(x.dim())?;
    Ok(step_towards(x, &ux, lambda * sigma))
}

/// Slack of the cutter inequality, `⟨Tx − x, q − x⟩ − ‖Tx − x‖²`.
///
/// Non-negative (up to rounding) whenever `q` is a fixed point of `T`.
pub fn cutter_gap(t: &Cutter, x: &Vector, q: &Vector) -> Result<f64> {
    q.check_dim(t.dim())?;
    let tx = t.apply(x)?;
    let d = &tx - x;
    let qx = q - x;
    Ok(d.dot(&qx) - d.norm_sq())
}
