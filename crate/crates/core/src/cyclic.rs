//! Cyclic composition `U = U_m ⋯ U_1` of cutters, sweep traces, and the
//! extrapolated step sizes built from them.
//!
//! With `u⁰ = x`, `uⁱ = U_i uⁱ⁻¹` and `yⁱ = uⁱ − uⁱ⁻¹`, the largest certified
//! step along `Ux − x` is
//!
//! ```text
//! σ_max(x) = (‖Ux − x‖² + Σ‖yⁱ‖²) / (2‖Ux − x‖²)
//! ```
//!
//! which is bounded below by `1/(2m)`. The specialized forms for hyperplanes,
//! half-spaces and subgradient projectors reuse the per-stage scalars captured
//! during the sweep.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::{
    halfspace_step, hyperplane_step, step_towards, subgradient_step, ConvexFunctional, Cutter,
    HalfSpace, Hyperplane,
};
use crate::vector::Vector;

/// Default fixed-point threshold: `‖Ux − x‖ ≤ tol·(1 + ‖x‖)` counts as fixed.
pub const DEFAULT_FIX_TOL: f64 = 1e-13;

/// The composition `U_m U_{m−1} ⋯ U_1` applied left to right over `ops`.
#[derive(Debug, Clone)]
pub struct CyclicOperator {
    ops: Vec<Cutter>,
    dim: usize,
}

impl CyclicOperator {
    pub fn new(ops: Vec<Cutter>) -> Result<Self> {
        let dim = ops.first().map(Cutter::dim).ok_or_else(|| {
            Error::InvalidArgument("cyclic operator needs at least one stage".into())
        })?;
        if let Some(bad) = ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { ops, dim })
    }

    pub fn ops(&self) -> &[Cutter] {
        &self.ops
    }

    /// Number of stages `m`.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Ux`, without recording the intermediate points.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim)?;
        let mut u = x.clone();
        for op in &self.ops {
            u = op.apply(&u)?;
        }
        Ok(u)
    }

    /// True when `x` passes every stage's membership test.
    pub fn contains(&self, x: &Vector) -> bool {
        self.ops.iter().all(|op| op.contains(x))
    }

    /// The common stage kind, or `None` for mixed or custom stage lists.
    pub fn homogeneous_kind(&self) -> Option<StageKind> {
        let first = StageKind::of(&self.ops[0])?;
        self.ops
            .iter()
            .all(|op| StageKind::of(op) == Some(first))
            .then_some(first)
    }

    pub fn sweep(&self, x: &Vector) -> Result<SweepTrace> {
        sweep(self, x)
    }
}

/// Stage kinds that admit a specialized step-size formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Hyperplane,
    HalfSpace,
    Subgradient,
}

impl StageKind {
    fn of(op: &Cutter) -> Option<Self> {
        match op {
            Cutter::Hyperplane(_) => Some(Self::Hyperplane),
            Cutter::HalfSpace(_) => Some(Self::HalfSpace),
            Cutter::Subgradient(_) => Some(Self::Subgradient),
            Cutter::Custom(_) => None,
        }
    }
}

/// Scalars captured while applying one stage to `uⁱ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// `residual = ⟨aⁱ, uⁱ⁻¹⟩ − bᵢ`.
    Hyperplane {
        residual: f64,
        normal_sq: f64,
    },
    /// `residual = ⟨aⁱ, uⁱ⁻¹⟩ − bᵢ` (the step uses its positive part).
    HalfSpace {
        residual: f64,
        normal_sq: f64,
    },
    /// `value = cᵢ(uⁱ⁻¹)`; the subgradient is only evaluated when `value > 0`.
    /// `stalled` marks a violated constraint with a zero subgradient, where
    /// the stage falls back to the identity.
    Subgradient {
        value: f64,
        subgradient: Option<Vector>,
        subgradient_sq: f64,
        stalled: bool,
    },
    Custom,
}

impl Stage {
    fn kind_name(&self) -> &'static str {
        match self {
            Stage::Hyperplane { .. } => "hyperplane",
            Stage::HalfSpace { .. } => "half-space",
            Stage::Subgradient { .. } => "subgradient",
            Stage::Custom => "custom",
        }
    }
}

/// One pass `u⁰, …, uᵐ` of the cyclic composition.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    points: Vec<Vector>,
    increments: Vec<Vector>,
    stages: Vec<Stage>,
}

impl SweepTrace {
    pub fn m(&self) -> usize {
        self.stages.len()
    }

    /// `u⁰ = x`.
    pub fn start(&self) -> &Vector {
        &self.points[0]
    }

    /// `uᵐ = Ux`.
    pub fn image(&self) -> &Vector {
        &self.points[self.points.len() - 1]
    }

    /// `u⁰, …, uᵐ`.
    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    /// `y¹, …, yᵐ`.
    pub fn increments(&self) -> &[Vector] {
        &self.increments
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `Ux − x`.
    pub fn displacement(&self) -> Vector {
        self.image() - self.start()
    }

    /// `‖Ux − x‖²`.
    pub fn displacement_sq(&self) -> f64 {
        self.image().dist_sq(self.start())
    }

    /// `Σ‖yⁱ‖²`.
    pub fn increment_sq_sum(&self) -> f64 {
        self.increments.iter().map(Vector::norm_sq).sum()
    }

    pub fn is_fixed(&self, fix_tol: f64) -> bool {
        self.displacement_sq().sqrt() <= fix_tol * (1.0 + self.start().norm())
    }

    /// True if some subgradient stage was violated but had a zero subgradient.
    pub fn has_stall(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s, Stage::Subgradient { stalled: true, .. }))
    }

    fn moving_displacement_sq(&self) -> Result<f64> {
        let d_sq = self.displacement_sq();
        if d_sq == 0.0 || self.is_fixed(DEFAULT_FIX_TOL) {
            Err(Error::FixedPoint)
        } else {
            Ok(d_sq)
        }
    }
}

/// Applies the stages in order and records every intermediate point.
pub fn sweep(op: &CyclicOperator, x: &Vector) -> Result<SweepTrace> {
    x.check_dim(op.dim)?;
    let m = op.len();
    let mut points = Vec::with_capacity(m + 1);
    let mut increments = Vec::with_capacity(m);
    let mut stages = Vec::with_capacity(m);
    points.push(x.clone());
    for cutter in &op.ops {
        let u = &points[points.len() - 1];
        let (next, stage) = match cutter {
            Cutter::Hyperplane(h) => {
                let residual = h.residual(u);
                (
                    hyperplane_step(h, u, residual),
                    Stage::Hyperplane {
                        residual,
                        normal_sq: h.normal_sq(),
                    },
                )
            }
            Cutter::HalfSpace(h) => {
                let residual = h.residual(u);
                (
                    halfspace_step(h, u, residual),
                    Stage::HalfSpace {
                        residual,
                        normal_sq: h.normal_sq(),
                    },
                )
            }
            Cutter::Subgradient(f) => {
                let step = subgradient_step(f, u)?;
                let (subgradient, subgradient_sq) = match step.subgradient {
                    Some((g, g_sq)) => (Some(g), g_sq),
                    None => (None, 0.0),
                };
                let stalled = step.value > 0.0 && subgradient_sq == 0.0;
                (
                    step.point,
                    Stage::Subgradient {
                        value: step.value,
                        subgradient,
                        subgradient_sq,
                        stalled,
                    },
                )
            }
            Cutter::Custom(_) => (cutter.apply(u)?, Stage::Custom),
        };
        increments.push(&next - u);
        stages.push(stage);
        points.push(next);
    }
    Ok(SweepTrace {
        points,
        increments,
        stages,
    })
}

/// `σ_max` in the form `(‖Ux − x‖² + Σ‖yⁱ‖²) / (2‖Ux − x‖²)`.
///
/// Fails with [`Error::FixedPoint`] when `x` is numerically fixed; callers use
/// `σ = 1` there.
pub fn sigma_max_generic(trace: &SweepTrace) -> Result<f64> {
    let d_sq = trace.moving_displacement_sq()?;
    Ok((d_sq + trace.increment_sq_sum()) / (2.0 * d_sq))
}

fn check_rows(trace: &SweepTrace, rows: usize) -> Result<()> {
    if rows != trace.m() {
        return Err(Error::InvalidArgument(format!(
            "sweep has {} stages but {} constraints were supplied",
            trace.m(),
            rows
        )));
    }
    Ok(())
}

fn stage_error(stage: usize, expected: &'static str, found: &Stage) -> Error {
    Error::StageKind {
        stage,
        expected,
        found: found.kind_name(),
    }
}

fn kaczmarz_sigma<'a>(
    trace: &SweepTrace,
    rows: impl ExactSizeIterator<Item = &'a Hyperplane>,
) -> Result<f64> {
    check_rows(trace, rows.len())?;
    let x = trace.start();
    let mut num = 0.0;
    for (i, (row, stage)) in rows.zip(&trace.stages).enumerate() {
        let Stage::Hyperplane {
            residual,
            normal_sq,
        } = stage
        else {
            return Err(stage_error(i, "hyperplane", stage));
        };
        // (bᵢ − ⟨aⁱ, x⟩)(bᵢ − ⟨aⁱ, uⁱ⁻¹⟩)/‖aⁱ‖²
        num += row.residual(x) * residual / normal_sq;
    }
    Ok(num / trace.moving_displacement_sq()?)
}

/// Step size for a cyclic hyperplane (Kaczmarz) sweep,
/// `Σᵢ (bᵢ − ⟨aⁱ,x⟩)(bᵢ − ⟨aⁱ,uⁱ⁻¹⟩)/‖aⁱ‖² / ‖Ux − x‖²`.
pub fn sigma_kaczmarz(trace: &SweepTrace, rows: &[Hyperplane]) -> Result<f64> {
    kaczmarz_sigma(trace, rows.iter())
}

fn halfspace_sigma<'a>(
    trace: &SweepTrace,
    rows: impl ExactSizeIterator<Item = &'a HalfSpace>,
) -> Result<f64> {
    check_rows(trace, rows.len())?;
    let x = trace.start();
    let mut num = 0.0;
    for (i, (row, stage)) in rows.zip(&trace.stages).enumerate() {
        let Stage::HalfSpace {
            residual,
            normal_sq,
        } = stage
        else {
            return Err(stage_error(i, "half-space", stage));
        };
        if *residual > 0.0 {
            num += row.residual(x) * residual / normal_sq;
        }
    }
    Ok(num / trace.moving_displacement_sq()?)
}

/// Step size for a cyclic half-space sweep,
/// `Σᵢ (⟨aⁱ,x⟩ − bᵢ)(⟨aⁱ,uⁱ⁻¹⟩ − bᵢ)₊/‖aⁱ‖² / ‖Ux − x‖²`.
pub fn sigma_halfspace(trace: &SweepTrace, rows: &[HalfSpace]) -> Result<f64> {
    halfspace_sigma(trace, rows.iter())
}

fn subgradient_sigma(trace: &SweepTrace, stages: usize) -> Result<f64> {
    check_rows(trace, stages)?;
    let x = trace.start();
    let mut num = 0.0;
    for (i, stage) in trace.stages.iter().enumerate() {
        let Stage::Subgradient {
            value,
            subgradient,
            subgradient_sq,
            ..
        } = stage
        else {
            return Err(stage_error(i, "subgradient", stage));
        };
        let Some(g) = subgradient else { continue };
        if *value <= 0.0 || *subgradient_sq == 0.0 {
            continue;
        }
        // ⟨U_i uⁱ⁻¹ − x, g_i(uⁱ⁻¹)⟩
        let inner = g.dot(&trace.points[i + 1]) - g.dot(x);
        num -= value / subgradient_sq * inner;
    }
    Ok(num / trace.moving_displacement_sq()?)
}

/// Step size for a cyclic subgradient-projection sweep,
/// `−Σᵢ (cᵢ(uⁱ⁻¹)₊/‖gᵢ‖²)·⟨U_i uⁱ⁻¹ − x, gᵢ⟩ / ‖Ux − x‖²`.
///
/// Stages with a zero subgradient contribute nothing. The functionals are
/// only used to check the stage count; the sweep already holds `cᵢ` and `gᵢ`.
pub fn sigma_subgrad(trace: &SweepTrace, fns: &[ConvexFunctional]) -> Result<f64> {
    subgradient_sigma(trace, fns.len())
}

/// How the step size `σ(x)` is chosen at each iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// `σ = 1`: the unaccelerated cyclic method.
    Unit,
    /// `σ_max` from sweep increments, valid for any cutter list.
    SigmaMaxGeneric,
    /// `σ_max` through the hyperplane, half-space or subgradient formula;
    /// requires a homogeneous stage list.
    SigmaMaxSpecialized,
    /// `σ = α·Σ‖yⁱ‖²/‖Ux − x‖²` with `α ∈ (0, 1/2]`.
    Clamped(f64),
    /// `σ = max((m + 1)/(2m), σ_max)`.
    Floored,
}

impl StepPolicy {
    pub fn clamped(alpha: f64) -> Result<Self> {
        let p = StepPolicy::Clamped(alpha);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepPolicy::Clamped(alpha) if !(alpha > 0.0 && alpha <= 0.5) => {
                Err(Error::InvalidArgument(format!(
                    "clamped policy needs alpha in (0, 1/2], got {alpha}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Checks that the policy can be evaluated on `op`.
    pub fn check_compatible(&self, op: &CyclicOperator) -> Result<()> {
        self.validate()?;
        if *self == StepPolicy::SigmaMaxSpecialized && op.homogeneous_kind().is_none() {
            return Err(Error::InvalidArgument(
                "specialized step size needs all stages to be hyperplanes, half-spaces, \
                 or subgradient projectors"
                    .into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for StepPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepPolicy::Unit => f.write_str("unit"),
            StepPolicy::SigmaMaxGeneric => f.write_str("sigma-max"),
            StepPolicy::SigmaMaxSpecialized => f.write_str("sigma-specialized"),
            StepPolicy::Clamped(alpha) => write!(f, "clamped:{alpha}"),
            StepPolicy::Floored => f.write_str("floored"),
        }
    }
}

impl FromStr for StepPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(StepPolicy::Unit),
            "sigma-max" => Ok(StepPolicy::SigmaMaxGeneric),
            "sigma-specialized" => Ok(StepPolicy::SigmaMaxSpecialized),
            "floored" => Ok(StepPolicy::Floored),
            _ => {
                let alpha = s
                    .strip_prefix("clamped:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown step policy `{s}`")))?;
                StepPolicy::clamped(alpha)
            }
        }
    }
}

/// Evaluates `σ(x)` for `policy` on a sweep of `op`.
///
/// Returns 1 when the sweep starts at a fixed point (`‖Ux − x‖ ≤
/// fix_tol·(1 + ‖x‖)`).
pub fn apply_policy(
    policy: StepPolicy,
    op: &CyclicOperator,
    trace: &SweepTrace,
    fix_tol: f64,
) -> Result<f64> {
    policy.check_compatible(op)?;
    if trace.is_fixed(fix_tol) {
        return Ok(1.0);
    }
    let sigma = match policy {
        StepPolicy::Unit => Ok(1.0),
        StepPolicy::SigmaMaxGeneric => sigma_max_generic(trace),
        StepPolicy::SigmaMaxSpecialized => specialized_sigma(op, trace),
        StepPolicy::Clamped(alpha) => trace
            .moving_displacement_sq()
            .map(|d_sq| alpha * trace.increment_sq_sum() / d_sq),
        StepPolicy::Floored => sigma_max_generic(trace).map(|s| floor_step(op.len(), s)),
    };
    match sigma {
        Err(Error::FixedPoint) => Ok(1.0),
        other => other,
    }
}

/// `max((m + 1)/(2m), σ_max)`.
///
/// Since `σ_max = 1/2 + Σ‖yⁱ‖²/(2‖Ux − x‖²)` and `Σ‖yⁱ‖² ≥ ‖Ux − x‖²/m`,
/// the floor only binds through rounding when `σ_max` comes from a sweep.
pub fn floor_step(m: usize, sigma_max: f64) -> f64 {
    let m = m as f64;
    sigma_max.max((m + 1.0) / (2.0 * m))
}

fn specialized_sigma(op: &CyclicOperator, trace: &SweepTrace) -> Result<f64> {
    match op.homogeneous_kind() {
        Some(StageKind::Hyperplane) => kaczmarz_sigma(
            trace,
            op.ops.iter().map(|c| match c {
                Cutter::Hyperplane(h) => h,
                _ => unreachable!("homogeneous hyperplane list"),
            }),
        ),
        Some(StageKind::HalfSpace) => halfspace_sigma(
            trace,
            op.ops.iter().map(|c| match c {
                Cutter::HalfSpace(h) => h,
                _ => unreachable!("homogeneous half-space list"),
            }),
        ),
        Some(StageKind::Subgradient) => subgradient_sigma(trace, op.len()),
        None => Err(Error::InvalidArgument(
            "specialized step size needs a homogeneous stage list".into(),
        )),
    }
}

/// Result of one extrapolated step.
#[derive(Debug, Clone)]
pub struct Step {
    pub point: Vector,
    pub trace: SweepTrace,
    pub sigma: f64,
}

/// One application of `U_{σ,λ}`: `x + λσ(x)(Ux − x)`, using the default
/// fixed-point threshold.
pub fn extrapolated_step(
    op: &CyclicOperator,
    policy: StepPolicy,
    lambda: f64,
    x: &Vector,
) -> Result<Step> {
    extrapolated_step_with_tol(op, policy, lambda, x, DEFAULT_FIX_TOL)
}

pub fn extrapolated_step_with_tol(
    op: &CyclicOperator,
    policy: StepPolicy,
    lambda: f64,
    x: &Vector,
    fix_tol: f64,
) -> Result<Step> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation parameter must lie in (0, 2), got {lambda}"
        )));
    }
    let trace = op.sweep(x)?;
    let sigma = apply_policy(policy, op, &trace, fix_tol)?;
    let point = if trace.is_fixed(fix_tol) {
        x.clone()
    } else {
        step_towards(x, trace.image(), lambda * sigma)
    };
    Ok(Step {
        point,
        trace,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn hp(a: &[f64], b: f64) -> Hyperplane {
        Hyperplane::new(v(a), b).unwrap()
    }

    fn hs(a: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(v(a), b).unwrap()
    }

    fn axes() -> (CyclicOperator, Vec<Hyperplane>) {
        let rows = vec![hp(&[1.0, 0.0], 0.0), hp(&[0.0, 1.0], 0.0)];
        let op = CyclicOperator::new(rows.iter().cloned().map(Cutter::from).collect()).unwrap();
        (op, rows)
    }

    /// {x₁ = 0, x₁ − x₂ = 0}
    fn diagonal() -> (CyclicOperator, Vec<Hyperplane>) {
        let rows = vec![hp(&[1.0, 0.0], 0.0), hp(&[1.0, -1.0], 0.0)];
        let op = CyclicOperator::new(rows.iter().cloned().map(Cutter::from).collect()).unwrap();
        (op, rows)
    }

    #[test]
    fn construction_checks() {
        assert!(CyclicOperator::new(vec![]).is_err());
        let err = CyclicOperator::new(vec![
            hp(&[1.0, 0.0], 0.0).into(),
            hp(&[1.0, 0.0, 1.0], 0.0).into(),
        ])
        .unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn sweep_over_axes() {
        let (op, _) = axes();
        let t = op.sweep(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(
            t.points(),
            &[v(&[1.0, 1.0]), v(&[0.0, 1.0]), v(&[0.0, 0.0])]
        );
        assert_eq!(t.increments(), &[v(&[-1.0, 0.0]), v(&[0.0, -1.0])]);
        assert_eq!(t.image(), &op.apply(&v(&[1.0, 1.0])).unwrap());
    }

    #[test]
    fn sweep_at_solution_is_stationary() {
        let (op, _) = diagonal();
        let z = v(&[0.0, 0.0]);
        let t = op.sweep(&z).unwrap();
        assert!(t.points().iter().all(|p| *p == z));
        assert!(t.increments().iter().all(Vector::is_zero));
        assert!(t.is_fixed(DEFAULT_FIX_TOL));
        assert_eq!(sigma_max_generic(&t), Err(Error::FixedPoint));
    }

    #[test]
    fn sweep_over_diagonal() {
        let (op, _) = diagonal();
        let t = op.sweep(&v(&[2.0, 1.0])).unwrap();
        assert_eq!(
            t.points(),
            &[v(&[2.0, 1.0]), v(&[0.0, 1.0]), v(&[0.5, 0.5])]
        );
        assert_eq!(t.increments(), &[v(&[-2.0, 0.0]), v(&[0.5, -0.5])]);
        assert_eq!(t.displacement_sq(), 2.5);
        assert_eq!(t.increment_sq_sum(), 4.5);
    }

    #[test]
    fn sigma_max_examples() {
        let (op, rows) = axes();
        let t = op.sweep(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(sigma_max_generic(&t).unwrap(), 1.0);
        assert_eq!(sigma_kaczmarz(&t, &rows).unwrap(), 1.0);

        let (op, rows) = diagonal();
        let t = op.sweep(&v(&[2.0, 1.0])).unwrap();
        assert_relative_eq!(sigma_max_generic(&t).unwrap(), 1.4, max_relative = 1e-15);
        assert_relative_eq!(
            sigma_kaczmarz(&t, &rows).unwrap(),
            1.4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn single_stage_sigma_is_one() {
        let op = CyclicOperator::new(vec![hp(&[2.0, -1.0, 0.5], 3.0).into()]).unwrap();
        let t = op.sweep(&v(&[1.0, 7.0, -2.0])).unwrap();
        assert_relative_eq!(sigma_max_generic(&t).unwrap(), 1.0, max_relative = 1e-15);
        let rows = [hp(&[2.0, -1.0, 0.5], 3.0)];
        assert_relative_eq!(
            sigma_kaczmarz(&t, &rows).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn sigma_halfspace_examples() {
        let rows = vec![hs(&[1.0, 0.0], 0.0), hs(&[0.0, 1.0], 0.0)];
        let op = CyclicOperator::new(rows.iter().cloned().map(Cutter::from).collect()).unwrap();
        let t = op.sweep(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(t.image(), &v(&[0.0, 0.0]));
        assert_eq!(sigma_halfspace(&t, &rows).unwrap(), 1.0);

        let t = op.sweep(&v(&[-1.0, 2.0])).unwrap();
        assert_eq!(t.displacement_sq(), 4.0);
        assert_eq!(sigma_halfspace(&t, &rows).unwrap(), 1.0);

        let single = [hs(&[1.0, 1.0], 1.0)];
        let op1 = CyclicOperator::new(vec![single[0].clone().into()]).unwrap();
        let t = op1.sweep(&v(&[3.0, 2.0])).unwrap();
        assert_relative_eq!(
            sigma_halfspace(&t, &single).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sigma_subgrad_examples() {
        let ball = ConvexFunctional::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let op = CyclicOperator::new(vec![ball.clone().into()]).unwrap();
        let t = op.sweep(&v(&[2.0, 0.0])).unwrap();
        assert_eq!(sigma_subgrad(&t, std::slice::from_ref(&ball)).unwrap(), 1.0);

        // The inner ball is satisfied after the first stage, so the second stage is idle.
        let outer = ConvexFunctional::ball(v(&[0.0, 0.0]), 2.0).unwrap();
        let fns = [ball, outer];
        let op = CyclicOperator::new(fns.iter().cloned().map(Cutter::from).collect()).unwrap();
        let t = op.sweep(&v(&[3.0, 0.0])).unwrap();
        assert!(matches!(
            t.stages()[1],
            Stage::Subgradient {
                subgradient: None,
                ..
            }
        ));
        assert_relative_eq!(
            sigma_subgrad(&t, &fns).unwrap(),
            sigma_max_generic(&t).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn specialized_forms_reject_foreign_stages() {
        let (op, rows) = diagonal();
        let t = op.sweep(&v(&[2.0, 1.0])).unwrap();
        let half = [hs(&[1.0, 0.0], 0.0), hs(&[1.0, -1.0], 0.0)];
        assert!(matches!(
            sigma_halfspace(&t, &half),
            Err(Error::StageKind { stage: 0, .. })
        ));
        assert!(sigma_subgrad(&t, &[]).is_err());
        assert!(sigma_kaczmarz(&t, &rows[..1]).is_err());
    }

    #[test]
    fn zero_subgradient_stage_is_flagged() {
        use std::sync::Arc;
        let f = ConvexFunctional::custom(
            1,
            Arc::new(|_: &Vector| 1.0),
            Arc::new(|_: &Vector| Vector::zeros(1).unwrap()),
        )
        .unwrap();
        let op = CyclicOperator::new(vec![f.into()]).unwrap();
        let t = op.sweep(&v(&[0.5])).unwrap();
        assert!(t.has_stall());
        assert!(t.is_fixed(DEFAULT_FIX_TOL));
    }

    #[test]
    fn policy_examples() {
        let (op, _) = diagonal();
        let t = op.sweep(&v(&[2.0, 1.0])).unwrap();
        let tol = DEFAULT_FIX_TOL;
        assert_eq!(apply_policy(StepPolicy::Unit, &op, &t, tol).unwrap(), 1.0);
        assert_relative_eq!(
            apply_policy(StepPolicy::Floored, &op, &t, tol).unwrap(),
            1.4,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            apply_policy(StepPolicy::SigmaMaxSpecialized, &op, &t, tol).unwrap(),
            1.4,
            max_relative = 1e-15
        );
        // α·Σ‖yⁱ‖²/‖Ux − x‖² = 0.5·4.5/2.5
        assert_relative_eq!(
            apply_policy(StepPolicy::Clamped(0.5), &op, &t, tol).unwrap(),
            0.9,
            max_relative = 1e-15
        );
        assert!(apply_policy(StepPolicy::Clamped(0.6), &op, &t, tol).is_err());
        assert!(apply_policy(StepPolicy::Clamped(0.0), &op, &t, tol).is_err());

        let fixed = op.sweep(&v(&[0.0, 0.0])).unwrap();
        for p in [
            StepPolicy::SigmaMaxGeneric,
            StepPolicy::Floored,
            StepPolicy::Clamped(0.25),
        ] {
            assert_eq!(apply_policy(p, &op, &fixed, tol).unwrap(), 1.0);
        }
    }

    #[test]
    fn floor_step_examples() {
        assert_eq!(floor_step(2, 1.4), 1.4);
        assert_eq!(floor_step(2, 0.3), 0.75);
        assert_eq!(floor_step(1, 0.9), 1.0);
    }

    #[test]
    fn specialized_policy_rejects_mixed_lists() {
        let op = CyclicOperator::new(vec![
            hp(&[1.0, 0.0], 0.0).into(),
            hs(&[0.0, 1.0], 0.0).into(),
        ])
        .unwrap();
        let t = op.sweep(&v(&[1.0, 1.0])).unwrap();
        assert!(apply_policy(StepPolicy::SigmaMaxSpecialized, &op, &t, DEFAULT_FIX_TOL).is_err());
        assert!(
            extrapolated_step(&op, StepPolicy::SigmaMaxSpecialized, 1.0, &v(&[0.0, 0.0])).is_err()
        );
    }

    #[test]
    fn policy_round_trips_through_strings() {
        for p in [
            StepPolicy::Unit,
            StepPolicy::SigmaMaxGeneric,
            StepPolicy::SigmaMaxSpecialized,
            StepPolicy::Clamped(0.25),
            StepPolicy::Floored,
        ] {
            assert_eq!(p.to_string().parse::<StepPolicy>().unwrap(), p);
        }
        assert!("clamped:0.75".parse::<StepPolicy>().is_err());
        assert!("clamped:".parse::<StepPolicy>().is_err());
        assert!("fast".parse::<StepPolicy>().is_err());
    }

    #[test]
    fn extrapolated_step_examples() {
        let (op, _) = diagonal();
        let x = v(&[2.0, 1.0]);
        let s = extrapolated_step(&op, StepPolicy::SigmaMaxGeneric, 1.0, &x).unwrap();
        assert_relative_eq!(s.sigma, 1.4, max_relative = 1e-15);
        assert_abs_diff_eq!(s.point.as_slice(), [-0.1, 0.3].as_slice(), epsilon = 1e-15);

        let z = v(&[0.0, 0.0]);
        let s = extrapolated_step(&op, StepPolicy::SigmaMaxGeneric, 1.5, &z).unwrap();
        assert_eq!(s.point, z);
        assert_eq!(s.sigma, 1.0);

        let s = extrapolated_step(&op, StepPolicy::Unit, 1.0, &x).unwrap();
        assert_eq!(s.point, op.apply(&x).unwrap());

        assert!(extrapolated_step(&op, StepPolicy::Unit, 2.0, &x).is_err());
        assert!(extrapolated_step(&op, StepPolicy::Unit, 0.0, &x).is_err());
    }
}
