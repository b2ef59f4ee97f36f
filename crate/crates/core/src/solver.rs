//! Iteration driver for `x^{k+1} = x^k + λ_k σ(x^k)(Ux^k − x^k)`.

use crate::cyclic::{apply_policy, CyclicOperator, StepPolicy, DEFAULT_FIX_TOL};
use crate::error::{Error, Result};
use crate::operators::step_towards;
use crate::vector::Vector;
use std::fmt;

/// Consecutive non-moving iterations after which a run is reported as stalled.
pub const STALL_WINDOW: usize = 50;

/// Relaxation parameters `λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    Constant(f64),
    /// Cycled when the iteration count exceeds its length.
    Sequence(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub lambda: LambdaSchedule,
    /// Every `λ_k` is clamped into `[epsilon, 2 − epsilon]`.
    pub epsilon: f64,
    pub policy: StepPolicy,
    /// Stop once `‖Ux^k − x^k‖ ≤ tol_residual`.
    pub tol_residual: f64,
    pub max_iters: usize,
    pub fix_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            lambda: LambdaSchedule::Constant(1.0),
            epsilon: 1e-2,
            policy: StepPolicy::SigmaMaxGeneric,
            tol_residual: 1e-8,
            max_iters: 10_000,
            fix_tol: DEFAULT_FIX_TOL,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        let lambdas: &[f64] = match &self.lambda {
            LambdaSchedule::Constant(l) => std::slice::from_ref(l),
            LambdaSchedule::Sequence(ls) if ls.is_empty() => {
                return bad("lambda schedule is empty".into())
            }
            LambdaSchedule::Sequence(ls) => ls,
        };
        if let Some(l) = lambdas.iter().find(|&&l| !(l > 0.0 && l < 2.0)) {
            return bad(format!("relaxation parameter must lie in (0, 2), got {l}"));
        }
        if !(self.tol_residual >= 0.0 && self.tol_residual.is_finite()) {
            return bad(format!(
                "tolerance must be finite and non-negative, got {}",
                self.tol_residual
            ));
        }
        if !(self.fix_tol >= 0.0 && self.fix_tol.is_finite()) {
            return bad(format!(
                "fixed-point tolerance must be finite and non-negative, got {}",
                self.fix_tol
            ));
        }
        self.policy.validate()
    }

    /// `λ_k`, clamped into `[ε, 2 − ε]`.
    pub fn lambda_at(&self, k: usize) -> f64 {
        let raw = match &self.lambda {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(ls) => ls[k % ls.len()],
        };
        raw.clamp(self.epsilon, 2.0 - self.epsilon)
    }
}

/// Free-function form of [`SolveConfig::lambda_at`].
pub fn lambda_at(cfg: &SolveConfig, k: usize) -> f64 {
    cfg.lambda_at(k)
}

/// Diagnostics at iterate `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖Ux^k − x^k‖`.
    pub residual: f64,
    /// Step size used to leave `x^k`; `None` on the terminal record.
    pub sigma: Option<f64>,
    /// Relaxation used to leave `x^k`; `None` on the terminal record.
    pub lambda: Option<f64>,
    /// `‖x^k − z_ref‖` when a reference solution was supplied.
    pub dist_to_ref: Option<f64>,
    /// `Σᵢ ‖S_i x^k − S_{i−1} x^k‖²`.
    pub stage_sq_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Stalled,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max-iters",
            SolveStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_point: Vector,
    pub status: SolveStatus,
    /// One record per visited iterate, starting with `x^0`.
    pub trace: Vec<IterationRecord>,
    stages: usize,
}

impl SolveResult {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.residual)
    }

    /// Total constituent-operator applications (one sweep per record).
    pub fn operator_applications(&self) -> usize {
        self.trace.len() * self.stages
    }

    /// Decrease certificates for each step, when distances were recorded.
    pub fn certificates(&self) -> Vec<f64> {
        self.trace
            .windows(2)
            .filter_map(|w| fejer_certificate(&w[0], &w[1]))
            .collect()
    }

    /// True when `‖x^k − z_ref‖` never increases by more than `slack`.
    pub fn is_fejer_monotone(&self, slack: f64) -> bool {
        self.trace
            .windows(2)
            .all(|w| match (w[0].dist_to_ref, w[1].dist_to_ref) {
                (Some(a), Some(b)) => b <= a + slack,
                _ => true,
            })
    }
}

/// `‖x^k − z‖² − ‖x^{k+1} − z‖² − λ(2 − λ)σ²‖Ux^k − x^k‖²`.
///
/// Non-negative whenever `σ` does not exceed `⟨Ux − x, z − x⟩/‖Ux − x‖²`,
/// which holds for `σ_max`, the clamped band, and the floored step.
pub fn decrease_certificate(
    dist_sq: f64,
    next_dist_sq: f64,
    sigma: f64,
    lambda: f64,
    residual_sq: f64,
) -> f64 {
    dist_sq - next_dist_sq - lambda * (2.0 - lambda) * sigma * sigma * residual_sq
}

/// [`decrease_certificate`] for a pair of consecutive records.
pub fn fejer_certificate(current: &IterationRecord, next: &IterationRecord) -> Option<f64> {
    let d0 = current.dist_to_ref?;
    let d1 = next.dist_to_ref?;
    Some(decrease_certificate(
        d0 * d0,
        d1 * d1,
        current.sigma?,
        current.lambda?,
        current.residual * current.residual,
    ))
}

/// Runs the extrapolated cyclic method from `x0` until the operator residual
/// drops below `cfg.tol_residual`, the iteration budget runs out, or the
/// iterates stop moving.
pub fn solve(
    op: &CyclicOperator,
    x0: &Vector,
    cfg: &SolveConfig,
    z_ref: Option<&Vector>,
) -> Result<SolveResult> {
    cfg.validate()?;
    cfg.policy.check_compatible(op)?;
    x0.check_dim(op.dim())?;
    if let Some(z) = z_ref {
        z.check_dim(op.dim())?;
        if !op.contains(z) {
            return Err(Error::InvalidArgument(
                "reference point is not in every constraint set".into(),
            ));
        }
    }

    let mut x = x0.clone();
    let mut trace = Vec::new();
    let mut idle = 0usize;
    let status = loop {
        let k = trace.len();
        let sweep = op.sweep(&x)?;
        let mut record = IterationRecord {
            k,
            residual: sweep.displacement_sq().sqrt(),
            sigma: None,
            lambda: None,
            dist_to_ref: z_ref.map(|z| x.dist(z)),
            stage_sq_sum: sweep.increment_sq_sum(),
        };
        let stop = if record.residual <= cfg.tol_residual {
            // A violated constraint with a zero subgradient leaves x in place.
            Some(if sweep.has_stall() {
                SolveStatus::Stalled
            } else {
                SolveStatus::Converged
            })
        } else if idle >= STALL_WINDOW {
            Some(SolveStatus::Stalled)
        } else if k >= cfg.max_iters {
            Some(SolveStatus::MaxIters)
        } else {
            None
        };
        if let Some(status) = stop {
            trace.push(record);
            break status;
        }

        let lambda = cfg.lambda_at(k);
        let sigma = apply_policy(cfg.policy, op, &sweep, cfg.fix_tol)?;
        let next = if sweep.is_fixed(cfg.fix_tol) {
            x.clone()
        } else {
            step_towards(&x, sweep.image(), lambda * sigma)
        };
        if next.dist(&x) <= f64::EPSILON * (1.0 + x.norm()) {
            idle += 1;
        } else {
            idle = 0;
        }
        record.sigma = Some(sigma);
        record.lambda = Some(lambda);
        trace.push(record);
        x = next;
    };

    Ok(SolveResult {
        final_point: x,
        status,
        trace,
        stages: op.len(),
    })
}
