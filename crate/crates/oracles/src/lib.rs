//! Brute-force reference computations for checking `cutter-core`.
//!
//! Nothing here shares code paths with the production formulas: projections
//! are found by root bracketing along the normal, step sizes are evaluated
//! from fresh operator applications, and line minimizers are cross-checked on
//! a dense grid. Speed is not a goal.

pub mod sampling;

use cutter_core::{Cutter, CyclicOperator, SweepTrace, Vector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("search direction is zero")]
    ZeroDirection,
    #[error("oracle does not support {0} constraints")]
    Unsupported(&'static str),
    #[error("point is fixed; step size is undefined")]
    FixedPoint,
    #[error("closed-form minimizer {closed} disagrees with grid minimizer {grid}")]
    GridDisagreement { closed: f64, grid: f64 },
    #[error(transparent)]
    Core(#[from] cutter_core::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Number of grid samples used to confirm the closed-form line minimizer.
pub const GRID_SAMPLES: usize = 10_000;
/// Grid interval for the line-search confirmation.
pub const GRID_RANGE: (f64, f64) = (-1.0, 4.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    /// Minimizer of `α ↦ ‖x + αd − z‖`.
    pub alpha_star: f64,
    pub min_dist: f64,
    /// Best grid sample and its distance.
    pub grid_alpha: f64,
    pub grid_min_dist: f64,
}

fn point_on_line(x: &Vector, d: &Vector, alpha: f64, z: &Vector) -> f64 {
    x.iter()
        .zip(d.iter())
        .zip(z.iter())
        .map(|((xi, di), zi)| {
            let r = xi + alpha * di - zi;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `α ↦ ‖x + αd − z‖` in closed form (`α* = ⟨z − x, d⟩/‖d‖²`) and
/// confirms the result on a grid of [`GRID_SAMPLES`] points over [`GRID_RANGE`].
pub fn line_search_oracle(x: &Vector, d: &Vector, z: &Vector) -> Result<LineSearchResult> {
    let d_sq: f64 = d.iter().map(|c| c * c).sum();
    if d_sq == 0.0 {
        return Err(OracleError::ZeroDirection);
    }
    let zx: f64 = z
        .iter()
        .zip(x.iter())
        .zip(d.iter())
        .map(|((zi, xi), di)| (zi - xi) * di)
        .sum();
    let alpha_star = zx / d_sq;
    let min_dist = point_on_line(x, d, alpha_star, z);

    let (lo, hi) = GRID_RANGE;
    let spacing = (hi - lo) / (GRID_SAMPLES - 1) as f64;
    let (grid_alpha, grid_min_dist) = (0..GRID_SAMPLES)
        .map(|j| {
            let a = lo + spacing * j as f64;
            (a, point_on_line(x, d, a, z))
        })
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });

    let scale = 1.0 + grid_min_dist;
    if min_dist > grid_min_dist + 1e-12 * scale {
        return Err(OracleError::GridDisagreement {
            closed: alpha_star,
            grid: grid_alpha,
        });
    }
    let inside = (lo..=hi).contains(&alpha_star);
    if inside && (grid_alpha - alpha_star).abs() > spacing {
        return Err(OracleError::GridDisagreement {
            closed: alpha_star,
            grid: grid_alpha,
        });
    }
    Ok(LineSearchResult {
        alpha_star,
        min_dist,
        grid_alpha,
        grid_min_dist,
    })
}

/// Finds the root of the increasing affine map `t ↦ ⟨a, x + t·a⟩ − b` by
/// bracketing and bisection.
fn root_along_normal(a: &[f64], b: f64, x: &[f64]) -> f64 {
    let phi = |t: f64| -> f64 {
        a.iter()
            .zip(x)
            .map(|(ai, xi)| ai * (xi + t * ai))
            .sum::<f64>()
            - b
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while phi(lo) > 0.0 {
        lo *= 2.0;
    }
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if phi(lo).abs() <= phi(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Nearest point of a hyperplane or half-space, found by reducing the
/// problem to a root search along the constraint normal.
pub fn projection_oracle(constraint: &Cutter, x: &Vector) -> Result<Vector> {
    let (normal, offset, one_sided) = match constraint {
        Cutter::Hyperplane(h) => (h.normal(), h.offset(), false),
        Cutter::HalfSpace(h) => (h.normal(), h.offset(), true),
        other => return Err(OracleError::Unsupported(other.kind_name())),
    };
    if x.dim() != normal.dim() {
        return Err(cutter_core::Error::DimensionMismatch {
            expected: normal.dim(),
            found: x.dim(),
        }
        .into());
    }
    let a = normal.as_slice();
    let value: f64 = a.iter().zip(x.iter()).map(|(ai, xi)| ai * xi).sum();
    if one_sided && value <= offset {
        return Ok(x.clone());
    }
    let t = root_along_normal(a, offset, x.as_slice());
    Ok(Vector::new(
        x.iter().zip(a).map(|(xi, ai)| xi + t * ai).collect(),
    )?)
}

fn partial_composition(op: &CyclicOperator, stages: usize, x: &Vector) -> Result<Vector> {
    let mut u = x.clone();
    for cutter in &op.ops()[..stages] {
        u = cutter.apply(&u)?;
    }
    Ok(u)
}

/// `σ_max` evaluated literally as
/// `Σᵢ ⟨Ux − S_{i−1}x, S_i x − S_{i−1}x⟩ / ‖Ux − x‖²`, with every `S_i x`
/// recomputed from `x`.
pub fn sigma_bruteforce(op: &CyclicOperator, x: &Vector) -> Result<f64> {
    let m = op.len();
    let ux = partial_composition(op, m, x)?;
    let d_sq = ux.dist_sq(x);
    if d_sq == 0.0 || d_sq.sqrt() <= cutter_core::DEFAULT_FIX_TOL * (1.0 + x.norm()) {
        return Err(OracleError::FixedPoint);
    }
    let mut num = 0.0;
    for i in 1..=m {
        let prev = partial_composition(op, i - 1, x)?;
        let cur = partial_composition(op, i, x)?;
        num += (&ux - &prev).dot(&(&cur - &prev));
    }
    Ok(num / d_sq)
}

fn moving_displacement_sq(trace: &SweepTrace) -> Result<f64> {
    let d_sq = trace.displacement_sq();
    if d_sq == 0.0 {
        Err(OracleError::FixedPoint)
    } else {
        Ok(d_sq)
    }
}

/// `σ_max` from a trace via tail sums: `Σᵢ ⟨Ux − uⁱ⁻¹, yⁱ⟩ / ‖Ux − x‖²`.
pub fn sigma_tail_form(trace: &SweepTrace) -> Result<f64> {
    let d_sq = moving_displacement_sq(trace)?;
    let ux = trace.image();
    let num: f64 = trace
        .increments()
        .iter()
        .zip(trace.points())
        .map(|(y, prev)| (ux - prev).dot(y))
        .sum();
    Ok(num / d_sq)
}

/// `σ_max` from a trace via prefix sums: `Σᵢ ⟨uⁱ − x, yⁱ⟩ / ‖Ux − x‖²`.
pub fn sigma_prefix_form(trace: &SweepTrace) -> Result<f64> {
    let d_sq = moving_displacement_sq(trace)?;
    let x = trace.start();
    let num: f64 = trace
        .increments()
        .iter()
        .zip(&trace.points()[1..])
        .map(|(y, cur)| (cur - x).dot(y))
        .sum();
    Ok(num / d_sq)
}

/// The quantities compared in the sweep inequality chain
/// `⟨Ux − x, z − x⟩ ≥ Σ⟨yⁱ + ⋯ + yᵐ, yⁱ⟩ ≥ ½Σ‖yⁱ‖² ≥ ‖Σyⁱ‖²/(2m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepChain {
    pub inner: f64,
    pub tail_sum: f64,
    pub prefix_sum: f64,
    pub half_sq_sum: f64,
    /// `½‖Σyⁱ‖²`.
    pub half_total_sq: f64,
    pub convexity_bound: f64,
}

/// Evaluates the chain terms from raw increments, summing them explicitly.
pub fn sweep_chain(trace: &SweepTrace, z: &Vector) -> SweepChain {
    let ys = trace.increments();
    let m = ys.len();
    let dim = trace.start().dim();
    let sum_range = |r: std::ops::Range<usize>| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for y in &ys[r] {
            acc.iter_mut().zip(y.iter()).for_each(|(a, c)| *a += c);
        }
        acc
    };
    let dot = |a: &[f64], b: &Vector| -> f64 { a.iter().zip(b.iter()).map(|(p, q)| p * q).sum() };

    let total = sum_range(0..m);
    let total_sq: f64 = total.iter().map(|c| c * c).sum();
    let x = trace.start();
    let zx: Vec<f64> = z.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
    let d = trace.displacement();
    let inner: f64 = d.iter().zip(&zx).map(|(a, b)| a * b).sum();
    let tail_sum = (0..m).map(|i| dot(&sum_range(i..m), &ys[i])).sum();
    let prefix_sum = (0..m).map(|i| dot(&sum_range(0..i + 1), &ys[i])).sum();
    let half_sq_sum = 0.5 * ys.iter().map(Vector::norm_sq).sum::<f64>();
    SweepChain {
        inner,
        tail_sum,
        prefix_sum,
        half_sq_sum,
        half_total_sq: 0.5 * total_sq,
        convexity_bound: total_sq / (2.0 * m as f64),
    }
}

/// `|a − b| ≤ tol·max(|a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use cutter_core::{HalfSpace, Hyperplane};

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn hyperplanes(rows: &[(&[f64], f64)]) -> CyclicOperator {
        CyclicOperator::new(
            rows.iter()
                .map(|(a, b)| Hyperplane::new(v(a), *b).unwrap().into())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn line_search_examples() {
        let r = line_search_oracle(&v(&[2.0, 1.0]), &v(&[-1.5, -0.5]), &v(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r.alpha_star, 1.4, epsilon = 1e-15);
        assert!(r.min_dist <= r.grid_min_dist);

        let x = v(&[1.0, -2.0, 0.5]);
        let d = v(&[0.25, 1.0, -1.0]);
        let z = x.add_scaled(2.0, &d);
        let r = line_search_oracle(&x, &d, &z).unwrap();
        assert_abs_diff_eq!(r.alpha_star, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.min_dist, 0.0, epsilon = 1e-15);

        let r = line_search_oracle(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.0, 3.0])).unwrap();
        assert_eq!(r.alpha_star, 0.0);
        assert_eq!(r.min_dist, 3.0);

        assert_eq!(
            line_search_oracle(&v(&[0.0]), &v(&[0.0]), &v(&[1.0])),
            Err(OracleError::ZeroDirection)
        );
    }

    #[test]
    fn projection_oracle_examples() {
        let h: Cutter = Hyperplane::new(v(&[1.0, 1.0]), 2.0).unwrap().into();
        let p = projection_oracle(&h, &v(&[2.0, 2.0])).unwrap();
        assert_abs_diff_eq!(p.as_slice(), [1.0, 1.0].as_slice(), epsilon = 1e-15);

        let s: Cutter = HalfSpace::new(v(&[1.0, 0.0]), 0.0).unwrap().into();
        assert_eq!(
            projection_oracle(&s, &v(&[-1.0, 3.0])).unwrap(),
            v(&[-1.0, 3.0])
        );
        assert_eq!(
            projection_oracle(&s, &v(&[0.0, 3.0])).unwrap(),
            v(&[0.0, 3.0])
        );

        let ball: Cutter = cutter_core::ConvexFunctional::ball(v(&[0.0]), 1.0)
            .unwrap()
            .into();
        assert_eq!(
            projection_oracle(&ball, &v(&[2.0])),
            Err(OracleError::Unsupported("subgradient"))
        );
    }

    #[test]
    fn bruteforce_sigma_examples() {
        let diag = hyperplanes(&[(&[1.0, 0.0], 0.0), (&[1.0, -1.0], 0.0)]);
        assert_abs_diff_eq!(
            sigma_bruteforce(&diag, &v(&[2.0, 1.0])).unwrap(),
            1.4,
            epsilon = 1e-15
        );
        let axes = hyperplanes(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 0.0)]);
        assert_eq!(sigma_bruteforce(&axes, &v(&[1.0, 1.0])).unwrap(), 1.0);
        let single = hyperplanes(&[(&[3.0, -1.0], 2.0)]);
        assert_abs_diff_eq!(
            sigma_bruteforce(&single, &v(&[5.0, 5.0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(
            sigma_bruteforce(&diag, &v(&[0.0, 0.0])),
            Err(OracleError::FixedPoint)
        );
    }

    #[test]
    fn trace_forms_on_diagonal() {
        let diag = hyperplanes(&[(&[1.0, 0.0], 0.0), (&[1.0, -1.0], 0.0)]);
        let t = diag.sweep(&v(&[2.0, 1.0])).unwrap();
        // Σ⟨uⁱ − x, yⁱ⟩ = ⟨(−2,0),(−2,0)⟩ + ⟨(−1.5,−0.5),(0.5,−0.5)⟩ = 4 − 0.5
        assert_abs_diff_eq!(sigma_prefix_form(&t).unwrap(), 3.5 / 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma_tail_form(&t).unwrap(), 1.4, epsilon = 1e-15);
        let chain = sweep_chain(&t, &v(&[0.0, 0.0]));
        assert_abs_diff_eq!(chain.inner, 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.tail_sum, 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.half_sq_sum, 2.25, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.convexity_bound, 0.625, epsilon = 1e-15);
    }
}
