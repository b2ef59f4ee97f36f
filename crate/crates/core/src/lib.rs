//! Convex feasibility through cyclic compositions of cutter operators with
//! extrapolated step sizes.
//!
//! A feasibility problem `find x ∈ C₁ ∩ ⋯ ∩ C_m` is attacked by sweeping
//! through cutters `U_i` whose fixed-point sets are the `C_i`, then moving
//! along `Ux − x` by a step `λσ(x)` that can be computed from the sweep alone.

pub mod cyclic;
pub mod error;
pub mod operators;
pub mod problem;
pub mod solver;
pub mod vector;

pub use cyclic::{
    apply_policy, extrapolated_step, extrapolated_step_with_tol, floor_step, sigma_halfspace,
    sigma_kaczmarz, sigma_max_generic, sigma_subgrad, sweep, CyclicOperator, Stage, StageKind,
    Step, StepPolicy, SweepTrace, DEFAULT_FIX_TOL,
};
pub use error::{Error, Result};
pub use operators::{
    cutter_gap, generalized_relaxation, project_halfspace, project_hyperplane, relax,
    subgradient_project, ConvexFunctional, CustomCutter, Cutter, HalfSpace, Hyperplane,
};
pub use problem::{
    generate, parse_problem, serialize_problem, Constraint, GeneratorSpec, Problem, ProblemKind,
};
pub use solver::{
    decrease_certificate, fejer_certificate, lambda_at, solve, IterationRecord, LambdaSchedule,
    SolveConfig, SolveResult, SolveStatus,
};
pub use vector::Vector;
