//! Problem definitions, the line-oriented problem file format, and seeded
//! generation of consistent instances with a known solution.
//!
//! ```text
//! # comment
//! dim <n>
//! eq      a1 … an b     # ⟨a, x⟩ = b
//! ineq    a1 … an b     # ⟨a, x⟩ ≤ b
//! affine  a1 … an b     # subgradient projector for ⟨a, x⟩ − b ≤ 0
//! ball    c1 … cn r     # subgradient projector for ‖x − c‖² − r² ≤ 0
//! witness z1 … zn       # optional, at most once
//! ```
//!
//! Constraint order in the file is the order of the cyclic sweep.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cyclic::CyclicOperator;
use crate::error::{Error, Result};
use crate::operators::{ConvexFunctional, Cutter, HalfSpace, Hyperplane};
use crate::vector::Vector;

/// Tolerance for checking a declared witness against its constraints.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    LinearEq,
    LinearIneq,
    ConvexIneq,
    Mixed,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::LinearEq => "eq",
            ProblemKind::LinearIneq => "ineq",
            ProblemKind::ConvexIneq => "convex",
            ProblemKind::Mixed => "mixed",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq" => Ok(ProblemKind::LinearEq),
            "ineq" => Ok(ProblemKind::LinearIneq),
            "convex" => Ok(ProblemKind::ConvexIneq),
            "mixed" => Ok(ProblemKind::Mixed),
            _ => Err(Error::InvalidArgument(format!(
                "unknown problem kind `{s}`"
            ))),
        }
    }
}

/// Source data for one constraint; each maps onto one cutter.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Eq(Hyperplane),
    Ineq(HalfSpace),
    /// `⟨a, x⟩ − b ≤ 0`, handled by a subgradient projector.
    Affine {
        normal: Vector,
        offset: f64,
    },
    /// `‖x − center‖² − radius² ≤ 0`, handled by a subgradient projector.
    Ball {
        center: Vector,
        radius: f64,
    },
}

impl Constraint {
    pub fn dim(&self) -> usize {
        match self {
            Constraint::Eq(h) => h.dim(),
            Constraint::Ineq(h) => h.dim(),
            Constraint::Affine { normal, .. } => normal.dim(),
            Constraint::Ball { center, .. } => center.dim(),
        }
    }

    pub fn to_cutter(&self) -> Result<Cutter> {
        Ok(match self {
            Constraint::Eq(h) => Cutter::Hyperplane(h.clone()),
            Constraint::Ineq(h) => Cutter::HalfSpace(h.clone()),
            Constraint::Affine { normal, offset } => {
                ConvexFunctional::affine(normal.clone(), *offset)?.into()
            }
            Constraint::Ball { center, radius } => {
                ConvexFunctional::ball(center.clone(), *radius)?.into()
            }
        })
    }

    /// Feasibility of `x` within [`WITNESS_TOL`].
    pub fn is_satisfied(&self, x: &Vector) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            Constraint::Eq(h) => h.residual(x).abs() <= WITNESS_TOL * (1.0 + h.offset().abs()),
            Constraint::Ineq(h) => h.residual(x) <= WITNESS_TOL,
            Constraint::Affine { normal, offset } => normal.dot(x) - offset <= WITNESS_TOL,
            Constraint::Ball { center, radius } => {
                x.dist_sq(center) - radius * radius <= WITNESS_TOL
            }
        }
    }

    fn validate(&self) -> Result<()> {
        self.to_cutter().map(|_| ())
    }

    fn keyword(&self) -> &'static str {
        match self {
            Constraint::Eq(_) => "eq",
            Constraint::Ineq(_) => "ineq",
            Constraint::Affine { .. } => "affine",
            Constraint::Ball { .. } => "ball",
        }
    }
}

/// A feasibility problem: find a point satisfying every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    dim: usize,
    constraints: Vec<Constraint>,
    witness: Option<Vector>,
}

impl Problem {
    /// Builds and validates a problem. An empty constraint list is accepted
    /// here but rejected by [`Problem::validate`].
    pub fn new(dim: usize, constraints: Vec<Constraint>, witness: Option<Vector>) -> Result<Self> {
        let p = Self {
            dim,
            constraints,
            witness,
        };
        p.check_contents()?;
        Ok(p)
    }

    fn check_contents(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.dim() != self.dim {
                return Err(Error::Validation(format!(
                    "constraint {} has dimension {}, expected {}",
                    i + 1,
                    c.dim(),
                    self.dim
                )));
            }
            c.validate()
                .map_err(|e| Error::Validation(format!("constraint {}: {e}", i + 1)))?;
        }
        if let Some(w) = &self.witness {
            if w.dim() != self.dim {
                return Err(Error::Validation(format!(
                    "witness has dimension {}, expected {}",
                    w.dim(),
                    self.dim
                )));
            }
            if let Some(i) = self.constraints.iter().position(|c| !c.is_satisfied(w)) {
                return Err(Error::Validation(format!(
                    "witness violates constraint {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Full validation, including `m ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::Validation("problem has no constraints".into()));
        }
        self.check_contents()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn witness(&self) -> Option<&Vector> {
        self.witness.as_ref()
    }

    pub fn kind(&self) -> ProblemKind {
        let all = |f: fn(&Constraint) -> bool| self.constraints.iter().all(f);
        if self.constraints.is_empty() {
            ProblemKind::Mixed
        } else if all(|c| matches!(c, Constraint::Eq(_))) {
            ProblemKind::LinearEq
        } else if all(|c| matches!(c, Constraint::Ineq(_))) {
            ProblemKind::LinearIneq
        } else if all(|c| matches!(c, Constraint::Affine { .. } | Constraint::Ball { .. })) {
            ProblemKind::ConvexIneq
        } else {
            ProblemKind::Mixed
        }
    }

    /// The cyclic composition of the constraints' cutters in file order.
    pub fn to_operator(&self) -> Result<CyclicOperator> {
        self.validate()?;
        CyclicOperator::new(
            self.constraints
                .iter()
                .map(Constraint::to_cutter)
                .collect::<Result<_>>()?,
        )
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_numbers(line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(line, format!("`{f}` is not a finite number")))
        })
        .collect()
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let mut dim: Option<usize> = None;
    let mut constraints = Vec::new();
    let mut witness: Option<Vector> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let keyword = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();

        let Some(n) = dim else {
            if keyword != "dim" {
                return Err(parse_error(
                    line,
                    "expected `dim <n>` before any other line",
                ));
            }
            let [value] = rest.as_slice() else {
                return Err(parse_error(line, "`dim` takes exactly one value"));
            };
            let n = value
                .parse::<usize>()
                .map_err(|_| parse_error(line, format!("`{value}` is not a dimension")))?;
            if n == 0 {
                return Err(parse_error(line, "dimension must be positive"));
            }
            dim = Some(n);
            continue;
        };

        let expected = match keyword {
            "eq" | "ineq" | "affine" | "ball" => n + 1,
            "witness" => n,
            "dim" => return Err(parse_error(line, "duplicate `dim` line")),
            other => return Err(parse_error(line, format!("unknown keyword `{other}`"))),
        };
        if rest.len() != expected {
            return Err(parse_error(
                line,
                format!(
                    "`{keyword}` expects {expected} values, found {}",
                    rest.len()
                ),
            ));
        }
        let mut values = parse_numbers(line, &rest)?;
        let validation = |e: Error| Error::Validation(format!("line {line}: {e}"));
        if keyword == "witness" {
            if witness.is_some() {
                return Err(parse_error(line, "duplicate `witness` line"));
            }
            witness = Some(Vector::new(values).map_err(validation)?);
            continue;
        }
        let scalar = values.pop().expect("n + 1 values");
        let vector = Vector::new(values).map_err(validation)?;
        let constraint = match keyword {
            "eq" => Constraint::Eq(Hyperplane::new(vector, scalar).map_err(validation)?),
            "ineq" => Constraint::Ineq(HalfSpace::new(vector, scalar).map_err(validation)?),
            "affine" => Constraint::Affine {
                normal: vector,
                offset: scalar,
            },
            _ => Constraint::Ball {
                center: vector,
                radius: scalar,
            },
        };
        constraint.validate().map_err(validation)?;
        constraints.push(constraint);
    }

    let dim = dim.ok_or_else(|| parse_error(text.lines().count().max(1), "missing `dim` line"))?;
    let problem = Problem {
        dim,
        constraints,
        witness,
    };
    problem.validate()?;
    Ok(problem)
}

fn push_scalar(out: &mut String, v: f64) {
    // 17 significant digits reproduce every f64 exactly.
    let _ = write!(out, " {v:.16e}");
}

fn push_line(out: &mut String, keyword: &str, coords: &Vector, scalar: Option<f64>) {
    out.push_str(keyword);
    for &c in coords.iter() {
        push_scalar(out, c);
    }
    if let Some(s) = scalar {
        push_scalar(out, s);
    }
    out.push('\n');
}

/// Renders a problem in the file format. Fails on invalid problems,
/// including problems without constraints.
pub fn serialize_problem(p: &Problem) -> Result<String> {
    p.validate()?;
    let mut out = format!("dim {}\n", p.dim);
    for c in &p.constraints {
        let (coords, scalar) = match c {
            Constraint::Eq(h) => (h.normal(), h.offset()),
            Constraint::Ineq(h) => (h.normal(), h.offset()),
            Constraint::Affine { normal, offset } => (normal, *offset),
            Constraint::Ball { center, radius } => (center, *radius),
        };
        push_line(&mut out, c.keyword(), coords, Some(scalar));
    }
    if let Some(w) = &p.witness {
        push_line(&mut out, "witness", w, None);
    }
    Ok(out)
}

/// Parameters for a seeded random instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub dim: usize,
    pub m: usize,
    pub kind: ProblemKind,
    /// Row-angle control in `[0, 1)`: 0 gives orthogonal rows (as far as the
    /// dimension allows), values near 1 give nearly parallel rows.
    pub conditioning: f64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument(
                "need at least one constraint".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.conditioning) {
            return Err(Error::InvalidArgument(format!(
                "conditioning must lie in [0, 1), got {}",
                self.conditioning
            )));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    (n > 1e-12).then(|| v.into_iter().map(|c| c / n).collect())
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        if let Some(u) = unit(gaussian(rng, dim)) {
            return u;
        }
    }
}

/// Unit vector orthogonal to `against` (each entry assumed unit length).
fn orthogonal_unit(rng: &mut ChaCha8Rng, dim: usize, against: &[&[f64]]) -> Vec<f64> {
    loop {
        let mut g = unit_gaussian(rng, dim);
        for b in against {
            let p: f64 = g.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            g.iter_mut().zip(b.iter()).for_each(|(x, y)| *x -= p * y);
        }
        if let Some(q) = unit(g) {
            return q;
        }
    }
}

/// Unit row directions. With `conditioning = 0` the rows are orthonormal
/// within each block of `dim` rows. Otherwise row `i` is
/// `cos θ·e + sin θ·wᵢ` with `θ = (1 − conditioning)·π/2`, a shared unit
/// vector `e` and `wᵢ` orthonormal within blocks of `e⊥`, so every pair in a
/// block meets at the same angle `arccos(cos²θ)`. When `e⊥` is a line the
/// rows alternate between its two directions. In one dimension every row is
/// `±1`.
fn row_directions(rng: &mut ChaCha8Rng, dim: usize, m: usize, conditioning: f64) -> Vec<Vec<f64>> {
    let common = unit_gaussian(rng, dim);
    let orthonormal = conditioning == 0.0 || dim == 1;
    let free = if orthonormal { dim } else { dim - 1 };
    let theta = (1.0 - conditioning) * std::f64::consts::FRAC_PI_2;
    let mut rows = Vec::with_capacity(m);
    let mut block: Vec<Vec<f64>> = Vec::with_capacity(free);
    let mut first_w = Vec::new();
    while rows.len() < m {
        if block.len() == free {
            block.clear();
        }
        if orthonormal {
            let against: Vec<&[f64]> = block.iter().map(Vec::as_slice).collect();
            let q = orthogonal_unit(rng, dim, &against);
            block.push(q.clone());
            rows.push(q);
            continue;
        }
        let w = match (free, rows.len()) {
            (1, k) if k > 0 => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                first_w.iter().map(|c| sign * c).collect()
            }
            _ => {
                let mut against: Vec<&[f64]> = vec![&common];
                against.extend(block.iter().map(Vec::as_slice));
                orthogonal_unit(rng, dim, &against)
            }
        };
        if rows.is_empty() {
            first_w = w.clone();
        }
        let (c, s) = (theta.cos(), theta.sin());
        let row = common
            .iter()
            .zip(&w)
            .map(|(e, wi)| c * e + s * wi)
            .collect();
        block.push(w);
        rows.push(unit(row).unwrap_or_else(|| common.clone()));
    }
    rows
}

/// Draws a consistent problem whose witness `z ∈ [−1, 1]^dim` lies in every
/// constraint set. Deterministic in `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim;
    let z = Vector::new((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())?;
    let directions = row_directions(&mut rng, dim, spec.m, spec.conditioning);

    let mut constraints = Vec::with_capacity(spec.m);
    for dir in directions {
        let kind = match spec.kind {
            ProblemKind::LinearEq => 0,
            ProblemKind::LinearIneq => 1,
            ProblemKind::ConvexIneq => 3,
            ProblemKind::Mixed => rng.random_range(0..4),
        };
        let constraint = if kind == 3 {
            let reach: f64 = rng.random_range(0.5..2.0);
            let center = z.add_scaled(reach, &Vector::new(dir)?);
            let radius = z.dist(&center) + rng.random_range(0.05..0.5);
            Constraint::Ball { center, radius }
        } else {
            let scale: f64 = rng.random_range(0.5..2.0);
            let normal = Vector::new(dir.into_iter().map(|c| c * scale).collect())?;
            let at_witness = normal.dot(&z);
            match kind {
                0 => Constraint::Eq(Hyperplane::new(normal, at_witness)?),
                1 => {
                    let slack = rng.random_range(0.0..0.5);
                    Constraint::Ineq(HalfSpace::new(normal, at_witness + slack)?)
                }
                _ => {
                    let slack = rng.random_range(0.0..0.5);
                    Constraint::Affine {
                        normal,
                        offset: at_witness + slack,
                    }
                }
            }
        };
        constraints.push(constraint);
    }
    let problem = Problem::new(dim, constraints, Some(z))?;
    problem.validate()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_diagonal_example() {
        let p = parse_problem("dim 2\neq 1 0 0\neq 1 -1 0\nwitness 0 0\n").unwrap();
        assert_eq!(p.kind(), ProblemKind::LinearEq);
        assert_eq!(p.constraints().len(), 2);
        assert_eq!(p.witness(), Some(&Vector::from_slice(&[0.0, 0.0]).unwrap()));
    }

    #[test]
    fn parses_inequalities_and_balls() {
        let p = parse_problem("# orthant\ndim 2\nineq 1 0 0\n\nineq 0 1 0 # second\n").unwrap();
        assert_eq!(p.kind(), ProblemKind::LinearIneq);
        assert!(p.witness().is_none());

        let p = parse_problem("dim 2\nball 0 0 1\nball 0 0 2\n").unwrap();
        assert_eq!(p.kind(), ProblemKind::ConvexIneq);
        let op = p.to_operator().unwrap();
        assert!(matches!(op.ops()[0], Cutter::Subgradient(_)));

        let p = parse_problem("dim 1\naffine 1 0\neq 1 0\n").unwrap();
        assert_eq!(p.kind(), ProblemKind::Mixed);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("eq 1 0 0\n", 1),
            ("dim 2\neq 1 0\n", 2),
            ("dim 2\n\neq 1 x 0\n", 3),
            ("dim 2\nfoo 1 2 3\n", 2),
            ("dim 0\n", 1),
            ("dim 2\ndim 2\n", 2),
            ("dim 2\neq 1 0 0\nwitness 0 0\nwitness 0 0\n", 4),
            ("dim 2\neq 1 inf 0\n", 2),
        ];
        for (text, line) in cases {
            match parse_problem(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
        assert!(matches!(parse_problem(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            parse_problem("dim 2\neq 0 0 1\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_problem("dim 2\nball 0 0 -1\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_problem("dim 2\neq 1 0 0\nwitness 1 0\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_problem("dim 2\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn serialize_rejects_empty_problems() {
        let p = Problem::new(2, vec![], None).unwrap();
        assert!(matches!(serialize_problem(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let text = "dim 2\neq 1 0 0\neq 1 -1 0\nwitness 0 0\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(parse_problem(&serialize_problem(&p).unwrap()).unwrap(), p);

        let spec = GeneratorSpec {
            seed: 11,
            dim: 3,
            m: 4,
            kind: ProblemKind::ConvexIneq,
            conditioning: 0.3,
        };
        let p = generate(&spec).unwrap();
        assert_eq!(parse_problem(&serialize_problem(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        for kind in [
            ProblemKind::LinearEq,
            ProblemKind::LinearIneq,
            ProblemKind::ConvexIneq,
            ProblemKind::Mixed,
        ] {
            let spec = GeneratorSpec {
                seed: 7,
                dim: 4,
                m: 6,
                kind,
                conditioning: 0.5,
            };
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(
                serialize_problem(&a).unwrap(),
                serialize_problem(&b).unwrap()
            );
            let w = a.witness().unwrap();
            assert!(a.constraints().iter().all(|c| c.is_satisfied(w)));
            assert!(a.to_operator().unwrap().contains(w));
            if kind != ProblemKind::Mixed {
                assert_eq!(a.kind(), kind);
            }
        }
    }

    #[test]
    fn zero_conditioning_gives_orthogonal_rows() {
        let spec = GeneratorSpec {
            seed: 3,
            dim: 5,
            m: 5,
            kind: ProblemKind::LinearEq,
            conditioning: 0.0,
        };
        let p = generate(&spec).unwrap();
        let rows: Vec<&Vector> = p
            .constraints()
            .iter()
            .map(|c| match c {
                Constraint::Eq(h) => h.normal(),
                _ => unreachable!(),
            })
            .collect();
        for i in 0..rows.len() {
            for j in 0..i {
                let cos = rows[i].dot(rows[j]) / (rows[i].norm() * rows[j].norm());
                assert!(cos.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_generator_specs() {
        let base = GeneratorSpec {
            seed: 1,
            dim: 2,
            m: 2,
            kind: ProblemKind::LinearEq,
            conditioning: 0.0,
        };
        assert!(generate(&GeneratorSpec { dim: 0, ..base }).is_err());
        assert!(generate(&GeneratorSpec { m: 0, ..base }).is_err());
        assert!(generate(&GeneratorSpec {
            conditioning: 1.0,
            ..base
        })
        .is_err());
    }
}
