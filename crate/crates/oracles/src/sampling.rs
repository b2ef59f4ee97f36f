//! Seeded random cutters with a known common fixed point, for property and
//! acceptance tests.

use cutter_core::{ConvexFunctional, Cutter, CyclicOperator, HalfSpace, Hyperplane, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Hyperplane,
    HalfSpace,
    Affine,
    Ball,
}

impl SampleKind {
    pub const ALL: [SampleKind; 4] = [
        SampleKind::Hyperplane,
        SampleKind::HalfSpace,
        SampleKind::Affine,
        SampleKind::Ball,
    ];
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    Vector::new((0..dim).map(|_| rng.sample(StandardNormal)).collect()).expect("finite")
}

pub fn uniform_vector<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Vector {
    Vector::new(
        (0..dim)
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect(),
    )
    .expect("finite")
}

fn nonzero_gaussian<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let g = gaussian_vector(rng, dim);
        if g.norm() > 1e-3 {
            return g;
        }
    }
}

/// A random cutter of `kind` whose fixed-point set contains `z`.
pub fn cutter_through<R: Rng>(rng: &mut R, kind: SampleKind, z: &Vector) -> Cutter {
    let dim = z.dim();
    let normal = nonzero_gaussian(rng, dim);
    let at_z = normal.dot(z);
    match kind {
        SampleKind::Hyperplane => Hyperplane::new(normal, at_z).unwrap().into(),
        SampleKind::HalfSpace => {
            let slack = if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            };
            HalfSpace::new(normal, at_z + slack).unwrap().into()
        }
        SampleKind::Affine => {
            let slack = if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            };
            ConvexFunctional::affine(normal, at_z + slack)
                .unwrap()
                .into()
        }
        SampleKind::Ball => {
            let center = z.add_scaled(rng.random_range(0.2..2.0) / normal.norm(), &normal);
            let radius = z.dist(&center) * (1.0 + 1e-9) + rng.random_range(0.0..0.5);
            ConvexFunctional::ball(center, radius).unwrap().into()
        }
    }
}

/// A random point of `Fix T` for a built-in cutter.
pub fn fixed_point_of<R: Rng>(rng: &mut R, t: &Cutter, spread: f64) -> Vector {
    let dim = t.dim();
    let p = uniform_vector(rng, dim, spread);
    match t {
        Cutter::Hyperplane(h) => {
            cutter_core::project_hyperplane(h, &p).expect("matching dimension")
        }
        Cutter::HalfSpace(h) => reflect_inside(h.normal(), h.offset(), p),
        Cutter::Subgradient(f) => {
            if let Some((normal, offset)) = f.as_affine() {
                reflect_inside(normal, offset, p)
            } else if let Some((center, radius)) = f.as_ball() {
                let dir = nonzero_gaussian(rng, dim);
                let r = radius * rng.random_range(0.0..0.999);
                center.add_scaled(r / dir.norm(), &dir)
            } else {
                panic!("no sampler for custom functionals")
            }
        }
        Cutter::Custom(_) => panic!("no sampler for custom cutters"),
    }
}

fn reflect_inside(normal: &Vector, offset: f64, p: Vector) -> Vector {
    let r = normal.dot(&p) - offset;
    if r <= 0.0 {
        p
    } else {
        p.add_scaled(-2.0 * r / normal.norm_sq(), normal)
    }
}

/// A random consistent cyclic system with `m` stages drawn from `kinds`,
/// together with a point `z` of the intersection.
pub fn random_system<R: Rng>(
    rng: &mut R,
    dim: usize,
    m: usize,
    kinds: &[SampleKind],
) -> (CyclicOperator, Vector) {
    let z = uniform_vector(rng, dim, 1.0);
    let ops = (0..m)
        .map(|_| {
            let kind = kinds[rng.random_range(0..kinds.len())];
            cutter_through(rng, kind, &z)
        })
        .collect();
    (CyclicOperator::new(ops).expect("consistent dimensions"), z)
}
