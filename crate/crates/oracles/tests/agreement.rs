//! Production code checked against the independent oracles on seeded
//! random instances.

use cutter_core::{
    project_halfspace, project_hyperplane, sigma_kaczmarz, sigma_max_generic, Cutter, HalfSpace,
    Hyperplane, Vector, DEFAULT_FIX_TOL,
};
use cutter_oracles::sampling::{random_system, uniform_vector, SampleKind};
use cutter_oracles::{
    line_search_oracle, projection_oracle, rel_close, sigma_bruteforce, sigma_prefix_form,
    sigma_tail_form,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 1000;

fn random_normal(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let a = uniform_vector(rng, dim, 2.0);
        if a.norm() > 0.1 {
            return a;
        }
    }
}

#[test]
fn hyperplane_projection_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..INSTANCES {
        let dim = rng.random_range(1..12);
        let h = Hyperplane::new(random_normal(&mut rng, dim), rng.random_range(-3.0..3.0)).unwrap();
        let x = uniform_vector(&mut rng, dim, 5.0);
        let fast = project_hyperplane(&h, &x).unwrap();
        let slow = projection_oracle(&Cutter::from(h), &x).unwrap();
        assert!(
            fast.dist(&slow) <= 1e-9 * (1.0 + x.norm()),
            "{fast} vs {slow}"
        );
    }
}

#[test]
fn halfspace_projection_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..INSTANCES {
        let dim = rng.random_range(1..12);
        let h = HalfSpace::new(random_normal(&mut rng, dim), rng.random_range(-3.0..3.0)).unwrap();
        let x = uniform_vector(&mut rng, dim, 5.0);
        let fast = project_halfspace(&h, &x).unwrap();
        let slow = projection_oracle(&Cutter::from(h), &x).unwrap();
        assert!(
            fast.dist(&slow) <= 1e-9 * (1.0 + x.norm()),
            "{fast} vs {slow}"
        );
    }
}

#[test]
fn sigma_matches_bruteforce_for_every_kind() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for kind in SampleKind::ALL {
        let mut checked = 0;
        while checked < INSTANCES {
            let dim = rng.random_range(1..12);
            let m = rng.random_range(1..9);
            let (op, _) = random_system(&mut rng, dim, m, &[kind]);
            let x = uniform_vector(&mut rng, dim, 5.0);
            let t = op.sweep(&x).unwrap();
            if t.is_fixed(DEFAULT_FIX_TOL) {
                continue;
            }
            let production = sigma_max_generic(&t).unwrap();
            for other in [
                sigma_bruteforce(&op, &x).unwrap(),
                sigma_tail_form(&t).unwrap(),
                sigma_prefix_form(&t).unwrap(),
            ] {
                assert!(
                    rel_close(production, other, 1e-9),
                    "{kind:?}: {production} vs {other}"
                );
            }
            checked += 1;
        }
    }
}

#[test]
fn kaczmarz_sigma_is_the_exact_line_minimiser() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..INSTANCES {
        let dim = rng.random_range(2..12);
        let m = rng.random_range(1..9);
        let (op, z) = random_system(&mut rng, dim, m, &[SampleKind::Hyperplane]);
        let rows: Vec<Hyperplane> = op
            .ops()
            .iter()
            .map(|c| match c {
                Cutter::Hyperplane(h) => h.clone(),
                _ => unreachable!(),
            })
            .collect();
        let x = uniform_vector(&mut rng, dim, 5.0);
        let t = op.sweep(&x).unwrap();
        if t.is_fixed(DEFAULT_FIX_TOL) {
            continue;
        }
        let sigma = sigma_kaczmarz(&t, &rows).unwrap();
        let ls = line_search_oracle(&x, &t.displacement(), &z).unwrap();
        assert!(
            (ls.alpha_star - sigma).abs() <= 1e-6 * sigma.max(1.0),
            "{} vs {sigma}",
            ls.alpha_star
        );
    }
}
