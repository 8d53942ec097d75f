use horolab::geometry::{busemann, BoundaryPoint, PlanePoint};
use horolab::group::{enumerate_words, SchottkyGroup};
use horolab::potential::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn directional(g: &SchottkyGroup) -> Potential {
    make_potential(
        g,
        &PotentialSpec::DirectionalOrbit {
            amplitude: 0.5,
            radius: 1.0,
            kappa: 0.6,
        },
    )
    .unwrap()
}

fn random_point(rng: &mut ChaCha8Rng) -> PlanePoint {
    PlanePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.3..2.5)).unwrap()
}

fn random_boundary(rng: &mut ChaCha8Rng) -> BoundaryPoint {
    BoundaryPoint::from_real(rng.gen_range(-8.0..8.0))
}

#[test]
fn rho_of_one_is_busemann_and_rho_of_zero_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let one = Potential::constant(1.0);
    let zero = Potential::zero();
    for _ in 0..200 {
        let (x, y, xi) = (random_point(&mut rng), random_point(&mut rng), random_boundary(&mut rng));
        let r = rho_cocycle(&one, &xi, x, y, TOL).unwrap();
        assert!((r - busemann(&xi, x, y)).abs() < TOL);
        assert_eq!(rho_cocycle(&zero, &xi, x, y, TOL).unwrap(), 0.0);
    }
}

#[test]
fn rho_cocycle_identity_and_invariance() {
    let g = SchottkyGroup::standard();
    let f = directional(&g);
    let words: Vec<_> = enumerate_words(&g, 3).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let (x, y, z) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let xi = random_boundary(&mut rng);
        let a = rho_cocycle(&f, &xi, x, y, TOL).unwrap();
        let b = rho_cocycle(&f, &xi, y, z, TOL).unwrap();
        let c = rho_cocycle(&f, &xi, x, z, TOL).unwrap();
        worst = worst.max((a + b - c).abs());
        let w = &words[rng.gen_range(0..words.len())].matrix;
        let moved = rho_cocycle(&f, &w.apply_boundary(&xi), w.apply_point(x), w.apply_point(y), TOL).unwrap();
        worst = worst.max((moved - a).abs());
    }
    assert!(worst < 3.0 * TOL, "worst {worst}");
}

#[test]
fn group_cocycle_identity() {
    let g = SchottkyGroup::standard();
    let f = directional(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let a = g.letter(rng.gen_range(0..4));
        let b = g.letter(rng.gen_range(0..4));
        let xi = random_boundary(&mut rng);
        let lhs = c_cocycle(&f, &a.compose(b), &xi, TOL).unwrap();
        let rhs = c_cocycle(&f, a, &b.apply_boundary(&xi), TOL).unwrap() + c_cocycle(&f, b, &xi, TOL).unwrap();
        assert!((lhs - rhs).abs() < 3.0 * TOL, "{lhs} {rhs}");
    }
}
