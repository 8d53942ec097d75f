use horolab::geometry::UnitTangentHopf;
use horolab::gibbs::{GibbsOptions, GibbsSystem};
use horolab::group::SchottkyGroup;
use horolab::means::*;
use horolab::potential::Potential;
use proptest::prelude::*;
use std::sync::OnceLock;

fn sys() -> &'static GibbsSystem {
    static SYS: OnceLock<GibbsSystem> = OnceLock::new();
    SYS.get_or_init(|| {
        let opts = GibbsOptions {
            max_len: 9,
            rho_tol: 1e-4,
        };
        GibbsSystem::build(&SchottkyGroup::standard(), &Potential::zero(), opts).unwrap()
    })
}

fn vectors(n: usize, seed: u64) -> Vec<UnitTangentHopf> {
    let v = nonwandering_samples(sys(), n, seed);
    assert_eq!(v.len(), n);
    v
}

/// Minimal cover size by brute force over subsets of centers.
fn exhaustive_cover(pos: &[f64], rho: f64) -> usize {
    let n = pos.len();
    (1..=n)
        .find(|&k| {
            (0u32..1 << n).filter(|m| m.count_ones() as usize == k).any(|mask| {
                pos.iter()
                    .all(|&p| (0..n).any(|c| mask >> c & 1 == 1 && (p - pos[c]).abs() < rho))
            })
        })
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_cover_is_minimal(mut pos in prop::collection::vec(-5.0..5.0f64, 1..10), rho in 0.1..3.0f64) {
        pos.sort_by(f64::total_cmp);
        prop_assert_eq!(cover_count(&pos, 0..pos.len(), rho), exhaustive_cover(&pos, rho));
    }
}

#[test]
fn windowed_leaf_matches_a_full_scan() {
    let s = sys();
    for u in vectors(8, 1) {
        let full = Leaf::new(s, &u, f64::INFINITY);
        for r in [0.5, 2.0, 8.0] {
            let window = Leaf::new(s, &u, r);
            let range = full.range(0.0, r);
            assert_eq!(window.pos, full.pos[range.clone()]);
            let m = full.range_mass(range);
            assert!((window.range_mass(0..window.len()) - m).abs() <= 1e-12 * m.max(1e-300));
        }
    }
}

#[test]
fn mean_of_one_is_one_and_pushing_commutes() {
    let s = sys();
    let dict = TestDictionary::standard(&s.group).unwrap();
    for u in vectors(4, 2) {
        assert!((mean(s, &u, 3.0, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        for t in [0.5, 1.5] {
            for j in 1..dict.len() {
                let a = pushed_mean(s, &u, 3.0, t, dict.function(j)).unwrap();
                let b = mean_of_pushed(s, &u, 3.0, t, dict.function(j)).unwrap();
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} {b}");
            }
        }
    }
}

#[test]
fn ball_flow_matches_the_flowed_ball() {
    let s = sys();
    for u in vectors(4, 3) {
        let ball = HoroBall::new(u, 2.0).unwrap();
        let moved = ball.flow(1.0);
        let a = ball_mass(s, &moved);
        let b = ball_mass(s, &ball) * s.delta().exp();
        assert!((a - b).abs() < 1e-9 * a, "{a} {b}");
    }
}

#[test]
fn dictionary_functions_are_group_invariant() {
    let s = sys();
    let dict = TestDictionary::standard(&s.group).unwrap();
    for v in vectors(20, 4) {
        for g in s.group.generators() {
            let w = g.apply_hopf(&v);
            for j in 0..dict.len() {
                let (a, b) = (dict.eval(j, &v), dict.eval(j, &w));
                assert!((a - b).abs() < 1e-9, "{} at {v:?}: {a} vs {b}", dict.name(j));
            }
        }
    }
}

#[test]
fn psi_eps_sandwiches_the_function() {
    let s = sys();
    let dict = TestDictionary::standard(&s.group).unwrap();
    for w in vectors(10, 5) {
        for j in 0..dict.len() {
            let psi = dict.function(j);
            let (lo, hi) = (psi_eps(&psi, 0.1, &w, -1.0), psi_eps(&psi, 0.1, &w, 1.0));
            assert!(lo <= psi(&w) && psi(&w) <= hi);
            // A smaller cell gives a tighter sandwich.
            assert!(psi_eps(&psi, 0.05, &w, 1.0) <= hi && psi_eps(&psi, 0.05, &w, -1.0) >= lo);
        }
    }
}

#[test]
fn stable_neighbours_lie_at_the_prescribed_distance() {
    for w in vectors(5, 6) {
        let nb = stable_neighbours(&w, 0.2, 4);
        assert_eq!(nb.len(), 9);
        for v in &nb[1..] {
            let d = horolab::geometry::hamenstadt_distance(&w, v, true).unwrap();
            assert!(d > 0.0 && d < 0.2);
        }
    }
}

#[test]
fn vitali_cover_is_small() {
    let s = sys();
    for u in vectors(5, 7) {
        for r in [2.0, 8.0] {
            let n = vitali_check(s, &u, r, 50).unwrap();
            assert!((1..=8).contains(&n), "{n}");
        }
    }
}
