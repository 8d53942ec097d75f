use horolab::geometry::{hyp_distance, PlanePoint};
use horolab::group::*;
use proptest::prelude::*;

fn reduced_letters(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 1..=max).prop_map(|raw| {
        let mut out: Vec<u8> = Vec::new();
        for l in raw {
            let l = if out.last() == Some(&(l ^ 1)) { l ^ 2 } else { l };
            out.push(l);
        }
        out
    })
}

#[test]
fn enumeration_matches_the_word_count() {
    let g = SchottkyGroup::standard();
    for l in 0..=7 {
        assert_eq!(enumerate_words(&g, l).count(), word_count(2, l));
        assert_eq!(WordTree::build(&g, l).len(), word_count(2, l));
    }
    assert_eq!(word_count(2, 12), 1_062_881);
}

#[test]
fn tree_shells_hold_words_of_one_length() {
    let g = SchottkyGroup::standard();
    let tree = WordTree::build(&g, 5);
    for l in 0..=5 {
        for node in tree.shell(l) {
            assert_eq!(tree.word_length(node), l);
            let w = tree.word(node);
            assert_eq!(w.letters, tree.letters(node));
            if l > 1 {
                assert_eq!(tree.letters(tree.ancestor(node, l - 1)), w.letters[..l - 1]);
            }
        }
    }
}

#[test]
fn ping_pong_maps_outside_into_the_disk() {
    let g = SchottkyGroup::standard();
    let z = PlanePoint::new(0.3, 1.2).unwrap();
    assert!(g.fundamental_domain_contains(z));
    for l in 0..4u8 {
        let image = g.letter(l).apply_point(z);
        assert_eq!(g.disk_containing(image), Some(l));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cylinders_are_nested_and_siblings_disjoint(letters in reduced_letters(8)) {
        let g = SchottkyGroup::standard();
        let w = ReducedWord::from_letters(&g, &letters).unwrap();
        let (lo, hi) = g.cylinder_interval(&w).unwrap();
        prop_assert!(lo < hi);
        if letters.len() > 1 {
            let parent = ReducedWord::from_letters(&g, &letters[..letters.len() - 1]).unwrap();
            let (plo, phi) = g.cylinder_interval(&parent).unwrap();
            prop_assert!(plo <= lo && hi <= phi);
            let last = *letters.last().unwrap();
            for l in (0..4u8).filter(|&l| l != last && l != letters[letters.len() - 2] ^ 1) {
                let (slo, shi) = g.image_interval(&parent.matrix, l);
                prop_assert!(shi < lo || slo > hi);
            }
        }
    }

    #[test]
    fn coding_recovers_the_word_of_a_fixed_point(letters in reduced_letters(5)) {
        let g = SchottkyGroup::standard();
        let w = ReducedWord::from_letters(&g, &letters).unwrap();
        prop_assume!(w.is_cyclically_reduced());
        let xi = g.attracting_fixed_point(&w).unwrap();
        let code = g.coding(&xi, (2 * letters.len()).min(6)).unwrap();
        let periodic: Vec<u8> = letters.iter().cycle().take(code.len()).copied().collect();
        prop_assert_eq!(code, periodic);
    }

    #[test]
    fn products_and_inverses_reduce(a in reduced_letters(5), b in reduced_letters(5)) {
        let g = SchottkyGroup::standard();
        let (wa, wb) = (ReducedWord::from_letters(&g, &a).unwrap(), ReducedWord::from_letters(&g, &b).unwrap());
        let prod = wa.mul(&g, &wb);
        let direct = wa.matrix.compose(&wb.matrix);
        let z = PlanePoint::new(0.1, 1.0).unwrap();
        prop_assert!(hyp_distance(prod.matrix.apply_point(z), direct.apply_point(z)) < 1e-6);
        prop_assert!(wa.mul(&g, &wa.inverse()).is_empty());
    }

    #[test]
    fn reduction_lands_in_the_domain(x in -10.0..10.0f64, y in 0.01..3.0f64) {
        let g = SchottkyGroup::standard();
        let z = PlanePoint::new(x, y).unwrap();
        let (w, r) = g.reduce_to_domain(z);
        prop_assert!(g.distance_to_domain(r) < 1e-9);
        let back = w.matrix.apply_point(r);
        prop_assert!(hyp_distance(back, z) < 1e-6 * (1.0 + hyp_distance(z, r)));
    }
}
