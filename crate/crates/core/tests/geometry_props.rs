use horolab::geometry::*;
use horolab::means::{leaf_position, leaf_vector_at};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn point() -> impl Strategy<Value = PlanePoint> {
    (-4.0..4.0f64, 0.2..4.0f64).prop_map(|(x, y)| PlanePoint::new(x, y).unwrap())
}

fn boundary() -> impl Strategy<Value = BoundaryPoint> {
    (-8.0..8.0f64).prop_map(BoundaryPoint::from_real)
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (-3.0..3.0f64, 0.3..3.0f64, 0.0..std::f64::consts::PI).prop_map(|(t, lam, th)| {
        let (c, s) = (th.cos(), th.sin());
        let rot = Isometry::new(c, s, -s, c).unwrap();
        let dil = Isometry::new(lam, 0.0, 0.0, 1.0).unwrap();
        Isometry::new(1.0, t, 0.0, 1.0).unwrap().compose(&dil).compose(&rot)
    })
}

/// A vector with well separated endpoints and moderate `s`.
fn vector() -> impl Strategy<Value = UnitTangentHopf> {
    (boundary(), 0.3..6.0f64, -1.5..1.5f64).prop_map(|(m, gap, s)| {
        let p = BoundaryPoint::from_real(m.to_real() + gap);
        UnitTangentHopf::new(m, p, s).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn busemann_is_a_cocycle(xi in boundary(), x in point(), y in point(), z in point()) {
        let lhs = busemann(&xi, x, y) + busemann(&xi, y, z);
        prop_assert!((lhs - busemann(&xi, x, z)).abs() < TOL);
    }

    #[test]
    fn isometries_preserve_distance_and_busemann(g in isometry(), xi in boundary(), x in point(), y in point()) {
        let d = hyp_distance(g.apply_point(x), g.apply_point(y)) - hyp_distance(x, y);
        prop_assert!(d.abs() < TOL * (1.0 + hyp_distance(x, y)));
        let b = busemann(&g.apply_boundary(&xi), g.apply_point(x), g.apply_point(y)) - busemann(&xi, x, y);
        prop_assert!(b.abs() < TOL);
    }

    #[test]
    fn gromov_distance_is_conformal(xi in boundary(), eta in boundary(), x in point(), y in point()) {
        prop_assume!(xi.wedge(&eta).abs() > 1e-3);
        let scaled = (0.5 * (busemann(&xi, x, y) + busemann(&eta, x, y))).exp() * gromov_distance(x, &xi, &eta);
        let rel = (gromov_distance(y, &xi, &eta) - scaled).abs() / scaled;
        prop_assert!(rel < TOL);
    }

    #[test]
    fn hamenstadt_formula_matches_closed_form(u in vector(), x in -3.0..3.0f64, aux in point()) {
        let v = leaf_vector_at(&u, x).unwrap();
        let closed = hamenstadt_distance(&u, &v, false).unwrap();
        prop_assert!((closed - x.abs()).abs() < TOL * (1.0 + x.abs()));
        let via = hamenstadt_distance_via(aux, &u, &v, false).unwrap();
        prop_assert!((via - closed).abs() < TOL * (1.0 + closed));
    }

    #[test]
    fn hamenstadt_distance_scales_with_the_flow(u in vector(), x in -2.0..2.0f64, t in -2.0..2.0f64) {
        let v = leaf_vector_at(&u, x).unwrap();
        let d = hamenstadt_distance(&u, &v, false).unwrap();
        let dt = hamenstadt_distance(&u.flow(t), &v.flow(t), false).unwrap();
        prop_assert!((dt - t.exp() * d).abs() < TOL * (1.0 + dt));
        let (ur, vr) = (u.reversed(), v.reversed());
        let ds = hamenstadt_distance(&ur, &vr, true).unwrap();
        let dst = hamenstadt_distance(&ur.flow(-t), &vr.flow(-t), true).unwrap();
        prop_assert!((dst - t.exp() * ds).abs() < TOL * (1.0 + dst));
    }

    #[test]
    fn hamenstadt_distance_is_invariant(g in isometry(), u in vector(), x in -2.0..2.0f64) {
        let v = leaf_vector_at(&u, x).unwrap();
        let d = hamenstadt_distance(&u, &v, false).unwrap();
        let dg = hamenstadt_distance(&g.apply_hopf(&u), &g.apply_hopf(&v), false).unwrap();
        prop_assert!((dg - d).abs() < 1e-8 * (1.0 + d));
    }

    #[test]
    fn leaf_coordinate_round_trips(u in vector(), x in -5.0..5.0f64) {
        let v = leaf_vector_at(&u, x).unwrap();
        prop_assert!(v.xi_minus == u.xi_minus && v.s == u.s);
        prop_assert!((leaf_position(&u, &v.xi_plus) - x).abs() < TOL * (1.0 + x.abs()));
    }

    #[test]
    fn horosphere_distance_of_close_points(u in vector(), x in -3.0..3.0f64) {
        // Base points of two vectors on one unstable horocycle at arclength |x| are at distance 2 asinh(|x|/2).
        let v = leaf_vector_at(&u, x).unwrap();
        let d = hyp_distance(u.base_point(), v.base_point());
        prop_assert!((2.0 * (0.5 * d).sinh() - x.abs()).abs() < 1e-8 * (1.0 + x.abs()));
    }
}
