use horolab::geometry::BoundaryPoint;
use horolab::gibbs::*;
use horolab::group::SchottkyGroup;
use horolab::potential::{make_potential, Potential, PotentialSpec};

fn system(f: &Potential, max_len: usize) -> GibbsSystem {
    GibbsSystem::build(&SchottkyGroup::standard(), f, GibbsOptions { max_len, rho_tol: 1e-4 }).unwrap()
}

#[test]
fn zero_potential_pressure_is_the_critical_exponent() {
    let g = SchottkyGroup::standard();
    let p = estimate_pressure(&g, &Potential::zero(), 12).unwrap();
    assert!((p.delta - 0.320603).abs() < 1e-5, "{p:?}");
    assert!(p.err < 1e-4);
    // The Poincare series diverges just below the exponent and converges above it.
    let below = poincare_series(&g, &Potential::zero(), p.delta - 0.05, 12).unwrap();
    let above = poincare_series(&g, &Potential::zero(), p.delta + 0.05, 12).unwrap();
    assert!(below > 5.0 * above);
}

#[test]
fn constant_shift_moves_the_pressure() {
    let g = SchottkyGroup::standard();
    let base = estimate_pressure(&g, &Potential::zero(), 10).unwrap();
    for c in [-0.2, 0.25, 0.7] {
        let shifted = estimate_pressure(&g, &Potential::zero().shifted(c), 10).unwrap();
        assert!((shifted.delta - base.delta - c).abs() < 1e-9, "c = {c}");
    }
}

#[test]
fn patterson_measure_is_a_probability_on_the_limit_set() {
    let sys = system(&Potential::zero(), 8);
    let total: f64 = sys.nu_plus.atoms.iter().map(|a| a.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let angles = sys.nu_plus.angles();
    assert!(angles.windows(2).all(|w| w[0] <= w[1]));
    for a in &sys.nu_plus.atoms {
        assert!(a.weight > 0.0);
        assert!(sys.group.coding(&a.point, 1).is_some());
    }
    // Symmetric potentials reuse the measure for both endpoints.
    assert_eq!(sys.nu_plus.atoms.len(), sys.nu_minus.atoms.len());
}

#[test]
fn quasi_invariance_improves_with_length() {
    let bump = BoundaryBump {
        center: BoundaryPoint::from_real(2.3),
        width: 0.3,
    };
    let mut gaps = Vec::new();
    for l in [8, 10] {
        let sys = system(&Potential::zero(), l);
        let g0 = *sys.group.letter(0);
        let cmp = quasi_invariance_check(&sys.nu_plus, &g0, &sys.f, sys.delta(), |xi| bump.eval(xi), 1e-4).unwrap();
        assert_eq!(cmp.gap, relative_gap(cmp.lhs, cmp.rhs));
        gaps.push(cmp.gap);
    }
    assert!(gaps[1] < gaps[0] && gaps[1] < 0.01, "{gaps:?}");
}

#[test]
fn directional_potential_has_an_antipodal_twin() {
    let g = SchottkyGroup::standard();
    let f = make_potential(
        &g,
        &PotentialSpec::DirectionalOrbit {
            amplitude: 0.5,
            radius: 1.0,
            kappa: 0.6,
        },
    )
    .unwrap();
    assert!(!f.symmetric());
    let p = estimate_pressure(&g, &f, 8).unwrap();
    let q = estimate_pressure(&g, &f.check(), 8).unwrap();
    assert!((p.delta - q.delta).abs() < 1e-8, "{} {}", p.delta, q.delta);
    assert!(p.delta > 0.320603);
}

#[test]
fn gibbs_density_is_flow_invariant_and_positive() {
    let sys = system(&Potential::zero(), 8);
    let sample = sys.sample_domain(200, 5);
    assert!(sample.total_mass() > 0.0);
    for pair in sample.pairs.iter().filter(|p| p.mass() > 0.0).take(20) {
        let v = pair.vector(0.5 * (pair.s_lo + pair.s_hi));
        let d = sys.gibbs_density(&v);
        assert!(d > 0.0 && d.is_finite());
        assert!((sys.gibbs_density(&v.flow(0.7)) - d).abs() < 1e-12 * d);
    }
    let one = sys.gibbs_integral(|_| 1.0, 400, 9).unwrap();
    assert!((one - 1.0).abs() < 1e-12);
}

#[test]
fn snapshot_round_trips_through_json() {
    use horolab::group::GroupSpec;
    let sys = system(&Potential::zero(), 7);
    let snap = sys.snapshot(&GroupSpec::standard(), &PotentialSpec::Zero);
    let text = serde_json::to_string(&snap).unwrap();
    let back: GibbsSnapshot = serde_json::from_str(&text).unwrap();
    let restored = back.restore().unwrap();
    assert_eq!(restored.delta(), sys.delta());
    assert_eq!(restored.nu_plus.atoms, sys.nu_plus.atoms);
}
