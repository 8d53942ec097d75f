//! Invariant checks shared by the `checks` experiment and the acceptance harness.

use crate::artifacts::{Check, CheckClass};
use crate::config::Tolerances;
use horolab::geometry::*;
use horolab::gibbs::*;
use horolab::group::{enumerate_words, ReducedWord, SchottkyGroup};
use horolab::potential::{c_cocycle, rho_cocycle, Potential};
use horolab::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use CheckClass::{Assertion, Trend};

pub const ANCHOR_BUSEMANN: &str = "Busemann cocycle";
pub const ANCHOR_GROMOV: &str = "Gromov distance conformality";
pub const ANCHOR_HAMENSTADT: &str = "Hamenstaedt distance";
pub const ANCHOR_RHO: &str = "Hoelder cocycle rho^f";
pub const ANCHOR_C: &str = "Gibbs cocycle c^f";
pub const ANCHOR_PRESSURE: &str = "pressure delta^f";
pub const ANCHOR_LEDRAPPIER: &str = "Patterson-Ledrappier quasi-invariance";
pub const ANCHOR_BASE_CHANGE: &str = "Patterson base change";
pub const ANCHOR_LEAF_QI: &str = "leaf measure quasi-invariance";
pub const ANCHOR_LEAF_FLOW: &str = "leaf measure flow scaling";
pub const ANCHOR_HOLONOMY: &str = "transverse holonomy invariance";
pub const ANCHOR_HAT_QI: &str = "hat measure quasi-invariance";
pub const ANCHOR_TRANSVERSE_QI: &str = "transverse quasi-invariance";
pub const ANCHOR_PRODUCT: &str = "local product structure of m^f";
pub const ANCHOR_LIFT: &str = "Gamma-invariance of the lifted Gibbs measure";

/// Derives an independent seed for stage `k` of a run.
pub fn sub_seed(seed: u64, k: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)).gen()
}

fn random_point(rng: &mut ChaCha8Rng) -> PlanePoint {
    PlanePoint {
        x: rng.gen_range(-3.0..3.0),
        y: rng.gen_range(0.2..3.0),
    }
}

fn random_boundary(rng: &mut ChaCha8Rng) -> BoundaryPoint {
    BoundaryPoint::from_real(rng.gen_range(-6.0..6.0))
}

/// Translation, dilation and rotation about `i`, composed.
pub fn random_isometry(rng: &mut ChaCha8Rng) -> Isometry {
    let t = rng.gen_range(-3.0..3.0);
    let lam: f64 = rng.gen_range(0.3..3.0);
    let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    let rot = Isometry::new(c, s, -s, c).expect("rotation");
    let dil = Isometry::new(lam, 0.0, 0.0, 1.0).expect("dilation");
    let tr = Isometry::new(1.0, t, 0.0, 1.0).expect("translation");
    tr.compose(&dil).compose(&rot)
}

fn distinct_boundary(rng: &mut ChaCha8Rng, avoid: &[BoundaryPoint]) -> BoundaryPoint {
    loop {
        let x = random_boundary(rng);
        if avoid.iter().all(|a| a.wedge(&x).abs() > 1e-3) {
            return x;
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Point at height `h` above the real boundary point `xi`.
fn near_boundary(xi: &BoundaryPoint, h: f64) -> PlanePoint {
    PlanePoint { x: xi.to_real(), y: h }
}

/// Exact identities of the hyperbolic layer over `n` random samples, and agreement of the
/// closed forms with limit oracles.
pub fn geometry_checks(n: usize, seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 8];
    for _ in 0..n {
        let (x, y, z) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let xi = random_boundary(&mut rng);
        let eta = distinct_boundary(&mut rng, &[xi]);
        let g = random_isometry(&mut rng);

        let b = busemann(&xi, x, y) + busemann(&xi, y, z) - busemann(&xi, x, z);
        worst[0] = worst[0].max(b.abs());
        let moved = busemann(&g.apply_boundary(&xi), g.apply_point(x), g.apply_point(y));
        worst[1] = worst[1].max((moved - busemann(&xi, x, y)).abs());

        let scale = (0.5 * (busemann(&xi, x, y) + busemann(&eta, x, y))).exp();
        worst[2] = worst[2].max(rel(gromov_distance(y, &xi, &eta), scale * gromov_distance(x, &xi, &eta)));

        // Two vectors on one strong unstable horosphere, and their antipodes on a stable one.
        let plus = distinct_boundary(&mut rng, &[xi]);
        let other = distinct_boundary(&mut rng, &[xi, plus]);
        let s = rng.gen_range(-2.0..2.0);
        let u = UnitTangentHopf::new(xi, plus, s)?;
        let v = UnitTangentHopf::new(xi, other, s)?;
        for stable in [false, true] {
            let (a, b) = if stable { (u.reversed(), v.reversed()) } else { (u, v) };
            let d = hamenstadt_distance(&a, &b, stable)?;
            worst[3] = worst[3].max(rel(hamenstadt_distance_via(z, &a, &b, stable)?, d));
            let (ga, gb) = (g.apply_hopf(&a), g.apply_hopf(&b));
            worst[4] = worst[4].max(rel(hamenstadt_distance(&ga, &gb, stable)?, d));
            let t: f64 = rng.gen_range(-2.0..2.0);
            let expect = if stable { (-t).exp() * d } else { t.exp() * d };
            worst[5] = worst[5].max(rel(hamenstadt_distance_via(x, &a.flow(t), &b.flow(t), stable)?, expect));
        }
        let d = hamenstadt_distance(&u, &v, false)?;
        worst[6] = worst[6].max(rel(2.0 * (0.5 * hyp_distance(u.base_point(), v.base_point())).sinh(), d));
        let moved = g.apply_hopf(&u).base_point();
        worst[7] = worst[7].max(hyp_distance(moved, g.apply_point(u.base_point())));
    }
    let g_tol = tol.geometry;
    let mut checks = vec![
        Check::at_most("busemann cocycle identity", ANCHOR_BUSEMANN, Assertion, worst[0], g_tol),
        Check::at_most("busemann isometry invariance", ANCHOR_BUSEMANN, Assertion, worst[1], g_tol),
        Check::at_most("gromov conformal change of base point", ANCHOR_GROMOV, Assertion, worst[2], g_tol),
        Check::at_most("hamenstaedt auxiliary point independence", ANCHOR_HAMENSTADT, Assertion, worst[3], g_tol),
        Check::at_most("hamenstaedt isometry invariance", ANCHOR_HAMENSTADT, Assertion, worst[4], g_tol),
        Check::at_most("hamenstaedt flow scaling", ANCHOR_HAMENSTADT, Assertion, worst[5], g_tol),
        Check::at_most("hamenstaedt equals horocyclic length", ANCHOR_HAMENSTADT, Assertion, worst[6], g_tol),
        Check::at_most("base point equivariance", ANCHOR_HAMENSTADT, Assertion, worst[7], g_tol),
    ];
    checks.extend(oracle_checks(seed ^ 0x5eed, tol.oracle)?);
    Ok(checks)
}

/// Closed forms against their defining limits, evaluated far out.
fn oracle_checks(seed: u64, tol: f64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..200 {
        let (x, y) = (random_point(&mut rng), random_point(&mut rng));
        let xi = random_boundary(&mut rng);
        let eta = distinct_boundary(&mut rng, &[xi]);
        let z = near_boundary(&xi, 1e-7);
        let limit = hyp_distance(x, z) - hyp_distance(y, z);
        worst[0] = worst[0].max((limit - busemann(&xi, x, y)).abs());

        let (a, b) = (near_boundary(&xi, 1e-6), near_boundary(&eta, 1e-6));
        let product = 0.5 * (hyp_distance(x, a) + hyp_distance(x, b) - hyp_distance(a, b));
        worst[1] = worst[1].max(rel((-product).exp(), gromov_distance(x, &xi, &eta)));

        let plus = distinct_boundary(&mut rng, &[xi]);
        let u = UnitTangentHopf::new(xi, plus, rng.gen_range(-1.0..1.0))?;
        let v = UnitTangentHopf::new(xi, eta, u.s)?;
        if eta.wedge(&plus).abs() < 1e-3 {
            continue;
        }
        let t = 12.0;
        let far = hyp_distance(u.flow(t).base_point(), v.flow(t).base_point());
        worst[2] = worst[2].max(rel((0.5 * far - t).exp(), hamenstadt_distance(&u, &v, false)?));
    }
    Ok(vec![
        Check::at_most("busemann against its limit", ANCHOR_BUSEMANN, Assertion, worst[0], tol),
        Check::at_most("gromov distance against the gromov product limit", ANCHOR_GROMOV, Assertion, worst[1], tol),
        Check::at_most("hamenstaedt against its flow limit", ANCHOR_HAMENSTADT, Assertion, worst[2], tol),
    ])
}

/// Cocycles built from a potential: `rho^1 = beta`, `rho^0 = 0`, cocycle identity and
/// invariance of `rho^f`, and the group cocycle identity of `c^f`.
pub fn cocycle_checks(group: &SchottkyGroup, f: &Potential, n: usize, seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let rt = tol.rho_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Potential::constant(1.0);
    let zero = Potential::zero();
    let words: Vec<ReducedWord> = enumerate_words(group, 3).collect();
    let (mut w_one, mut w_zero, mut w_cocycle, mut w_inv, mut w_c) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let (x, y, z) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        let xi = random_boundary(&mut rng);
        w_one = w_one.max((rho_cocycle(&one, &xi, x, y, rt)? - busemann(&xi, x, y)).abs());
        w_zero = w_zero.max(rho_cocycle(&zero, &xi, x, y, rt)?.abs());
        let a = rho_cocycle(f, &xi, x, y, rt)?;
        let b = rho_cocycle(f, &xi, y, z, rt)?;
        let c = rho_cocycle(f, &xi, x, z, rt)?;
        w_cocycle = w_cocycle.max((a + b - c).abs());
        let g = &words[rng.gen_range(0..words.len())].matrix;
        let moved = rho_cocycle(f, &g.apply_boundary(&xi), g.apply_point(x), g.apply_point(y), rt)?;
        w_inv = w_inv.max((moved - a).abs());
        let k = group.num_letters() as u8;
        let (ga, gb) = (group.letter(rng.gen_range(0..k)), group.letter(rng.gen_range(0..k)));
        let lhs = c_cocycle(f, &ga.compose(gb), &xi, rt)?;
        let rhs = c_cocycle(f, ga, &gb.apply_boundary(&xi), rt)? + c_cocycle(f, gb, &xi, rt)?;
        w_c = w_c.max((lhs - rhs).abs());
    }
    Ok(vec![
        Check::at_most("rho of the constant 1 is busemann", ANCHOR_RHO, Assertion, w_one, rt),
        Check::at_most("rho of zero vanishes", ANCHOR_RHO, Assertion, w_zero, 0.0),
        Check::at_most("rho cocycle identity", ANCHOR_RHO, Assertion, w_cocycle, 3.0 * rt),
        Check::at_most("rho group invariance", ANCHOR_RHO, Assertion, w_inv, 3.0 * rt),
        Check::at_most("c group cocycle identity", ANCHOR_C, Assertion, w_c, 3.0 * rt),
    ])
}

/// Pressure of `f` with the shift and antipodal identities.
pub fn pressure_checks(
    group: &SchottkyGroup,
    f: &Potential,
    max_len: usize,
    shift: f64,
    tol: &Tolerances,
) -> Result<(PressureEstimate, Vec<Check>)> {
    let p = estimate_pressure(group, f, max_len)?;
    let ps = estimate_pressure(group, &f.shifted(shift), max_len)?;
    let pc = estimate_pressure(group, &f.check(), max_len)?;
    let k = tol.pressure_sigmas;
    let shift_err = (ps.delta - p.delta - shift).abs();
    let check_err = (pc.delta - p.delta).abs();
    let checks = vec![
        Check::at_most("pressure error bar", ANCHOR_PRESSURE, Trend, p.err, 1e-2)
            .with_detail(format!("delta {:.6} +- {:.2e}", p.delta, p.err)),
        Check::at_most(
            "pressure of f + c shifts by c",
            ANCHOR_PRESSURE,
            Assertion,
            shift_err,
            k * p.err.max(ps.err),
        )
        .with_detail(format!("c = {shift}")),
        Check::at_most(
            "pressure of the antipodal potential",
            ANCHOR_PRESSURE,
            Assertion,
            check_err,
            k * p.err.max(pc.err),
        ),
    ];
    Ok((p, checks))
}

/// Second base point of the base change test.
pub const SECOND_ORIGIN: PlanePoint = PlanePoint { x: 0.5, y: 2.0 };

/// Largest quasi-invariance gap over the generators, and the base change gap.
pub struct PattersonGaps {
    pub delta: f64,
    pub err: f64,
    pub quasi_invariance: f64,
    pub base_change: f64,
}

pub fn patterson_gaps(group: &SchottkyGroup, f: &Potential, max_len: usize, width: f64, rho_tol: f64) -> Result<PattersonGaps> {
    let p = estimate_pressure(group, f, max_len)?;
    let nu = build_patterson(group, f, p.delta, max_len, ORIGIN)?;
    let nu2 = build_patterson(group, f, p.delta, max_len, SECOND_ORIGIN)?;
    let center = test_center(group)?;
    let bump = BoundaryGaussian { center, width };
    let mut qi: f64 = 0.0;
    for k in 0..group.num_letters() as u8 {
        let c = quasi_invariance_check(&nu, group.letter(k), f, p.delta, |x| bump.eval(x), rho_tol)?;
        qi = qi.max(c.gap);
    }
    let bc = base_change_check(&nu, &nu2, f, p.delta, |x| bump.eval(x), rho_tol)?;
    Ok(PattersonGaps {
        delta: p.delta,
        err: p.err,
        quasi_invariance: qi,
        base_change: bc.gap,
    })
}

/// A limit point used to center boundary test functions.
pub fn test_center(group: &SchottkyGroup) -> Result<BoundaryPoint> {
    let letters: Vec<u8> = if group.num_letters() > 2 { vec![2, 0] } else { vec![0, 1] };
    group.attracting_fixed_point(&ReducedWord::from_letters(group, &letters)?)
}

pub fn patterson_checks(gaps: &PattersonGaps, tol: &Tolerances) -> Vec<Check> {
    vec![
        Check::at_most(
            "quasi-invariance under the generators",
            ANCHOR_LEDRAPPIER,
            Assertion,
            gaps.quasi_invariance,
            tol.weak,
        ),
        Check::at_most("base change to a second point", ANCHOR_BASE_CHANGE, Assertion, gaps.base_change, tol.weak),
    ]
}

/// Values of the measure table checks.
#[derive(Clone, Debug)]
pub struct MeasureTable {
    pub leaf_qi: f64,
    pub flow: f64,
    pub holonomy: f64,
    pub gibbs_holonomy: f64,
    pub hat_qi: f64,
    pub transverse_qi: f64,
    pub product: f64,
    pub lift: f64,
}

/// Weak identities of the derived measures, for the leaf, hat, transverse and product
/// measures of a built system.
pub fn measure_table(sys: &GibbsSystem, seed: u64) -> Result<MeasureTable> {
    let g = &sys.group;
    let g1 = *g.letter(0);
    let word = |l: &[u8]| ReducedWord::from_letters(g, l);
    let k = g.num_letters() as u8;
    let xi = g.attracting_fixed_point(&word(&[0, k.min(3) - 1, 1])?)?;
    let h = Horosphere { xi, s: 0.3 };
    let c2 = test_center(g)?;
    let bump = BoundaryBump { center: c2, width: 0.05 };
    let leaf_qi = sys.leaf_quasi_invariance(&g1, &h, |v| bump.eval(&v.xi_plus))?;
    let flow = sys.leaf_flow_scaling(&xi, 0.3, 0.7, |e| bump.eval(e) > 0.0)?;
    let window = (-0.5, 0.5);
    let hat = sys.hat_quasi_invariance(&g1, |x, s| bump.eval(x) * (1.0 - (2.0 * s).powi(2)).max(0.0), window)?;
    let w = UnitTangentHopf::new(c2, xi, 0.0)?;
    let far = g.attracting_fixed_point(&word(&[k - 1, k - 1])?)?;
    let w2 = UnitTangentHopf::new(c2, far, 0.0)?;
    let bm = BoundaryBump {
        center: g.attracting_fixed_point(&word(&[1, k.min(3) - 1])?)?,
        width: 0.05,
    };
    let phi = |u: &UnitTangentHopf| bm.eval(&u.xi_minus) * (1.0 - (2.0 * u.s).powi(2)).max(0.0);
    let holonomy = sys.transverse_holonomy(&w, &w2, phi, window);
    let gibbs_holonomy = sys.gibbs_transverse_holonomy(&w, &w2, phi, window);
    let tqi = sys.transverse_quasi_invariance(&g1, &w, phi, window)?;
    let ba = BoundaryBump { center: c2, width: 0.01 };
    let product = sys.local_product_check(|x| ba.eval(x) > 0.0, |x| bm.eval(x) > 0.0, (0.0, 0.5))?;
    let p = PlanePoint { x: 0.5, y: 2.0 };
    let chi = |u: &UnitTangentHopf| {
        let d = hyp_distance(u.base_point(), p);
        (1.0 - (d / 0.8).powi(2)).max(0.0).powi(2)
    };
    let ginv = g1.inverse();
    let a = sys.lifted_integral(chi, p, 0.8, 20_000, seed);
    let b = sys.lifted_integral(|u| chi(&ginv.apply_hopf(u)), g1.apply_point(p), 0.8, 20_000, seed);
    Ok(MeasureTable {
        leaf_qi: leaf_qi.gap,
        flow: flow.gap,
        holonomy: holonomy.gap,
        gibbs_holonomy: gibbs_holonomy.gap,
        hat_qi: hat.gap,
        transverse_qi: tqi.gap,
        product: product.gap,
        lift: relative_gap(a, b),
    })
}

pub fn measure_table_checks(t: &MeasureTable, tol: &Tolerances) -> Vec<Check> {
    vec![
        Check::at_most("leaf measure under the first generator", ANCHOR_LEAF_QI, Assertion, t.leaf_qi, tol.weak),
        Check::at_most("leaf mass scales by exp(t delta)", ANCHOR_LEAF_FLOW, Assertion, t.flow, tol.flow_scaling),
        Check::at_most("holonomy of mu-bar_T", ANCHOR_HOLONOMY, Assertion, t.holonomy, tol.holonomy),
        Check::at_most("holonomy of mu_T", ANCHOR_HOLONOMY, Assertion, t.gibbs_holonomy, tol.weak),
        Check::at_most("hat measure under the first generator", ANCHOR_HAT_QI, Assertion, t.hat_qi, tol.weak),
        Check::at_most(
            "transverse measure under the first generator",
            ANCHOR_TRANSVERSE_QI,
            Assertion,
            t.transverse_qi,
            tol.weak,
        ),
        Check::at_most("box mass against the product of hat and leaf", ANCHOR_PRODUCT, Assertion, t.product, tol.weak),
        Check::at_most("lifted integral under the first generator", ANCHOR_LIFT, Assertion, t.lift, tol.weak),
    ]
}
