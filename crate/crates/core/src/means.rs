//! Horospherical means and the experiments built on them.
//!
//! A strong unstable leaf `(xi, s)` is a horocycle, and the Möbius coordinate
//! `eta -> (u+ ^ eta) / (xi ^ eta)` is an affine arclength coordinate on it. In that
//! coordinate every Hamenstaedt ball is an interval, so a [`Leaf`] stores the atoms of
//! `nu^f` sorted by position and answers ball queries by binary search on prefix sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hamenstadt_distance, hyp_distance, stable_vector, BoundaryPoint, PlanePoint, UnitTangentHopf};
use crate::gibbs::GibbsSystem;
use crate::group::{ReducedWord, SchottkyGroup};
use crate::potential::{make_potential, Potential, PotentialSpec};
use crate::quadrature::{compensated_sum, Neumaier};

/// A Hamenstaedt ball `B+(u, r)` on the strong unstable horosphere of `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoroBall {
    pub u: UnitTangentHopf,
    pub r: f64,
}

impl HoroBall {
    pub fn new(u: UnitTangentHopf, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius {r}")));
        }
        Ok(Self { u, r })
    }

    /// Whether the leaf vector pointing to `eta` lies in the ball.
    pub fn contains(&self, eta: &BoundaryPoint) -> bool {
        if eta.approx_eq(&self.u.xi_minus) {
            return false;
        }
        leaf_position(&self.u, eta).abs() < self.r
    }

    /// `Phi^t B+(u, r) = B+(Phi^t u, r e^t)`.
    pub fn flow(&self, t: f64) -> Self {
        Self {
            u: self.u.flow(t),
            r: self.r * t.exp(),
        }
    }
}

/// Signed arclength from `u` to the vector `(u-, eta, s(u))` along the horocycle of `u`.
/// Its absolute value is the Hamenstaedt distance.
pub fn leaf_position(u: &UnitTangentHopf, eta: &BoundaryPoint) -> f64 {
    let ratio = u.xi_plus.wedge(eta) / u.xi_minus.wedge(eta);
    ratio * u.s.exp() / u.xi_minus.wedge(&u.xi_plus)
}

/// Atoms of `nu^f` seen from one strong unstable leaf, sorted by arclength position.
#[derive(Clone, Debug)]
pub struct Leaf {
    /// Reference vector: position 0.
    pub center: UnitTangentHopf,
    /// Sorted positions.
    pub pos: Vec<f64>,
    /// Atom index in `nu_plus` for each position.
    pub atom: Vec<u32>,
    /// `nu` weight times leaf density, for each position.
    pub mass: Vec<f64>,
    prefix: Vec<f64>,
}

impl Leaf {
    /// The atoms within arclength `half_width` of `center` (all atoms if infinite).
    pub fn new(sys: &GibbsSystem, center: &UnitTangentHopf, half_width: f64) -> Self {
        let xi = center.xi_minus;
        let atoms = &sys.nu_plus.atoms;
        let mut entries: Vec<(f64, u32)> = candidate_atoms(sys, center, half_width)
            .into_iter()
            .filter(|&k| !atoms[k].point.approx_eq(&xi))
            .map(|k| (leaf_position(center, &atoms[k].point), k as u32))
            .filter(|(x, _)| x.abs() < half_width)
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pos: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let atom: Vec<u32> = entries.iter().map(|e| e.1).collect();
        let mass: Vec<f64> = atom
            .iter()
            .map(|&k| {
                let a = &sys.nu_plus.atoms[k as usize];
                a.weight * sys.leaf_log_density(&xi, center.s, &a.point).exp()
            })
            .collect();
        let mut prefix = Vec::with_capacity(mass.len() + 1);
        let mut acc = Neumaier::default();
        prefix.push(0.0);
        for m in &mass {
            acc.add(*m);
            prefix.push(acc.total());
        }
        Self {
            center: *center,
            pos,
            atom,
            mass,
            prefix,
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Index range of the open interval `(x - r, x + r)`.
    pub fn range(&self, x: f64, r: f64) -> std::ops::Range<usize> {
        let lo = self.pos.partition_point(|&p| p <= x - r);
        let hi = self.pos.partition_point(|&p| p < x + r);
        lo..hi.max(lo)
    }

    pub fn range_mass(&self, range: std::ops::Range<usize>) -> f64 {
        self.prefix[range.end] - self.prefix[range.start]
    }

    /// Leaf vector at entry `k`.
    pub fn vector(&self, sys: &GibbsSystem, k: usize) -> UnitTangentHopf {
        UnitTangentHopf {
            xi_minus: self.center.xi_minus,
            xi_plus: sys.nu_plus.atoms[self.atom[k] as usize].point,
            s: self.center.s,
        }
    }

    /// `sum mass * psi` over a range.
    pub fn integrate<P: Fn(&UnitTangentHopf) -> f64>(
        &self,
        sys: &GibbsSystem,
        range: std::ops::Range<usize>,
        psi: P,
    ) -> f64 {
        compensated_sum(range.map(|k| self.mass[k] * psi(&self.vector(sys, k))))
    }
}

/// Atom indices covering the arc of forward endpoints within `half_width` of `center`,
/// with one extra atom on each side to absorb rounding in the endpoint angles.
fn candidate_atoms(sys: &GibbsSystem, center: &UnitTangentHopf, half_width: f64) -> Vec<usize> {
    let n = sys.nu_plus.len();
    let ends = (leaf_vector_at(center, -half_width), leaf_vector_at(center, half_width));
    let (Some(lo), Some(hi)) = ends else {
        return (0..n).collect();
    };
    if !half_width.is_finite() || n == 0 {
        return (0..n).collect();
    }
    let (a, b) = (lo.xi_plus.circle_angle(), hi.xi_plus.circle_angle());
    let (a, b) = (a.min(b), a.max(b));
    let c = center.xi_plus.circle_angle();
    let m = &sys.nu_plus;
    let (ia, ib) = (m.lower_bound(a).saturating_sub(1), (m.lower_bound(b) + 1).min(n));
    if a <= c && c <= b {
        (ia..ib).collect()
    } else {
        (0..(m.lower_bound(a) + 1).min(n))
            .chain(m.lower_bound(b).saturating_sub(1)..n)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// `mu-bar_{H+u}(B+(u, r))`.
pub fn ball_mass(sys: &GibbsSystem, ball: &HoroBall) -> f64 {
    let leaf = Leaf::new(sys, &ball.u, ball.r);
    leaf.range_mass(0..leaf.len())
}

/// Horospherical mean `M_{r,u}(psi)`.
pub fn mean<P: Fn(&UnitTangentHopf) -> f64>(sys: &GibbsSystem, u: &UnitTangentHopf, r: f64, psi: P) -> Result<f64> {
    let leaf = Leaf::new(sys, u, r);
    let m = leaf.range_mass(0..leaf.len());
    if !(m > 0.0) {
        return Err(Error::ZeroMass(format!("ball of radius {r} carries no atoms")));
    }
    Ok(leaf.integrate(sys, 0..leaf.len(), psi) / m)
}

/// `M^t_{r,u}(psi) = M_{r e^t, Phi^t u}(psi)`.
pub fn pushed_mean<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    u: &UnitTangentHopf,
    r: f64,
    t: f64,
    psi: P,
) -> Result<f64> {
    mean(sys, &u.flow(t), r * t.exp(), psi)
}

/// Mean of `psi o Phi^t` over `B+(u, r)`, evaluated on the original leaf.
pub fn mean_of_pushed<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    u: &UnitTangentHopf,
    r: f64,
    t: f64,
    psi: P,
) -> Result<f64> {
    mean(sys, u, r, |v| psi(&v.flow(t)))
}

/// Smooth compactly supported profile on `[0, 1)`: `(1 - q)^3` with `q = x^2`.
fn profile(x: f64) -> f64 {
    let q = x * x;
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - q).powi(3)
    }
}

/// A Γ-invariant test function on the unit tangent bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionSpec {
    One,
    /// Bump of the base point around `center` in `F`, lifted through the domain reduction.
    /// The radius must be smaller than the distance from `center` to the sides of `F`.
    DomainBump { center: [f64; 2], radius: f64 },
    /// Orbit sum of a bump around `Γ o`, with the directional factor of the orbit potentials.
    OrbitBump { radius: f64, kappa: f64 },
}

#[derive(Clone, Debug)]
enum Compiled {
    One,
    Domain { center: PlanePoint, radius: f64 },
    Orbit(Potential),
}

/// The finite family of functions against which weak convergence is tested.
#[derive(Clone, Debug)]
pub struct TestDictionary {
    pub specs: Vec<TestFunctionSpec>,
    group: SchottkyGroup,
    compiled: Vec<Compiled>,
}

impl TestDictionary {
    pub fn new(group: &SchottkyGroup, specs: Vec<TestFunctionSpec>) -> Result<Self> {
        let mut compiled = Vec::with_capacity(specs.len());
        for spec in &specs {
            compiled.push(match *spec {
                TestFunctionSpec::One => Compiled::One,
                TestFunctionSpec::DomainBump { center, radius } => {
                    let c = PlanePoint::new(center[0], center[1])?;
                    if !group.fundamental_domain_contains(c) || !(radius > 0.0) {
                        return Err(Error::InvalidArgument(format!("domain bump at {center:?}, radius {radius}")));
                    }
                    let room = group
                        .disks()
                        .iter()
                        .map(|d| crate::geometry::distance_to_semicircle(c, d.center, d.radius))
                        .fold(f64::INFINITY, f64::min);
                    if radius >= room {
                        return Err(Error::InvalidArgument(format!(
                            "domain bump radius {radius} reaches the sides of F (room {room:.4})"
                        )));
                    }
                    Compiled::Domain { center: c, radius }
                }
                TestFunctionSpec::OrbitBump { radius, kappa } => Compiled::Orbit(make_potential(
                    group,
                    &PotentialSpec::DirectionalOrbit {
                        amplitude: 1.0,
                        radius,
                        kappa,
                    },
                )?),
            });
        }
        Ok(Self {
            specs,
            group: group.clone(),
            compiled,
        })
    }

    /// `1`, two domain bumps, an isotropic orbit bump and a directional one.
    pub fn standard(group: &SchottkyGroup) -> Result<Self> {
        Self::new(
            group,
            vec![
                TestFunctionSpec::One,
                TestFunctionSpec::DomainBump {
                    center: [0.0, 1.0],
                    radius: 1.0,
                },
                TestFunctionSpec::DomainBump {
                    center: [4.0, 1.8],
                    radius: 0.8,
                },
                TestFunctionSpec::OrbitBump { radius: 0.9, kappa: 0.0 },
                TestFunctionSpec::OrbitBump { radius: 0.9, kappa: 0.5 },
            ],
        )
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn name(&self, j: usize) -> String {
        match &self.specs[j] {
            TestFunctionSpec::One => "one".into(),
            TestFunctionSpec::DomainBump { center, radius } => {
                format!("domain_bump({},{};{})", center[0], center[1], radius)
            }
            TestFunctionSpec::OrbitBump { radius, kappa } => format!("orbit_bump({radius};{kappa})"),
        }
    }

    pub fn eval(&self, j: usize, v: &UnitTangentHopf) -> f64 {
        match &self.compiled[j] {
            Compiled::One => 1.0,
            Compiled::Domain { center, radius } => {
                let (_, z) = self.group.reduce_point(v.base_point());
                profile(hyp_distance(z, *center) / radius)
            }
            Compiled::Orbit(p) => p.eval_hopf(v),
        }
    }

    /// A closure evaluating function `j`.
    pub fn function(&self, j: usize) -> impl Fn(&UnitTangentHopf) -> f64 + '_ {
        move |v| self.eval(j, v)
    }
}

/// Nonwandering vectors with base point in `F`, drawn from the Gibbs pair sampler.
pub fn nonwandering_samples(sys: &GibbsSystem, n: usize, seed: u64) -> Vec<UnitTangentHopf> {
    let sample = sys.sample_domain(n * 50 + 100, seed);
    sample
        .pairs
        .iter()
        .filter(|p| p.mass() > 0.0)
        .take(n)
        .map(|p| p.vector(0.5 * (p.s_lo + p.s_hi)))
        .collect()
}

/// Target values `m^f(psi_j)` for a dictionary.
pub fn gibbs_targets(sys: &GibbsSystem, dict: &TestDictionary, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sample = sys.sample_domain(n, seed);
    (0..dict.len()).map(|j| sample.integrate(dict.function(j))).collect()
}

/// One cell of an equidistribution table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub u_index: usize,
    pub r: f64,
    pub psi: String,
    pub mean: f64,
    pub target: f64,
    pub error: f64,
}

/// Errors of horospherical means against the Gibbs targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub rows: Vec<MeanRow>,
    pub r_grid: Vec<f64>,
    pub targets: Vec<f64>,
    /// For each `(u, psi)`, whether the error decreases along the grid.
    pub monotone: Vec<Vec<bool>>,
    /// For each `psi`, the sup over `u` of the error at each radius.
    pub sup_error: Vec<Vec<f64>>,
    pub sup_monotone: Vec<bool>,
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0 && w[1] == 0.0)
}

impl EquidistReport {
    /// Largest error at the last radius over all `u` and functions.
    pub fn final_error(&self) -> f64 {
        self.sup_error.iter().filter_map(|c| c.last()).cloned().fold(0.0, f64::max)
    }

    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().flatten().all(|&b| b)
    }
}

/// `|M_{r,u}(psi_j) - m^f(psi_j)|` over a grid of radii and several vectors.
pub fn equidistribution_experiment(
    sys: &GibbsSystem,
    us: &[UnitTangentHopf],
    r_grid: &[f64],
    dict: &TestDictionary,
    targets: &[f64],
) -> Result<EquidistReport> {
    if targets.len() != dict.len() {
        return Err(Error::InvalidArgument("one target per dictionary function".into()));
    }
    let mut rows = Vec::new();
    let mut err = vec![vec![vec![0.0; r_grid.len()]; dict.len()]; us.len()];
    for (i, u) in us.iter().enumerate() {
        let rmax = r_grid.iter().cloned().fold(0.0, f64::max);
        let leaf = Leaf::new(sys, u, rmax);
        for (k, &r) in r_grid.iter().enumerate() {
            let range = leaf.range(0.0, r);
            let m = leaf.range_mass(range.clone());
            if !(m > 0.0) {
                return Err(Error::ZeroMass(format!("ball {k} around vector {i} is empty")));
            }
            for j in 0..dict.len() {
                let value = leaf.integrate(sys, range.clone(), dict.function(j)) / m;
                let e = (value - targets[j]).abs();
                err[i][j][k] = e;
                rows.push(MeanRow {
                    u_index: i,
                    r,
                    psi: dict.name(j),
                    mean: value,
                    target: targets[j],
                    error: e,
                });
            }
        }
    }
    let monotone = err.iter().map(|per_u| per_u.iter().map(|c| decreasing(c)).collect()).collect();
    let sup_error: Vec<Vec<f64>> = (0..dict.len())
        .map(|j| {
            (0..r_grid.len())
                .map(|k| err.iter().map(|per_u| per_u[j][k]).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    let sup_monotone = sup_error.iter().map(|c| decreasing(c)).collect();
    Ok(EquidistReport {
        rows,
        r_grid: r_grid.to_vec(),
        targets: targets.to_vec(),
        monotone,
        sup_error,
        sup_monotone,
    })
}

/// Least-squares fit of `log mass` against `log r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    /// `2 delta + 4 |f|_inf`.
    pub bound: f64,
}

pub fn ball_growth_fit(sys: &GibbsSystem, u: &UnitTangentHopf, r_grid: &[f64]) -> Result<GrowthFit> {
    let (lo, hi) = r_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if r_grid.len() < 3 || hi / lo < 100.0 {
        return Err(Error::InvalidArgument("growth grid must span two decades with 3 points".into()));
    }
    let leaf = Leaf::new(sys, u, hi);
    let masses: Vec<f64> = r_grid.iter().map(|&r| leaf.range_mass(leaf.range(0.0, r))).collect();
    if masses.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::ZeroMass("growth grid has an empty ball".into()));
    }
    let xs: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(GrowthFit {
        slope,
        intercept: my - slope * mx,
        radii: r_grid.to_vec(),
        masses,
        bound: 2.0 * sys.delta() + 4.0 * sys.f.sup_norm(),
    })
}

/// Smallest number of half-radius balls centered at atoms covering the atoms of `B+(u, r)`.
/// Balls are intervals in the leaf coordinate, so the greedy sweep is optimal.
pub fn vitali_check(sys: &GibbsSystem, u: &UnitTangentHopf, r: f64, n_max: usize) -> Result<usize> {
    let leaf = Leaf::new(sys, u, 2.0 * r);
    let range = leaf.range(0.0, r);
    let n = cover_count(&leaf.pos, range, 0.5 * r);
    if n == 0 {
        return Err(Error::ZeroMass("ball carries no atoms".into()));
    }
    if n > n_max {
        return Err(Error::InvalidArgument(format!("cover needs {n} > {n_max} balls")));
    }
    Ok(n)
}

/// Greedy cover of `pos[range]` by open intervals of radius `rho` centered at points of `pos`.
pub fn cover_count(pos: &[f64], range: std::ops::Range<usize>, rho: f64) -> usize {
    let mut count = 0;
    let mut k = range.start;
    while k < range.end {
        let first = pos[k];
        // Rightmost center still covering `first`.
        let c = pos.partition_point(|&p| p < first + rho) - 1;
        let reach = pos[c] + rho;
        count += 1;
        k = pos.partition_point(|&p| p < reach).max(k + 1);
    }
    count
}

/// Boundary-term statistics of a leaf set against the tiling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarRow {
    pub label: f64,
    pub mass: f64,
    pub boundary_mass: f64,
    pub ratio: f64,
    /// Tiles fully inside the set, cut by it, and their largest leaf extent.
    pub full_tiles: usize,
    pub proper_tiles: usize,
    pub tile_extent: f64,
    /// `mass(B(r + r0)) - mass(B(r - r0))` with `r0 = tile_extent`, for balls.
    pub annulus_bound: Option<f64>,
}

/// Tile word of the base point of each leaf entry.
fn leaf_tiles(sys: &GibbsSystem, leaf: &Leaf, l_cut: usize) -> Result<Vec<Vec<u8>>> {
    (0..leaf.len())
        .map(|k| {
            let (w, _) = sys.group.reduce_to_domain(leaf.vector(sys, k).base_point());
            if w.len() > l_cut {
                Err(Error::InvalidArgument(format!("tile word length {} exceeds {l_cut}", w.len())))
            } else {
                Ok(w.letters)
            }
        })
        .collect()
}

/// A subset of a leaf, as membership of each leaf entry.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafSet {
    pub inside: Vec<bool>,
}

impl LeafSet {
    /// The ball of radius `r` around the leaf center.
    pub fn ball(leaf: &Leaf, r: f64) -> Self {
        Self {
            inside: leaf.pos.iter().map(|p| p.abs() < r).collect(),
        }
    }
}

/// Tiles are judged on the support of the leaf measure: a tile is proper when the set
/// contains some but not all of its atoms, and full when it contains all of them.
fn star_row(leaf: &Leaf, tiles: &[Vec<u8>], set: &LeafSet, label: f64) -> StarRow {
    use std::collections::BTreeMap;
    let mut by_tile: BTreeMap<&[u8], (bool, bool, f64, f64)> = BTreeMap::new();
    for k in 0..leaf.len() {
        let e = by_tile
            .entry(tiles[k].as_slice())
            .or_insert((false, false, f64::INFINITY, f64::NEG_INFINITY));
        if set.inside[k] {
            e.0 = true;
        } else {
            e.1 = true;
        }
        e.2 = e.2.min(leaf.pos[k]);
        e.3 = e.3.max(leaf.pos[k]);
    }
    let mut mass = Neumaier::default();
    let mut boundary = Neumaier::default();
    for k in (0..leaf.len()).filter(|&k| set.inside[k]) {
        mass.add(leaf.mass[k]);
        let (i, o, _, _) = by_tile[tiles[k].as_slice()];
        if i && o {
            boundary.add(leaf.mass[k]);
        }
    }
    let full = by_tile.values().filter(|e| e.0 && !e.1).count();
    let proper = by_tile.values().filter(|e| e.0 && e.1).count();
    let extent = by_tile.values().filter(|e| e.0).map(|e| e.3 - e.2).fold(0.0, f64::max);
    let (m, b) = (mass.total(), boundary.total());
    StarRow {
        label,
        mass: m,
        boundary_mass: b,
        ratio: if m > 0.0 { b / m } else { 0.0 },
        full_tiles: full,
        proper_tiles: proper,
        tile_extent: extent,
        annulus_bound: None,
    }
}

/// Condition (*) for balls `B+(u, r)`: boundary mass ratio for each radius.
pub fn star_check_balls(sys: &GibbsSystem, u: &UnitTangentHopf, radii: &[f64], l_cut: usize) -> Result<Vec<StarRow>> {
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    // Atoms just outside the largest ball decide whether its edge tiles are full.
    let leaf = Leaf::new(sys, u, 4.0 * rmax + 4.0);
    let tiles = leaf_tiles(sys, &leaf, l_cut)?;
    let mut rows = Vec::new();
    for &r in radii {
        let mut row = star_row(&leaf, &tiles, &LeafSet::ball(&leaf, r), r);
        let r0 = row.tile_extent;
        let outer = leaf.range_mass(leaf.range(0.0, r + r0));
        let inner = if r > r0 { leaf.range_mass(leaf.range(0.0, r - r0)) } else { 0.0 };
        row.annulus_bound = Some(outer - inner);
        rows.push(row);
    }
    Ok(rows)
}

/// Leaf sets `E_n`: vectors of the leaf whose forward endpoint lies outside the depth-`n`
/// cylinder containing the backward endpoint of the leaf. They increase to the whole leaf.
pub fn cylinder_sets(sys: &GibbsSystem, leaf: &Leaf, depths: &[usize]) -> Result<Vec<LeafSet>> {
    let xi = leaf.center.xi_minus;
    let dmax = depths.iter().cloned().max().unwrap_or(0);
    let code = sys
        .group
        .coding(&xi, dmax)
        .ok_or_else(|| Error::InvalidArgument("leaf base point is not in the limit set".into()))?;
    depths
        .iter()
        .map(|&n| {
            let w = ReducedWord::from_letters(&sys.group, &code[..n])?;
            let (lo, hi) = sys.group.cylinder_interval(&w)?;
            let inside = (0..leaf.len())
                .map(|k| {
                    let x = sys.nu_plus.atoms[leaf.atom[k] as usize].point.to_real();
                    !(x >= lo && x <= hi)
                })
                .collect();
            Ok(LeafSet { inside })
        })
        .collect()
}

/// Condition (*) for arbitrary leaf sets.
pub fn star_check_sets(sys: &GibbsSystem, leaf: &Leaf, sets: &[LeafSet], labels: &[f64], l_cut: usize) -> Result<Vec<StarRow>> {
    let tiles = leaf_tiles(sys, leaf, l_cut)?;
    Ok(sets
        .iter()
        .zip(labels)
        .map(|(set, &label)| star_row(leaf, &tiles, set, label))
        .collect())
}

/// Whether a ratio sequence shows the decreasing trend required by condition (*).
pub fn star_trend(rows: &[StarRow]) -> bool {
    decreasing(&rows.iter().map(|r| r.ratio).collect::<Vec<_>>())
}

/// Normalized integral of `psi` over the leaf set `inside`.
pub fn set_mean<P: Fn(&UnitTangentHopf) -> f64>(sys: &GibbsSystem, leaf: &Leaf, inside: &[bool], psi: P) -> Result<f64> {
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for k in (0..leaf.len()).filter(|&k| inside[k]) {
        den.add(leaf.mass[k]);
        num.add(leaf.mass[k] * psi(&leaf.vector(sys, k)));
    }
    if !(den.total() > 0.0) {
        return Err(Error::ZeroMass("leaf set carries no atoms".into()));
    }
    Ok(num.total() / den.total())
}

/// Convergence of set means along a sequence satisfying (*).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSequenceReport {
    pub labels: Vec<f64>,
    pub star: Vec<StarRow>,
    /// `errors[j][n]` for dictionary function `j` and set `n`.
    pub errors: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
}

impl SetSequenceReport {
    pub fn final_error(&self) -> f64 {
        self.errors.iter().filter_map(|e| e.last()).cloned().fold(0.0, f64::max)
    }

    pub fn all_decreasing(&self) -> bool {
        self.errors.iter().all(|e| decreasing(e))
    }
}

/// Set means for a sequence of leaf sets, refused when condition (*) fails.
pub fn averaging_sequence_experiment(
    sys: &GibbsSystem,
    leaf: &Leaf,
    sets: &[LeafSet],
    labels: &[f64],
    dict: &TestDictionary,
    targets: &[f64],
    l_cut: usize,
) -> Result<SetSequenceReport> {
    let star = star_check_sets(sys, leaf, sets, labels, l_cut)?;
    if !star_trend(&star) {
        let ratios: Vec<f64> = star.iter().map(|r| r.ratio).collect();
        return Err(Error::StarViolated(format!("boundary ratios {ratios:?} do not decrease")));
    }
    let mut errors = vec![Vec::new(); dict.len()];
    let mut means = vec![Vec::new(); dict.len()];
    for set in sets {
        for j in 0..dict.len() {
            let m = set_mean(sys, leaf, &set.inside, dict.function(j))?;
            means[j].push(m);
            errors[j].push((m - targets[j]).abs());
        }
    }
    Ok(SetSequenceReport {
        labels: labels.to_vec(),
        star,
        errors,
        means,
    })
}

/// Both sides of the autoadjonction identity and their gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoadjointReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub samples: usize,
}

/// Default step of the midpoint rule in the horosphere level `s`.
pub const AUTOADJOINT_S_STEP: f64 = 0.1;

/// Compares `int_D dM(u) M_{r,u}(psi)` with
/// `int_D dM(v) psi(v) int_{B+(v,r)} d mu-bar(u) / mu-bar(B+(u,r))`, where `dM = d mu-hat d mu-bar`.
///
/// The hat measure is sampled: `budget` backward endpoints are drawn from `nu^{f check}` and
/// the level `s` runs over a midpoint grid. Each leaf is then summed exactly over the atoms
/// whose vector has its base point in `F`.
pub fn autoadjonction_check<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    r: f64,
    psi: P,
    budget: usize,
    seed: u64,
) -> Result<AutoadjointReport> {
    autoadjonction_check_with(sys, r, psi, budget, seed, AUTOADJOINT_S_STEP)
}

/// [`autoadjonction_check`] with an explicit level step.
pub fn autoadjonction_check_with<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    r: f64,
    psi: P,
    budget: usize,
    seed: u64,
    s_step: f64,
) -> Result<AutoadjointReport> {
    use rand::{Rng, SeedableRng};
    if !(r > 0.0 && s_step > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r}, level step {s_step}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cdf = crate::gibbs::cumulative(&sys.nu_minus);
    let atoms = &sys.nu_plus.atoms;
    let delta = sys.delta();
    let mut lhs = Neumaier::default();
    let mut rhs = Neumaier::default();
    let mut leaves = 0;
    // Stratified draws: one uniform per slice of the cumulative distribution.
    let shift: f64 = rng.gen();
    for b in 0..budget {
        let q = (b as f64 + shift) / budget as f64;
        let xi = sys.nu_minus.atoms[crate::gibbs::pick(&cdf, q)].point;
        let clips: Vec<(usize, f64, f64)> = atoms
            .iter()
            .enumerate()
            .filter_map(|(k, a)| match sys.group.clip_geodesic(&xi, &a.point) {
                Some((lo, hi)) if lo.is_finite() && hi.is_finite() => Some((k, lo, hi)),
                _ => None,
            })
            .collect();
        if clips.is_empty() {
            continue;
        }
        let s_lo = clips.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let s_hi = clips.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let n_s = ((s_hi - s_lo) / s_step).ceil().max(1.0) as usize;
        let h = (s_hi - s_lo) / n_s as f64;
        for i in 0..n_s {
            let s = s_lo + h * (i as f64 + 0.5);
            let mut in_d: Vec<u32> = clips.iter().filter(|c| c.1 < s && s < c.2).map(|c| c.0 as u32).collect();
            if in_d.is_empty() {
                continue;
            }
            in_d.sort_unstable();
            let (l, r_) = leaf_sums(sys, &xi, s, &in_d, r, &psi);
            let w = h * (-delta * s).exp();
            lhs.add(w * l);
            rhs.add(w * r_);
            leaves += 1;
        }
    }
    if leaves == 0 {
        return Err(Error::ZeroMass("no sampled leaf meets the fundamental domain".into()));
    }
    let n = budget as f64;
    let (l, rr) = (lhs.total() / n, rhs.total() / n);
    Ok(AutoadjointReport {
        lhs: l,
        rhs: rr,
        gap: crate::gibbs::relative_gap(l, rr),
        samples: leaves,
    })
}

/// Both leaf integrals of the autoadjonction identity on the leaf `(xi, s)`, restricted to
/// the atoms listed in `in_d` (sorted atom indices).
fn leaf_sums<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    xi: &BoundaryPoint,
    s: f64,
    in_d: &[u32],
    r: f64,
    psi: &P,
) -> (f64, f64) {
    let atoms = &sys.nu_plus.atoms;
    let center = UnitTangentHopf {
        xi_minus: *xi,
        xi_plus: atoms[in_d[0] as usize].point,
        s,
    };
    let reach = in_d
        .iter()
        .map(|&k| leaf_position(&center, &atoms[k as usize].point).abs())
        .fold(0.0, f64::max);
    let leaf = Leaf::new(sys, &center, reach * (1.0 + 1e-9) + 2.0 * r);
    let n = leaf.len();
    let mut psi_mass = Vec::with_capacity(n + 1);
    let mut inv_ball = Vec::with_capacity(n + 1);
    let (mut a, mut b) = (Neumaier::default(), Neumaier::default());
    psi_mass.push(0.0);
    inv_ball.push(0.0);
    let psi_vals: Vec<f64> = (0..n).map(|k| psi(&leaf.vector(sys, k))).collect();
    for k in 0..n {
        a.add(leaf.mass[k] * psi_vals[k]);
        psi_mass.push(a.total());
        let ball = leaf.range_mass(leaf.range(leaf.pos[k], r));
        b.add(leaf.mass[k] / ball);
        inv_ball.push(b.total());
    }
    let mut l = Neumaier::default();
    let mut rr = Neumaier::default();
    for k in (0..n).filter(|&k| in_d.binary_search(&leaf.atom[k]).is_ok()) {
        let range = leaf.range(leaf.pos[k], r);
        let m = leaf.range_mass(range.clone());
        l.add(leaf.mass[k] * (psi_mass[range.end] - psi_mass[range.start]) / m);
        if psi_vals[k] != 0.0 {
            rr.add(leaf.mass[k] * psi_vals[k] * (inv_ball[range.end] - inv_ball[range.start]));
        }
    }
    (l.total(), rr.total())
}

/// Number of grid points per side in `psi_eps`.
pub const PSI_EPS_GRID: usize = 8;

/// Stable neighbours of `w` at stable Hamenstaedt distance `eps * k / n` for
/// `k = 1..=n` on both sides, preceded by `w` itself.
pub fn stable_neighbours(w: &UnitTangentHopf, eps: f64, n: usize) -> Vec<UnitTangentHopf> {
    // The stable horosphere of w is the unstable one of -w, with the same distance.
    let back = w.reversed();
    let mut out = vec![*w];
    for sign in [-1.0, 1.0] {
        for k in 1..=n {
            let x = sign * eps * k as f64 / n as f64 * (1.0 - 1e-9);
            if let Some(v) = leaf_vector_at(&back, x) {
                out.push(v.reversed());
            }
        }
    }
    out
}

/// Vectors of `union_{|s| < eps} Phi^s B-(w, eps)` on a deterministic grid, `w` included.
pub fn stable_cell_grid(w: &UnitTangentHopf, eps: f64) -> Vec<UnitTangentHopf> {
    let n = PSI_EPS_GRID;
    let mut out = Vec::new();
    for v in stable_neighbours(w, eps, n) {
        for k in 0..=2 * n {
            let s = eps * (k as f64 / n as f64 - 1.0) * (1.0 - 1e-9);
            out.push(v.flow(s));
        }
    }
    out
}

/// Grid approximation of `psi_eps` (`sign > 0`, a sup) or `psi_{-eps}` (`sign < 0`, an inf).
pub fn psi_eps<P: Fn(&UnitTangentHopf) -> f64>(psi: P, eps: f64, w: &UnitTangentHopf, sign: f64) -> f64 {
    let vals = stable_cell_grid(w, eps).into_iter().map(|v| psi(&v));
    if sign >= 0.0 {
        vals.fold(f64::NEG_INFINITY, f64::max)
    } else {
        vals.fold(f64::INFINITY, f64::min)
    }
}

/// Result of the cell lemma search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub eps: f64,
    /// Common value of `r1 = r2 = r3` for the largest passing cell, if any.
    pub radius: Option<f64>,
    pub samples: usize,
    /// Range of the holonomy density ratio over all samples at the reported radius.
    pub density_min: f64,
    pub density_max: f64,
    /// Largest cross ratio `|s|` seen in the ball inclusion comparison.
    pub max_shift: f64,
    pub tried: Vec<(f64, bool)>,
}

/// Checks of the three cell lemmas for one radius; returns `(pass, density range, max shift, samples)`.
fn cell_pass<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    u: &UnitTangentHopf,
    rad: f64,
    eps: f64,
    psi: &P,
    radii: &[f64],
) -> (bool, f64, f64, f64, usize) {
    let base = Leaf::new(sys, u, 3.0 * eps.exp() + 1.0);
    let k = 2;
    // Stable neighbours v1 of u within rad, leaf points w2 within rad, flow times within rad.
    let stable_pts = stable_neighbours(u, rad, k as usize);
    let leaf_offsets: Vec<f64> = (-k..=k).map(|i| rad * (1.0 - 1e-9) * i as f64 / k as f64).collect();
    let flows: Vec<f64> = (-k..=k).map(|i| rad * (1.0 - 1e-9) * i as f64 / k as f64).collect();
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    let mut shift: f64 = 0.0;
    let mut samples = 0;
    let mut pass = true;
    // Both sides of the sandwich inequality on u, precomputed per radius.
    let sides: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let lo = base.range(0.0, r * (-eps).exp());
            let hi = base.range(0.0, r * eps.exp());
            let left = (-eps).exp() * base.integrate(sys, lo, |v| psi_eps(psi, eps, v, -1.0));
            let right = eps.exp() * base.integrate(sys, hi, |v| psi_eps(psi, eps, v, 1.0));
            (left, right)
        })
        .collect();
    for v1 in &stable_pts {
        // Ball inclusion and density bounds on the atoms of B+(u, 3).
        for kk in base.range(0.0, 3.0) {
            let eta = sys.nu_plus.atoms[base.atom[kk] as usize].point;
            let a = base.pos[kk].abs();
            let b = leaf_position(v1, &eta).abs();
            for &r in radii {
                if (b < r * (-eps).exp() && a >= r) || (a < r && b >= r * eps.exp()) {
                    pass = false;
                }
            }
            let w = base.vector(sys, kk);
            if let (Ok(pw), Ok(sw)) = (crate::geometry::puv_map(u, v1, &w), stable_vector(&w, &v1.xi_minus)) {
                let s = pw.s - sw.s;
                shift = shift.max(s.abs());
                let d = hamenstadt_distance(&w, &sw, true).unwrap_or(f64::INFINITY);
                if s.abs() >= eps || d >= eps {
                    pass = false;
                }
            }
            let dens = (sys.leaf_log_density(&v1.xi_minus, v1.s, &eta) - sys.leaf_log_density(&u.xi_minus, u.s, &eta)).exp();
            dmin = dmin.min(dens);
            dmax = dmax.max(dens);
            if dens < (-eps).exp() || dens > eps.exp() {
                pass = false;
            }
        }
        // Sandwich inequality at cell vectors v = Phi^s P_{u,v1}(w2).
        for &x in &leaf_offsets {
            let Some(w2) = leaf_vector_at(u, x) else { continue };
            for &s in &flows {
                let v = UnitTangentHopf {
                    xi_minus: v1.xi_minus,
                    xi_plus: w2.xi_plus,
                    s: v1.s + s,
                };
                let lv = Leaf::new(sys, &v, 2.0);
                for (i, &r) in radii.iter().enumerate() {
                    let mid = lv.integrate(sys, lv.range(0.0, r), psi);
                    let (left, right) = sides[i];
                    if !(left <= mid && mid <= right) {
                        pass = false;
                    }
                }
                samples += 1;
            }
        }
    }
    (pass, dmin, dmax, shift, samples)
}

/// The vector of the leaf of `u` at signed arclength `x`, when it exists.
pub fn leaf_vector_at(u: &UnitTangentHopf, x: f64) -> Option<UnitTangentHopf> {
    if x == 0.0 {
        return Some(*u);
    }
    // Solve (u+ ^ eta) / (u- ^ eta) = c for eta, with c = x |u- ^ u+| e^{-s}.
    let c = x * u.xi_minus.wedge(&u.xi_plus) * (-u.s).exp();
    let (p, m) = (u.xi_plus, u.xi_minus);
    // eta = (a, b): p.a b - a p.b = c (m.a b - a m.b)  =>  a (c m.b - p.b) = b (c m.a - p.a).
    let a = c * m.a() - p.a();
    let b = c * m.b() - p.b();
    let eta = BoundaryPoint::new(a, b).ok()?;
    Some(UnitTangentHopf {
        xi_minus: u.xi_minus,
        xi_plus: eta,
        s: u.s,
    })
}

/// Searches jointly scaled cell radii `r1 = r2 = r3` by halving from 0.5 down to `floor`,
/// then refines the first pass by bisection against the last failure.
pub fn cell_lemmas_check<P: Fn(&UnitTangentHopf) -> f64>(
    sys: &GibbsSystem,
    u: &UnitTangentHopf,
    eps: f64,
    psi: P,
    floor: f64,
) -> Result<CellReport> {
    let radii = [1.0, 1.5, 2.0];
    let mut tried = Vec::new();
    let mut rad = 0.5;
    let mut failed: Option<f64> = None;
    let mut found = None;
    while rad >= floor {
        let res = cell_pass(sys, u, rad, eps, &psi, &radii);
        tried.push((rad, res.0));
        if res.0 {
            found = Some((rad, res));
            break;
        }
        failed = Some(rad);
        rad *= 0.5;
    }
    let Some((mut best, mut res)) = found else {
        return Ok(CellReport {
            eps,
            radius: None,
            samples: 0,
            density_min: f64::NAN,
            density_max: f64::NAN,
            max_shift: f64::NAN,
            tried,
        });
    };
    if let Some(mut bad) = failed {
        for _ in 0..4 {
            let mid = (best * bad).sqrt();
            let r = cell_pass(sys, u, mid, eps, &psi, &radii);
            tried.push((mid, r.0));
            if r.0 {
                best = mid;
                res = r;
            } else {
                bad = mid;
            }
        }
    }
    Ok(CellReport {
        eps,
        radius: Some(best),
        samples: res.4,
        density_min: res.1,
        density_max: res.2,
        max_shift: res.3,
        tried,
    })
}
