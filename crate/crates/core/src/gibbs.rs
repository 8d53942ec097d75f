//! Pressure, Patterson-Ledrappier measures and the measures built from them.
//!
//! Boundary measures are finite atomic approximants: one atom per reduced word in a
//! length window, placed at the endpoint of the ray from the base point through the
//! orbit point and weighted by the Poincaré series term. Everything downstream is a
//! finite sum over atoms (or atom pairs) combined with one-dimensional quadrature in
//! the Hopf coordinate `s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    busemann, geodesic_point, hyp_distance, ray_endpoint, segment_frame, BoundaryPoint, Horosphere, Isometry,
    PlanePoint, UnitTangentHopf, BOUNDARY_EPS, ORIGIN,
};
use crate::group::{build_schottky, GroupSpec, ReducedWord, SchottkyGroup, WordTree};
use crate::potential::{c_cocycle, make_potential, rho_cocycle, rho_leaf, Potential, PotentialSpec};
use crate::quadrature::{gl16, gl8, log_sum_exp, Neumaier};

/// Format version written with serialized measures and systems.
pub const FORMAT_VERSION: u32 = 1;

/// Default tolerance for cocycle evaluations inside measure densities.
pub const DEFAULT_RHO_TOL: f64 = 1e-4;

/// Panel length for quadrature in the `s` coordinate.
pub const S_STEP: f64 = 0.1;

/// Distance and potential integral from the base point to each orbit point of a word tree.
#[derive(Clone, Debug)]
pub struct OrbitData {
    pub dist: Vec<f64>,
    pub integral: Vec<f64>,
    pub shell_start: Vec<usize>,
}

impl OrbitData {
    pub fn max_len(&self) -> usize {
        self.shell_start.len() - 2
    }

    fn shell(&self, l: usize) -> std::ops::Range<usize> {
        self.shell_start[l]..self.shell_start[l + 1]
    }

    /// Same data for `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            integral: self.integral.iter().zip(&self.dist).map(|(i, d)| i + c * d).collect(),
            ..self.clone()
        }
    }
}

/// Computes `d(x, g x)` and `int_x^{g x} f` for every word of the tree, where `x` is `base`.
pub fn orbit_data(tree: &WordTree, f: &Potential, base: PlanePoint) -> OrbitData {
    let (frame, _) = segment_frame(base, PlanePoint { x: base.x, y: base.y * 2.0 });
    let finv = frame.inverse();
    let n = tree.len();
    let mut dist = Vec::with_capacity(n);
    let mut integral = Vec::with_capacity(n);
    let constant = f.constant_value();
    let group = f.group();
    for (k, m) in tree.matrix.iter().enumerate() {
        // Conjugating to put the base point at i keeps the distance formula exact.
        let d = frame.compose(m).compose(&finv).displacement();
        dist.push(d);
        integral.push(match (constant, group) {
            (Some(c), _) => c * d,
            (None, Some(g)) if g.fundamental_domain_contains(base) => {
                f.orbit_integral(&ReducedWord { letters: tree.letters(k), matrix: *m }, base)
            }
            (None, _) => f.geodesic_integral(base, m.apply_point(base)),
        });
    }
    OrbitData {
        dist,
        integral,
        shell_start: tree.shell_start.clone(),
    }
}

/// Log of the shell sum `sum_{|g| = l} exp(I_g - s d_g)`.
fn shell_log_sum(data: &OrbitData, l: usize, s: f64) -> f64 {
    let r = data.shell(l);
    let xs: Vec<f64> = data.integral[r.clone()]
        .iter()
        .zip(&data.dist[r])
        .map(|(i, d)| i - s * d)
        .collect();
    log_sum_exp(&xs)
}

/// Weighted mean of the distance over shell `l` at exponent `s`.
fn shell_mean_dist(data: &OrbitData, l: usize, s: f64) -> f64 {
    let r = data.shell(l);
    let lse = shell_log_sum(data, l, s);
    let mut num = Neumaier::default();
    for k in r {
        num.add(data.dist[k] * (data.integral[k] - s * data.dist[k] - lse).exp());
    }
    num.total()
}

/// Log of the partial Poincaré series over words of length at most `max_len`.
pub fn log_poincare_series(data: &OrbitData, s: f64, max_len: usize) -> f64 {
    let shells: Vec<f64> = (0..=max_len.min(data.max_len())).map(|l| shell_log_sum(data, l, s)).collect();
    log_sum_exp(&shells)
}

/// Partial Poincaré series `sum_{|g| <= L} exp(int_o^{g o} f - s d(o, g o))`.
pub fn poincare_series(group: &SchottkyGroup, f: &Potential, s: f64, max_len: usize) -> Result<f64> {
    if max_len < 1 {
        return Err(Error::InvalidArgument("series needs L >= 1".into()));
    }
    let tree = WordTree::build(group, max_len);
    let data = orbit_data(&tree, f, ORIGIN);
    Ok(log_poincare_series(&data, s, max_len).exp())
}

/// Exponent `s` at which shells `l - 1` and `l` carry equal weight.
fn shell_balance(data: &OrbitData, l: usize) -> Result<f64> {
    let g = |s: f64| shell_log_sum(data, l, s) - shell_log_sum(data, l - 1, s);
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut tries = 0;
    while g(lo) <= 0.0 || g(hi) >= 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(Error::InvalidArgument("shell balance bracket not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pressure estimate with both estimators and the error bar built from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub delta: f64,
    pub err: f64,
    /// Shell-ratio estimate: one Newton step on the log ratio of the last two shells.
    pub delta_ratio: f64,
    /// Bisection root of the last shell balance.
    pub delta_bisect: f64,
    /// Change of the bisection root between the last two shell pairs.
    pub trend: f64,
    pub max_len: usize,
}

/// Pressure from precomputed orbit data.
pub fn estimate_pressure_from(data: &OrbitData) -> Result<PressureEstimate> {
    let l = data.max_len();
    if l < 6 {
        return Err(Error::InvalidArgument(format!("pressure needs L >= 6, got {l}")));
    }
    let b = shell_balance(data, l)?;
    let b_prev = shell_balance(data, l - 1)?;
    let ratio = shell_log_sum(data, l, b_prev) - shell_log_sum(data, l - 1, b_prev);
    let slope = shell_mean_dist(data, l, b_prev) - shell_mean_dist(data, l - 1, b_prev);
    let a = b_prev + ratio / slope;
    let trend = (b - b_prev).abs();
    let spread = (a - b).abs();
    if spread > 5.0 * trend.max(1e-6) {
        return Err(Error::EstimatorDisagreement { a, b, trend });
    }
    Ok(PressureEstimate {
        delta: 0.5 * (a + b),
        err: (0.5 * spread).max(trend).max(1e-9),
        delta_ratio: a,
        delta_bisect: b,
        trend,
        max_len: l,
    })
}

/// Estimates the pressure of `f` from words of length at most `max_len`.
pub fn estimate_pressure(group: &SchottkyGroup, f: &Potential, max_len: usize) -> Result<PressureEstimate> {
    if max_len < 6 {
        return Err(Error::InvalidArgument(format!("pressure needs L >= 6, got {max_len}")));
    }
    let tree = WordTree::build(group, max_len);
    estimate_pressure_from(&orbit_data(&tree, f, ORIGIN))
}

/// One atom of a boundary measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: BoundaryPoint,
    pub weight: f64,
    /// Index of the generating word in the word tree.
    pub node: u32,
}

/// Finite atomic measure on the boundary. Atoms are sorted by circle angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub version: u32,
    pub atoms: Vec<Atom>,
    pub mass: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub origin: PlanePoint,
    pub potential: String,
    pub delta: f64,
    #[serde(skip)]
    angles: Vec<f64>,
}

impl AtomicMeasure {
    /// Builds a measure from raw atoms: sorts, merges coincident atoms and normalizes.
    pub fn from_atoms(
        mut atoms: Vec<Atom>,
        min_len: usize,
        max_len: usize,
        origin: PlanePoint,
        potential: String,
        delta: f64,
    ) -> Result<Self> {
        if atoms.iter().any(|a| !(a.weight >= 0.0) || !a.weight.is_finite()) {
            return Err(Error::InvalidArgument("atom weights must be finite and nonnegative".into()));
        }
        atoms.sort_by(|a, b| a.point.circle_angle().total_cmp(&b.point.circle_angle()));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.point.wedge(&a.point).abs() < BOUNDARY_EPS => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        if merged.len() > 1 && merged[0].point.wedge(&merged[merged.len() - 1].point).abs() < BOUNDARY_EPS {
            let last = merged.pop().unwrap();
            merged[0].weight += last.weight;
        }
        let total = crate::quadrature::compensated_sum(merged.iter().map(|a| a.weight));
        if !(total > 0.0) {
            return Err(Error::Underflow);
        }
        for a in &mut merged {
            a.weight /= total;
        }
        let mut m = Self {
            version: FORMAT_VERSION,
            atoms: merged,
            mass: 1.0,
            min_len,
            max_len,
            origin,
            potential,
            delta,
            angles: Vec::new(),
        };
        m.reindex();
        Ok(m)
    }

    /// Rebuilds derived lookup data, for instance after deserialization.
    pub fn reindex(&mut self) {
        self.angles = self.atoms.iter().map(|a| a.point.circle_angle()).collect();
        self.mass = crate::quadrature::compensated_sum(self.atoms.iter().map(|a| a.weight));
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Circle angles of the atoms, in increasing order.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `int phi dnu`.
    pub fn integrate<F: Fn(&BoundaryPoint) -> f64>(&self, phi: F) -> f64 {
        crate::quadrature::compensated_sum(self.atoms.iter().map(|a| a.weight * phi(&a.point)))
    }

    /// Index of the first atom whose circle angle is at least `angle`.
    pub fn lower_bound(&self, angle: f64) -> usize {
        self.angles.partition_point(|&a| a < angle)
    }
}

/// Builds the Patterson approximant from orbit data. Words with
/// `ceil(L/2) <= |g| <= L` contribute atoms.
pub fn build_patterson_from(
    tree: &WordTree,
    data: &OrbitData,
    delta: f64,
    base: PlanePoint,
    potential: String,
) -> Result<AtomicMeasure> {
    let max_len = data.max_len();
    let min_len = max_len.div_ceil(2).max(1);
    let start = tree.shell_start[min_len];
    let end = tree.shell_start[max_len + 1];
    let logw: Vec<f64> = (start..end).map(|k| data.integral[k] - delta * data.dist[k]).collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Underflow);
    }
    let mut atoms = Vec::with_capacity(end - start);
    for (k, lw) in (start..end).zip(&logw) {
        let point = ray_endpoint(base, tree.matrix[k].apply_point(base));
        atoms.push(Atom {
            point,
            weight: (lw - top).exp(),
            node: k as u32,
        });
    }
    AtomicMeasure::from_atoms(atoms, min_len, max_len, base, potential, delta)
}

/// Builds the finite-level measure `nu_o^f` for the given pressure.
pub fn build_patterson(
    group: &SchottkyGroup,
    f: &Potential,
    delta: f64,
    max_len: usize,
    base: PlanePoint,
) -> Result<AtomicMeasure> {
    let tree = WordTree::build(group, max_len);
    let data = orbit_data(&tree, f, base);
    build_patterson_from(&tree, &data, delta, base, f.id())
}

/// Relative discrepancy `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Two sides of a weak identity and their relative gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl WeakComparison {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            gap: relative_gap(lhs, rhs),
        }
    }
}

/// Ledrappier quasi-invariance under `g`: compares `int phi(g^-1 xi) dnu(xi)` with
/// `int phi(xi) exp(beta^f_xi(o, g^-1 o)) dnu(xi)`.
pub fn quasi_invariance_check<F: Fn(&BoundaryPoint) -> f64>(
    nu: &AtomicMeasure,
    g: &Isometry,
    f: &Potential,
    delta: f64,
    phi: F,
    tol: f64,
) -> Result<WeakComparison> {
    let ginv = g.inverse();
    let back = ginv.apply_point(nu.origin);
    let mut lhs = Neumaier::default();
    let mut rhs = Neumaier::default();
    for a in &nu.atoms {
        lhs.add(a.weight * phi(&ginv.apply_boundary(&a.point)));
        let p = phi(&a.point);
        if p != 0.0 {
            let rho = rho_cocycle(f, &a.point, nu.origin, back, tol)?;
            rhs.add(a.weight * p * (delta * busemann(&a.point, nu.origin, back) - rho).exp());
        }
    }
    Ok(WeakComparison::new(lhs.total(), rhs.total()))
}

/// Base-change identity between measures built at `o` and `o'`: compares
/// `int phi dnu_o` with the normalized `int phi exp(delta beta_xi(o', o) - rho_xi(o', o)) dnu_{o'}`.
pub fn base_change_check<F: Fn(&BoundaryPoint) -> f64>(
    nu_o: &AtomicMeasure,
    nu_o2: &AtomicMeasure,
    f: &Potential,
    delta: f64,
    phi: F,
    tol: f64,
) -> Result<WeakComparison> {
    let (o, o2) = (nu_o.origin, nu_o2.origin);
    let lhs = nu_o.integrate(&phi);
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for a in &nu_o2.atoms {
        let rho = rho_cocycle(f, &a.point, o2, o, tol)?;
        let w = a.weight * (delta * busemann(&a.point, o2, o) - rho).exp();
        num.add(w * phi(&a.point));
        den.add(w);
    }
    Ok(WeakComparison::new(lhs, num.total() / den.total()))
}

/// Gaussian bump on the boundary in the chordal (wedge) distance to `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGaussian {
    pub center: BoundaryPoint,
    pub width: f64,
}

impl BoundaryGaussian {
    pub fn eval(&self, xi: &BoundaryPoint) -> f64 {
        let w = self.center.wedge(xi) / self.width;
        (-0.5 * w * w).exp()
    }
}

/// Compactly supported bump `(1 - (w / width)^2)^2` in the chordal distance `w` to `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBump {
    pub center: BoundaryPoint,
    pub width: f64,
}

impl BoundaryBump {
    pub fn eval(&self, xi: &BoundaryPoint) -> f64 {
        let w = self.center.wedge(xi) / self.width;
        let q = 1.0 - w * w;
        if q <= 0.0 {
            0.0
        } else {
            q * q
        }
    }
}

/// Options for building a [`GibbsSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsOptions {
    pub max_len: usize,
    pub rho_tol: f64,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self {
            max_len: 12,
            rho_tol: DEFAULT_RHO_TOL,
        }
    }
}

/// Pressure, the two boundary measures `nu^f`, `nu^{f check}`, and the densities built from them.
#[derive(Clone, Debug)]
pub struct GibbsSystem {
    pub group: SchottkyGroup,
    pub f: Potential,
    pub f_check: Potential,
    pub pressure: PressureEstimate,
    pub pressure_check: PressureEstimate,
    pub nu_plus: AtomicMeasure,
    pub nu_minus: AtomicMeasure,
    pub origin: PlanePoint,
    pub rho_tol: f64,
    pub tree: WordTree,
}

impl GibbsSystem {
    pub fn build(group: &SchottkyGroup, f: &Potential, opts: GibbsOptions) -> Result<Self> {
        let tree = WordTree::build(group, opts.max_len);
        let data = orbit_data(&tree, f, ORIGIN);
        let pressure = estimate_pressure_from(&data)?;
        let f_check = f.check();
        let nu_plus = build_patterson_from(&tree, &data, pressure.delta, ORIGIN, f.id())?;
        let (pressure_check, nu_minus) = if f.symmetric() {
            (pressure, nu_plus.clone())
        } else {
            let data_c = orbit_data(&tree, &f_check, ORIGIN);
            let pc = estimate_pressure_from(&data_c)?;
            let nu = build_patterson_from(&tree, &data_c, pressure.delta, ORIGIN, f_check.id())?;
            (pc, nu)
        };
        Ok(Self {
            group: group.clone(),
            f: f.clone(),
            f_check,
            pressure,
            pressure_check,
            nu_plus,
            nu_minus,
            origin: ORIGIN,
            rho_tol: opts.rho_tol,
            tree,
        })
    }

    pub fn delta(&self) -> f64 {
        self.pressure.delta
    }

    pub fn max_len(&self) -> usize {
        self.nu_plus.max_len
    }

    fn rho(&self, f: &Potential, xi: &BoundaryPoint, x: PlanePoint, y: PlanePoint) -> f64 {
        rho_cocycle(f, xi, x, y, self.rho_tol).expect("validated tolerance")
    }

    /// Log of the density of `m~^f` against `ds dnu^f(v+) dnu^{f check}(v-)`. It does not depend on `s`.
    pub fn gibbs_log_density(&self, xi_minus: &BoundaryPoint, xi_plus: &BoundaryPoint) -> f64 {
        let wedge = xi_minus.wedge(xi_plus).abs();
        if let Some(c) = self.f.constant_value() {
            return -2.0 * (self.delta() - c) * wedge.ln();
        }
        // Evaluate at the point of the geodesic closest to o.
        let y = closest_point(xi_minus, xi_plus, self.origin);
        let o = self.origin;
        -2.0 * self.delta() * wedge.ln() - self.rho(&self.f, xi_plus, o, y) - self.rho(&self.f_check, xi_minus, o, y)
    }

    pub fn gibbs_density(&self, v: &UnitTangentHopf) -> f64 {
        self.gibbs_log_density(&v.xi_minus, &v.xi_plus).exp()
    }

    /// Log of the density of the leaf measure on the horosphere `(xi, s)` at the vector
    /// `(xi, eta, s)`, against `dnu^f(eta)`.
    pub fn leaf_log_density(&self, xi: &BoundaryPoint, s: f64, eta: &BoundaryPoint) -> f64 {
        let w = xi.wedge(eta).abs();
        let beta = s - 2.0 * w.ln();
        if let Some(c) = self.f.constant_value() {
            return (self.delta() - c) * beta + c * s;
        }
        let y = geodesic_point(xi, eta, s).expect("distinct endpoints");
        let o = self.origin;
        self.delta() * beta - self.rho(&self.f, eta, o, y) - self.rho(&self.f_check, xi, o, y)
    }

    /// `int weight d mu-bar_H` over the atoms of `nu^f` accepted by `region`.
    pub fn leaf_measure_integral<R, W>(&self, xi: &BoundaryPoint, s: f64, region: R, weight: W) -> f64
    where
        R: Fn(&BoundaryPoint) -> bool,
        W: Fn(&UnitTangentHopf) -> f64,
    {
        let mut acc = Neumaier::default();
        for a in &self.nu_plus.atoms {
            if a.point.approx_eq(xi) || !region(&a.point) {
                continue;
            }
            let v = UnitTangentHopf {
                xi_minus: *xi,
                xi_plus: a.point,
                s,
            };
            let w = weight(&v);
            if w != 0.0 {
                acc.add(a.weight * w * self.leaf_log_density(xi, s, &a.point).exp());
            }
        }
        acc.total()
    }

    /// `int phi d mu-hat` with `d mu-hat = exp(-delta s) ds dnu^{f check}(xi)`, over `s` in `window`.
    pub fn hat_measure_integral<F: Fn(&BoundaryPoint, f64) -> f64>(&self, phi: F, window: (f64, f64)) -> f64 {
        let d = self.delta();
        let mut acc = Neumaier::default();
        for a in &self.nu_minus.atoms {
            let v = gl16().integrate_composite(window.0, window.1, S_STEP, |s| phi(&a.point, s) * (-d * s).exp());
            acc.add(a.weight * v);
        }
        acc.total()
    }

    /// Quasi-invariance of the hat measure under `g`: compares `int phi o g^-1 d mu-hat` with
    /// `int phi exp(c^{f check}(g, xi)) d mu-hat`. `phi` must vanish outside the `s`-window.
    pub fn hat_quasi_invariance<F: Fn(&BoundaryPoint, f64) -> f64>(
        &self,
        g: &Isometry,
        phi: F,
        window: (f64, f64),
    ) -> Result<WeakComparison> {
        let d = self.delta();
        let ginv = g.inverse();
        let fwd = g.apply_point(self.origin);
        let mut lhs = Neumaier::default();
        let mut rhs = Neumaier::default();
        for a in &self.nu_minus.atoms {
            let xi = a.point;
            let moved = ginv.apply_boundary(&xi);
            // g^-1 (xi, s) = (g^-1 xi, s + beta_xi(o, g o)).
            let shift = busemann(&xi, self.origin, fwd);
            let l = gl16().integrate_composite(window.0 - shift, window.1 - shift, S_STEP, |s| {
                phi(&moved, s + shift) * (-d * s).exp()
            });
            lhs.add(a.weight * l);
            let base = gl16().integrate_composite(window.0, window.1, S_STEP, |s| phi(&xi, s) * (-d * s).exp());
            if base != 0.0 {
                let c = c_cocycle(&self.f_check, g, &xi, self.rho_tol)?;
                rhs.add(a.weight * base * c.exp());
            }
        }
        Ok(WeakComparison::new(lhs.total(), rhs.total()))
    }

    /// `int phi d mu-bar_T` on the transversal `T = W^s(w)`, parametrized by `(v-, s)` with
    /// `v+ = w+`; `d mu-bar_T = ds dnu^{f check}(v-) exp(delta beta_{v-}(o, v))`.
    /// Since `beta_{v-}(o, v) = -s` the density depends on `s` alone, which is what makes the
    /// family invariant under holonomy.
    pub fn transverse_measure_integral<F: Fn(&UnitTangentHopf) -> f64>(
        &self,
        w: &UnitTangentHopf,
        phi: F,
        window: (f64, f64),
    ) -> f64 {
        let d = self.delta();
        let mut acc = Neumaier::default();
        for a in &self.nu_minus.atoms {
            if a.point.approx_eq(&w.xi_plus) {
                continue;
            }
            let v = gl16().integrate_composite(window.0, window.1, S_STEP, |s| {
                let u = UnitTangentHopf {
                    xi_minus: a.point,
                    xi_plus: w.xi_plus,
                    s,
                };
                phi(&u) * (-d * s).exp()
            });
            acc.add(a.weight * v);
        }
        acc.total()
    }

    /// `int phi d mu_T` where `d mu_T = exp(-rho^{f check}_{v-}(o, v)) d mu-bar_T`.
    pub fn transverse_gibbs_integral<F: Fn(&UnitTangentHopf) -> f64>(
        &self,
        w: &UnitTangentHopf,
        phi: F,
        window: (f64, f64),
    ) -> f64 {
        self.transverse_measure_integral(
            w,
            |u| {
                let p = phi(u);
                if p == 0.0 {
                    return 0.0;
                }
                let y = u.base_point();
                p * (-self.rho(&self.f_check, &u.xi_minus, self.origin, y)).exp()
            },
            window,
        )
    }

    /// Draws `n` atom pairs from `nu^{f check} x nu^f`, clips each geodesic to the
    /// fundamental domain and records its density.
    pub fn sample_domain(&self, n: usize, seed: u64) -> DomainSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdf_minus = cumulative(&self.nu_minus);
        let cdf_plus = cumulative(&self.nu_plus);
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let i = pick(&cdf_minus, rng.gen::<f64>());
            let j = pick(&cdf_plus, rng.gen::<f64>());
            let (xm, xp) = (self.nu_minus.atoms[i].point, self.nu_plus.atoms[j].point);
            let clip = self.group.clip_geodesic(&xm, &xp);
            let (s_lo, s_hi, log_density) = match clip {
                Some((lo, hi)) if lo.is_finite() && hi.is_finite() => (lo, hi, self.gibbs_log_density(&xm, &xp)),
                _ => (0.0, 0.0, f64::NEG_INFINITY),
            };
            pairs.push(PairSample {
                xi_minus: xm,
                xi_plus: xp,
                s_lo,
                s_hi,
                density: log_density.exp(),
            });
        }
        DomainSample { pairs }
    }

    /// `m^f(psi)` from a domain sample of `n` pairs.
    pub fn gibbs_integral<P: Fn(&UnitTangentHopf) -> f64>(&self, psi: P, n: usize, seed: u64) -> Result<f64> {
        self.sample_domain(n, seed).integrate(psi)
    }
}

impl GibbsSystem {
    /// Leaf quasi-invariance: compares `int w d mu-bar_{g H}` with
    /// `exp(-c^{f check}(g, xi)) int (w o g) d mu-bar_H`, where `H = (xi, s)`.
    pub fn leaf_quasi_invariance<W: Fn(&UnitTangentHopf) -> f64>(
        &self,
        g: &Isometry,
        h: &Horosphere,
        w: W,
    ) -> Result<WeakComparison> {
        let gh = g.apply_horosphere(h);
        let lhs = self.leaf_measure_integral(&gh.xi, gh.s, |_| true, &w);
        let inner = self.leaf_measure_integral(&h.xi, h.s, |_| true, |v| w(&g.apply_hopf(v)));
        let c = c_cocycle(&self.f_check, g, &h.xi, self.rho_tol)?;
        Ok(WeakComparison::new(lhs, (-c).exp() * inner))
    }

    /// Flow scaling of leaf masses: the mass of `region` on `(xi, s + t)` divided by its mass
    /// on `(xi, s)`, compared with `exp(t delta)`.
    pub fn leaf_flow_scaling<R: Fn(&BoundaryPoint) -> bool>(
        &self,
        xi: &BoundaryPoint,
        s: f64,
        t: f64,
        region: R,
    ) -> Result<WeakComparison> {
        let m0 = self.leaf_measure_integral(xi, s, &region, |_| 1.0);
        let m1 = self.leaf_measure_integral(xi, s + t, &region, |_| 1.0);
        if !(m0 > 0.0) {
            return Err(Error::ZeroMass("region carries no atoms".into()));
        }
        Ok(WeakComparison::new(m1 / m0, (t * self.delta()).exp()))
    }

    /// Transverse quasi-invariance: compares `int phi d mu-bar_{g T}` with
    /// `int (phi o g) exp(c^{f check}(g, v-)) d mu-bar_T`. `phi` must vanish outside `window`
    /// on `g T`; the window on `T` is widened by `d(o, g o)` to cover the level shift.
    pub fn transverse_quasi_invariance<F: Fn(&UnitTangentHopf) -> f64>(
        &self,
        g: &Isometry,
        w: &UnitTangentHopf,
        phi: F,
        window: (f64, f64),
    ) -> Result<WeakComparison> {
        let gw = g.apply_hopf(w);
        let lhs = self.transverse_measure_integral(&gw, &phi, window);
        let pad = g.displacement();
        let d = self.delta();
        let mut rhs = Neumaier::default();
        for a in &self.nu_minus.atoms {
            if a.point.approx_eq(&w.xi_plus) {
                continue;
            }
            let v = gl16().integrate_composite(window.0 - pad, window.1 + pad, S_STEP, |s| {
                let u = UnitTangentHopf {
                    xi_minus: a.point,
                    xi_plus: w.xi_plus,
                    s,
                };
                phi(&g.apply_hopf(&u)) * (-d * s).exp()
            });
            if v != 0.0 {
                let c = c_cocycle(&self.f_check, g, &a.point, self.rho_tol)?;
                rhs.add(a.weight * v * c.exp());
            }
        }
        Ok(WeakComparison::new(lhs, rhs.total()))
    }

    /// Holonomy between the transversals `W^s(w)` and `W^s(w2)` for `mu-bar_T`: the integrand on
    /// the second is transported back along the unstable leaves.
    pub fn transverse_holonomy<F: Fn(&UnitTangentHopf) -> f64>(
        &self,
        w: &UnitTangentHopf,
        w2: &UnitTangentHopf,
        phi: F,
        window: (f64, f64),
    ) -> WeakComparison {
        let lhs = self.transverse_measure_integral(w, &phi, window);
        let rhs = self.transverse_measure_integral(w2, |u| phi(&holonomy(u, &w.xi_plus)), window);
        WeakComparison::new(lhs, rhs)
    }

    /// Holonomy for `mu_T`: compares `int_T phi d mu_T` with
    /// `int_{T'} (phi o zeta^-1) exp(rho(zeta^-1 v', v')) d mu_{T'}`. The leaf cocycle is
    /// taken for the antipodal potential, which makes it the backward-orbit integral of `f`.
    pub fn gibbs_transverse_holonomy<F: Fn(&UnitTangentHopf) -> f64>(
        &self,
        w: &UnitTangentHopf,
        w2: &UnitTangentHopf,
        phi: F,
        window: (f64, f64),
    ) -> WeakComparison {
        let lhs = self.transverse_gibbs_integral(w, &phi, window);
        let rhs = self.transverse_gibbs_integral(
            w2,
            |u| {
                let back = holonomy(u, &w.xi_plus);
                let p = phi(&back);
                if p == 0.0 {
                    return 0.0;
                }
                p * rho_leaf(&self.f_check, &back, u, self.rho_tol).expect("same leaf").exp()
            },
            window,
        );
        WeakComparison::new(lhs, rhs)
    }

    /// Box `{v- in A, v+ in B, s in window}` measured two ways: with the Gibbs density
    /// against `ds dnu x dnu^{f check}`, and as `int_{A x window} mu-bar_{(xi, s)}(B) d mu-hat(xi, s)`.
    pub fn local_product_check<A, B>(&self, in_a: A, in_b: B, window: (f64, f64)) -> Result<WeakComparison>
    where
        A: Fn(&BoundaryPoint) -> bool,
        B: Fn(&BoundaryPoint) -> bool,
    {
        let side_a: Vec<_> = self.nu_minus.atoms.iter().filter(|a| in_a(&a.point)).collect();
        let side_b: Vec<_> = self.nu_plus.atoms.iter().filter(|a| in_b(&a.point)).collect();
        let len = window.1 - window.0;
        let mut direct = Neumaier::default();
        for a in &side_a {
            for b in &side_b {
                if !a.point.approx_eq(&b.point) {
                    direct.add(a.weight * b.weight * len * self.gibbs_log_density(&a.point, &b.point).exp());
                }
            }
        }
        let d = self.delta();
        let mut product = Neumaier::default();
        for a in &side_a {
            let v = gl8().integrate(window.0, window.1, |s| {
                let leaf = side_b
                    .iter()
                    .filter(|b| !b.point.approx_eq(&a.point))
                    .map(|b| b.weight * self.leaf_log_density(&a.point, s, &b.point).exp());
                (-d * s).exp() * crate::quadrature::compensated_sum(leaf)
            });
            product.add(a.weight * v);
        }
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::ZeroMass("box contains no atom pair".into()));
        }
        Ok(WeakComparison::new(direct.total(), product.total()))
    }

    /// Unnormalized `int chi d m~` for `chi` supported on vectors whose base point is within
    /// `radius` of `center`, by importance sampling of atom pairs.
    pub fn lifted_integral<C: Fn(&UnitTangentHopf) -> f64>(
        &self,
        chi: C,
        center: PlanePoint,
        radius: f64,
        n: usize,
        seed: u64,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cdf_minus = cumulative(&self.nu_minus);
        let cdf_plus = cumulative(&self.nu_plus);
        let mut acc = Neumaier::default();
        for _ in 0..n {
            let i = pick(&cdf_minus, rng.gen::<f64>());
            let j = pick(&cdf_plus, rng.gen::<f64>());
            let (xm, xp) = (self.nu_minus.atoms[i].point, self.nu_plus.atoms[j].point);
            if xm.approx_eq(&xp) {
                continue;
            }
            let Some((lo, hi)) = ball_window(&xm, &xp, center, radius) else {
                continue;
            };
            let v = gl16().integrate_composite(lo, hi, S_STEP, |s| {
                chi(&UnitTangentHopf {
                    xi_minus: xm,
                    xi_plus: xp,
                    s,
                })
            });
            if v != 0.0 {
                acc.add(v * self.gibbs_log_density(&xm, &xp).exp());
            }
        }
        acc.total() / n as f64
    }

    /// Serializable snapshot; the specs are needed to rebuild the group and potential.
    pub fn snapshot(&self, group: &GroupSpec, potential: &PotentialSpec) -> GibbsSnapshot {
        GibbsSnapshot {
            version: FORMAT_VERSION,
            group: group.clone(),
            potential: potential.clone(),
            rho_tol: self.rho_tol,
            pressure: self.pressure,
            pressure_check: self.pressure_check,
            nu_plus: self.nu_plus.clone(),
            nu_minus: self.nu_minus.clone(),
        }
    }
}

/// Holonomy along the unstable leaf: the vector of the same unstable horosphere with forward
/// endpoint `target`.
pub fn holonomy(u: &UnitTangentHopf, target: &BoundaryPoint) -> UnitTangentHopf {
    UnitTangentHopf {
        xi_plus: *target,
        ..*u
    }
}

/// `s`-interval on which the geodesic `(xi_minus, xi_plus)` is within `radius` of `center`.
pub fn ball_window(
    xi_minus: &BoundaryPoint,
    xi_plus: &BoundaryPoint,
    center: PlanePoint,
    radius: f64,
) -> Option<(f64, f64)> {
    let (g, t0) = crate::geometry::geodesic_frame(xi_minus, xi_plus, 0.0);
    let w = g.inverse().apply_point(center);
    let r = w.x.hypot(w.y);
    let cosh_h = r / w.y;
    let ratio = radius.cosh() / cosh_h;
    if ratio <= 1.0 {
        return None;
    }
    let half = ratio.acosh();
    let mid = r.ln() - t0;
    Some((mid - half, mid + half))
}

/// Cumulative weights of a measure.
pub(crate) fn cumulative(nu: &AtomicMeasure) -> Vec<f64> {
    let mut acc = 0.0;
    nu.atoms
        .iter()
        .map(|a| {
            acc += a.weight;
            acc
        })
        .collect()
}

pub(crate) fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap();
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

/// Point of the geodesic `(xi_minus, xi_plus)` closest to `o`.
pub fn closest_point(xi_minus: &BoundaryPoint, xi_plus: &BoundaryPoint, o: PlanePoint) -> PlanePoint {
    // In the frame sending the geodesic to the imaginary axis, the foot of o is i|w|.
    let v = UnitTangentHopf {
        xi_minus: *xi_minus,
        xi_plus: *xi_plus,
        s: 0.0,
    };
    let g = v.to_tangent().frame();
    let w = g.inverse().apply_point(o);
    g.apply_point(PlanePoint {
        x: 0.0,
        y: w.x.hypot(w.y),
    })
}

/// One sampled geodesic with its clipped `s`-range and Gibbs density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    pub xi_minus: BoundaryPoint,
    pub xi_plus: BoundaryPoint,
    pub s_lo: f64,
    pub s_hi: f64,
    pub density: f64,
}

impl PairSample {
    pub fn mass(&self) -> f64 {
        self.density * (self.s_hi - self.s_lo)
    }

    pub fn vector(&self, s: f64) -> UnitTangentHopf {
        UnitTangentHopf {
            xi_minus: self.xi_minus,
            xi_plus: self.xi_plus,
            s,
        }
    }
}

/// Importance sample of the Gibbs measure restricted to the fundamental domain.
#[derive(Clone, Debug)]
pub struct DomainSample {
    pub pairs: Vec<PairSample>,
}

impl DomainSample {
    pub fn total_mass(&self) -> f64 {
        crate::quadrature::compensated_sum(self.pairs.iter().map(|p| p.mass()))
    }

    /// Unnormalized `sum density * int psi ds`.
    pub fn raw_integral<P: Fn(&UnitTangentHopf) -> f64>(&self, psi: P) -> f64 {
        let mut acc = Neumaier::default();
        for p in &self.pairs {
            if p.mass() > 0.0 {
                let v = gl16().integrate_composite(p.s_lo, p.s_hi, S_STEP * 2.0, |s| psi(&p.vector(s)));
                acc.add(p.density * v);
            }
        }
        acc.total()
    }

    /// Normalized integral: `m^f(psi)` with `m^f(1) = 1`.
    pub fn integrate<P: Fn(&UnitTangentHopf) -> f64>(&self, psi: P) -> Result<f64> {
        let total = self.total_mass();
        if !(total > 0.0) {
            return Err(Error::ZeroMass("no sampled geodesic meets the fundamental domain".into()));
        }
        Ok(self.raw_integral(psi) / total)
    }
}

/// Serializable snapshot of a Gibbs system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSnapshot {
    pub version: u32,
    pub group: GroupSpec,
    pub potential: PotentialSpec,
    pub rho_tol: f64,
    pub pressure: PressureEstimate,
    pub pressure_check: PressureEstimate,
    pub nu_plus: AtomicMeasure,
    pub nu_minus: AtomicMeasure,
}

impl GibbsSnapshot {
    /// Rebuilds the system without recomputing the measures.
    pub fn restore(&self) -> Result<GibbsSystem> {
        if self.version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported snapshot version {}", self.version)));
        }
        let group = build_schottky(&self.group)?;
        let f = make_potential(&group, &self.potential)?;
        let tree = WordTree::build(&group, self.nu_plus.max_len);
        let (mut nu_plus, mut nu_minus) = (self.nu_plus.clone(), self.nu_minus.clone());
        nu_plus.reindex();
        nu_minus.reindex();
        Ok(GibbsSystem {
            f_check: f.check(),
            group,
            f,
            pressure: self.pressure,
            pressure_check: self.pressure_check,
            nu_plus,
            nu_minus,
            origin: ORIGIN,
            rho_tol: self.rho_tol,
            tree,
        })
    }
}

/// Distance between `x` and the projection of `o` onto a geodesic, exposed for tests.
pub fn distance_to_geodesic(xi_minus: &BoundaryPoint, xi_plus: &BoundaryPoint, o: PlanePoint) -> f64 {
    hyp_distance(o, closest_point(xi_minus, xi_plus, o))
}
