//! Potentials on the unit tangent bundle and their cocycles.
//!
//! Orbit potentials are sums over the orbit `G o` of a compactly supported bump of the
//! distance to each orbit point. They are evaluated by reducing the base point to the
//! fundamental domain and summing over a precomputed near-list of orbit points.
//! Along geodesics the bump terms have closed forms in arclength, which gives an exact
//! segment integrator independent of the pointwise evaluator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    busemann, direction_toward, direction_toward_boundary, hyp_distance, BoundaryPoint, Isometry,
    PlanePoint, TangentVector, UnitTangentHopf, LEVEL_EPS, ORIGIN,
};
use crate::group::{ReducedWord, SchottkyGroup};
use crate::quadrature::{gl16, gl8, Neumaier};

/// Safety factor applied to the Hölder tail bound when choosing the truncation horizon.
pub const TAIL_SAFETY: f64 = 10.0;

/// Longest panel of the exact segment integrator.
const BUMP_PANEL: f64 = 0.25;

/// Default step of the pointwise quadrature.
pub const DEFAULT_STEP: f64 = 0.05;

/// Cap on the number of orbit points a bump support may reach from the fundamental domain.
const NEAR_CAP: usize = 10_000;

/// Structured description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    BumpOrbit { amplitude: f64, radius: f64 },
    DirectionalOrbit { amplitude: f64, radius: f64, kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Zero,
    Orbit { amplitude: f64, radius: f64, kappa: f64 },
}

/// A Hölder potential `f = scale * base + shift` with declared Hölder data.
#[derive(Clone, Debug)]
pub struct Potential {
    kind: Kind,
    scale: f64,
    shift: f64,
    group: Option<SchottkyGroup>,
    near: Vec<Isometry>,
    near_words: Vec<ReducedWord>,
    near_points: Vec<PlanePoint>,
    cosh_radius: f64,
    base_lipschitz: f64,
    base_sup: f64,
}

/// Smooth bump profile `exp(-q / (1 - q))` as a function of `q` in `[0, 1)`.
#[inline]
fn profile(q: f64) -> f64 {
    if q >= 1.0 {
        0.0
    } else {
        (-q / (1.0 - q)).exp()
    }
}

/// Normalized bump of the distance: `q = (cosh d - 1) / (cosh R - 1)`.
#[inline]
fn bump_of_cosh(cosh_d: f64, cosh_r: f64) -> f64 {
    profile((cosh_d - 1.0) / (cosh_r - 1.0))
}

/// Largest slope of the unit-amplitude bump in the distance variable, from its derivative.
fn bump_lipschitz(radius: f64) -> f64 {
    let cr = radius.cosh() - 1.0;
    let n = 4000;
    let mut best: f64 = 0.0;
    for k in 1..n {
        let d = radius * k as f64 / n as f64;
        let q = (d.cosh() - 1.0) / cr;
        let dq = d.sinh() / cr;
        let g = profile(q) * dq / ((1.0 - q) * (1.0 - q));
        best = best.max(g);
    }
    best * 1.01
}

/// Builds a potential from its specification.
pub fn make_potential(group: &SchottkyGroup, spec: &PotentialSpec) -> Result<Potential> {
    match *spec {
        PotentialSpec::Zero => Ok(Potential::zero()),
        PotentialSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::InvalidPotential(format!("constant {value}")));
            }
            Ok(Potential::constant(value))
        }
        PotentialSpec::BumpOrbit { amplitude, radius } => Potential::orbit(group, amplitude, radius, 0.0),
        PotentialSpec::DirectionalOrbit {
            amplitude,
            radius,
            kappa,
        } => Potential::orbit(group, amplitude, radius, kappa),
    }
}

impl Potential {
    pub fn zero() -> Self {
        Self {
            kind: Kind::Zero,
            scale: 1.0,
            shift: 0.0,
            group: None,
            near: Vec::new(),
            near_words: Vec::new(),
            near_points: Vec::new(),
            cosh_radius: 1.0,
            base_lipschitz: 0.0,
            base_sup: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            shift: c,
            ..Self::zero()
        }
    }

    fn orbit(group: &SchottkyGroup, amplitude: f64, radius: f64, kappa: f64) -> Result<Self> {
        if !(amplitude.is_finite() && radius.is_finite() && radius > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "amplitude {amplitude}, radius {radius}, kappa {kappa}"
            )));
        }
        if kappa.abs() >= 1.0 {
            return Err(Error::InvalidPotential(format!("|kappa| = {} must be < 1", kappa.abs())));
        }
        // Supports of distinct orbit points must not overlap, so at most one term is active.
        let separation = crate::group::enumerate_words(group, 4)
            .skip(1)
            .map(|w| w.matrix.displacement())
            .fold(f64::INFINITY, f64::min);
        if 2.0 * radius >= separation {
            return Err(Error::InvalidPotential(format!(
                "support radius {radius} is at least half the orbit separation {separation:.4}"
            )));
        }
        let near_words = group.near_list(radius, NEAR_CAP)?;
        let near: Vec<Isometry> = near_words.iter().map(|w| w.matrix).collect();
        let near_points = near.iter().map(|g| g.apply_point(ORIGIN)).collect();
        let lip = bump_lipschitz(radius);
        Ok(Self {
            kind: Kind::Orbit {
                amplitude,
                radius,
                kappa,
            },
            scale: 1.0,
            shift: 0.0,
            group: Some(group.clone()),
            near,
            near_words,
            near_points,
            cosh_radius: radius.cosh(),
            // The angular factor 1 + kappa tanh(d) cos(theta) is 1-Lipschitz in kappa-units.
            base_lipschitz: amplitude.abs() * (lip * (1.0 + kappa.abs()) + 2.0 * kappa.abs()),
            base_sup: amplitude.abs() * (1.0 + kappa.abs()),
        })
    }

    /// `a * f + c`.
    pub fn affine(&self, a: f64, c: f64) -> Self {
        Self {
            scale: self.scale * a,
            shift: self.shift * a + c,
            ..self.clone()
        }
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        self.affine(1.0, c)
    }

    /// The antipodal potential `v -> f(-v)`.
    pub fn check(&self) -> Self {
        let kind = match self.kind {
            Kind::Orbit {
                amplitude,
                radius,
                kappa,
            } => Kind::Orbit {
                amplitude,
                radius,
                kappa: -kappa,
            },
            k => k,
        };
        Self { kind, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.shift == 0.0
    }

    /// Whether the potential is constant (zero base or zero scale).
    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Zero) || self.scale == 0.0
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.is_constant().then_some(self.shift)
    }

    pub fn symmetric(&self) -> bool {
        match self.kind {
            Kind::Orbit { kappa, .. } => kappa == 0.0 || self.scale == 0.0,
            Kind::Zero => true,
        }
    }

    pub fn holder_exponent(&self) -> f64 {
        1.0
    }

    pub fn holder_constant(&self) -> f64 {
        self.scale.abs() * self.base_lipschitz
    }

    pub fn sup_norm(&self) -> f64 {
        self.scale.abs() * self.base_sup + self.shift.abs()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Words whose orbit points lie within the support radius of the fundamental domain.
    pub fn near_list(&self) -> &[Isometry] {
        &self.near
    }

    /// The group of an orbit potential.
    pub fn group(&self) -> Option<&SchottkyGroup> {
        self.group.as_ref()
    }

    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            Kind::Orbit { radius, .. } => Some(radius),
            Kind::Zero => None,
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    /// Value at a tangent vector.
    pub fn eval(&self, v: &TangentVector) -> f64 {
        let Kind::Orbit {
            amplitude, kappa, ..
        } = self.kind
        else {
            return self.shift;
        };
        if self.scale == 0.0 {
            return self.shift;
        }
        let group = self.group.as_ref().expect("orbit potential carries its group");
        let (tau, _) = group.reduce_point(v.base);
        let inv = tau.inverse();
        let z = inv.apply_point(v.base);
        let angle = v.angle + inv.rotation_at(v.base);
        let mut acc = 0.0;
        for q in &self.near_points {
            let d = hyp_distance(z, *q);
            let g = bump_of_cosh(d.cosh(), self.cosh_radius);
            if g == 0.0 {
                continue;
            }
            let dir = if kappa != 0.0 && d > 0.0 {
                1.0 + kappa * d.tanh() * (angle - direction_toward(z, *q)).cos()
            } else {
                1.0
            };
            acc += amplitude * g * dir;
        }
        self.scale * acc + self.shift
    }

    pub fn eval_hopf(&self, v: &UnitTangentHopf) -> f64 {
        self.eval(&v.to_tangent())
    }

    /// `int_0^len f(phi_s v) ds` for `len >= 0`, by the exact bump integrator.
    pub fn flow_integral(&self, v: &TangentVector, len: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let base = match self.kind {
            Kind::Orbit {
                amplitude, kappa, ..
            } if self.scale != 0.0 => self.bump_integral(v, len, amplitude, kappa),
            _ => 0.0,
        };
        self.scale * base + self.shift * len
    }

    fn bump_integral(&self, v: &TangentVector, len: f64, amplitude: f64, kappa: f64) -> f64 {
        let group = self.group.as_ref().expect("orbit potential carries its group");
        let frame = v.frame().inverse();
        let pieces = group.walk_tiles(&frame, v.base, len);
        let mut seen: Vec<(f64, f64)> = Vec::new();
        let mut acc = Neumaier::default();
        for piece in &pieces {
            let m = frame.compose(&piece.tile);
            for g in &self.near {
                let w = m.compose(g).apply_point(ORIGIN);
                if seen.iter().any(|&(u, s)| (u - w.x).abs() <= 1e-9 * (1.0 + w.y) && (s - w.y).abs() <= 1e-9 * w.y) {
                    continue;
                }
                seen.push((w.x, w.y));
                acc.add(self.term_integral(w, len, amplitude, kappa));
            }
        }
        acc.total()
    }

    /// Integral over `t in [0, len]` of the bump term centered at `w`, for the upward
    /// geodesic `t -> i e^t`. With `e^{t0} = |w|` and `cosh h = |w| / Im w`,
    /// `cosh d(t) = cosh h cosh(t - t0)` and `tanh d cos(angle) = tanh(t0 - t)`.
    fn term_integral(&self, w: PlanePoint, len: f64, amplitude: f64, kappa: f64) -> f64 {
        let r = w.x.hypot(w.y);
        self.term_integral_at(r / w.y, r.ln(), len, amplitude, kappa)
    }

    /// Same integral from the height `h` of the center over the geodesic (through `cosh h`)
    /// and the arclength `t0` of its foot.
    fn term_integral_at(&self, cosh_h: f64, t0: f64, len: f64, amplitude: f64, kappa: f64) -> f64 {
        if cosh_h >= self.cosh_radius {
            return 0.0;
        }
        let half = (self.cosh_radius / cosh_h).acosh();
        let lo = (t0 - half).max(0.0);
        let hi = (t0 + half).min(len);
        if hi <= lo {
            return 0.0;
        }
        let cr = self.cosh_radius;
        amplitude
            * gl16().integrate_composite(lo, hi, BUMP_PANEL, |t| {
                let g = bump_of_cosh(cosh_h * (t - t0).cosh(), cr);
                g * (1.0 + kappa * (t0 - t).tanh())
            })
    }

    /// `int_x^{g x} f` for the reduced word `g`, with `x` in the fundamental domain.
    ///
    /// The segment only meets the tiles of the prefixes of `g`, so the active bump centers
    /// are `w h o` for prefixes `w` and near-list words `h`. Each term is placed on the
    /// segment through the three distances `d(x, c)`, `d(g x, c)` and `d(x, g x)`, all of
    /// which come from products of generator matrices. Nothing is evaluated at points near
    /// the boundary, so the result stays accurate for long words.
    pub fn orbit_integral(&self, word: &ReducedWord, x: PlanePoint) -> f64 {
        let frame = crate::geometry::segment_frame(x, PlanePoint { x: x.x, y: 2.0 * x.y }).0;
        let len = frame.compose(&word.matrix).compose(&frame.inverse()).displacement();
        let base = match self.kind {
            Kind::Orbit {
                amplitude, kappa, ..
            } if self.scale != 0.0 => {
                let group = self.group.as_ref().expect("orbit potential carries its group");
                let inv = word.inverse();
                let mut seen: Vec<Vec<u8>> = Vec::new();
                let mut acc = Neumaier::default();
                for k in 0..=word.len() {
                    let prefix = ReducedWord::from_letters(group, &word.letters[..k]).expect("prefix of a reduced word");
                    for h in &self.near_words {
                        let center = prefix.mul(group, h);
                        if seen.contains(&center.letters) {
                            continue;
                        }
                        let a = frame.compose(&center.matrix).frobenius_sq();
                        let b = frame.compose(&inv.mul(group, &center).matrix).frobenius_sq();
                        seen.push(center.letters);
                        let (cosh_h, t0) = foot_on_segment((0.5 * a).acosh(), (0.5 * b).acosh(), len);
                        acc.add(self.term_integral_at(cosh_h, t0, len, amplitude, kappa));
                    }
                }
                acc.total()
            }
            _ => 0.0,
        };
        self.scale * base + self.shift * len
    }

    /// Pointwise composite Gauss-Legendre quadrature of `int_0^len f(phi_s v) ds`.
    pub fn flow_integral_pointwise(&self, v: &TangentVector, len: f64, step: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let frame = v.frame();
        gl8().integrate_composite(0.0, len, step, |s| {
            let u = TangentVector::new(PlanePoint { x: 0.0, y: s.exp() }, std::f64::consts::FRAC_PI_2);
            self.eval(&frame.apply_tangent(&u))
        })
    }

    /// Signed flow integral `int_0^t f(phi_s v) ds`, negative times included.
    pub fn flow_integral_signed(&self, v: &TangentVector, t: f64) -> f64 {
        if t >= 0.0 {
            self.flow_integral(v, t)
        } else {
            let back = flow_tangent(v, t);
            -self.flow_integral(&back, -t)
        }
    }

    /// Integral of `f` along the oriented geodesic segment from `x` to `y`.
    pub fn geodesic_integral(&self, x: PlanePoint, y: PlanePoint) -> f64 {
        let d = hyp_distance(x, y);
        if d == 0.0 {
            return 0.0;
        }
        self.flow_integral(&TangentVector::new(x, direction_toward(x, y)), d)
    }

    /// Same integral by pointwise quadrature with the given arclength step.
    pub fn geodesic_integral_pointwise(&self, x: PlanePoint, y: PlanePoint, step: f64) -> f64 {
        let d = hyp_distance(x, y);
        if d == 0.0 {
            return 0.0;
        }
        self.flow_integral_pointwise(&TangentVector::new(x, direction_toward(x, y)), d, step)
    }

    /// Integral along the ray from `x` toward `xi`, of length `len`.
    pub fn ray_integral(&self, x: PlanePoint, xi: &BoundaryPoint, len: f64) -> f64 {
        self.flow_integral(&TangentVector::new(x, direction_toward_boundary(x, xi)), len)
    }

    /// Truncation horizon for `rho` at tolerance `tol`.
    pub fn rho_horizon(&self, x: PlanePoint, y: PlanePoint, tol: f64) -> f64 {
        let c = self.holder_constant() + self.sup_norm();
        let tail = (TAIL_SAFETY * c.max(1e-300) / tol).ln().max(0.0) / self.holder_exponent();
        hyp_distance(x, y) + tail
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Zero => write!(f, "constant({})", self.shift),
            Kind::Orbit {
                amplitude,
                radius,
                kappa,
            } => {
                if kappa == 0.0 {
                    write!(f, "bump_orbit(A={amplitude},R={radius})")?;
                } else {
                    write!(f, "directional_orbit(A={amplitude},R={radius},kappa={kappa})")?;
                }
                if self.scale != 1.0 {
                    write!(f, "*{}", self.scale)?;
                }
                if self.shift != 0.0 {
                    write!(f, "+{}", self.shift)?;
                }
                Ok(())
            }
        }
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// For a point `c` with `d(p, c) = a` and `d(q, c) = b` where `d(p, q) = len`, returns
/// `cosh h` and the arclength `t0` from `p` of the foot of `c` on the line `pq`.
/// Uses `e^{2 t0} = (cosh a e^len - cosh b) / (cosh b - cosh a e^-len)` in log form.
fn foot_on_segment(a: f64, b: f64, len: f64) -> (f64, f64) {
    let (la, lb) = (ln_cosh(a), ln_cosh(b));
    let num = la + len + (-(lb - la - len).exp()).ln_1p();
    let den = lb + (-(la - len - lb).exp()).ln_1p();
    let t0 = 0.5 * (num - den);
    let cosh_h = (la - ln_cosh(t0)).exp().max(1.0);
    (cosh_h, t0)
}

/// Tangent vector `phi_t v` computed through the frame of `v`.
pub fn flow_tangent(v: &TangentVector, t: f64) -> TangentVector {
    let u = TangentVector::new(PlanePoint { x: 0.0, y: t.exp() }, std::f64::consts::FRAC_PI_2);
    v.frame().apply_tangent(&u)
}

/// Integral of `f` along the oriented geodesic segment `x -> y`.
pub fn geodesic_integral(f: &Potential, x: PlanePoint, y: PlanePoint) -> f64 {
    f.geodesic_integral(x, y)
}

/// Truncated `rho^f_xi(x, y)` with explicit horizon. Rays from `x` and `y` toward `xi`
/// are cut on a common horosphere, so constants contribute exactly `c * beta_xi(x, y)`.
pub fn rho_cocycle_with_horizon(f: &Potential, xi: &BoundaryPoint, x: PlanePoint, y: PlanePoint, horizon: f64) -> f64 {
    let b = busemann(xi, x, y);
    if let Some(c) = f.constant_value() {
        return c * b;
    }
    let ty = horizon + (-b).max(0.0);
    let tx = ty + b;
    f.ray_integral(x, xi, tx) - f.ray_integral(y, xi, ty)
}

/// `rho^f_xi(x, y)` to tolerance `tol`.
pub fn rho_cocycle(f: &Potential, xi: &BoundaryPoint, x: PlanePoint, y: PlanePoint, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol}")));
    }
    if !(f.holder_exponent() > 0.0) {
        return Err(Error::InvalidPotential("missing Hölder exponent".into()));
    }
    Ok(rho_cocycle_with_horizon(f, xi, x, y, f.rho_horizon(x, y, tol)))
}

fn check_same_unstable(v: &UnitTangentHopf, w: &UnitTangentHopf) -> Result<()> {
    if !v.xi_minus.approx_eq(&w.xi_minus) || (v.s - w.s).abs() > LEVEL_EPS {
        return Err(Error::NotOnHorosphere("strong unstable"));
    }
    Ok(())
}

/// Leaf cocycle `rho^f(v, w) = rho^f_{v-}(pi v, pi w)` on a strong unstable horosphere.
pub fn rho_leaf(f: &Potential, v: &UnitTangentHopf, w: &UnitTangentHopf, tol: f64) -> Result<f64> {
    check_same_unstable(v, w)?;
    rho_cocycle(f, &v.xi_minus, v.base_point(), w.base_point(), tol)
}

/// The same cocycle from backward orbits: integrals of the antipodal potential over the
/// forward-oriented segments `phi_{-T} v -> v` and `phi_{-T} w -> w`.
pub fn rho_leaf_backward(f: &Potential, v: &UnitTangentHopf, w: &UnitTangentHopf, horizon: f64) -> Result<f64> {
    check_same_unstable(v, w)?;
    let fc = f.check();
    let a = fc.flow_integral(&v.flow(-horizon).to_tangent(), horizon);
    let b = fc.flow_integral(&w.flow(-horizon).to_tangent(), horizon);
    Ok(a - b)
}

/// Group cocycle `c^f_o(g, xi) = -rho^f_xi(o, g^-1 o)`.
pub fn c_cocycle(f: &Potential, g: &Isometry, xi: &BoundaryPoint, tol: f64) -> Result<f64> {
    let back = g.inverse().apply_point(ORIGIN);
    Ok(-rho_cocycle(f, xi, ORIGIN, back, tol)?)
}

/// `beta^f_xi(x, y) = delta beta_xi(x, y) - rho^f_xi(x, y)`.
pub fn beta_f(f: &Potential, delta: f64, xi: &BoundaryPoint, x: PlanePoint, y: PlanePoint, tol: f64) -> Result<f64> {
    Ok(delta * busemann(xi, x, y) - rho_cocycle(f, xi, x, y, tol)?)
}

/// The antipodal potential.
pub fn check_potential(f: &Potential) -> Potential {
    f.check()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_outside_support() {
        assert_eq!(bump_of_cosh(2f64.cosh(), 1f64.cosh()), 0.0);
        assert_eq!(bump_of_cosh(1.0, 1f64.cosh()), 1.0);
    }

    #[test]
    fn near_list_of_default_radius_is_trivial() {
        let g = SchottkyGroup::standard();
        let f = make_potential(&g, &PotentialSpec::BumpOrbit { amplitude: 1.0, radius: 1.0 }).unwrap();
        assert_eq!(f.near_list().len(), 1);
    }

    #[test]
    fn exact_and_pointwise_integrators_agree() {
        let g = SchottkyGroup::standard();
        let f = make_potential(
            &g,
            &PotentialSpec::DirectionalOrbit {
                amplitude: 0.7,
                radius: 1.2,
                kappa: 0.5,
            },
        )
        .unwrap();
        let x = PlanePoint { x: -0.3, y: 0.8 };
        for w in crate::group::enumerate_words(&g, 3).skip(1) {
            let y = w.matrix.apply_point(PlanePoint { x: 0.4, y: 1.3 });
            let a = f.geodesic_integral(x, y);
            let b = f.geodesic_integral_pointwise(x, y, DEFAULT_STEP);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn orbit_integral_matches_tile_walk_on_short_words() {
        // Beyond length 3 the tile walk itself loses accuracy: its direction error is
        // amplified by e^D along the segment.
        let g = SchottkyGroup::standard();
        let f = Potential::orbit(&g, 0.7, 1.2, 0.5).unwrap();
        let x = PlanePoint { x: 0.2, y: 1.3 };
        for w in crate::group::enumerate_words(&g, 3).skip(1) {
            let a = f.orbit_integral(&w, x);
            let b = f.geodesic_integral(x, w.matrix.apply_point(x));
            assert!((a - b).abs() < 1e-9, "{:?}: {a} vs {b}", w.letters);
        }
    }

    #[test]
    fn orbit_integral_reverses_to_antipodal_potential() {
        let g = SchottkyGroup::standard();
        let f = Potential::orbit(&g, 0.7, 1.2, 0.5).unwrap();
        let fc = f.check();
        let x = PlanePoint { x: -0.3, y: 1.1 };
        for letters in [vec![0u8, 2, 2, 2, 0, 3, 1, 1, 1, 3, 3], vec![2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0]] {
            let w = ReducedWord::from_letters(&g, &letters).unwrap();
            let a = f.orbit_integral(&w, x);
            let b = fc.orbit_integral(&w.inverse(), x);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
