//! Schottky groups: ping-pong disks, reduced words, cylinders and the fundamental domain.
//!
//! Letters are indexed so that `2i` is the generator `g_i` and `2i + 1` its inverse;
//! `letter ^ 1` is therefore the inverse letter. The disk attached to a letter is the
//! one it maps the outside of its inverse's disk into: `g_i` owns `D_i+`, `g_i^-1` owns `D_i-`.
//! The fundamental domain `F` is the closed exterior of all half-disks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    distance_between_semicircles, distance_to_semicircle, geodesic_frame, segment_frame, BoundaryPoint, Isometry,
    PlanePoint, TangentVector, UnitTangentHopf, ORIGIN,
};

/// A half-disk over the real interval `[center - radius, center + radius]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: f64,
    pub radius: f64,
}

impl Disk {
    /// Strict interior membership for plane points.
    #[inline]
    pub fn contains_point(&self, z: PlanePoint) -> bool {
        let dx = z.x - self.center;
        dx * dx + z.y * z.y < self.radius * self.radius
    }

    /// Closed membership for boundary points (infinity is never inside).
    pub fn contains_boundary(&self, xi: &BoundaryPoint) -> bool {
        let x = xi.to_real();
        x.is_finite() && (x - self.center).abs() <= self.radius
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Structured description of a Schottky group: disk pair `i` is `(D_i-, D_i+)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub rank: usize,
    /// `[c-, c+]` for each generator.
    pub centers: Vec<[f64; 2]>,
    /// `[r-, r+]` for each generator.
    pub radii: Vec<[f64; 2]>,
    /// Optional explicit generator matrices `[a, b, c, d]`; derived from the disks if absent.
    #[serde(default)]
    pub matrices: Option<Vec<[f64; 4]>>,
}

impl GroupSpec {
    /// Rank 2, disks centered at -2, 2 and -6, 6 with radius 1.
    pub fn standard() -> Self {
        Self {
            rank: 2,
            centers: vec![[-2.0, 2.0], [-6.0, 6.0]],
            radii: vec![[1.0, 1.0], [1.0, 1.0]],
            matrices: None,
        }
    }
}

/// A Fuchsian Schottky group with validated ping-pong data.
#[derive(Clone, Debug)]
pub struct SchottkyGroup {
    rank: usize,
    disks: Vec<Disk>,
    letters: Vec<Isometry>,
}

/// Number of ping-pong samples used during validation.
const PING_PONG_SAMPLES: usize = 1000;

/// Generator pairing the circles: `g(z) = c+ - r+ r- / (z - c-)`.
pub fn pairing_generator(minus: Disk, plus: Disk) -> Isometry {
    let (cm, cp) = (minus.center, plus.center);
    let rr = minus.radius * plus.radius;
    Isometry::new(cp, -rr - cp * cm, 1.0, -cm).expect("positive determinant r+ r-")
}

impl SchottkyGroup {
    pub fn standard() -> Self {
        build_schottky(&GroupSpec::standard()).expect("standard group is valid")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_letters(&self) -> usize {
        2 * self.rank
    }

    /// Matrix of a letter.
    #[inline]
    pub fn letter(&self, l: u8) -> &Isometry {
        &self.letters[l as usize]
    }

    /// Disk owned by a letter.
    #[inline]
    pub fn disk(&self, l: u8) -> &Disk {
        &self.disks[l as usize]
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn generators(&self) -> Vec<Isometry> {
        self.letters.iter().step_by(2).copied().collect()
    }

    /// Checks that the 2k disks are pairwise disjoint with positive gaps.
    fn check_disks(disks: &[Disk]) -> Result<()> {
        for d in disks {
            if !(d.center.is_finite() && d.radius.is_finite() && d.radius > 0.0) {
                return Err(Error::InvalidDisks(format!(
                    "disk center {} radius {} is not a finite positive-radius disk",
                    d.center, d.radius
                )));
            }
        }
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                let gap = (disks[i].center - disks[j].center).abs() - disks[i].radius - disks[j].radius;
                if gap <= 0.0 {
                    return Err(Error::InvalidDisks(format!(
                        "disks {i} and {j} overlap (gap {gap})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Verifies that each letter maps the outside of its inverse's disk into its own disk.
    fn check_ping_pong(&self) -> Result<()> {
        for l in 0..self.num_letters() as u8 {
            let g = self.letter(l);
            let src = self.disk(l ^ 1);
            let dst = self.disk(l);
            // The boundary circle must be carried onto the boundary circle.
            let (p, q) = src.interval();
            let images = [
                g.apply_boundary(&BoundaryPoint::from_real(p)).to_real(),
                g.apply_boundary(&BoundaryPoint::from_real(q)).to_real(),
            ];
            let (lo, hi) = dst.interval();
            let ok = |x: f64, y: f64| (x - lo).abs() < 1e-9 * (1.0 + lo.abs()) && (y - hi).abs() < 1e-9 * (1.0 + hi.abs());
            if !(ok(images[0], images[1]) || ok(images[1], images[0])) {
                return Err(Error::PingPong(format!(
                    "letter {l} does not pair the circles of its disks"
                )));
            }
            for k in 0..PING_PONG_SAMPLES {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / PING_PONG_SAMPLES as f64;
                let xi = BoundaryPoint::new(theta.cos(), theta.sin())?;
                if src.contains_boundary(&xi) {
                    continue;
                }
                let img = g.apply_boundary(&xi);
                let x = img.to_real();
                if !(x.is_finite() && (x - dst.center).abs() < dst.radius) {
                    return Err(Error::PingPong(format!(
                        "letter {l} sends {} outside its target disk",
                        xi.to_real()
                    )));
                }
            }
        }
        Ok(())
    }

    // ---- fundamental domain -------------------------------------------------------------

    /// Whether `z` lies in the closed fundamental domain `F`.
    pub fn fundamental_domain_contains(&self, z: PlanePoint) -> bool {
        self.disks.iter().all(|d| !d.contains_point(z))
    }

    /// Letter whose open half-disk contains `z`, if any.
    #[inline]
    pub fn disk_containing(&self, z: PlanePoint) -> Option<u8> {
        self.disks.iter().position(|d| d.contains_point(z)).map(|i| i as u8)
    }

    /// Greedy disk escape. Returns `(g, g^-1 z)` with `g^-1 z` in `F`; the first letter of `g`
    /// is the disk containing `z`, so the first escape step applies its inverse.
    pub fn reduce_point(&self, z: PlanePoint) -> (Isometry, PlanePoint) {
        let mut g = Isometry::identity();
        let mut w = z;
        for _ in 0..MAX_REDUCTION_STEPS {
            match self.disk_containing(w) {
                None => break,
                Some(l) => {
                    w = self.letter(l ^ 1).apply_point(w);
                    g = g.compose(self.letter(l));
                }
            }
        }
        (g, w)
    }

    /// Same as [`reduce_point`](Self::reduce_point) but also returns the reducing word.
    pub fn reduce_to_domain(&self, z: PlanePoint) -> (ReducedWord, PlanePoint) {
        let mut word = ReducedWord::identity();
        let mut w = z;
        for _ in 0..MAX_REDUCTION_STEPS {
            match self.disk_containing(w) {
                None => break,
                Some(l) => {
                    w = self.letter(l ^ 1).apply_point(w);
                    word.letters.push(l);
                    word.matrix = word.matrix.compose(self.letter(l));
                }
            }
        }
        (word, w)
    }

    /// Reduces a tangent vector so that its base point lies in `F`.
    pub fn reduce_tangent(&self, v: &TangentVector) -> (Isometry, TangentVector) {
        let (g, _) = self.reduce_point(v.base);
        (g, g.inverse().apply_tangent(v))
    }

    /// Hyperbolic distance from `z` to `F`.
    pub fn distance_to_domain(&self, z: PlanePoint) -> f64 {
        match self.disk_containing(z) {
            None => 0.0,
            Some(l) => {
                let d = self.disk(l);
                distance_to_semicircle(z, d.center, d.radius)
            }
        }
    }

    // ---- cylinders --------------------------------------------------------------------

    /// Boundary interval of the cylinder of `w`: the prefix of `w` applied to the disk of
    /// its last letter.
    pub fn cylinder_interval(&self, w: &ReducedWord) -> Result<(f64, f64)> {
        let last = *w.letters.last().ok_or(Error::EmptyWord)?;
        let mut prefix = Isometry::identity();
        for &l in &w.letters[..w.letters.len() - 1] {
            prefix = prefix.compose(self.letter(l));
        }
        Ok(self.image_interval(&prefix, last))
    }

    /// Image under `prefix` of the disk of `last`, as an interval of the real line.
    pub fn image_interval(&self, prefix: &Isometry, last: u8) -> (f64, f64) {
        let (p, q) = self.disk(last).interval();
        let x = prefix.apply_boundary(&BoundaryPoint::from_real(p)).to_real();
        let y = prefix.apply_boundary(&BoundaryPoint::from_real(q)).to_real();
        (x.min(y), x.max(y))
    }

    /// Attracting fixed point of a nonempty word.
    pub fn attracting_fixed_point(&self, w: &ReducedWord) -> Result<BoundaryPoint> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        w.matrix
            .attracting_fixed_point()
            .ok_or_else(|| Error::InvalidArgument("word is not hyperbolic".into()))
    }

    /// Letters of the depth-`depth` cylinder containing `xi`, or `None` if `xi` is outside
    /// the depth-`depth` cover of the limit set. Cylinders are found with forward maps only,
    /// which contract, so the test stays accurate at large depth.
    pub fn coding(&self, xi: &BoundaryPoint, depth: usize) -> Option<Vec<u8>> {
        let x = xi.to_real();
        if !x.is_finite() {
            return None;
        }
        let mut letters = Vec::with_capacity(depth);
        let mut prefix = Isometry::identity();
        for _ in 0..depth {
            let prev = letters.last().copied();
            let mut found = None;
            for l in 0..self.num_letters() as u8 {
                if prev == Some(l ^ 1) {
                    continue;
                }
                let (lo, hi) = self.image_interval(&prefix, l);
                let tol = 1e-14 * (1.0 + x.abs());
                if x >= lo - tol && x <= hi + tol {
                    found = Some(l);
                    break;
                }
            }
            let l = found?;
            letters.push(l);
            prefix = prefix.compose(self.letter(l));
        }
        Some(letters)
    }

    /// Whether both endpoints of `v` lie in the depth-`depth` cover of the limit set.
    pub fn in_nonwandering(&self, v: &UnitTangentHopf, depth: usize) -> bool {
        self.coding(&v.xi_minus, depth).is_some() && self.coding(&v.xi_plus, depth).is_some()
    }

    // ---- orbit geometry ---------------------------------------------------------------

    /// Words `g` whose orbit point `g o` lies within distance `radius` of `F`, found by a
    /// depth-first search pruned with the distance between nested semicircles.
    pub fn near_list(&self, radius: f64, cap: usize) -> Result<Vec<ReducedWord>> {
        let mut out = vec![ReducedWord::identity()];
        let mut stack: Vec<ReducedWord> = (0..self.num_letters() as u8)
            .rev()
            .map(|l| ReducedWord {
                letters: vec![l],
                matrix: *self.letter(l),
            })
            .collect();
        while let Some(w) = stack.pop() {
            if self.distance_to_domain(w.matrix.apply_point(ORIGIN)) < radius {
                out.push(w.clone());
                if out.len() > cap {
                    return Err(Error::InvalidPotential(format!(
                        "support radius {radius} reaches more than {cap} orbit points"
                    )));
                }
            }
            let last = *w.letters.last().unwrap();
            let first = w.letters[0];
            for l in (0..self.num_letters() as u8).rev() {
                if l == last ^ 1 {
                    continue;
                }
                let (lo, hi) = self.image_interval(&w.matrix, l);
                let fd = self.disk(first);
                let gap = distance_between_semicircles(0.5 * (lo + hi), 0.5 * (hi - lo), fd.center, fd.radius);
                if gap < radius {
                    stack.push(w.append(self, l));
                }
            }
        }
        Ok(out)
    }

    /// Range of the Hopf coordinate `s` for which the vector `(xi_minus, xi_plus, s)` has
    /// its base point in `F`. `None` if the geodesic misses `F`; infinite ends are possible
    /// when an endpoint lies outside every disk.
    pub fn clip_geodesic(&self, xi_minus: &BoundaryPoint, xi_plus: &BoundaryPoint) -> Option<(f64, f64)> {
        if xi_minus.approx_eq(xi_plus) {
            return None;
        }
        let (g, t0) = geodesic_frame(xi_minus, xi_plus, 0.0);
        let inv = g.inverse();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for disk in &self.disks {
            let in_minus = disk.contains_boundary(xi_minus);
            let in_plus = disk.contains_boundary(xi_plus);
            if in_minus && in_plus {
                return None;
            }
            if !(in_minus || in_plus) {
                continue;
            }
            let (p, q) = disk.interval();
            let u = inv.apply_boundary(&BoundaryPoint::from_real(p)).to_real();
            let v = inv.apply_boundary(&BoundaryPoint::from_real(q)).to_real();
            if !(u.is_finite() && v.is_finite() && u * v < 0.0) {
                continue;
            }
            let tc = 0.5 * (-u * v).ln();
            if in_minus {
                lo = lo.max(tc);
            } else {
                hi = hi.min(tc);
            }
        }
        (lo < hi).then_some((lo - t0, hi - t0))
    }

    /// Pieces of the oriented segment `x -> y` inside successive tiles `g F`.
    /// Returns the frame `A` of the segment (`A x = i`, `A y = i e^D`), its length `D`,
    /// and for each tile the isometry `g` with the arclength interval it covers.
    pub fn segment_tiles(&self, x: PlanePoint, y: PlanePoint) -> (Isometry, f64, Vec<TilePiece>) {
        let (frame, len) = segment_frame(x, y);
        let pieces = self.walk_tiles(&frame, x, len);
        (frame, len, pieces)
    }

    /// Tile walk along the geodesic `t -> A^-1(i e^t)`, `t` in `[0, len]`, starting at `x`.
    pub fn walk_tiles(&self, frame: &Isometry, x: PlanePoint, len: f64) -> Vec<TilePiece> {
        let (mut tile, _) = self.reduce_point(x);
        let mut t_in = 0.0;
        let mut entry: Option<u8> = None;
        let mut pieces = Vec::new();
        for _ in 0..MAX_REDUCTION_STEPS {
            let at = frame.compose(&tile);
            let mut best: Option<(f64, u8)> = None;
            for l in 0..self.num_letters() as u8 {
                if entry == Some(l ^ 1) {
                    continue;
                }
                if let Some(t) = axis_crossing(&at, self.disk(l)) {
                    if t > t_in && best.is_none_or(|(b, _)| t < b) {
                        best = Some((t, l));
                    }
                }
            }
            match best {
                Some((t_out, l)) if t_out < len => {
                    pieces.push(TilePiece {
                        tile,
                        t_in,
                        t_out,
                    });
                    tile = tile.compose(self.letter(l));
                    entry = Some(l);
                    t_in = t_out;
                }
                _ => {
                    pieces.push(TilePiece {
                        tile,
                        t_in,
                        t_out: len,
                    });
                    break;
                }
            }
        }
        pieces
    }
}

/// Portion `[t_in, t_out]` of a parametrized geodesic lying in the tile `tile F`.
#[derive(Clone, Copy, Debug)]
pub struct TilePiece {
    pub tile: Isometry,
    pub t_in: f64,
    pub t_out: f64,
}

/// Arclength parameter where the image under `m` of the semicircle of `disk` crosses the
/// imaginary axis, if it does.
fn axis_crossing(m: &Isometry, disk: &Disk) -> Option<f64> {
    let (p, q) = disk.interval();
    let u = m.apply_boundary(&BoundaryPoint::from_real(p)).to_real();
    let v = m.apply_boundary(&BoundaryPoint::from_real(q)).to_real();
    if u.is_finite() && v.is_finite() && u * v < 0.0 {
        Some(0.5 * (-u * v).ln())
    } else {
        None
    }
}

const MAX_REDUCTION_STEPS: usize = 100_000;

/// Builds and validates a Schottky group.
pub fn build_schottky(spec: &GroupSpec) -> Result<SchottkyGroup> {
    if spec.rank < 2 {
        return Err(Error::InvalidDisks(format!("rank {} < 2", spec.rank)));
    }
    if spec.centers.len() != spec.rank || spec.radii.len() != spec.rank {
        return Err(Error::InvalidDisks(format!(
            "rank {} but {} center pairs and {} radius pairs",
            spec.rank,
            spec.centers.len(),
            spec.radii.len()
        )));
    }
    let mut disks = Vec::with_capacity(2 * spec.rank);
    for i in 0..spec.rank {
        disks.push(Disk {
            center: spec.centers[i][1],
            radius: spec.radii[i][1],
        });
        disks.push(Disk {
            center: spec.centers[i][0],
            radius: spec.radii[i][0],
        });
    }
    SchottkyGroup::check_disks(&disks)?;
    let gens: Vec<Isometry> = match &spec.matrices {
        Some(ms) => {
            if ms.len() != spec.rank {
                return Err(Error::InvalidDisks(format!(
                    "{} matrices for rank {}",
                    ms.len(),
                    spec.rank
                )));
            }
            ms.iter()
                .map(|m| Isometry::new(m[0], m[1], m[2], m[3]))
                .collect::<Result<_>>()?
        }
        None => (0..spec.rank)
            .map(|i| pairing_generator(disks[2 * i + 1], disks[2 * i]))
            .collect(),
    };
    let mut letters = Vec::with_capacity(2 * spec.rank);
    for g in gens {
        letters.push(g);
        letters.push(g.inverse());
    }
    let group = SchottkyGroup {
        rank: spec.rank,
        disks,
        letters,
    };
    group.check_ping_pong()?;
    Ok(group)
}

/// A reduced word with its cached matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedWord {
    pub letters: Vec<u8>,
    pub matrix: Isometry,
}

impl ReducedWord {
    pub fn identity() -> Self {
        Self {
            letters: Vec::new(),
            matrix: Isometry::identity(),
        }
    }

    pub fn from_letters(group: &SchottkyGroup, letters: &[u8]) -> Result<Self> {
        let mut w = Self::identity();
        for &l in letters {
            if l as usize >= group.num_letters() {
                return Err(Error::InvalidArgument(format!("letter {l} out of range")));
            }
            if w.letters.last() == Some(&(l ^ 1)) {
                return Err(Error::InvalidArgument("word is not reduced".into()));
            }
            w = w.append(group, l);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends a letter, assuming the result stays reduced.
    pub fn append(&self, group: &SchottkyGroup, l: u8) -> Self {
        let mut letters = self.letters.clone();
        letters.push(l);
        Self {
            letters,
            matrix: self.matrix.compose(group.letter(l)),
        }
    }

    /// Reduced product `self * other`.
    pub fn mul(&self, group: &SchottkyGroup, other: &ReducedWord) -> Self {
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last() == Some(&(l ^ 1)) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        let mut m = Isometry::identity();
        for &l in &letters {
            m = m.compose(group.letter(l));
        }
        Self { letters, matrix: m }
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|l| l ^ 1).collect(),
            matrix: self.matrix.inverse(),
        }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&a), Some(&b)) => a != b ^ 1 || self.letters.len() == 1,
            _ => true,
        }
    }
}

/// Count `1 + sum_{l=1..L} 2k (2k-1)^{l-1}` of reduced words of length at most `L`.
pub fn word_count(rank: usize, max_len: usize) -> usize {
    let n = 2 * rank;
    let mut total = 1;
    let mut shell = n;
    for _ in 0..max_len {
        total += shell;
        shell *= n - 1;
    }
    total
}

/// Lazy enumeration of reduced words by length, lexicographic within a length.
pub struct WordIter<'a> {
    group: &'a SchottkyGroup,
    max_len: usize,
    letters: Vec<u8>,
    prefixes: Vec<Isometry>,
    started: bool,
    done: bool,
}

/// Enumerates all reduced words of length at most `max_len`.
pub fn enumerate_words(group: &SchottkyGroup, max_len: usize) -> WordIter<'_> {
    WordIter {
        group,
        max_len,
        letters: Vec::new(),
        prefixes: vec![Isometry::identity()],
        started: false,
        done: false,
    }
}

impl WordIter<'_> {
    /// Smallest reduced word of length `n` is `0 0 ... 0`.
    fn first_of_length(&mut self, n: usize) {
        self.letters.clear();
        self.letters.resize(n, 0);
        self.rebuild(0);
    }

    fn rebuild(&mut self, from: usize) {
        self.prefixes.truncate(from + 1);
        for i in from..self.letters.len() {
            let m = self.prefixes[i].compose(self.group.letter(self.letters[i]));
            self.prefixes.push(m);
        }
    }

    /// Advances to the next word of the same length; false if exhausted.
    fn advance(&mut self) -> bool {
        let n = self.group.num_letters() as u8;
        let len = self.letters.len();
        let mut pos = len;
        while pos > 0 {
            pos -= 1;
            let prev = if pos == 0 { None } else { Some(self.letters[pos - 1]) };
            let mut l = self.letters[pos] + 1;
            if prev == Some(l ^ 1) {
                l += 1;
            }
            if l < n {
                self.letters[pos] = l;
                for i in pos + 1..len {
                    self.letters[i] = if self.letters[i - 1] == 1 { 1 } else { 0 };
                }
                self.rebuild(pos);
                return true;
            }
        }
        false
    }
}

impl Iterator for WordIter<'_> {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(ReducedWord::identity());
        }
        if self.letters.is_empty() || !self.advance() {
            let n = self.letters.len() + 1;
            if n > self.max_len {
                self.done = true;
                return None;
            }
            self.first_of_length(n);
        }
        Some(ReducedWord {
            letters: self.letters.clone(),
            matrix: *self.prefixes.last().unwrap(),
        })
    }
}

/// Breadth-first word tree with one node per reduced word, in the same order as
/// [`enumerate_words`]. Used for bulk orbit computations.
#[derive(Clone, Debug)]
pub struct WordTree {
    pub parent: Vec<u32>,
    pub letter: Vec<u8>,
    pub matrix: Vec<Isometry>,
    /// `shell_start[l]..shell_start[l+1]` are the words of length `l`.
    pub shell_start: Vec<usize>,
}

impl WordTree {
    pub fn build(group: &SchottkyGroup, max_len: usize) -> Self {
        let total = word_count(group.rank(), max_len);
        let mut parent = Vec::with_capacity(total);
        let mut letter = Vec::with_capacity(total);
        let mut matrix = Vec::with_capacity(total);
        parent.push(u32::MAX);
        letter.push(u8::MAX);
        matrix.push(Isometry::identity());
        let mut shell_start = vec![0, 1];
        for _ in 0..max_len {
            let (lo, hi) = (shell_start[shell_start.len() - 2], shell_start[shell_start.len() - 1]);
            for p in lo..hi {
                let last = letter[p];
                for l in 0..group.num_letters() as u8 {
                    if last != u8::MAX && l == last ^ 1 {
                        continue;
                    }
                    parent.push(p as u32);
                    letter.push(l);
                    matrix.push(matrix[p].compose(group.letter(l)));
                }
            }
            shell_start.push(parent.len());
        }
        Self {
            parent,
            letter,
            matrix,
            shell_start,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.shell_start.len() - 2
    }

    pub fn shell(&self, l: usize) -> std::ops::Range<usize> {
        self.shell_start[l]..self.shell_start[l + 1]
    }

    pub fn word_length(&self, node: usize) -> usize {
        self.shell_start.partition_point(|&s| s <= node) - 1
    }

    pub fn letters(&self, node: usize) -> Vec<u8> {
        let mut out = Vec::new();
        let mut n = node;
        while n != 0 {
            out.push(self.letter[n]);
            n = self.parent[n] as usize;
        }
        out.reverse();
        out
    }

    pub fn word(&self, node: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters(node),
            matrix: self.matrix[node],
        }
    }

    /// Ancestor of `node` at the given depth.
    pub fn ancestor(&self, node: usize, depth: usize) -> usize {
        let mut n = node;
        let mut len = self.word_length(node);
        while len > depth {
            n = self.parent[n] as usize;
            len -= 1;
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_generator_matrix() {
        let g = SchottkyGroup::standard();
        let m = g.letter(0);
        assert_eq!((m.a, m.b, m.c, m.d), (2.0, 3.0, 1.0, 2.0));
        assert_eq!(m.trace(), 4.0);
    }

    #[test]
    fn counts_and_order() {
        let g = SchottkyGroup::standard();
        assert_eq!(enumerate_words(&g, 1).count(), 5);
        assert_eq!(enumerate_words(&g, 3).count(), 53);
        let tree = WordTree::build(&g, 3);
        let words: Vec<_> = enumerate_words(&g, 3).collect();
        for (i, w) in words.iter().enumerate() {
            assert_eq!(tree.letters(i), w.letters);
        }
    }

    #[test]
    fn first_escape_undoes_the_disk_letter() {
        let g = SchottkyGroup::standard();
        let z = PlanePoint { x: 2.1, y: 0.3 };
        let (w, r) = g.reduce_to_domain(z);
        assert_eq!(w.letters[0], 0);
        assert!(g.fundamental_domain_contains(r));
    }
}
