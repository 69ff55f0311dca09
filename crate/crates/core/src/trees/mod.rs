//! Dual trees, length functions, scales and centers of actions on H³.

mod survey;

pub use survey::*;

use crate::develop::Representation;
use crate::epstein::pairwise_distances;
use crate::error::{Error, Result};
use crate::hyp3::{DistanceMatrix, H3Point, ScaledMoebius, C64};
use crate::qdiff::{geodesic_in_class, HalfTranslationSurface, PlanarDifferential};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// A free homotopy class of closed curves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CurveClass {
    /// Translation by `m ω₁ + n ω₂` on a torus or cylinder.
    Lattice(i64, i64),
    /// Edge-crossing word, edges local to each successive polygon.
    Word { start: usize, edges: Vec<usize> },
}

impl CurveClass {
    pub fn power(&self, k: usize) -> CurveClass {
        match self {
            CurveClass::Lattice(m, n) => CurveClass::Lattice(m * k as i64, n * k as i64),
            CurveClass::Word { start, edges } => CurveClass::Word { start: *start, edges: edges.repeat(k) },
        }
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveClass::Lattice(m, n) => write!(f, "({m},{n})"),
            CurveClass::Word { start, edges } => {
                let e: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
                write!(f, "{start}:{}", e.join("."))
            }
        }
    }
}

impl FromStr for CurveClass {
    type Err = Error;

    /// `(m,n)` or `m,n` for lattice classes, `p:e1.e2...` for words.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad curve class {s:?}"));
        let s = s.trim();
        if let Some((p, w)) = s.split_once(':') {
            let start = p.trim().parse().map_err(|_| bad())?;
            let edges = w.split('.').map(|e| e.trim().parse().map_err(|_| bad())).collect::<Result<Vec<usize>>>()?;
            if edges.is_empty() {
                return Err(bad());
            }
            return Ok(CurveClass::Word { start, edges });
        }
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let (m, n) = inner.split_once(',').ok_or_else(bad)?;
        Ok(CurveClass::Lattice(m.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?))
    }
}

/// Lengths of curve classes in a dual tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HeightFunction {
    values: BTreeMap<String, f64>,
}

impl HeightFunction {
    pub fn insert(&mut self, class: &CurveClass, value: f64) {
        self.values.insert(class.to_string(), value);
    }

    pub fn get(&self, class: &CurveClass) -> Option<f64> {
        self.values.get(&class.to_string()).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.values.iter()
    }

    pub fn vector(&self, classes: &[CurveClass]) -> Result<Vec<f64>> {
        classes.iter().map(|c| self.get(c).ok_or_else(|| Error::NotFound(format!("class {c}")))).collect()
    }
}

/// Flat data whose horizontal foliation defines the dual tree.
#[derive(Debug, Clone, Copy)]
pub enum FlatData<'a> {
    /// `e^{iθ} dz²` on `ℂ / (ℤω₁ + ℤω₂)`; a cylinder has `ω₂ = 0`.
    Lattice { periods: [C64; 2], phase: f64 },
    Surface(&'a HalfTranslationSurface),
}

/// Heights of the geodesic representatives: the length function of the
/// action on the dual tree.
pub fn dual_length_function(data: &FlatData, classes: &[CurveClass]) -> Result<HeightFunction> {
    let mut out = HeightFunction::default();
    for class in classes {
        let h = match (data, class) {
            (FlatData::Lattice { periods, phase }, CurveClass::Lattice(m, n)) => {
                let rot = C64::from_polar(1.0, 0.5 * phase);
                let (h1, h2) = ((rot * periods[0]).im, (rot * periods[1]).im);
                (*m as f64 * h1 + *n as f64 * h2).abs()
            }
            (FlatData::Surface(surf), CurveClass::Word { start, edges }) => {
                geodesic_in_class(surf, *start, edges).map_err(|e| Error::NotFound(format!("geodesic in class {class}: {e}")))?.height
            }
            _ => return Err(Error::InvalidInput(format!("class {class} does not match the surface"))),
        };
        out.insert(class, h);
    }
    Ok(out)
}

/// `R(ρ, x) = max_{γ∈Σ} d(x, ρ(γ) x)`.
pub fn scale_at(rep: &Representation, sigma: &[&str], x: &H3Point) -> Result<f64> {
    if sigma.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    let mut r: f64 = 0.0;
    for w in sigma {
        r = r.max(rep.evaluate(w)?.displacement(x));
    }
    Ok(r)
}

/// Box in `(z, log t)` coordinates of the upper half-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub center: C64,
    pub half_width: f64,
    pub log_t: f64,
    pub log_half: f64,
}

impl SearchBox {
    /// Bounding box of `x0` and its one-letter orbit, dilated by 2.
    pub fn around_orbit(rep: &Representation, sigma: &[&str], x0: &H3Point) -> Result<Self> {
        let mut pts = vec![*x0];
        for w in sigma {
            let p = rep.evaluate(w)?.apply(x0);
            if p.z.is_finite() && p.t > 1e-300 && p.t < 1e300 {
                pts.push(p);
            }
        }
        let (mut x0r, mut x1r, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let (mut l0, mut l1) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &pts {
            x0r = x0r.min(p.z.re);
            x1r = x1r.max(p.z.re);
            y0 = y0.min(p.z.im);
            y1 = y1.max(p.z.im);
            l0 = l0.min(p.t.ln());
            l1 = l1.max(p.t.ln());
        }
        Ok(SearchBox {
            center: C64::new(0.5 * (x0r + x1r), 0.5 * (y0 + y1)),
            half_width: (x1r - x0r).max(y1 - y0).max(1.0),
            log_t: 0.5 * (l0 + l1),
            log_half: (l1 - l0).max(1.0),
        })
    }

    fn point(&self, u: f64, v: f64, w: f64) -> H3Point {
        H3Point { z: self.center + C64::new(u, v) * self.half_width, t: (self.log_t + w * self.log_half).exp() }
    }
}

/// Result of the center search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Center {
    pub point: H3Point,
    /// `R(ρ, point)`, the smallest value seen on the search lattices.
    pub scale: f64,
    /// One-sided finite-difference slope of `R` at `point`; near 0 at a minimum.
    pub gradient: f64,
    /// `gradient ≤ (C − 1) R`: no descent direction worth the factor `C`.
    pub certified: bool,
    pub evaluations: usize,
}

const LATTICE: usize = 7;

/// Coarse-to-fine lattice search for a point minimizing `R(ρ, ·)`.
///
/// The returned point is the best point of every lattice visited, so it is a
/// `C`-approximate center for the lattice minimum with `C = 1`.
pub fn approximate_center(rep: &Representation, sigma: &[&str], region: Option<SearchBox>, c: f64) -> Result<Center> {
    if sigma.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidInput(format!("center constant {c} < 1")));
    }
    let elems: Vec<ScaledMoebius> = sigma.iter().map(|w| rep.evaluate(w)).collect::<Result<_>>()?;
    let r = |x: &H3Point| elems.iter().map(|g| g.displacement(x)).fold(0.0, f64::max);
    let mut bx = match region {
        Some(b) => b,
        None => SearchBox::around_orbit(rep, sigma, &H3Point::vertical(1.0))?,
    };
    let grid: Vec<f64> = (0..LATTICE).map(|k| -1.0 + 2.0 * k as f64 / (LATTICE - 1) as f64).collect();
    let mut evaluations = 0;
    let mut shifts = 0;
    let mut best = (bx.point(0.0, 0.0, 0.0), f64::INFINITY);
    for _ in 0..200 {
        let mut inner = (bx.point(0.0, 0.0, 0.0), f64::INFINITY, [0usize; 3]);
        let mut outer = inner;
        for (i, &u) in grid.iter().enumerate() {
            for (j, &v) in grid.iter().enumerate() {
                for (k, &w) in grid.iter().enumerate() {
                    let p = bx.point(u, v, w);
                    let val = r(&p);
                    evaluations += 1;
                    let edge = [i, j, k].iter().any(|&n| n == 0 || n == LATTICE - 1);
                    let slot = if edge { &mut outer } else { &mut inner };
                    if val < slot.1 {
                        *slot = (p, val, [i, j, k]);
                    }
                }
            }
        }
        if !(inner.1.is_finite() || outer.1.is_finite()) {
            return Err(Error::DegenerateMinimum("scale is not finite on the search box".into()));
        }
        let on_edge = outer.1 < inner.1 * (1.0 - 1e-12) - 1e-300;
        let (p, val) = if on_edge { (outer.0, outer.1) } else { (inner.0, inner.1) };
        if val < best.1 {
            best = (p, val);
        }
        bx.center = p.z;
        bx.log_t = p.t.ln();
        if on_edge {
            shifts += 1;
            if shifts > 40 {
                return Err(Error::DegenerateMinimum(format!("minimum escapes the search region (R = {val:.3e})")));
            }
        } else {
            bx.half_width *= 0.5;
            bx.log_half *= 0.5;
            if bx.half_width < 1e-12 * p.t && bx.log_half < 1e-12 {
                break;
            }
        }
    }
    let (point, scale) = best;
    let h = 1e-6;
    let nbrs = [
        H3Point { z: point.z + h * point.t, ..point },
        H3Point { z: point.z - h * point.t, ..point },
        H3Point { z: point.z + C64::new(0.0, h * point.t), ..point },
        H3Point { z: point.z - C64::new(0.0, h * point.t), ..point },
        H3Point { t: point.t * h.exp(), ..point },
        H3Point { t: point.t * (-h).exp(), ..point },
    ];
    let low = nbrs.iter().map(r).fold(f64::INFINITY, f64::min);
    let gradient = ((scale - low) / h).max(0.0);
    Ok(Center { point, scale, gradient, certified: gradient <= (c - 1.0) * scale, evaluations })
}

/// `R(ρ, x) / R(ρ, center)` and whether it is at most `c`.
pub fn center_ratio(rep: &Representation, sigma: &[&str], x: &H3Point, center: &Center, c: f64) -> Result<(f64, bool)> {
    let rx = scale_at(rep, sigma, x)?;
    let ratio = if center.scale > 0.0 { rx / center.scale } else if rx == 0.0 { 1.0 } else { f64::INFINITY };
    Ok((ratio, ratio <= c))
}

/// Orbit of a base point under the words of a representation.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitSample {
    pub base: H3Point,
    pub words: Vec<String>,
    pub elements: Vec<ScaledMoebius>,
}

impl OrbitSample {
    pub fn new(rep: &Representation, words: &[&str], base: H3Point) -> Result<Self> {
        let elements = words.iter().map(|w| rep.evaluate(w)).collect::<Result<_>>()?;
        Ok(OrbitSample { base, words: words.iter().map(|w| w.to_string()).collect(), elements })
    }

    /// Orbit points; heights underflow for elements far from the identity.
    pub fn points(&self) -> Vec<H3Point> {
        self.elements.iter().map(|g| g.apply(&self.base)).collect()
    }

    /// `d(g_i x, g_j x) = d(x, g_i⁻¹ g_j x)`, exact in the scaled arithmetic.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let e = &self.elements;
        DistanceMatrix::from_fn(e.len(), |i, j| (e[i].inverse() * e[j]).displacement(&self.base))
    }
}

/// Sample of a map from the surface to a metric space.
#[derive(Debug, Clone, Serialize)]
pub struct TreeMapSample {
    pub sources: Vec<C64>,
    pub distances: DistanceMatrix,
}

impl TreeMapSample {
    pub fn new(sources: Vec<C64>, distances: DistanceMatrix) -> Result<Self> {
        if sources.len() != distances.len() {
            return Err(Error::InvalidInput(format!("{} sources for a {}-point metric", sources.len(), distances.len())));
        }
        distances.validate(1e-9)?;
        Ok(TreeMapSample { sources, distances })
    }

    /// A map to the line `ℝ` given by its values.
    pub fn on_line(sources: Vec<C64>, values: &[f64]) -> Result<Self> {
        let d = DistanceMatrix::from_fn(values.len(), |i, j| (values[i] - values[j]).abs());
        Self::new(sources, d)
    }

    /// The Epstein–Schwarz map of `diff`, distances divided by `scale`. Each
    /// pair is measured along the straight segment from the standard jet at
    /// its first point.
    pub fn epstein(diff: &PlanarDifferential, sources: Vec<C64>, scale: f64, tol: f64) -> Result<Self> {
        let n = sources.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = pairwise_distances(diff, &[sources[i], sources[j]], tol)?[0][0] / scale;
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        Self::new(sources, DistanceMatrix::from_rows(rows)?)
    }
}

/// `h ↦ c − |h − c|`: folds the line at `c`.
pub fn fold(values: &[f64], c: f64) -> Vec<f64> {
    values.iter().map(|h| c - (h - c).abs()).collect()
}

/// A segment between two sample sources with its height.
#[derive(Debug, Clone, Serialize)]
pub struct StraightSegment {
    pub from: usize,
    pub to: usize,
    /// `None` when the segment was skipped.
    pub height: Option<f64>,
    /// Intermediate point of a two-segment push-off around a simple zero.
    pub pushoff: Option<C64>,
    pub note: Option<String>,
}

/// Heights of the straight segments between the given sources. Segments
/// through a simple zero are replaced by a push-off to one side.
pub fn straight_segments(diff: &PlanarDifferential, sources: &[C64], pairs: &[(usize, usize)]) -> Result<Vec<StraightSegment>> {
    let mut out = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i >= sources.len() || j >= sources.len() {
            return Err(Error::InvalidInput(format!("segment ({i}, {j}) out of range")));
        }
        let (a, b) = (sources[i], sources[j]);
        let mut seg = StraightSegment { from: i, to: j, height: None, pushoff: None, note: None };
        match diff.segment_holonomy(a, b, None) {
            Ok(h) => seg.height = Some(h.im.abs()),
            Err(Error::SingularSegment { .. }) => {
                let dir = (b - a) / (b - a).norm();
                let hit = diff.zeros().iter().map(|&(p, k)| (p, k, ((p - a) / dir).im.abs())).min_by(|x, y| x.2.total_cmp(&y.2));
                match hit {
                    Some((p, 1, _)) => {
                        // the side of angle π keeps the path transverse; the other side backtracks
                        let start = diff.q(a).sqrt();
                        let (h, m) = [1.0, -1.0]
                            .into_iter()
                            .map(|side| {
                                let m = p + C64::new(0.0, side * 1e-6 * (b - a).norm()) * dir;
                                let (v1, end) = diff.segment_holonomy_branch(a, m, start);
                                let (v2, _) = diff.segment_holonomy_branch(m, b, end);
                                ((v1 + v2).im.abs(), m)
                            })
                            .max_by(|x, y| x.0.total_cmp(&y.0))
                            .expect("two sides");
                        seg.height = Some(h);
                        seg.pushoff = Some(m);
                    }
                    Some((_, k, _)) => seg.note = Some(format!("passes through a zero of order {k}")),
                    None => seg.note = Some("passes through a pole".into()),
                }
            }
            Err(e) => seg.note = Some(e.to_string()),
        }
        out.push(seg);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentCheck {
    pub from: usize,
    pub to: usize,
    pub height: f64,
    pub measured: f64,
    pub error: f64,
    pub pass: bool,
    pub pushoff: bool,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StraightnessReport {
    pub checks: Vec<SegmentCheck>,
    pub max_error: f64,
    pub pass: bool,
}

/// Checks `|d(f(x), f(y)) − h| ≤ tol` on every nonsingular segment.
pub fn straightness_check(sample: &TreeMapSample, segments: &[StraightSegment], tol: f64) -> Result<StraightnessReport> {
    let n = sample.sources.len();
    let mut checks = Vec::with_capacity(segments.len());
    let mut max_error: f64 = 0.0;
    for s in segments {
        if s.from >= n || s.to >= n {
            return Err(Error::InvalidInput(format!("segment ({}, {}) out of range", s.from, s.to)));
        }
        let measured = sample.distances.get(s.from, s.to);
        let check = match s.height {
            Some(h) => {
                let error = (measured - h).abs();
                max_error = max_error.max(error);
                SegmentCheck { from: s.from, to: s.to, height: h, measured, error, pass: error <= tol, pushoff: s.pushoff.is_some(), skipped: None }
            }
            None => SegmentCheck {
                from: s.from,
                to: s.to,
                height: f64::NAN,
                measured,
                error: f64::NAN,
                pass: true,
                pushoff: false,
                skipped: Some(s.note.clone().unwrap_or_default()),
            },
        };
        checks.push(check);
    }
    let pass = checks.iter().any(|c| c.skipped.is_none()) && checks.iter().all(|c| c.pass);
    Ok(StraightnessReport { checks, max_error, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp3::{apply, four_point_delta, h3_distance, Moebius};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lox(l: f64) -> Moebius {
        Moebius::diag(c((0.5 * l).exp(), 0.0))
    }

    #[test]
    fn scale_examples() {
        let id = Representation::new().with('a', Moebius::identity());
        assert_eq!(scale_at(&id, &["a"], &H3Point::vertical(3.0)).unwrap(), 0.0);
        assert_eq!(scale_at(&id, &[], &H3Point::vertical(3.0)), Err(Error::EmptyGenerators));
        let g = Representation::new().with('a', Moebius::diag(c(2.0, 0.0)));
        let on = scale_at(&g, &["a", "A"], &H3Point::vertical(1.0)).unwrap();
        assert!((on - 2.0 * 2f64.ln()).abs() < 1e-14);
        let x = H3Point::new(c(1.0, 0.0), 1.0).unwrap();
        let off = scale_at(&g, &["a", "A"], &x).unwrap();
        let m = Moebius::diag(c(2.0, 0.0));
        let expect = h3_distance(&x, &apply(&m, &x).unwrap()).max(h3_distance(&x, &apply(&m.inverse(), &x).unwrap()));
        assert!(off > on && (off - expect).abs() < 1e-13);
    }

    #[test]
    fn center_of_single_loxodromic_is_on_the_axis() {
        let g = Representation::new().with('a', lox(1.7));
        let cen = approximate_center(&g, &["a"], None, 1.05).unwrap();
        assert!((cen.scale - 1.7).abs() < 1e-9, "{cen:?}");
        assert!(cen.point.z.norm() < 1e-6 * cen.point.t);
    }

    #[test]
    fn center_of_crossing_axes() {
        let l: f64 = 1.3;
        let (ch, sh) = ((0.5 * l).cosh(), (0.5 * l).sinh());
        let b = Moebius::new(c(ch, 0.0), c(sh, 0.0), c(sh, 0.0), c(ch, 0.0)).unwrap();
        let rep = Representation::new().with('a', lox(l)).with('b', b);
        let region = SearchBox { center: c(0.7, -0.4), half_width: 2.0, log_t: 0.5, log_half: 2.0 };
        let cen = approximate_center(&rep, &["a", "b"], Some(region), 1.05).unwrap();
        assert!(h3_distance(&cen.point, &H3Point::vertical(1.0)) < 1e-6, "{cen:?}");
        assert!((cen.scale - l).abs() < 1e-9 && cen.gradient < 1e-3);
        let (ratio, ok) = center_ratio(&rep, &["a", "b"], &H3Point::vertical(1.0), &cen, 1.05).unwrap();
        assert!(ok && (ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parabolic_center_is_degenerate() {
        let rep = Representation::new().with('a', Moebius::translation(c(1.0, 0.0)));
        assert!(matches!(approximate_center(&rep, &["a"], None, 1.05), Err(Error::DegenerateMinimum(_))));
    }

    #[test]
    fn torus_heights() {
        let sq = FlatData::Lattice { periods: [c(1.0, 0.0), c(0.0, 1.0)], phase: 0.0 };
        let classes: Vec<CurveClass> = ["(1,0)", "(0,1)", "(2,-3)"].iter().map(|s| s.parse().unwrap()).collect();
        let h = dual_length_function(&sq, &classes).unwrap();
        assert_eq!(h.vector(&classes).unwrap(), vec![0.0, 1.0, 3.0]);
        let th: f64 = 0.7;
        let rot = FlatData::Lattice { periods: [c(1.0, 0.0), c(0.0, 1.0)], phase: th };
        let h = dual_length_function(&rot, &classes).unwrap();
        for (cl, (m, n)) in classes.iter().zip([(1.0, 0.0), (0.0, 1.0), (2.0, -3.0)]) {
            let expect = (C64::from_polar(1.0, 0.5 * th) * c(m, n)).im.abs();
            assert!((h.get(cl).unwrap() - expect).abs() < 1e-15);
        }
        let cyl = FlatData::Lattice { periods: [c(1.0, 0.0), C64::new(0.0, 0.0)], phase: 0.0 };
        assert_eq!(dual_length_function(&cyl, &[CurveClass::Lattice(1, 0)]).unwrap().get(&CurveClass::Lattice(1, 0)), Some(0.0));
    }

    #[test]
    fn surface_heights_and_errors() {
        let surf = HalfTranslationSurface::square_torus();
        let sq = FlatData::Surface(&surf);
        let word = CurveClass::Word { start: 0, edges: vec![99] };
        assert!(matches!(dual_length_function(&sq, &[word]), Err(Error::NotFound(_))));
        assert!(dual_length_function(&sq, &[CurveClass::Lattice(1, 0)]).is_err());
    }

    #[test]
    fn class_parsing_round_trips() {
        for s in ["(3,-2)", "0:1.2.3"] {
            let c: CurveClass = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!("1, 4".parse::<CurveClass>().unwrap(), CurveClass::Lattice(1, 4));
        assert!("x".parse::<CurveClass>().is_err());
        assert_eq!(CurveClass::Word { start: 1, edges: vec![2, 0] }.power(2).to_string(), "1:2.0.2.0");
    }

    #[test]
    fn orbit_points_match_direct_action() {
        let l: f64 = 0.9;
        let b = Moebius::normalized(c(1.0, 0.5), c(0.3, -0.2), c(0.1, 0.4), c(0.9, 0.1)).unwrap();
        let rep = Representation::new().with('a', lox(l)).with('b', b);
        let base = H3Point::new(c(0.2, -0.1), 0.8).unwrap();
        let words = ["", "a", "b", "aB", "bba"];
        let orbit = OrbitSample::new(&rep, &words, base).unwrap();
        for (p, w) in orbit.points().iter().zip(words) {
            let m = rep.evaluate(w).unwrap().to_moebius().unwrap().renormalize();
            let q = apply(&m, &base).unwrap();
            assert!(h3_distance(p, &q) < 1e-10, "{w}");
        }
        let dm = orbit.distance_matrix();
        dm.validate(1e-9).unwrap();
        let pts = orbit.points();
        assert!((dm.get(1, 4) - h3_distance(&pts[1], &pts[4])).abs() < 1e-10);
    }

    #[test]
    fn straightness_of_projection_and_fold() {
        let sources: Vec<C64> = (0..6).map(|k| c(0.3 * k as f64, 0.4 * k as f64 - 0.5)).collect();
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
        let segs = straight_segments(&one, &sources, &pairs).unwrap();
        let heights: Vec<f64> = sources.iter().map(|z| z.im).collect();
        let pi = TreeMapSample::on_line(sources.clone(), &heights).unwrap();
        let r = straightness_check(&pi, &segs, 1e-12).unwrap();
        assert!(r.pass && r.max_error < 1e-14, "{r:?}");
        let folded = TreeMapSample::on_line(sources, &fold(&heights, 0.5)).unwrap();
        let r = straightness_check(&folded, &segs, 1e-12).unwrap();
        assert!(!r.pass);
        assert!(r.checks.iter().any(|c| !c.pass && c.error > 0.1));
    }

    #[test]
    fn rescaled_epstein_map_of_a_long_cylinder_is_straight() {
        let t = 1e6;
        let diff = PlanarDifferential::real_poly(&[t]).unwrap();
        let sources: Vec<C64> = [0.0, 0.4].iter().flat_map(|&x| [0.0, 0.2, 0.45, 0.7, 1.0].map(|y| c(x, y))).collect();
        let sample = TreeMapSample::epstein(&diff, sources.clone(), (2.0 * t).sqrt(), 1e-11).unwrap();
        let pairs: Vec<(usize, usize)> = (0..10).flat_map(|i| (i + 1..10).map(move |j| (i, j))).collect();
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let segs = straight_segments(&one, &sources, &pairs).unwrap();
        let r = straightness_check(&sample, &segs, 1e-2).unwrap();
        assert!(r.pass && r.max_error < 1e-6, "{}", r.max_error);
    }

    #[test]
    fn pushoff_around_a_simple_zero() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let s: f64 = 1.5;
        let sources = vec![c(0.0, -s), c(0.0, s)];
        let segs = straight_segments(&z, &sources, &[(0, 1)]).unwrap();
        assert!(segs[0].pushoff.is_some());
        let h = 2.0 * (2.0 / 3.0) * s.powf(1.5) * (0.75 * std::f64::consts::PI).sin();
        assert!((segs[0].height.unwrap() - h).abs() < 1e-8, "{:?} {h}", segs[0]);
        let sample = TreeMapSample::on_line(sources, &[0.0, h]).unwrap();
        assert!(straightness_check(&sample, &segs, 1e-8).unwrap().pass);
        let z2 = PlanarDifferential::real_poly(&[0.0, 0.0, 1.0]).unwrap();
        let segs = straight_segments(&z2, &[c(-1.0, 0.0), c(1.0, 0.0)], &[(0, 1)]).unwrap();
        assert!(segs[0].height.is_none() && segs[0].note.as_deref().unwrap().contains("order 2"));
    }

    #[test]
    fn tree_metric_on_a_line_has_zero_delta() {
        let s = TreeMapSample::on_line(vec![C64::new(0.0, 0.0); 5], &[0.0, 1.0, 2.5, 3.0, 7.0]).unwrap();
        assert!(four_point_delta(&s.distances).unwrap() < 1e-9);
    }

    #[test]
    fn homogeneity_on_torus_classes() {
        let data = FlatData::Lattice { periods: [c(1.0, 0.2), c(0.3, 1.1)], phase: 0.4 };
        for base in [CurveClass::Lattice(1, 0), CurveClass::Lattice(2, -1), CurveClass::Lattice(1, 3)] {
            let h1 = dual_length_function(&data, std::slice::from_ref(&base)).unwrap().get(&base).unwrap();
            for n in 1..=6 {
                let p = base.power(n);
                let hn = dual_length_function(&data, std::slice::from_ref(&p)).unwrap().get(&p).unwrap();
                assert!((hn - n as f64 * h1).abs() <= 1e-14 * hn.max(1.0));
            }
        }
    }

    fn random_lox() -> impl Strategy<Value = Moebius> {
        (0.3f64..2.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..6.3).prop_map(|(l, x, y, th)| {
            let g = Moebius::normalized(c(1.0, 0.0), c(x, y), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
            let r = Moebius::diag(C64::from_polar(1.0, 0.5 * th));
            lox(l).conjugate_by(&(r * g))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn displacement_is_subadditive(a in random_lox(), b in random_lox(), letters in proptest::collection::vec(0usize..4, 1..=8), x in -1.0f64..1.0, y in -1.0f64..1.0, lt in -1.0f64..1.0) {
            let rep = Representation::new().with('a', a).with('b', b);
            let word: String = letters.iter().map(|&k| ['a', 'b', 'A', 'B'][k]).collect();
            let p = H3Point::new(c(x, y), lt.exp()).unwrap();
            let r = scale_at(&rep, &["a", "b"], &p).unwrap();
            let d = rep.evaluate(&word).unwrap().displacement(&p);
            prop_assert!(d <= letters.len() as f64 * r + 1e-9, "{} > {} * {}", d, letters.len(), r);
        }
    }
}
