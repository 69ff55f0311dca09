//! Geometry of hyperbolic 3-space in the upper half-space model.
//!
//! Isometries are unit-determinant complex 2x2 matrices acting on points
//! `(z, t)` with `z` complex and `t > 0`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Mul;

pub type C64 = Complex64;

const DET_TOL: f64 = 1e-12;
const NEAR_PARABOLIC: f64 = 1e-8;
const RENORMALIZE_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoebiusKind {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl Moebius {
    /// Builds a matrix and checks that its determinant is 1.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let m = Moebius { a, b, c, d };
        m.check()?;
        Ok(m)
    }

    /// Divides by a square root of the determinant.
    pub fn normalized(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.is_finite() {
            return Err(Error::InvalidMatrix(format!("{det}")));
        }
        let k = det.sqrt().inv();
        Ok(Moebius { a: a * k, b: b * k, c: c * k, d: d * k })
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Moebius { a: one, b: zero, c: zero, d: one }
    }

    /// `diag(l, 1/l)`.
    pub fn diag(l: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Moebius { a: l, b: zero, c: zero, d: l.inv() }
    }

    /// `w -> w + b`.
    pub fn translation(b: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        Moebius { a: one, b, c: C64::new(0.0, 0.0), d: one }
    }

    /// `[[1, 0], [c, 1]]`.
    pub fn lower(c: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        Moebius { a: one, b: C64::new(0.0, 0.0), c, d: one }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Determinant defect relative to the rounding scale of the entries.
    pub fn det_defect(&self) -> f64 {
        (self.det() - 1.0).norm() / (0.5 * self.frobenius_sq()).max(1.0)
    }

    pub fn check(&self) -> Result<()> {
        let entries_ok = [self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite());
        if !entries_ok || self.det_defect() > DET_TOL {
            return Err(Error::InvalidMatrix(format!("{}", self.det())));
        }
        Ok(())
    }

    pub fn renormalize(&self) -> Self {
        Moebius::normalized(self.a, self.b, self.c, self.d).unwrap_or(*self)
    }

    /// Inverse of a unit-determinant matrix.
    pub fn inverse(&self) -> Self {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn transpose(&self) -> Self {
        Moebius { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn neg(&self) -> Self {
        Moebius { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn conjugate_by(&self, g: &Moebius) -> Self {
        *g * *self * g.inverse()
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { *self };
        product(std::iter::repeat_n(base, n.unsigned_abs() as usize))
    }

    /// Operator-norm distance, up to the sign ambiguity of PSL2.
    pub fn projective_distance(&self, other: &Moebius) -> f64 {
        let plus = (*self - *other).operator_norm();
        let minus = (*self - other.neg()).operator_norm();
        plus.min(minus)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let f = self.frobenius_sq();
        let det = self.det().norm();
        let disc = (f * f - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (f + disc)).sqrt()
    }

    pub fn classify(&self) -> MoebiusKind {
        let tr = self.trace();
        let near = (tr - 2.0).norm().min((tr + 2.0).norm());
        if near < NEAR_PARABOLIC {
            let id = Moebius::identity();
            let scale = self.operator_norm().max(1.0);
            if self.projective_distance(&id) < 1e-9 * scale {
                MoebiusKind::Identity
            } else {
                MoebiusKind::Parabolic
            }
        } else if tr.im.abs() < 1e-12 * tr.norm().max(1.0) && tr.re.abs() < 2.0 {
            MoebiusKind::Elliptic
        } else {
            MoebiusKind::Loxodromic
        }
    }

    /// Action on the boundary sphere.
    pub fn apply_ideal(&self, w: Ideal) -> Ideal {
        match w {
            Ideal::Infinity => {
                if self.c.norm() == 0.0 {
                    Ideal::Infinity
                } else {
                    Ideal::Finite(self.a / self.c)
                }
            }
            Ideal::Finite(w) => {
                let den = self.c * w + self.d;
                if den.norm() == 0.0 {
                    Ideal::Infinity
                } else {
                    Ideal::Finite((self.a * w + self.b) / den)
                }
            }
        }
    }

    /// The matrix taking `(0, 0, 1)` to `p`.
    pub fn frame_at(p: &H3Point) -> Self {
        let s = p.t.sqrt();
        Moebius {
            a: C64::new(s, 0.0),
            b: p.z / s,
            c: C64::new(0.0, 0.0),
            d: C64::new(1.0 / s, 0.0),
        }
    }
}

impl Mul for Moebius {
    type Output = Moebius;
    fn mul(self, r: Moebius) -> Moebius {
        Moebius {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

impl std::ops::Sub for Moebius {
    type Output = Moebius;
    fn sub(self, r: Moebius) -> Moebius {
        Moebius { a: self.a - r.a, b: self.b - r.b, c: self.c - r.c, d: self.d - r.d }
    }
}

/// Ordered product with periodic renormalization of the determinant.
pub fn product<I: IntoIterator<Item = Moebius>>(factors: I) -> Moebius {
    let mut acc = Moebius::identity();
    for (k, m) in factors.into_iter().enumerate() {
        acc = acc * m;
        if (k + 1) % RENORMALIZE_EVERY == 0 {
            acc = acc.renormalize();
        }
    }
    acc
}

/// A point of the boundary sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ideal {
    Finite(C64),
    Infinity,
}

impl Ideal {
    pub fn is_close(&self, other: &Ideal, tol: f64) -> bool {
        match (self, other) {
            (Ideal::Infinity, Ideal::Infinity) => true,
            (Ideal::Finite(a), Ideal::Finite(b)) => (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm())),
            (Ideal::Finite(a), Ideal::Infinity) | (Ideal::Infinity, Ideal::Finite(a)) => a.norm() > 1.0 / tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Point {
    pub z: C64,
    pub t: f64,
}

impl H3Point {
    pub fn new(z: C64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() || !z.is_finite() {
            return Err(Error::InvalidInput(format!("not a point of H3: ({z}, {t})")));
        }
        Ok(H3Point { z, t })
    }

    pub fn vertical(t: f64) -> Self {
        H3Point { z: C64::new(0.0, 0.0), t }
    }

    /// Euclidean coordinates `(x, y, t)`.
    pub fn coords(&self) -> [f64; 3] {
        [self.z.re, self.z.im, self.t]
    }

    /// Unit-ball coordinates with `(0, 0, 1)` at the origin.
    pub fn to_ball(&self) -> [f64; 3] {
        let x = [self.z.re, self.z.im, self.t + 1.0];
        let n2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        [2.0 * x[0] / n2, 2.0 * x[1] / n2, 2.0 * x[2] / n2 - 1.0]
    }
}

/// Isometric action of a unit-determinant matrix.
pub fn apply(m: &Moebius, p: &H3Point) -> Result<H3Point> {
    m.check()?;
    Ok(apply_unchecked(m, p))
}

pub(crate) fn apply_unchecked(m: &Moebius, p: &H3Point) -> H3Point {
    let czd = m.c * p.z + m.d;
    let ct = m.c * p.t;
    let den = czd.norm_sqr() + ct.norm_sqr();
    let z = ((m.a * p.z + m.b) * czd.conj() + m.a * m.c.conj() * (p.t * p.t)) / den;
    let t = p.t * m.det().norm() / den;
    H3Point { z, t }
}

pub fn h3_distance(p: &H3Point, q: &H3Point) -> f64 {
    let num = (p.z - q.z).norm().hypot(p.t - q.t);
    2.0 * (num / (2.0 * p.t.sqrt() * q.t.sqrt())).asinh()
}

/// Translation length together with a near-parabolic warning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationLength {
    pub value: f64,
    pub near_parabolic: bool,
}

pub fn translation_length(m: &Moebius) -> f64 {
    translation_length_flagged(m).value
}

pub fn translation_length_flagged(m: &Moebius) -> TranslationLength {
    let tr = m.trace();
    let near = (tr - 2.0).norm().min((tr + 2.0).norm());
    if near < NEAR_PARABOLIC {
        let flagged = m.classify() != MoebiusKind::Identity;
        return TranslationLength { value: 0.0, near_parabolic: flagged };
    }
    let value = if m.classify() == MoebiusKind::Elliptic { 0.0 } else { length_from_trace(tr) };
    TranslationLength { value, near_parabolic: false }
}

pub(crate) fn length_from_trace(tr: C64) -> f64 {
    // work near +2; the sign of the matrix does not change the length
    let tr = if tr.re < 0.0 { -tr } else { tr };
    let tm = tr - 2.0;
    let s = (tm * (tr + 2.0)).sqrt();
    let e1 = (tm + s) * 0.5;
    let e2 = (tm - s) * 0.5;
    // mu - 1 for the eigenvalue of larger modulus
    let e = if (e1 + 1.0).norm() >= (e2 + 1.0).norm() { e1 } else { e2 };
    (2.0 * e.re + e.norm_sqr()).ln_1p().max(0.0)
}

/// A complete geodesic given by its two ideal endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicLine {
    pub from: Ideal,
    pub to: Ideal,
}

impl GeodesicLine {
    pub fn new(from: Ideal, to: Ideal) -> Result<Self> {
        if from.is_close(&to, 1e-14) {
            return Err(Error::InvalidInput("geodesic endpoints coincide".into()));
        }
        Ok(GeodesicLine { from, to })
    }

    /// A unit-determinant matrix sending `0` to `from` and `inf` to `to`.
    pub fn frame(&self) -> Moebius {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match (self.from, self.to) {
            (Ideal::Finite(p), Ideal::Infinity) => Moebius { a: one, b: p, c: zero, d: one },
            (Ideal::Infinity, Ideal::Finite(q)) => Moebius { a: q, b: -one, c: one, d: zero },
            (Ideal::Finite(p), Ideal::Finite(q)) => {
                Moebius::normalized(q, p, one, one).expect("distinct endpoints")
            }
            (Ideal::Infinity, Ideal::Infinity) => unreachable!("distinct endpoints"),
        }
    }

    /// Arclength parametrization through the frame image of `(0, 0, 1)`.
    pub fn point_at(&self, s: f64) -> H3Point {
        apply_unchecked(&self.frame(), &H3Point::vertical(s.exp()))
    }

    pub fn distance_to(&self, p: &H3Point) -> f64 {
        let q = apply_unchecked(&self.frame().inverse(), p);
        (q.z.norm() / q.t).asinh()
    }
}

/// Axis of a loxodromic element, oriented from repelling to attracting fixed point.
pub fn axis(m: &Moebius) -> Result<GeodesicLine> {
    if m.classify() != MoebiusKind::Loxodromic {
        return Err(Error::NoAxis);
    }
    let m = m.renormalize();
    let scale = m.operator_norm();
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let fixed: [Ideal; 2] = if c.norm() <= 1e-15 * scale {
        [Ideal::Finite(b / (d - a)), Ideal::Infinity]
    } else {
        // c w^2 + (d - a) w - b = 0
        let p = d - a;
        let disc = (p * p + 4.0 * b * c).sqrt();
        let q = if (p + disc).norm() >= (p - disc).norm() { -(p + disc) * 0.5 } else { -(p - disc) * 0.5 };
        let r1 = q / c;
        let r2 = if q.norm() == 0.0 { r1 } else { -b / q };
        [Ideal::Finite(r1), Ideal::Finite(r2)]
    };
    let multiplier = |w: Ideal| -> f64 {
        match w {
            Ideal::Infinity => a.norm() / d.norm().max(f64::MIN_POSITIVE),
            Ideal::Finite(w) => (c * w + d).norm(),
        }
    };
    // |cw + d| > 1 at the attracting fixed point.
    let (from, to) = if multiplier(fixed[0]) > multiplier(fixed[1]) {
        (fixed[1], fixed[0])
    } else {
        (fixed[0], fixed[1])
    };
    GeodesicLine::new(from, to)
}

/// An ordered sequence of sampled points with increasing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    samples: Vec<(f64, H3Point)>,
}

impl SampledPath {
    pub fn new(samples: Vec<(f64, H3Point)>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("path parameters must increase".into()));
        }
        Ok(SampledPath { samples })
    }

    pub fn samples(&self) -> &[(f64, H3Point)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Multiplicative and additive quasigeodesic constants of a sampled path.
///
/// `K` is the worst two-sided ratio over pairs at least half the parameter
/// span apart, `C` the least additive constant that makes all pairs satisfy
/// `|b-a|/K - C <= d <= K|b-a| + C`.
pub fn quasigeodesic_fit(path: &SampledPath) -> Result<(f64, f64)> {
    let s = path.samples();
    if s.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let span = s[s.len() - 1].0 - s[0].0;
    let n = s.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            dist[i * n + j] = h3_distance(&s[i].1, &s[j].1);
        }
    }
    let mut k: f64 = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            let dp = s[j].0 - s[i].0;
            if dp < 0.5 * span - 1e-12 * span {
                continue;
            }
            let d = dist[i * n + j];
            let r = if d == 0.0 { f64::INFINITY } else { (d / dp).max(dp / d) };
            k = k.max(r);
        }
    }
    let mut c: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dp = s[j].0 - s[i].0;
            let d = dist[i * n + j];
            c = c.max(d - k * dp).max(dp / k - d);
        }
    }
    Ok((k, c.max(0.0)))
}

/// Symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMetric("matrix is not square".into()));
        }
        Ok(DistanceMatrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn scaled(&self, s: f64) -> Self {
        DistanceMatrix { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// Checks the metric axioms to `tol` relative to the largest entry.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.n;
        let eps = tol * self.max_entry().max(1.0);
        for i in 0..n {
            if self.get(i, i).abs() > eps {
                return Err(Error::InvalidMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = self.get(i, j);
                if !d.is_finite() || d < -eps || (d - self.get(j, i)).abs() > eps {
                    return Err(Error::InvalidMetric(format!("entry ({i},{j}) not symmetric or negative")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, k) > self.get(i, j) + self.get(j, k) + eps {
                        return Err(Error::InvalidMetric(format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gromov four-point hyperbolicity constant: half the gap between the two
/// largest of the three pair-sums, maximized over quadruples.
pub fn four_point_delta(dm: &DistanceMatrix) -> Result<f64> {
    dm.validate(1e-9)?;
    let n = dm.len();
    let mut delta: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let mut s = [
                        dm.get(i, j) + dm.get(k, l),
                        dm.get(i, k) + dm.get(j, l),
                        dm.get(i, l) + dm.get(j, k),
                    ];
                    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    delta = delta.max(0.5 * (s[2] - s[1]));
                }
            }
        }
    }
    Ok(delta)
}

/// A unit-determinant matrix stored as `exp(log_scale) * m` so that entries
/// far beyond the floating range stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledMoebius {
    pub m: Moebius,
    pub log_scale: f64,
}

impl From<Moebius> for ScaledMoebius {
    fn from(m: Moebius) -> Self {
        ScaledMoebius { m, log_scale: 0.0 }.balanced()
    }
}

impl ScaledMoebius {
    pub fn identity() -> Self {
        Moebius::identity().into()
    }

    fn balanced(self) -> Self {
        let s = [self.m.a, self.m.b, self.m.c, self.m.d].iter().map(|x| x.norm()).fold(0.0, f64::max);
        if s == 0.0 || (s > 1e-3 && s < 1e3) {
            return self;
        }
        let k = 1.0 / s;
        ScaledMoebius {
            m: Moebius { a: self.m.a * k, b: self.m.b * k, c: self.m.c * k, d: self.m.d * k },
            log_scale: self.log_scale + s.ln(),
        }
    }

    pub fn inverse(&self) -> Self {
        ScaledMoebius { m: self.m.inverse(), log_scale: self.log_scale }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = ScaledMoebius::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }

    /// The plain matrix, when its entries are representable.
    pub fn to_moebius(&self) -> Option<Moebius> {
        if self.log_scale > 700.0 {
            return None;
        }
        let k = self.log_scale.exp();
        let m = Moebius { a: self.m.a * k, b: self.m.b * k, c: self.m.c * k, d: self.m.d * k };
        Some(m)
    }

    /// `log|tr|`.
    pub fn log_abs_trace(&self) -> f64 {
        self.log_scale + self.m.trace().norm().ln()
    }

    /// `log(|tr| + 2)` without overflow.
    pub fn trace_coordinate(&self) -> f64 {
        let lt = self.log_abs_trace();
        if lt > 30.0 {
            lt + (2.0 * (-lt).exp()).ln_1p()
        } else {
            (lt.exp() + 2.0).ln()
        }
    }

    /// `log(1 + |tr|)` without overflow.
    pub fn log1p_abs_trace(&self) -> f64 {
        let lt = self.log_abs_trace();
        if lt > 30.0 {
            lt + (-lt).exp().ln_1p()
        } else {
            lt.exp().ln_1p()
        }
    }

    pub fn translation_length(&self) -> f64 {
        let lt = self.log_abs_trace();
        if lt > 20.0 {
            return 2.0 * lt;
        }
        match self.to_moebius() {
            Some(m) => translation_length(&m),
            None => 2.0 * lt.max(0.0),
        }
    }

    /// `M·(0, 0, t0)`, computed without forming `det m`.
    pub fn orbit_of_vertical(&self, t0: f64) -> H3Point {
        let (a, b, c, d) = (self.m.a, self.m.b, self.m.c, self.m.d);
        let t2 = t0 * t0;
        let den = d.norm_sqr() + c.norm_sqr() * t2;
        let z = (b * d.conj() + a * c.conj() * t2) / den;
        let t = (t0.ln() - 2.0 * self.log_scale - den.ln()).exp();
        H3Point { z, t }
    }

    /// `M·x`. The height underflows once `M x` is far out relative to `x`.
    pub fn apply(&self, x: &H3Point) -> H3Point {
        (*self * ScaledMoebius::from(Moebius::frame_at(x))).orbit_of_vertical(1.0)
    }

    /// Displacement `d(x, M x)`.
    pub fn displacement(&self, x: &H3Point) -> f64 {
        if self.log_scale.abs() < 30.0 {
            if let Some(m) = self.to_moebius() {
                return h3_distance(x, &apply_unchecked(&m, x));
            }
        }
        let a = Moebius::frame_at(x);
        let b = a.inverse() * self.m * a;
        let l = 2.0 * self.log_scale + b.frobenius_sq().ln();
        acosh_exp_half(l)
    }

    /// Distance between `M x` and `N x`.
    pub fn pair_distance(&self, other: &ScaledMoebius, x: &H3Point) -> f64 {
        (self.inverse() * *other).displacement(x)
    }
}

/// `acosh(exp(l) / 2)` for large `l`.
fn acosh_exp_half(l: f64) -> f64 {
    if l < 40.0 {
        (0.5 * l.exp()).max(1.0).acosh()
    } else {
        l - std::f64::consts::LN_2 + (1.0 + (1.0 - 4.0 * (-2.0 * l).exp()).max(0.0).sqrt()).ln()
    }
}

impl Mul for ScaledMoebius {
    type Output = ScaledMoebius;
    fn mul(self, r: ScaledMoebius) -> ScaledMoebius {
        ScaledMoebius { m: self.m * r.m, log_scale: self.log_scale + r.log_scale }.balanced()
    }
}
