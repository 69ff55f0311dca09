//! Developing maps of projective structures: continuation of `u'' + (q/2) u = 0`,
//! monodromy, the Darboux-derivative route on the half-plane, and trace coordinates.

use crate::error::{Error, Result};
use crate::hyp3::{Ideal, Moebius, ScaledMoebius, C64};
use crate::ode::{integrate, OdeOptions};
use crate::qdiff::PlanarDifferential;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn default_margin() -> f64 {
    1e-6
}

/// A piecewise-linear path `base -> waypoints...`. A closed path ends at
/// `base + deck`; a nonzero `deck` closes the path on a quotient by translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub base: C64,
    pub waypoints: Vec<C64>,
    #[serde(default)]
    pub closed: bool,
    #[serde(default)]
    pub deck: C64,
    /// Required distance from poles of `q`.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

pub type Loop = Path;

impl Path {
    pub fn open(base: C64, waypoints: Vec<C64>) -> Self {
        Path { base, waypoints, closed: false, deck: C64::new(0.0, 0.0), margin: default_margin() }
    }

    pub fn closed(base: C64, waypoints: Vec<C64>) -> Self {
        Path { closed: true, ..Path::open(base, waypoints) }
    }

    /// The segment `base -> base + c`, closed on the quotient by `z -> z + c`.
    pub fn translation(base: C64, c: C64) -> Self {
        Path { closed: true, deck: c, ..Path::open(base, vec![base + c]) }
    }

    /// Regular polygon with `n` sides around `center` through `base`.
    pub fn circle(center: C64, base: C64, n: usize) -> Self {
        let r = base - center;
        let pts = (1..=n).map(|k| center + r * C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)).collect();
        Path::closed(base, pts)
    }

    /// All vertices including the base and, for closed paths, the end point.
    pub fn points(&self) -> Vec<C64> {
        let mut pts = vec![self.base];
        pts.extend(self.waypoints.iter().copied());
        if self.closed {
            let end = self.base + self.deck;
            if (pts[pts.len() - 1] - end).norm() > 1e-12 * (1.0 + end.norm()) {
                pts.push(end);
            }
        }
        pts
    }

    pub fn length(&self) -> f64 {
        self.points().windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Same path traversed backwards, based at its end.
    pub fn reversed(&self) -> Self {
        let mut pts = self.points();
        pts.reverse();
        let base = pts[0];
        Path { base, waypoints: pts[1..].to_vec(), closed: self.closed, deck: -self.deck, margin: self.margin }
    }

    /// Concatenation with a path starting where this one ends.
    pub fn then(&self, other: &Path) -> Self {
        let mut pts = self.points();
        let shift = pts[pts.len() - 1] - other.base;
        pts.extend(other.points().into_iter().skip(1).map(|z| z + shift));
        Path {
            base: self.base,
            waypoints: pts[1..].to_vec(),
            closed: self.closed && other.closed,
            deck: self.deck + other.deck,
            margin: self.margin.max(other.margin),
        }
    }
}

/// End state of a continuation: the developing map and its derivatives at a point.
#[derive(Debug, Clone, Serialize)]
pub struct DevelopingJet {
    pub base: C64,
    pub f: Ideal,
    pub fprime: C64,
    /// `f''/f'`.
    pub log_derivative_ratio: C64,
    /// Solution pair `[[u1, u2], [u1', u2']]` with Wronskian 1.
    pub solutions: ScaledMoebius,
    /// `|u1 u2' − u1' u2 − 1|`, meaningful while the solutions are representable.
    pub wronskian_drift: f64,
    pub steps: usize,
}

fn standard_solutions() -> Moebius {
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    Moebius { a: z, b: i, c: i, d: z }
}

impl DevelopingJet {
    /// `f(z) = z − base` to second order: `(f, f', f''/f') = (0, 1, 0)`.
    pub fn standard(base: C64) -> Self {
        Self::from_solutions(base, standard_solutions().into(), 0)
    }

    /// Jet with prescribed `f`, `f'` and `f''/f'`.
    pub fn from_jet(base: C64, f: C64, fprime: C64, ratio: C64) -> Result<Self> {
        if fprime.norm() == 0.0 || !fprime.is_finite() || !f.is_finite() {
            return Err(Error::DegenerateJet);
        }
        let u2 = (-fprime.inv()).sqrt();
        let du2 = -ratio * u2 * 0.5;
        let u1 = f * u2;
        let du1 = (u1 * du2 - 1.0) / u2;
        let m = Moebius { a: u1, b: u2, c: du1, d: du2 };
        Ok(Self::from_solutions(base, m.into(), 0))
    }

    fn from_solutions(base: C64, y: ScaledMoebius, steps: usize) -> Self {
        let m = y.m;
        let f = if m.b.norm() == 0.0 { Ideal::Infinity } else { Ideal::Finite(m.a / m.b) };
        let fprime = if m.b.norm() == 0.0 {
            C64::new(f64::INFINITY, 0.0)
        } else {
            -(m.b * m.b).inv() * (-2.0 * y.log_scale).exp()
        };
        let log_derivative_ratio = -m.d / m.b * 2.0;
        let det = m.det() * (2.0 * y.log_scale).exp();
        DevelopingJet {
            base,
            f,
            fprime,
            log_derivative_ratio,
            solutions: y,
            wronskian_drift: (det - 1.0).norm(),
            steps,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-14..=1e-4).contains(&tol) {
        return Err(Error::InvalidInput(format!("tolerance {tol} outside [1e-14, 1e-4]")));
    }
    Ok(())
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let e = b - a;
    let l2 = e.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * e.conj()).re / l2).clamp(0.0, 1.0);
    (p - a - e * t).norm()
}

fn check_path(diff: &PlanarDifferential, pts: &[C64], margin: f64) -> Result<()> {
    for w in pts.windows(2) {
        for &(p, _) in diff.poles() {
            let d = segment_distance(p, w[0], w[1]);
            if d < margin {
                return Err(Error::SingularPath(format!("segment {} -> {} passes within {d:.3e} of the pole {p}", w[0], w[1])));
            }
        }
        for k in 0..=8 {
            let z = w[0] + (w[1] - w[0]) * (k as f64 / 8.0);
            if !diff.chart().contains(z) {
                return Err(Error::SingularPath(format!("path leaves the chart at {z}")));
            }
        }
    }
    Ok(())
}

/// Linear transport `Y' = A(z) Y` along the polyline, keeping `Y` as `exp(s) m`.
fn transport<F: Fn(C64) -> [[C64; 2]; 2]>(generator: F, pts: &[C64], y0: ScaledMoebius, tol: f64, right: bool) -> Result<(ScaledMoebius, usize)> {
    let opts = OdeOptions::with_tol(tol);
    let mut m = y0.m;
    let mut log_scale = y0.log_scale;
    let mut steps = 0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dz = b - a;
        if dz.norm() == 0.0 {
            continue;
        }
        let rhs = |s: f64, y: &[C64; 4]| {
            let g = generator(a + dz * s);
            let (y11, y12, y21, y22) = (y[0], y[1], y[2], y[3]);
            let out = if right {
                // Y g
                [
                    y11 * g[0][0] + y12 * g[1][0],
                    y11 * g[0][1] + y12 * g[1][1],
                    y21 * g[0][0] + y22 * g[1][0],
                    y21 * g[0][1] + y22 * g[1][1],
                ]
            } else {
                // g Y
                [
                    g[0][0] * y11 + g[0][1] * y21,
                    g[0][0] * y12 + g[0][1] * y22,
                    g[1][0] * y11 + g[1][1] * y21,
                    g[1][0] * y12 + g[1][1] * y22,
                ]
            };
            [out[0] * dz, out[1] * dz, out[2] * dz, out[3] * dz]
        };
        let mut extra = 0.0;
        let (y, stats) = integrate(rhs, 0.0, 1.0, [m.a, m.b, m.c, m.d], &opts, |_, y| {
            let n = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if n > 1e32 {
                for v in y.iter_mut() {
                    *v /= n;
                }
                extra += n.ln();
            }
            true
        })?;
        steps += stats.accepted;
        m = Moebius { a: y[0], b: y[1], c: y[2], d: y[3] };
        log_scale += extra;
    }
    let n = [m.a, m.b, m.c, m.d].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let s = ScaledMoebius { m: Moebius { a: m.a / n, b: m.b / n, c: m.c / n, d: m.d / n }, log_scale: log_scale + n.ln() };
    Ok((s, steps))
}

fn schwarzian_generator(diff: &PlanarDifferential) -> impl Fn(C64) -> [[C64; 2]; 2] + '_ {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    move |z| [[zero, one], [-diff.q(z) * 0.5, zero]]
}

/// Continues the developing map along `path` from the jet `start` at `path.base`.
pub fn continue_jet(diff: &PlanarDifferential, path: &Path, start: &DevelopingJet, tol: f64) -> Result<DevelopingJet> {
    check_tol(tol)?;
    let pts = path.points();
    check_path(diff, &pts, path.margin)?;
    let (y, steps) = transport(schwarzian_generator(diff), &pts, start.solutions, tol, false)?;
    Ok(DevelopingJet::from_solutions(pts[pts.len() - 1], y, start.steps + steps))
}

fn check_deck(diff: &PlanarDifferential, lp: &Loop) -> Result<()> {
    if lp.deck.norm() == 0.0 {
        return Ok(());
    }
    let mut worst: f64 = 0.0;
    for z in lp.points() {
        let a = diff.q(z);
        let b = diff.q(z + lp.deck);
        worst = worst.max((a - b).norm() / a.norm().max(b.norm()).max(1e-300));
    }
    if worst > 1e-8 {
        return Err(Error::NotEquivariant(worst));
    }
    Ok(())
}

/// Holonomy of the developing map around a closed loop, as `exp(s) m`:
/// `f(γ z) = ρ(γ) f(z)` for the developing map normalized by the standard jet at the base.
pub fn monodromy_scaled(diff: &PlanarDifferential, lp: &Loop, tol: f64) -> Result<ScaledMoebius> {
    if !lp.closed {
        return Err(Error::InvalidInput("monodromy needs a closed loop".into()));
    }
    check_deck(diff, lp)?;
    let end = continue_jet(diff, lp, &DevelopingJet::standard(lp.base), tol)?;
    let y0inv = standard_solutions().inverse();
    let n = (y0inv * end.solutions.m).transpose();
    Ok(ScaledMoebius { m: n, log_scale: end.solutions.log_scale })
}

pub fn monodromy(diff: &PlanarDifferential, lp: &Loop, tol: f64) -> Result<Moebius> {
    let s = monodromy_scaled(diff, lp, tol)?;
    s.to_moebius()
        .filter(|m| m.frobenius_sq().is_finite())
        .ok_or_else(|| Error::InvalidMatrix("monodromy overflows; use the scaled form".into()))
}

/// `ρ_Φ(γ)` from the osculating Möbius maps `M` along `z0 -> γ z0`, where
/// `M⁻¹dM = ½ Φ(z) [[−z, z²], [−1, z]] dz` and `M(z0) = 1`.
pub fn darboux_holonomy(phi: &PlanarDifferential, gamma: &Moebius, z0: C64, tol: f64) -> Result<Moebius> {
    check_tol(tol)?;
    if z0.im <= 0.0 {
        return Err(Error::InvalidInput("base point must lie in the upper half-plane".into()));
    }
    let g = gamma.renormalize();
    let scale = g.frobenius_sq().sqrt();
    let im: f64 = [g.a, g.b, g.c, g.d].iter().map(|x| x.im.abs()).fold(0.0, f64::max);
    let re: f64 = [g.a, g.b, g.c, g.d].iter().map(|x| x.re.abs()).fold(0.0, f64::max);
    if im > 1e-12 * scale && re > 1e-12 * scale {
        return Err(Error::InvalidInput("γ does not preserve the upper half-plane".into()));
    }
    let Ideal::Finite(z1) = g.apply_ideal(Ideal::Finite(z0)) else {
        return Err(Error::InvalidInput("γ sends the base point to infinity".into()));
    };
    let mut worst: f64 = 0.0;
    for k in 0..=8 {
        let z = z0 + (z1 - z0) * (k as f64 / 8.0);
        let den = g.c * z + g.d;
        let gz = (g.a * z + g.b) / den;
        let lhs = phi.q(gz) / (den * den * den * den);
        let rhs = phi.q(z);
        let sc = lhs.norm().max(rhs.norm());
        if sc > 0.0 {
            worst = worst.max((lhs - rhs).norm() / sc);
        }
    }
    if worst > 1e-8 {
        return Err(Error::NotEquivariant(worst));
    }
    check_path(phi, &[z0, z1], default_margin())?;
    let half = C64::new(0.5, 0.0);
    let gen = |z: C64| {
        let p = phi.q(z) * half;
        [[-p * z, p * z * z], [-p, p * z]]
    };
    let (m, _) = transport(gen, &[z0, z1], Moebius::identity().into(), tol, true)?;
    let m = m.to_moebius().ok_or_else(|| Error::InvalidMatrix("osculating map overflows".into()))?;
    Ok((m * g).renormalize())
}

/// Holonomy matrices on named generators; uppercase letters denote inverses.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Representation {
    generators: BTreeMap<char, ScaledMoebius>,
}

impl Representation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, letter: char, m: impl Into<ScaledMoebius>) -> Self {
        self.insert(letter, m);
        self
    }

    pub fn insert(&mut self, letter: char, m: impl Into<ScaledMoebius>) {
        self.generators.insert(letter.to_ascii_lowercase(), m.into());
    }

    pub fn generators(&self) -> impl Iterator<Item = (&char, &ScaledMoebius)> {
        self.generators.iter()
    }

    pub fn evaluate(&self, word: &str) -> Result<ScaledMoebius> {
        let mut acc = ScaledMoebius::identity();
        for ch in word.chars() {
            let m = self
                .generators
                .get(&ch.to_ascii_lowercase())
                .ok_or_else(|| Error::InvalidInput(format!("letter {ch:?} is not a generator")))?;
            acc = acc * if ch.is_uppercase() { m.inverse() } else { *m };
        }
        Ok(acc)
    }

    /// Largest operator-norm distance from `±1` over the relators.
    pub fn relator_defect(&self, relators: &[&str]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in relators {
            let m = self.evaluate(r)?;
            let plain = m.to_moebius().ok_or_else(|| Error::InvalidMatrix(format!("relator {r} overflows")))?;
            let id = Moebius::identity();
            let d = (plain - id).operator_norm().min((plain.neg() - id).operator_norm());
            worst = worst.max(d);
        }
        Ok(worst)
    }

    pub fn check_relators(&self, relators: &[&str], tol: f64) -> Result<()> {
        let d = self.relator_defect(relators)?;
        if d > tol {
            return Err(Error::InvalidMatrix(format!("relator defect {d:.3e} exceeds {tol:.1e}")));
        }
        Ok(())
    }
}

/// `log(|tr ρ(w)| + 2)` for each word.
pub fn trace_coordinates(rep: &Representation, words: &[&str]) -> Result<Vec<f64>> {
    words.iter().map(|w| Ok(rep.evaluate(w)?.trace_coordinate())).collect()
}

/// Divides by the largest entry.
pub fn projectivize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m <= 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp3::translation_length;
    use crate::poly::CPoly;
    use crate::qdiff::Chart;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn constant(t: f64) -> PlanarDifferential {
        PlanarDifferential::real_poly(&[t]).unwrap()
    }

    fn inverse_square(k: f64) -> PlanarDifferential {
        let num = CPoly::new(vec![c(k, 0.0)]);
        let den = CPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        PlanarDifferential::rational(num, den, Chart::Plane).unwrap()
    }

    fn ideal(f: &Ideal) -> C64 {
        match f {
            Ideal::Finite(z) => *z,
            Ideal::Infinity => panic!("infinite"),
        }
    }

    #[test]
    fn flat_continuation_is_identity_map() {
        let Ok(zero) = PlanarDifferential::real_poly(&[0.0]) else { return };
        let j = continue_jet(&zero, &Path::open(c(0.0, 0.0), vec![c(1.0, 0.0)]), &DevelopingJet::standard(c(0.0, 0.0)), 1e-12).unwrap();
        assert!((ideal(&j.f) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn tiny_constant_approximates_identity() {
        let q = constant(1e-300);
        let j = continue_jet(&q, &Path::open(c(0.0, 0.0), vec![c(1.0, 0.0)]), &DevelopingJet::standard(c(0.0, 0.0)), 1e-12).unwrap();
        assert!((ideal(&j.f) - 1.0).norm() < 1e-14);
        assert!((j.fprime - 1.0).norm() < 1e-14);
        assert!(j.log_derivative_ratio.norm() < 1e-14);
    }

    #[test]
    fn exponential_solution_of_constant_schwarzian() {
        // f = exp(i√2 z) has Schwarzian 1
        let q = constant(1.0);
        let a = c(0.0, 2f64.sqrt());
        let z1 = c(0.7, 0.4);
        let start = DevelopingJet::from_jet(c(0.0, 0.0), c(1.0, 0.0), a, a).unwrap();
        let j = continue_jet(&q, &Path::open(c(0.0, 0.0), vec![c(0.3, -0.2), z1]), &start, 1e-13).unwrap();
        let f = (a * z1).exp();
        assert!((ideal(&j.f) - f).norm() < 1e-11);
        assert!((j.fprime - a * f).norm() < 1e-11);
        assert!((j.log_derivative_ratio - a).norm() < 1e-11);
        assert!(j.wronskian_drift < 1e-11);
    }

    /// Series solution of u'' + (z/2) u = 0 with 60 terms.
    fn airy_series(z: C64, u0: C64, du0: C64) -> (C64, C64) {
        let mut a = vec![C64::new(0.0, 0.0); 64];
        a[0] = u0;
        a[1] = du0;
        for n in 1..62 {
            a[n + 2] = -a[n - 1] * 0.5 / ((n + 2) as f64 * (n + 1) as f64);
        }
        let mut u = C64::new(0.0, 0.0);
        let mut du = C64::new(0.0, 0.0);
        for n in (0..63).rev() {
            u = u * z + a[n];
        }
        for n in (1..63).rev() {
            du = du * z + a[n] * n as f64;
        }
        (u, du)
    }

    #[test]
    fn airy_matches_power_series() {
        let q = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let z1 = c(2.0, 0.0);
        let j = continue_jet(&q, &Path::open(c(0.0, 0.0), vec![z1]), &DevelopingJet::standard(c(0.0, 0.0)), 1e-13).unwrap();
        let i = c(0.0, 1.0);
        // standard jet: u1 = i z-like solution, u2 = i constant-like solution
        let (u1, du1) = airy_series(z1, c(0.0, 0.0), i);
        let (u2, du2) = airy_series(z1, i, c(0.0, 0.0));
        let f = u1 / u2;
        let fp = -(u2 * u2).inv();
        let r = -du2 / u2 * 2.0;
        assert!((ideal(&j.f) - f).norm() < 1e-8 * f.norm().max(1.0));
        assert!((j.fprime - fp).norm() < 1e-8 * fp.norm().max(1.0));
        assert!((j.log_derivative_ratio - r).norm() < 1e-8 * r.norm().max(1.0));
        let _ = du1;
    }

    #[test]
    fn schwarzian_recovered_by_finite_differences() {
        // S(f) = (f''/f')' − ½ (f''/f')²
        let q = PlanarDifferential::real_poly(&[1.0, -0.5, 0.3]).unwrap();
        let base = c(0.0, 0.0);
        for &z in &[c(0.5, 0.2), c(1.0, -0.4)] {
            let h = 1e-3;
            let at = |w: C64| continue_jet(&q, &Path::open(base, vec![z, w]), &DevelopingJet::standard(base), 1e-13).unwrap().log_derivative_ratio;
            let d = (at(z + h) - at(z - h)) / (2.0 * h);
            let g = at(z);
            let s = d - g * g * 0.5;
            assert!((s - q.q(z)).norm() < 1e-5, "{s} vs {}", q.q(z));
        }
    }

    #[test]
    fn tolerance_range_and_poles() {
        let q = inverse_square(0.1);
        let p = Path::open(c(1.0, 0.0), vec![c(2.0, 0.0)]);
        let s = DevelopingJet::standard(c(1.0, 0.0));
        assert!(matches!(continue_jet(&q, &p, &s, 1e-3), Err(Error::InvalidInput(_))));
        assert!(matches!(continue_jet(&q, &p, &s, 1e-15), Err(Error::InvalidInput(_))));
        let through = Path::open(c(-1.0, 0.0), vec![c(1.0, 0.0)]);
        assert!(matches!(continue_jet(&q, &through, &s, 1e-10), Err(Error::SingularPath(_))));
    }

    #[test]
    fn cylinder_trace_closed_form() {
        for &t in &[1.0, 100.0] {
            for &cc in &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)] {
                let m = monodromy(&constant(t), &Path::translation(c(0.2, 0.1), cc), 1e-13).unwrap();
                let exact = (cc * (t / 2.0).sqrt()).cos() * 2.0;
                assert!((m.trace() - exact).norm() < 1e-9 * exact.norm().max(1.0), "t={t} c={cc}: {} vs {exact}", m.trace());
            }
        }
        let m = monodromy(&constant(8.0), &Path::translation(c(0.0, 0.0), c(0.0, 1.0)), 1e-13).unwrap();
        assert!((translation_length(&m) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn large_parameter_needs_scaling() {
        let t = 1e6;
        let s = monodromy_scaled(&constant(t), &Path::translation(c(0.0, 0.0), c(0.0, 1.0)), 1e-12).unwrap();
        let omega = (t / 2.0).sqrt();
        // |tr| = 2 cosh ω
        assert!((s.log_abs_trace() - omega).abs() < 1e-8 * omega);
        assert!((s.translation_length() / (2.0 * t).sqrt() - 1.0).abs() < 1e-8);
        assert!(monodromy(&constant(t), &Path::translation(c(0.0, 0.0), c(0.0, 1.0)), 1e-12).is_err());
    }

    #[test]
    fn deck_must_preserve_q() {
        let q = PlanarDifferential::real_poly(&[1.0, 1.0]).unwrap();
        assert!(matches!(monodromy(&q, &Path::translation(c(0.0, 0.0), c(1.0, 0.0)), 1e-10), Err(Error::NotEquivariant(_))));
    }

    #[test]
    fn euler_equation_trace() {
        for &k in &[0.1, -0.7, 0.4] {
            let m = monodromy(&inverse_square(k), &Path::circle(c(0.0, 0.0), c(1.0, 0.0), 64), 1e-13).unwrap();
            let s = C64::new(0.25 - k / 2.0, 0.0).sqrt();
            let exact = (s * std::f64::consts::TAU).cos() * 2.0;
            assert!((m.trace().norm() - exact.norm()).abs() < 1e-9, "{k}: {} vs {exact}", m.trace());
        }
    }

    #[test]
    fn loop_algebra() {
        let q = inverse_square(0.3);
        let lp = Path::circle(c(0.0, 0.0), c(1.0, 0.0), 16);
        let m = monodromy(&q, &lp, 1e-13).unwrap();
        let twice = monodromy(&q, &lp.then(&lp), 1e-13).unwrap();
        assert!((twice - m * m).operator_norm() < 1e-8);
        let inv = monodromy(&q, &lp.reversed(), 1e-13).unwrap();
        assert!((inv * m - Moebius::identity()).operator_norm() < 1e-9);
        // homotopic loop with a different shape
        let square = Path::closed(c(1.0, 0.0), vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)]);
        let m2 = monodromy(&q, &square, 1e-13).unwrap();
        assert!((m2 - m).operator_norm() < 1e-8);
        // another basepoint gives a conjugate
        let m3 = monodromy(&q, &Path::circle(c(0.0, 0.0), c(0.0, 2.0), 24), 1e-13).unwrap();
        assert!((m3.trace() - m.trace()).norm() < 1e-9);
    }

    #[test]
    fn darboux_trivial_and_euler() {
        let lambda: f64 = 3.0;
        let g = Moebius::diag(C64::new(lambda.sqrt(), 0.0));
        let tiny = inverse_square(1e-300);
        let r = darboux_holonomy(&tiny, &g, c(0.3, 1.0), 1e-12).unwrap();
        assert!((r - g).operator_norm() < 1e-12);
        for &k in &[0.1, -0.7, 0.3] {
            let r = darboux_holonomy(&inverse_square(k), &g, c(0.3, 1.0), 1e-13).unwrap();
            // f = z^a with a = √(1 − 2k) conjugates γ to diag(λ^{a/2}, λ^{−a/2})
            let a = (1.0 - 2.0 * k).sqrt();
            let exact = 2.0 * (a * lambda.ln() / 2.0).cosh();
            assert!((r.trace().norm() - exact).abs() < 1e-9, "{k}: {} vs {exact}", r.trace());
        }
    }

    #[test]
    fn darboux_agrees_with_monodromy_on_quotient() {
        let k = 0.2;
        let lambda: f64 = 2.5;
        let g = Moebius::diag(C64::new(lambda.sqrt(), 0.0));
        let r = darboux_holonomy(&inverse_square(k), &g, c(0.0, 1.0), 1e-13).unwrap();
        // in w = log z the differential becomes the constant k − 1/2, and z -> λz becomes w -> w + ln λ
        let qw = constant(k - 0.5);
        let m = monodromy(&qw, &Path::translation(c(0.0, 0.0), c(lambda.ln(), 0.0)), 1e-13).unwrap();
        assert!((m.trace().norm() - r.trace().norm()).abs() < 1e-6);
    }

    #[test]
    fn darboux_rejects_noninvariant() {
        let q = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let g = Moebius::diag(C64::new(2.0, 0.0));
        assert!(matches!(darboux_holonomy(&q, &g, c(0.0, 1.0), 1e-10), Err(Error::NotEquivariant(_))));
    }

    #[test]
    fn darboux_continuous_in_parameter() {
        let g = Moebius::diag(C64::new(1.05, 0.0));
        let mut prev: Option<f64> = None;
        for i in 0..20 {
            let k = 0.1 + 1e-3 * i as f64;
            let tr = darboux_holonomy(&inverse_square(k), &g, c(0.0, 1.0), 1e-12).unwrap().trace().re;
            if let Some(p) = prev {
                assert!((tr - p).abs() < 1e-4);
            }
            prev = Some(tr);
        }
    }

    #[test]
    fn trace_coordinates_closed_forms() {
        let id = Representation::new().with('a', Moebius::identity());
        let v = trace_coordinates(&id, &["a", "aa", "A"]).unwrap();
        assert!(v.iter().all(|x| (x - 4f64.ln()).abs() < 1e-15));
        assert!(trace_coordinates(&id, &[]).unwrap().is_empty());
        let s: f64 = 2.0;
        let rep = Representation::new().with('g', Moebius::diag(C64::new(s.exp(), 0.0)));
        let v = trace_coordinates(&rep, &["g", "gg", "ggg"]).unwrap();
        for (n, x) in v.iter().enumerate() {
            let m = (n + 1) as f64;
            assert!((x - (2.0 * (m * s).cosh() + 2.0).ln()).abs() < 1e-13);
        }
        let big = Representation::new().with('g', Moebius::diag(C64::new(400f64.exp(), 0.0)));
        let p = projectivize(&trace_coordinates(&big, &["g", "gg", "ggg"]).unwrap());
        for (n, x) in p.iter().enumerate() {
            assert!((x - (n + 1) as f64 / 3.0).abs() < 1e-2);
        }
        assert!(trace_coordinates(&rep, &["h"]).is_err());
    }

    #[test]
    fn torus_relators() {
        let t = 3.0;
        let q = constant(t);
        let a = monodromy(&q, &Path::translation(c(0.1, 0.1), c(1.0, 0.0)), 1e-13).unwrap();
        let b = monodromy(&q, &Path::translation(c(0.1, 0.1), c(0.3, 1.0)), 1e-13).unwrap();
        let rep = Representation::new().with('a', a).with('b', b);
        assert!(rep.relator_defect(&["abAB"]).unwrap() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn wronskian_stays_one(x in -1.0..1.0f64, y in -1.0..1.0f64, a in -2.0..2.0f64) {
            let q = PlanarDifferential::real_poly(&[a, 1.0, -0.5]).unwrap();
            let tol = 1e-11;
            let j = continue_jet(&q, &Path::open(c(0.0, 0.0), vec![c(x, 0.0), c(x, y)]), &DevelopingJet::standard(c(0.0, 0.0)), tol).unwrap();
            prop_assert!(j.wronskian_drift <= 10.0 * tol, "{}", j.wronskian_drift);
        }
    }
}
