use crate::error::{Error, Result};
use crate::hyp3::C64;
use crate::ode::integrate_gk;
use crate::poly::{beta_rational, CPoly, CRational, Poly, QComplex, QPoly, RationalFn};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Domain of a planar chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    Plane,
    Disk { center: C64, radius: f64 },
    Annulus { center: C64, inner: f64, outer: f64 },
}

impl Chart {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Chart::Plane => true,
            Chart::Disk { center, radius } => (z - center).norm() < radius,
            Chart::Annulus { center, inner, outer } => {
                let r = (z - center).norm();
                r > inner && r < outer
            }
        }
    }
}

/// Evaluation of a differential and its derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QJet {
    pub q: C64,
    pub dq: C64,
    pub ddq: C64,
}

/// A rational quadratic differential `q(z) dz^2` on a planar chart.
#[derive(Debug, Clone)]
pub struct PlanarDifferential {
    q: CRational,
    dq: CRational,
    ddq: CRational,
    beta: CRational,
    dbeta: CRational,
    chart: Chart,
    zeros: Vec<(C64, usize)>,
    poles: Vec<(C64, usize)>,
    exact: (QPoly, QPoly),
}

fn to_q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

fn exact_poly(p: &CPoly) -> QPoly {
    Poly::new(p.coeffs().iter().map(|c| Complex::new(to_q(c.re), to_q(c.im))).collect())
}

impl PlanarDifferential {
    pub fn rational(num: CPoly, den: CPoly, chart: Chart) -> Result<Self> {
        if num.is_zero() {
            return Err(Error::DegenerateDifferential("q is identically zero".into()));
        }
        if den.is_zero() {
            return Err(Error::DegenerateDifferential("zero denominator".into()));
        }
        let scale = num.max_coeff().max(den.max_coeff());
        let num_roots = num.roots();
        let den_roots = den.roots();
        let tol = 1e-8 * (1.0 + scale);
        let mut zeros = Vec::new();
        let mut poles: Vec<(C64, i64)> = den_roots.iter().map(|&(r, k)| (r, k as i64)).collect();
        for (r, k) in num_roots {
            if let Some(p) = poles.iter_mut().find(|p| (p.0 - r).norm() < tol) {
                p.1 -= k as i64;
            } else {
                zeros.push((r, k));
            }
        }
        let mut pole_list = Vec::new();
        for (r, k) in poles {
            if k < 0 {
                zeros.push((r, (-k) as usize));
            } else if k > 0 {
                if k > 2 {
                    return Err(Error::DegenerateDifferential(format!("pole of order {k} at {r}")));
                }
                pole_list.push((r, k as usize));
            }
        }
        let exact = (exact_poly(&num), exact_poly(&den));
        let q = RationalFn::new(num, den);
        let dq = q.derivative();
        let ddq = dq.derivative();
        let beta = beta_rational(&q);
        let dbeta = beta.derivative();
        Ok(PlanarDifferential { q, dq, ddq, beta, dbeta, chart, zeros, poles: pole_list, exact })
    }

    pub fn polynomial(coeffs: &[C64]) -> Result<Self> {
        Self::rational(Poly::new(coeffs.to_vec()), Poly::constant(C64::one()), Chart::Plane)
    }

    /// Polynomial with real coefficients, lowest degree first.
    pub fn real_poly(coeffs: &[f64]) -> Result<Self> {
        let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::polynomial(&c)
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    /// `c * q`.
    pub fn scaled(&self, c: C64) -> Result<Self> {
        Self::rational(self.q.num.scale(&c), self.q.den.clone(), self.chart)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn numerator(&self) -> &CPoly {
        &self.q.num
    }

    pub fn denominator(&self) -> &CPoly {
        &self.q.den
    }

    pub fn zeros(&self) -> &[(C64, usize)] {
        &self.zeros
    }

    pub fn poles(&self) -> &[(C64, usize)] {
        &self.poles
    }

    /// Zeros and simple poles: the singular points of the flat metric at finite distance.
    pub fn critical_points(&self) -> Vec<C64> {
        self.zeros
            .iter()
            .map(|z| z.0)
            .chain(self.poles.iter().filter(|p| p.1 == 1).map(|p| p.0))
            .collect()
    }

    pub fn q(&self, z: C64) -> C64 {
        self.q.eval(&z)
    }

    pub fn jet(&self, z: C64) -> QJet {
        QJet { q: self.q.eval(&z), dq: self.dq.eval(&z), ddq: self.ddq.eval(&z) }
    }

    pub fn beta(&self, z: C64) -> C64 {
        self.beta.eval(&z)
    }

    pub fn dbeta(&self, z: C64) -> C64 {
        self.dbeta.eval(&z)
    }

    pub fn phi_hat(&self, z: C64) -> C64 {
        self.q(z) - self.beta(z)
    }

    /// Value and derivative of the corrected differential.
    pub fn phi_hat_jet(&self, z: C64) -> (C64, C64) {
        (self.phi_hat(z), self.dq.eval(&z) - self.dbeta(z))
    }

    pub fn beta_function(&self) -> &CRational {
        &self.beta
    }

    /// Exact rational coefficients of `q`.
    pub fn exact(&self) -> RationalFn<QComplex> {
        RationalFn::new(self.exact.0.clone(), self.exact.1.clone())
    }

    pub fn exact_beta(&self) -> RationalFn<QComplex> {
        beta_rational(&self.exact())
    }

    pub fn exact_phi_hat(&self) -> RationalFn<QComplex> {
        self.exact().sub(&self.exact_beta())
    }

    /// `|beta / q|`.
    pub fn epsilon(&self, z: C64) -> f64 {
        (self.beta(z) / self.q(z)).norm()
    }

    /// Norm of the gradient of `beta / q` in the flat metric `|q|^{1/2}|dz|`.
    pub fn epsilon_gradient(&self, z: C64) -> f64 {
        let j = self.jet(z);
        let d = (self.dbeta(z) * j.q - self.beta(z) * j.dq) / (j.q * j.q);
        d.norm() / j.q.norm().sqrt()
    }

    /// Euclidean distance to the nearest zero or pole.
    pub fn euclid_standoff(&self, z: C64) -> f64 {
        self.zeros
            .iter()
            .chain(self.poles.iter())
            .map(|p| (p.0 - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn nearest_singular_on_segment(&self, a: C64, b: C64) -> Option<(C64, f64)> {
        let d = b - a;
        let l2 = d.norm_sqr();
        self.zeros
            .iter()
            .chain(self.poles.iter())
            .map(|&(p, _)| {
                let s = if l2 == 0.0 { 0.0 } else { (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0) };
                (p, (a + d * s - p).norm())
            })
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
    }

    /// Holonomy `∫√q dz` along the straight segment, normalized to `Im >= 0`.
    pub fn segment_holonomy(&self, a: C64, b: C64, margin: Option<f64>) -> Result<C64> {
        let len = (b - a).norm();
        let margin = margin.unwrap_or(1e-6 * len);
        if let Some((p, dist)) = self.nearest_singular_on_segment(a, b) {
            if dist <= margin {
                return Err(Error::SingularSegment { zero: format!("{p}"), margin });
            }
        }
        Ok(normalize_sign(self.integrate_sqrt(a, b, false)))
    }

    /// Holonomy with the branch fixed at the start by `branch`.
    pub fn segment_holonomy_branch(&self, a: C64, b: C64, branch: C64) -> (C64, C64) {
        let (v, end) = self.integrate_sqrt_branch(a, b, false, Some(branch));
        (v, end)
    }

    pub(crate) fn integrate_sqrt(&self, a: C64, b: C64, from_zero: bool) -> C64 {
        self.integrate_sqrt_branch(a, b, from_zero, None).0
    }

    /// Integrates `√q` with a continuously tracked branch; returns the
    /// integral and the branch value at `b`.
    fn integrate_sqrt_branch(&self, a: C64, b: C64, from_zero: bool, branch: Option<C64>) -> (C64, C64) {
        let d = b - a;
        // parametrize z(u) = a + d u^2 when starting at a zero, else z = a + d u
        let z_of = |u: f64| if from_zero { a + d * (u * u) } else { a + d * u };
        let dz_of = |u: f64| if from_zero { d * (2.0 * u) } else { d };
        // skeleton: arg q changes by less than pi/4 between consecutive nodes
        let mut nodes = vec![0.0f64, 1.0];
        let mut i = 0;
        while i + 1 < nodes.len() {
            let (u0, u1) = (nodes[i], nodes[i + 1]);
            let q0 = self.q(z_of(u0.max(1e-6 * u1)));
            let q1 = self.q(z_of(u1));
            let turn = (q1 / q0).arg().abs();
            let qm = self.q(z_of(0.5 * (u0 + u1)));
            let turn2 = (qm / q0).arg().abs();
            if (turn > std::f64::consts::FRAC_PI_4 || turn2 > std::f64::consts::FRAC_PI_4) && u1 - u0 > 1e-12 {
                nodes.insert(i + 1, 0.5 * (u0 + u1));
            } else {
                i += 1;
            }
            if nodes.len() > 100_000 {
                break;
            }
        }
        let mut reference = match branch {
            Some(b0) => b0,
            None => self.q(z_of(nodes[1] * 1e-3)).sqrt(),
        };
        let mut total = C64::zero();
        for w in nodes.windows(2) {
            let (u0, u1) = (w[0], w[1]);
            let r = reference;
            let sqrt_near = move |q: C64| {
                let s = q.sqrt();
                if (s - r).norm() <= (s + r).norm() { s } else { -s }
            };
            // the branch is fixed by continuity from the start of the piece
            let start = sqrt_near(self.q(z_of(u0 + 1e-9 * (u1 - u0))));
            let piece_ref = start;
            let f = |u: f64| {
                let s = self.q(z_of(u)).sqrt();
                let s = if (s - piece_ref).norm() <= (s + piece_ref).norm() { s } else { -s };
                s * dz_of(u)
            };
            total += integrate_gk(f, u0, u1, 1e-14);
            let end = self.q(z_of(u1)).sqrt();
            reference = if (end - piece_ref).norm() <= (end + piece_ref).norm() { end } else { -end };
        }
        (total, reference)
    }

    /// Lower bound for the flat distance to the nearest zero (or simple pole),
    /// exact when the connecting geodesic is a nonsingular straight segment.
    pub fn distance_to_zeros(&self, z: C64) -> f64 {
        let crit = self.critical_points();
        // skip segments through another critical point
        let blocked = |p: C64| {
            let d = z - p;
            let l2 = d.norm_sqr();
            crit.iter().any(|&c| {
                let s = ((c - p) * d.conj()).re / l2;
                s > 0.0 && s < 1.0 && (p + d * s - c).norm() <= 1e-9 * l2.sqrt()
            })
        };
        crit.iter()
            .filter(|&&p| !blocked(p))
            .map(|&p| self.integrate_sqrt(p, z, true).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Flat length `∫|√q||dz|` of the straight segment.
    pub fn segment_length(&self, a: C64, b: C64) -> f64 {
        let d = b - a;
        integrate_gk(|u| C64::new(self.q(a + d * u).norm().sqrt() * d.norm(), 0.0), 0.0, 1.0, 1e-13).re
    }
}

/// Chooses the sign of a holonomy vector with nonnegative imaginary part.
pub fn normalize_sign(h: C64) -> C64 {
    if h.im < 0.0 || (h.im == 0.0 && h.re < 0.0) {
        -h
    } else {
        h
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSample {
    pub z: C64,
    pub epsilon: f64,
    pub gradient: f64,
    pub distance: f64,
    pub epsilon_bound: f64,
    pub gradient_bound: f64,
    pub epsilon_ok: bool,
    pub gradient_ok: bool,
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonReport {
    pub samples: Vec<EpsilonSample>,
    pub pass: bool,
}

/// Evaluates `|β/φ| <= 6/d²` and the gradient bound `48/d³` at samples.
pub fn epsilon_bound_check(diff: &PlanarDifferential, samples: &[C64]) -> EpsilonReport {
    let mut out = Vec::new();
    for &z in samples {
        let excluded = diff.euclid_standoff(z) < 1e-12 || diff.q(z).norm() == 0.0;
        if excluded {
            out.push(EpsilonSample {
                z,
                epsilon: f64::NAN,
                gradient: f64::NAN,
                distance: 0.0,
                epsilon_bound: f64::INFINITY,
                gradient_bound: f64::INFINITY,
                epsilon_ok: false,
                gradient_ok: false,
                excluded: true,
            });
            continue;
        }
        let d = diff.distance_to_zeros(z);
        let eps = diff.epsilon(z);
        let grad = diff.epsilon_gradient(z);
        let eb = 6.0 / (d * d);
        let gb = 48.0 / (d * d * d);
        out.push(EpsilonSample {
            z,
            epsilon: eps,
            gradient: grad,
            distance: d,
            epsilon_bound: eb,
            gradient_bound: gb,
            epsilon_ok: eps <= eb,
            gradient_ok: grad <= gb,
            excluded: false,
        });
    }
    let pass = out.iter().filter(|s| !s.excluded).all(|s| s.epsilon_ok && s.gradient_ok);
    EpsilonReport { samples: out, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{q_frac, q_int, qpoly_from_ints};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn holonomy_examples() {
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let h = one.segment_holonomy(c(0.0, 0.0), c(1.0, 2.0), None).unwrap();
        assert!((h - c(1.0, 2.0)).norm() < 1e-14);
        let four = PlanarDifferential::real_poly(&[4.0]).unwrap();
        let h = four.segment_holonomy(c(0.0, 0.0), c(0.0, 1.0), None).unwrap();
        assert!((h - c(0.0, 2.0)).norm() < 1e-14);
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let h = z.segment_holonomy(c(1.0, 0.0), c(4.0, 0.0), None).unwrap();
        assert!((h.norm() - 14.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_segment_rejected() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let r = z.segment_holonomy(c(-1.0, 0.0), c(1.0, 0.0), None);
        assert!(matches!(r, Err(Error::SingularSegment { .. })));
    }

    #[test]
    fn holonomy_additive() {
        let q = PlanarDifferential::real_poly(&[-1.0, 0.0, 0.0, 1.0]).unwrap();
        let (a, m, b) = (c(2.0, 1.0), c(0.5, 2.5), c(-1.5, 3.0));
        let d = b - a;
        let whole = q.integrate_sqrt(a, b, false);
        let mid = a + d * 0.37;
        let (h1, br) = q.segment_holonomy_branch(a, mid, q.q(a).sqrt());
        let (h2, _) = q.segment_holonomy_branch(mid, b, br);
        let _ = m;
        assert!((whole - (h1 + h2)).norm() < 1e-10 * whole.norm());
    }

    #[test]
    fn beta_examples() {
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        assert_eq!(one.beta(c(0.3, 0.2)), C64::zero());
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let w = c(0.7, -1.1);
        assert!((z.beta(w) + 5.0 / (8.0 * w * w)).norm() < 1e-14);
        assert!((z.phi_hat(w) - (w + 5.0 / (8.0 * w * w))).norm() < 1e-14);
        let z2 = PlanarDifferential::real_poly(&[0.0, 0.0, 1.0]).unwrap();
        assert!((z2.beta(w) + 1.5 / (w * w)).norm() < 1e-13);
        let t = PlanarDifferential::real_poly(&[7.5]).unwrap();
        assert!((t.phi_hat(w) - 7.5).norm() < 1e-15);
    }

    #[test]
    fn exact_phi_hat_of_z() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        // z + 5/(8 z^2) = (8 z^3 + 5) / (8 z^2)
        let expect = RationalFn::new(qpoly_from_ints(&[5, 0, 0, 8]), qpoly_from_ints(&[0, 0, 8]));
        assert!(z.exact_phi_hat().same_function(&expect));
        for k in 1..=3 {
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            let q = PlanarDifferential::real_poly(&coeffs).unwrap();
            let kk = k as i64;
            assert_eq!(q.exact_beta().laurent_coefficient(&q_int(0), -2), q_frac(-kk * (kk + 4), 8));
        }
    }

    #[test]
    fn zeros_and_poles() {
        let q = PlanarDifferential::real_poly(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.zeros().len(), 3);
        let bad = PlanarDifferential::rational(Poly::constant(C64::one()), CPoly::from_pairs(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), Chart::Plane);
        assert!(bad.is_err());
        let ok = PlanarDifferential::rational(Poly::constant(C64::one()), CPoly::from_pairs(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), Chart::Plane).unwrap();
        assert_eq!(ok.poles(), &[(C64::zero(), 2)]);
        assert!(PlanarDifferential::real_poly(&[0.0]).is_err());
    }

    #[test]
    fn distances() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        assert!((z.distance_to_zeros(c(2.0, 0.0)) - 4.0 * 2f64.sqrt() / 3.0).abs() < 1e-12);
        // q = z^k: d = 2/(k+2) |z|^{(k+2)/2}
        let z3 = PlanarDifferential::real_poly(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let w = c(-1.2, 0.9);
        let expect = 0.4 * w.norm().powf(2.5);
        assert!((z3.distance_to_zeros(w) - expect).abs() < 1e-11 * expect);
    }

    #[test]
    fn epsilon_examples() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let r = epsilon_bound_check(&z, &[c(2.0, 0.0), c(0.0, 0.0)]);
        let s = &r.samples[0];
        assert!((s.epsilon - 5.0 / 64.0).abs() < 1e-15);
        assert!(s.epsilon_ok && s.gradient_ok);
        assert!(r.samples[1].excluded);
        assert!(r.pass);
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let r = epsilon_bound_check(&one, &[c(0.0, 0.0), c(3.0, 1.0)]);
        assert!(r.samples.iter().all(|s| s.epsilon == 0.0) && r.pass);
        let q = PlanarDifferential::real_poly(&[-1.0, 0.0, 1.0]).unwrap();
        let r = epsilon_bound_check(&q, &[c(10.0, 0.0)]);
        assert!(r.pass);
    }

    #[test]
    fn scale_invariance_numeric() {
        let q = PlanarDifferential::real_poly(&[-1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = q.scaled(c(2.0, -3.0)).unwrap();
        let w = c(0.4, 1.7);
        assert!((q.beta(w) - s.beta(w)).norm() < 1e-12);
        assert!(q.exact_beta().same_function(&s.exact_beta()));
    }

    #[test]
    fn branch_consistent_around_zero() {
        // once around the simple zero of q = z flips the sign of the branch
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let pts: Vec<C64> = (0..=8).map(|k| C64::from_polar(1.0, std::f64::consts::PI * k as f64 / 4.0)).collect();
        let mut br = C64::one();
        for w in pts.windows(2) {
            br = z.segment_holonomy_branch(w[0], w[1], br).1;
        }
        assert!((br + C64::one()).norm() < 1e-12);
        let _ = QComplex::zero();
    }
}
