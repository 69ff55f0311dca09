//! Epstein surfaces in hyperbolic 3-space.
//!
//! A conformal metric `e^η |dw|` on a domain of the sphere determines the
//! matrix-valued map `Ẽp(w) = [[1,w],[0,1]] [[1,0],[η_w,1]] diag(e^{-η/2}, e^{η/2})`
//! whose orbit of `P₀ = (0, 0, 2)` is the Epstein surface. For a quadratic
//! differential the metric is `√2 |q|^{1/2} |dz|` pushed forward by the
//! developing map.

mod checks;
mod mesh;

pub use checks::{
    collapse_report, contact_defect, fd_first_form, leaf_curvature, local_frames, pairwise_distances, CollapseKind, CollapseOptions,
    CollapseReport, FdForm, LeafCurvature, C0, D0,
};
pub use mesh::{
    bubble_slope, epstein_mesh, hexagon_report, hexagon_sides, write_curves_csv, write_ply, BubbleReport, EpsteinMesh,
    Grid, HexagonReport, MeshOptions, MeshVertex, Model,
};

use crate::develop::DevelopingJet;
use crate::error::{Error, Result};
use crate::hyp3::{h3_distance, H3Point, Ideal, Moebius, ScaledMoebius, C64};
use crate::qdiff::PlanarDifferential;
use serde::{Deserialize, Serialize};

/// Curvatures below this are treated as zero when inverting.
const FLAT_CURVATURE: f64 = 1e-10;
/// Relative gap `||φ̂| − |φ||` below which the surface counts as folded.
const IMMERSION_TOL: f64 = 1e-14;

/// The base point `(0, 0, 2)`.
pub fn p0() -> H3Point {
    H3Point::vertical(2.0)
}

/// Log-density of a conformal metric `e^η |dw|` and its derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricJet {
    pub eta: f64,
    pub eta_w: C64,
    pub eta_ww: C64,
    pub eta_wwbar: f64,
}

impl MetricJet {
    pub fn new(eta: f64, eta_w: C64, eta_ww: C64, eta_wwbar: f64) -> Result<Self> {
        let j = MetricJet { eta, eta_w, eta_ww, eta_wwbar };
        if eta == f64::NEG_INFINITY {
            return Err(Error::MetricZero("log-density is -inf".into()));
        }
        if !eta.is_finite() || !eta_w.is_finite() || !eta_ww.is_finite() || !eta_wwbar.is_finite() {
            return Err(Error::InvalidMetric(format!("{j:?}")));
        }
        Ok(j)
    }

    pub fn euclidean() -> Self {
        MetricJet { eta: 0.0, eta_w: C64::new(0.0, 0.0), eta_ww: C64::new(0.0, 0.0), eta_wwbar: 0.0 }
    }

    /// Gaussian curvature `-4 e^{-2η} η_{ww̄}`.
    pub fn curvature(&self) -> f64 {
        -4.0 * (-2.0 * self.eta).exp() * self.eta_wwbar
    }

    /// The metric `e^t σ`.
    pub fn shifted(&self, t: f64) -> Self {
        MetricJet { eta: self.eta + t, ..*self }
    }

    /// Jet of `√2 |q|^{1/2} |dz|`.
    pub fn flat(diff: &PlanarDifferential, z: C64) -> Result<Self> {
        let j = diff.jet(z);
        if j.q.norm() == 0.0 {
            return Err(Error::MetricZero(format!("{z}")));
        }
        let eta = 0.5 * std::f64::consts::LN_2 + 0.5 * j.q.norm().ln();
        let eta_w = j.dq / (j.q * 4.0);
        let eta_ww = (j.ddq * j.q - j.dq * j.dq) / (j.q * j.q * 4.0);
        MetricJet::new(eta, eta_w, eta_ww, 0.0)
    }
}

/// The Epstein map at a point: the matrix `Ẽp`, its orbit point and the
/// boundary point it lies over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsteinFrame {
    pub point: H3Point,
    pub ideal: Ideal,
    pub transport: ScaledMoebius,
}

impl EpsteinFrame {
    fn from_transport(transport: ScaledMoebius, ideal: Ideal) -> Self {
        EpsteinFrame { point: transport.orbit_of_vertical(2.0), ideal, transport }
    }

    fn representable(&self) -> bool {
        self.point.t.is_finite() && self.point.t > 1e-250 && self.point.t < 1e250 && self.point.z.is_finite()
    }

    /// Hyperbolic distance between two surface points, falling back to the
    /// matrices when the points leave the floating range.
    pub fn distance(&self, other: &EpsteinFrame) -> f64 {
        if self.representable() && other.representable() {
            h3_distance(&self.point, &other.point)
        } else {
            let base = ScaledMoebius::from(Moebius::frame_at(&p0()));
            (base.inverse() * self.transport.inverse() * other.transport * base).displacement(&H3Point::vertical(1.0))
        }
    }

    /// The point at signed distance `t` along the normal geodesic, towards the
    /// boundary for `t > 0`.
    pub fn normal_flow(&self, t: f64) -> H3Point {
        self.transport.orbit_of_vertical(2.0 * (-t).exp())
    }
}

/// `Ẽp(w)` for a metric jet at `w`.
pub fn epstein_point(w: C64, jet: &MetricJet) -> Result<EpsteinFrame> {
    let jet = MetricJet::new(jet.eta, jet.eta_w, jet.eta_ww, jet.eta_wwbar)?;
    let one = C64::new(1.0, 0.0);
    let lo = (-0.5 * jet.eta).exp();
    let hi = (0.5 * jet.eta).exp();
    let a = jet.eta_w;
    let m = Moebius { a: (one + w * a) * lo, b: w * hi, c: a * lo, d: one * hi };
    Ok(EpsteinFrame::from_transport(m.into(), Ideal::Finite(w)))
}

/// The Epstein–Schwarz map at `z`, given the developing jet continued to `z`.
///
/// Uses `Ẽp = Yᵀ [[−η_z, 1], [−1, 0]] diag(e^{−η/2}, e^{η/2}) diag(p, p̄)` with `Y`
/// the normalized solution matrix and `p = u₂/|u₂|`, which avoids dividing by
/// `f'` and stays finite when `f(z) = ∞`.
pub fn epstein_schwarz(diff: &PlanarDifferential, z: C64, jet: &DevelopingJet) -> Result<EpsteinFrame> {
    if (jet.base - z).norm() > 1e-9 * (1.0 + z.norm()) {
        return Err(Error::InvalidInput(format!("jet based at {} evaluated at {z}", jet.base)));
    }
    let mj = MetricJet::flat(diff, z)?;
    let y = jet.solutions.m;
    let lo = (-0.5 * mj.eta).exp();
    let hi = (0.5 * mj.eta).exp();
    let p = if y.b.norm() == 0.0 { C64::new(1.0, 0.0) } else { y.b / y.b.norm() };
    let ez = mj.eta_w;
    let n = Moebius {
        a: -(ez * y.a + y.c) * lo * p,
        b: y.a * hi * p.conj(),
        c: -(ez * y.b + y.d) * lo * p,
        d: y.b * hi * p.conj(),
    };
    if !(n.a.is_finite() && n.b.is_finite() && n.c.is_finite() && n.d.is_finite()) {
        return Err(Error::DegenerateJet);
    }
    let transport = ScaledMoebius { m: n, log_scale: jet.solutions.log_scale };
    Ok(EpsteinFrame::from_transport(transport, jet.f))
}

/// First and second fundamental forms `A|ξ|² + Re(B ξ²)` of an Epstein
/// surface, with speeds and curvatures along the horizontal and vertical directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormsAtPoint {
    pub first11: f64,
    pub first20: C64,
    pub second11: f64,
    pub second20: C64,
    pub n_h: f64,
    pub n_v: f64,
    pub kappa_h: f64,
    pub kappa_v: f64,
    /// `|β/φ|`, when the forms come from a differential.
    pub epsilon: Option<f64>,
    pub immersed: bool,
    /// Unit horizontal direction in the `z` chart.
    pub horizontal: C64,
    /// Speed bounds `n_h < ε` and `1 < n_v < 1 + ε`, evaluated when `ε < 3/4`.
    pub speed_bounds_ok: Option<bool>,
}

impl FormsAtPoint {
    pub fn first(&self, xi: C64) -> f64 {
        self.first11 * xi.norm_sqr() + (self.first20 * xi * xi).re
    }

    pub fn second(&self, xi: C64) -> f64 {
        self.second11 * xi.norm_sqr() + (self.second20 * xi * xi).re
    }

    /// Principal curvatures and directions from `det(II − κ I) = 0`, sorted by
    /// increasing `|κ|`.
    pub fn principal(&self) -> Option<[(f64, C64); 2]> {
        let q = sym(self.first11, self.first20);
        let p = sym(self.second11, self.second20);
        let det_q = q[0] * q[2] - q[1] * q[1];
        if det_q <= 0.0 {
            return None;
        }
        let b = p[0] * q[2] + p[2] * q[0] - 2.0 * p[1] * q[1];
        let c = p[0] * p[2] - p[1] * p[1];
        let disc = (b * b - 4.0 * det_q * c).max(0.0).sqrt();
        let big = (b + disc.copysign(b)) / (2.0 * det_q);
        let small = if big == 0.0 { 0.0 } else { c / (det_q * big) };
        let ks = [small, big];
        let dir = |k: f64| {
            let r0 = [p[0] - k * q[0], p[1] - k * q[1]];
            let r1 = [p[1] - k * q[1], p[2] - k * q[2]];
            let r = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
            let v = C64::new(-r[1], r[0]);
            if v.norm() == 0.0 {
                // umbilic: every direction is principal; use the eigenvectors of I
                let a = C64::new(self.first20.re, -self.first20.im);
                C64::from_polar(1.0, 0.5 * a.arg())
            } else {
                v / v.norm()
            }
        };
        Some([(ks[0], dir(ks[0])), (ks[1], dir(ks[1]))])
    }
}

/// Real symmetric matrix `[m11, m12, m22]` of `A|ξ|² + Re(B ξ²)`.
fn sym(a: f64, b: C64) -> [f64; 3] {
    [a + b.re, -b.im, a - b.re]
}

fn invert_curvature(k: f64) -> f64 {
    if k.abs() < FLAT_CURVATURE {
        f64::INFINITY
    } else {
        1.0 / k
    }
}

/// Fundamental forms of the Epstein surface of a metric with jet `jet` whose
/// Schwarzian against the round metric is `b dw²`.
pub fn general_fundamental_forms(jet: &MetricJet, b: C64) -> FormsAtPoint {
    let k = jet.curvature();
    let e2 = (2.0 * jet.eta).exp();
    let bb = b.norm_sqr();
    let first20 = b * (2.0 * (1.0 - k));
    let first11 = 4.0 * bb / e2 + 0.25 * (1.0 - k) * (1.0 - k) * e2;
    let second20 = b * (-2.0 * k);
    let second11 = 4.0 * bb / e2 - 0.25 * (1.0 - k * k) * e2;
    let (horizontal, scale) = if b.norm() == 0.0 {
        (C64::new(1.0, 0.0), (-jet.eta).exp())
    } else {
        (C64::from_polar(1.0, 0.5 * (-b.conj()).arg()), 0.5 / b.norm().sqrt())
    };
    // along the horizontal and vertical directions both forms factor through
    // x = 2|B|e^{-η} and y = e^{η}/2
    let x = 2.0 * b.norm() * (-jet.eta).exp();
    let y = 0.5 * jet.eta.exp();
    let (lh, lv) = (x - (1.0 - k) * y, x + (1.0 - k) * y);
    let kappa_v = (x - (1.0 + k) * y) / lv;
    let kappa_h = invert_curvature(lh / (x + (1.0 + k) * y));
    FormsAtPoint {
        first11,
        first20,
        second11,
        second20,
        n_h: lh.abs() * scale,
        n_v: lv.abs() * scale,
        kappa_h,
        kappa_v,
        epsilon: None,
        immersed: lh.abs() > IMMERSION_TOL * lv.abs(),
        horizontal,
        speed_bounds_ok: None,
    }
}

/// Fundamental forms of the Epstein–Schwarz surface of `q dz²` at `z`.
pub fn epstein_forms(diff: &PlanarDifferential, z: C64) -> Result<FormsAtPoint> {
    let phi = diff.q(z);
    if phi.norm() == 0.0 {
        return Err(Error::MetricZero(format!("{z}")));
    }
    let hat = diff.phi_hat(z);
    if !hat.is_finite() {
        return Err(Error::InvalidInput(format!("corrected differential is singular at {z}")));
    }
    let (a, h) = (phi.norm(), hat.norm());
    let first11 = (h * h + a * a) / (2.0 * a);
    let second11 = (h * h - a * a) / (2.0 * a);
    let immersed = (h - a).abs() > IMMERSION_TOL * (h + a);
    let kappa_v = (h - a) / (h + a);
    let kappa_h = if immersed { invert_curvature(kappa_v) } else { f64::INFINITY };
    let root = (a * h).sqrt();
    let (n_h, n_v) = if h == 0.0 { ((0.5 * a).sqrt(), (0.5 * a).sqrt()) } else { ((h - a).abs() / (2.0 * root), (h + a) / (2.0 * root)) };
    let horizontal = if h == 0.0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, -0.5 * hat.arg()) };
    let epsilon = diff.epsilon(z);
    let speed_bounds_ok = (epsilon < 0.75).then(|| n_h < epsilon.max(f64::MIN_POSITIVE) + 1e-15 && n_v >= 1.0 && n_v < 1.0 + epsilon + 1e-15);
    Ok(FormsAtPoint {
        first11,
        first20: -hat,
        second11,
        second20: C64::new(0.0, 0.0),
        n_h,
        n_v,
        kappa_h,
        kappa_v,
        epsilon: Some(epsilon),
        immersed,
        horizontal,
        speed_bounds_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::develop::{continue_jet, Path};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn euclidean_metric_is_translation() {
        for w in [c(0.0, 0.0), c(1.5, -2.0), c(-3.0, 0.25)] {
            let fr = epstein_point(w, &MetricJet::euclidean()).unwrap();
            assert!((fr.point.z - w).norm() < 1e-14);
            assert!((fr.point.t - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn logarithmic_metric_lands_on_axis() {
        // |dw|/|w|: η = −log|w|, η_w = −1/(2w)
        let jet_at = |w: C64| MetricJet::new(-w.norm().ln(), -(w * 2.0).inv(), (w * w * 2.0).inv(), 0.0).unwrap();
        let fr = epstein_point(c(1.0, 0.0), &jet_at(c(1.0, 0.0))).unwrap();
        assert!(fr.point.z.norm() < 1e-14 && (fr.point.t - 1.0).abs() < 1e-14);
        for s in [0.5f64, 2.0, 5.0] {
            for th in [0.0, 1.0, 2.5] {
                let w = C64::from_polar((-s).exp(), th);
                let fr = epstein_point(w, &jet_at(w)).unwrap();
                assert!(fr.point.z.norm() < 1e-12 * (-s).exp());
                assert!((fr.point.t / (-s).exp() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metric_zero_is_an_error() {
        let j = MetricJet { eta: f64::NEG_INFINITY, ..MetricJet::euclidean() };
        assert!(matches!(epstein_point(c(0.0, 0.0), &j), Err(Error::MetricZero(_))));
    }

    #[test]
    fn schwarz_formula_matches_pushed_forward_metric() {
        // the overflow-free product against epstein_point with the pushed-forward jet
        let diff = PlanarDifferential::real_poly(&[-1.0, 0.5, 1.0]).unwrap();
        let base = c(2.0, 1.0);
        let start = DevelopingJet::standard(base);
        for w in [c(2.3, 1.4), c(3.0, -0.5), c(1.2, 2.0)] {
            let jet = continue_jet(&diff, &Path::open(base, vec![w]), &start, 1e-12).unwrap();
            let es = epstein_schwarz(&diff, w, &jet).unwrap();
            let mj = MetricJet::flat(&diff, w).unwrap();
            let f = match jet.f {
                Ideal::Finite(f) => f,
                Ideal::Infinity => unreachable!(),
            };
            let fp = jet.fprime;
            let pushed = MetricJet::new(
                mj.eta - fp.norm().ln(),
                (mj.eta_w - jet.log_derivative_ratio * 0.5) / fp,
                c(0.0, 0.0),
                0.0,
            )
            .unwrap();
            let ep = epstein_point(f, &pushed).unwrap();
            assert!(h3_distance(&es.point, &ep.point) < 1e-9, "{:?} {:?}", es.point, ep.point);
            assert!(es.transport.m.det_defect() < 1e-9 || es.transport.log_scale != 0.0);
        }
    }

    #[test]
    fn constant_differential_is_a_geodesic() {
        // f = e^{i√2 z}: the image lies on the axis (0, ∞)
        let diff = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let k = std::f64::consts::SQRT_2;
        let start = DevelopingJet::from_jet(c(0.0, 0.0), c(1.0, 0.0), c(0.0, k), c(0.0, k)).unwrap();
        let ep0 = epstein_schwarz(&diff, c(0.0, 0.0), &start).unwrap();
        for z in [c(0.7, 0.0), c(0.0, 1.0), c(-1.3, 2.0), c(0.4, -3.0)] {
            let jet = continue_jet(&diff, &Path::open(c(0.0, 0.0), vec![z]), &start, 1e-13).unwrap();
            let ep = epstein_schwarz(&diff, z, &jet).unwrap();
            assert!(ep.point.z.norm() < 1e-10 * ep.point.t);
            assert!(((ep.point.t).ln() + k * z.im).abs() < 1e-9);
            assert!((ep.distance(&ep0) - k * z.im.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn forms_of_z_at_two() {
        let diff = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let f = epstein_forms(&diff, c(2.0, 0.0)).unwrap();
        assert!((diff.phi_hat(c(2.0, 0.0)) - c(69.0 / 32.0, 0.0)).norm() < 1e-15);
        assert!((f.kappa_v - 5.0 / 133.0).abs() < 1e-15);
        assert!((f.kappa_h - 133.0 / 5.0).abs() < 1e-12);
        assert!((f.kappa_h * f.kappa_v - 1.0).abs() < 1e-14);
        assert!((f.epsilon.unwrap() - 5.0 / 64.0).abs() < 1e-15);
        assert!(f.kappa_v <= f.epsilon.unwrap());
        assert!((f.n_v * f.n_v - 1.0 - f.n_h * f.n_h).abs() < 1e-14);
        assert_eq!(f.speed_bounds_ok, Some(true));
        assert!(f.immersed);
    }

    #[test]
    fn constant_differential_is_not_immersed() {
        let diff = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let f = epstein_forms(&diff, c(0.3, -0.2)).unwrap();
        assert!(!f.immersed);
        assert!(f.kappa_h.is_infinite());
        assert_eq!(f.kappa_v, 0.0);
        assert!((f.first(c(1.0, 0.0))).abs() < 1e-15);
        assert!((f.first(c(0.0, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn general_forms_trivial_cases() {
        let e = MetricJet { eta: 0.3, ..MetricJet::euclidean() };
        let f = general_fundamental_forms(&e, c(0.0, 0.0));
        let s2 = (0.6f64).exp();
        assert!((f.first11 - 0.25 * s2).abs() < 1e-15 && f.first20.norm() == 0.0);
        assert!((f.second11 + 0.25 * s2).abs() < 1e-15 && f.second20.norm() == 0.0);
        // round metric: η_{ww̄} = −e^{2η}/4
        let sphere = MetricJet { eta: 0.3, eta_wwbar: -0.25 * s2, ..MetricJet::euclidean() };
        assert!((sphere.curvature() - 1.0).abs() < 1e-15);
        let f = general_fundamental_forms(&sphere, c(0.0, 0.0));
        assert!(f.second11.abs() < 1e-15 && f.second20.norm() == 0.0);
    }

    fn assert_same(a: &FormsAtPoint, b: &FormsAtPoint, tol: f64) {
        let scale = a.first11.abs().max(1.0);
        assert!((a.first11 - b.first11).abs() < tol * scale, "{a:?} {b:?}");
        assert!((a.first20 - b.first20).norm() < tol * scale);
        assert!((a.second11 - b.second11).abs() < tol * scale);
        assert!((a.second20 - b.second20).norm() < tol * scale);
        assert!((a.n_h - b.n_h).abs() < tol * a.n_v.max(1.0));
        assert!((a.n_v - b.n_v).abs() < tol * a.n_v.max(1.0));
        assert!((a.kappa_v - b.kappa_v).abs() < tol);
        assert_eq!(a.immersed, b.immersed);
        if a.kappa_h.is_finite() && a.kappa_h.abs() < 1e6 {
            assert!((a.kappa_h - b.kappa_h).abs() < tol * a.kappa_h.abs().max(1.0).powi(2), "{} {} {}", a.kappa_h, b.kappa_h, a.kappa_v);
        }
        let turn = (a.horizontal / b.horizontal).arg();
        assert!(turn.abs() < 1e-9 || (turn.abs() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn two_code_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for coeffs in [vec![1.0], vec![0.0, 1.0], vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 0.0, 1.0]] {
            let diff = PlanarDifferential::real_poly(&coeffs).unwrap();
            let mut n = 0;
            while n < 1000 {
                let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                if diff.euclid_standoff(z) < 0.2 || diff.phi_hat(z).norm() < 1e-3 {
                    continue;
                }
                n += 1;
                let es = epstein_forms(&diff, z).unwrap();
                let gen = general_fundamental_forms(&MetricJet::flat(&diff, z).unwrap(), -diff.phi_hat(z) * 0.5);
                assert_same(&es, &gen, 1e-12);
            }
        }
    }

    #[test]
    fn principal_curvatures_and_directions() {
        let diff = PlanarDifferential::real_poly(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if diff.euclid_standoff(z) < 0.3 || diff.phi_hat(z).norm() < 1e-2 {
                continue;
            }
            let f = epstein_forms(&diff, z).unwrap();
            if !f.immersed {
                continue;
            }
            assert!((f.kappa_h * f.kappa_v - 1.0).abs() < 1e-8);
            let [(kv, dv), (kh, dh)] = f.principal().unwrap();
            assert!((kv - f.kappa_v).abs() < 1e-10 * kv.abs().max(1.0));
            // the generalized eigenproblem loses ~|κ_v|⁻² digits near the degenerate locus
            assert!((kh - f.kappa_h).abs() < (1e-8 + 1e-15 / (kv * kv)) * kh.abs().max(1.0), "{kh} {} {kv} {z}", f.kappa_h);
            // vertical direction of φ̂: φ̂ ξ² < 0
            let hat = diff.phi_hat(z);
            let v = C64::new(0.0, 1.0) / hat.sqrt();
            let v = v / v.norm();
            let angle = |a: C64, b: C64| {
                let t = (a / b).arg().abs();
                t.min(std::f64::consts::PI - t)
            };
            if (f.kappa_h - f.kappa_v).abs() > 1e-6 {
                assert!(angle(dv, v) < 1e-6, "{dv} {v}");
                assert!(angle(dh, v * C64::new(0.0, 1.0)) < 1e-6);
            }
        }
    }

    #[test]
    fn normal_flow_matches_shifted_metric() {
        let jet = MetricJet::new(0.4, c(0.3, -0.7), c(0.1, 0.2), -0.05).unwrap();
        let w = c(0.5, 1.5);
        let fr = epstein_point(w, &jet).unwrap();
        for t in [-0.1, 0.1] {
            let shifted = epstein_point(w, &jet.shifted(t)).unwrap();
            let flowed = fr.normal_flow(t);
            assert!(h3_distance(&shifted.point, &flowed) < 1e-12);
            assert!((h3_distance(&fr.point, &flowed) - t.abs()).abs() < 1e-12);
        }
    }
}
