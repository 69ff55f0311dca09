use super::planar::PlanarDifferential;
use crate::hyp3::C64;
use serde::Serialize;

/// Both sides of the identity `∂̄B(σ,σ') = ¼(K_z σ² − K'_z σ'²)` at a point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HolomorphicCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub relative_error: f64,
}

type Eta<'a> = &'a dyn Fn(f64, f64) -> f64;

struct Fd<'a> {
    eta: Eta<'a>,
    h: f64,
}

impl Fd<'_> {
    // fourth-order central differences
    fn dx(&self, f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
        let h = self.h;
        (f(x - 2.0 * h, y) - 8.0 * f(x - h, y) + 8.0 * f(x + h, y) - f(x + 2.0 * h, y)) / (12.0 * h)
    }

    fn dy(&self, f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
        let h = self.h;
        (f(x, y - 2.0 * h) - 8.0 * f(x, y - h) + 8.0 * f(x, y + h) - f(x, y + 2.0 * h)) / (12.0 * h)
    }

    fn eta_z(&self, x: f64, y: f64) -> C64 {
        C64::new(0.5 * self.dx(self.eta, x, y), -0.5 * self.dy(self.eta, x, y))
    }

    fn second(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let e = self.eta;
        let h = self.h;
        let c = e(x, y);
        let xx = (-e(x - 2.0 * h, y) + 16.0 * e(x - h, y) - 30.0 * c + 16.0 * e(x + h, y) - e(x + 2.0 * h, y)) / (12.0 * h * h);
        let yy = (-e(x, y - 2.0 * h) + 16.0 * e(x, y - h) - 30.0 * c + 16.0 * e(x, y + h) - e(x, y + 2.0 * h)) / (12.0 * h * h);
        let ex = |xx: f64, yy: f64| self.dx(e, xx, yy);
        let xy = self.dy(&ex, x, y);
        (xx, yy, xy)
    }

    /// `η_zz − η_z²`.
    fn schwarzian_part(&self, x: f64, y: f64) -> C64 {
        let (xx, yy, xy) = self.second(x, y);
        let ezz = C64::new(0.25 * (xx - yy), -0.5 * xy);
        let ez = self.eta_z(x, y);
        ezz - ez * ez
    }

    fn curvature(&self, x: f64, y: f64) -> f64 {
        let (xx, yy, _) = self.second(x, y);
        -4.0 * (-2.0 * (self.eta)(x, y)).exp() * 0.25 * (xx + yy)
    }
}

fn dbar(f: &dyn Fn(f64, f64) -> C64, x: f64, y: f64, h: f64) -> C64 {
    let d = |g: &dyn Fn(f64) -> C64| (g(-2.0 * h) - g(-h) * 8.0 + g(h) * 8.0 - g(2.0 * h)) / (12.0 * h);
    let fx = d(&|s| f(x + s, y));
    let fy = d(&|s| f(x, y + s));
    (fx + C64::new(0.0, 1.0) * fy) * 0.5
}

fn dz_real(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> C64 {
    let d = |g: &dyn Fn(f64) -> f64| (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h);
    let fx = d(&|s| f(x + s, y));
    let fy = d(&|s| f(x, y + s));
    C64::new(0.5 * fx, -0.5 * fy)
}

/// Finite-difference check of the `∂̄` identity for the metric Schwarzian
/// of `σ = e^{η}|dz|` and `σ' = e^{η'}|dz|`.
pub fn holomorphic_identity_check(eta: Eta, eta_prime: Eta, z: C64) -> HolomorphicCheck {
    let inner = 2e-3;
    let outer = 1e-2;
    let s = Fd { eta, h: inner };
    let sp = Fd { eta: eta_prime, h: inner };
    let b = |x: f64, y: f64| sp.schwarzian_part(x, y) - s.schwarzian_part(x, y);
    let lhs = dbar(&b, z.re, z.im, outer);
    let k = |x: f64, y: f64| s.curvature(x, y);
    let kp = |x: f64, y: f64| sp.curvature(x, y);
    let kz = dz_real(&k, z.re, z.im, outer);
    let kpz = dz_real(&kp, z.re, z.im, outer);
    let rhs = (kz * (2.0 * eta(z.re, z.im)).exp() - kpz * (2.0 * eta_prime(z.re, z.im)).exp()) * 0.25;
    let relative_error = (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300);
    HolomorphicCheck { lhs, rhs, relative_error }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub a: C64,
    pub b: C64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub length_psi: f64,
    pub width_psi: f64,
    pub height_psi: f64,
    pub deviation: f64,
    pub bound: f64,
    pub standoff_ok: bool,
    pub distance_ratio_ok: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub delta: f64,
    pub hypothesis_ok: bool,
    pub injective: bool,
    pub entries: Vec<CompareEntry>,
    pub pass: bool,
}

/// Compares flat geometry of `φ` and `ψ` on the disk `|z − center| < radius`.
pub fn compare_differentials(phi: &PlanarDifferential, psi: &PlanarDifferential, center: C64, radius: f64) -> CompareReport {
    let n = 64;
    let step = 2.0 * radius / n as f64;
    let mut grid = vec![vec![None; n + 1]; n + 1];
    let mut rmax: f64 = 0.0;
    let mut min_phi = f64::INFINITY;
    let mut injective = true;
    let sc = psi.q(center).sqrt();
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let z = center + C64::new(-radius + step * i as f64, -radius + step * j as f64);
            if (z - center).norm() > radius {
                continue;
            }
            let p = phi.q(z);
            let r = (psi.q(z) - p).norm() / p.norm();
            rmax = rmax.max(r);
            min_phi = min_phi.min(p.norm().sqrt());
            let s = psi.q(z).sqrt();
            let s = if (s - sc).norm() <= (s + sc).norm() { s } else { -s };
            if (s / sc).re <= 0.0 {
                injective = false;
            }
            *cell = Some(r);
        }
    }
    // Lipschitz margin from neighbor differences
    let mut lip: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if let (Some(a), Some(b), Some(c)) = (grid[i][j], grid[i + 1][j], grid[i][j + 1]) {
                lip = lip.max((a - b).abs() / step).max((a - c).abs() / step);
            }
        }
    }
    let delta = rmax + 2.0 * lip * step;
    let hypothesis_ok = delta < 0.25;
    let mut entries = Vec::new();
    for k in 0..8 {
        let dir = C64::from_polar(1.0, std::f64::consts::PI * k as f64 / 8.0);
        let offset = C64::from_polar(0.1 * radius, 0.7 * k as f64);
        let mid = center + offset;
        let a = mid - dir * (0.3 * radius);
        let b = mid + dir * (0.3 * radius);
        let start = phi.q(a).sqrt();
        let hb = psi.segment_holonomy_branch(a, b, start).0;
        let ha = phi.segment_holonomy_branch(a, b, start).0;
        let (l, w, h) = (ha.norm(), ha.re.abs(), ha.im.abs());
        let (l2, w2, h2) = (hb.norm(), hb.re.abs(), hb.im.abs());
        let deviation = (l2 - l).abs().max((w2 - w).abs()).max((h2 - h).abs());
        let gap = radius - (a - center).norm().max((b - center).norm());
        let standoff_ok = gap * min_phi > 4.0 * delta * l;
        let distance_ratio_ok = l > 0.8 * l2;
        let bound = delta * l;
        entries.push(CompareEntry {
            a,
            b,
            length: l,
            width: w,
            height: h,
            length_psi: l2,
            width_psi: w2,
            height_psi: h2,
            deviation,
            bound,
            standoff_ok,
            distance_ratio_ok,
            ok: deviation <= bound && distance_ratio_ok,
        });
    }
    let pass = hypothesis_ok && injective && entries.iter().filter(|e| e.standoff_ok).all(|e| e.ok);
    CompareReport { delta, hypothesis_ok, injective, entries, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_near_a_zero() {
        // σ flat, σ' = (|z|^2 + 1/4)^{1/4}: a smoothing of |z|^{1/2}
        let eta = |_x: f64, _y: f64| 0.0;
        let eta_p = |x: f64, y: f64| 0.25 * (x * x + y * y + 0.25).ln();
        let r = holomorphic_identity_check(&eta, &eta_p, C64::new(0.3, 0.2));
        assert!(r.lhs.norm() > 1e-2);
        assert!(r.relative_error < 1e-6, "{r:?}");
    }

    #[test]
    fn identity_two_curved_metrics() {
        let eta = |x: f64, y: f64| 0.1 * x * x * y + 0.2 * y;
        let eta_p = |x: f64, y: f64| (1.0 + x * x + 2.0 * y * y).ln() * 0.5;
        let r = holomorphic_identity_check(&eta, &eta_p, C64::new(-0.4, 0.7));
        assert!(r.relative_error < 1e-6, "{r:?}");
    }

    #[test]
    fn compare_identical() {
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let r = compare_differentials(&one, &one, C64::new(3.0, 0.0), 1.0);
        assert_eq!(r.delta, 0.0);
        assert!(r.pass);
        assert!(r.entries.iter().all(|e| e.deviation == 0.0));
    }

    #[test]
    fn compare_linear_perturbation() {
        let one = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let psi = PlanarDifferential::real_poly(&[1.0, 0.1]).unwrap();
        let r = compare_differentials(&one, &psi, C64::new(1.5, 0.0), 0.5);
        assert!(r.hypothesis_ok && r.injective);
        assert!(r.delta >= 0.2 && r.delta < 0.25);
        assert!(r.pass, "{r:?}");
        let far = compare_differentials(&one, &psi, C64::new(3.0, 0.0), 1.0);
        assert!(!far.hypothesis_ok);
    }

    #[test]
    fn compare_on_annulus_region() {
        let z = PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap();
        let psi = PlanarDifferential::real_poly(&[0.01, 1.0]).unwrap();
        let r = compare_differentials(&z, &psi, C64::new(10.0, 0.0), 2.0);
        assert!(r.pass, "{r:?}");
    }
}
