use super::{epstein_forms, epstein_schwarz, EpsteinFrame};
use crate::develop::{continue_jet, DevelopingJet, Path};
use crate::error::{Error, Result};
use crate::hyp3::{H3Point, Moebius, C64};
use crate::qdiff::{trace_leaf, LeafOptions, PlanarDifferential};
use serde::Serialize;

/// Standoff below which the collapse estimates are not claimed.
pub const D0: f64 = 4.0;
/// Constant in the `C₀/d²` collapse estimates.
pub const C0: f64 = 18.0;

const TOL: f64 = 1e-13;

/// Epstein–Schwarz frames at `pts`, continuing the standard jet at `base`
/// along the polyline `base -> pts[0] -> pts[1] -> ...`.
pub fn local_frames(diff: &PlanarDifferential, base: C64, pts: &[C64], tol: f64) -> Result<Vec<EpsteinFrame>> {
    let mut jet = DevelopingJet::standard(base);
    let mut out = Vec::with_capacity(pts.len());
    for &z in pts {
        if z != jet.base {
            jet = continue_jet(diff, &Path::open(jet.base, vec![z]), &jet, tol)?;
        }
        out.push(epstein_schwarz(diff, z, &jet)?);
    }
    Ok(out)
}

/// Image distances `d[i][j - i - 1]` for `i < j`, each row measured in the
/// chart of the standard jet at `pts[i]`.
///
/// A single chart loses the subdominant solution far from its base, so points
/// that are close to each other but far from the base are not resolved.
pub fn pairwise_distances(diff: &PlanarDifferential, pts: &[C64], tol: f64) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let frames = local_frames(diff, pts[i], &pts[i..], tol)?;
        out.push(frames[1..].iter().map(|f| frames[0].distance(f)).collect());
    }
    Ok(out)
}

/// Frame at `z + w`, continued straight from the standard jet at `z`.
fn offset_frame(diff: &PlanarDifferential, z: C64, w: C64) -> Result<EpsteinFrame> {
    let jet = continue_jet(diff, &Path::open(z, vec![z + w]), &DevelopingJet::standard(z), TOL)?;
    epstein_schwarz(diff, z + w, &jet)
}

fn default_step(diff: &PlanarDifferential, z: C64) -> f64 {
    0.01 * diff.euclid_standoff(z).min(1.0) / diff.q(z).norm().sqrt().max(1.0)
}

/// First fundamental form measured by central differences of image distances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdForm {
    pub first11: f64,
    pub first20: C64,
    pub closed11: f64,
    pub closed20: C64,
    /// `|fd − closed| / |closed|` over the three real components.
    pub relative_error: f64,
}

/// Speed in direction `xi`: chord speeds at steps `h` and `h/2`, Richardson-extrapolated.
fn fd_speed(diff: &PlanarDifferential, z: C64, xi: C64, h: f64) -> Result<f64> {
    let chord = |s: f64| -> Result<f64> {
        let a = offset_frame(diff, z, -xi * s)?;
        let b = offset_frame(diff, z, xi * s)?;
        Ok(a.distance(&b) / (2.0 * s))
    };
    let d1 = chord(h)?;
    let d2 = chord(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Finite-difference first fundamental form at `z`; `h` defaults to a
/// hundredth of the distance to the nearest singular point, capped at 0.01
/// and shrunk by `|q|^{1/2}` where `|q| > 1`.
pub fn fd_first_form(diff: &PlanarDifferential, z: C64, h: Option<f64>) -> Result<FdForm> {
    let h = h.unwrap_or_else(|| default_step(diff, z));
    let closed = epstein_forms(diff, z)?;
    let i1 = fd_speed(diff, z, C64::new(1.0, 0.0), h)?.powi(2);
    let ii = fd_speed(diff, z, C64::new(0.0, 1.0), h)?.powi(2);
    let id = fd_speed(diff, z, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4), h)?.powi(2);
    let a = 0.5 * (i1 + ii);
    let first20 = C64::new(0.5 * (i1 - ii), a - id);
    let err = ((a - closed.first11).powi(2) + (first20 - closed.first20).norm_sqr()).sqrt();
    let size = (closed.first11.powi(2) + closed.first20.norm_sqr()).sqrt();
    Ok(FdForm {
        first11: a,
        first20,
        closed11: closed.first11,
        closed20: closed.first20,
        relative_error: err / size,
    })
}

/// `|Re (Ẽp⁻¹ dẼp)₁₁|` relative to the size of `Ẽp⁻¹ dẼp`, by central
/// differences in the two coordinate directions.
pub fn contact_defect(diff: &PlanarDifferential, z: C64, h: Option<f64>) -> Result<f64> {
    let h = h.unwrap_or_else(|| default_step(diff, z));
    let plain = |f: &EpsteinFrame| -> Result<Moebius> {
        f.transport.to_moebius().ok_or_else(|| Error::InvalidMatrix("frame overflows".into()))
    };
    let m = plain(&offset_frame(diff, z, C64::new(0.0, 0.0))?)?;
    let minv = m.inverse();
    let mut worst: f64 = 0.0;
    for xi in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
        let p = plain(&offset_frame(diff, z, xi * h)?)?;
        let n = plain(&offset_frame(diff, z, -xi * h)?)?;
        let p2 = plain(&offset_frame(diff, z, xi * (2.0 * h))?)?;
        let n2 = plain(&offset_frame(diff, z, -xi * (2.0 * h))?)?;
        // fourth-order central difference
        let (d1, d2) = (p - n, p2 - n2);
        let fd = |a: C64, b: C64| (a * 8.0 - b) / (12.0 * h);
        let d = Moebius { a: fd(d1.a, d2.a), b: fd(d1.b, d2.b), c: fd(d1.c, d2.c), d: fd(d1.d, d2.d) };
        let x = minv * d;
        let size = [x.a, x.b, x.c, x.d].iter().map(|v| v.norm()).fold(1.0, f64::max);
        worst = worst.max(x.a.re.abs() / size);
    }
    Ok(worst)
}

/// Geodesic curvature of the image of a vertical leaf of the corrected
/// differential, with the bound `12/d²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LeafCurvature {
    pub k: f64,
    pub bound: f64,
    pub distance: f64,
    pub hypothesis_ok: bool,
    pub pass: bool,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Curvature in the upper half-space metric of a curve with Euclidean
/// derivatives `x1`, `x2` at a point of height `t`.
pub(crate) fn h3_curvature(t: f64, x1: [f64; 3], x2: [f64; 3]) -> f64 {
    let s = norm(x1);
    let tan = [x1[0] / s, x1[1] / s, x1[2] / s];
    let along = dot(x2, tan);
    let kn = [(x2[0] - along * tan[0]) / (s * s), (x2[1] - along * tan[1]) / (s * s), (x2[2] - along * tan[2]) / (s * s)];
    let e3 = [0.0, 0.0, 1.0];
    let up = sub(e3, [tan[0] * tan[2], tan[1] * tan[2], tan[2] * tan[2]]);
    norm([t * kn[0] + up[0], t * kn[1] + up[1], t * kn[2] + up[2]])
}

/// Curvature at `z` of the image of the vertical leaf of `φ̂` through `z`,
/// from five-point stencils with spacings `h` and `h/2` in `|φ̂|^{1/2}`
/// arclength, Richardson-extrapolated.
pub fn leaf_curvature(diff: &PlanarDifferential, z: C64, h: Option<f64>) -> Result<LeafCurvature> {
    let h = h.unwrap_or(0.02);
    let field = |w: C64| diff.phi_hat_jet(w);
    let opts = LeafOptions { angle: std::f64::consts::FRAC_PI_2, length: 2.0 * h, spacing: 0.5 * h, tol: TOL };
    let fwd = trace_leaf(field, z, None, &opts, |_| false)?;
    let branch = diff.phi_hat(z).sqrt();
    let bwd = trace_leaf(field, z, Some(branch), &LeafOptions { length: -2.0 * h, ..opts }, |_| false)?;
    if fwd.points.len() != 5 || bwd.points.len() != 5 {
        return Err(Error::InvalidInput("leaf sampling failed".into()));
    }
    // x[k] at arclength (k − 4) h/2
    let mut x = [[0.0; 3]; 9];
    for k in 0..9 {
        let w = if k < 4 { bwd.points[4 - k].1 } else { fwd.points[k - 4].1 };
        x[k] = offset_frame(diff, z, w - z)?.point.coords();
    }
    let stencil = |step: usize, hh: f64| {
        let p = |j: i32| x[(4 + j * step as i32) as usize];
        let mut d1 = [0.0; 3];
        let mut d2 = [0.0; 3];
        for i in 0..3 {
            d1[i] = (-p(2)[i] + 8.0 * p(1)[i] - 8.0 * p(-1)[i] + p(-2)[i]) / (12.0 * hh);
            d2[i] = (-p(2)[i] + 16.0 * p(1)[i] - 30.0 * p(0)[i] + 16.0 * p(-1)[i] - p(-2)[i]) / (12.0 * hh * hh);
        }
        (d1, d2)
    };
    let (c1, c2) = stencil(2, h);
    let (f1, f2) = stencil(1, 0.5 * h);
    let mut x1 = [0.0; 3];
    let mut x2 = [0.0; 3];
    for i in 0..3 {
        x1[i] = (16.0 * f1[i] - c1[i]) / 15.0;
        x2[i] = (16.0 * f2[i] - c2[i]) / 15.0;
    }
    let k = h3_curvature(x[4][2], x1, x2);
    let distance = diff.distance_to_zeros(z);
    let bound = 12.0 / (distance * distance);
    let hypothesis_ok = distance > 2.0 * 3f64.sqrt();
    Ok(LeafCurvature { k, bound, distance, hypothesis_ok, pass: hypothesis_ok && k < bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CollapseKind {
    /// Horizontal leaf of `φ̂`.
    Horizontal,
    /// Vertical leaf of `φ̂`.
    Vertical,
    /// Straight segment to `end`, compared with its height.
    General { end: C64 },
}

#[derive(Debug, Clone, Copy)]
pub struct CollapseOptions {
    /// Leaf length in `|φ̂|^{1/2}|dz|`; ignored for general segments.
    pub length: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions { length: 1.0, samples: 64, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub kind: CollapseKind,
    /// Length of the sampled path in `|q|^{1/2}|dz|`.
    pub flat_length: f64,
    /// Flat standoff `d` from the zeros, minimized along the path.
    pub standoff: f64,
    pub image_length: f64,
    pub diameter: f64,
    pub endpoint_distance: f64,
    /// Height and width `√2|Im ζ|`, `√2|Re ζ|` of a general segment.
    pub height: f64,
    pub width: f64,
    /// Deviation from the ideal behaviour: the collapse ratio for horizontal
    /// leaves, the relative stretch error otherwise.
    pub factor: f64,
    pub lower: f64,
    pub upper: f64,
    pub hypothesis_ok: bool,
    pub pass: bool,
    pub points: Vec<(f64, H3Point)>,
}

/// Measures the image of a leaf or segment starting at `start` against the
/// `C₀/d²` estimates.
pub fn collapse_report(diff: &PlanarDifferential, start: C64, kind: CollapseKind, opts: &CollapseOptions) -> Result<CollapseReport> {
    let n = opts.samples.max(2);
    let path: Vec<(f64, C64)> = match kind {
        CollapseKind::Horizontal | CollapseKind::Vertical => {
            let angle = if kind == CollapseKind::Horizontal { 0.0 } else { std::f64::consts::FRAC_PI_2 };
            let lo = LeafOptions { angle, length: opts.length, spacing: opts.length.abs() / n as f64, tol: TOL };
            let tr = trace_leaf(|w| diff.phi_hat_jet(w), start, None, &lo, |_| false)?;
            tr.points
        }
        CollapseKind::General { end } => (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                (s, start + (end - start) * s)
            })
            .collect(),
    };
    let pts: Vec<C64> = path.iter().map(|p| p.1).collect();
    let frames = local_frames(diff, start, &pts, opts.tol)?;
    let flat_length: f64 = pts.windows(2).map(|w| diff.segment_length(w[0], w[1])).sum();
    let standoff = pts.iter().map(|&z| diff.distance_to_zeros(z)).fold(f64::INFINITY, f64::min);
    let dist = pairwise_distances(diff, &pts, opts.tol)?;
    let image_length: f64 = dist.iter().filter_map(|row| row.first()).sum();
    let diameter = dist.iter().flatten().copied().fold(0.0, f64::max);
    let endpoint_distance = dist[0].last().copied().unwrap_or(0.0);
    let c = if standoff.is_finite() { C0 / (standoff * standoff) } else { 0.0 };
    let scaled = std::f64::consts::SQRT_2 * flat_length;
    let slack = 1e-9 * (1.0 + scaled);
    let (mut height, mut width) = (0.0, 0.0);
    let (factor, lower, upper, ok) = match kind {
        CollapseKind::Horizontal => {
            let upper = c * scaled;
            (diameter / scaled, 0.0, upper, diameter <= upper + slack)
        }
        CollapseKind::Vertical => {
            let (lower, upper) = ((1.0 - c) * scaled, (1.0 + c) * scaled);
            (
                (endpoint_distance / scaled - 1.0).abs(),
                lower,
                upper,
                endpoint_distance >= lower - slack && endpoint_distance <= upper + slack,
            )
        }
        CollapseKind::General { end } => {
            let zeta = diff.segment_holonomy(start, end, None)?;
            height = std::f64::consts::SQRT_2 * zeta.im.abs();
            width = std::f64::consts::SQRT_2 * zeta.re.abs();
            let lower = (1.0 - c) * height - c * width;
            let upper = (1.0 + c) * height + c * width;
            (
                (endpoint_distance - height).abs() / (height + width),
                lower,
                upper,
                endpoint_distance >= lower - slack && endpoint_distance <= upper + slack,
            )
        }
    };
    let hypothesis_ok = standoff > D0;
    Ok(CollapseReport {
        kind,
        flat_length,
        standoff,
        image_length,
        diameter,
        endpoint_distance,
        height,
        width,
        factor,
        lower,
        upper,
        hypothesis_ok,
        pass: ok,
        points: path.iter().zip(&frames).map(|(p, f)| (p.0, f.point)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp3::h3_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qz() -> PlanarDifferential {
        PlanarDifferential::real_poly(&[0.0, 1.0]).unwrap()
    }

    /// Point on the positive real axis at flat distance `d` from 0 for `q = z`.
    fn at_standoff(d: f64) -> C64 {
        c((1.5 * d).powf(2.0 / 3.0), 0.0)
    }

    #[test]
    fn curvature_formula_oracles() {
        // horocycle at height 3, vertical line, and a geodesic semicircle
        assert!((h3_curvature(3.0, [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!(h3_curvature(3.0, [0.0, 0.0, 2.0], [0.0, 0.0, 0.5]) < 1e-15);
        let th: f64 = 0.7;
        let x1 = [-th.sin(), 0.0, th.cos()];
        let x2 = [-th.cos(), 0.0, -th.sin()];
        assert!(h3_curvature(th.sin(), x1, x2) < 1e-14);
    }

    #[test]
    fn fd_first_form_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for coeffs in [vec![0.0, 1.0], vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 0.0, 1.0]] {
            let diff = PlanarDifferential::real_poly(&coeffs).unwrap();
            let mut n = 0;
            while n < 30 {
                let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                if diff.euclid_standoff(z) < 0.3 || diff.phi_hat(z).norm() < 0.05 {
                    continue;
                }
                n += 1;
                let fd = fd_first_form(&diff, z, None).unwrap();
                assert!(fd.relative_error < 1e-6, "{z} {fd:?}");
            }
        }
    }

    #[test]
    fn surface_is_legendrian() {
        for coeffs in [vec![1.0], vec![0.0, 1.0], vec![-1.0, 0.0, 1.0]] {
            let diff = PlanarDifferential::real_poly(&coeffs).unwrap();
            for z in [c(2.0, 0.5), c(-1.5, 1.7), c(0.3, -2.2)] {
                assert!(contact_defect(&diff, z, None).unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn normal_is_vertical_after_pulling_back() {
        // tangent vectors of the surface at P₀ after applying Ẽp⁻¹ have no vertical part
        let diff = PlanarDifferential::real_poly(&[-1.0, 0.0, 1.0]).unwrap();
        let z = c(1.8, 0.9);
        let m = offset_frame(&diff, z, c(0.0, 0.0)).unwrap().transport.to_moebius().unwrap().inverse();
        let h = 1e-4;
        for xi in [c(1.0, 0.0), c(0.0, 1.0)] {
            let a = offset_frame(&diff, z, xi * h).unwrap().transport.to_moebius().unwrap();
            let b = offset_frame(&diff, z, -xi * h).unwrap().transport.to_moebius().unwrap();
            let pa = crate::hyp3::apply(&(m * a).renormalize(), &super::super::p0()).unwrap();
            let pb = crate::hyp3::apply(&(m * b).renormalize(), &super::super::p0()).unwrap();
            let dt = (pa.t - pb.t) / (2.0 * h);
            let dz = (pa.z - pb.z).norm() / (2.0 * h);
            assert!(dt.abs() < 1e-7 * dz.max(1.0), "{dt} {dz}");
        }
    }

    #[test]
    fn leaf_curvature_bounds() {
        let diff = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let one = leaf_curvature(&diff, c(0.5, 0.5), None).unwrap();
        assert!(one.k < 1e-8, "{one:?}");
        let lc = leaf_curvature(&qz(), at_standoff(10.0), None).unwrap();
        assert!((lc.distance - 10.0).abs() < 1e-8);
        assert!(lc.pass && lc.k < 0.12, "{lc:?}");
        let sq = PlanarDifferential::real_poly(&[-1.0, 0.0, 1.0]).unwrap();
        let x = bisect_standoff(&sq, 8.0);
        let lc = leaf_curvature(&sq, c(0.0, x), None).unwrap();
        assert!((lc.distance - 8.0).abs() < 1e-6);
        assert!(lc.pass && lc.k < 12.0 / 64.0, "{lc:?}");
        let near = leaf_curvature(&qz(), at_standoff(3.0), None).unwrap();
        assert!(!near.hypothesis_ok && !near.pass);
    }

    fn bisect_standoff(diff: &PlanarDifferential, d: f64) -> f64 {
        let (mut lo, mut hi) = (0.1, 100.0);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if diff.distance_to_zeros(c(0.0, m)) < d {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn constant_differential_collapses_exactly() {
        let diff = PlanarDifferential::real_poly(&[1.0]).unwrap();
        let h = collapse_report(&diff, c(0.0, 0.3), CollapseKind::Horizontal, &CollapseOptions { length: 10.0, ..Default::default() }).unwrap();
        assert!(h.diameter < 1e-9 && h.pass, "{}", h.diameter);
        let v = collapse_report(&diff, c(0.0, 0.3), CollapseKind::Vertical, &CollapseOptions { length: 5.0, ..Default::default() }).unwrap();
        assert!((v.endpoint_distance - 5.0 * std::f64::consts::SQRT_2).abs() < 1e-8 && v.pass);
    }

    #[test]
    fn collapse_estimates_for_z() {
        let z0 = at_standoff(10.0);
        let h = collapse_report(&qz(), z0, CollapseKind::Horizontal, &CollapseOptions::default()).unwrap();
        assert!(h.hypothesis_ok && h.pass && h.diameter < 0.18 * std::f64::consts::SQRT_2, "{h:?}");
        let v = collapse_report(&qz(), z0, CollapseKind::Vertical, &CollapseOptions { length: 5.0, ..Default::default() }).unwrap();
        assert!(v.pass && v.factor < 0.18, "{}", v.factor);
        let h2 = collapse_report(&qz(), at_standoff(20.0), CollapseKind::Horizontal, &CollapseOptions::default()).unwrap();
        assert!(h2.factor <= h.factor);
        let g = collapse_report(&qz(), z0, CollapseKind::General { end: z0 + c(0.5, 1.5) }, &CollapseOptions::default()).unwrap();
        assert!(g.pass, "{g:?}");
    }

    #[test]
    fn local_frames_follow_path() {
        let diff = qz();
        let pts = [c(3.0, 0.0), c(3.0, 1.0), c(2.0, 1.0)];
        let fr = local_frames(&diff, c(3.0, 0.0), &pts, 1e-12).unwrap();
        let direct = offset_frame(&diff, c(3.0, 0.0), c(-1.0, 1.0)).unwrap();
        assert!(h3_distance(&fr[2].point, &direct.point) < 1e-9);
    }
}
