use crate::report::{Check, SuiteReport};
use projlab::develop::{darboux_holonomy, monodromy, monodromy_scaled, Path};
use projlab::epstein::{
    collapse_report, contact_defect, epstein_forms, fd_first_form, general_fundamental_forms, leaf_curvature, local_frames, CollapseKind,
    CollapseOptions, MetricJet, C0, D0,
};
use projlab::hyp3::{h3_distance, H3Point, Moebius};
use projlab::poly::{q_frac, q_int, qpoly_from_ints, CPoly, RationalFn};
use projlab::qdiff::{epsilon_bound_check, Chart, HalfTranslationSurface, PlanarDifferential};
use projlab::trees::{
    dual_length_function, fit_line, fold, growth_survey, log_grid, ms_limit_survey, straight_segments, straightness_check, CurveClass, Family,
    FlatData, TreeMapSample,
};
use projlab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::path::PathBuf;

pub const SUITES: [&str; 10] = ["collapse", "curvature", "legendrian", "forms", "height", "beta", "scaling", "tree-limit", "straightness", "abelian"];

/// Inputs and tolerances shared by the suites.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Replaces the default differentials when given.
    pub diff: Option<(String, PlanarDifferential)>,
    pub seed: u64,
    /// Random sample points per differential.
    pub samples: usize,
    pub standoffs: Vec<f64>,
    /// Continuation tolerance.
    pub tol: f64,
    pub exact_tol: f64,
    pub fd_tol: f64,
    pub contact_tol: f64,
    pub product_tol: f64,
    pub identity_tol: f64,
    pub holonomy_tol: f64,
    pub slope_tol: f64,
    pub sup_tol: f64,
    pub tree_tol: f64,
    pub residual_tol: f64,
    /// Survey CSV files are written here when set.
    pub csv_dir: Option<PathBuf>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            diff: None,
            seed: 0,
            samples: 1000,
            standoffs: vec![5.0, 8.0, 12.0, 20.0],
            tol: 1e-12,
            exact_tol: 1e-9,
            fd_tol: 1e-6,
            contact_tol: 1e-6,
            product_tol: 1e-8,
            identity_tol: 1e-10,
            holonomy_tol: 1e-8,
            slope_tol: 0.3,
            sup_tol: 1e-3,
            tree_tol: 1e-2,
            residual_tol: 1e-2,
            csv_dir: None,
        }
    }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> anyhow::Result<SuiteReport> {
    let checks = match name {
        "collapse" => collapse(opts),
        "curvature" => curvature(opts),
        "legendrian" => legendrian(opts),
        "forms" => forms(opts),
        "height" => height(opts),
        "beta" => beta(opts),
        "scaling" => scaling(opts),
        "tree-limit" => tree_limit(opts),
        "straightness" => straightness(opts),
        "abelian" => abelian(opts),
        _ => anyhow::bail!("unknown suite {name:?}; expected one of {}", SUITES.join(", ")),
    };
    Ok(SuiteReport::new(checks))
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn poly(coeffs: &[f64]) -> PlanarDifferential {
    PlanarDifferential::real_poly(coeffs).expect("nonzero polynomial")
}

fn named(list: &[&str]) -> Vec<(String, PlanarDifferential)> {
    list.iter()
        .map(|&n| {
            let d = match n {
                "1" => poly(&[1.0]),
                "z" => poly(&[0.0, 1.0]),
                "z^2-1" => poly(&[-1.0, 0.0, 1.0]),
                "z^3-z" => poly(&[0.0, -1.0, 0.0, 1.0]),
                _ => unreachable!("no default differential {n}"),
            };
            (n.to_string(), d)
        })
        .collect()
}

fn diffs(opts: &SuiteOptions, defaults: &[&str]) -> Vec<(String, PlanarDifferential)> {
    match &opts.diff {
        Some(d) => vec![d.clone()],
        None => named(defaults),
    }
}

/// Runs a fallible block; an error becomes a failing entry.
fn attempt(id: &str, f: impl FnOnce() -> projlab::Result<Vec<Check>>) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::new(id, f64::NAN, f64::NAN, false).with_note(e.to_string())])
}

/// Order-preserving map over scoped worker threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| s.spawn(move || part.iter().map(f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn centroid(diff: &PlanarDifferential) -> C64 {
    let z = diff.zeros();
    if z.is_empty() {
        return c(0.0, 0.0);
    }
    z.iter().map(|p| p.0).sum::<C64>() / z.len() as f64
}

/// Point on the ray from the centroid of the zeros in direction `angle` at
/// flat distance `d` from the zeros.
pub fn standoff_point(diff: &PlanarDifferential, d: f64, angle: f64) -> Option<C64> {
    let o = centroid(diff);
    let dir = C64::from_polar(1.0, angle);
    let dist = |s: f64| diff.distance_to_zeros(o + dir * s);
    if !dist(0.0).is_finite() {
        return None;
    }
    let mut hi = 1.0;
    while dist(hi) < d {
        hi *= 2.0;
        if hi > 1e8 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if dist(m) < d {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(o + dir * (0.5 * (lo + hi)))
}

const ANGLES: [f64; 2] = [FRAC_PI_2, FRAC_PI_4];

fn tag(name: &str, d: f64, angle: f64) -> String {
    format!("q={name},d={d},arg={}", (angle.to_degrees()).round())
}

/// Seeded points in `[-4, 4]²` away from the singular points of `q` and `φ̂`.
fn sample_points(diff: &PlanarDifferential, seed: u64, n: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        if diff.euclid_standoff(z) < 0.3 || diff.phi_hat(z).norm() < 0.05 {
            continue;
        }
        out.push(z);
    }
    out
}

fn seed_for(opts: &SuiteOptions, name: &str) -> u64 {
    name.bytes().fold(opts.seed, |h, b| h.wrapping_mul(1_000_003).wrapping_add(b as u64))
}

fn collapse(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, diff) in diffs(opts, &["z", "z^2-1"]) {
        if diff.zeros().is_empty() && diff.poles().is_empty() {
            out.extend(attempt(&format!("maingeom.exact[q={name}]"), || constant_collapse(&name, &diff, opts)));
            continue;
        }
        let mut rates = Vec::new();
        for &d in &opts.standoffs {
            for angle in ANGLES {
                let t = tag(&name, d, angle);
                let id = format!("maingeom[{t}]");
                out.extend(attempt(&id, || {
                    let start = standoff_point(&diff, d, angle).ok_or_else(|| projlab::Error::NotFound(format!("standoff {d}")))?;
                    let co = CollapseOptions { tol: opts.tol, ..Default::default() };
                    let h = collapse_report(&diff, start, CollapseKind::Horizontal, &co)?;
                    let v = collapse_report(&diff, start, CollapseKind::Vertical, &CollapseOptions { length: 5.0, ..co })?;
                    let bound = C0 / (h.standoff * h.standoff);
                    rates.push((d, h.factor));
                    Ok(vec![
                        Check::new(format!("maingeom.hypothesis[{t}]"), h.standoff.min(v.standoff), D0, h.hypothesis_ok && v.hypothesis_ok),
                        Check::new(format!("maingeom.horizontal[{t}]"), h.factor, bound, h.pass).with_note("diameter / (√2 length)"),
                        Check::new(format!("maingeom.vertical[{t}]"), v.factor, C0 / (v.standoff * v.standoff), v.pass)
                            .with_note("|distance / (√2 length) − 1|"),
                    ])
                }));
            }
        }
        // worst direction at each standoff
        let mut worst: Vec<(f64, f64)> = Vec::new();
        for (d, f) in rates {
            match worst.iter_mut().find(|w| w.0 == d) {
                Some(w) => w.1 = w.1.max(f),
                None => worst.push((d, f)),
            }
        }
        if worst.len() >= 2 {
            let x: Vec<f64> = worst.iter().map(|r| r.0.ln()).collect();
            let y: Vec<f64> = worst.iter().map(|r| r.1.ln()).collect();
            let (slope, _) = fit_line(&x, &y);
            out.push(Check::near(format!("maingeom.collapse-rate[q={name}]"), slope, -2.0, opts.slope_tol));
        }
    }
    out
}

/// `q` constant: horizontal leaves collapse to points, vertical leaves map
/// isometrically (up to √2) onto one geodesic.
fn constant_collapse(name: &str, diff: &PlanarDifferential, opts: &SuiteOptions) -> projlab::Result<Vec<Check>> {
    let start = c(0.0, 0.3);
    let co = CollapseOptions { tol: opts.tol, ..Default::default() };
    let h = collapse_report(diff, start, CollapseKind::Horizontal, &CollapseOptions { length: 10.0, ..co })?;
    let mut out = vec![Check::at_most(format!("maingeom.horizontal.exact[q={name}]"), h.diameter, opts.exact_tol)];
    for s in [1.0, 5.0, 20.0] {
        let v = collapse_report(diff, start, CollapseKind::Vertical, &CollapseOptions { length: s, ..co })?;
        out.push(Check::at_most(format!("maingeom.vertical.exact[q={name},s={s}]"), v.factor, opts.holonomy_tol).with_note("relative to √2 length"));
    }
    // every image point lies on the geodesic through the images of a long vertical segment
    let pts: Vec<C64> = (0..=10).flat_map(|i| (0..=10).map(move |j| c(-1.0 + 0.2 * j as f64, -1.0 + 0.2 * i as f64))).collect();
    let ends = [start - c(0.0, 10.0), start + c(0.0, 10.0)];
    let mut all = vec![ends[0], ends[1]];
    all.extend(&pts);
    let frames = local_frames(diff, start, &all, opts.tol)?;
    let (a, b) = (frames[0].point, frames[1].point);
    let ab = h3_distance(&a, &b);
    let defect = frames[2..].iter().map(|f| (h3_distance(&a, &f.point) + h3_distance(&f.point, &b) - ab).abs()).fold(0.0, f64::max);
    out.push(Check::at_most(format!("maingeom.line[q={name}]"), defect, opts.exact_tol).with_note("triangle defect against a long geodesic chord"));
    Ok(out)
}

fn curvature(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, diff) in diffs(opts, &["z", "z^2-1"]) {
        if diff.zeros().is_empty() {
            out.extend(attempt(&format!("leafcurvature[q={name}]"), || {
                let k = leaf_curvature(&diff, c(0.5, 0.5), None)?.k;
                Ok(vec![Check::at_most(format!("leafcurvature.flat[q={name}]"), k, opts.holonomy_tol)])
            }));
            continue;
        }
        for &d in &opts.standoffs {
            for angle in ANGLES {
                let t = tag(&name, d, angle);
                out.extend(attempt(&format!("leafcurvature[{t}]"), || {
                    let start = standoff_point(&diff, d, angle).ok_or_else(|| projlab::Error::NotFound(format!("standoff {d}")))?;
                    let lc = leaf_curvature(&diff, start, None)?;
                    Ok(vec![Check::new(format!("leafcurvature[{t}]"), lc.k, lc.bound, lc.pass)])
                }));
            }
            // a ring of sample points at flat distance d
            let ring: Vec<C64> = (0..16).filter_map(|k| standoff_point(&diff, d, std::f64::consts::TAU * k as f64 / 16.0)).collect();
            let r = epsilon_bound_check(&diff, &ring);
            let used: Vec<_> = r.samples.iter().filter(|s| !s.excluded).collect();
            let eps = used.iter().map(|s| s.epsilon * s.distance * s.distance).fold(0.0, f64::max);
            let grad = used.iter().map(|s| s.gradient * s.distance.powi(3)).fold(0.0, f64::max);
            let ok_e = !used.is_empty() && used.iter().all(|s| s.epsilon_ok);
            let ok_g = !used.is_empty() && used.iter().all(|s| s.gradient_ok);
            out.push(Check::new(format!("boundingbeta.epsilon[q={name},d={d}]"), eps, 6.0, ok_e).with_note("max |β/φ| d²"));
            out.push(Check::new(format!("boundingbeta.gradient[q={name},d={d}]"), grad, 48.0, ok_g).with_note("max |∇(β/φ)| d³"));
        }
    }
    out
}

fn legendrian(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, diff) in diffs(opts, &["1", "z", "z^2-1", "z^3-z"]) {
        let pts = sample_points(&diff, seed_for(opts, &name), opts.samples);
        let id = format!("legendrian.contact[q={name}]");
        out.extend(attempt(&id, || {
            let worst = par_map(&pts, |&z| contact_defect(&diff, z, None)).into_iter().collect::<projlab::Result<Vec<f64>>>()?;
            let m = worst.into_iter().fold(0.0, f64::max);
            Ok(vec![Check::at_most(id.clone(), m, opts.contact_tol).with_note(format!("{} points", pts.len()))])
        }));
    }
    out
}

/// `|κ_v|` below which `det I` loses too many digits for the product check.
const PRODUCT_MARGIN: f64 = 1e-3;

fn forms(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, diff) in diffs(opts, &["z", "z^2-1", "z^3-z"]) {
        let pts = sample_points(&diff, seed_for(opts, &name), opts.samples);
        out.extend(attempt(&format!("forms[q={name}]"), || {
            let rows = par_map(&pts, |&z| -> projlab::Result<(f64, Option<f64>, f64)> {
                let fd = fd_first_form(&diff, z, None)?;
                let es = epstein_forms(&diff, z)?;
                let product = if es.immersed && es.kappa_v.abs() >= PRODUCT_MARGIN { es.principal().map(|[(k1, _), (k2, _)]| (k1 * k2 - 1.0).abs()) } else { None };
                let gen = general_fundamental_forms(&MetricJet::flat(&diff, z)?, -diff.phi_hat(z) * 0.5);
                let gap = [
                    (es.first11 - gen.first11).abs(),
                    (es.first20 - gen.first20).norm(),
                    (es.second11 - gen.second11).abs(),
                    (es.second20 - gen.second20).norm(),
                ]
                .into_iter()
                .fold(0.0, f64::max)
                    / es.first11;
                Ok((fd.relative_error, product, gap))
            })
            .into_iter()
            .collect::<projlab::Result<Vec<_>>>()?;
            let fd = rows.iter().map(|r| r.0).fold(0.0, f64::max);
            let products: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
            let prod = products.iter().copied().fold(0.0, f64::max);
            let gap = rows.iter().map(|r| r.2).fold(0.0, f64::max);
            Ok(vec![
                Check::at_most(format!("forms.first-form[q={name}]"), fd, opts.fd_tol).with_note(format!("finite differences at {} points", rows.len())),
                Check::new(format!("forms.principal-product[q={name}]"), prod, opts.product_tol, !products.is_empty() && prod <= opts.product_tol)
                    .with_note(format!("|κ_h κ_v − 1| at {} immersed points with |κ_v| ≥ {PRODUCT_MARGIN}", products.len())),
                Check::at_most(format!("forms.code-paths[q={name}]"), gap, opts.identity_tol),
            ])
        }));
    }
    out
}

fn height(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, diff) in diffs(opts, &["z", "z^2-1"]) {
        if diff.zeros().is_empty() {
            out.extend(attempt(&format!("height-estimate[q={name}]"), || {
                let (a, b) = (c(0.1, 0.2), c(1.3, 2.9));
                let g = collapse_report(&diff, a, CollapseKind::General { end: b }, &CollapseOptions { tol: opts.tol, ..Default::default() })?;
                let zeta = diff.segment_holonomy(a, b, None)?;
                let h = SQRT_2 * zeta.im.abs();
                Ok(vec![Check::at_most(format!("height-estimate.exact[q={name}]"), (g.endpoint_distance - h).abs(), opts.exact_tol * h.max(1.0))])
            }));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(opts, &name));
        let mut fit = Vec::new();
        for &d in &opts.standoffs {
            for angle in ANGLES {
                let t = tag(&name, d, angle);
                let r = rng.gen_range(0.5..3.0);
                let psi = angle + rng.gen_range(-1.0..1.0);
                out.extend(attempt(&format!("height-estimate[{t}]"), || {
                    let start = standoff_point(&diff, d, angle).ok_or_else(|| projlab::Error::NotFound(format!("standoff {d}")))?;
                    let end = start + C64::from_polar(r, psi);
                    let g = collapse_report(&diff, start, CollapseKind::General { end }, &CollapseOptions { tol: opts.tol, ..Default::default() })?;
                    fit.push((g.height, g.endpoint_distance));
                    Ok(vec![Check::new(format!("height-estimate[{t}]"), g.endpoint_distance, g.upper, g.pass && g.hypothesis_ok)
                        .with_note(format!("height {:.6e}, width {:.6e}, lower {:.6e}", g.height, g.width, g.lower))])
                }));
            }
        }
        if fit.len() >= 2 {
            let (k, c0) = fit_line(&fit.iter().map(|p| p.0).collect::<Vec<_>>(), &fit.iter().map(|p| p.1).collect::<Vec<_>>());
            out.push(Check::near(format!("height-estimate.fit-K[q={name}]"), k, 1.0, 0.1));
            out.push(Check::at_most(format!("height-estimate.fit-C[q={name}]"), c0.abs(), 1.0));
        }
    }
    out
}

fn exact_check(id: String, ok: bool) -> Check {
    Check::new(id, if ok { 0.0 } else { 1.0 }, 0.0, ok).with_note("exact rational arithmetic")
}

fn beta(opts: &SuiteOptions) -> Vec<Check> {
    let z = poly(&[0.0, 1.0]);
    let expect = RationalFn::new(qpoly_from_ints(&[5, 0, 0, 8]), qpoly_from_ints(&[0, 0, 8]));
    let mut out = vec![exact_check("beta.phi-hat[q=z]".into(), z.exact_phi_hat().same_function(&expect))];
    for k in 1..=3i64 {
        let mut coeffs = vec![0.0; k as usize + 1];
        coeffs[k as usize] = 1.0;
        let q = poly(&coeffs);
        let res = q.exact_beta().laurent_coefficient(&q_int(0), -2);
        out.push(exact_check(format!("beta.residue[k={k}]"), res == q_frac(-k * (k + 4), 8)));
    }
    for (name, diff) in diffs(opts, &["z", "z^2-1", "z^3-z"]) {
        out.extend(attempt(&format!("beta.scale-invariance[q={name}]"), || {
            let s = diff.scaled(c(2.0, -3.0))?;
            Ok(vec![exact_check(format!("beta.scale-invariance[q={name}]"), diff.exact_beta().same_function(&s.exact_beta()))])
        }));
    }
    out
}

fn constant(t: f64) -> PlanarDifferential {
    poly(&[t])
}

fn inverse_square(k: f64) -> projlab::Result<PlanarDifferential> {
    PlanarDifferential::rational(CPoly::new(vec![c(k, 0.0)]), CPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]), Chart::Plane)
}

/// Translation-length and trace oracles of `t dz²`, and the Darboux
/// construction against the trivial and Euler cases.
pub fn holonomy_checks(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    for t in [1.0, 1e2, 1e4] {
        for cc in [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)] {
            let id = format!("develop.trace[t={t},c={cc}]");
            out.extend(attempt(&id, || {
                let s = monodromy_scaled(&constant(t), &Path::translation(c(0.2, 0.1), cc), opts.tol)?;
                let tr = s.m.trace() * s.log_scale.exp();
                let exact = (cc * (t / 2.0).sqrt()).cos() * 2.0;
                let rel = (tr - exact).norm() / exact.norm().max(1.0);
                let len = (2.0 * t).sqrt() * cc.im.abs();
                let lerr = (s.translation_length() - len).abs() / len.max(1.0);
                Ok(vec![
                    Check::at_most(id.clone(), rel, opts.holonomy_tol),
                    Check::at_most(format!("develop.translation-length[t={t},c={cc}]"), lerr, opts.holonomy_tol),
                ])
            }));
        }
    }
    out.extend(attempt("darboux.trivial", || {
        let g = Moebius::diag(c(3f64.sqrt(), 0.0));
        let r = darboux_holonomy(&inverse_square(1e-300)?, &g, c(0.3, 1.0), opts.tol)?;
        Ok(vec![Check::at_most("darboux.trivial", (r - g).operator_norm(), opts.holonomy_tol)])
    }));
    for k in [0.1, 0.2, -0.7] {
        let id = format!("darboux.euler[k={k}]");
        out.extend(attempt(&id, || {
            let lambda: f64 = 2.5;
            let g = Moebius::diag(c(lambda.sqrt(), 0.0));
            let r = darboux_holonomy(&inverse_square(k)?, &g, c(0.0, 1.0), 1e-13)?;
            // in w = log z the differential is the constant k − 1/2 and z -> λz is w -> w + log λ
            let m = monodromy(&constant(k - 0.5), &Path::translation(c(0.0, 0.0), c(lambda.ln(), 0.0)), 1e-13)?;
            Ok(vec![Check::at_most(id.clone(), (m.trace().norm() - r.trace().norm()).abs(), 1e-6)])
        }));
    }
    out
}

fn cylinder() -> Family {
    Family::Cylinder { deck: c(0.0, 1.0) }
}

fn scaling(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = holonomy_checks(opts);
    let params = log_grid(2.0, 6.0, 4);
    for (label, fam, words) in [("cylinder", cylinder(), vec!["a", "aa", "aaa"]), ("torus", Family::square_torus(), vec!["a", "b", "ab"])] {
        out.extend(attempt(&format!("length-bounds[{label}]"), || {
            let g = growth_survey(&fam, &words, &params)?;
            if let Some(dir) = &opts.csv_dir {
                write_csv(dir, &format!("growth-{label}.csv"), |w| g.write_csv(w))?;
            }
            let heights = fam.limit_heights(&words)?;
            let top: Vec<_> = g.rows.iter().filter(|r| r.t >= 1e5 * (1.0 - 1e-9)).collect();
            let (first, last) = (top[0], top[top.len() - 1]);
            let drift = heights
                .iter()
                .enumerate()
                .filter(|(_, h)| **h > 0.0)
                .map(|(i, _)| {
                    let a = first.lengths[i] / first.t.sqrt();
                    let b = last.lengths[i] / last.t.sqrt();
                    (b / a - 1.0).abs()
                })
                .fold(0.0, f64::max);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for r in &g.rows {
                for (l, h) in r.lengths.iter().zip(&heights).filter(|(_, h)| **h > 0.0) {
                    let ratio = l / (h * r.t.sqrt());
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
            }
            Ok(vec![
                Check::at_most(format!("nonsingular-length.drift[{label}]"), drift, opts.sup_tol).with_note("ℓ/√t over the top decade"),
                Check::at_most(format!("setting-scale.fit-residual[{label}]"), g.max_relative_residual, opts.residual_tol)
                    .with_note("log(1 + max|tr|) against √t"),
                Check::at_most(format!("length-bounds.envelope[{label}]"), hi / lo, 3.0).with_note("spread of ℓ/(h√t) over all parameters"),
            ])
        }));
    }
    out
}

fn write_csv(dir: &std::path::Path, file: &str, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> projlab::Result<()> {
    let io = |e: std::io::Error| projlab::Error::InvalidInput(format!("{}: {e}", dir.join(file).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(file)).map_err(io)?);
    f(&mut w).map_err(io)
}

fn tree_limit(opts: &SuiteOptions) -> Vec<Check> {
    let params = log_grid(2.0, 6.0, 2);
    let base = H3Point::new(c(1.0, 0.0), 1.0).expect("positive height");
    let mut out = Vec::new();
    for (label, fam, words) in
        [("cylinder", cylinder(), vec!["a", "aa", "aaa", "aaaa", "aaaaa"]), ("torus", Family::square_torus(), vec!["a", "b", "ab"])]
    {
        out.extend(attempt(&format!("bestvina[{label}]"), || {
            let s = ms_limit_survey(&fam, &words, &params, base)?;
            if let Some(dir) = &opts.csv_dir {
                write_csv(dir, &format!("limit-{label}.csv"), |w| s.write_csv(w))?;
            }
            let mut slope = Check::near(format!("bestvina.delta-slope[{label}]"), s.delta_slope, -0.5, 0.1);
            slope = slope.with_note(format!("{} of {} parameters above the rounding floor", s.delta_resolved, s.rows.len()));
            Ok(vec![
                Check::at_most(format!("bestvina.sup-norm[{label}]"), s.final_sup_error, opts.sup_tol)
                    .with_note("projectivized log(|tr| + 2) against dual-tree heights at the largest t"),
                Check::at_most(format!("bestvina.length-drift[{label}]"), s.length_drift, opts.sup_tol),
                slope,
            ])
        }));
    }
    out
}

fn straightness(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(attempt("straightness.projection", || {
        let sources: Vec<C64> = (0..6).map(|k| c(0.3 * k as f64, 0.4 * k as f64 - 0.5)).collect();
        let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
        let segs = straight_segments(&poly(&[1.0]), &sources, &pairs)?;
        let heights: Vec<f64> = sources.iter().map(|z| z.im).collect();
        let pi = straightness_check(&TreeMapSample::on_line(sources.clone(), &heights)?, &segs, opts.exact_tol)?;
        let folded = straightness_check(&TreeMapSample::on_line(sources, &fold(&heights, 0.5))?, &segs, opts.exact_tol)?;
        Ok(vec![
            Check::new("straightness.projection", pi.max_error, opts.exact_tol, pi.pass),
            Check::new("straightness.fold-detected", folded.max_error, opts.exact_tol, !folded.pass).with_note("the fold must fail"),
        ])
    }));
    out.extend(attempt("straightness.pushoff", || {
        let s: f64 = 1.5;
        let sources = vec![c(0.0, -s), c(0.0, s)];
        let segs = straight_segments(&poly(&[0.0, 1.0]), &sources, &[(0, 1)])?;
        let h = 2.0 * (2.0 / 3.0) * s.powf(1.5) * (0.75 * std::f64::consts::PI).sin();
        let got = segs[0].height.unwrap_or(f64::NAN);
        Ok(vec![Check::new("straightness.pushoff", (got - h).abs(), opts.holonomy_tol, segs[0].pushoff.is_some() && (got - h).abs() <= opts.holonomy_tol)])
    }));
    out.extend(attempt("straightness.epstein-cylinder", || {
        let t = 1e6;
        let sources: Vec<C64> = [0.0, 0.4].iter().flat_map(|&x| [0.0, 0.2, 0.45, 0.7, 1.0].map(|y| c(x, y))).collect();
        let sample = TreeMapSample::epstein(&constant(t), sources.clone(), (2.0 * t).sqrt(), opts.tol.max(1e-11))?;
        let n = sources.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let segs = straight_segments(&constant(1.0), &sources, &pairs)?;
        let r = straightness_check(&sample, &segs, opts.tree_tol)?;
        Ok(vec![Check::new("straightness.epstein-cylinder[t=1e6]", r.max_error, opts.tree_tol, r.pass)])
    }));
    out
}

fn abelian(opts: &SuiteOptions) -> Vec<Check> {
    let mut out = Vec::new();
    let t = 1e6;
    let fams = [
        ("square-torus", Family::square_torus()),
        ("sheared-torus", Family::Torus { periods: [c(1.0, 0.3), c(-0.2, 1.0)], phase: 0.5 }),
        ("cylinder", cylinder()),
    ];
    for (label, fam) in fams {
        let id = format!("harmonic-representative[{label}]");
        out.extend(attempt(&id, || {
            let words: Vec<&str> = if fam.generators().len() == 2 { vec!["a", "b", "ab", "aB", "aab"] } else { vec!["a", "aa", "aaa"] };
            let heights = fam.limit_heights(&words)?;
            let lengths: Vec<f64> = words
                .iter()
                .map(|w| Ok(fam.element(t, &fam.word_class(w)?)?.translation_length()))
                .collect::<projlab::Result<_>>()?;
            let (p, q) = (projlab::develop::projectivize(&lengths), projlab::develop::projectivize(&heights));
            let sup = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(vec![Check::at_most(id.clone(), sup, opts.sup_tol).with_note("projectivized translation lengths against |Im period| at t = 1e6")])
        }));
    }
    out.extend(attempt("harmonic-representative.ode[square-torus]", || {
        let fam = Family::square_torus();
        let rep = fam.rep_ode(1e4, opts.tol.max(1e-12))?;
        let words = ["a", "b", "ab"];
        let lengths: Vec<f64> = words.iter().map(|w| Ok(rep.evaluate(w)?.translation_length())).collect::<projlab::Result<_>>()?;
        let heights = fam.limit_heights(&words)?;
        let err = lengths.iter().zip(&heights).map(|(l, h)| (l - (2.0 * 1e4f64).sqrt() * h).abs() / (2.0 * 1e4f64).sqrt()).fold(0.0, f64::max);
        Ok(vec![Check::at_most("harmonic-representative.ode[square-torus]", err, opts.holonomy_tol).with_note("ℓ = √(2t)|Im period| from the developing ODE")])
    }));
    out.extend(attempt("straight-to-R[square-torus]", || {
        let surf = HalfTranslationSurface::square_torus();
        let lattice = FlatData::Lattice { periods: [c(1.0, 0.0), c(0.0, 1.0)], phase: 0.0 };
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for e in 0..4 {
            let class = CurveClass::Word { start: 0, edges: vec![e] };
            let Ok(hs) = dual_length_function(&FlatData::Surface(&surf), std::slice::from_ref(&class)) else { continue };
            let h = hs.get(&class).unwrap_or(f64::NAN);
            // crossing edge 0 or 2 moves vertically, 1 or 3 horizontally
            let lat = if e % 2 == 0 { CurveClass::Lattice(0, 1) } else { CurveClass::Lattice(1, 0) };
            let expect = dual_length_function(&lattice, std::slice::from_ref(&lat))?.get(&lat).unwrap_or(f64::NAN);
            worst = worst.max((h - expect).abs());
            checked += 1;
        }
        Ok(vec![Check::new("straight-to-R[square-torus]", worst, opts.exact_tol, checked > 0 && worst <= opts.exact_tol)
            .with_note(format!("{checked} edge words against lattice heights"))])
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standoff_points_hit_the_distance() {
        let z = poly(&[0.0, 1.0]);
        let p = standoff_point(&z, 8.0, FRAC_PI_2).unwrap();
        assert!((z.distance_to_zeros(p) - 8.0).abs() < 1e-9);
        assert!(standoff_point(&poly(&[1.0]), 1.0, 0.0).is_none());
    }

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..37).collect();
        assert_eq!(par_map(&v, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(par_map(&[] as &[usize], |x| *x).is_empty());
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", &SuiteOptions::default()).is_err());
    }

    #[test]
    fn beta_suite_is_exact() {
        let r = run_suite("beta", &SuiteOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
