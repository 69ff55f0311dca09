use crate::report::{Check, SuiteReport};
use anyhow::{bail, Context, Result};
use projlab::develop::{darboux_holonomy, monodromy_scaled};
use projlab::epstein::{bubble_slope, epstein_mesh, hexagon_report, write_curves_csv, write_ply, Grid, MeshOptions, Model};
use projlab::hyp3::{Moebius, ScaledMoebius};
use projlab::io::{parse_differential, parse_path, parse_surface};
use projlab::qdiff::{
    detect_cylinders, flat_geodesic_with_depth, geodesic_in_class, trace_leaf, CylinderOptions, HalfTranslationSurface, LeafOptions,
    PlanarDifferential, SurfacePoint,
};
use projlab::trees::CurveClass;
use projlab::C64;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_differential(path: &Path) -> Result<PlanarDifferential> {
    parse_differential(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn load_surface(path: &Path) -> Result<HalfTranslationSurface> {
    parse_surface(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// `x,y` as a complex number.
pub fn parse_complex(s: &str) -> Result<C64> {
    let (a, b) = s.split_once(',').with_context(|| format!("expected x,y in {s:?}"))?;
    Ok(C64::new(a.trim().parse().with_context(|| format!("in {s:?}"))?, b.trim().parse().with_context(|| format!("in {s:?}"))?))
}

/// `p:x,y` as a point of polygon `p`.
fn parse_surface_point(s: &str) -> Result<SurfacePoint> {
    let (p, z) = s.split_once(':').with_context(|| format!("expected p:x,y in {s:?}"))?;
    Ok(SurfacePoint::new(p.trim().parse().with_context(|| format!("in {s:?}"))?, parse_complex(z)?))
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

pub struct SurfaceArgs<'a> {
    pub diff: &'a Path,
    pub grid: &'a str,
    pub model: &'a str,
    pub out: &'a Path,
    pub standoff: f64,
    pub bubble: bool,
    pub certify: bool,
    pub tol: f64,
    pub figure: Option<&'a str>,
    pub hexagon: &'a str,
    pub bubble_radii: &'a str,
    pub curves: Option<&'a Path>,
}

fn is_z(diff: &PlanarDifferential) -> bool {
    [C64::new(0.7, 0.2), C64::new(-1.3, 2.1), C64::new(3.0, -0.5)].iter().all(|&z| (diff.q(z) - z).norm() <= 1e-14 * z.norm())
}

fn numbers(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().with_context(|| format!("in {s:?}"))?;
    if v.len() != n {
        bail!("expected {n} colon-separated numbers in {s:?}");
    }
    Ok(v)
}

/// Mesh export plus the optional triangle or bubble figure checks.
pub fn surface(a: &SurfaceArgs) -> Result<SuiteReport> {
    let diff = load_differential(a.diff)?;
    let grid: Grid = a.grid.parse()?;
    let model: Model = a.model.parse()?;
    let opts = MeshOptions { standoff: a.standoff, bubble: a.bubble, certify: a.certify, tol: a.tol };
    let mesh = epstein_mesh(&diff, &grid, &opts)?;
    let mut w = create(a.out)?;
    write_ply(&mesh, model, &mut w)?;
    w.flush()?;
    let mut checks = vec![Check::new("mesh.vertices", mesh.vertices.len() as f64, 1.0, !mesh.vertices.is_empty())
        .with_note(format!("{} faces, {} dropped, {} excluded", mesh.faces.len(), mesh.dropped_faces, mesh.excluded))];
    if a.certify {
        let worst = mesh.vertices.iter().filter_map(|v| v.contact).fold(0.0, f64::max);
        checks.push(Check::at_most("legendrian.contact[mesh]", worst, 1e-6));
    }
    match a.figure {
        None => {}
        Some("triangle") => {
            if !is_z(&diff) {
                bail!("the triangle figure is defined for q = z");
            }
            let h = numbers(a.hexagon, 3)?;
            let r = hexagon_report(h[0], h[1], h[2] as usize, a.tol)?;
            for k in 0..3 {
                let corner = r.corners.iter().copied().fold(0.0, f64::max);
                checks.push(Check::new(format!("figure.triangle.fin[{k}]"), r.fins[k] / corner, 10.0, r.fins[k] > 10.0 * corner)
                    .with_note(format!("fin diameter {:.6e} over the largest corner diameter", r.fins[k])));
            }
            if let Some(p) = a.curves {
                let named: Vec<(String, _)> =
                    r.curves.iter().enumerate().map(|(k, c)| (format!("{}{}", if k % 2 == 0 { "fin" } else { "corner" }, k / 2), c.clone())).collect();
                let mut w = create(p)?;
                write_curves_csv(&named, model, &mut w)?;
                w.flush()?;
            }
        }
        Some("bubble") => {
            let r = numbers(a.bubble_radii, 3)?;
            let n = r[2] as usize;
            if n < 2 || !(r[0] > 0.0 && r[1] > r[0]) {
                bail!("bubble radii need 0 < r0 < r1 and at least two samples");
            }
            let radii: Vec<f64> = (0..n).map(|k| r[0] * (r[1] / r[0]).powf(k as f64 / (n - 1) as f64)).collect();
            let center = diff.zeros().first().map(|z| z.0).unwrap_or_default();
            let b = bubble_slope(&diff, center, &radii, 4)?;
            checks.push(Check::near("figure.bubble.slope", b.slope, -2.5, 0.1).with_note("log-log slope of the induced metric"));
            checks.push(Check::near("figure.bubble.closed-slope", b.closed_slope, -2.5, 0.1));
        }
        Some(f) => bail!("unknown figure {f:?}; expected triangle or bubble"),
    }
    Ok(SuiteReport::new(checks))
}

pub struct TrajectoryArgs<'a> {
    pub diff: &'a Path,
    pub angle: f64,
    pub seeds: usize,
    pub bounds: &'a str,
    pub length: f64,
    pub spacing: f64,
    pub prune: Option<f64>,
    pub corrected: bool,
    pub out: &'a Path,
    pub tol: f64,
}

/// Occupancy grid for collision pruning.
struct Occupancy {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<C64>>,
}

impl Occupancy {
    fn key(&self, z: C64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn near(&self, z: C64, r: f64) -> bool {
        let (i, j) = self.key(z);
        (i - 1..=i + 1).flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b))).any(|k| self.cells.get(&k).is_some_and(|v| v.iter().any(|p| (p - z).norm() < r)))
    }

    fn insert(&mut self, z: C64) {
        let k = self.key(z);
        self.cells.entry(k).or_default().push(z);
    }
}

/// Leaves of the foliation `arg(q dz²) = 2·angle` through a seed grid.
pub fn trajectories(a: &TrajectoryArgs) -> Result<SuiteReport> {
    let diff = load_differential(a.diff)?;
    let b = numbers(a.bounds, 4)?;
    let (x0, x1, y0, y1) = (b[0], b[1], b[2], b[3]);
    if !(x1 > x0 && y1 > y0) || a.seeds == 0 || !(a.spacing > 0.0) {
        bail!("degenerate trajectory box or seed grid");
    }
    let cell = ((x1 - x0) / a.seeds as f64).min((y1 - y0) / a.seeds as f64);
    let prune = a.prune.unwrap_or(0.5 * cell);
    let corrected = a.corrected;
    let field = |z: C64| if corrected { diff.phi_hat_jet(z) } else { let j = diff.jet(z); (j.q, j.dq) };
    let inside = |z: C64| z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1;
    let stop = |z: C64| !inside(z) || diff.euclid_standoff(z) < 1e-3;
    let mut occ = Occupancy { cell: prune.max(1e-9), cells: HashMap::new() };
    let mut leaves: Vec<Vec<C64>> = Vec::new();
    let mut pruned = 0;
    for i in 0..a.seeds {
        for j in 0..a.seeds {
            let z0 = C64::new(x0 + (j as f64 + 0.5) * (x1 - x0) / a.seeds as f64, y0 + (i as f64 + 0.5) * (y1 - y0) / a.seeds as f64);
            if diff.euclid_standoff(z0) < 1e-3 || occ.near(z0, prune) {
                pruned += 1;
                continue;
            }
            let opts = LeafOptions { angle: a.angle, length: a.length, spacing: a.spacing, tol: a.tol };
            let fwd = trace_leaf(field, z0, None, &opts, stop);
            let branch = field(z0).0.sqrt();
            let bwd = trace_leaf(field, z0, Some(branch), &LeafOptions { length: -a.length, ..opts }, stop);
            let (Ok(fwd), Ok(bwd)) = (fwd, bwd) else {
                pruned += 1;
                continue;
            };
            let mut pts: Vec<C64> = bwd.points.iter().rev().map(|p| p.1).collect();
            pts.extend(fwd.points.iter().skip(1).map(|p| p.1));
            pts.retain(|&z| inside(z));
            for &z in &pts {
                occ.insert(z);
            }
            if pts.len() >= 2 {
                leaves.push(pts);
            }
        }
    }
    let mut w = create(a.out)?;
    let svg = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    if svg {
        let scale = 600.0 / (x1 - x0).max(y1 - y0);
        let (wd, ht) = ((x1 - x0) * scale, (y1 - y0) * scale);
        writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{wd:.1}" height="{ht:.1}" viewBox="0 0 {wd:.1} {ht:.1}">"#)?;
        writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
        for leaf in &leaves {
            let mut d = String::new();
            for (k, z) in leaf.iter().enumerate() {
                let (x, y) = ((z.re - x0) * scale, (y1 - z.im) * scale);
                write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" })?;
            }
            writeln!(w, r#"<path d="{d}" fill="none" stroke="black" stroke-width="0.8"/>"#)?;
        }
        for (z, _) in diff.zeros() {
            if inside(*z) {
                writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, (z.re - x0) * scale, (y1 - z.im) * scale)?;
            }
        }
        writeln!(w, "</svg>")?;
    } else {
        writeln!(w, "leaf,index,x,y")?;
        for (l, leaf) in leaves.iter().enumerate() {
            for (k, z) in leaf.iter().enumerate() {
                writeln!(w, "{l},{k},{:.12e},{:.12e}", z.re, z.im)?;
            }
        }
    }
    w.flush()?;
    let total: usize = leaves.iter().map(Vec::len).sum();
    Ok(SuiteReport::new(vec![Check::new("trajectories.leaves", leaves.len() as f64, 1.0, !leaves.is_empty())
        .with_note(format!("{total} points, {pruned} seeds pruned"))]))
}

fn describe(m: &ScaledMoebius) -> Value {
    let matrix = m.to_moebius().filter(|x| x.frobenius_sq().is_finite());
    json!({
        "trace": matrix.map(|x| pair(x.trace())),
        "log_abs_trace": m.log_abs_trace(),
        "trace_coordinate": m.trace_coordinate(),
        "translation_length": m.translation_length(),
        "matrix": matrix.map(|x| json!([pair(x.a), pair(x.b), pair(x.c), pair(x.d)])),
    })
}

pub fn holonomy(diff: &Path, method: &str, lp: Option<&Path>, gamma: Option<&str>, base: &str, tol: f64) -> Result<Value> {
    let d = load_differential(diff)?;
    match method {
        "ode" => {
            let lp = lp.context("--loop is required for the ode method")?;
            let path = parse_path(&read(lp)?).with_context(|| format!("in {}", lp.display()))?;
            let m = monodromy_scaled(&d, &path, tol)?;
            Ok(json!({"method": "ode", "holonomy": describe(&m)}))
        }
        "darboux" => {
            let g = gamma.context("--gamma a,b,c,d is required for the darboux method")?;
            let e: Vec<f64> = g.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().with_context(|| format!("in {g:?}"))?;
            if e.len() != 4 {
                bail!("--gamma takes four real entries");
            }
            let c = |x: f64| C64::new(x, 0.0);
            let gm = Moebius::normalized(c(e[0]), c(e[1]), c(e[2]), c(e[3]))?;
            let m = darboux_holonomy(&d, &gm, parse_complex(base)?, tol)?;
            Ok(json!({"method": "darboux", "holonomy": describe(&ScaledMoebius::from(m))}))
        }
        _ => bail!("unknown method {method:?}; expected ode or darboux"),
    }
}

pub fn geodesic(surface: &Path, from: Option<&str>, to: Option<&str>, class: Option<&str>, depth: usize) -> Result<Value> {
    let s = load_surface(surface)?;
    match (from, to, class) {
        (Some(p), Some(q), None) => {
            let segs = flat_geodesic_with_depth(&s, &parse_surface_point(p)?, &parse_surface_point(q)?, depth)?;
            let length: f64 = segs.iter().map(|x| x.length).sum();
            Ok(json!({"length": length, "segments": segs}))
        }
        (None, None, Some(c)) => {
            let CurveClass::Word { start, edges } = c.parse::<CurveClass>()? else {
                bail!("--class takes an edge word p:e1.e2...");
            };
            Ok(serde_json::to_value(geodesic_in_class(&s, start, &edges)?)?)
        }
        _ => bail!("give either --from and --to, or --class"),
    }
}

pub fn cylinders(surface: &Path, directions: usize, max_circumference: f64, return_tol: f64) -> Result<Value> {
    let s = load_surface(surface)?;
    if directions == 0 {
        bail!("--directions must be positive");
    }
    let angles: Vec<f64> = (0..directions).map(|k| std::f64::consts::PI * k as f64 / directions as f64).collect();
    let cyl = detect_cylinders(&s, &angles, &CylinderOptions { max_circumference, return_tol })?;
    Ok(json!({"count": cyl.len(), "cylinders": cyl}))
}
