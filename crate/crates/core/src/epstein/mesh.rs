use super::checks::{fd_first_form, local_frames, pairwise_distances};
use super::{epstein_forms, epstein_schwarz, EpsteinFrame};
use crate::develop::{continue_jet, DevelopingJet, Path};
use crate::error::{Error, Result};
use crate::hyp3::{H3Point, C64};
use crate::qdiff::PlanarDifferential;
use serde::Serialize;
use std::f64::consts::TAU;
use std::io::{self, Write};
use std::str::FromStr;

/// Sample grid in the `z` chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grid {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize },
    /// Polar grid `r0 ≤ |z − center| ≤ r1`; `log_radial` spaces radii geometrically.
    Polar { center: C64, r0: f64, r1: f64, nr: usize, ntheta: usize, log_radial: bool },
}

impl FromStr for Grid {
    type Err = Error;

    /// `rect:x0:x1:y0:y1:n`, `annulus:r0:r1:n` or `disk:r0:r1:n` (punctured,
    /// geometric radii).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidInput(format!("grid spec {s:?}"));
        let num = |k: usize| -> Result<f64> { parts.get(k).ok_or_else(bad)?.parse::<f64>().map_err(|_| bad()) };
        let count = |k: usize| -> Result<usize> { parts.get(k).ok_or_else(bad)?.parse::<usize>().map_err(|_| bad()) };
        let g = match parts[0] {
            "rect" if parts.len() == 6 => {
                let n = count(5)?;
                Grid::Rect { x0: num(1)?, x1: num(2)?, y0: num(3)?, y1: num(4)?, nx: n, ny: n }
            }
            "annulus" | "disk" if parts.len() == 4 => {
                let n = count(3)?;
                Grid::Polar {
                    center: C64::new(0.0, 0.0),
                    r0: num(1)?,
                    r1: num(2)?,
                    nr: (n / 8).max(2),
                    ntheta: n,
                    log_radial: parts[0] == "disk",
                }
            }
            _ => return Err(bad()),
        };
        g.validate()?;
        Ok(g)
    }
}

impl Grid {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Grid::Rect { x0, x1, y0, y1, .. } => x1 >= x0 && y1 >= y0,
            Grid::Polar { r0, r1, log_radial, .. } => r1 >= r0 && r0 >= 0.0 && (!log_radial || r0 > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate grid {self:?}")))
        }
    }

    /// `(rows, columns)`; columns wrap around for polar grids.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Grid::Rect { nx, ny, .. } => (if nx == 0 || ny == 0 { 0 } else { ny + 1 }, if nx == 0 || ny == 0 { 0 } else { nx + 1 }),
            Grid::Polar { nr, ntheta, .. } => (if ntheta == 0 { 0 } else { nr + 1 }, ntheta),
        }
    }

    fn periodic(&self) -> bool {
        matches!(self, Grid::Polar { .. })
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        match *self {
            Grid::Rect { x0, x1, y0, y1, nx, ny } => {
                C64::new(x0 + (x1 - x0) * j as f64 / nx as f64, y0 + (y1 - y0) * i as f64 / ny as f64)
            }
            Grid::Polar { center, r0, r1, nr, ntheta, log_radial } => {
                let s = i as f64 / nr.max(1) as f64;
                let r = if log_radial { r0 * (r1 / r0).powf(s) } else { r0 + (r1 - r0) * s };
                center + C64::from_polar(r, TAU * j as f64 / ntheta as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeshOptions {
    /// Minimum flat distance from the zeros for a vertex to be kept.
    pub standoff: f64,
    /// Keep vertices arbitrarily close to the zeros.
    pub bubble: bool,
    /// Record the contact defect at every vertex.
    pub certify: bool,
    pub tol: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { standoff: 0.0, bubble: false, certify: false, tol: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeshVertex {
    pub z: C64,
    pub point: H3Point,
    pub kappa_v: f64,
    pub epsilon: f64,
    /// Flat distance to the zeros; infinite when there are none.
    pub distance: f64,
    /// Sign of `|φ̂| − |φ|`.
    pub side: i8,
    pub contact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsteinMesh {
    pub vertices: Vec<MeshVertex>,
    pub faces: Vec<[usize; 3]>,
    /// Faces dropped because they straddle `|φ̂| = |φ|`.
    pub dropped_faces: usize,
    /// Grid points left out for the standoff or a failed continuation.
    pub excluded: usize,
    /// Whether the developing map closed up around a polar grid.
    pub seam_closed: bool,
}

fn vertex(diff: &PlanarDifferential, z: C64, frame: &EpsteinFrame, opts: &MeshOptions) -> Option<MeshVertex> {
    let distance = diff.distance_to_zeros(z);
    if !opts.bubble && distance < opts.standoff {
        return None;
    }
    let forms = epstein_forms(diff, z).ok()?;
    let gap = diff.phi_hat(z).norm() - diff.q(z).norm();
    let contact = if opts.certify { super::contact_defect(diff, z, None).ok() } else { None };
    Some(MeshVertex {
        z,
        point: frame.point,
        kappa_v: forms.kappa_v,
        epsilon: forms.epsilon.unwrap_or(f64::NAN),
        distance,
        side: if gap > 0.0 { 1 } else if gap < 0.0 { -1 } else { 0 },
        contact,
    })
}

/// Samples the Epstein–Schwarz surface over a grid. The developing map is
/// continued along the first row (ring) and then up every column (spoke).
pub fn epstein_mesh(diff: &PlanarDifferential, grid: &Grid, opts: &MeshOptions) -> Result<EpsteinMesh> {
    grid.validate()?;
    let (rows, cols) = grid.shape();
    let mut mesh = EpsteinMesh { vertices: vec![], faces: vec![], dropped_faces: 0, excluded: 0, seam_closed: false };
    if rows == 0 || cols == 0 {
        return Ok(mesh);
    }
    let mut index = vec![vec![None; cols]; rows];
    let base = grid.point(0, 0);
    let mut jet = DevelopingJet::standard(base);
    let mut first_row = Vec::with_capacity(cols);
    for j in 0..cols {
        let z = grid.point(0, j);
        if j > 0 {
            jet = continue_jet(diff, &Path::open(jet.base, vec![z]), &jet, opts.tol)?;
        }
        first_row.push(jet.clone());
    }
    if grid.periodic() {
        let back = continue_jet(diff, &Path::open(jet.base, vec![base]), &jet, opts.tol)?;
        let a = epstein_schwarz(diff, base, &first_row[0]);
        let b = epstein_schwarz(diff, base, &back);
        mesh.seam_closed = match (a, b) {
            (Ok(a), Ok(b)) => a.distance(&b) < 1e-6,
            _ => false,
        };
    }
    for (j, start) in first_row.into_iter().enumerate() {
        let mut jet = start;
        for (i, row) in index.iter_mut().enumerate() {
            let z = grid.point(i, j);
            if i > 0 {
                match continue_jet(diff, &Path::open(jet.base, vec![z]), &jet, opts.tol) {
                    Ok(next) => jet = next,
                    Err(_) => {
                        mesh.excluded += rows - i;
                        break;
                    }
                }
            }
            let v = epstein_schwarz(diff, z, &jet).ok().and_then(|f| vertex(diff, z, &f, opts));
            match v {
                Some(v) => {
                    row[j] = Some(mesh.vertices.len());
                    mesh.vertices.push(v);
                }
                None => mesh.excluded += 1,
            }
        }
    }
    let jmax = if grid.periodic() && mesh.seam_closed { cols } else { cols - 1 };
    for i in 0..rows - 1 {
        for j in 0..jmax {
            let j1 = (j + 1) % cols;
            let quad = [index[i][j], index[i + 1][j], index[i + 1][j1], index[i][j1]];
            if quad.iter().any(|v| v.is_none()) {
                continue;
            }
            let q = quad.map(|v| v.unwrap());
            let side = mesh.vertices[q[0]].side;
            if q.iter().any(|&k| mesh.vertices[k].side != side) {
                mesh.dropped_faces += 2;
                continue;
            }
            mesh.faces.push([q[0], q[1], q[2]]);
            mesh.faces.push([q[0], q[2], q[3]]);
        }
    }
    Ok(mesh)
}

/// Coordinates used for export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Model {
    HalfSpace,
    /// Unit ball with `(0, 0, 1)` at the origin.
    Ball,
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halfspace" | "half-space" | "upper" => Ok(Model::HalfSpace),
            "ball" => Ok(Model::Ball),
            _ => Err(Error::InvalidInput(format!("unknown model {s:?}"))),
        }
    }
}

impl Model {
    fn coords(&self, p: &H3Point) -> [f64; 3] {
        match self {
            Model::HalfSpace => p.coords(),
            Model::Ball => p.to_ball(),
        }
    }

    fn header(&self) -> &'static str {
        match self {
            Model::HalfSpace => "upper half-space (x, y, t)",
            Model::Ball => "unit ball, origin at half-space point (0, 0, 1)",
        }
    }
}

/// ASCII PLY with per-vertex `kappa_v`, `epsilon` and `d` (−1 when there are no zeros).
pub fn write_ply<W: Write>(mesh: &EpsteinMesh, model: Model, mut w: W) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment model {}", model.header())?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    for p in ["x", "y", "z", "kappa_v", "epsilon", "d"] {
        writeln!(w, "property double {p}")?;
    }
    writeln!(w, "element face {}", mesh.faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for v in &mesh.vertices {
        let [x, y, z] = model.coords(&v.point);
        let d = if v.distance.is_finite() { v.distance } else { -1.0 };
        writeln!(w, "{x:.12e} {y:.12e} {z:.12e} {:.12e} {:.12e} {d:.12e}", v.kappa_v, v.epsilon)?;
    }
    for f in &mesh.faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// CSV rows `curve, parameter, x, y, t` (or ball coordinates).
pub fn write_curves_csv<W: Write>(curves: &[(String, Vec<(f64, H3Point)>)], model: Model, mut w: W) -> io::Result<()> {
    match model {
        Model::HalfSpace => writeln!(w, "curve,parameter,x,y,t")?,
        Model::Ball => writeln!(w, "curve,parameter,x,y,z")?,
    }
    for (name, pts) in curves {
        for (s, p) in pts {
            let [x, y, t] = model.coords(p);
            writeln!(w, "{name},{s:.12e},{x:.12e},{y:.12e},{t:.12e}")?;
        }
    }
    Ok(())
}

/// Inverse of the natural coordinate `ζ = (2/3) z^{3/2}` of `z dz²` on the
/// principal branch.
fn from_natural(zeta: C64) -> C64 {
    (zeta * 1.5).powf(2.0 / 3.0)
}

/// Sides of the hexagon for `z dz²` with alternating vertical sides
/// `Re ζ = a, |Im ζ| ≤ b` and horizontal sides `Im ζ = b, |Re ζ| ≤ a`, rotated
/// by `e^{2πi/3}`; `n` segments per side.
pub fn hexagon_sides(a: f64, b: f64, n: usize) -> Vec<Vec<C64>> {
    let n = n.max(1);
    let v: Vec<C64> = (0..=n).map(|k| from_natural(C64::new(a, -b + 2.0 * b * k as f64 / n as f64))).collect();
    let h: Vec<C64> = (0..=n).map(|k| from_natural(C64::new(a - 2.0 * a * k as f64 / n as f64, b))).collect();
    let mut sides = Vec::with_capacity(6);
    for r in 0..3 {
        let w = C64::from_polar(1.0, TAU * r as f64 / 3.0);
        sides.push(v.iter().map(|&z| z * w).collect());
        sides.push(h.iter().map(|&z| z * w).collect());
    }
    sides
}

#[derive(Debug, Clone, Serialize)]
pub struct HexagonReport {
    /// Diameters of the images of the vertical sides.
    pub fins: [f64; 3],
    /// Diameters of the images of the horizontal sides.
    pub corners: [f64; 3],
    /// Endpoint distance over image length for each fin; 1 for a geodesic.
    pub fin_straightness: [f64; 3],
    /// Smallest fin over largest corner.
    pub ratio: f64,
    pub pass: bool,
    /// Image of the whole boundary in one developing chart, side by side.
    pub curves: Vec<Vec<(f64, H3Point)>>,
}

/// Image of the hexagon under the Epstein–Schwarz map of `z dz²`: three long
/// fins joined by small corners, approximating an ideal triangle.
pub fn hexagon_report(a: f64, b: f64, n: usize, tol: f64) -> Result<HexagonReport> {
    let diff = PlanarDifferential::real_poly(&[0.0, 1.0])?;
    let sides = hexagon_sides(a, b, n);
    let mut fins = [0.0; 3];
    let mut corners = [0.0; 3];
    let mut fin_straightness = [0.0; 3];
    for (k, side) in sides.iter().enumerate() {
        let dist = pairwise_distances(&diff, side, tol)?;
        let d = dist.iter().flatten().copied().fold(0.0, f64::max);
        if k % 2 == 0 {
            fins[k / 2] = d;
            let len: f64 = dist.iter().filter_map(|row| row.first()).sum();
            fin_straightness[k / 2] = dist[0].last().copied().unwrap_or(0.0) / len;
        } else {
            corners[k / 2] = d;
        }
    }
    let all: Vec<C64> = sides.iter().flat_map(|s| s.iter().copied()).collect();
    let frames = local_frames(&diff, all[0], &all, tol)?;
    let mut curves = Vec::with_capacity(6);
    let mut it = frames.into_iter();
    for side in &sides {
        let m = side.len() as f64 - 1.0;
        curves.push(it.by_ref().take(side.len()).enumerate().map(|(k, f)| (k as f64 / m, f.point)).collect());
    }
    let ratio = fins.iter().copied().fold(f64::INFINITY, f64::min) / corners.iter().copied().fold(0.0, f64::max);
    Ok(HexagonReport { fins, corners, fin_straightness, ratio, pass: ratio > 10.0, curves })
}

#[derive(Debug, Clone, Serialize)]
pub struct BubbleReport {
    pub radii: Vec<f64>,
    /// `√I₁₁` from finite differences of the surface, averaged in `log` over angles.
    pub sampled: Vec<f64>,
    /// `√I₁₁` from the closed form.
    pub closed: Vec<f64>,
    pub slope: f64,
    pub closed_slope: f64,
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Log-log slope of the induced metric of the surface against `|z − center|`.
pub fn bubble_slope(diff: &PlanarDifferential, center: C64, radii: &[f64], angles: usize) -> Result<BubbleReport> {
    if radii.len() < 2 || angles == 0 {
        return Err(Error::InsufficientData("bubble fit needs two radii and one angle".into()));
    }
    let mut sampled = Vec::with_capacity(radii.len());
    let mut closed = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut ls, mut lc) = (0.0, 0.0);
        for k in 0..angles {
            let z = center + C64::from_polar(r, TAU * (k as f64 + 0.5) / angles as f64);
            let fd = fd_first_form(diff, z, Some(2e-4 * r))?;
            ls += fd.first11.sqrt().ln();
            lc += fd.closed11.sqrt().ln();
        }
        sampled.push((ls / angles as f64).exp());
        closed.push((lc / angles as f64).exp());
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let slope = fit_slope(&lr, &sampled.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let closed_slope = fit_slope(&lr, &closed.iter().map(|v| v.ln()).collect::<Vec<_>>());
    Ok(BubbleReport { radii: radii.to_vec(), sampled, closed, slope, closed_slope })
}
