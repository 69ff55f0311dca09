use super::surface::{HalfTranslationSurface, SurfacePoint};
use crate::error::{Error, Result};
use crate::hyp3::C64;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// A straight piece of a flat geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct FlatSegment {
    pub start: SurfacePoint,
    pub end: SurfacePoint,
    /// Displacement in the coordinates of the start polygon.
    pub vector: C64,
    pub length: f64,
    /// Edges `(polygon, edge)` crossed, in order.
    pub crossings: Vec<(usize, usize)>,
    /// Singular vertex at the end of the piece, if any.
    pub end_vertex: Option<usize>,
    /// Angles on the two sides at `end_vertex` between this piece and the next.
    pub end_angles: Option<(f64, f64)>,
}

/// A closed geodesic in the class of an edge-crossing word.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedGeodesic {
    pub length: f64,
    /// Translation part of the developed holonomy of the word.
    pub holonomy: C64,
    /// Vertical and horizontal measures of the geodesic.
    pub height: f64,
    pub width: f64,
    /// Developed corner points of the taut representative.
    pub points: Vec<C64>,
    /// Number of bends at cone points.
    pub bends: usize,
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Source,
    Target,
    Vertex(usize),
}

#[derive(Debug, Clone, Copy)]
enum Loc {
    Vertex(usize),
    Copies([Option<(usize, C64)>; 2]),
}

#[derive(Debug, Clone, Copy)]
struct Map {
    sign: f64,
    shift: C64,
}

impl Map {
    fn apply(&self, z: C64) -> C64 {
        z * self.sign + self.shift
    }
}

#[derive(Debug, Clone)]
struct Window {
    poly: usize,
    entry: usize,
    map: Map,
    lo: C64,
    hi: C64,
    depth: usize,
    parent: Option<usize>,
    crossed: (usize, usize),
}

#[derive(Debug, Clone)]
struct Hit {
    target: Node,
    length: f64,
    start_poly: usize,
    start_z: C64,
    start_corner: Option<usize>,
    vector: C64,
    end_poly: usize,
    end_z: C64,
    end_corner: Option<usize>,
    end_dir: C64,
    crossings: Vec<(usize, usize)>,
}

struct Queued(f64, usize);

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

struct Search<'a> {
    surf: &'a HalfTranslationSurface,
    tol: f64,
    target: Loc,
    max_depth: usize,
}

fn in_window(lo: C64, hi: C64, u: C64, tol: f64) -> bool {
    let n = u.norm();
    cross(lo, u) >= -tol * n && cross(u, hi) >= -tol * n
}

fn unit(z: C64) -> C64 {
    z / z.norm()
}

/// Distance from the origin to the part of segment `[a, b]` seen inside the cone `[lo, hi]`.
fn window_distance(a: C64, b: C64, lo: C64, hi: C64) -> f64 {
    let hit = |d: C64| {
        let e = b - a;
        let den = cross(d, e);
        if den.abs() < 1e-300 {
            return None;
        }
        let t = cross(a, e) / den;
        Some(d * t)
    };
    let (Some(p), Some(q)) = (hit(lo), hit(hi)) else {
        return a.norm().min(b.norm());
    };
    let e = q - p;
    let l2 = e.norm_sqr();
    if l2 == 0.0 {
        return p.norm();
    }
    let t = (-(p.re * e.re + p.im * e.im) / l2).clamp(0.0, 1.0);
    (p + e * t).norm()
}

impl<'a> Search<'a> {
    fn locate(&self, pt: &SurfacePoint) -> Result<Loc> {
        if !self.surf.contains(pt) {
            return Err(Error::InvalidInput(format!("point {:?} is not in its polygon", pt)));
        }
        let poly = &self.surf.polygons()[pt.poly];
        let n = poly.len();
        for j in 0..n {
            if (pt.z - poly[j]).norm() <= self.tol {
                return Ok(Loc::Vertex(self.surf.vertex_of_corner(pt.poly, j)));
            }
        }
        let mut copies = [Some((pt.poly, pt.z)), None];
        for f in 0..n {
            let a = poly[f];
            let b = poly[(f + 1) % n];
            if cross(b - a, pt.z - a).abs() <= self.tol * (b - a).norm() {
                let m = self.surf.partner(pt.poly, f);
                copies[1] = Some((m.poly, m.apply(pt.z)));
            }
        }
        Ok(Loc::Copies(copies))
    }

    fn is_node_vertex(&self, v: usize, source: Node) -> Option<Node> {
        if let Loc::Vertex(t) = self.target {
            if t == v {
                return Some(Node::Target);
            }
        }
        if self.surf.vertices()[v].is_singular() && source != Node::Vertex(v) {
            Some(Node::Vertex(v))
        } else {
            None
        }
    }

    fn target_points_in(&self, poly: usize) -> Vec<C64> {
        match self.target {
            Loc::Copies(c) => c.iter().flatten().filter(|(p, _)| *p == poly).map(|(_, z)| *z).collect(),
            Loc::Vertex(_) => vec![],
        }
    }

    /// Straight segments from a source to every node within `radius`.
    fn hits(&self, from: Loc, node: Node, radius: f64, truncated: &mut bool) -> Vec<Hit> {
        let surf = self.surf;
        let mut hits = Vec::new();
        let mut starts: Vec<(usize, C64, Option<usize>)> = Vec::new();
        match from {
            Loc::Vertex(v) => {
                for &(p, j) in &surf.vertices()[v].corners {
                    starts.push((p, surf.polygons()[p][j], Some(j)));
                }
            }
            Loc::Copies(c) => {
                for (p, z) in c.iter().flatten() {
                    starts.push((*p, *z, None));
                }
            }
        }
        for (sp, s, corner) in starts {
            let poly = &surf.polygons()[sp];
            let n = poly.len();
            let make_hit = |target: Node, t: C64, end_corner: Option<usize>, end_poly: usize, end_z: C64, map: Map, crossings: Vec<(usize, usize)>| {
                let v = t - s;
                Hit {
                    target,
                    length: v.norm(),
                    start_poly: sp,
                    start_z: s,
                    start_corner: corner,
                    vector: v,
                    end_poly,
                    end_z,
                    end_corner,
                    end_dir: v * map.sign,
                    crossings,
                }
            };
            let ident = Map { sign: 1.0, shift: C64::new(0.0, 0.0) };
            // targets inside the start polygon
            for j in 0..n {
                if Some(j) == corner {
                    continue;
                }
                if let Some(t) = self.is_node_vertex(surf.vertex_of_corner(sp, j), node) {
                    let h = make_hit(t, poly[j], Some(j), sp, poly[j], ident, vec![]);
                    if h.length > self.tol && h.length <= radius {
                        hits.push(h);
                    }
                }
            }
            if node != Node::Target {
                for t in self.target_points_in(sp) {
                    let h = make_hit(Node::Target, t, None, sp, t, ident, vec![]);
                    if h.length <= radius {
                        hits.push(h);
                    }
                }
            }
            let mut arena: Vec<Window> = Vec::new();
            let mut heap = BinaryHeap::new();
            let push = |arena: &mut Vec<Window>, heap: &mut BinaryHeap<Queued>, truncated: &mut bool, from_poly: usize, map: Map, f: usize, lo: C64, hi: C64, depth: usize, parent: Option<usize>| {
                let fp = &surf.polygons()[from_poly];
                let a = map.apply(fp[f]) - s;
                let b = map.apply(fp[(f + 1) % fp.len()]) - s;
                let d = window_distance(a, b, lo, hi);
                if d > radius {
                    return;
                }
                if depth >= self.max_depth {
                    *truncated = true;
                    return;
                }
                let m = surf.partner(from_poly, f);
                // D' = D o g^{-1}, g^{-1}(z) = sign (z - offset)
                let nm = Map { sign: map.sign * m.sign, shift: map.shift - m.offset * (map.sign * m.sign) };
                arena.push(Window { poly: m.poly, entry: m.edge, map: nm, lo, hi, depth: depth + 1, parent, crossed: (from_poly, f) });
                heap.push(Queued(d, arena.len() - 1));
            };
            for f in 0..n {
                if let Some(j) = corner {
                    if f == j || f == (j + n - 1) % n {
                        continue;
                    }
                }
                let a = poly[f] - s;
                let b = poly[(f + 1) % n] - s;
                if cross(a, b) <= self.tol * a.norm() * b.norm() {
                    continue;
                }
                push(&mut arena, &mut heap, truncated, sp, ident, f, unit(a), unit(b), 0, None);
            }
            while let Some(Queued(_, wi)) = heap.pop() {
                let w = arena[wi].clone();
                let qp = &surf.polygons()[w.poly];
                let m = qp.len();
                let crossings = || {
                    let mut out = vec![];
                    let mut cur = Some(wi);
                    while let Some(k) = cur {
                        out.push(arena[k].crossed);
                        cur = arena[k].parent;
                    }
                    out.reverse();
                    out
                };
                for j in 0..m {
                    if let Some(t) = self.is_node_vertex(surf.vertex_of_corner(w.poly, j), node) {
                        let tv = w.map.apply(qp[j]);
                        let u = tv - s;
                        if u.norm() > self.tol && u.norm() <= radius && in_window(w.lo, w.hi, u, 1e-12) {
                            hits.push(make_hit(t, tv, Some(j), w.poly, qp[j], w.map, crossings()));
                        }
                    }
                }
                if node != Node::Target {
                    for t in self.target_points_in(w.poly) {
                        let tv = w.map.apply(t);
                        let u = tv - s;
                        if u.norm() <= radius && in_window(w.lo, w.hi, u, 1e-12) {
                            hits.push(make_hit(Node::Target, tv, None, w.poly, t, w.map, crossings()));
                        }
                    }
                }
                for f in 0..m {
                    if f == w.entry {
                        continue;
                    }
                    let a = w.map.apply(qp[f]) - s;
                    let b = w.map.apply(qp[(f + 1) % m]) - s;
                    if cross(a, b) <= 0.0 {
                        continue;
                    }
                    let (ua, ub) = (unit(a), unit(b));
                    let lo = if cross(w.lo, ua) > 0.0 { ua } else { w.lo };
                    let hi = if cross(ub, w.hi) > 0.0 { ub } else { w.hi };
                    if cross(lo, hi) <= 1e-14 {
                        continue;
                    }
                    push(&mut arena, &mut heap, truncated, w.poly, w.map, f, lo, hi, w.depth, Some(wi));
                }
            }
        }
        hits
    }

    /// Angular position of direction `d` in corner `(p, j)` measured around its vertex.
    fn angular_position(&self, v: usize, p: usize, j: usize, d: C64) -> f64 {
        let vc = &self.surf.vertices()[v];
        let mut offset = 0.0;
        for &(cp, cj) in &vc.corners {
            if (cp, cj) == (p, j) {
                break;
            }
            offset += self.surf.corner_angle(cp, cj);
        }
        let poly = &self.surf.polygons()[p];
        let out = poly[(j + 1) % poly.len()] - poly[j];
        let a = (d / out).arg().rem_euclid(2.0 * PI);
        let a = if a > self.surf.corner_angle(p, j) + 1e-9 && a > PI { 0.0 } else { a };
        offset + a
    }
}

fn radius_cap(surf: &HalfTranslationSurface) -> f64 {
    surf.polygons()
        .iter()
        .map(|p| {
            let mut d: f64 = 0.0;
            for a in p {
                for b in p {
                    d = d.max((a - b).norm());
                }
            }
            d
        })
        .sum::<f64>()
        * 1.01
}

/// Shortest path between two points, with unfolding depth 16.
pub fn flat_geodesic(surf: &HalfTranslationSurface, p: &SurfacePoint, q: &SurfacePoint) -> Result<Vec<FlatSegment>> {
    flat_geodesic_with_depth(surf, p, q, 16)
}

pub fn flat_geodesic_with_depth(surf: &HalfTranslationSurface, p: &SurfacePoint, q: &SurfacePoint, max_depth: usize) -> Result<Vec<FlatSegment>> {
    let tol = 1e-12 * surf.scale();
    let mut search = Search { surf, tol, target: Loc::Vertex(usize::MAX), max_depth };
    let src = search.locate(p)?;
    search.target = search.locate(q)?;
    let same = match (src, search.target) {
        (Loc::Vertex(a), Loc::Vertex(b)) => a == b,
        (Loc::Copies(a), Loc::Copies(b)) => a
            .iter()
            .flatten()
            .any(|(pa, za)| b.iter().flatten().any(|(pb, zb)| pa == pb && (za - zb).norm() <= tol)),
        _ => false,
    };
    if same {
        return Ok(vec![]);
    }
    let nv = surf.vertices().len();
    let idx = |n: Node| match n {
        Node::Source => nv,
        Node::Target => nv + 1,
        Node::Vertex(v) => v,
    };
    let mut dist = vec![f64::INFINITY; nv + 2];
    let mut pred: Vec<Option<(Node, Hit)>> = vec![None; nv + 2];
    let mut done = vec![false; nv + 2];
    dist[idx(Node::Source)] = 0.0;
    let cap = radius_cap(surf);
    let mut truncated = false;
    loop {
        let mut best: Option<(Node, f64)> = None;
        for n in (0..nv).map(Node::Vertex).chain([Node::Source, Node::Target]) {
            let i = idx(n);
            if !done[i] && dist[i].is_finite() && best.is_none_or(|(_, d)| dist[i] < d) {
                best = Some((n, dist[i]));
            }
        }
        let Some((u, du)) = best else { break };
        if u == Node::Target {
            break;
        }
        done[idx(u)] = true;
        let from = match u {
            Node::Source => src,
            Node::Vertex(v) => Loc::Vertex(v),
            Node::Target => unreachable!(),
        };
        let radius = (dist[idx(Node::Target)] - du).min(cap);
        for h in search.hits(from, u, radius, &mut truncated) {
            let i = idx(h.target);
            if done[i] || h.target == Node::Source {
                continue;
            }
            let nd = du + h.length;
            if nd < dist[i] - 1e-15 * nd {
                dist[i] = nd;
                pred[i] = Some((u, h));
            }
        }
    }
    if !dist[idx(Node::Target)].is_finite() {
        return Err(if truncated { Error::DepthExceeded(max_depth) } else { Error::NotFound("no path between the points".into()) });
    }
    let mut chain: Vec<Hit> = Vec::new();
    let mut cur = Node::Target;
    while cur != Node::Source {
        let (prev, h) = pred[idx(cur)].clone().expect("predecessor");
        chain.push(h);
        cur = prev;
    }
    chain.reverse();
    let mut out: Vec<FlatSegment> = Vec::new();
    for (k, h) in chain.iter().enumerate() {
        let (end_vertex, end_angles) = match (h.target, chain.get(k + 1)) {
            (Node::Vertex(v), Some(next)) => {
                let total = surf.vertices()[v].angle;
                let back = search.angular_position(v, h.end_poly, h.end_corner.unwrap_or(0), -h.end_dir);
                let fwd = search.angular_position(v, next.start_poly, next.start_corner.unwrap_or(0), next.vector);
                let a = (fwd - back).rem_euclid(total);
                (Some(v), Some((a, total - a)))
            }
            (Node::Vertex(v), None) => (Some(v), None),
            _ => (None, None),
        };
        out.push(FlatSegment {
            start: SurfacePoint::new(h.start_poly, h.start_z),
            end: SurfacePoint::new(h.end_poly, h.end_z),
            vector: h.vector,
            length: h.length,
            crossings: h.crossings.clone(),
            end_vertex,
            end_angles,
        });
    }
    Ok(out)
}

/// Developed corridor of an edge word starting in polygon `start`.
struct Corridor {
    /// Portals as `(left, right)` in developed coordinates.
    portals: Vec<(C64, C64)>,
    closing: Map,
}

fn corridor(surf: &HalfTranslationSurface, start: usize, word: &[usize]) -> Result<Corridor> {
    if word.is_empty() {
        return Err(Error::InvalidInput("empty edge word".into()));
    }
    let mut poly = start;
    let mut map = Map { sign: 1.0, shift: C64::new(0.0, 0.0) };
    let mut portals = Vec::with_capacity(word.len());
    for &e in word {
        let pv = &surf.polygons()[poly];
        if e >= pv.len() {
            return Err(Error::InvalidInput(format!("edge {e} not in polygon {poly}")));
        }
        let right = map.apply(pv[e]);
        let left = map.apply(pv[(e + 1) % pv.len()]);
        portals.push((left, right));
        let m = surf.partner(poly, e);
        map = Map { sign: map.sign * m.sign, shift: map.shift - m.offset * (map.sign * m.sign) };
        poly = m.poly;
    }
    if poly != start {
        return Err(Error::InvalidInput("edge word does not close up".into()));
    }
    Ok(Corridor { portals, closing: map })
}

/// Shortest path from `a` to `b` through the portals, by the funnel algorithm.
fn funnel(a: C64, b: C64, portals: &[(C64, C64)]) -> Vec<C64> {
    let mut pts: Vec<(C64, C64)> = Vec::with_capacity(portals.len() + 2);
    pts.push((a, a));
    pts.extend_from_slice(portals);
    pts.push((b, b));
    let area = |o: C64, p: C64, q: C64| cross(p - o, q - o);
    let mut path = vec![a];
    let (mut apex, mut left, mut right) = (a, a, a);
    let (mut li, mut ri) = (0usize, 0usize);
    let mut i = 1;
    while i < pts.len() {
        let (pl, pr) = pts[i];
        // tighten right side
        if area(apex, right, pr) >= 0.0 {
            if apex == right || area(apex, left, pr) < 0.0 {
                right = pr;
                ri = i;
            } else {
                path.push(left);
                apex = left;
                right = apex;
                ri = li;
                i = li + 1;
                continue;
            }
        }
        if area(apex, left, pl) <= 0.0 {
            if apex == left || area(apex, right, pl) > 0.0 {
                left = pl;
                li = i;
            } else {
                path.push(right);
                apex = right;
                left = apex;
                li = ri;
                i = ri + 1;
                continue;
            }
        }
        i += 1;
    }
    if path.last() != Some(&b) {
        path.push(b);
    }
    path
}

fn polyline_length(pts: &[C64]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Closed geodesic freely homotopic to the loop crossing the edges of `word`,
/// given as edge indices local to each successive polygon.
pub fn geodesic_in_class(surf: &HalfTranslationSurface, start: usize, word: &[usize]) -> Result<ClosedGeodesic> {
    let c = corridor(surf, start, word)?;
    if c.closing.sign < 0.0 {
        return Err(Error::InvalidInput("word has half-turn holonomy".into()));
    }
    let (l0, r0) = c.portals[0];
    let inner = &c.portals[1..];
    let eval = |t: f64| {
        let x = r0 + (l0 - r0) * t;
        let y = c.closing.apply(x);
        let path = funnel(x, y, inner);
        (polyline_length(&path), path)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (eval(x1).0, eval(x2).0);
    for _ in 0..90 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2).0;
        }
    }
    let cands = [0.0, 1.0, 0.5 * (lo + hi)];
    let (length, points) = cands
        .iter()
        .map(|&t| eval(t))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("candidates");
    let height = points.windows(2).map(|w| (w[1] - w[0]).im.abs()).sum();
    let width = points.windows(2).map(|w| (w[1] - w[0]).re.abs()).sum();
    Ok(ClosedGeodesic {
        length,
        holonomy: c.closing.shift,
        height,
        width,
        bends: points.len().saturating_sub(2),
        points,
    })
}
