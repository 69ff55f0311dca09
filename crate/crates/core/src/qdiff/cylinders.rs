use super::surface::HalfTranslationSurface;
use crate::error::{Error, Result};
use crate::hyp3::C64;
use serde::Serialize;
use std::collections::HashMap;

/// A maximal cylinder of closed parallel geodesics.
#[derive(Debug, Clone, Serialize)]
pub struct FlatCylinder {
    /// Direction of the core geodesics, in `[0, π)`.
    pub direction: f64,
    pub circumference: f64,
    pub width: f64,
    /// Edges `(polygon, edge)` crossed by one core curve.
    pub crossings: Vec<(usize, usize)>,
    /// Developed displacement of the core curve, in its start polygon.
    pub holonomy: C64,
}

#[derive(Debug, Clone, Copy)]
pub struct CylinderOptions {
    pub max_circumference: f64,
    /// Tolerance for a first return to coincide with its start.
    pub return_tol: f64,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        CylinderOptions { max_circumference: 10.0, return_tol: 1e-9 }
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

enum Exit {
    Edge { edge: usize, point: C64, t: f64, s: f64 },
    Vertex,
    Stuck,
}

struct Flow<'a> {
    surf: &'a HalfTranslationSurface,
    tol: f64,
}

impl Flow<'_> {
    fn exit(&self, poly: usize, z: C64, d: C64) -> Exit {
        let pv = &self.surf.polygons()[poly];
        let n = pv.len();
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..n {
            let a = pv[f];
            let e = pv[(f + 1) % n] - a;
            let den = cross(d, e);
            // leaving through f means d points to the right of e
            if cross(e, d) >= 0.0 || den.abs() < 1e-300 {
                continue;
            }
            let t = cross(a - z, e) / den;
            if t <= self.tol {
                continue;
            }
            let s = dot(z + d * t - a, e) / e.norm_sqr();
            if !(-1e-9..=1.0 + 1e-9).contains(&s) {
                continue;
            }
            if best.is_none_or(|(_, bt, _)| t < bt) {
                best = Some((f, t, s));
            }
        }
        match best {
            None => Exit::Stuck,
            Some((f, t, s)) => {
                let len = (pv[(f + 1) % n] - pv[f]).norm();
                if s * len < self.tol || (1.0 - s) * len < self.tol {
                    Exit::Vertex
                } else {
                    Exit::Edge { edge: f, point: z + d * t, t, s }
                }
            }
        }
    }
}

/// Canonical side of an edge pair and the parameter along it.
fn canonical(surf: &HalfTranslationSurface, p: usize, f: usize, s: f64) -> ((usize, usize), f64) {
    let m = surf.partner(p, f);
    if (p, f) <= (m.poly, m.edge) {
        ((p, f), s)
    } else {
        ((m.poly, m.edge), 1.0 - s)
    }
}

struct Piece {
    pair: (usize, usize),
    lo: f64,
    hi: f64,
    periodic: Option<Orbit>,
}

struct Orbit {
    length: f64,
    hits: Vec<((usize, usize), f64)>,
    crossings: Vec<(usize, usize)>,
    holonomy: C64,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Cylinders in each direction of `angles` with circumference at most the bound.
pub fn detect_cylinders(surf: &HalfTranslationSurface, angles: &[f64], opts: &CylinderOptions) -> Result<Vec<FlatCylinder>> {
    if !(opts.max_circumference > 0.0) {
        return Err(Error::InvalidInput("max circumference must be positive".into()));
    }
    let mut out = Vec::new();
    for &theta in angles {
        out.extend(cylinders_in_direction(surf, theta.rem_euclid(std::f64::consts::PI), opts));
    }
    Ok(out)
}

fn cylinders_in_direction(surf: &HalfTranslationSurface, theta: f64, opts: &CylinderOptions) -> Vec<FlatCylinder> {
    let flow = Flow { surf, tol: 1e-12 * surf.scale() };
    let u = C64::from_polar(1.0, theta);
    let max_len = opts.max_circumference;
    // transversal edge pairs
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (p, pv) in surf.polygons().iter().enumerate() {
        let n = pv.len();
        for f in 0..n {
            let e = pv[(f + 1) % n] - pv[f];
            let m = surf.partner(p, f);
            if (p, f) <= (m.poly, m.edge) && cross(e, u).abs() > 1e-12 * e.norm() {
                pairs.push((p, f));
            }
        }
    }
    // cuts from separatrices: (param, from a singular vertex)
    let mut cuts: HashMap<(usize, usize), Vec<(f64, bool)>> = pairs.iter().map(|&k| (k, vec![(0.0, true), (1.0, true)])).collect();
    for (vid, v) in surf.vertices().iter().enumerate() {
        let _ = vid;
        for &(p, j) in &v.corners {
            let pv = &surf.polygons()[p];
            let outv = pv[(j + 1) % pv.len()] - pv[j];
            let corner = surf.corner_angle(p, j);
            for d in [u, -u] {
                let a = (d / outv).arg().rem_euclid(2.0 * std::f64::consts::PI);
                if a <= 1e-12 || a >= corner - 1e-12 {
                    continue;
                }
                let (mut poly, mut z, mut dir, mut len) = (p, pv[j], d, 0.0);
                loop {
                    match flow.exit(poly, z, dir) {
                        Exit::Edge { edge, point, t, s } => {
                            len += t;
                            if len > max_len {
                                break;
                            }
                            let (key, sp) = canonical(surf, poly, edge, s);
                            if let Some(c) = cuts.get_mut(&key) {
                                c.push((sp, v.is_singular()));
                            }
                            let m = surf.partner(poly, edge);
                            poly = m.poly;
                            z = m.apply(point);
                            dir *= m.sign;
                        }
                        Exit::Vertex | Exit::Stuck => break,
                    }
                }
            }
        }
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut piece_index: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut cut_kind: Vec<Option<bool>> = Vec::new();
    for &pair in &pairs {
        let mut c = cuts.remove(&pair).unwrap_or_default();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        // merge coincident cuts, singular wins
        let mut merged: Vec<(f64, bool)> = Vec::new();
        for (s, sing) in c {
            match merged.last_mut() {
                Some(last) if (s - last.0).abs() < 1e-12 => last.1 |= sing,
                _ => merged.push((s, sing)),
            }
        }
        let mut ids = Vec::new();
        for w in merged.windows(2) {
            let (lo, hi) = (w[0].0, w[1].0);
            if hi - lo < 1e-10 {
                continue;
            }
            ids.push(pieces.len());
            cut_kind.push(Some(w[0].1));
            pieces.push(Piece { pair, lo, hi, periodic: None });
        }
        piece_index.insert(pair, ids);
    }
    for piece in pieces.iter_mut() {
        piece.periodic = first_return(surf, &flow, piece.pair, 0.5 * (piece.lo + piece.hi), u, max_len, opts.return_tol);
    }
    let locate = |pieces: &[Piece], pair: (usize, usize), s: f64| -> Option<usize> {
        piece_index.get(&pair)?.iter().copied().find(|&i| pieces[i].lo <= s && s <= pieces[i].hi)
    };
    let mut uf = UnionFind((0..pieces.len()).collect());
    for i in 0..pieces.len() {
        let Some(orbit) = &pieces[i].periodic else { continue };
        for &(pair, s) in &orbit.hits {
            if let Some(k) = locate(&pieces, pair, s) {
                uf.union(i, k);
            }
        }
    }
    // neighbors separated only by a regular vertex belong to the same cylinder
    for ids in piece_index.values() {
        for w in ids.windows(2) {
            let (a, b) = (w[0], w[1]);
            let regular_cut = cut_kind[b] == Some(false) && (pieces[a].hi - pieces[b].lo).abs() < 1e-12;
            if let (true, Some(oa), Some(ob)) = (regular_cut, &pieces[a].periodic, &pieces[b].periodic) {
                if (oa.length - ob.length).abs() < 1e-8 * oa.length.max(1.0) {
                    uf.union(a, b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..pieces.len() {
        if pieces[i].periodic.is_some() {
            groups.entry(uf.find(i)).or_default().push(i);
        }
    }
    let mut result: Vec<FlatCylinder> = Vec::new();
    let mut roots: Vec<usize> = groups.keys().copied().collect();
    roots.sort_unstable();
    for r in roots {
        let ids = &groups[&r];
        let rep = pieces[ids[0]].periodic.as_ref().expect("periodic");
        let mut transverse = 0.0;
        for &i in ids {
            let (p, f) = pieces[i].pair;
            let pv = &surf.polygons()[p];
            let e = pv[(f + 1) % pv.len()] - pv[f];
            transverse += (pieces[i].hi - pieces[i].lo) * cross(e, u).abs();
        }
        let n = rep.hits.len() as f64;
        result.push(FlatCylinder {
            direction: theta,
            circumference: rep.length,
            width: transverse / n,
            crossings: rep.crossings.clone(),
            holonomy: rep.holonomy,
        });
    }
    result
}

fn first_return(surf: &HalfTranslationSurface, flow: &Flow, pair: (usize, usize), s0: f64, u: C64, max_len: f64, tol: f64) -> Option<Orbit> {
    let (p0, f0) = pair;
    let pv = &surf.polygons()[p0];
    let n = pv.len();
    let a = pv[f0];
    let e = pv[(f0 + 1) % n] - a;
    let start = a + e * s0;
    // start on the side where the flow enters the polygon
    let (mut poly, mut z, mut dir) = if cross(e, u) > 0.0 {
        (p0, start, u)
    } else if cross(e, -u) > 0.0 {
        (p0, start, -u)
    } else {
        return None;
    };
    let (sp0, sz0, sd0) = (poly, z, dir);
    let mut len = 0.0;
    let mut hits = Vec::new();
    let mut crossings = Vec::new();
    let mut developed = C64::new(0.0, 0.0);
    let mut sign = 1.0;
    loop {
        match flow.exit(poly, z, dir) {
            Exit::Edge { edge, point, t, s } => {
                len += t;
                developed += dir * (t * sign);
                if len > max_len {
                    return None;
                }
                hits.push(canonical(surf, poly, edge, s));
                crossings.push((poly, edge));
                let m = surf.partner(poly, edge);
                poly = m.poly;
                z = m.apply(point);
                dir *= m.sign;
                sign *= m.sign;
                if poly == sp0 && (z - sz0).norm() <= tol * surf.scale() && (dir - sd0).norm() < 1e-9 {
                    return Some(Orbit { length: len, hits, crossings, holonomy: developed });
                }
            }
            Exit::Vertex | Exit::Stuck => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn opts(c: f64) -> CylinderOptions {
        CylinderOptions { max_circumference: c, ..Default::default() }
    }

    #[test]
    fn torus_vertical() {
        let t = HalfTranslationSurface::square_torus();
        let c = detect_cylinders(&t, &[PI / 2.0], &opts(3.0)).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].circumference - 1.0).abs() < 1e-12);
        assert!((c[0].width - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_slope_two() {
        let t = HalfTranslationSurface::square_torus();
        let c = detect_cylinders(&t, &[2f64.atan()], &opts(3.0)).unwrap();
        assert_eq!(c.len(), 1, "{c:?}");
        assert!((c[0].circumference - 5f64.sqrt()).abs() < 1e-9);
        assert!((c[0].width - 1.0 / 5f64.sqrt()).abs() < 1e-9);
        assert!((c[0].holonomy.norm() - 5f64.sqrt()).abs() < 1e-9);
        // too short a bound finds nothing
        assert!(detect_cylinders(&t, &[2f64.atan()], &opts(2.0)).unwrap().is_empty());
    }

    #[test]
    fn irrational_direction_has_no_short_cylinder() {
        let t = HalfTranslationSurface::square_torus();
        let c = detect_cylinders(&t, &[(2f64.sqrt()).atan()], &opts(5.0)).unwrap();
        assert!(c.is_empty());
    }

    /// Widths from sampling heights: a horizontal line at height y in the
    /// octagon closes up after crossing a set of edges; group by circumference.
    #[test]
    fn octagon_horizontal() {
        let s = 1.0;
        let o = HalfTranslationSurface::regular_octagon(s);
        let mut c = detect_cylinders(&o, &[0.0], &opts(10.0)).unwrap();
        c.sort_by(|a, b| a.circumference.total_cmp(&b.circumference));
        assert_eq!(c.len(), 2, "{c:?}");
        let r2 = 2f64.sqrt();
        assert!((c[0].circumference - s * (1.0 + r2)).abs() < 1e-9);
        assert!((c[1].circumference - s * (2.0 + r2)).abs() < 1e-9);
        assert!((c[0].width / c[1].width - r2).abs() < 1e-9);
        let area: f64 = c.iter().map(|x| x.width * x.circumference).sum();
        assert!((area - o.area()).abs() < 1e-9);
    }

    #[test]
    fn l_shape_horizontal_fills_area() {
        let l = HalfTranslationSurface::l_shape();
        let c = detect_cylinders(&l, &[0.0, PI / 2.0, PI / 4.0], &opts(6.0)).unwrap();
        for dir in [0.0, PI / 2.0, PI / 4.0] {
            let area: f64 = c.iter().filter(|x| (x.direction - dir).abs() < 1e-12).map(|x| x.width * x.circumference).sum();
            assert!((area - 3.0).abs() < 1e-9, "direction {dir}: {area}");
        }
    }
}
