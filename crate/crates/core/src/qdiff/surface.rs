use crate::error::{Error, Result};
use crate::hyp3::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Identification of edge `edge` with edge `to` by `z -> sign * z + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gluing {
    pub edge: [usize; 2],
    pub to: [usize; 2],
    pub sign: i8,
    pub offset: [f64; 2],
}

/// A point given in the coordinates of one polygon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub poly: usize,
    pub z: C64,
}

impl SurfacePoint {
    pub fn new(poly: usize, z: C64) -> Self {
        SurfacePoint { poly, z }
    }
}

/// A vertex of the surface: its corners `(polygon, vertex index)` in cyclic order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexClass {
    pub corners: Vec<(usize, usize)>,
    pub angle: f64,
    /// Order of the zero: the cone angle is `(k + 2)π`.
    pub order: i64,
}

impl VertexClass {
    pub fn is_singular(&self) -> bool {
        self.order != 0
    }
}

/// The map from one side of an edge to the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EdgeMap {
    pub poly: usize,
    pub edge: usize,
    pub sign: f64,
    pub offset: C64,
}

impl EdgeMap {
    pub fn apply(&self, z: C64) -> C64 {
        z * self.sign + self.offset
    }
}

/// Convex polygons glued along edges by half-translations.
#[derive(Debug, Clone)]
pub struct HalfTranslationSurface {
    polygons: Vec<Vec<C64>>,
    partner: Vec<Vec<EdgeMap>>,
    vertices: Vec<VertexClass>,
    corner_vertex: Vec<Vec<usize>>,
    scale: f64,
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

impl HalfTranslationSurface {
    pub fn new(polygons: Vec<Vec<C64>>, gluings: &[Gluing]) -> Result<Self> {
        if polygons.is_empty() {
            return Err(Error::InvalidSurface("no polygons".into()));
        }
        let scale = polygons.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = 1e-10 * scale;
        let mut area = 0.0;
        for (p, poly) in polygons.iter().enumerate() {
            let n = poly.len();
            if n < 3 {
                return Err(Error::InvalidSurface(format!("polygon {p} has fewer than 3 vertices")));
            }
            for j in 0..n {
                let a = poly[j];
                let b = poly[(j + 1) % n];
                let c = poly[(j + 2) % n];
                if cross(b - a, c - b) <= 0.0 {
                    return Err(Error::InvalidSurface(format!("polygon {p} is not strictly convex and counterclockwise")));
                }
                area += 0.5 * cross(a, b);
            }
        }
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidSurface("nonpositive area".into()));
        }
        let mut partner: Vec<Vec<Option<EdgeMap>>> = polygons.iter().map(|p| vec![None; p.len()]).collect();
        for g in gluings {
            let [p, e] = g.edge;
            let [q, f] = g.to;
            if p >= polygons.len() || q >= polygons.len() || e >= polygons[p].len() || f >= polygons[q].len() {
                return Err(Error::InvalidSurface(format!("gluing {g:?} refers to a missing edge")));
            }
            if g.sign != 1 && g.sign != -1 {
                return Err(Error::InvalidSurface("gluing sign must be +1 or -1".into()));
            }
            let s = g.sign as f64;
            let c = C64::new(g.offset[0], g.offset[1]);
            let (v0, v1) = (polygons[p][e], polygons[p][(e + 1) % polygons[p].len()]);
            let (w0, w1) = (polygons[q][f], polygons[q][(f + 1) % polygons[q].len()]);
            if ((v1 - v0).norm() - (w1 - w0).norm()).abs() > tol {
                return Err(Error::InvalidSurface(format!("edges {:?} and {:?} differ in length", g.edge, g.to)));
            }
            if (v0 * s + c - w1).norm() > tol || (v1 * s + c - w0).norm() > tol {
                return Err(Error::InvalidSurface(format!("gluing {:?} -> {:?} does not match its offset", g.edge, g.to)));
            }
            if partner[p][e].is_some() || partner[q][f].is_some() {
                return Err(Error::InvalidSurface(format!("edge {:?} or {:?} glued twice", g.edge, g.to)));
            }
            partner[p][e] = Some(EdgeMap { poly: q, edge: f, sign: s, offset: c });
            // inverse: z -> s (z - c)
            partner[q][f] = Some(EdgeMap { poly: p, edge: e, sign: s, offset: -c * s });
        }
        let partner: Vec<Vec<EdgeMap>> = partner
            .into_iter()
            .enumerate()
            .map(|(p, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(e, m)| m.ok_or_else(|| Error::InvalidSurface(format!("edge [{p},{e}] is not glued"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut surf = HalfTranslationSurface {
            polygons,
            partner,
            vertices: vec![],
            corner_vertex: vec![],
            scale,
        };
        surf.build_vertices()?;
        Ok(surf)
    }

    fn build_vertices(&mut self) -> Result<()> {
        let mut corner_vertex: Vec<Vec<usize>> = self.polygons.iter().map(|p| vec![usize::MAX; p.len()]).collect();
        let mut vertices = Vec::new();
        for p in 0..self.polygons.len() {
            for j in 0..self.polygons[p].len() {
                if corner_vertex[p][j] != usize::MAX {
                    continue;
                }
                let id = vertices.len();
                let mut corners = Vec::new();
                let mut angle = 0.0;
                let (mut cp, mut cj) = (p, j);
                loop {
                    if corner_vertex[cp][cj] != usize::MAX {
                        if (cp, cj) == (p, j) {
                            break;
                        }
                        return Err(Error::InvalidSurface("inconsistent vertex cycle".into()));
                    }
                    corner_vertex[cp][cj] = id;
                    corners.push((cp, cj));
                    angle += self.corner_angle(cp, cj);
                    let n = self.polygons[cp].len();
                    let m = self.partner[cp][(cj + n - 1) % n];
                    // v_j is the end of edge j-1 and lands on the start of the partner edge
                    cp = m.poly;
                    cj = m.edge;
                }
                let order = (angle / PI).round() as i64 - 2;
                if (angle - (order + 2) as f64 * PI).abs() > 1e-8 || order < 0 {
                    return Err(Error::InvalidSurface(format!("cone angle {angle} is not (k+2)π with k >= 0")));
                }
                vertices.push(VertexClass { corners, angle, order });
            }
        }
        self.vertices = vertices;
        self.corner_vertex = corner_vertex;
        Ok(())
    }

    /// Interior angle at vertex `j` of polygon `p`.
    pub fn corner_angle(&self, p: usize, j: usize) -> f64 {
        let poly = &self.polygons[p];
        let n = poly.len();
        let out = poly[(j + 1) % n] - poly[j];
        let back = poly[(j + n - 1) % n] - poly[j];
        (back / out).arg().rem_euclid(2.0 * PI)
    }

    pub fn polygons(&self) -> &[Vec<C64>] {
        &self.polygons
    }

    pub fn vertices(&self) -> &[VertexClass] {
        &self.vertices
    }

    pub fn vertex_of_corner(&self, p: usize, j: usize) -> usize {
        self.corner_vertex[p][j]
    }

    pub(crate) fn partner(&self, p: usize, e: usize) -> EdgeMap {
        self.partner[p][e]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn area(&self) -> f64 {
        self.polygons
            .iter()
            .map(|poly| {
                let n = poly.len();
                (0..n).map(|j| 0.5 * cross(poly[j], poly[(j + 1) % n])).sum::<f64>()
            })
            .sum()
    }

    /// Euler characteristic from the cone angles: `Σ k = 4g − 4`.
    pub fn genus(&self) -> Option<usize> {
        let total: i64 = self.vertices.iter().map(|v| v.order).sum();
        if (total + 4) % 4 == 0 && total >= -4 {
            Some(((total + 4) / 4) as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, pt: &SurfacePoint) -> bool {
        let Some(poly) = self.polygons.get(pt.poly) else { return false };
        let n = poly.len();
        (0..n).all(|j| cross(poly[(j + 1) % n] - poly[j], pt.z - poly[j]) >= -1e-12 * self.scale)
    }

    /// Relabels polygons by a permutation, `new[perm[i]] = old[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.polygons.len();
        let mut polys = vec![vec![]; n];
        for (i, p) in self.polygons.iter().enumerate() {
            polys[perm[i]] = p.clone();
        }
        HalfTranslationSurface::new(polys, &self.gluings_permuted(perm, 1.0))
    }

    /// Image under `z -> -z` applied to every polygon.
    pub fn negated(&self) -> Result<Self> {
        let polys: Vec<Vec<C64>> = self.polygons.iter().map(|p| p.iter().map(|z| -z).collect()).collect();
        let ident: Vec<usize> = (0..self.polygons.len()).collect();
        HalfTranslationSurface::new(polys, &self.gluings_permuted(&ident, -1.0))
    }

    fn gluings_permuted(&self, perm: &[usize], flip: f64) -> Vec<Gluing> {
        let mut out = Vec::new();
        for (p, row) in self.partner.iter().enumerate() {
            for (e, m) in row.iter().enumerate() {
                if (p, e) < (m.poly, m.edge) {
                    // conjugating by z -> -z negates the offset
                    let off = m.offset * flip;
                    out.push(Gluing {
                        edge: [perm[p], e],
                        to: [perm[m.poly], m.edge],
                        sign: m.sign as i8,
                        offset: [off.re, off.im],
                    });
                }
            }
        }
        out
    }

    pub fn gluings(&self) -> Vec<Gluing> {
        let ident: Vec<usize> = (0..self.polygons.len()).collect();
        self.gluings_permuted(&ident, 1.0)
    }

    /// Unit square torus.
    pub fn square_torus() -> Self {
        let sq = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let g = [
            Gluing { edge: [0, 0], to: [0, 2], sign: 1, offset: [0.0, 1.0] },
            Gluing { edge: [0, 1], to: [0, 3], sign: 1, offset: [-1.0, 0.0] },
        ];
        HalfTranslationSurface::new(vec![sq], &g).expect("valid torus")
    }

    /// Three unit squares in an L; genus 2 with one cone point of angle 6π.
    pub fn l_shape() -> Self {
        let sq = |x: f64, y: f64| {
            vec![C64::new(x, y), C64::new(x + 1.0, y), C64::new(x + 1.0, y + 1.0), C64::new(x, y + 1.0)]
        };
        // A = [0,1]^2, B = [1,2]x[0,1], C = [0,1]x[1,2]
        let polys = vec![sq(0.0, 0.0), sq(1.0, 0.0), sq(0.0, 1.0)];
        // horizontal: A right <-> B left, B right <-> A left; C right <-> C left
        // vertical: A top <-> C bottom, C top <-> A bottom; B top <-> B bottom
        let g = [
            Gluing { edge: [0, 1], to: [1, 3], sign: 1, offset: [0.0, 0.0] },
            Gluing { edge: [1, 1], to: [0, 3], sign: 1, offset: [-2.0, 0.0] },
            Gluing { edge: [2, 1], to: [2, 3], sign: 1, offset: [-1.0, 0.0] },
            Gluing { edge: [0, 2], to: [2, 0], sign: 1, offset: [0.0, 0.0] },
            Gluing { edge: [2, 2], to: [0, 0], sign: 1, offset: [0.0, -2.0] },
            Gluing { edge: [1, 2], to: [1, 0], sign: 1, offset: [0.0, -1.0] },
        ];
        HalfTranslationSurface::new(polys, &g).expect("valid L surface")
    }

    /// Regular octagon with opposite sides identified by translations.
    pub fn regular_octagon(side: f64) -> Self {
        let r = side / (2.0 * (PI / 8.0).sin());
        let verts: Vec<C64> = (0..8).map(|k| C64::from_polar(r, PI / 8.0 + PI / 4.0 * k as f64 - PI / 2.0)).collect();
        let mut g = Vec::new();
        for e in 0..4 {
            let f = e + 4;
            // translation taking v_e to v_{f+1}
            let off = verts[(f + 1) % 8] - verts[e];
            g.push(Gluing { edge: [0, e], to: [0, f], sign: 1, offset: [off.re, off.im] });
        }
        HalfTranslationSurface::new(vec![verts], &g).expect("valid octagon")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_has_one_regular_vertex() {
        let t = HalfTranslationSurface::square_torus();
        assert_eq!(t.vertices().len(), 1);
        assert!((t.vertices()[0].angle - 2.0 * PI).abs() < 1e-12);
        assert!(!t.vertices()[0].is_singular());
        assert_eq!(t.genus(), Some(1));
        assert!((t.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l_shape_has_one_six_pi_vertex() {
        let l = HalfTranslationSurface::l_shape();
        assert_eq!(l.vertices().len(), 1);
        assert!((l.vertices()[0].angle - 6.0 * PI).abs() < 1e-12);
        assert_eq!(l.vertices()[0].order, 4);
        assert_eq!(l.genus(), Some(2));
    }

    #[test]
    fn octagon_is_genus_two() {
        let o = HalfTranslationSurface::regular_octagon(1.0);
        assert_eq!(o.vertices().len(), 1);
        assert!((o.vertices()[0].angle - 6.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_gluing() {
        let sq = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let g = [
            Gluing { edge: [0, 0], to: [0, 2], sign: 1, offset: [0.0, 1.5] },
            Gluing { edge: [0, 1], to: [0, 3], sign: 1, offset: [-1.0, 0.0] },
        ];
        assert!(HalfTranslationSurface::new(vec![sq.clone()], &g).is_err());
        let g = [Gluing { edge: [0, 0], to: [0, 2], sign: 1, offset: [0.0, 1.0] }];
        assert!(HalfTranslationSurface::new(vec![sq], &g).is_err());
    }

    #[test]
    fn relabel_and_negate_roundtrip() {
        let l = HalfTranslationSurface::l_shape();
        let r = l.relabeled(&[2, 0, 1]).unwrap();
        assert_eq!(r.vertices()[0].order, 4);
        let n = l.negated().unwrap();
        assert_eq!(n.vertices()[0].order, 4);
    }
}
