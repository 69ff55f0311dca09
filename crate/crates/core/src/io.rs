//! JSON input files: differentials, flat surfaces and paths.

use crate::develop::Path;
use crate::error::{Error, Result};
use crate::hyp3::C64;
use crate::poly::CPoly;
use crate::qdiff::{Chart, Gluing, HalfTranslationSurface, PlanarDifferential};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ChartKind {
    Plane,
    Disk,
    Annulus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RationalSpec {
    num: Vec<[f64; 2]>,
    #[serde(default)]
    den: Option<Vec<[f64; 2]>>,
}

/// `{"chart": "plane"|"disk"|"annulus", "q": {"num": [[re, im], ...], "den": [...]}, "scale": [re, im]}`.
/// Coefficients are listed lowest degree first. Disk and annulus charts
/// take optional `center`, `radius`, `inner`, `outer`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentialSpec {
    chart: ChartKind,
    q: RationalSpec,
    #[serde(default)]
    scale: Option<[f64; 2]>,
    #[serde(default)]
    center: Option<[f64; 2]>,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    inner: Option<f64>,
    #[serde(default)]
    outer: Option<f64>,
}

impl DifferentialSpec {
    fn chart(&self) -> Result<Chart> {
        let center = self.center.map(|c| C64::new(c[0], c[1])).unwrap_or_default();
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidInput(format!("chart {name} must be positive and finite, got {v}")))
            }
        };
        match self.chart {
            ChartKind::Plane => Ok(Chart::Plane),
            ChartKind::Disk => Ok(Chart::Disk { center, radius: positive("radius", self.radius.unwrap_or(1.0))? }),
            ChartKind::Annulus => {
                let (Some(inner), Some(outer)) = (self.inner, self.outer) else {
                    return Err(Error::InvalidInput("annulus chart needs \"inner\" and \"outer\"".into()));
                };
                if !(inner >= 0.0 && outer > inner) {
                    return Err(Error::InvalidInput(format!("annulus radii {inner}..{outer}")));
                }
                Ok(Chart::Annulus { center, inner, outer: positive("outer", outer)? })
            }
        }
    }

    pub fn build(&self) -> Result<PlanarDifferential> {
        let chart = self.chart()?;
        let mut num = CPoly::from_pairs(&self.q.num);
        if let Some(s) = self.scale {
            let s = C64::new(s[0], s[1]);
            if s.norm() == 0.0 {
                return Err(Error::DegenerateDifferential("scale is zero".into()));
            }
            num = num.scale(&s);
        }
        let den = match &self.q.den {
            Some(d) => CPoly::from_pairs(d),
            None => CPoly::constant(C64::new(1.0, 0.0)),
        };
        PlanarDifferential::rational(num, den, chart)
    }
}

/// Polygons as vertex arrays plus the edge identification table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub polygons: Vec<Vec<[f64; 2]>>,
    pub gluings: Vec<Gluing>,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<HalfTranslationSurface> {
        let polys = self.polygons.iter().map(|p| p.iter().map(|v| C64::new(v[0], v[1])).collect()).collect();
        HalfTranslationSurface::new(polys, &self.gluings)
    }
}

/// Deserializes JSON, reporting the line and column of the first problem.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the description
        let message = match message.rfind(" at line ") {
            Some(k) => message[..k].to_string(),
            None => message,
        };
        Error::Parse { line: e.line(), column: e.column(), message }
    })
}

pub fn parse_differential(text: &str) -> Result<PlanarDifferential> {
    parse_json::<DifferentialSpec>(text)?.build()
}

pub fn parse_surface(text: &str) -> Result<HalfTranslationSurface> {
    parse_json::<SurfaceSpec>(text)?.build()
}

/// `{"base": [re, im], "waypoints": [[re, im], ...], "closed": bool}`.
pub fn parse_path(text: &str) -> Result<Path> {
    let p: Path = parse_json(text)?;
    let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
    if !finite(&p.base) || !p.waypoints.iter().all(finite) {
        return Err(Error::InvalidInput("path has a non-finite point".into()));
    }
    Ok(p)
}
