//! Families of representations with growing differentials and their
//! rescaled limits.

use super::{approximate_center, dual_length_function, CurveClass, FlatData};
use crate::develop::{monodromy_scaled, projectivize, Path, Representation};
use crate::error::{Error, Result};
use crate::hyp3::{four_point_delta, DistanceMatrix, H3Point, Moebius, ScaledMoebius, C64};
use crate::qdiff::PlanarDifferential;
use serde::Serialize;
use std::io::{self, Write};

/// `t e^{iθ} dz²` on a quotient of the plane by translations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Family {
    /// `ℂ / ⟨z ↦ z + c⟩`, generator `a`.
    Cylinder { deck: C64 },
    /// `ℂ / (ℤω₁ + ℤω₂)`, generators `a`, `b`.
    Torus { periods: [C64; 2], phase: f64 },
}

impl Family {
    pub fn square_torus() -> Self {
        Family::Torus { periods: [C64::new(1.0, 0.0), C64::new(0.0, 1.0)], phase: 0.0 }
    }

    pub fn generators(&self) -> &'static [&'static str] {
        match self {
            Family::Cylinder { .. } => &["a"],
            Family::Torus { .. } => &["a", "b"],
        }
    }

    fn periods(&self) -> [C64; 2] {
        match *self {
            Family::Cylinder { deck } => [deck, C64::new(0.0, 0.0)],
            Family::Torus { periods, .. } => periods,
        }
    }

    fn phase(&self) -> f64 {
        match *self {
            Family::Cylinder { .. } => 0.0,
            Family::Torus { phase, .. } => phase,
        }
    }

    fn coefficient(&self, t: f64) -> C64 {
        C64::from_polar(t, self.phase())
    }

    /// Closed-form holonomy of the class `(m, n)`: translation by `c` acts by
    /// `diag(e^{ikc}, e^{−ikc})` with `k = √(q/2)`.
    ///
    /// Evaluating a class directly keeps both diagonal entries, which products
    /// of scaled matrices lose to underflow once they cancel.
    pub fn element(&self, t: f64, class: &CurveClass) -> Result<ScaledMoebius> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("parameter {t} is not positive")));
        }
        let CurveClass::Lattice(m, n) = *class else {
            return Err(Error::InvalidInput(format!("class {class} is not a lattice class")));
        };
        let [w1, w2] = self.periods();
        let c = w1 * m as f64 + w2 * n as f64;
        let k = (self.coefficient(t) * 0.5).sqrt();
        let w = C64::new(0.0, 1.0) * k * c;
        let s = w.re.abs();
        let m = Moebius { a: (w - s).exp(), b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: (-w - s).exp() };
        Ok(ScaledMoebius { m, log_scale: s })
    }

    pub fn rep(&self, t: f64) -> Result<Representation> {
        let mut rep = Representation::new();
        for (letter, class) in ['a', 'b'].into_iter().zip([CurveClass::Lattice(1, 0), CurveClass::Lattice(0, 1)]).take(self.generators().len()) {
            rep.insert(letter, self.element(t, &class)?);
        }
        Ok(rep)
    }

    /// Holonomy from the developing ODE along the deck translations.
    pub fn rep_ode(&self, t: f64, tol: f64) -> Result<Representation> {
        let diff = PlanarDifferential::polynomial(&[self.coefficient(t)])?;
        let mut rep = Representation::new();
        for (letter, c) in ['a', 'b'].into_iter().zip(self.periods()).take(self.generators().len()) {
            let base = C64::new(0.0, 0.0);
            rep.insert(letter, monodromy_scaled(&diff, &Path::translation(base, c), tol)?);
        }
        Ok(rep)
    }

    /// Lattice class of a word by exponent sums.
    pub fn word_class(&self, word: &str) -> Result<CurveClass> {
        let (mut m, mut n) = (0i64, 0i64);
        for ch in word.chars() {
            let sign = if ch.is_uppercase() { -1 } else { 1 };
            match ch.to_ascii_lowercase() {
                'a' => m += sign,
                'b' if self.generators().len() == 2 => n += sign,
                _ => return Err(Error::InvalidInput(format!("letter {ch:?} is not a generator"))),
            }
        }
        Ok(CurveClass::Lattice(m, n))
    }

    /// Dual-tree heights of the words for `e^{iθ} dz²`.
    pub fn limit_heights(&self, words: &[&str]) -> Result<Vec<f64>> {
        let classes: Vec<CurveClass> = words.iter().map(|w| self.word_class(w)).collect::<Result<_>>()?;
        let data = FlatData::Lattice { periods: self.periods(), phase: self.phase() };
        dual_length_function(&data, &classes)?.vector(&classes)
    }
}

/// One parameter of a survey.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyRow {
    pub t: f64,
    /// `log(|tr ρ(w)| + 2)`.
    pub traces: Vec<f64>,
    pub projective: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `R(ρ)` at the computed center.
    pub scale: f64,
    /// Four-point constant of the orbit metric divided by the scale.
    pub delta: f64,
    /// Rounding level of `delta`: a multiple of ε times the largest rescaled distance.
    pub delta_floor: f64,
    /// `max |projective − projectivized heights|`.
    pub sup_error: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSurvey {
    pub family: Family,
    pub words: Vec<String>,
    pub heights: Vec<f64>,
    pub rows: Vec<SurveyRow>,
    /// `sup_error` at the largest parameter.
    pub final_sup_error: f64,
    /// Log-log slope of `delta` against `t` over the rows where `delta` is
    /// above its rounding floor; NaN with fewer than two such rows.
    pub delta_slope: f64,
    pub delta_resolved: usize,
    /// Largest relative spread of `ℓ/√t` over the top decade, among words
    /// with positive height.
    pub length_drift: f64,
}

/// Runs `f` over the parameters on scoped threads, keeping the input order.
fn parallel_map<T: Send>(params: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = params.iter().map(|&t| s.spawn(move || f(t))).collect();
        handles.into_iter().map(|h| h.join().expect("survey worker panicked")).collect()
    })
}

fn survey_row(family: &Family, words: &[&str], hproj: &[f64], base: &H3Point, t: f64) -> Result<SurveyRow> {
    let rep = family.rep(t)?;
    let classes: Vec<CurveClass> = words.iter().map(|w| family.word_class(w)).collect::<Result<_>>()?;
    let elems: Vec<ScaledMoebius> = classes.iter().map(|c| family.element(t, c)).collect::<Result<_>>()?;
    let traces: Vec<f64> = elems.iter().map(|g| g.trace_coordinate()).collect();
    let projective = projectivize(&traces);
    let lengths = elems.iter().map(|g| g.translation_length()).collect();
    let sup_error = projective.iter().zip(hproj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut row = SurveyRow { t, traces, projective, lengths, scale: f64::NAN, delta: f64::NAN, delta_floor: f64::NAN, sup_error, flag: None };
    match approximate_center(&rep, family.generators(), None, 1.05) {
        Ok(c) if c.scale > 0.0 => {
            row.scale = c.scale;
            let mut orbit = vec![CurveClass::Lattice(0, 0)];
            orbit.extend(classes);
            let dm = DistanceMatrix::from_fn(orbit.len(), |i, j| {
                let (CurveClass::Lattice(a, b), CurveClass::Lattice(p, q)) = (&orbit[i], &orbit[j]) else { unreachable!() };
                family.element(t, &CurveClass::Lattice(p - a, q - b)).map(|g| g.displacement(base)).unwrap_or(f64::NAN)
            });
            let dm = dm.scaled(1.0 / c.scale);
            row.delta_floor = 256.0 * f64::EPSILON * dm.max_entry().max(1.0);
            match four_point_delta(&dm) {
                Ok(d) => row.delta = d,
                Err(e) => row.flag = Some(e.to_string()),
            }
        }
        Ok(_) => row.flag = Some("zero scale".into()),
        Err(e) => row.flag = Some(e.to_string()),
    }
    Ok(row)
}

/// Least-squares line `y = slope x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Projective convergence of trace coordinates to the dual-tree heights.
pub fn ms_limit_survey(family: &Family, words: &[&str], params: &[f64], base: H3Point) -> Result<LimitSurvey> {
    if params.is_empty() || words.is_empty() {
        return Err(Error::InsufficientData("survey needs words and parameters".into()));
    }
    let heights = family.limit_heights(words)?;
    let hproj = projectivize(&heights);
    let rows: Vec<SurveyRow> = parallel_map(params, |t| {
        survey_row(family, words, &hproj, &base, t).unwrap_or_else(|e| SurveyRow {
            t,
            traces: vec![],
            projective: vec![],
            lengths: vec![],
            scale: f64::NAN,
            delta: f64::NAN,
            delta_floor: f64::NAN,
            sup_error: f64::NAN,
            flag: Some(e.to_string()),
        })
    });
    let last = rows.iter().max_by(|a, b| a.t.total_cmp(&b.t)).expect("nonempty");
    let final_sup_error = last.sup_error;
    let good: Vec<&SurveyRow> = rows.iter().filter(|r| r.delta > r.delta_floor && r.delta.is_finite()).collect();
    let delta_resolved = good.len();
    let delta_slope = if good.len() >= 2 {
        let lx: Vec<f64> = good.iter().map(|r| r.t.ln()).collect();
        let ly: Vec<f64> = good.iter().map(|r| r.delta.ln()).collect();
        fit_line(&lx, &ly).0
    } else {
        f64::NAN
    };
    let tmax = last.t;
    let top: Vec<&SurveyRow> = rows.iter().filter(|r| r.t >= tmax / 10.0 && r.lengths.len() == words.len()).collect();
    let mut length_drift: f64 = 0.0;
    for (k, h) in heights.iter().enumerate() {
        if *h <= 0.0 || top.is_empty() {
            continue;
        }
        let ratios: Vec<f64> = top.iter().map(|r| r.lengths[k] / r.t.sqrt()).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        length_drift = length_drift.max((hi - lo) / mean);
    }
    Ok(LimitSurvey {
        family: *family,
        words: words.iter().map(|w| w.to_string()).collect(),
        heights,
        rows,
        final_sup_error,
        delta_slope,
        delta_resolved,
        length_drift,
    })
}

fn csv_field(x: f64) -> String {
    format!("{x:.17e}")
}

impl LimitSurvey {
    /// Columns `t, trace:<w>..., length:<w>..., scale, delta`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut head = vec!["t".to_string()];
        head.extend(self.words.iter().map(|x| format!("trace:{x}")));
        head.extend(self.words.iter().map(|x| format!("length:{x}")));
        head.extend(["scale".into(), "delta".into()]);
        writeln!(w, "{}", head.join(","))?;
        for r in &self.rows {
            let mut f = vec![csv_field(r.t)];
            f.extend(r.traces.iter().map(|&x| csv_field(x)));
            f.extend(r.lengths.iter().map(|&x| csv_field(x)));
            f.extend([csv_field(r.scale), csv_field(r.delta)]);
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "words": self.words,
            "heights": self.heights,
            "final_sup_error": self.final_sup_error,
            "delta_slope": self.delta_slope,
            "delta_resolved": self.delta_resolved,
            "length_drift": self.length_drift,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    pub lengths: Vec<f64>,
    /// `log(1 + max_w |tr ρ(w)|)`.
    pub log_trace: f64,
}

/// Linear envelopes in `√t`.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthSurvey {
    pub family: Family,
    pub words: Vec<String>,
    pub rows: Vec<GrowthRow>,
    /// Fit `log(1 + max|tr|) ≈ A √t + B`.
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|residual| / value` of that fit.
    pub max_relative_residual: f64,
    /// `c ≤ ℓ/√t ≤ C`, with `c` over words of positive height.
    pub lower: f64,
    pub upper: f64,
    /// Largest `ℓ` among words of zero height; bounded when the lower bound
    /// genuinely needs a transverse class.
    pub horizontal_max: f64,
}

pub fn growth_survey(family: &Family, words: &[&str], params: &[f64]) -> Result<GrowthSurvey> {
    if params.len() < 2 || words.is_empty() {
        return Err(Error::InsufficientData("growth survey needs words and two parameters".into()));
    }
    let heights = family.limit_heights(words)?;
    let rows = parallel_map(params, |t| -> Result<GrowthRow> {
        let mut lengths = Vec::with_capacity(words.len());
        let mut log_trace: f64 = 0.0;
        for w in words {
            let g = family.element(t, &family.word_class(w)?)?;
            lengths.push(g.translation_length());
            log_trace = log_trace.max(g.log1p_abs_trace());
        }
        Ok(GrowthRow { t, lengths, log_trace })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.t.sqrt()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.log_trace).collect();
    let (slope, intercept) = fit_line(&x, &y);
    let max_relative_residual = x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).abs() / b.abs()).fold(0.0, f64::max);
    let (mut lower, mut upper, mut horizontal_max) = (f64::INFINITY, 0.0f64, 0.0f64);
    for r in &rows {
        for (l, h) in r.lengths.iter().zip(&heights) {
            let ratio = l / r.t.sqrt();
            upper = upper.max(ratio);
            if *h > 0.0 {
                lower = lower.min(ratio);
            } else {
                horizontal_max = horizontal_max.max(*l);
            }
        }
    }
    Ok(GrowthSurvey {
        family: *family,
        words: words.iter().map(|w| w.to_string()).collect(),
        rows,
        slope,
        intercept,
        max_relative_residual,
        lower,
        upper,
        horizontal_max,
    })
}

impl GrowthSurvey {
    /// Columns `t, length:<w>..., log_trace`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut head = vec!["t".to_string()];
        head.extend(self.words.iter().map(|x| format!("length:{x}")));
        head.push("log_trace".into());
        writeln!(w, "{}", head.join(","))?;
        for r in &self.rows {
            let mut f = vec![csv_field(r.t)];
            f.extend(r.lengths.iter().map(|&x| csv_field(x)));
            f.push(csv_field(r.log_trace));
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "words": self.words,
            "slope": self.slope,
            "intercept": self.intercept,
            "max_relative_residual": self.max_relative_residual,
            "lower": self.lower,
            "upper": self.upper,
            "ratio": self.upper / self.lower,
            "horizontal_max": self.horizontal_max,
        })
    }
}

/// `10^{lo}, ..., 10^{hi}` with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cylinder() -> Family {
        Family::Cylinder { deck: c(0.0, 1.0) }
    }

    #[test]
    fn closed_form_matches_ode() {
        for fam in [cylinder(), Family::square_torus(), Family::Torus { periods: [c(1.0, 0.3), c(-0.2, 1.0)], phase: 0.5 }] {
            for t in [1.0, 100.0, 1e4] {
                let a = fam.rep(t).unwrap();
                let b = fam.rep_ode(t, 1e-12).unwrap();
                for w in ["a", "ab", "aab", "b"].iter().filter(|w| fam.word_class(w).is_ok()) {
                    let (x, y) = (a.evaluate(w).unwrap(), b.evaluate(w).unwrap());
                    let (lx, ly) = (x.log1p_abs_trace(), y.log1p_abs_trace());
                    assert!((lx - ly).abs() < 1e-8 * (1.0 + lx), "{fam:?} {t} {w}: {lx} {ly}");
                }
            }
        }
    }

    #[test]
    fn cylinder_traces_and_lengths() {
        let fam = cylinder();
        for t in [1.0, 100.0, 1e6] {
            let rep = fam.rep(t).unwrap();
            let k = (t / 2.0).sqrt();
            for n in 1..=5 {
                let g = rep.evaluate(&"a".repeat(n)).unwrap();
                assert!((g.translation_length() - n as f64 * (2.0 * t).sqrt()).abs() < 1e-9 * n as f64 * (2.0 * t).sqrt());
                let expect = if n as f64 * k < 30.0 { (2.0 * (n as f64 * k).cosh() + 2.0).ln() } else { n as f64 * k };
                assert!((g.trace_coordinate() - expect).abs() < 1e-9 * expect);
            }
        }
        let horizontal = Family::Cylinder { deck: c(1.0, 0.0) };
        for t in [100.0, 1e6] {
            let g = horizontal.rep(t).unwrap().evaluate("a").unwrap();
            assert!((g.m.trace() * g.log_scale.exp() - 2.0 * (t / 2.0).sqrt().cos()).norm() < 1e-9);
            assert!(g.translation_length() < 1e-6);
        }
    }

    #[test]
    fn cylinder_survey_converges() {
        let words = ["a", "aa", "aaa", "aaaa", "aaaaa"];
        let s = ms_limit_survey(&cylinder(), &words, &log_grid(2.0, 6.0, 2), H3Point::new(c(1.0, 0.0), 1.0).unwrap()).unwrap();
        assert_eq!(s.heights, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(s.final_sup_error < 1e-3, "{}", s.final_sup_error);
        assert!(s.length_drift < 1e-3);
        let first = &s.rows[0];
        let last = s.rows.last().unwrap();
        assert!(last.delta / first.delta < 0.15);
        assert!(first.delta > first.delta_floor && s.delta_resolved <= 2);
        assert!(s.rows.iter().all(|r| (r.scale - (2.0 * r.t).sqrt()).abs() < 1e-6 * r.scale));
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + s.rows.len());
        assert!(text.starts_with("t,trace:a,"));
    }

    #[test]
    fn torus_survey_limits() {
        let words = ["a", "b", "ab"];
        let s = ms_limit_survey(&Family::square_torus(), &words, &log_grid(2.0, 6.0, 1), H3Point::new(c(1.0, 0.0), 1.0).unwrap()).unwrap();
        assert_eq!(s.heights, vec![0.0, 1.0, 1.0]);
        let last = s.rows.last().unwrap();
        let k = (last.t / 2.0).sqrt();
        let horizontal = (2.0 * k.cos().abs() + 2.0).ln() / last.traces[1];
        assert!((last.projective[0] - horizontal).abs() < 1e-12);
        assert!((last.sup_error - horizontal).abs() < 1e-9);
        assert!(s.length_drift < 1e-3);
        assert!(s.rows.iter().filter(|r| r.t >= 1e3).all(|r| r.delta <= r.delta_floor));
    }

    #[test]
    fn growth_envelopes() {
        let g = growth_survey(&cylinder(), &["a"], &log_grid(2.0, 6.0, 2)).unwrap();
        assert!((g.lower - 2f64.sqrt()).abs() < 1e-9 && (g.upper - 2f64.sqrt()).abs() < 1e-9);
        assert!(g.max_relative_residual < 1e-2);
        let h = growth_survey(&Family::Cylinder { deck: c(1.0, 0.0) }, &["a"], &log_grid(2.0, 6.0, 2)).unwrap();
        assert!(h.horizontal_max < 1e-6 && h.lower.is_infinite());
        let tor = growth_survey(&Family::square_torus(), &["a", "b", "ab"], &log_grid(2.0, 6.0, 2)).unwrap();
        assert!(tor.upper / tor.lower < 3.0 && tor.lower > 0.0);
    }

    #[test]
    fn epstein_point_is_a_center_for_the_cylinder() {
        let t = 1e4;
        let fam = cylinder();
        let rep = fam.rep_ode(t, 1e-12).unwrap();
        let diff = PlanarDifferential::polynomial(&[c(t, 0.0)]).unwrap();
        let jet = crate::develop::DevelopingJet::standard(c(0.0, 0.0));
        let ep = crate::epstein::epstein_schwarz(&diff, c(0.0, 0.0), &jet).unwrap();
        let cen = approximate_center(&rep, &["a"], None, 1.05).unwrap();
        let (ratio, ok) = super::super::center_ratio(&rep, &["a"], &ep.point, &cen, 1.05).unwrap();
        assert!(ok, "{ratio} {cen:?}");
        // flat deck scale √t, Lipschitz constant √2
        assert!(cen.scale <= 2f64.sqrt() * t.sqrt() * (1.0 + 1e-9));
    }
}
