//! Dormand-Prince 5(4) integration of complex systems along a real parameter,
//! and adaptive Gauss-Kronrod quadrature.

use crate::error::{Error, Result};
use crate::hyp3::C64;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local error bound, relative to `max(1, |y|)`.
    pub tol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-12, initial_step: None, max_steps: 50_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = c * h;
        for i in 0..N {
            out[i] += k[i] * ch;
        }
    }
    out
}

fn max_abs<const N: usize>(y: &[C64; N]) -> f64 {
    y.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Integrates `y' = f(s, y)` from `s0` to `s1`.
///
/// `after_step` runs on every accepted step and may rescale or project the
/// state; it returns `false` to stop early.
pub fn integrate<const N: usize, F, G>(
    mut f: F,
    s0: f64,
    s1: f64,
    y0: [C64; N],
    opts: &OdeOptions,
    mut after_step: G,
) -> Result<([C64; N], OdeStats)>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
    G: FnMut(f64, &mut [C64; N]) -> bool,
{
    let span = s1 - s0;
    let mut stats = OdeStats::default();
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let len = span.abs();
    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    let mut h = match opts.initial_step {
        Some(h) => h.abs().min(len),
        None => {
            let d0 = max_abs(&y).max(1e-5);
            let d1 = max_abs(&k1).max(1e-5);
            (0.01 * d0 / d1).min(len).min(opts.tol.powf(0.2) * 0.1 * d0 / d1).max(1e-6 * len)
        }
    };
    let mut err_prev: f64 = 1e-4;
    let min_step = 1e-14 * len;
    loop {
        let remaining = (s1 - s) * dir;
        if remaining <= 1e-15 * len {
            break;
        }
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(Error::Stiffness(h));
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;
        let k2 = f(s + C2 * hs, &comb(&y, hs, &[(A21, &k1)]));
        let k3 = f(s + C3 * hs, &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + C4 * hs, &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(s + C5 * hs, &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(s + hs, &comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = comb(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(s + hs, &y_new);
        let mut err_vec = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            err_vec[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
        }
        let scale = max_abs(&y).max(max_abs(&y_new)).max(1.0);
        let err = max_abs(&err_vec) / (opts.tol * scale);
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
            if h < min_step {
                return Err(Error::Stiffness(h));
            }
            continue;
        }
        if err <= 1.0 {
            stats.accepted += 1;
            stats.last_step = hs.abs();
            s = if last { s1 } else { s + hs };
            y = y_new;
            let keep_going = after_step(s, &mut y);
            k1 = f(s, &y);
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = hs.abs() * fac.clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
            if !keep_going {
                break;
            }
        } else {
            stats.rejected += 1;
            h = hs.abs() * (0.9 * err.powf(-0.2)).max(0.2);
            if h < min_step {
                return Err(Error::Stiffness(h));
            }
        }
    }
    Ok((y, stats))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Returns the Kronrod value, the Gauss-Kronrod difference and `∫|f|`.
fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (fl, fr) = (f(c - x), f(c + x));
        let s = fl + fr;
        k += s * WGK[j];
        l1 += (fl.norm() + fr.norm()) * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), l1 * h.abs())
}

/// Adaptive Gauss-Kronrod integral of a complex function over `[a, b]`.
pub fn integrate_gk<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64) -> C64 {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = C64::new(0.0, 0.0);
    let whole = gk15(&mut f, a, b);
    let target = tol * whole.0.norm().max(tol);
    let mut budget = 50_000usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e, l1) = gk15(&mut f, lo, hi);
        let frac = (hi - lo) / (b - a);
        budget = budget.saturating_sub(1);
        if e <= target * frac.max(1e-3) || e <= 64.0 * f64::EPSILON * l1 || depth > 40 || budget == 0 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}
