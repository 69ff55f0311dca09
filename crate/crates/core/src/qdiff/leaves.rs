use crate::error::Result;
use crate::hyp3::C64;
use crate::ode::{integrate, OdeOptions};

#[derive(Debug, Clone, Copy)]
pub struct LeafOptions {
    /// Direction `e^{iθ}`: 0 traces horizontal leaves, π/2 vertical ones.
    pub angle: f64,
    /// Flat length to trace; negative traces backwards.
    pub length: f64,
    /// Spacing of recorded samples in flat arclength.
    pub spacing: f64,
    pub tol: f64,
}

impl Default for LeafOptions {
    fn default() -> Self {
        LeafOptions { angle: std::f64::consts::FRAC_PI_2, length: 1.0, spacing: 0.01, tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct LeafTrace {
    /// `(flat arclength, point)`.
    pub points: Vec<(f64, C64)>,
    pub complete: bool,
}

fn nearest_root(v: C64, reference: C64) -> C64 {
    let s = v.sqrt();
    if (s - reference).norm() <= (s + reference).norm() {
        s
    } else {
        -s
    }
}

/// Traces a leaf of the direction field `e^{iθ}/√f`, unit speed in `|f|^{1/2}|dz|`.
///
/// `field` returns `f` and `f'`. The branch of `√f` is carried as part of the
/// state and re-projected after each step. Tracing stops early when `stop`
/// returns true.
pub fn trace_leaf<F, S>(field: F, z0: C64, branch: Option<C64>, opts: &LeafOptions, stop: S) -> Result<LeafTrace>
where
    F: Fn(C64) -> (C64, C64),
    S: Fn(C64) -> bool,
{
    let dir = C64::from_polar(1.0, opts.angle);
    let (f0, _) = field(z0);
    let s0 = match branch {
        Some(b) => nearest_root(f0, b),
        None => f0.sqrt(),
    };
    let rhs = |_t: f64, y: &[C64; 2]| {
        let (_, df) = field(y[0]);
        let dz = dir / y[1];
        [dz, df / (y[1] * 2.0) * dz]
    };
    let mut y = [z0, s0];
    let mut points = vec![(0.0, z0)];
    let n = (opts.length.abs() / opts.spacing).ceil().max(1.0) as usize;
    let h = opts.length / n as f64;
    let ode = OdeOptions::with_tol(opts.tol);
    for k in 0..n {
        let t0 = h * k as f64;
        let (y1, _) = integrate(rhs, t0, t0 + h, y, &ode, |_, st: &mut [C64; 2]| {
            let (f, _) = field(st[0]);
            st[1] = nearest_root(f, st[1]);
            true
        })?;
        y = y1;
        points.push((t0 + h, y[0]));
        if stop(y[0]) {
            return Ok(LeafTrace { points, complete: false });
        }
    }
    Ok(LeafTrace { points, complete: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_lines() {
        let opts = LeafOptions { angle: std::f64::consts::FRAC_PI_2, length: 2.0, spacing: 0.5, tol: 1e-12 };
        let tr = trace_leaf(|_| (C64::new(4.0, 0.0), C64::new(0.0, 0.0)), C64::new(1.0, 1.0), None, &opts, |_| false).unwrap();
        let end = tr.points.last().unwrap().1;
        // |√4 dz| = 2|dz|: flat length 2 is Euclidean length 1, vertical
        assert!((end - C64::new(1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn vertical_leaf_of_z_is_flat_straight() {
        // natural coordinate ζ = (2/3) z^{3/2}; vertical leaves keep Re ζ fixed
        let opts = LeafOptions { angle: std::f64::consts::FRAC_PI_2, length: 3.0, spacing: 0.1, tol: 1e-12 };
        let z0 = C64::new(4.0, 0.5);
        let tr = trace_leaf(|z| (z, C64::new(1.0, 0.0)), z0, None, &opts, |_| false).unwrap();
        let zeta = |z: C64| z.powf(1.5) * (2.0 / 3.0);
        for (s, z) in &tr.points {
            let d = zeta(*z) - zeta(z0);
            assert!(d.re.abs() < 1e-10);
            assert!((d.im.abs() - s).abs() < 1e-10);
        }
    }
}
