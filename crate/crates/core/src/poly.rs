//! Dense univariate polynomials and rational functions over a number ring.

use crate::hyp3::C64;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

pub type CPoly = Poly<C64>;
pub type QComplex = Complex<BigRational>;
pub type QPoly = Poly<QComplex>;

impl<T: Clone + Num> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: T) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `z`.
    pub fn z() -> Self {
        Poly::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = T::one();
        for c in self.coeffs.iter().skip(1) {
            out.push(c.clone() * k.clone());
            k = k + T::one();
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: &T) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// `p(z + a)`.
    pub fn taylor_shift(&self, a: &T) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let t = c[j + 1].clone() * a.clone();
                c[j] = c[j].clone() + t;
            }
        }
        Poly::new(c)
    }

    /// Order of vanishing at `z = 0`.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }
}

impl<T: Clone + Num> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, r: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(r.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + r.coeff(k)).collect())
    }
}

impl<T: Clone + Num> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, r: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(r.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - r.coeff(k)).collect())
    }
}

impl<T: Clone + Num> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, r: &Poly<T>) -> Poly<T> {
        if self.is_zero() || r.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + r.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in r.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}

impl<T: Clone + Num + Neg<Output = T>> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

/// A quotient `num / den` kept unreduced.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn<T> {
    pub num: Poly<T>,
    pub den: Poly<T>,
}

impl<T: Clone + Num> RationalFn<T> {
    pub fn new(num: Poly<T>, den: Poly<T>) -> Self {
        RationalFn { num, den }
    }

    pub fn poly(p: Poly<T>) -> Self {
        RationalFn { num: p, den: Poly::constant(T::one()) }
    }

    pub fn eval(&self, z: &T) -> T {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn derivative(&self) -> Self {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RationalFn { num: n, den: &self.den * &self.den }
    }

    pub fn add(&self, r: &Self) -> Self {
        RationalFn {
            num: &(&self.num * &r.den) + &(&r.num * &self.den),
            den: &self.den * &r.den,
        }
    }

    pub fn sub(&self, r: &Self) -> Self {
        RationalFn {
            num: &(&self.num * &r.den) - &(&r.num * &self.den),
            den: &self.den * &r.den,
        }
    }

    pub fn mul(&self, r: &Self) -> Self {
        RationalFn { num: &self.num * &r.num, den: &self.den * &r.den }
    }

    pub fn scale(&self, s: &T) -> Self {
        RationalFn { num: self.num.scale(s), den: self.den.clone() }
    }

    /// Equality as functions, by cross-multiplication.
    pub fn same_function(&self, r: &Self) -> bool {
        (&self.num * &r.den) == (&r.num * &self.den)
    }

    /// Coefficient of `(z - a)^order` in the Laurent expansion at `a`.
    pub fn laurent_coefficient(&self, a: &T, order: i64) -> T {
        let n = self.num.taylor_shift(a);
        let d = self.den.taylor_shift(a);
        let m = d.valuation().expect("nonzero denominator");
        // n/d = (n/z^m) / (d/z^m); expand as a power series up to the needed order
        let target = order + m as i64;
        if target < 0 {
            return T::zero();
        }
        let target = target as usize;
        let d0 = d.coeff(m);
        let mut inv = vec![T::zero(); target + 1];
        inv[0] = T::one() / d0.clone();
        for k in 1..=target {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + d.coeff(m + j) * inv[k - j].clone();
            }
            inv[k] = T::zero() - s / d0.clone();
        }
        let mut out = T::zero();
        for j in 0..=target {
            out = out + n.coeff(j) * inv[target - j].clone();
        }
        out
    }

    /// Pole order at `a` (zero if regular).
    pub fn pole_order(&self, a: &T) -> usize {
        let n = self.num.taylor_shift(a).valuation().unwrap_or(usize::MAX);
        let d = self.den.taylor_shift(a).valuation().unwrap_or(0);
        d.saturating_sub(n)
    }
}

/// The correction term `q''/(2q) - (5/8)(q'/q)^2` as a single fraction.
///
/// With `q = N/D`, `A = N'D - ND'` and `B = ND`, this equals
/// `(4(A'B - AB') - A^2) / (8 B^2)`.
pub fn beta_rational<T: Clone + Num>(q: &RationalFn<T>) -> RationalFn<T> {
    let (n, d) = (&q.num, &q.den);
    let a = &(&n.derivative() * d) - &(n * &d.derivative());
    let b = n * d;
    let four = T::one() + T::one() + T::one() + T::one();
    let eight = four.clone() + four.clone();
    let wr = &(&a.derivative() * &b) - &(&a * &b.derivative());
    let num = &wr.scale(&four) - &(&a * &a);
    let den = (&b * &b).scale(&eight);
    RationalFn::new(num, den)
}

pub fn q_int(n: i64) -> QComplex {
    Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
}

pub fn q_frac(n: i64, d: i64) -> QComplex {
    Complex::new(BigRational::new(BigInt::from(n), BigInt::from(d)), BigRational::zero())
}

pub fn qpoly_from_ints(c: &[i64]) -> QPoly {
    Poly::new(c.iter().map(|&x| q_int(x)).collect())
}

impl CPoly {
    pub fn from_pairs(c: &[[f64; 2]]) -> Self {
        Poly::new(c.iter().map(|p| C64::new(p[0], p[1])).collect())
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Value and first two derivatives.
    pub fn eval2(&self, z: C64) -> (C64, C64, C64) {
        let mut p = C64::zero();
        let mut dp = C64::zero();
        let mut ddp = C64::zero();
        for c in self.coeffs.iter().rev() {
            ddp = ddp * z + dp * 2.0;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    /// Roots with multiplicities, clustered.
    pub fn roots(&self) -> Vec<(C64, usize)> {
        let Some(deg) = self.degree() else { return vec![] };
        let v = self.valuation().unwrap_or(0);
        let mut out = Vec::new();
        if v > 0 {
            out.push((C64::zero(), v));
        }
        if deg == v {
            return out;
        }
        let reduced = Poly::new(self.coeffs[v..].to_vec());
        let simple = reduced.aberth();
        out.extend(reduced.cluster(simple));
        out
    }

    fn aberth(&self) -> Vec<C64> {
        let n = self.degree().unwrap();
        let lead = self.coeffs[n];
        let monic = self.scale(&(C64::one() / lead));
        // Cauchy-type radius for the initial circle
        let r = monic.coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let radius = (1.0 + r).min(
            monic.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(k, c)| 2.0 * c.norm().powf(1.0 / (n - k) as f64))
                .fold(0.0, f64::max)
                .max(1e-8),
        );
        let mut z: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
            .collect();
        let dp = monic.derivative();
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let p = monic.eval(&z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = p / dp.eval(&z[i]);
                let s: C64 = (0..n).filter(|&j| j != i).map(|j| C64::one() / (z[i] - z[j])).sum();
                let w = ratio / (C64::one() - ratio * s);
                if w.is_finite() {
                    z[i] -= w;
                    max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-16 {
                break;
            }
        }
        z
    }

    fn cluster(&self, roots: Vec<C64>) -> Vec<(C64, usize)> {
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = 1e-5 * scale;
        let mut used = vec![false; roots.len()];
        let mut out = Vec::new();
        for i in 0..roots.len() {
            if used[i] {
                continue;
            }
            let mut members = vec![roots[i]];
            used[i] = true;
            for j in i + 1..roots.len() {
                if !used[j] && (roots[j] - roots[i]).norm() < tol {
                    used[j] = true;
                    members.push(roots[j]);
                }
            }
            let k = members.len();
            let mut c = members.iter().sum::<C64>() / k as f64;
            // Newton on the (k-1)-th derivative, where the root is simple
            let mut g = self.clone();
            for _ in 1..k {
                g = g.derivative();
            }
            let dg = g.derivative();
            for _ in 0..8 {
                let step = g.eval(&c) / dg.eval(&c);
                if !step.is_finite() || step.norm() > tol {
                    break;
                }
                c -= step;
                if step.norm() < 1e-17 * scale {
                    break;
                }
            }
            out.push((c, k));
        }
        out
    }
}

pub type CRational = RationalFn<C64>;
