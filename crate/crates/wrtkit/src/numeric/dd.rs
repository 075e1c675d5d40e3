//! Double-double arithmetic: unevaluated sums `hi + lo` of two f64 values
//! giving roughly 106 bits of significand. Used for accumulation in Verlinde
//! sums and least-squares inner products, where cancellation between terms of
//! magnitude ~1e10 must leave residues meaningful at 1e-10.
//!
//! The primitives are the classical error-free transformations (Knuth
//! two-sum, FMA-based two-prod); only the operations the crate needs are
//! implemented.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Error-free sum: a + b = s + e exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free sum assuming |a| >= |b|.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product via FMA: a * b = p + e exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// A double-double value `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    #[inline]
    pub fn product(a: f64, b: f64) -> Self {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, rhs.hi);
        let (s2, e2) = two_sum(self.lo, rhs.lo);
        let (s1, t) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s1, t + e2);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, rhs: f64) -> Dd {
        let (s, e) = two_sum(self.hi, rhs);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;

    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;

    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;

    #[inline]
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        let (hi, lo) = quick_two_sum(p, e + self.lo * rhs);
        Dd { hi, lo }
    }
}

/// Complex double-double accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    #[inline]
    pub fn from_complex(z: Complex64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    /// Accumulates `self += a * b` with error-free partial products.
    #[inline]
    pub fn add_prod(&mut self, a: Complex64, b: Complex64) {
        self.re = self.re + Dd::product(a.re, b.re) - Dd::product(a.im, b.im);
        self.im = self.im + Dd::product(a.re, b.im) + Dd::product(a.im, b.re);
    }

    /// Accumulates `self += z`.
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re = self.re + z.re;
        self.im = self.im + z.im;
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Compensated dot product `sum_i conj(a_i) * b_i`.
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Cdd::ZERO;
    for (x, y) in a.iter().zip(b) {
        acc.add_prod(x.conj(), *y);
    }
    acc.to_complex()
}
