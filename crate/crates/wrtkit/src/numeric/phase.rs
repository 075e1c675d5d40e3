//! Exact roots of unity: `e^{2 pi i r}` represented by the reduced rational
//! exponent `r mod 1`. Phase products, powers, and conjugates stay exact;
//! conversion to floating point happens once, at the boundary.

use crate::lie_data::Rational;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::ops::Mul;

/// A unit-modulus complex number `e^{2 pi i r}` with exact rational exponent
/// `r` normalized to `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase {
    exponent: Rational,
}

impl Phase {
    /// Builds the phase `e^{2 pi i r}`, reducing `r` modulo 1.
    pub fn new(r: Rational) -> Self {
        Phase { exponent: r - r.floor() }
    }

    pub const fn one() -> Self {
        Phase { exponent: Rational::new_raw(0, 1) }
    }

    /// Exponent in `[0, 1)`, reduced.
    pub fn exponent(&self) -> Rational {
        self.exponent
    }

    pub fn is_one(&self) -> bool {
        self.exponent.is_zero()
    }

    pub fn conj(&self) -> Self {
        Phase::new(-self.exponent)
    }

    pub fn pow(&self, m: i64) -> Self {
        Phase::new(self.exponent * Rational::from_integer(m))
    }

    pub fn to_complex(&self) -> Complex64 {
        let angle = TAU * (*self.exponent.numer() as f64) / (*self.exponent.denom() as f64);
        Complex64::from_polar(1.0, angle)
    }

    /// Multiplicative order: smallest positive m with self^m = 1.
    pub fn order(&self) -> i64 {
        if self.exponent.is_zero() {
            1
        } else {
            self.exponent.denom().abs()
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase::new(self.exponent + rhs.exponent)
    }
}

impl From<Phase> for Complex64 {
    fn from(p: Phase) -> Complex64 {
        p.to_complex()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^(2*pi*i*{})", self.exponent)
    }
}
