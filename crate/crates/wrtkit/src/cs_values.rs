//! Closed-form Chern-Simons phases for the supported mapping classes:
//! the identity (product connections) and words of Dehn twists around
//! marked points.
//!
//! Values are exact rationals mod 1; all phase comparisons happen on roots
//! of unity, never on floating-point representatives. The general gauge
//! cocycle is deliberately not integrated numerically: only the closed forms
//! are exposed, and anything else is an unsupported configuration upstream.

use crate::lie_data::{inner_product_rational, LieError, Rational, RationalWeight};
use crate::numeric::phase::Phase;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("level {k} does not make the coweight integral; Dehn-twist phase undefined")]
    NonIntegralLevel { k: i64 },
    #[error("Dehn-twist word references marked point {index}, but only {count} points exist")]
    PointIndexOutOfRange { index: usize, count: usize },
}

/// Mapping classes with closed-form Chern-Simons values: the identity, or a
/// word of Dehn twists around marked points given as (point index,
/// multiplicity) pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MappingClassKind {
    Identity,
    DehnTwistWord(Vec<(usize, i64)>),
}

impl MappingClassKind {
    pub fn is_identity(&self) -> bool {
        matches!(self, MappingClassKind::Identity)
    }
}

/// Where a Chern-Simons value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Identity mapping class: the value of a product connection, zero.
    ProductConnection,
    /// Closed-form Dehn-twist evaluation.
    DehnTwist,
    /// Supplied from outside the toolkit.
    External,
}

/// A Chern-Simons value: a reduced rational q in [0,1) plus its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsValue {
    q: Rational,
    provenance: Provenance,
}

impl CsValue {
    /// Normalizes the representative into [0,1).
    pub fn new(q: Rational, provenance: Provenance) -> Self {
        CsValue { q: q - q.floor(), provenance }
    }

    /// The value as a reduced fraction in [0,1).
    pub fn q(&self) -> Rational {
        self.q
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The phase exp(2 pi i k q) this value contributes at level k.
    pub fn phase_at_level(&self, k: i64) -> Phase {
        Phase::new(self.q * Rational::from_integer(k))
    }
}

/// Phase by which a single Dehn twist of multiplicity m around a point with
/// coweight alpha acts at level k: exp(-pi i k m <alpha, alpha>), exact.
/// Requires k * alpha integral, the same condition as admissibility (a).
pub fn dehn_twist_phase(alpha: &RationalWeight, k: i64, m: i64) -> Result<Phase, CsError> {
    if alpha.scale_to_weight(k).is_none() {
        return Err(CsError::NonIntegralLevel { k });
    }
    let norm = inner_product_rational(alpha, alpha)?;
    let exponent = -norm * Rational::from_integer(k * m) / Rational::from_integer(2);
    Ok(Phase::new(exponent))
}

/// Chern-Simons value of the supported mapping classes: 0 for the identity,
/// and -sum_i m_i <alpha_i, alpha_i> / 2 mod 1 for a Dehn-twist word, chosen
/// so that exp(2 pi i k q) equals the product of the per-twist phases at
/// every level with k * alpha_i integral.
pub fn cs_value(kind: &MappingClassKind, coweights: &[RationalWeight]) -> Result<CsValue, CsError> {
    match kind {
        MappingClassKind::Identity => {
            Ok(CsValue::new(Rational::zero(), Provenance::ProductConnection))
        }
        MappingClassKind::DehnTwistWord(word) => {
            let mut q = Rational::zero();
            for &(index, m) in word {
                let alpha = coweights.get(index).ok_or(CsError::PointIndexOutOfRange {
                    index,
                    count: coweights.len(),
                })?;
                let norm = inner_product_rational(alpha, alpha)?;
                q -= norm * Rational::from_integer(m) / Rational::from_integer(2);
            }
            Ok(CsValue::new(q, Provenance::DehnTwist))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn half_omega() -> RationalWeight {
        RationalWeight::from_dynkin(2, &[Rational::new(1, 2)]).unwrap()
    }

    #[test]
    fn single_twist_at_level_four_is_minus_i() {
        let p = dehn_twist_phase(&half_omega(), 4, 1).unwrap();
        assert_eq!(p.exponent(), Rational::new(3, 4));
        assert!((p.to_complex() - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_coweight_gives_trivial_phase() {
        let zero = RationalWeight::from_dynkin(2, &[Rational::zero()]).unwrap();
        for k in 1..=6 {
            for m in [-3, 0, 5] {
                assert!(dehn_twist_phase(&zero, k, m).unwrap().is_one());
            }
        }
    }

    #[test]
    fn opposite_multiplicities_conjugate() {
        for m in 1..=5 {
            let plus = dehn_twist_phase(&half_omega(), 2, m).unwrap();
            let minus = dehn_twist_phase(&half_omega(), 2, -m).unwrap();
            assert_eq!(plus.conj(), minus);
        }
    }

    #[test]
    fn non_integral_level_is_rejected() {
        let err = dehn_twist_phase(&half_omega(), 3, 1).unwrap_err();
        assert!(matches!(err, CsError::NonIntegralLevel { k: 3 }));
    }

    #[test]
    fn identity_value_vanishes() {
        let v = cs_value(&MappingClassKind::Identity, &[half_omega()]).unwrap();
        assert_eq!(v.q(), Rational::zero());
        assert_eq!(v.provenance(), Provenance::ProductConnection);
        assert!(v.phase_at_level(7).is_one());
    }

    #[test]
    fn single_twist_value_is_fifteen_sixteenths() {
        let kind = MappingClassKind::DehnTwistWord(vec![(0, 1)]);
        let v = cs_value(&kind, &[half_omega()]).unwrap();
        assert_eq!(v.q(), Rational::new(15, 16));
        assert_eq!(v.provenance(), Provenance::DehnTwist);
    }

    #[test]
    fn opposite_twists_cancel() {
        let kind = MappingClassKind::DehnTwistWord(vec![(0, 1), (1, -1)]);
        let v = cs_value(&kind, &[half_omega(), half_omega()]).unwrap();
        assert_eq!(v.q(), Rational::zero());
    }

    #[test]
    fn value_reproduces_twist_phase_on_admissible_levels() {
        let kind = MappingClassKind::DehnTwistWord(vec![(0, 1)]);
        let v = cs_value(&kind, &[half_omega()]).unwrap();
        for k in [2, 4, 6, 8] {
            let direct = dehn_twist_phase(&half_omega(), k, 1).unwrap();
            assert_eq!(v.phase_at_level(k), direct, "k = {k}");
        }
    }

    #[test]
    fn out_of_range_index_errors() {
        let kind = MappingClassKind::DehnTwistWord(vec![(2, 1)]);
        let err = cs_value(&kind, &[half_omega()]).unwrap_err();
        assert!(matches!(err, CsError::PointIndexOutOfRange { index: 2, count: 1 }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_coweight() -> impl Strategy<Value = RationalWeight> {
            (1i64..6, 2i64..7).prop_map(|(num, den)| {
                let r = Rational::new(num.min(den - 1), den);
                RationalWeight::from_dynkin(2, &[r]).unwrap()
            })
        }

        proptest! {
            #[test]
            fn value_always_in_unit_interval(
                alpha in arb_coweight(),
                m in -6i64..=6
            ) {
                let kind = MappingClassKind::DehnTwistWord(vec![(0, m)]);
                let v = cs_value(&kind, &[alpha]).unwrap();
                prop_assert!(v.q() >= Rational::zero());
                prop_assert!(v.q() < Rational::from_integer(1));
            }

            #[test]
            fn phase_consistency_on_multiples(
                alpha in arb_coweight(),
                m in -4i64..=4,
                s in 1i64..=8
            ) {
                let k = s * alpha.smallest_integral_level();
                let kind = MappingClassKind::DehnTwistWord(vec![(0, m)]);
                let v = cs_value(&kind, &[alpha.clone()]).unwrap();
                let direct = dehn_twist_phase(&alpha, k, m).unwrap();
                prop_assert_eq!(v.phase_at_level(k), direct);
            }

            #[test]
            fn word_value_is_sum_of_parts(
                a in arb_coweight(),
                b in arb_coweight(),
                ma in -3i64..=3,
                mb in -3i64..=3
            ) {
                let coweights = [a, b];
                let word = MappingClassKind::DehnTwistWord(vec![(0, ma), (1, mb)]);
                let first = MappingClassKind::DehnTwistWord(vec![(0, ma)]);
                let second = MappingClassKind::DehnTwistWord(vec![(1, mb)]);
                let total = cs_value(&word, &coweights).unwrap().q();
                let sum = cs_value(&first, &coweights).unwrap().q()
                    + cs_value(&second, &coweights).unwrap().q();
                prop_assert_eq!(total, sum - sum.floor());
            }
        }
    }
}
