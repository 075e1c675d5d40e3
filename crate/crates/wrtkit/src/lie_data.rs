//! Exact root-system and weight arithmetic for su(N).
//!
//! Weights are stored both as Dynkin labels and in traceless orthogonal
//! coordinates (the diagonal embedding of the Cartan of su(N) into R^N,
//! centered to sum to zero). In orthogonal coordinates the Weyl group is the
//! symmetric group acting by permutation and the normalized invariant form is
//! the plain Euclidean dot product, with `<theta, theta> = 2` for the highest
//! root theta. Everything here is exact rational arithmetic; floating point
//! enters only in the modular and asymptotics layers.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact scalar used throughout the weight layer.
pub type Rational = Ratio<i64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LieError {
    #[error("rank N must be at least 2, got {0}")]
    InvalidRank(usize),
    #[error("level k must be at least 1, got {0}")]
    InvalidLevel(i64),
    #[error("expected {expected} Dynkin labels for su({n}), got {got}")]
    WrongLabelLength { n: usize, expected: usize, got: usize },
    #[error("weights belong to different algebras: su({left}) vs su({right})")]
    RankMismatch { left: usize, right: usize },
    #[error("label set for su({n}) at level {k} would exceed the capacity bound of {cap} labels")]
    Capacity { n: usize, k: i64, cap: usize },
}

/// Dominant integral weight of su(N), stored as Dynkin labels plus derived
/// traceless orthogonal coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    dynkin: Vec<i64>,
    orth: Vec<Rational>,
}

/// Converts Dynkin labels `a_1..a_{N-1}` to traceless orthogonal coordinates:
/// partition entries `lambda_i = sum_{j >= i} a_j` (with `lambda_N = 0`),
/// shifted by their mean.
fn dynkin_to_orth(dynkin: &[Rational]) -> Vec<Rational> {
    let n = dynkin.len() + 1;
    let mut partition = vec![Rational::zero(); n];
    for i in (0..n - 1).rev() {
        partition[i] = partition[i + 1] + dynkin[i];
    }
    let mean = partition.iter().sum::<Rational>() / Rational::from_integer(n as i64);
    partition.into_iter().map(|p| p - mean).collect()
}

/// Inverse of [`dynkin_to_orth`]: consecutive differences of the coordinates.
#[cfg(test)]
fn orth_to_dynkin(orth: &[Rational]) -> Vec<Rational> {
    orth.windows(2).map(|w| w[0] - w[1]).collect()
}

impl Weight {
    /// Builds a weight of su(`n`) from its `n-1` Dynkin labels.
    pub fn from_dynkin(n: usize, dynkin: &[i64]) -> Result<Self, LieError> {
        if n < 2 {
            return Err(LieError::InvalidRank(n));
        }
        if dynkin.len() != n - 1 {
            return Err(LieError::WrongLabelLength { n, expected: n - 1, got: dynkin.len() });
        }
        let rational: Vec<Rational> = dynkin.iter().map(|&a| Rational::from_integer(a)).collect();
        Ok(Weight { dynkin: dynkin.to_vec(), orth: dynkin_to_orth(&rational) })
    }

    /// The zero weight of su(`n`).
    pub fn zero(n: usize) -> Self {
        Weight::from_dynkin(n, &vec![0; n - 1]).expect("zero weight is always valid")
    }

    /// The Weyl vector rho (all Dynkin labels 1).
    pub fn weyl_vector(n: usize) -> Self {
        Weight::from_dynkin(n, &vec![1; n - 1]).expect("rho is always valid")
    }

    /// The highest root theta: Dynkin labels (1, 0, .., 0, 1), or (2) for su(2).
    pub fn highest_root(n: usize) -> Self {
        let mut labels = vec![0i64; n - 1];
        if n == 2 {
            labels[0] = 2;
        } else {
            labels[0] = 1;
            labels[n - 2] = 1;
        }
        Weight::from_dynkin(n, &labels).expect("theta is always valid")
    }

    /// The i-th fundamental weight omega_i, 1-based.
    pub fn fundamental(n: usize, i: usize) -> Result<Self, LieError> {
        if i == 0 || i > n - 1 {
            return Err(LieError::WrongLabelLength { n, expected: n - 1, got: i });
        }
        let mut labels = vec![0i64; n - 1];
        labels[i - 1] = 1;
        Weight::from_dynkin(n, &labels)
    }

    /// Rank parameter N of su(N).
    pub fn rank_n(&self) -> usize {
        self.dynkin.len() + 1
    }

    pub fn dynkin(&self) -> &[i64] {
        &self.dynkin
    }

    /// Traceless orthogonal coordinates (length N, summing to zero).
    pub fn orthogonal_coords(&self) -> &[Rational] {
        &self.orth
    }

    /// True if all Dynkin labels are nonnegative.
    pub fn is_dominant(&self) -> bool {
        self.dynkin.iter().all(|&a| a >= 0)
    }

    /// The pairing `<theta, lambda>` (the level of the weight); equals the sum
    /// of Dynkin labels for su(N).
    pub fn theta_pairing(&self) -> i64 {
        self.dynkin.iter().sum()
    }

    /// Componentwise sum of two weights of the same algebra.
    pub fn add(&self, other: &Weight) -> Result<Weight, LieError> {
        check_same_rank(self, other)?;
        let dynkin: Vec<i64> =
            self.dynkin.iter().zip(&other.dynkin).map(|(a, b)| a + b).collect();
        Weight::from_dynkin(self.rank_n(), &dynkin)
    }
}

fn check_same_rank(a: &Weight, b: &Weight) -> Result<(), LieError> {
    if a.rank_n() != b.rank_n() {
        return Err(LieError::RankMismatch { left: a.rank_n(), right: b.rank_n() });
    }
    Ok(())
}

/// Euclidean dot product of two rational coordinate vectors.
pub fn inner_product_orth(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized invariant form `<lambda, mu>`: Euclidean in orthogonal
/// coordinates, so that `<theta, theta> = 2`.
pub fn inner_product(lambda: &Weight, mu: &Weight) -> Result<Rational, LieError> {
    check_same_rank(lambda, mu)?;
    Ok(inner_product_orth(&lambda.orth, &mu.orth))
}

/// Weight with rational Dynkin labels; used for the parabolic coweights
/// alpha_i attached to marked points, which only become integral weights
/// after scaling by an admissible level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalWeight {
    dynkin: Vec<Rational>,
    orth: Vec<Rational>,
}

impl RationalWeight {
    pub fn from_dynkin(n: usize, dynkin: &[Rational]) -> Result<Self, LieError> {
        if n < 2 {
            return Err(LieError::InvalidRank(n));
        }
        if dynkin.len() != n - 1 {
            return Err(LieError::WrongLabelLength { n, expected: n - 1, got: dynkin.len() });
        }
        Ok(RationalWeight { dynkin: dynkin.to_vec(), orth: dynkin_to_orth(dynkin) })
    }

    /// Embeds an integral weight.
    pub fn from_weight(w: &Weight) -> Self {
        RationalWeight {
            dynkin: w.dynkin.iter().map(|&a| Rational::from_integer(a)).collect(),
            orth: w.orth.clone(),
        }
    }

    pub fn rank_n(&self) -> usize {
        self.dynkin.len() + 1
    }

    pub fn dynkin(&self) -> &[Rational] {
        &self.dynkin
    }

    pub fn orthogonal_coords(&self) -> &[Rational] {
        &self.orth
    }

    pub fn theta_pairing(&self) -> Rational {
        self.dynkin.iter().sum()
    }

    /// `k * self` as an integral weight, if all scaled Dynkin labels are integers.
    pub fn scale_to_weight(&self, k: i64) -> Option<Weight> {
        let mut labels = Vec::with_capacity(self.dynkin.len());
        for d in &self.dynkin {
            let scaled = d * Rational::from_integer(k);
            if !scaled.is_integer() {
                return None;
            }
            labels.push(scaled.to_integer());
        }
        Weight::from_dynkin(self.rank_n(), &labels).ok()
    }

    /// True if the coweight lies strictly inside the fundamental Weyl alcove:
    /// all Dynkin labels positive and `<theta, alpha> < 1`.
    pub fn is_regular_alcove(&self) -> bool {
        self.dynkin.iter().all(|d| d.is_positive())
            && self.theta_pairing() < Rational::from_integer(1)
    }

    /// Smallest positive integer k with `k * self` integral.
    pub fn smallest_integral_level(&self) -> i64 {
        self.dynkin.iter().fold(1i64, |acc, d| num_integer::lcm(acc, *d.denom()))
    }
}

/// Normalized invariant form on rational weights.
pub fn inner_product_rational(a: &RationalWeight, b: &RationalWeight) -> Result<Rational, LieError> {
    if a.rank_n() != b.rank_n() {
        return Err(LieError::RankMismatch { left: a.rank_n(), right: b.rank_n() });
    }
    Ok(inner_product_orth(&a.orth, &b.orth))
}

/// The level-k label set: dominant integral weights with `<theta, lambda> <= k`,
/// ordered lexicographically on Dynkin labels so matrix indices are stable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    n: usize,
    k: i64,
    labels: Vec<Weight>,
}

/// Hard bound on label-set sizes accepted by the modular layer.
pub const LABEL_CAPACITY: usize = 10_000;

impl LabelSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn labels(&self) -> &[Weight] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Index of the vacuum (zero) weight; always 0 in lexicographic order.
    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn index_of(&self, w: &Weight) -> Option<usize> {
        self.labels.binary_search_by(|l| l.dynkin.as_slice().cmp(&w.dynkin)).ok()
    }

    pub fn contains(&self, w: &Weight) -> bool {
        self.index_of(w).is_some()
    }
}

/// Enumerates the label set for su(`n`) at level `k` in lexicographic Dynkin
/// order.
pub fn label_set(n: usize, k: i64) -> Result<LabelSet, LieError> {
    if n < 2 {
        return Err(LieError::InvalidRank(n));
    }
    if k < 1 {
        return Err(LieError::InvalidLevel(k));
    }
    let mut labels = Vec::new();
    let mut current = vec![0i64; n - 1];
    enumerate_labels(n, k, 0, &mut current, &mut labels)?;
    Ok(LabelSet { n, k, labels })
}

fn enumerate_labels(
    n: usize,
    k: i64,
    pos: usize,
    current: &mut Vec<i64>,
    out: &mut Vec<Weight>,
) -> Result<(), LieError> {
    let used: i64 = current[..pos].iter().sum();
    if pos == n - 1 {
        if out.len() >= LABEL_CAPACITY {
            return Err(LieError::Capacity { n, k, cap: LABEL_CAPACITY });
        }
        out.push(Weight::from_dynkin(n, current)?);
        return Ok(());
    }
    for a in 0..=(k - used) {
        current[pos] = a;
        enumerate_labels(n, k, pos + 1, current, out)?;
    }
    current[pos] = 0;
    Ok(())
}

/// Central charge of the level-k su(N) theory: `k (N^2 - 1) / (k + N)`.
pub fn central_charge(n: usize, k: i64) -> Result<Rational, LieError> {
    if n < 2 {
        return Err(LieError::InvalidRank(n));
    }
    if k < 1 {
        return Err(LieError::InvalidLevel(k));
    }
    let n = n as i64;
    Ok(Rational::new(k * (n * n - 1), k + n))
}
