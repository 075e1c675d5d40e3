//! Marked surfaces: genus, marked points carrying rational coweights with
//! full-flag tags, moduli dimensions, and level-admissibility reports.
//!
//! Coweights are kept as exact rationals; the level sweeps downstream multiply
//! them by k and must stay exact. Only regular coweights (strictly inside the
//! Weyl alcove) are supported: non-regular input is rejected at construction
//! rather than silently coarsened to a smaller flag variety.

use crate::lie_data::{LieError, Rational, RationalWeight, Weight};
use num_integer::lcm;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("genus must be at least 2, got {0}")]
    InvalidGenus(u32),
    #[error(
        "unsupported configuration: coweight at marked point {index} is not regular \
         (needs all Dynkin labels positive and theta-pairing strictly below 1, got {details})"
    )]
    NonRegularWeight { index: usize, details: String },
    #[error("coweight at marked point {index} has rank {got}, marking declares su({expected})")]
    PointRankMismatch { index: usize, expected: usize, got: usize },
    #[error("level {k} does not make coweight at marked point {index} integral")]
    NotIntegralAtLevel { index: usize, k: i64 },
}

/// Flag type attached to a marked point. Regular coweights force the full
/// flag variety SU(N)/T, the only case supported here.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlagType {
    Full,
}

/// A marked point: a regular rational coweight plus its flag tag.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPoint {
    coweight: RationalWeight,
    flag: FlagType,
}

impl MarkedPoint {
    pub fn full(coweight: RationalWeight) -> Self {
        MarkedPoint { coweight, flag: FlagType::Full }
    }

    pub fn coweight(&self) -> &RationalWeight {
        &self.coweight
    }

    pub fn flag(&self) -> FlagType {
        self.flag
    }
}

/// A genus-g surface with ordered marked points, the rank parameter N, and
/// the smallest level k0 at which every scaled coweight is integral.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMarking {
    genus: u32,
    points: Vec<MarkedPoint>,
    n_rank: usize,
    k0: i64,
}

impl SurfaceMarking {
    /// Validates genus >= 2, rank agreement, and regularity of every coweight;
    /// computes k0 as the lcm of the per-point integrality levels (1 when
    /// there are no marked points).
    pub fn new(genus: u32, n_rank: usize, points: Vec<MarkedPoint>) -> Result<Self, SurfaceError> {
        if genus < 2 {
            return Err(SurfaceError::InvalidGenus(genus));
        }
        if n_rank < 2 {
            return Err(SurfaceError::Lie(LieError::InvalidRank(n_rank)));
        }
        for (index, p) in points.iter().enumerate() {
            if p.coweight.rank_n() != n_rank {
                return Err(SurfaceError::PointRankMismatch {
                    index,
                    expected: n_rank,
                    got: p.coweight.rank_n(),
                });
            }
            if !p.coweight.is_regular_alcove() {
                return Err(SurfaceError::NonRegularWeight {
                    index,
                    details: format!("{:?}", p.coweight.dynkin()),
                });
            }
        }
        let k0 = points
            .iter()
            .fold(1i64, |acc, p| lcm(acc, p.coweight.smallest_integral_level()));
        Ok(SurfaceMarking { genus, points, n_rank, k0 })
    }

    /// Closed genus-g surface, no marked points.
    pub fn closed(genus: u32, n_rank: usize) -> Result<Self, SurfaceError> {
        SurfaceMarking::new(genus, n_rank, Vec::new())
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn n_rank(&self) -> usize {
        self.n_rank
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// Smallest level making every k * alpha_i integral.
    pub fn base_level(&self) -> i64 {
        self.k0
    }

    /// The boundary labels k * alpha_i at a given level, or an error naming
    /// the first point that fails integrality.
    pub fn labels_at_level(&self, k: i64) -> Result<Vec<Weight>, SurfaceError> {
        self.points
            .iter()
            .enumerate()
            .map(|(index, p)| {
                p.coweight
                    .scale_to_weight(k)
                    .ok_or(SurfaceError::NotIntegralAtLevel { index, k })
            })
            .collect()
    }
}

/// Real dimension of the moduli space of flat connections with the given
/// marking: 2(g-1)(N^2-1) + n (N^2-N), the second term being one full flag
/// variety SU(N)/T per marked point.
pub fn moduli_dimension(marking: &SurfaceMarking) -> i64 {
    let n = marking.n_rank as i64;
    let g = marking.genus as i64;
    2 * (g - 1) * (n * n - 1) + marking.points.len() as i64 * (n * n - n)
}

/// Three-part admissibility report for a level.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub level: i64,
    /// (a) k * alpha_i is a dominant integral weight for every i.
    pub weights_integral: bool,
    /// (b) k * sum_i alpha_i lies in the root lattice of sl(N).
    pub sum_in_root_lattice: bool,
    /// (c) every coweight is regular (guaranteed by construction).
    pub weights_regular: bool,
    pub reasons: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.weights_integral && self.sum_in_root_lattice && self.weights_regular
    }
}

/// Checks the three admissibility conditions at level k and reports each with
/// a human-readable reason. This never fails: inadmissible levels are data.
pub fn admissibility(marking: &SurfaceMarking, k: i64) -> AdmissibilityReport {
    let mut reasons = Vec::new();

    let mut weights_integral = true;
    for (index, p) in marking.points.iter().enumerate() {
        if p.coweight.scale_to_weight(k).is_none() {
            weights_integral = false;
            reasons.push(format!(
                "k*alpha is not an integral weight at point {index} for k = {k}"
            ));
        }
    }
    if weights_integral {
        reasons.push(format!("all scaled coweights are integral at k = {k}"));
    }

    // Root lattice of sl(N) in orthogonal coordinates: integer vectors with
    // zero coordinate sum. Coweight coordinates already sum to zero, so the
    // check reduces to integrality of every coordinate of k * sum alpha_i.
    let n = marking.n_rank;
    let mut total = vec![Rational::from_integer(0); n];
    for p in &marking.points {
        for (t, c) in total.iter_mut().zip(p.coweight.orthogonal_coords()) {
            *t += c;
        }
    }
    let scaled: Vec<Rational> =
        total.iter().map(|t| t * Rational::from_integer(k)).collect();
    let sum_in_root_lattice = scaled.iter().all(|c| c.is_integer());
    if sum_in_root_lattice {
        reasons.push(format!("k * sum of coweights lies in the root lattice at k = {k}"));
    } else {
        reasons.push(format!(
            "k * sum of coweights has non-integral orthogonal coordinates {scaled:?} \
             and misses the root lattice at k = {k}"
        ));
    }

    // Regularity is enforced by the constructor; recheck for the report.
    let weights_regular = marking.points.iter().all(|p| p.coweight.is_regular_alcove());
    reasons.push(if weights_regular {
        "all coweights are regular (strictly inside the alcove)".to_string()
    } else {
        "a coweight sits on an alcove wall".to_string()
    });

    AdmissibilityReport { level: k, weights_integral, sum_in_root_lattice, weights_regular, reasons }
}
