//! Seeded generators of flat SU(2) representations on marked surfaces.
//!
//! Sampling is rank-2 only: the commutator-solving step relies on the fact
//! that SU(2) conjugacy classes are determined by the trace, so any target
//! group element can be realized as a commutator by an explicit pair. Higher
//! rank would need a different construction and is reported as unsupported
//! rather than approximated.

use crate::repvar::{FlatRepresentation, MappingData, RepError, DEFAULT_MATRIX_TOLERANCE};
use crate::surfaces::SurfaceMarking;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;
use thiserror::Error;

/// Residue budget for generated representations; generation is exact to
/// roundoff, so this is much tighter than the user-facing default.
pub const SAMPLE_TOLERANCE: f64 = 1e-9;

/// Attempts before giving up when a random draw lands on a degenerate
/// configuration (measure zero, but guarded).
const MAX_RESAMPLES: usize = 16;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("sample generation supports rank N = 2 only, marking has N = {0}")]
    UnsupportedRank(usize),
    #[error("{kind} samples are not defined for this marking: {details}")]
    UnsupportedMarking { kind: &'static str, details: String },
    #[error("sample generation kept hitting degenerate draws after {attempts} attempts: {last}")]
    Degenerate { attempts: usize, last: String },
}

/// The families of representation samples a scenario can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    /// Generic (irreducible with probability one) representation.
    Irreducible,
    /// All images in a fixed maximal torus; reducible, h0 = 1.
    TorusValued,
    /// Every image the identity; closed surfaces only.
    Trivial,
}

impl SampleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleKind::Irreducible => "irreducible",
            SampleKind::TorusValued => "torus-valued",
            SampleKind::Trivial => "trivial",
        }
    }
}

/// The deterministic RNG used everywhere: scenario seeds map to identical
/// sample streams across runs and platforms.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// [[alpha, beta], [-conj(beta), conj(alpha)]]; unitary iff |a|^2+|b|^2 = 1.
fn su2(alpha: Complex64, beta: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[alpha, beta, -beta.conj(), alpha.conj()])
}

fn identity2() -> DMatrix<Complex64> {
    DMatrix::identity(2, 2)
}

/// diag(e^{i t}, e^{-i t}).
pub fn diagonal_su2(t: f64) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, t),
        Complex64::from_polar(1.0, -t),
    ]))
}

/// Haar-random SU(2) element via a normalized Gaussian quaternion.
pub fn haar_su2<R: Rng>(rng: &mut R) -> DMatrix<Complex64> {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return su2(c(q[0] / norm, q[1] / norm), c(q[2] / norm, q[3] / norm));
        }
    }
}

fn max_entry_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthonormal eigenbasis of an SU(2) element: columns for eigenvalues
/// e^{i phi}, e^{-i phi} with phi in [0, pi]. Scalars get the standard basis.
fn su2_eigenbasis(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let cos_phi = (m.trace().re / 2.0).clamp(-1.0, 1.0);
    let lambda = Complex64::from_polar(1.0, cos_phi.acos());
    let beta = m[(0, 1)];
    let gamma = m[(1, 0)];
    let v1 = if beta.norm() > 1e-9 {
        (beta, lambda - m[(0, 0)])
    } else if gamma.norm() > 1e-9 {
        (lambda - m[(1, 1)], gamma)
    } else if (m[(0, 0)] - lambda).norm() <= (m[(1, 1)] - lambda).norm() {
        (c(1.0, 0.0), c(0.0, 0.0))
    } else {
        (c(0.0, 0.0), c(1.0, 0.0))
    };
    let norm = (v1.0.norm_sqr() + v1.1.norm_sqr()).sqrt();
    let v1 = (v1.0 / norm, v1.1 / norm);
    // The orthogonal complement of a unitary eigenvector is the other
    // eigenspace in dimension 2.
    DMatrix::from_row_slice(2, 2, &[v1.0, -v1.1.conj(), v1.1, v1.0.conj()])
}

/// A pair (A, B) of SU(2) elements with [A, B] = A B A^-1 B^-1 equal to
/// `target`, randomized over the solution set. Uses the trace classification
/// of SU(2) conjugacy classes: a base pair realizes the right trace, then a
/// change of basis moves the commutator onto the target.
pub fn su2_commutator_pair<R: Rng>(
    target: &DMatrix<Complex64>,
    rng: &mut R,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let t = target.trace().re.clamp(-2.0, 2.0);
    if max_entry_norm(&(target - identity2())) < 1e-12 {
        return (haar_su2(rng), identity2());
    }
    let c_sq = ((2.0 - t) / 4.0).clamp(0.0, 1.0);
    let b_abs = (1.0 - c_sq).sqrt();
    let b = Complex64::from_polar(b_abs, TAU * rng.gen::<f64>());
    let cc = Complex64::from_polar(c_sq.sqrt(), TAU * rng.gen::<f64>());
    let a0 = diagonal_su2(std::f64::consts::FRAC_PI_2);
    let b0 = su2(b, cc);
    let c0 = &a0 * &b0 * a0.adjoint() * b0.adjoint();
    let v = su2_eigenbasis(target) * su2_eigenbasis(&c0).adjoint();
    (&v * a0 * v.adjoint(), &v * b0 * v.adjoint())
}

/// Random SU(2) conjugate of diag(e^{i t}, e^{-i t}).
pub fn random_in_class<R: Rng>(t: f64, rng: &mut R) -> DMatrix<Complex64> {
    let v = haar_su2(rng);
    &v * diagonal_su2(t) * v.adjoint()
}

/// The rotation angles 2 pi c prescribed by the marking's coweights, one per
/// point, from the first orthogonal coordinate (the second is its negative).
fn class_angles(marking: &SurfaceMarking) -> Vec<f64> {
    marking
        .points()
        .iter()
        .map(|p| {
            let coords = p.coweight().orthogonal_coords();
            TAU * (*coords[0].numer() as f64) / (*coords[0].denom() as f64)
        })
        .collect()
}

fn require_rank_two(marking: &SurfaceMarking) -> Result<(), SampleError> {
    if marking.n_rank() != 2 {
        return Err(SampleError::UnsupportedRank(marking.n_rank()));
    }
    Ok(())
}

/// Assembles images in slot order A_1..A_g, B_1..B_g, a_1..a_n, where the
/// first handle pair is solved so the surface relation holds exactly.
fn assemble<R: Rng>(
    marking: &SurfaceMarking,
    rng: &mut R,
    punctures: Vec<DMatrix<Complex64>>,
) -> Result<FlatRepresentation, SampleError> {
    let g = marking.genus() as usize;
    let mut last_err: Option<RepError> = None;
    for _ in 0..MAX_RESAMPLES {
        let tail_pairs: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> =
            (1..g).map(|_| (haar_su2(rng), haar_su2(rng))).collect();
        // Residual R with [A_1,B_1] R = I, i.e. the rest of the relation.
        let mut rest = identity2();
        for (a, b) in &tail_pairs {
            rest = rest * a * b * a.adjoint() * b.adjoint();
        }
        for p in &punctures {
            rest *= p;
        }
        let (a1, b1) = su2_commutator_pair(&rest.adjoint(), rng);
        let mut images = Vec::with_capacity(2 * g + punctures.len());
        images.push(a1);
        images.extend(tail_pairs.iter().map(|(a, _)| a.clone()));
        images.push(b1);
        images.extend(tail_pairs.iter().map(|(_, b)| b.clone()));
        images.extend(punctures.iter().cloned());
        match FlatRepresentation::new(marking.clone(), images, SAMPLE_TOLERANCE) {
            Ok(rep) => return Ok(rep),
            Err(e @ RepError::RelationResidue { .. }) => last_err = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(SampleError::Degenerate {
        attempts: MAX_RESAMPLES,
        last: last_err.map(|e| e.to_string()).unwrap_or_else(|| "no error recorded".into()),
    })
}

/// Generic representation: puncture images are random conjugates of their
/// class representatives, all but the first handle pair are Haar random, and
/// the first pair solves the relation. Irreducible off a measure-zero set;
/// callers confirm via h0 = 0 downstream.
pub fn irreducible_rep<R: Rng>(
    marking: &SurfaceMarking,
    rng: &mut R,
) -> Result<FlatRepresentation, SampleError> {
    require_rank_two(marking)?;
    let punctures: Vec<_> =
        class_angles(marking).iter().map(|&t| random_in_class(t, rng)).collect();
    assemble(marking, rng, punctures)
}

/// Representation into a fixed maximal torus (all images diagonal). Needs the
/// puncture classes to cancel pairwise, so the number of points must be even
/// and consecutive points are assigned inverse representatives.
pub fn torus_rep<R: Rng>(
    marking: &SurfaceMarking,
    rng: &mut R,
) -> Result<FlatRepresentation, SampleError> {
    require_rank_two(marking)?;
    let n = marking.num_points();
    if n % 2 != 0 {
        return Err(SampleError::UnsupportedMarking {
            kind: "torus-valued",
            details: format!(
                "diagonal puncture images must multiply to the identity, \
                 which needs an even point count (got {n})"
            ),
        });
    }
    let g = marking.genus() as usize;
    let mut images: Vec<DMatrix<Complex64>> =
        (0..2 * g).map(|_| diagonal_su2(TAU * rng.gen::<f64>())).collect();
    for (j, t) in class_angles(marking).iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        images.push(diagonal_su2(sign * t));
    }
    Ok(FlatRepresentation::new(marking.clone(), images, SAMPLE_TOLERANCE)?)
}

/// The trivial representation; only closed markings admit it, since marked
/// points prescribe nontrivial conjugacy classes.
pub fn trivial_rep(marking: &SurfaceMarking) -> Result<FlatRepresentation, SampleError> {
    require_rank_two(marking)?;
    if marking.num_points() > 0 {
        return Err(SampleError::UnsupportedMarking {
            kind: "trivial",
            details: "marked points prescribe nontrivial classes".to_string(),
        });
    }
    let g = marking.genus() as usize;
    Ok(FlatRepresentation::new(
        marking.clone(),
        vec![identity2(); 2 * g],
        SAMPLE_TOLERANCE,
    )?)
}

pub fn sample_representation<R: Rng>(
    marking: &SurfaceMarking,
    kind: SampleKind,
    rng: &mut R,
) -> Result<FlatRepresentation, SampleError> {
    match kind {
        SampleKind::Irreducible => irreducible_rep(marking, rng),
        SampleKind::TorusValued => torus_rep(marking, rng),
        SampleKind::Trivial => trivial_rep(marking),
    }
}

/// A holonomy for the mapping-torus generator that commutes with every image
/// of a sample of the given kind, so identity mapping data validates:
/// irreducible images only commute with the center, torus-valued images with
/// the torus, trivial images with everything.
pub fn compatible_holonomy<R: Rng>(kind: SampleKind, rng: &mut R) -> DMatrix<Complex64> {
    match kind {
        SampleKind::Irreducible => {
            if rng.gen::<bool>() {
                identity2()
            } else {
                -identity2()
            }
        }
        SampleKind::TorusValued => diagonal_su2(TAU * rng.gen::<f64>()),
        SampleKind::Trivial => haar_su2(rng),
    }
}

/// Identity mapping data with the given eta holonomy.
pub fn identity_mapping(
    rep: &FlatRepresentation,
    g_holonomy: DMatrix<Complex64>,
) -> Result<MappingData, RepError> {
    MappingData::identity(rep.genus(), rep.punctures(), g_holonomy, DEFAULT_MATRIX_TOLERANCE)
}
