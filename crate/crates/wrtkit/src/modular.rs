//! Modular data of the level-k su(N) theory: S-matrix, T-phases, fusion
//! coefficients, and Verlinde dimensions of conformal-block spaces.
//!
//! S is computed entrywise from the N x N determinant form over shifted
//! orthogonal coordinates (O(N^3) per entry instead of an O(N!) Weyl sum) and
//! normalized by the closed-form constant i^{N(N-1)/2} / (sqrt(N) (k+N)^{(N-1)/2}),
//! which makes S unitary with a strictly positive vacuum row. T-phases are
//! exact roots of unity carried as rational exponents. Integer quantities
//! (fusion coefficients, Verlinde dimensions) are recovered by rounding a
//! compensated complex sum and checking the residue; a residue above the
//! configured epsilon is an error, not a silent truncation.

use crate::lie_data::{
    central_charge, inner_product, label_set, LabelSet, LieError, Rational, Weight,
};
use crate::numeric::dd::Cdd;
use crate::numeric::phase::Phase;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Residue bound for round-to-integer checks.
pub const INTEGRALITY_EPSILON: f64 = 1e-6;

/// Verification epsilon stored on [`ModularData`].
pub const VERIFICATION_EPSILON: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ModularError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("label {0:?} lies outside the level-{1} alcove")]
    LabelOutsideAlcove(Vec<i64>, i64),
    #[error(
        "numerical integrality failure: value {value} has residue {residue:.3e} \
         (bound {bound:.3e}); exact arithmetic would be required here"
    )]
    NumericalIntegrality { value: f64, residue: f64, bound: f64 },
    #[error("S^2 is not a permutation matrix within {0:.3e}")]
    ChargeConjugationDefect(f64),
}

/// Modular data at a fixed (N, k): label set, S-matrix, T-phases.
#[derive(Clone, Debug)]
pub struct ModularData {
    labels: LabelSet,
    s: DMatrix<Complex64>,
    t: Vec<Phase>,
    epsilon: f64,
}

impl ModularData {
    pub fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    pub fn s(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    /// Exact T-phases, indexed like the label set.
    pub fn t(&self) -> &[Phase] {
        &self.t
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// max |(S S^dagger - I)_{ij}|.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.s.nrows();
        let product = &self.s * self.s.adjoint();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((product[(i, j)] - Complex64::new(expect, 0.0)).norm());
            }
        }
        defect
    }

    /// max |S_{ij} - S_{ji}|.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.s.nrows();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                defect = defect.max((self.s[(i, j)] - self.s[(j, i)]).norm());
            }
        }
        defect
    }

    /// max |((S T)^3 - S^2)_{ij}| with T the diagonal phase matrix.
    pub fn st_cubed_defect(&self) -> f64 {
        let n = self.s.nrows();
        let t = DMatrix::from_fn(n, n, |i, j| {
            if i == j { self.t[i].to_complex() } else { Complex64::new(0.0, 0.0) }
        });
        let st = &self.s * t;
        let lhs = &st * &st * &st;
        let rhs = &self.s * &self.s;
        (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Extracts the charge-conjugation permutation from S^2, checking that
    /// every entry is within epsilon of 0 or 1.
    pub fn charge_conjugation(&self) -> Result<Vec<usize>, ModularError> {
        let n = self.s.nrows();
        let c = &self.s * &self.s;
        let mut perm = vec![usize::MAX; n];
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let z = c[(i, j)];
                let near_one = (z - Complex64::new(1.0, 0.0)).norm();
                let near_zero = z.norm();
                if near_one < near_zero {
                    defect = defect.max(near_one);
                    perm[i] = j;
                } else {
                    defect = defect.max(near_zero.min(1.0));
                }
            }
        }
        let is_permutation = {
            let mut seen = vec![false; n];
            perm.iter().all(|&j| j < n && !std::mem::replace(&mut seen[j], true))
        };
        if defect > self.epsilon || !is_permutation {
            return Err(ModularError::ChargeConjugationDefect(defect));
        }
        Ok(perm)
    }
}

/// Conformal weight h_lambda = <lambda, lambda + 2 rho> / (2 (k + N)), exact.
pub fn conformal_weight(n: usize, k: i64, lambda: &Weight) -> Result<Rational, ModularError> {
    check_in_alcove(n, k, lambda)?;
    let rho = Weight::weyl_vector(n);
    let two_rho = rho.add(&rho).map_err(LieError::from)?;
    let shifted = lambda.add(&two_rho)?;
    let numerator = inner_product(lambda, &shifted)?;
    Ok(numerator / Rational::from_integer(2 * (k + n as i64)))
}

/// T-phase exp(2 pi i (h_lambda - c/24)) as an exact root of unity.
pub fn t_phase(n: usize, k: i64, lambda: &Weight) -> Result<Phase, ModularError> {
    let h = conformal_weight(n, k, lambda)?;
    let c = central_charge(n, k)?;
    Ok(Phase::new(h - c / Rational::from_integer(24)))
}

fn check_in_alcove(n: usize, k: i64, lambda: &Weight) -> Result<(), ModularError> {
    if lambda.rank_n() != n {
        return Err(LieError::RankMismatch { left: lambda.rank_n(), right: n }.into());
    }
    if !lambda.is_dominant() || lambda.theta_pairing() > k {
        return Err(ModularError::LabelOutsideAlcove(lambda.dynkin().to_vec(), k));
    }
    Ok(())
}

/// Builds the level-k su(N) modular data. The S-matrix entry at (lambda, mu)
/// is the normalized determinant det[exp(-2 pi i l_a m_b / (k+N))] over the
/// shifted orthogonal coordinates l = lambda + rho, m = mu + rho.
pub fn s_matrix(n: usize, k: i64) -> Result<ModularData, ModularError> {
    let labels = label_set(n, k)?;
    let kappa = (k + n as i64) as f64;
    let rho = Weight::weyl_vector(n);
    // Shifted coordinates as f64; exact rationals with denominator N.
    let shifted: Vec<Vec<f64>> = labels
        .labels()
        .iter()
        .map(|l| {
            let s = l.add(&rho).expect("same rank");
            s.orthogonal_coords()
                .iter()
                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                .collect()
        })
        .collect();

    // Normalization i^{N(N-1)/2} / (sqrt(N) kappa^{(N-1)/2}).
    let quarter_turns = (n * (n - 1) / 2) % 4;
    let i_power = match quarter_turns {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let constant = i_power / ((n as f64).sqrt() * kappa.powf((n as f64 - 1.0) / 2.0));

    let size = labels.len();
    let mut s = DMatrix::zeros(size, size);
    let mut det_buffer = DMatrix::zeros(n, n);
    for row in 0..size {
        for col in row..size {
            for a in 0..n {
                for b in 0..n {
                    let angle = -TAU * shifted[row][a] * shifted[col][b] / kappa;
                    det_buffer[(a, b)] = Complex64::from_polar(1.0, angle);
                }
            }
            let entry = constant * det_buffer.clone().determinant();
            s[(row, col)] = entry;
            s[(col, row)] = entry;
        }
    }

    let t = labels
        .labels()
        .iter()
        .map(|l| t_phase(n, k, l))
        .collect::<Result<Vec<_>, _>>()?;

    let data = ModularData { labels, s, t, epsilon: VERIFICATION_EPSILON };

    // The closed-form constant must already deliver a strictly positive
    // vacuum row; verify instead of gauge-fixing silently.
    let vacuum = data.labels.vacuum_index();
    for j in 0..data.labels.len() {
        let z = data.s[(vacuum, j)];
        if z.re <= 0.0 || z.im.abs() > 1e-9 {
            return Err(ModularError::NumericalIntegrality {
                value: z.re,
                residue: z.im.abs(),
                bound: 1e-9,
            });
        }
    }
    Ok(data)
}

/// Rounds a compensated complex sum to a nonnegative integer, enforcing the
/// residue bound on both the imaginary part and the distance to the integer.
fn round_integral(value: Complex64, bound: f64) -> Result<u64, ModularError> {
    let rounded = value.re.round();
    let residue = (value.re - rounded).abs().max(value.im.abs());
    if residue > bound || rounded < 0.0 {
        return Err(ModularError::NumericalIntegrality { value: value.re, residue, bound });
    }
    Ok(rounded as u64)
}

/// Fusion coefficient N_{lambda mu}^nu via the Verlinde sum
/// sum_sigma S_{lambda sigma} S_{mu sigma} conj(S_{nu sigma}) / S_{0 sigma}.
pub fn fusion_coefficient(
    n: usize,
    k: i64,
    lambda: &Weight,
    mu: &Weight,
    nu: &Weight,
) -> Result<u64, ModularError> {
    let md = s_matrix(n, k)?;
    fusion_coefficient_md(&md, lambda, mu, nu)
}

/// Fusion coefficient against precomputed modular data.
pub fn fusion_coefficient_md(
    md: &ModularData,
    lambda: &Weight,
    mu: &Weight,
    nu: &Weight,
) -> Result<u64, ModularError> {
    let ls = md.label_set();
    let (n, k) = (ls.n(), ls.k());
    for w in [lambda, mu, nu] {
        check_in_alcove(n, k, w)?;
    }
    let il = ls.index_of(lambda).expect("alcove-checked");
    let im = ls.index_of(mu).expect("alcove-checked");
    let inu = ls.index_of(nu).expect("alcove-checked");
    let vac = ls.vacuum_index();
    let mut acc = Cdd::ZERO;
    for sigma in 0..ls.len() {
        let term = md.s[(il, sigma)] * md.s[(im, sigma)] * md.s[(inu, sigma)].conj()
            / md.s[(vac, sigma)];
        acc.add(term);
    }
    round_integral(acc.to_complex(), INTEGRALITY_EPSILON)
}

/// Verlinde dimension of the genus-g conformal-block space with the given
/// boundary labels: sum_mu (S_{0 mu})^{2 - 2g - n} prod_i S_{lambda_i mu}.
pub fn verlinde_dimension(
    g: u32,
    boundary: &[Weight],
    n: usize,
    k: i64,
) -> Result<u64, ModularError> {
    let md = s_matrix(n, k)?;
    verlinde_dimension_md(&md, g, boundary)
}

/// Verlinde dimension against precomputed modular data.
pub fn verlinde_dimension_md(
    md: &ModularData,
    g: u32,
    boundary: &[Weight],
) -> Result<u64, ModularError> {
    let ls = md.label_set();
    let (n, k) = (ls.n(), ls.k());
    for w in boundary {
        check_in_alcove(n, k, w)?;
    }
    let indices: Vec<usize> =
        boundary.iter().map(|w| ls.index_of(w).expect("alcove-checked")).collect();
    let vac = ls.vacuum_index();
    let exponent = 2 - 2 * g as i32 - boundary.len() as i32;
    let mut acc = Cdd::ZERO;
    for mu in 0..ls.len() {
        let base = md.s[(vac, mu)];
        let mut term = powi_complex(base, exponent);
        for &i in &indices {
            term *= md.s[(i, mu)];
        }
        acc.add(term);
    }
    round_integral(acc.to_complex(), INTEGRALITY_EPSILON)
}

fn powi_complex(z: Complex64, e: i32) -> Complex64 {
    if e >= 0 {
        z.powu(e as u32)
    } else {
        z.powu((-e) as u32).finv()
    }
}
