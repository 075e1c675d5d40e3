//! Shared oracles and frozen expected values for the integration suites.
//!
//! Everything here is independent of the library internals: closed forms,
//! hand-derived constants, and brute-force reimplementations. The production
//! code computes the same quantities through different formulas (determinant
//! S-matrix, cocycle rank arithmetic), so agreement is a real cross-check.

#![allow(dead_code)]

use std::f64::consts::PI;

// =========================================================================
// su(2) modular data, closed forms
// =========================================================================

/// su(2) level-k S-matrix entry: sqrt(2/(k+2)) * sin(pi (a+1)(b+1) / (k+2)).
/// Labels a, b are Dynkin labels in 0..=k.
pub fn su2_s_entry(k: i64, a: i64, b: i64) -> f64 {
    let kappa = (k + 2) as f64;
    (2.0 / kappa).sqrt() * (PI * ((a + 1) * (b + 1)) as f64 / kappa).sin()
}

/// su(2) level-k fusion rule: N_{ab}^c = 1 iff |a-b| <= c <= min(a+b, 2k-a-b)
/// and a+b+c is even; 0 otherwise.
pub fn su2_fusion(k: i64, a: i64, b: i64, c: i64) -> u64 {
    let lower = (a - b).abs();
    let upper = (a + b).min(2 * k - a - b);
    if c >= lower && c <= upper && (a + b + c) % 2 == 0 {
        1
    } else {
        0
    }
}

/// Genus-2, no-puncture su(2) Verlinde dimension: (k+1)(k+2)(k+3)/6.
/// Derived from sum_{m=1}^{kappa-1} sin^{-2}(pi m / kappa) = (kappa^2 - 1)/3.
pub fn su2_verlinde_genus2(k: i64) -> i128 {
    let k = k as i128;
    (k + 1) * (k + 2) * (k + 3) / 6
}

/// Brute-force su(2) Verlinde sum via the sine closed form, independent of the
/// library's determinant-based S-matrix. `labels` are Dynkin labels.
pub fn su2_verlinde_bruteforce(g: u32, labels: &[i64], k: i64) -> f64 {
    let n = labels.len() as i32;
    let exponent = 2 - 2 * (g as i32) - n;
    let mut total = 0.0f64;
    for j in 0..=k {
        let s0 = su2_s_entry(k, 0, j);
        let mut term = s0.powi(exponent);
        for &a in labels {
            term *= su2_s_entry(k, a, j);
        }
        total += term;
    }
    total
}

// =========================================================================
// Frozen values (hand-derived; see comments for the derivations)
// =========================================================================

/// su(2) k=2 S-matrix: S_00 = 1/2, S_01 = 1/sqrt(2), S_11 = 0.
pub const SU2_K2_S00: f64 = 0.5;
pub const SU2_K2_S11: f64 = 0.0;

/// Verlinde dimensions frozen from the sine closed form, computed by hand:
/// genus 2, one puncture with Dynkin label s at level k = 2s.
/// k=4 (s=2): 3 * [8 - 1 + 8] = 45.
/// k=8 (s=4): 5 * [2 sin^-3(pi/10) - 2 sin^-3(3pi/10) + 1] = 325.
pub const G2_N1_FROZEN: [(i64, i128); 2] = [(4, 45), (8, 325)];

/// Genus 2, two punctures with equal labels (s, s) at level k = 2s.
/// k=2 (s=1): 2 * [4 + 0 + 4] = 16.
/// k=4 (s=2): 3 * [16 + 1 + 16] = 99.
pub const G2_N2_FROZEN: [(i64, i128); 2] = [(2, 16), (4, 99)];

/// Genus 2, no punctures: (k+1)(k+2)(k+3)/6 evaluated at small k.
pub const G2_N0_FROZEN: [(i64, i128); 3] = [(1, 4), (2, 10), (3, 20)];

/// Moduli dimensions 2(g-1)(N^2-1) + n(N^2-N) for full flags.
/// Rows: (genus, punctures, N, expected real dimension).
pub const MODULI_DIM_FROZEN: [(u32, usize, usize, i64); 6] = [
    (2, 0, 2, 6),
    (2, 1, 2, 8),
    (2, 2, 2, 10),
    (3, 0, 2, 12),
    (3, 1, 2, 14),
    (3, 2, 3, 44),
];

/// Central charge k(N^2-1)/(k+N) as (N, k, numerator, denominator), reduced.
pub const CENTRAL_CHARGE_FROZEN: [(usize, i64, i64, i64); 4] =
    [(2, 1, 1, 1), (3, 1, 2, 1), (2, 2, 3, 2), (4, 2, 5, 1)];

/// Label-set sizes: |Lambda(2,k)| = k+1, |Lambda(3,k)| = (k+1)(k+2)/2,
/// |Lambda(4,k)| = (k+1)(k+2)(k+3)/6.
pub fn label_count_oracle(n: usize, k: i64) -> usize {
    match n {
        2 => (k + 1) as usize,
        3 => ((k + 1) * (k + 2) / 2) as usize,
        4 => ((k + 1) * (k + 2) * (k + 3) / 6) as usize,
        _ => panic!("oracle covers N in 2..=4"),
    }
}

/// <omega_1/2, omega_1/2> = 1/8 for su(2): omega_1 has orthogonal coordinates
/// (1/2, -1/2), so |omega_1|^2 = 1/2 and scaling by 1/2 squares to 1/4.
pub const SU2_HALF_OMEGA_NORM_NUM: i64 = 1;
pub const SU2_HALF_OMEGA_NORM_DEN: i64 = 8;

/// Single Dehn twist, alpha = omega_1/2, m = 1:
/// q = -<alpha,alpha>/2 mod 1 = -1/16 mod 1 = 15/16.
pub const SU2_SINGLE_TWIST_Q_NUM: i64 = 15;
pub const SU2_SINGLE_TWIST_Q_DEN: i64 = 16;

/// t_phase exponents h_lambda - c/24, hand-reduced:
/// (N=2, k=2, lambda=omega_1): 3/16 - 1/16 = 1/8.
/// (N=3, k=1, lambda=omega_1): 1/3 - 1/12 = 1/4.
pub const T_EXPONENT_FROZEN: [(usize, i64, i64, i64); 2] = [(2, 2, 1, 8), (3, 1, 1, 4)];

/// Parabolic cohomology dimensions for su(2) surface groups:
/// irreducible regular samples must reproduce 6(g-1) + 2n.
pub fn h1_par_irreducible_oracle(g: u32, n: usize) -> usize {
    6 * (g as usize - 1) + 2 * n
}

/// Trivial representation, genus 2, no punctures: h0 = 3, Z^1 = 12, B^1 = 0.
pub const TRIVIAL_G2_H0: usize = 3;
pub const TRIVIAL_G2_H1: usize = 12;

// =========================================================================
// Synthetic exponential-sum generators for the extractor suites
// =========================================================================

use num_complex::Complex64;

/// One synthetic term: z(k) = b * exp(2 pi i k q) * k^degree * (1 + sum_p a_p k^{-p/2}).
#[derive(Clone, Debug)]
pub struct SyntheticTerm {
    pub q: f64,
    pub degree: f64,
    pub leading: Complex64,
    pub tail: Vec<Complex64>,
}

pub fn synthetic_value(terms: &[SyntheticTerm], k: i64) -> Complex64 {
    let kf = k as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for t in terms {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * kf * t.q);
        let mut inner = Complex64::new(1.0, 0.0);
        for (p, a) in t.tail.iter().enumerate() {
            inner += a * kf.powf(-((p + 1) as f64) / 2.0);
        }
        total += t.leading * phase * kf.powf(t.degree) * inner;
    }
    total
}

/// Deterministic bounded noise (no RNG dependency): amplitude * cos-pattern.
pub fn deterministic_noise(k: i64, amplitude: f64) -> Complex64 {
    let x = k as f64;
    Complex64::new((3.7 * x).sin(), (2.1 * x + 0.5).cos()) * amplitude
}
