//! Detection and certification of asymptotic expansions of invariant
//! sequences: unit phases exp(2 pi i k q_j), half-integer growth degrees, and
//! Poincare-type remainder constants.
//!
//! On a level grid with step s the data only determines each phase q modulo
//! 1/s; every function here works with the principal representative in
//! [0, 1/s) and reports the ambiguity modulus instead of guessing a lift.
//! Detection runs Prony on degree-normalized samples with a deliberately
//! overfitted recurrence order (extra roots absorb the slowly varying
//! polynomial factors), then polishes each phase by a golden-section descent
//! of the full-model least-squares residual, which restores the accuracy the
//! confluent root structure takes away from the raw pencil.

use crate::lie_data::Rational;
use crate::numeric::lstsq::{lstsq, Accumulation, LstsqError};
use crate::numeric::roots::monic_roots;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Minimum gap between distinct phases, as a fraction of the full circle.
pub const DEFAULT_PHASE_SEPARATION: f64 = 1e-3;

/// Roots farther than this from the unit circle are discarded as artifacts
/// of the overfitted recurrence.
const UNIT_CIRCLE_SLACK: f64 = 0.2;

/// Minimum tail columns per phase for the polish objective: powers k^(d),
/// k^(d-1/2), .. Deepened adaptively so the ladder reaches k^0 when the
/// dominant degree is large; a ladder that stops early leaves the omitted
/// low-order terms as a residual floor that biases the phase optimum.
const POLISH_TAIL_COLUMNS: usize = 8;

/// Upward headroom, in degrees, for the final per-family leading-degree
/// scan. The log-log slope estimate of the dominant degree rounds a half-step
/// low when subleading terms are still comparable at the small-k end of the
/// grid; if every ladder tops out below the true leading degree, that degree
/// is never in the span and the misfit floor swamps the phase signal. Two
/// extra half-rungs of scan range fix the underestimate. The raised scan only
/// runs after the capped alternation has sharpened the phases: the spurious
/// up-rung coefficients it must reject scale with the residual phase error
/// (about 2 pi k delta-q), which sits below the contribution cut once the
/// phases are sharp but far above it beforehand.
const TOP_HEADROOM: f64 = 1.0;

/// Golden-section iterations per phase coordinate.
const POLISH_ITERATIONS: usize = 72;

/// Coordinate-descent sweeps over the phases before the joint refinement;
/// these only need to reach the Gauss-Newton basin, not the optimum.
const POLISH_CYCLES: usize = 2;

/// Relative coefficient floor below which a fitted term is dropped.
const COEFFICIENT_FLOOR: f64 = 1e-8;

/// Consecutive-window growth factor above which a remainder constant counts
/// as unstable.
const STABILITY_FACTOR: f64 = 2.0;

/// Remainder constants below this absolute size are noise, not growth.
const STABILITY_ATOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("need at least {needed} samples for {context}, got {got}")]
    TooFewSamples { needed: usize, got: usize, context: &'static str },
    #[error("level grid is not arithmetic: {details}")]
    NonArithmeticGrid { details: String },
    #[error("phase detection failed (design condition {condition:.3e}): {details}")]
    DetectionFailure { condition: f64, details: String },
    #[error("basis columns {first} and {second} are numerically collinear on this grid")]
    Collinearity { first: String, second: String },
    #[error(
        "phases {q1} and {q2} are closer than the required separation {separation} mod 1"
    )]
    PhaseSeparation { q1: f64, q2: f64, separation: f64 },
    #[error("growth degree undetermined: {details}")]
    DegreeUndetermined { details: String },
    #[error(transparent)]
    Lstsq(#[from] LstsqError),
}

/// Distance between a and b on the circle R / (modulus Z).
pub fn circular_distance(a: f64, b: f64, modulus: f64) -> f64 {
    let d = (a - b).rem_euclid(modulus);
    d.min(modulus - d)
}

/// Best rational approximation with bounded denominator (continued-fraction
/// convergents); None when nothing within tol.
pub fn rational_snap(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    let (mut a, mut b) = ((0i64, 1i64), (1i64, 0i64)); // p/q convergents
    let mut v = x;
    for _ in 0..64 {
        let floor = v.floor();
        if floor.abs() > i64::MAX as f64 / 2.0 {
            break;
        }
        let f = floor as i64;
        let next = (a.0 + f * b.0, a.1 + f * b.1);
        if next.1.abs() > max_den {
            break;
        }
        (a, b) = (b, next);
        let frac = v - floor;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    let candidate = Rational::new(b.0, b.1.max(1));
    let err = (x - (*candidate.numer() as f64) / (*candidate.denom() as f64)).abs();
    (err <= tol).then_some(candidate)
}

fn grid_step(sequence: &[(i64, Complex64)]) -> Result<i64, AsymptoticsError> {
    if sequence.len() < 2 {
        return Err(AsymptoticsError::TooFewSamples {
            needed: 2,
            got: sequence.len(),
            context: "a level grid",
        });
    }
    let step = sequence[1].0 - sequence[0].0;
    if step <= 0 {
        return Err(AsymptoticsError::NonArithmeticGrid {
            details: format!("levels must strictly increase, got step {step}"),
        });
    }
    for w in sequence.windows(2) {
        if w[1].0 - w[0].0 != step {
            return Err(AsymptoticsError::NonArithmeticGrid {
                details: format!(
                    "step {} between k = {} and k = {} differs from initial step {step}",
                    w[1].0 - w[0].0,
                    w[0].0,
                    w[1].0
                ),
            });
        }
    }
    Ok(step)
}

/// Half-integer estimate of the dominant growth degree, for normalization
/// only: the median of pairwise log-log slopes is robust to phase beating,
/// and a half-order error just leaves a slow drift the overfitted recurrence
/// absorbs.
fn dominant_degree(sequence: &[(i64, Complex64)]) -> f64 {
    let scale = sequence.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let usable: Vec<(f64, f64)> = sequence
        .iter()
        .filter(|(_, z)| z.norm() > 1e-14 * scale)
        .map(|(k, z)| ((*k as f64).ln(), z.norm().ln()))
        .collect();
    let mut slopes = Vec::new();
    for i in 0..usable.len() {
        for j in i + 1..usable.len() {
            let dx = usable[j].0 - usable[i].0;
            if dx > 0.5 {
                slopes.push((usable[j].1 - usable[i].1) / dx);
            }
        }
    }
    if slopes.is_empty() {
        for w in usable.windows(2) {
            let dx = w[1].0 - w[0].0;
            if dx > 0.0 {
                slopes.push((w[1].1 - w[0].1) / dx);
            }
        }
    }
    if slopes.is_empty() {
        return 0.0;
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
    let median = slopes[slopes.len() / 2];
    ((median * 2.0).round() / 2.0).clamp(-5.0, 25.0)
}

/// Result of phase detection: principal representatives in [0, modulus),
/// where modulus = 1/step is the resolution limit of the grid.
#[derive(Clone, Debug)]
pub struct DetectedPhases {
    pub phases: Vec<f64>,
    /// Phases are only determined modulo this value.
    pub modulus: f64,
    /// Condition number of the recurrence design, for diagnostics.
    pub condition: f64,
}

/// Minimum-norm least-squares solve of complex A x = b via the realified
/// embedding and a truncated SVD; rank cut at rel_tol times the largest
/// singular value. Returns (solution, condition of A).
fn min_norm_solve(
    a: &DMatrix<Complex64>,
    b: &[Complex64],
    rel_tol: f64,
) -> Result<(Vec<Complex64>, f64), AsymptoticsError> {
    let (m, n) = a.shape();
    let mut real = DMatrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let z = a[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + m, j)] = z.im;
            real[(i + m, j + n)] = z.re;
        }
    }
    let mut rhs = nalgebra::DVector::zeros(2 * m);
    for (i, z) in b.iter().enumerate() {
        rhs[i] = z.re;
        rhs[i + m] = z.im;
    }
    let svd = real.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if sigma_min > 0.0 { sigma_max / sigma_min } else { f64::INFINITY };
    let x = svd.solve(&rhs, rel_tol * sigma_max.max(1e-300)).map_err(|e| {
        AsymptoticsError::DetectionFailure { condition, details: e.to_string() }
    })?;
    let sol = (0..n).map(|j| Complex64::new(x[j], x[j + n])).collect();
    Ok((sol, condition))
}

/// Least-squares residual of fitting the raw sequence with the full
/// polynomial-weighted basis at the given phases; the polish objective.
fn phase_fit_residual(
    sequence: &[(i64, Complex64)],
    phases: &[f64],
    tops: &[f64],
    tail_columns: usize,
) -> f64 {
    if sequence.len() < phases.len() * tail_columns {
        return f64::INFINITY;
    }
    let (a, b) = phase_design(sequence, phases, tops, tail_columns);
    match lstsq(&a, &b, Accumulation::Double, 1e-13) {
        Ok(outcome) => outcome.residual_norm,
        Err(_) => f64::INFINITY,
    }
}

/// One golden-section descent of the polish objective in coordinate `index`,
/// over a window that stays well inside the gap to the nearest other phase.
fn polish_coordinate(
    sequence: &[(i64, Complex64)],
    phases: &mut [f64],
    index: usize,
    tops: &[f64],
    window: f64,
    tail_columns: usize,
) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let center = phases[index];
    let (mut lo, mut hi) = (center - window, center + window);
    let eval = |q: f64, phases: &mut [f64]| {
        phases[index] = q;
        phase_fit_residual(sequence, phases, tops, tail_columns)
    };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1, phases);
    let mut f2 = eval(x2, phases);
    for _ in 0..POLISH_ITERATIONS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1, phases);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2, phases);
        }
    }
    phases[index] = if f1 <= f2 { x1 } else { x2 };
}

/// Weighted basis design and right-hand side at the given phases; family j
/// gets the power ladder k^(tops[j] - p/2), p = 0..tail_columns.
fn phase_design(
    sequence: &[(i64, Complex64)],
    phases: &[f64],
    tops: &[f64],
    tail_columns: usize,
) -> (DMatrix<Complex64>, Vec<Complex64>) {
    let rows = sequence.len();
    let mut a = DMatrix::zeros(rows, phases.len() * tail_columns);
    let mut b = Vec::with_capacity(rows);
    for (i, (k, z)) in sequence.iter().enumerate() {
        let kf = *k as f64;
        let weight = 1.0 / z.norm().max(1.0);
        for (j, q) in phases.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, TAU * q * kf);
            for p in 0..tail_columns {
                a[(i, j * tail_columns + p)] = phase * kf.powf(tops[j] - p as f64 / 2.0) * weight;
            }
        }
        b.push(z * weight);
    }
    (a, b)
}

/// Per-family leading degrees, estimated from a uniform-ladder fit by the
/// contribution each column makes at the middle of the grid. The 1e-2
/// relative cut rejects the spurious up-ladder coefficients a residual phase
/// error induces (they are smaller than the genuine leading contribution by
/// about 2 pi k delta-q) while keeping genuine leading terms.
fn family_top_degrees(
    sequence: &[(i64, Complex64)],
    phases: &[f64],
    uniform_top: f64,
    tail_columns: usize,
    headroom: f64,
) -> Vec<f64> {
    let fallback = vec![uniform_top; phases.len()];
    let scan_top = uniform_top + headroom;
    let scan_columns = tail_columns + (2.0 * headroom) as usize;
    if sequence.len() < phases.len() * scan_columns {
        return fallback;
    }
    let scan = vec![scan_top; phases.len()];
    let (a, b) = phase_design(sequence, phases, &scan, scan_columns);
    let Ok(fit) = lstsq(&a, &b, Accumulation::Double, 1e-13) else {
        return fallback;
    };
    let k_mid = sequence[sequence.len() / 2].0 as f64;
    phases
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let contributions: Vec<f64> = (0..scan_columns)
                .map(|p| {
                    fit.x[j * scan_columns + p].norm()
                        * k_mid.powf(scan_top - p as f64 / 2.0)
                })
                .collect();
            let family_max = contributions.iter().copied().fold(0.0, f64::max);
            if family_max == 0.0 {
                return uniform_top;
            }
            let lead = contributions
                .iter()
                .position(|c| *c >= 1e-2 * family_max)
                .unwrap_or(0);
            scan_top - lead as f64 / 2.0
        })
        .collect()
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Joint Gauss-Newton refinement of all phases at once, using the analytic
/// Kaufman Jacobian J_j = -P_perp (dA/dq_j) x of the projected residual.
/// Three implementation notes earned the hard way. Coordinate descent alone
/// stalls: the per-phase power-ladder subspaces overlap enough that one
/// phase's conditional optimum moves by several times the other phases'
/// errors. Finite-differencing the projected residual instead of using the
/// analytic Jacobian picks up the projector's own derivative and silently
/// doubles the normal matrix, turning Newton steps into half steps. And the
/// ladders must top out at each family's own leading degree: a ladder
/// extending above it absorbs first-order phase error into an up-shifted
/// coefficient (k times the leading power stays inside the span), leaving a
/// flat quartic optimum that no optimizer can localize sharply.
fn joint_gauss_newton(
    sequence: &[(i64, Complex64)],
    phases: &mut [f64],
    tops: &[f64],
    window: f64,
    tail_columns: usize,
) {
    let n = phases.len();
    if n == 0 || sequence.len() < n * tail_columns {
        return;
    }
    for _ in 0..12 {
        let (a, b) = phase_design(sequence, phases, tops, tail_columns);
        let Ok(fit) = lstsq(&a, &b, Accumulation::Double, 1e-13) else {
            return;
        };
        let r0 = crate::numeric::lstsq::residuals(&a, &fit.x, &b);
        let m = r0.len();
        let norm0 = vec_norm(&r0);
        let mut jac = DMatrix::<f64>::zeros(2 * m, n);
        for j in 0..n {
            // v = (dA/dq_j) x: only family j's columns depend on q_j, and
            // they all share the factor exp(2 pi i k q_j), so the derivative
            // is 2 pi i k times family j's share of the fitted model.
            let mut v = vec![Complex64::new(0.0, 0.0); m];
            for (i, (k, _)) in sequence.iter().enumerate() {
                let mut share = Complex64::new(0.0, 0.0);
                for p in 0..tail_columns {
                    let c = j * tail_columns + p;
                    share += a[(i, c)] * fit.x[c];
                }
                v[i] = Complex64::new(0.0, TAU * *k as f64) * share;
            }
            // J_j = -(v - A A^+ v): project out the column space.
            let Ok(proj) = lstsq(&a, &v, Accumulation::Double, 1e-13) else {
                return;
            };
            let w = crate::numeric::lstsq::residuals(&a, &proj.x, &v);
            for i in 0..m {
                jac[(i, j)] = -w[i].re;
                jac[(i + m, j)] = -w[i].im;
            }
        }
        let mut rhs = nalgebra::DVector::zeros(2 * m);
        for (i, z) in r0.iter().enumerate() {
            rhs[i] = -z.re;
            rhs[i + m] = -z.im;
        }
        let svd = jac.svd(true, true);
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let Ok(delta) = svd.solve(&rhs, 1e-12 * sigma_max.max(1e-300)) else {
            return;
        };
        // Damped acceptance: halve the step until the residual improves.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..5 {
            let trial: Vec<f64> = phases
                .iter()
                .enumerate()
                .map(|(j, q)| q + (scale * delta[j]).clamp(-window / 2.0, window / 2.0))
                .collect();
            let (at, bt) = phase_design(sequence, &trial, tops, tail_columns);
            let Ok(ft) = lstsq(&at, &bt, Accumulation::Double, 1e-13) else {
                scale *= 0.5;
                continue;
            };
            // Same residual measure as norm0; the QR-reported norm differs
            // at roundoff scale and would veto genuine late-stage progress.
            let rt = crate::numeric::lstsq::residuals(&at, &ft.x, &bt);
            if vec_norm(&rt) <= norm0 {
                phases.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return;
        }
        let step_size = (0..n).map(|j| (scale * delta[j]).abs()).fold(0.0, f64::max);
        if step_size < 1e-13 {
            return;
        }
    }
}

/// Residual-ratio gate for dropping a redundant detected phase: a phase
/// survives only if removing it makes the best reduced fit worse by more
/// than this factor (with an absolute noise floor, so models already at
/// roundoff compare as equals).
const REDUNDANT_PHASE_FACTOR: f64 = 4.0;
const REDUNDANT_PHASE_FLOOR: f64 = 1e-12;

/// Full polish of a candidate phase set: golden-section coordinate descent,
/// then alternating top-scan / joint Gauss-Newton rounds, then one raised
/// top rescan kept only when it explains the data better. Returns the
/// polished phases and the final relative fit residual. The search window
/// and ladder depth are derived from the set itself, so a reduced set gets
/// the wider window and deeper ladder its family count allows.
fn polish_phase_set(
    sequence: &[(i64, Complex64)],
    mut phases: Vec<f64>,
    degree: f64,
    modulus: f64,
) -> (Vec<f64>, f64) {
    if phases.is_empty() {
        return (phases, f64::INFINITY);
    }
    let min_gap = if phases.len() > 1 {
        let mut g = f64::INFINITY;
        for i in 0..phases.len() {
            for j in i + 1..phases.len() {
                g = g.min(circular_distance(phases[i], phases[j], modulus));
            }
        }
        g
    } else {
        modulus
    };
    let window = (min_gap / 8.0).min(0.02 * modulus).max(1e-9);
    // Ladder depth for the polish objective: deep enough to reach k^0 even
    // when the top scan raises a family above the dominant-degree estimate
    // (integer-step data has live coefficients all the way down), bounded by
    // the sample count so the fit stays overdetermined.
    let families = phases.len();
    let desired = ((2.0 * (degree + TOP_HEADROOM)).floor().max(0.0) as usize + 1)
        .max(POLISH_TAIL_COLUMNS);
    let tail_columns = desired.min(sequence.len().saturating_sub(2) / families).max(1);
    let uniform = vec![degree; phases.len()];
    for _ in 0..POLISH_CYCLES {
        let mut moved = 0.0f64;
        for i in 0..phases.len() {
            let before = phases[i];
            polish_coordinate(sequence, &mut phases, i, &uniform, window, tail_columns);
            moved = moved.max((phases[i] - before).abs());
        }
        if moved < 1e-13 * modulus {
            break;
        }
    }
    // The ladder tops and the phases must be solved together: top detection
    // needs sharp phases (residual phase error shows up as spurious
    // up-ladder coefficients), and sharp phases need correctly topped
    // ladders. Alternate until the tops stop changing.
    // Scans stay capped at the dominant-degree estimate while phases are
    // rough: at this error level the up-rung absorbers pass the contribution
    // cut, and a top locked in above the true leading degree flattens the
    // Gauss-Newton objective in that phase.
    let mut tops = family_top_degrees(sequence, &phases, degree, tail_columns, 0.0);
    for _ in 0..3 {
        joint_gauss_newton(sequence, &mut phases, &tops, window, tail_columns);
        let refreshed = family_top_degrees(sequence, &phases, degree, tail_columns, 0.0);
        if refreshed == tops {
            break;
        }
        tops = refreshed;
    }
    // The dominant-degree estimate itself can round a half-step low, leaving
    // the true leading degree outside every capped ladder and a misfit floor
    // that hides the last digits of the phases. Rescan with upward headroom
    // now that the phases are sharp, and keep the raised tops only if they
    // actually explain the data better.
    let raised = family_top_degrees(sequence, &phases, degree, tail_columns, TOP_HEADROOM);
    if raised != tops {
        let mut alt = phases.clone();
        joint_gauss_newton(sequence, &mut alt, &raised, window, tail_columns);
        let before = phase_fit_residual(sequence, &phases, &tops, tail_columns);
        let after = phase_fit_residual(sequence, &alt, &raised, tail_columns);
        if after < before {
            phases = alt;
            tops = raised;
        }
    }
    let residual = phase_fit_residual(sequence, &phases, &tops, tail_columns);
    (phases, residual)
}

/// Detects the distinct unit phases of a sequence on an arithmetic level
/// grid. Returns principal representatives q in [0, 1/step); the true phase
/// is congruent to the returned one modulo 1/step.
pub fn prony_detect(
    sequence: &[(i64, Complex64)],
    max_terms: usize,
) -> Result<DetectedPhases, AsymptoticsError> {
    let needed = 2 * max_terms + 2;
    if sequence.len() < needed {
        return Err(AsymptoticsError::TooFewSamples {
            needed,
            got: sequence.len(),
            context: "phase detection",
        });
    }
    let step = grid_step(sequence)?;
    let modulus = 1.0 / step as f64;
    if max_terms == 0 {
        return Ok(DetectedPhases { phases: Vec::new(), modulus, condition: 1.0 });
    }
    let scale = sequence.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(DetectedPhases { phases: Vec::new(), modulus, condition: 1.0 });
    }

    let degree = dominant_degree(sequence);
    let normalized: Vec<Complex64> = sequence
        .iter()
        .map(|(k, z)| z / (*k as f64).powf(degree))
        .collect();
    let w_scale = normalized.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let w: Vec<Complex64> = normalized.iter().map(|z| z / w_scale).collect();

    // Overfitted recurrence order: extra roots soak up slow drifts.
    let order = (max_terms + 3).min((sequence.len() - 1) / 2);
    let rows = sequence.len() - order;
    let mut a = DMatrix::zeros(rows, order);
    let mut rhs = Vec::with_capacity(rows);
    for i in 0..rows {
        for t in 0..order {
            a[(i, t)] = w[i + t];
        }
        rhs.push(-w[i + order]);
    }
    let (coeffs, condition) = min_norm_solve(&a, &rhs, 1e-10)?;

    let outcome = monic_roots(&coeffs);
    if !outcome.converged {
        return Err(AsymptoticsError::DetectionFailure {
            condition,
            details: format!(
                "root iteration did not converge after {} steps",
                outcome.iterations
            ),
        });
    }

    // Keep near-unit roots; express as circle fractions of the step torus.
    let fractions: Vec<f64> = outcome
        .roots
        .iter()
        .filter(|mu| (mu.norm() - 1.0).abs() < UNIT_CIRCLE_SLACK)
        .map(|mu| (mu.arg() / TAU).rem_euclid(1.0))
        .collect();
    if fractions.is_empty() {
        return Err(AsymptoticsError::DetectionFailure {
            condition,
            details: "no recurrence roots near the unit circle".to_string(),
        });
    }

    // Cluster circle fractions; Jordan-type confluence splinters one true
    // phase into a tight cluster of simple roots.
    let cluster_tol = 5e-3f64.max(DEFAULT_PHASE_SEPARATION * step as f64);
    let mut sorted = fractions;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite fractions"));
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for f in sorted {
        match clusters.last_mut() {
            Some(c) if circular_distance(f, *c.last().expect("nonempty"), 1.0) < cluster_tol => {
                c.push(f)
            }
            _ => clusters.push(vec![f]),
        }
    }
    // Wrap-around merge.
    if clusters.len() > 1 {
        let first = clusters.first().expect("nonempty")[0];
        let last = *clusters.last().expect("nonempty").last().expect("nonempty");
        if circular_distance(first, last, 1.0) < cluster_tol {
            let tail = clusters.pop().expect("nonempty");
            clusters[0].extend(tail);
        }
    }
    let mut candidates: Vec<f64> =
        clusters.iter().map(|c| c[c.len() / 2].rem_euclid(1.0)).collect();

    // Rank candidates by exponential-basis amplitude and keep the strongest.
    if candidates.len() > max_terms {
        let rows = w.len();
        let mut design = DMatrix::zeros(rows, candidates.len());
        for i in 0..rows {
            for (j, f) in candidates.iter().enumerate() {
                design[(i, j)] = Complex64::from_polar(1.0, TAU * f * i as f64);
            }
        }
        let (beta, _) = min_norm_solve(&design, &w, 1e-10)?;
        let mut ranked: Vec<(f64, f64)> =
            candidates.iter().zip(&beta).map(|(f, b)| (*f, b.norm())).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite amplitudes"));
        candidates = ranked.into_iter().take(max_terms).map(|(f, _)| f).collect();
    }

    // Polish in q-space: q = fraction / step, principal in [0, modulus).
    let seeds: Vec<f64> = candidates.iter().map(|f| f / step as f64).collect();
    let (mut phases, mut residual) = polish_phase_set(sequence, seeds, degree, modulus);
    // A polynomial amplitude can masquerade as a cluster of nearby
    // exponentials when the recurrence order allows it, and the split phases
    // then poison downstream fits with nearly dependent ladders.
    // Backward-eliminate any phase the fit does not miss.
    while phases.len() > 1 {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for drop in 0..phases.len() {
            let mut reduced = phases.clone();
            reduced.remove(drop);
            let cand = polish_phase_set(sequence, reduced, degree, modulus);
            if best.as_ref().is_none_or(|(_, r)| cand.1 < *r) {
                best = Some(cand);
            }
        }
        let Some((cand, cand_res)) = best else { break };
        if cand_res <= (residual * REDUNDANT_PHASE_FACTOR).max(REDUNDANT_PHASE_FLOOR) {
            phases = cand;
            residual = cand_res;
        } else {
            break;
        }
    }
    let mut phases: Vec<f64> = phases.iter().map(|q| q.rem_euclid(modulus)).collect();
    phases.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
    Ok(DetectedPhases { phases, modulus, condition })
}

/// One term of an asymptotic expansion: phase, half-integer degree, leading
/// coefficient, and half-integer-step tail coefficients.
#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub q: f64,
    /// Continued-fraction snap of q, when one exists within 1e-7.
    pub q_exact: Option<Rational>,
    /// Leading degree d; the p-th tail coefficient multiplies k^(d - p/2).
    pub degree: Rational,
    pub leading: Complex64,
    pub tail: Vec<Complex64>,
}

impl ExpansionTerm {
    /// Coefficient of k^(degree - p/2); p = 0 is the leading coefficient.
    pub fn coefficient(&self, p: usize) -> Complex64 {
        if p == 0 {
            self.leading
        } else {
            self.tail.get(p - 1).copied().unwrap_or(Complex64::new(0.0, 0.0))
        }
    }

    fn degree_f64(&self) -> f64 {
        (*self.degree.numer() as f64) / (*self.degree.denom() as f64)
    }

    /// Sum of the tail through order p at level k.
    pub fn evaluate_truncated(&self, k: i64, p: usize) -> Complex64 {
        let kf = k as f64;
        let phase = Complex64::from_polar(1.0, TAU * self.q * kf);
        let d = self.degree_f64();
        let mut sum = Complex64::new(0.0, 0.0);
        for t in 0..=p {
            sum += self.coefficient(t) * kf.powf(d - t as f64 / 2.0);
        }
        phase * sum
    }

    pub fn evaluate(&self, k: i64) -> Complex64 {
        self.evaluate_truncated(k, self.tail.len())
    }
}

/// A fitted expansion: finitely many phase terms plus per-level residuals.
#[derive(Clone, Debug)]
pub struct ExpansionModel {
    pub terms: Vec<ExpansionTerm>,
    /// (k, |data - model|) over the fitted levels.
    pub residuals: Vec<(i64, f64)>,
    /// Phases are determined modulo this (1/step of the fitted grid).
    pub modulus: f64,
}

impl ExpansionModel {
    pub fn evaluate(&self, k: i64) -> Complex64 {
        self.terms.iter().map(|t| t.evaluate(k)).sum()
    }

    pub fn evaluate_truncated(&self, k: i64, p: usize) -> Complex64 {
        self.terms.iter().map(|t| t.evaluate_truncated(k, p)).sum()
    }

    /// Largest leading degree across terms; zero for an empty model.
    pub fn max_degree(&self) -> Rational {
        self.terms
            .iter()
            .map(|t| t.degree)
            .max()
            .unwrap_or_else(|| Rational::new(0, 1))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "modulus": self.modulus,
            "terms": self.terms.iter().map(|t| serde_json::json!({
                "q": t.q_exact.map(|r| r.to_string())
                    .unwrap_or_else(|| format!("{:.12}", t.q)),
                "q_float": t.q,
                "d": t.degree.to_string(),
                "leading": [t.leading.re, t.leading.im],
                "tail": t.tail.iter().map(|c| vec![c.re, c.im]).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "residuals": self.residuals.iter()
                .map(|(k, r)| serde_json::json!([k, r])).collect::<Vec<_>>(),
        })
    }
}

fn column_label(q: f64, degree: f64, p: usize) -> String {
    format!("exp(2 pi i k {q:.6}) k^{}", degree - p as f64 / 2.0)
}

/// Fits coefficients for the given phases in the basis
/// exp(2 pi i k q_j) k^(D - p/2), p = 0..=p_max, then selects each term's
/// leading degree as the largest power with coefficient above a relative
/// floor and refits on the pruned basis. Accumulates in double-double.
pub fn fit_model(
    sequence: &[(i64, Complex64)],
    phases: &[f64],
    degree_bound: Rational,
    p_max: usize,
) -> Result<ExpansionModel, AsymptoticsError> {
    fit_model_with(sequence, phases, degree_bound, p_max, Accumulation::Extended)
}

/// [`fit_model`] with an explicit accumulation mode for the two coefficient
/// solves; plain double trades a few digits of coefficient accuracy for
/// speed.
pub fn fit_model_with(
    sequence: &[(i64, Complex64)],
    phases: &[f64],
    degree_bound: Rational,
    p_max: usize,
    accumulation: Accumulation,
) -> Result<ExpansionModel, AsymptoticsError> {
    let step = grid_step(sequence)?;
    let modulus = 1.0 / step as f64;
    for i in 0..phases.len() {
        for j in i + 1..phases.len() {
            if circular_distance(phases[i], phases[j], 1.0) < DEFAULT_PHASE_SEPARATION {
                return Err(AsymptoticsError::PhaseSeparation {
                    q1: phases[i],
                    q2: phases[j],
                    separation: DEFAULT_PHASE_SEPARATION,
                });
            }
        }
    }
    let d_bound = (*degree_bound.numer() as f64) / (*degree_bound.denom() as f64);
    if phases.is_empty() {
        return Ok(ExpansionModel {
            terms: Vec::new(),
            residuals: sequence.iter().map(|(k, z)| (*k, z.norm())).collect(),
            modulus,
        });
    }

    let build = |keep: &[(usize, usize)]| -> (DMatrix<Complex64>, Vec<Complex64>) {
        let rows = sequence.len();
        let mut a = DMatrix::zeros(rows, keep.len());
        let mut b = Vec::with_capacity(rows);
        for (i, (k, z)) in sequence.iter().enumerate() {
            let kf = *k as f64;
            let weight = 1.0 / z.norm().max(1.0);
            for (c, (j, p)) in keep.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, TAU * phases[*j] * kf);
                a[(i, c)] = phase * kf.powf(d_bound - *p as f64 / 2.0) * weight;
            }
            b.push(z * weight);
        }
        (a, b)
    };

    let full: Vec<(usize, usize)> = (0..phases.len())
        .flat_map(|j| (0..=p_max).map(move |p| (j, p)))
        .collect();
    if sequence.len() < full.len() {
        return Err(AsymptoticsError::TooFewSamples {
            needed: full.len(),
            got: sequence.len(),
            context: "model fitting (rows must cover the basis)",
        });
    }
    let (a, b) = build(&full);

    // Collinearity scan before solving: name the offending pair instead of a
    // bare rank error. Catches duplicate phases and grid aliases q' = q + m/step.
    let norms: Vec<f64> = (0..a.ncols()).map(|c| a.column(c).norm()).collect();
    for c1 in 0..a.ncols() {
        for c2 in c1 + 1..a.ncols() {
            if norms[c1] == 0.0 || norms[c2] == 0.0 {
                continue;
            }
            let dot: Complex64 = a.column(c1).iter().zip(a.column(c2).iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            if dot.norm() / (norms[c1] * norms[c2]) > 1.0 - 1e-10 {
                let (j1, p1) = full[c1];
                let (j2, p2) = full[c2];
                return Err(AsymptoticsError::Collinearity {
                    first: column_label(phases[j1], d_bound, p1),
                    second: column_label(phases[j2], d_bound, p2),
                });
            }
        }
    }

    let outcome = lstsq(&a, &b, accumulation, 1e-13)?;

    // Leading-degree selection: largest power whose coefficient clears the
    // relative floor; phases with nothing above the floor are dropped.
    let coeff_max = outcome.x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = COEFFICIENT_FLOOR * coeff_max;
    let mut leading_p: Vec<Option<usize>> = vec![None; phases.len()];
    for (c, (j, p)) in full.iter().enumerate() {
        if outcome.x[c].norm() > floor && leading_p[*j].is_none() {
            leading_p[*j] = Some(*p);
        }
    }

    let pruned: Vec<(usize, usize)> = full
        .iter()
        .copied()
        .filter(|(j, p)| leading_p[*j].is_some_and(|lead| *p >= lead))
        .collect();
    if pruned.is_empty() {
        return Ok(ExpansionModel {
            terms: Vec::new(),
            residuals: sequence.iter().map(|(k, z)| (*k, z.norm())).collect(),
            modulus,
        });
    }
    let (a2, b2) = build(&pruned);
    let refit = lstsq(&a2, &b2, accumulation, 1e-13)?;

    let mut terms = Vec::new();
    for (j, q) in phases.iter().enumerate() {
        let Some(lead) = leading_p[j] else { continue };
        let coeffs: Vec<Complex64> = pruned
            .iter()
            .zip(&refit.x)
            .filter(|((jj, _), _)| *jj == j)
            .map(|(_, c)| *c)
            .collect();
        let degree = degree_bound - Rational::new(lead as i64, 2);
        terms.push(ExpansionTerm {
            q: *q,
            q_exact: rational_snap(*q, 4096, 1e-7),
            degree,
            leading: coeffs[0],
            tail: coeffs[1..].to_vec(),
        });
    }
    let model = ExpansionModel { terms, residuals: Vec::new(), modulus };
    let residuals = sequence
        .iter()
        .map(|(k, z)| (*k, (z - model.evaluate(*k)).norm()))
        .collect();
    Ok(ExpansionModel { residuals, ..model })
}

/// One truncation order of the remainder check.
#[derive(Clone, Debug)]
pub struct OrderCheck {
    pub order: usize,
    /// (window length, C_p over that window); windows grow toward larger k.
    pub window_constants: Vec<(usize, f64)>,
    pub stable: bool,
}

/// Empirical Poincare-remainder report: for each truncation order p the
/// constant C_p = max |Z(k) - S_p(k)| k^((p+1)/2 - d) over growing tail
/// windows; a genuine expansion has C_p approaching a limit, a wrong model
/// has it growing with the window.
#[derive(Clone, Debug)]
pub struct PoincareReport {
    pub orders: Vec<OrderCheck>,
    pub degree: Rational,
    pub passed: bool,
}

pub fn poincare_check(
    sequence: &[(i64, Complex64)],
    model: &ExpansionModel,
    p_max: usize,
) -> PoincareReport {
    let degree = model.max_degree();
    let d = (*degree.numer() as f64) / (*degree.denom() as f64);
    // Held-out proxy: the last half of the sequence, examined through
    // prefixes of increasing maximal level.
    let tail_start = sequence.len() / 2;
    let tail = &sequence[tail_start..];
    let mut lengths: Vec<usize> = [1, 2, 3]
        .iter()
        .map(|&third| (tail.len() * third).div_ceil(3).max(1))
        .collect();
    lengths.dedup();

    let scale = sequence.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let atol = STABILITY_ATOL * scale.max(1.0).powf(0.0).max(1.0);

    let mut orders = Vec::new();
    for p in 0..=p_max {
        let mut window_constants = Vec::new();
        for &len in &lengths {
            let c_p = tail[..len]
                .iter()
                .map(|(k, z)| {
                    let err = (z - model.evaluate_truncated(*k, p)).norm();
                    err * (*k as f64).powf((p as f64 + 1.0) / 2.0 - d)
                })
                .fold(0.0, f64::max);
            window_constants.push((len, c_p));
        }
        let stable = window_constants.windows(2).all(|w| {
            let (prev, next) = (w[0].1, w[1].1);
            next.is_finite() && (next <= STABILITY_FACTOR * prev + atol)
        }) && window_constants.iter().all(|(_, c)| c.is_finite());
        orders.push(OrderCheck { order: p, window_constants, stable });
    }
    let passed = orders.iter().all(|o| o.stable);
    PoincareReport { orders, degree, passed }
}

/// How a growth degree was determined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeMethod {
    /// Exact finite differences on integer values.
    IntegerDifferences,
    /// Log-log slope regression on magnitudes, rounded to a half-integer.
    LogLogSlope,
}

#[derive(Clone, Debug)]
pub struct DegreeEstimate {
    pub degree: Rational,
    pub method: DegreeMethod,
}

/// Exact route: does the sequence consist of integers on a uniform grid?
fn as_integers(sequence: &[(i64, Complex64)]) -> Option<Vec<i128>> {
    if grid_step(sequence).is_err() {
        return None;
    }
    sequence
        .iter()
        .map(|(_, z)| {
            let near = z.re.round();
            (z.im.abs() <= 1e-9 * (1.0 + z.re.abs())
                && (z.re - near).abs() < 1e-6
                && near.abs() < 9e15)
                .then_some(near as i128)
        })
        .collect()
}

/// Growth degree of a single-phase (or phase-removed) sequence: exact finite
/// differences when the values are integers, otherwise a log-log slope
/// rounded to the nearest half-integer.
pub fn growth_degree(sequence: &[(i64, Complex64)]) -> Result<DegreeEstimate, AsymptoticsError> {
    if sequence.len() < 3 {
        return Err(AsymptoticsError::TooFewSamples {
            needed: 3,
            got: sequence.len(),
            context: "degree estimation",
        });
    }
    if let Some(values) = as_integers(sequence) {
        if values.iter().all(|&v| v == 0) {
            return Ok(DegreeEstimate {
                degree: Rational::new(0, 1),
                method: DegreeMethod::IntegerDifferences,
            });
        }
        let mut diffs = values;
        let mut order = 0usize;
        while diffs.len() > 1 {
            diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
            order += 1;
            if diffs.iter().all(|&v| v == 0) {
                return Ok(DegreeEstimate {
                    degree: Rational::new(order as i64 - 1, 1),
                    method: DegreeMethod::IntegerDifferences,
                });
            }
        }
        // Integers that never difference to zero: not polynomial on this
        // range; fall through to the slope estimate.
    }
    let points: Vec<(f64, f64)> = sequence
        .iter()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(k, z)| ((*k as f64).ln(), z.norm().ln()))
        .collect();
    if points.len() < 3 {
        return Err(AsymptoticsError::DegreeUndetermined {
            details: "fewer than three nonzero samples for slope regression".to_string(),
        });
    }
    let n = points.len() as f64;
    let (sx, sy): (f64, f64) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy): (f64, f64) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(AsymptoticsError::DegreeUndetermined {
            details: "degenerate level grid for slope regression".to_string(),
        });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let half = (slope * 2.0).round() / 2.0;
    if (slope - half).abs() > 0.15 {
        return Err(AsymptoticsError::DegreeUndetermined {
            details: format!(
                "log-log slope {slope:.4} is not within 0.15 of a half-integer"
            ),
        });
    }
    Ok(DegreeEstimate {
        degree: Rational::new((half * 2.0).round() as i64, 2),
        method: DegreeMethod::LogLogSlope,
    })
}
