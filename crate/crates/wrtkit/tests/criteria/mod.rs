//! The release criteria as reusable runners. Each returns a one-line summary
//! on success or an explanation of the first failure, so the acceptance
//! target can print one line per criterion and the per-area suites can rerun
//! the same drivers while adding finer-grained assertions.

#![allow(dead_code)]

#[path = "../common/mod.rs"]
mod oracles;

use nalgebra::DMatrix;
use num_complex::Complex64;
use wrtkit::asymptotics::{circular_distance, fit_model, prony_detect, ExpansionTerm};
use wrtkit::cli::{cmd_verify_aec, cmd_verify_grc, RunConfig};
use wrtkit::invariants::{invariant_sequence, Convention, MappingClassSpec};
use wrtkit::lie_data::{Rational, RationalWeight};
use wrtkit::modular::{fusion_coefficient_md, s_matrix, ModularData};
use wrtkit::report::{CheckStatus, Report};
use wrtkit::repvar::eigenspace_dim;
use wrtkit::samples::{
    compatible_holonomy, identity_mapping, rng_from_seed, sample_representation, SampleKind,
};
use wrtkit::scenario::Scenario;
use wrtkit::surfaces::{moduli_dimension, MarkedPoint, SurfaceMarking};

use oracles::{synthetic_value, SyntheticTerm, G2_N0_FROZEN, G2_N1_FROZEN, G2_N2_FROZEN};
use rand::Rng;

pub fn half_omega_marking(g: u32, n: usize) -> SurfaceMarking {
    let alpha = RationalWeight::from_dynkin(2, &[Rational::new(1, 2)]).expect("valid coweight");
    SurfaceMarking::new(g, 2, vec![MarkedPoint::full(alpha); n]).expect("valid marking")
}

// =========================================================================
// Criterion 1: modular-data suite
// =========================================================================

/// Every fusion coefficient at once: N_a = S diag(S_{a.}/S_{0.}) S^H, split
/// into four real matrix products so the dense f64 kernels carry the load.
/// This is an independent route to the same numbers as `fusion_coefficient`,
/// which accumulates one Verlinde sum per coefficient in double-double.
pub struct FusionSweep {
    pub coefficients: usize,
    pub max_residue: f64,
    pub min_value: f64,
}

pub fn fusion_residue_sweep(md: &ModularData) -> FusionSweep {
    let s = md.s();
    let l = s.nrows();
    let vac = md.label_set().vacuum_index();
    let a_re = DMatrix::<f64>::from_fn(l, l, |i, j| s[(i, j)].re);
    let a_im = DMatrix::<f64>::from_fn(l, l, |i, j| s[(i, j)].im);
    let at = a_re.transpose();
    let bt = a_im.transpose();
    let mut sweep =
        FusionSweep { coefficients: 0, max_residue: 0.0, min_value: f64::INFINITY };
    let mut p = DMatrix::<f64>::zeros(l, l);
    let mut q = DMatrix::<f64>::zeros(l, l);
    for a in 0..l {
        for j in 0..l {
            let r = s[(a, j)] / s[(vac, j)];
            for i in 0..l {
                let (re, im) = (a_re[(i, j)], a_im[(i, j)]);
                p[(i, j)] = re * r.re - im * r.im;
                q[(i, j)] = re * r.im + im * r.re;
            }
        }
        let m_re = &p * &at + &q * &bt;
        let m_im = &q * &at - &p * &bt;
        for i in 0..l {
            for j in 0..l {
                let rounded = m_re[(i, j)].round();
                let residue = (m_re[(i, j)] - rounded).abs().max(m_im[(i, j)].abs());
                sweep.max_residue = sweep.max_residue.max(residue);
                sweep.min_value = sweep.min_value.min(rounded);
                sweep.coefficients += 1;
            }
        }
    }
    sweep
}

pub fn modular_data_suite() -> Result<String, String> {
    let mut max_unitarity = 0.0f64;
    let mut max_symmetry = 0.0f64;
    let mut max_st_cubed = 0.0f64;
    let mut max_residue = 0.0f64;
    let mut coefficients = 0usize;
    let mut rng = rng_from_seed(41);
    for n in 2..=4usize {
        for k in 1..=10i64 {
            let md = s_matrix(n, k).map_err(|e| format!("s_matrix({n}, {k}): {e}"))?;
            let (u, sym, st) =
                (md.unitarity_defect(), md.symmetry_defect(), md.st_cubed_defect());
            if u >= 1e-10 || sym >= 1e-10 {
                return Err(format!("su({n}) k={k}: S defects u={u:.3e} sym={sym:.3e}"));
            }
            if st >= 1e-9 {
                return Err(format!("su({n}) k={k}: (ST)^3 defect {st:.3e}"));
            }
            max_unitarity = max_unitarity.max(u);
            max_symmetry = max_symmetry.max(sym);
            max_st_cubed = max_st_cubed.max(st);

            let sweep = fusion_residue_sweep(&md);
            if sweep.max_residue >= 1e-6 {
                return Err(format!(
                    "su({n}) k={k}: fusion residue {:.3e} >= 1e-6",
                    sweep.max_residue
                ));
            }
            if sweep.min_value < 0.0 {
                return Err(format!(
                    "su({n}) k={k}: negative fusion coefficient {}",
                    sweep.min_value
                ));
            }
            max_residue = max_residue.max(sweep.max_residue);
            coefficients += sweep.coefficients;

            // Spot-check the matrix route against the per-coefficient route.
            let labels = md.label_set().labels();
            for _ in 0..8 {
                let (a, b, c) = (
                    rng.gen_range(0..labels.len()),
                    rng.gen_range(0..labels.len()),
                    rng.gen_range(0..labels.len()),
                );
                let direct = fusion_coefficient_md(&md, &labels[a], &labels[b], &labels[c])
                    .map_err(|e| format!("su({n}) k={k} fusion: {e}"))?;
                let vac = md.label_set().vacuum_index();
                let s = md.s();
                let sum: Complex64 = (0..labels.len())
                    .map(|d| s[(a, d)] * s[(b, d)] * s[(c, d)].conj() / s[(vac, d)])
                    .sum();
                if (sum.re.round() as i64) != direct as i64 {
                    return Err(format!(
                        "su({n}) k={k}: fusion routes disagree at ({a},{b},{c}): {} vs {direct}",
                        sum.re
                    ));
                }
            }
        }
    }

    // su(2) fusion against the closed form, exhaustively.
    for k in 1..=12i64 {
        let md = s_matrix(2, k).map_err(|e| format!("s_matrix(2, {k}): {e}"))?;
        let labels = md.label_set().labels();
        for a in 0..labels.len() {
            for b in 0..labels.len() {
                for c in 0..labels.len() {
                    let got = fusion_coefficient_md(&md, &labels[a], &labels[b], &labels[c])
                        .map_err(|e| format!("su(2) k={k} fusion: {e}"))?;
                    let want =
                        oracles::su2_fusion(k, a as i64, b as i64, c as i64);
                    if got != want {
                        return Err(format!(
                            "su(2) k={k}: N_{{{a},{b}}}^{c} = {got}, closed form {want}"
                        ));
                    }
                }
            }
        }
    }

    Ok(format!(
        "defects max unitarity {max_unitarity:.1e}, symmetry {max_symmetry:.1e}, \
         (ST)^3 {max_st_cubed:.1e}; {coefficients} fusion coefficients, max residue \
         {max_residue:.1e}, none negative; su(2) fusion matches the closed form for k <= 12"
    ))
}

// =========================================================================
// Criterion 2: Verlinde polynomiality
// =========================================================================

/// Exact finite differences: the sweep values must be a degree-exactly-d
/// integer polynomial on the (arithmetic) admissible grid.
pub fn assert_integer_polynomial(points: &[(i64, i128)], degree: usize) -> Result<(), String> {
    if points.len() < degree + 2 {
        return Err(format!(
            "need at least {} points to certify degree {degree}, got {}",
            degree + 2,
            points.len()
        ));
    }
    let step = points[1].0 - points[0].0;
    if step <= 0 || points.windows(2).any(|w| w[1].0 - w[0].0 != step) {
        return Err("admissible grid is not arithmetic".into());
    }
    let mut diffs: Vec<i128> = points.iter().map(|(_, v)| *v).collect();
    for order in 1..=degree + 1 {
        for i in 0..diffs.len() - 1 {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
        diffs.pop();
        if order == degree {
            if diffs.iter().any(|d| *d == 0) {
                return Err(format!(
                    "order-{degree} differences vanish somewhere: degree < {degree}"
                ));
            }
            let first = diffs[0];
            if diffs.iter().any(|d| *d != first) {
                return Err(format!(
                    "order-{degree} differences are not constant: {diffs:?}"
                ));
            }
        }
    }
    if diffs.iter().any(|d| *d != 0) {
        return Err(format!(
            "order-{} differences do not vanish: {diffs:?}",
            degree + 1
        ));
    }
    Ok(())
}

pub fn sweep_magnitudes(
    marking: &SurfaceMarking,
    k0: i64,
    s_max: u32,
) -> Result<Vec<(i64, i128)>, String> {
    let seq = invariant_sequence(marking, &MappingClassSpec::identity(), k0, s_max, Convention::Cs)
        .map_err(|e| format!("invariant_sequence: {e}"))?;
    Ok(seq.entries().iter().map(|e| (e.k, e.magnitude_int as i128)).collect())
}

pub fn verlinde_polynomiality() -> Result<String, String> {
    let configs: [(usize, usize, &[(i64, i128)]); 3] = [
        (0, 3, &G2_N0_FROZEN),
        (1, 4, &G2_N1_FROZEN),
        (2, 5, &G2_N2_FROZEN),
    ];
    let mut counts = Vec::new();
    for (n_points, degree, frozen) in configs {
        let marking = half_omega_marking(2, n_points);
        let dim = moduli_dimension(&marking);
        if dim != 2 * degree as i64 {
            return Err(format!(
                "moduli dimension for (g=2, n={n_points}) is {dim}, expected {}",
                2 * degree
            ));
        }
        let points = sweep_magnitudes(&marking, 2, 16)?;
        // The closed-surface frozen values sit at k = 1..3, below this grid.
        let frozen_grid =
            if n_points == 0 { sweep_magnitudes(&marking, 1, 3)? } else { points.clone() };
        for (k, want) in frozen {
            match frozen_grid.iter().find(|(pk, _)| pk == k) {
                Some((_, got)) if got == want => {}
                Some((_, got)) => {
                    return Err(format!(
                        "n={n_points}, k={k}: magnitude {got}, frozen value {want}"
                    ))
                }
                None => return Err(format!("n={n_points}: level {k} missing from sweep")),
            }
        }
        if n_points == 0 {
            for (k, v) in &points {
                let want = (k + 1) * (k + 2) * (k + 3) / 6;
                if *v != want as i128 {
                    return Err(format!("closed genus 2, k={k}: {v} != {want}"));
                }
            }
        }
        assert_integer_polynomial(&points, degree)
            .map_err(|e| format!("(g=2, n={n_points}), degree {degree}: {e}"))?;
        counts.push(points.len());
    }
    Ok(format!(
        "degrees 3/4/5 exact on {}/{}/{} admissible levels of k = 2s, s <= 16; \
         frozen values and the closed genus-2 form match",
        counts[0], counts[1], counts[2]
    ))
}

// =========================================================================
// Criterion 3: Dehn-twist asymptotic-expansion check
// =========================================================================

pub const AEC_SINGLE: &str = r#"{
  "schema_version": 1,
  "name": "aec single twist",
  "surface": { "genus": 2, "rank": 2, "points": [{ "coweight": ["1/2"] }] },
  "mapping_class": { "type": "dehn-twist-word", "twists": [[0, 1]] },
  "sweep": { "k0": 4, "s_max": 16 }
}"#;

pub const AEC_MULTI: &str = r#"{
  "schema_version": 1,
  "name": "aec multi twist",
  "surface": {
    "genus": 2,
    "rank": 2,
    "points": [{ "coweight": ["1/2"] }, { "coweight": ["1/2"] }]
  },
  "mapping_class": { "type": "dehn-twist-word", "twists": [[0, 1], [1, 2]] },
  "sweep": { "k0": 2, "s_max": 16 }
}"#;

pub const AEC_IDENTITY: &str = r#"{
  "schema_version": 1,
  "name": "aec identity",
  "surface": { "genus": 2, "rank": 2, "points": [{ "coweight": ["1/2"] }] },
  "mapping_class": { "type": "identity" },
  "sweep": { "k0": 4, "s_max": 16 }
}"#;

pub const AEC_CONTROL: &str = r#"{
  "schema_version": 1,
  "name": "aec corrupted control",
  "surface": { "genus": 2, "rank": 2, "points": [{ "coweight": ["1/2"] }] },
  "mapping_class": { "type": "dehn-twist-word", "twists": [[0, 1]] },
  "sweep": { "k0": 4, "s_max": 16 },
  "inject_phase": 0.05
}"#;

pub fn check_status(report: &Report, id: &str) -> Option<CheckStatus> {
    report.checks().iter().find(|c| c.id == id).map(|c| c.status)
}

/// Largest "circular distance x" figure quoted in the report's check details.
pub fn quoted_distance(report: &Report) -> Option<f64> {
    report
        .checks()
        .iter()
        .filter_map(|c| {
            let tail = c.detail.split("circular distance ").nth(1)?;
            tail.split([',', ')']).next()?.trim().parse::<f64>().ok()
        })
        .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
}

pub fn dehn_twist_aec() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| format!("tempdir: {e}"))?;
    let cfg = RunConfig::new(dir.path());
    let mut max_distance = 0.0f64;
    for (label, text) in
        [("single", AEC_SINGLE), ("multi", AEC_MULTI), ("identity", AEC_IDENTITY)]
    {
        let sc = Scenario::from_json_str(text).map_err(|e| format!("{label}: {e}"))?;
        let outcome = cmd_verify_aec(&sc, &cfg).map_err(|e| format!("{label}: {e}"))?;
        let report = outcome.report.as_ref().ok_or(format!("{label}: no report"))?;
        if !report.passed() {
            let failing: Vec<&str> = report
                .checks()
                .iter()
                .filter(|c| c.status == CheckStatus::Fail)
                .map(|c| c.id)
                .collect();
            return Err(format!("{label}-twist scenario failed checks {failing:?}"));
        }
        if report.checks().len() != 3 {
            return Err(format!("{label}: expected 3 checks, got {}", report.checks().len()));
        }
        max_distance = max_distance.max(quoted_distance(report).unwrap_or(f64::NAN));
    }
    if !(max_distance < 1e-9) {
        return Err(format!("phase distance {max_distance:.3e} not under 1e-9"));
    }

    let sc = Scenario::from_json_str(AEC_CONTROL).map_err(|e| format!("control: {e}"))?;
    let outcome = cmd_verify_aec(&sc, &cfg).map_err(|e| format!("control: {e}"))?;
    let report = outcome.report.as_ref().ok_or("control: no report")?;
    if report.passed() || outcome.exit_code() != 8 {
        return Err("corrupted control did not fail".into());
    }
    if check_status(report, "phase-match") != Some(CheckStatus::Fail) {
        return Err("corrupted control failed, but not at phase-match".into());
    }
    for id in ["leading-degree", "poincare-stability"] {
        if check_status(report, id) != Some(CheckStatus::Pass) {
            return Err(format!("corrupted control also failed {id}"));
        }
    }
    Ok(format!(
        "single/multi/identity twists verified, max phase distance {max_distance:.1e} \
         (tolerance 1e-9); corrupted control fails exactly phase-match with exit 8"
    ))
}

// =========================================================================
// Criterion 4: Wang sequence / eigenspace dimension sampling
// =========================================================================

pub struct WangSuiteStats {
    pub total: usize,
    pub rank_stable: usize,
    pub g2_n1_irreducible: usize,
}

pub fn wang_e1_suite() -> Result<WangSuiteStats, String> {
    use wrtkit::repvar::wang_sequence_check;
    let mut stats = WangSuiteStats { total: 0, rank_stable: 0, g2_n1_irreducible: 0 };
    let configs: [(u32, usize, SampleKind, usize); 12] = [
        (2, 0, SampleKind::Irreducible, 12),
        (2, 1, SampleKind::Irreducible, 12),
        (2, 2, SampleKind::Irreducible, 12),
        (3, 0, SampleKind::Irreducible, 12),
        (3, 1, SampleKind::Irreducible, 12),
        (3, 2, SampleKind::Irreducible, 12),
        (2, 0, SampleKind::TorusValued, 8),
        (2, 2, SampleKind::TorusValued, 8),
        (3, 0, SampleKind::TorusValued, 8),
        (3, 2, SampleKind::TorusValued, 8),
        (2, 0, SampleKind::Trivial, 10),
        (3, 0, SampleKind::Trivial, 10),
    ];
    for (ci, (g, n, kind, count)) in configs.iter().enumerate() {
        let marking = half_omega_marking(*g, *n);
        for i in 0..*count {
            let mut rng = rng_from_seed(1000 * ci as u64 + i as u64);
            let rep = sample_representation(&marking, *kind, &mut rng)
                .map_err(|e| format!("(g={g}, n={n}, {}): {e}", kind.as_str()))?;
            let holo = compatible_holonomy(*kind, &mut rng);
            let mapping = identity_mapping(&rep, holo)
                .map_err(|e| format!("(g={g}, n={n}, {}): {e}", kind.as_str()))?;
            let wang = wang_sequence_check(&rep, &mapping)
                .map_err(|e| format!("(g={g}, n={n}, {}) wang: {e}", kind.as_str()))?;
            stats.total += 1;
            // Reducibility notes are expected for torus-valued and trivial
            // samples; only fragile rank decisions disqualify a sample.
            let unstable = wang
                .warnings
                .iter()
                .any(|w| w.contains("rank") || w.contains("violate"));
            if unstable {
                continue; // equality is only asserted for rank-stable samples
            }
            stats.rank_stable += 1;
            if !wang.all_exact() {
                return Err(format!(
                    "(g={g}, n={n}, {}, seed {i}): six-map exactness failed",
                    kind.as_str()
                ));
            }
            // eigenspace_dim cross-checks the quotient-action route against
            // h1_par_f - h0_f internally and errors on disagreement.
            let e1 = eigenspace_dim(&rep, &mapping)
                .map_err(|e| format!("(g={g}, n={n}, {}, seed {i}): {e}", kind.as_str()))?;
            if *kind == SampleKind::Irreducible && (*g, *n) == (2, 1) {
                if e1 != 8 {
                    return Err(format!("irreducible (2,1) sample {i}: E1 = {e1}, expected 8"));
                }
                stats.g2_n1_irreducible += 1;
            }
        }
    }
    if stats.rank_stable < 100 {
        return Err(format!(
            "only {} of {} samples were rank-stable; need at least 100",
            stats.rank_stable, stats.total
        ));
    }
    Ok(stats)
}

pub fn wang_e1_summary() -> Result<String, String> {
    let stats = wang_e1_suite()?;
    Ok(format!(
        "{} samples across 12 (genus, punctures, kind) configurations, {} rank-stable, \
         all six-map reports exact, both eigenspace routes agree everywhere; \
         {} irreducible (2,1) samples all give E1 = 8",
        stats.total, stats.rank_stable, stats.g2_n1_irreducible
    ))
}

// =========================================================================
// Criterion 5: growth-rate pipeline
// =========================================================================

pub const GRC_G2_N1: &str = r#"{
  "schema_version": 1,
  "name": "grc g2 n1",
  "surface": { "genus": 2, "rank": 2, "points": [{ "coweight": ["1/2"] }] },
  "mapping_class": { "type": "identity" },
  "sweep": { "k0": 4, "s_max": 12 },
  "seed": 9,
  "samples": { "kind": "irreducible", "count": 8 }
}"#;

pub const GRC_G2_N2: &str = r#"{
  "schema_version": 1,
  "name": "grc g2 n2",
  "surface": {
    "genus": 2,
    "rank": 2,
    "points": [{ "coweight": ["1/2"] }, { "coweight": ["1/2"] }]
  },
  "mapping_class": { "type": "identity" },
  "sweep": { "k0": 2, "s_max": 12 },
  "seed": 11,
  "samples": { "kind": "irreducible", "count": 8 }
}"#;

pub fn grc_pipeline() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| format!("tempdir: {e}"))?;
    let cfg = RunConfig::new(dir.path());
    let mut degrees = Vec::new();
    for (text, want) in [(GRC_G2_N1, "4"), (GRC_G2_N2, "5")] {
        let sc = Scenario::from_json_str(text).map_err(|e| format!("scenario: {e}"))?;
        let outcome = cmd_verify_grc(&sc, &cfg).map_err(|e| format!("{}: {e}", sc.name()))?;
        let report = outcome.report.as_ref().ok_or(format!("{}: no report", sc.name()))?;
        if !report.passed() {
            return Err(format!("{}: report failed:\n{}", sc.name(), report.render_text()));
        }
        let check = report
            .checks()
            .iter()
            .find(|c| c.id == "grc-degree-match")
            .ok_or(format!("{}: no grc-degree-match check", sc.name()))?;
        if !check.expected.starts_with(want) {
            return Err(format!(
                "{}: expected degree {want}, report says {}",
                sc.name(),
                check.expected
            ));
        }
        degrees.push(want);
    }
    Ok(format!(
        "(2,1) and (2,2) identity scenarios: growth degree of the Verlinde sweep equals \
         max(h1_par - h0)/2 from sampled cohomology ({} and {}), routes independent",
        degrees[0], degrees[1]
    ))
}

// =========================================================================
// Criterion 6: extractor robustness
// =========================================================================

pub struct SyntheticStudy {
    pub models: usize,
    pub max_phase_error: f64,
    pub max_coefficient_error: f64,
}

pub fn random_three_phase_model<R: Rng>(rng: &mut R) -> Vec<SyntheticTerm> {
    let phases = loop {
        let draw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        let mut ok = true;
        for i in 0..3 {
            for j in i + 1..3 {
                if circular_distance(draw[i], draw[j], 1.0) < 0.06 {
                    ok = false;
                }
            }
        }
        if ok {
            break draw;
        }
    };
    phases
        .into_iter()
        .map(|q| {
            let degree = [4.0, 4.5, 5.0][rng.gen_range(0..3)];
            let leading = Complex64::from_polar(
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let tail = (0..2)
                .map(|_| {
                    Complex64::from_polar(
                        rng.gen_range(0.1..0.8),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            SyntheticTerm { q, degree, leading, tail }
        })
        .collect()
}

pub fn synthetic_sequence(terms: &[SyntheticTerm], levels: usize) -> Vec<(i64, Complex64)> {
    (1..=levels as i64)
        .map(|k| {
            let z = synthetic_value(terms, k);
            (k, z + oracles::deterministic_noise(k, 1e-8 * z.norm()))
        })
        .collect()
}

/// Model coefficient of k^exponent for the fitted term, zero when the rung
/// was pruned or lies outside the ladder.
pub fn coefficient_at(term: &ExpansionTerm, exponent: f64) -> Complex64 {
    let d = (*term.degree.numer() as f64) / (*term.degree.denom() as f64);
    let p = 2.0 * (d - exponent);
    let rounded = p.round();
    if rounded < 0.0 || (p - rounded).abs() > 1e-9 {
        return Complex64::new(0.0, 0.0);
    }
    term.coefficient(rounded as usize)
}

pub fn extractor_study(models: usize) -> Result<SyntheticStudy, String> {
    let mut rng = rng_from_seed(2026);
    let mut study =
        SyntheticStudy { models, max_phase_error: 0.0, max_coefficient_error: 0.0 };
    for trial in 0..models {
        let truth = random_three_phase_model(&mut rng);
        let seq = synthetic_sequence(&truth, 64);
        let det = prony_detect(&seq, 3).map_err(|e| format!("trial {trial}: {e}"))?;
        if det.phases.len() != 3 {
            return Err(format!("trial {trial}: detected {} phases", det.phases.len()));
        }
        let fitted = fit_model(&seq, &det.phases, Rational::new(5, 1), 10)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        for t in &truth {
            let err = det
                .phases
                .iter()
                .map(|p| circular_distance(*p, t.q, det.modulus))
                .fold(f64::INFINITY, f64::min);
            if !(err < 1e-6) {
                return Err(format!("trial {trial}: phase {} recovered within {err:.3e}", t.q));
            }
            study.max_phase_error = study.max_phase_error.max(err);

            let term = fitted
                .terms
                .iter()
                .min_by(|a, b| {
                    circular_distance(a.q, t.q, det.modulus)
                        .total_cmp(&circular_distance(b.q, t.q, det.modulus))
                })
                .ok_or(format!("trial {trial}: empty model"))?;
            // Coefficients at the true exponents plus one spurious rung above.
            for p in 0..=5usize {
                let exponent = t.degree + 0.5 - p as f64 / 2.0;
                let want = if p == 0 {
                    Complex64::new(0.0, 0.0)
                } else if p == 1 {
                    t.leading
                } else {
                    t.leading * t.tail.get(p - 2).copied().unwrap_or_default()
                };
                let got = coefficient_at(term, exponent);
                let rel = (got - want).norm() / t.leading.norm();
                if !(rel < 1e-6) {
                    return Err(format!(
                        "trial {trial}: coefficient of k^{exponent} off by {rel:.3e} relative"
                    ));
                }
                study.max_coefficient_error = study.max_coefficient_error.max(rel);
            }
        }
    }
    Ok(study)
}

/// The wrong-phase fit must be detectably worse than the detected-phase fit.
pub fn adversarial_wrong_phase() -> Result<String, String> {
    let mut rng = rng_from_seed(7);
    let truth = random_three_phase_model(&mut rng);
    let seq = synthetic_sequence(&truth, 64);
    let det = prony_detect(&seq, 3).map_err(|e| e.to_string())?;
    let good = fit_model(&seq, &det.phases, Rational::new(5, 1), 10).map_err(|e| e.to_string())?;
    let mut wrong = det.phases.clone();
    wrong[0] = (wrong[0] + 0.02).rem_euclid(1.0);
    let bad = fit_model(&seq, &wrong, Rational::new(5, 1), 10).map_err(|e| e.to_string())?;
    let scale: f64 = seq.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let rel = |model: &wrtkit::asymptotics::ExpansionModel| {
        model.residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max) / scale
    };
    let (good_rel, bad_rel) = (rel(&good), rel(&bad));
    if !(bad_rel > 1e3 * good_rel && bad_rel > 1e-5) {
        return Err(format!(
            "wrong-phase fit was not rejected: residual {bad_rel:.3e} vs {good_rel:.3e}"
        ));
    }
    Ok(format!(
        "wrong-phase refit residual {bad_rel:.1e} vs {good_rel:.1e} for the detected phases"
    ))
}

pub fn extractor_robustness() -> Result<String, String> {
    let study = extractor_study(64)?;
    let adversarial = adversarial_wrong_phase()?;
    Ok(format!(
        "{} random 3-phase models on 64-level grids: max phase error {:.1e}, \
         max relative coefficient error {:.1e} (tolerances 1e-6); {adversarial}",
        study.models, study.max_phase_error, study.max_coefficient_error
    ))
}
