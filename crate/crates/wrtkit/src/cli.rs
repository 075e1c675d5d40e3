//! Scenario-driven command layer: every subcommand reads one scenario
//! document, computes, writes artifacts into an output directory, and exits
//! through a stable code taxonomy so scripts can branch on what failed.
//!
//! Exit codes: 0 success, 1 internal/IO, 2 parse, 3 admissibility,
//! 4 unsupported configuration, 5 precision, 6 invariant violation,
//! 7 empty sweep, 8 verification FAIL. Clap's own usage errors also exit
//! with 2, so every malformed invocation lands in the parse class.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::asymptotics::{
    circular_distance, fit_model_with, growth_degree, poincare_check, prony_detect,
    AsymptoticsError, DegreeEstimate, DegreeMethod, DetectedPhases, ExpansionModel,
    PoincareReport,
};
use crate::cs_values::{cs_value, CsError};
use crate::invariants::{invariant_sequence, Convention, InvariantError, InvariantSequence};
use crate::lie_data::{central_charge, label_set, LieError, Rational};
use crate::modular::{s_matrix, ModularError};
use crate::numeric::lstsq::{Accumulation, LstsqError};
use crate::repvar::{
    eigenspace_dim_with_tol, h0_with_tol, h1_par_with_tol, mapping_torus_cohomology_with_tol,
    wang_sequence_check_with_tol, RepError,
};
use crate::report::{Check, Report};
use crate::samples::{
    compatible_holonomy, identity_mapping, rng_from_seed, sample_representation, SampleError,
};
use crate::scenario::{Scenario, ScenarioError};
use crate::surfaces::{moduli_dimension, SurfaceError};

/// What kind of failure a run ended in; each class has its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureClass {
    Other,
    Parse,
    Admissibility,
    Unsupported,
    Precision,
    InvariantViolation,
    EmptySweep,
    Verification,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Other => 1,
            FailureClass::Parse => 2,
            FailureClass::Admissibility => 3,
            FailureClass::Unsupported => 4,
            FailureClass::Precision => 5,
            FailureClass::InvariantViolation => 6,
            FailureClass::EmptySweep => 7,
            FailureClass::Verification => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Modular(#[from] ModularError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Cs(#[from] CsError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("flag {flag}: {details}")]
    Flag { flag: &'static str, details: String },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

fn class_of_lie(_: &LieError) -> FailureClass {
    FailureClass::Unsupported
}

fn class_of_modular(e: &ModularError) -> FailureClass {
    match e {
        ModularError::Lie(inner) => class_of_lie(inner),
        ModularError::LabelOutsideAlcove(..) => FailureClass::Admissibility,
        ModularError::NumericalIntegrality { .. } => FailureClass::Precision,
        ModularError::ChargeConjugationDefect(..) => FailureClass::InvariantViolation,
    }
}

fn class_of_surface(e: &SurfaceError) -> FailureClass {
    match e {
        SurfaceError::Lie(inner) => class_of_lie(inner),
        SurfaceError::NotIntegralAtLevel { .. } => FailureClass::Admissibility,
        SurfaceError::InvalidGenus(..)
        | SurfaceError::NonRegularWeight { .. }
        | SurfaceError::PointRankMismatch { .. } => FailureClass::Unsupported,
    }
}

fn class_of_cs(e: &CsError) -> FailureClass {
    match e {
        CsError::Lie(inner) => class_of_lie(inner),
        CsError::NonIntegralLevel { .. } => FailureClass::Admissibility,
        CsError::PointIndexOutOfRange { .. } => FailureClass::Parse,
    }
}

fn class_of_rep(e: &RepError) -> FailureClass {
    match e {
        RepError::Lie(inner) => class_of_lie(inner),
        RepError::Surface(inner) => class_of_surface(inner),
        RepError::InvariantViolation { .. } => FailureClass::InvariantViolation,
        RepError::WordParse { .. } | RepError::UnknownGenerator { .. } => FailureClass::Parse,
        _ => FailureClass::Unsupported,
    }
}

fn class_of_sample(e: &SampleError) -> FailureClass {
    match e {
        SampleError::Rep(inner) => class_of_rep(inner),
        SampleError::UnsupportedRank(..) | SampleError::UnsupportedMarking { .. } => {
            FailureClass::Unsupported
        }
        SampleError::Degenerate { .. } => FailureClass::Other,
    }
}

fn class_of_asymptotics(e: &AsymptoticsError) -> FailureClass {
    match e {
        AsymptoticsError::TooFewSamples { got: 0, .. } => FailureClass::EmptySweep,
        AsymptoticsError::TooFewSamples { .. }
        | AsymptoticsError::NonArithmeticGrid { .. }
        | AsymptoticsError::Collinearity { .. }
        | AsymptoticsError::PhaseSeparation { .. } => FailureClass::Unsupported,
        AsymptoticsError::DetectionFailure { .. }
        | AsymptoticsError::DegreeUndetermined { .. }
        | AsymptoticsError::Lstsq(_) => FailureClass::Precision,
    }
}

fn class_of_invariant(e: &InvariantError) -> FailureClass {
    match e {
        InvariantError::Lie(inner) => class_of_lie(inner),
        InvariantError::Modular(inner) => class_of_modular(inner),
        InvariantError::Cs(inner) => class_of_cs(inner),
        InvariantError::Surface(inner) => class_of_surface(inner),
        InvariantError::Inadmissible { .. } => FailureClass::Admissibility,
        InvariantError::EmptySweep { .. } => FailureClass::EmptySweep,
        InvariantError::UnsupportedConfiguration { .. }
        | InvariantError::NormalizationNotUnit { .. }
        | InvariantError::NormalizationMissing { .. } => FailureClass::Unsupported,
    }
}

impl CliError {
    pub fn failure_class(&self) -> FailureClass {
        match self {
            CliError::Scenario(_) | CliError::Flag { .. } => FailureClass::Parse,
            CliError::Invariant(e) => class_of_invariant(e),
            CliError::Modular(e) => class_of_modular(e),
            CliError::Lie(e) => class_of_lie(e),
            CliError::Surface(e) => class_of_surface(e),
            CliError::Cs(e) => class_of_cs(e),
            CliError::Rep(e) => class_of_rep(e),
            CliError::Sample(e) => class_of_sample(e),
            CliError::Asymptotics(e) => class_of_asymptotics(e),
            CliError::Io { .. } => FailureClass::Other,
            CliError::Unsupported(_) => FailureClass::Unsupported,
        }
    }
}

impl From<LstsqError> for CliError {
    fn from(e: LstsqError) -> Self {
        CliError::Asymptotics(AsymptoticsError::Lstsq(e))
    }
}

/// Effective settings for one run: the output directory plus any command-line
/// overrides of scenario fields.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub convention: Option<Convention>,
    pub tolerance: Option<f64>,
    pub precision: Accumulation,
}

impl RunConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            out_dir: out_dir.into(),
            seed: None,
            convention: None,
            tolerance: None,
            precision: Accumulation::Extended,
        }
    }

    pub fn convention_for(&self, sc: &Scenario) -> Convention {
        self.convention.unwrap_or_else(|| sc.convention())
    }

    pub fn tolerance_for(&self, sc: &Scenario) -> f64 {
        self.tolerance.unwrap_or_else(|| sc.phase_tolerance())
    }

    pub fn seed_for(&self, sc: &Scenario) -> u64 {
        self.seed.unwrap_or_else(|| sc.seed())
    }
}

/// What a command produced: human-readable lines, artifact paths, and (for
/// verification commands) the check report that decides the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub report: Option<Report>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match &self.report {
            Some(report) if !report.passed() => FailureClass::Verification.exit_code(),
            _ => 0,
        }
    }
}

fn write_text(cfg: &RunConfig, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn write_json(
    cfg: &RunConfig,
    name: &str,
    value: &serde_json::Value,
) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    write_text(cfg, name, &text)
}

fn rational_to_f64(q: Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn degree_method_str(method: DegreeMethod) -> &'static str {
    match method {
        DegreeMethod::IntegerDifferences => "integer-differences",
        DegreeMethod::LogLogSlope => "log-log-slope",
    }
}

/// Lists the level-k0 label set of su(N).
pub fn cmd_labels(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = sc.marking().n_rank();
    let k = sc.k0();
    let ls = label_set(n, k)?;
    let value = json!({
        "schema_version": 1,
        "n": n,
        "k": k,
        "count": ls.len(),
        "vacuum_index": ls.vacuum_index(),
        "labels": ls.labels().iter().map(|w| w.dynkin().to_vec()).collect::<Vec<_>>(),
    });
    let path = write_json(cfg, &format!("{}-labels.json", sc.output_stem()), &value)?;
    Ok(Outcome {
        lines: vec![format!(
            "labels: su({n}) at level {k} has {} dominant weights in the alcove",
            ls.len()
        )],
        files: vec![path],
        report: None,
    })
}

/// Writes modular data at the base level together with its consistency
/// diagnostics (unitarity, symmetry, (ST)^3 = S^2, charge conjugation).
pub fn cmd_modular(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = sc.marking().n_rank();
    let k = sc.k0();
    let md = s_matrix(n, k)?;
    let perm = md.charge_conjugation()?;
    let s = md.s();
    let value = json!({
        "schema_version": 1,
        "n": n,
        "k": k,
        "central_charge": central_charge(n, k)?.to_string(),
        "labels": md.label_set().labels().iter().map(|w| w.dynkin().to_vec()).collect::<Vec<_>>(),
        "s": (0..s.nrows())
            .map(|i| (0..s.ncols()).map(|j| vec![s[(i, j)].re, s[(i, j)].im]).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "t_exponents": md.t().iter().map(|p| p.exponent().to_string()).collect::<Vec<_>>(),
        "diagnostics": {
            "unitarity_defect": md.unitarity_defect(),
            "symmetry_defect": md.symmetry_defect(),
            "st_cubed_defect": md.st_cubed_defect(),
            "charge_conjugation": perm,
        },
    });
    let path = write_json(cfg, &format!("{}-modular.json", sc.output_stem()), &value)?;
    Ok(Outcome {
        lines: vec![format!(
            "modular: su({n}) level {k}, {} labels; defects: unitarity {:.2e}, symmetry {:.2e}, (ST)^3 {:.2e}",
            md.label_set().len(),
            md.unitarity_defect(),
            md.symmetry_defect(),
            md.st_cubed_defect(),
        )],
        files: vec![path],
        report: None,
    })
}

/// Sweeps Verlinde dimensions over the admissible levels of the grid.
pub fn cmd_verlinde(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seq = invariant_sequence(
        sc.marking(),
        sc.spec(),
        sc.k0(),
        sc.s_max(),
        cfg.convention_for(sc),
    )?;
    let mut csv = String::from("k,dimension\n");
    for e in seq.entries() {
        csv.push_str(&format!("{},{}\n", e.k, e.magnitude_int));
    }
    let value = json!({
        "schema_version": 1,
        "genus": sc.marking().genus(),
        "points": sc.marking().num_points(),
        "n": sc.marking().n_rank(),
        "rows": seq.entries().iter().map(|e| json!({
            "k": e.k,
            "dimension": e.magnitude_int,
        })).collect::<Vec<_>>(),
        "skipped": skipped_json(&seq),
    });
    let stem = sc.output_stem();
    let files = vec![
        write_text(cfg, &format!("{stem}-verlinde.csv"), &csv)?,
        write_json(cfg, &format!("{stem}-verlinde.json"), &value)?,
    ];
    let mut lines = vec![format!(
        "verlinde: {} admissible levels, {} skipped, on genus {} with {} points",
        seq.entries().len(),
        seq.skipped().len(),
        sc.marking().genus(),
        sc.marking().num_points(),
    )];
    if let Ok(est) = growth_degree(&magnitude_sequence(&seq)) {
        lines.push(format!(
            "verlinde: growth degree {} ({})",
            est.degree,
            degree_method_str(est.method)
        ));
    }
    Ok(Outcome { lines, files, report: None })
}

/// Sweeps the invariant and records exact integer and phase witnesses.
pub fn cmd_invariant(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seq = invariant_sequence(
        sc.marking(),
        sc.spec(),
        sc.k0(),
        sc.s_max(),
        cfg.convention_for(sc),
    )?;
    let stem = sc.output_stem();
    let files = vec![
        write_text(cfg, &format!("{stem}-sequence.csv"), &seq.to_csv())?,
        write_json(cfg, &format!("{stem}-sequence.json"), &seq.to_json())?,
    ];
    Ok(Outcome {
        lines: vec![format!(
            "invariant: {} admissible levels, {} skipped; convention {}",
            seq.entries().len(),
            seq.skipped().len(),
            seq.convention().as_str(),
        )],
        files: vec![files[0].clone(), files[1].clone()],
        report: None,
    })
}

fn skipped_json(seq: &InvariantSequence) -> Vec<serde_json::Value> {
    seq.skipped()
        .iter()
        .map(|s| {
            json!({
                "k": s.k,
                "weights_integral": s.weights_integral,
                "sum_in_root_lattice": s.sum_in_root_lattice,
                "reasons": s.reasons,
            })
        })
        .collect()
}

fn magnitude_sequence(seq: &InvariantSequence) -> Vec<(i64, Complex64)> {
    seq.entries()
        .iter()
        .map(|e| (e.k, Complex64::new(e.magnitude_int as f64, 0.0)))
        .collect()
}

struct CohomologyRow {
    index: u32,
    h0: usize,
    h1_par: usize,
    h0_f: usize,
    h1_par_f: usize,
    eigenspace: Option<usize>,
    eigenspace_error: Option<String>,
    wang_exact: bool,
    delta_image_dim: usize,
}

fn sample_cohomology(sc: &Scenario, cfg: &RunConfig) -> Result<Vec<CohomologyRow>, CliError> {
    let plan = sc.samples().ok_or_else(|| {
        CliError::Unsupported(
            "this command needs a samples plan in the scenario \
             (\"samples\": {\"kind\": \"irreducible\", \"count\": ...})"
                .to_string(),
        )
    })?;
    if !sc.spec().kind().is_identity() {
        return Err(CliError::Unsupported(
            "sampled cohomology supports the identity mapping class only; \
             twist words act on levels, not on the surface group presentation here"
                .to_string(),
        ));
    }
    let rank_tol = sc.rank_tolerance();
    let mut rng = rng_from_seed(cfg.seed_for(sc));
    let mut rows = Vec::with_capacity(plan.count as usize);
    for index in 0..plan.count {
        let rep = sample_representation(sc.marking(), plan.kind, &mut rng)?;
        let h0_res = h0_with_tol(&rep, rank_tol);
        let (h1, _) = h1_par_with_tol(&rep, rank_tol)?;
        let mapping = identity_mapping(&rep, compatible_holonomy(plan.kind, &mut rng))?;
        let mt = mapping_torus_cohomology_with_tol(&rep, &mapping, rank_tol)?;
        let (eigenspace, eigenspace_error) =
            match eigenspace_dim_with_tol(&rep, &mapping, rank_tol) {
                Ok(dim) => (Some(dim), None),
                Err(RepError::InvariantViolation { details, .. }) => (None, Some(details)),
                Err(other) => return Err(other.into()),
            };
        let wang = wang_sequence_check_with_tol(&rep, &mapping, rank_tol)?;
        rows.push(CohomologyRow {
            index,
            h0: h0_res.dim,
            h1_par: h1,
            h0_f: mt.h0_f,
            h1_par_f: mt.h1_par_f,
            eigenspace,
            eigenspace_error,
            wang_exact: wang.all_exact(),
            delta_image_dim: wang.delta_image_dim,
        });
    }
    Ok(rows)
}

fn cohomology_rows_json(sc: &Scenario, rows: &[CohomologyRow]) -> serde_json::Value {
    let kind = sc.samples().map(|p| p.kind.as_str()).unwrap_or("unknown");
    json!({
        "schema_version": 1,
        "genus": sc.marking().genus(),
        "points": sc.marking().num_points(),
        "n": sc.marking().n_rank(),
        "kind": kind,
        "samples": rows.iter().map(|r| json!({
            "index": r.index,
            "h0": r.h0,
            "h1_par": r.h1_par,
            "h0_f": r.h0_f,
            "h1_par_f": r.h1_par_f,
            "eigenspace_dim": r.eigenspace,
            "eigenspace_error": r.eigenspace_error,
            "wang_exact": r.wang_exact,
            "delta_image_dim": r.delta_image_dim,
        })).collect::<Vec<_>>(),
    })
}

/// Samples flat representations and tabulates surface and mapping-torus
/// cohomology dimensions with the exactness cross-checks.
pub fn cmd_cohomology(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = sample_cohomology(sc, cfg)?;
    let value = cohomology_rows_json(sc, &rows);
    let path = write_json(cfg, &format!("{}-cohomology.json", sc.output_stem()), &value)?;
    let wang_ok = rows.iter().filter(|r| r.wang_exact).count();
    let routes_ok = rows.iter().filter(|r| r.eigenspace.is_some()).count();
    let kind = sc.samples().map(|p| p.kind.as_str()).unwrap_or("unknown");
    Ok(Outcome {
        lines: vec![
            format!(
                "cohomology: {} {kind} samples on genus {} with {} points",
                rows.len(),
                sc.marking().genus(),
                sc.marking().num_points(),
            ),
            format!(
                "cohomology: six-map exactness on {wang_ok}/{} samples, \
                 eigenspace routes agree on {routes_ok}/{}",
                rows.len(),
                rows.len(),
            ),
        ],
        files: vec![path],
        report: None,
    })
}

struct Extraction {
    seq: InvariantSequence,
    detected: DetectedPhases,
    degree_estimate: DegreeEstimate,
    model: ExpansionModel,
    poincare: PoincareReport,
}

/// Shared sweep-then-extract pipeline: invariant values on the level grid,
/// phase detection, a degree estimate from the exact integer magnitudes, the
/// coefficient fit, and the remainder check.
fn extract_pipeline(sc: &Scenario, cfg: &RunConfig) -> Result<Extraction, CliError> {
    let seq = invariant_sequence(
        sc.marking(),
        sc.spec(),
        sc.k0(),
        sc.s_max(),
        cfg.convention_for(sc),
    )?;
    let points = seq.points();
    let detected = prony_detect(&points, sc.max_terms())?;
    let degree_estimate = growth_degree(&magnitude_sequence(&seq))?;
    // Fit deep enough to exhaust a polynomial of the estimated degree: a
    // ladder stopping early forces its lowest rungs to absorb every omitted
    // term with the wrong k-dependence, which destabilizes the remainder
    // constants. Reported remainder orders still follow the scenario.
    let degree_f = rational_to_f64(degree_estimate.degree);
    let families = detected.phases.len().max(1);
    let depth_cap = (points.len().saturating_sub(2) / families).saturating_sub(1);
    let fit_order = ((2.0 * degree_f).floor().max(0.0) as usize)
        .max(sc.tail_order())
        .min(depth_cap);
    let model = fit_model_with(
        &points,
        &detected.phases,
        degree_estimate.degree,
        fit_order,
        cfg.precision,
    )?;
    let poincare = poincare_check(&points, &model, sc.tail_order().min(fit_order));
    Ok(Extraction { seq, detected, degree_estimate, model, poincare })
}

const DICTIONARY_NOTE: &str = "phases are exponents q of exp(2 pi i k q) in the plain-level \
dictionary, identifiable mod 1/step of the swept grid; rewriting against the shifted level \
k + N multiplies each coefficient by the constant exp(-2 pi i N q) and changes nothing else";

/// Relative residual above which the single-ladder-per-phase model is
/// probably missing structure (several degree ladders sharing one phase).
const UNMODELED_STRUCTURE_THRESHOLD: f64 = 1e-4;

fn extraction_json(x: &Extraction) -> serde_json::Value {
    json!({
        "schema_version": 1,
        "model": x.model.to_json(),
        "detection": {
            "phases": x.detected.phases.clone(),
            "modulus": x.detected.modulus,
            "condition": x.detected.condition,
        },
        "degree_estimate": {
            "degree": x.degree_estimate.degree.to_string(),
            "method": degree_method_str(x.degree_estimate.method),
        },
        "remainders": {
            "passed": x.poincare.passed,
            "degree": x.poincare.degree.to_string(),
            "orders": x.poincare.orders.iter().map(|o| json!({
                "order": o.order,
                "stable": o.stable,
                "windows": o.window_constants.iter()
                    .map(|(len, c)| json!([len, c]))
                    .collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        },
        "skipped_levels": x.seq.skipped().iter().map(|s| s.k).collect::<Vec<_>>(),
        "dictionary_note": DICTIONARY_NOTE,
        "unmodeled_structure": unmodeled_structure(&x.model),
    })
}

/// True when fit residuals stay large relative to the data scale, which is
/// the signature of structure the one-ladder-per-phase model cannot express.
fn unmodeled_structure(model: &ExpansionModel) -> bool {
    let scale = model
        .terms
        .iter()
        .map(|t| t.leading.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let worst = model.residuals.iter().map(|(_, r)| *r).fold(0.0f64, f64::max);
    worst > UNMODELED_STRUCTURE_THRESHOLD * scale
}

/// Detects phases on the sweep and fits the expansion model, writing the
/// model, detection diagnostics, and remainder checks.
pub fn cmd_extract(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let x = extract_pipeline(sc, cfg)?;
    let value = extraction_json(&x);
    let path = write_json(cfg, &format!("{}-extraction.json", sc.output_stem()), &value)?;
    let phase_list: Vec<String> = x
        .model
        .terms
        .iter()
        .map(|t| match &t.q_exact {
            Some(q) => format!("{q} (k^{})", t.degree),
            None => format!("{:.9} (k^{})", t.q, t.degree),
        })
        .collect();
    let mut lines = vec![
        format!(
            "extract: {} levels -> {} phase terms [{}], degree estimate {} ({})",
            x.seq.entries().len(),
            x.model.terms.len(),
            phase_list.join(", "),
            x.degree_estimate.degree,
            degree_method_str(x.degree_estimate.method),
        ),
        format!(
            "extract: remainder check {}; {}",
            if x.poincare.passed { "stable" } else { "UNSTABLE" },
            DICTIONARY_NOTE,
        ),
    ];
    if unmodeled_structure(&x.model) {
        lines.push(
            "extract: warning: residuals point at several degree ladders sharing a phase, \
             which this model does not represent"
                .to_string(),
        );
    }
    Ok(Outcome { lines, files: vec![path], report: None })
}

/// Verifies an extracted expansion against the closed-form predictions:
/// dominant phase, leading degree, and remainder stability.
pub fn cmd_verify_aec(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let convention = cfg.convention_for(sc);
    if convention == Convention::Cft && !sc.spec().kind().is_identity() {
        return Err(CliError::Unsupported(
            "closed-form phase predictions are stated in the cs convention; \
             rerun nontrivial mapping classes with --convention cs"
                .to_string(),
        ));
    }
    let x = extract_pipeline(sc, cfg)?;
    let tolerance = cfg.tolerance_for(sc);
    let coweights: Vec<_> =
        sc.marking().points().iter().map(|p| p.coweight().clone()).collect();
    let cs = cs_value(sc.spec().kind(), &coweights)?;

    let mut report = Report::new(sc.name(), "verify-aec");
    report.note(DICTIONARY_NOTE);
    for s in x.seq.skipped() {
        report.note(format!("level k = {} skipped: {}", s.k, s.reasons.join("; ")));
    }

    let modulus = x.detected.modulus;
    let mut expected = rational_to_f64(cs.q());
    let mut expected_label = format!("q = {}", cs.q());
    if let Some(offset) = sc.inject_phase() {
        expected += offset;
        expected_label = format!("q = {} + {offset} (adversarial offset)", cs.q());
        report.note(format!(
            "inject_phase = {offset}: the closed-form prediction was deliberately corrupted \
             to prove this check can fail"
        ));
    }
    let expected_mod = expected.rem_euclid(modulus);

    // Dominant term: largest degree, then largest leading coefficient.
    let dominant = x.model.terms.iter().max_by(|a, b| {
        a.degree
            .cmp(&b.degree)
            .then(a.leading.norm().partial_cmp(&b.leading.norm()).expect("finite"))
    });
    match dominant {
        Some(term) => {
            let dist = circular_distance(term.q, expected_mod, modulus);
            report.push(Check::new(
                "phase-match",
                dist <= tolerance,
                format!("{expected_label}, reduced mod {:.6} to {expected_mod:.12}", modulus),
                format!("detected q = {:.12}", term.q),
                format!("circular distance {dist:.3e}, tolerance {tolerance:.1e}"),
            ));
        }
        None => {
            report.push(Check::new(
                "phase-match",
                false,
                expected_label,
                "no phase terms detected".to_string(),
                "",
            ));
        }
    }

    let expected_degree = Rational::new(moduli_dimension(sc.marking()), 2);
    let actual_degree = x.model.max_degree();
    report.push(Check::new(
        "leading-degree",
        actual_degree == expected_degree,
        format!("{expected_degree} (half the moduli dimension)"),
        actual_degree.to_string(),
        format!("degree estimate {} ({})",
            x.degree_estimate.degree,
            degree_method_str(x.degree_estimate.method)),
    ));

    report.push(Check::new(
        "poincare-stability",
        x.poincare.passed,
        "remainder constants stable over growing tail windows",
        if x.poincare.passed { "stable" } else { "unstable" },
        format!("orders 0..={} checked", sc.tail_order()),
    ));

    let stem = sc.output_stem();
    let files = vec![
        write_json(cfg, &format!("{stem}-extraction.json"), &extraction_json(&x))?,
        write_json(cfg, &format!("{stem}-aec-report.json"), &report.to_json())?,
    ];
    Ok(Outcome {
        lines: vec![format!(
            "verify-aec: {} levels swept, {} phase terms, convention {}",
            x.seq.entries().len(),
            x.model.terms.len(),
            convention.as_str(),
        )],
        files,
        report: Some(report),
    })
}

/// Compares the sweep growth degree against half the maximal mapping-torus
/// cohomology difference over sampled representations, through two
/// independent code paths.
pub fn cmd_verify_grc(sc: &Scenario, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = sample_cohomology(sc, cfg)?;
    let seq = invariant_sequence(
        sc.marking(),
        sc.spec(),
        sc.k0(),
        sc.s_max(),
        cfg.convention_for(sc),
    )?;
    let est = growth_degree(&magnitude_sequence(&seq))?;

    let mut report = Report::new(sc.name(), "verify-grc");
    let mut generic_max: Option<usize> = None;
    for r in &rows {
        if r.h0 == 0 {
            let diff = r.h1_par_f - r.h0_f;
            generic_max = Some(generic_max.map_or(diff, |m| m.max(diff)));
        } else {
            report.note(format!(
                "sample {}: h0 = {} > 0, non-generic; excluded from the degree maximum",
                r.index, r.h0
            ));
        }
    }

    let agreed = rows.iter().filter(|r| r.eigenspace.is_some()).count();
    let mut detail = String::from("quotient-action route vs mapping-torus route");
    if let Some(bad) = rows.iter().find(|r| r.eigenspace.is_none()) {
        detail = format!(
            "sample {} disagrees: {}",
            bad.index,
            bad.eigenspace_error.as_deref().unwrap_or("unknown")
        );
    }
    report.push(Check::new(
        "e1-dimension-match",
        agreed == rows.len(),
        format!("both eigenspace routes agree on {} samples", rows.len()),
        format!("{agreed} of {} agree", rows.len()),
        detail,
    ));

    match generic_max {
        Some(max_diff) => {
            let rhs = Rational::new(max_diff as i64, 2);
            report.push(Check::new(
                "grc-degree-match",
                est.degree == rhs,
                format!("{rhs} (= max (h1_par_f - h0_f) / 2 = {max_diff}/2 over generic samples)"),
                format!("{} (growth degree of the integer magnitudes, {})",
                    est.degree,
                    degree_method_str(est.method)),
                "independent code paths: sampled cohomology vs swept Verlinde magnitudes",
            ));
        }
        None => {
            report.push(Check::new(
                "grc-degree-match",
                false,
                "a maximum over generic (h0 = 0) samples",
                "no generic samples in the plan",
                "rerun with irreducible samples to certify the maximum",
            ));
        }
    }

    let stem = sc.output_stem();
    let files = vec![
        write_json(cfg, &format!("{stem}-grc-samples.json"), &cohomology_rows_json(sc, &rows))?,
        write_json(cfg, &format!("{stem}-grc-report.json"), &report.to_json())?,
    ];
    Ok(Outcome {
        lines: vec![format!(
            "verify-grc: {} samples, growth degree {} from {} admissible levels",
            rows.len(),
            est.degree,
            seq.entries().len(),
        )],
        files,
        report: Some(report),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Cs,
    Cft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Path to the scenario JSON document.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory for artifacts; defaults to $WRTKIT_OUT_DIR, else ".".
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario phase convention.
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    /// Overrides the scenario phase tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Accumulation mode for fitted coefficients.
    #[arg(long, value_enum, default_value_t = PrecisionArg::Extended)]
    pub precision: PrecisionArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lists the level-k0 label set of su(N).
    Labels(CommonArgs),
    /// Writes modular data and its consistency diagnostics.
    Modular(CommonArgs),
    /// Sweeps Verlinde dimensions over the level grid.
    Verlinde(CommonArgs),
    /// Sweeps the invariant with exact integer and phase witnesses.
    Invariant(CommonArgs),
    /// Samples representations and tabulates cohomology dimensions.
    Cohomology(CommonArgs),
    /// Detects phases and fits an asymptotic expansion model to a sweep.
    Extract(CommonArgs),
    /// Checks detected phases against closed-form values, the leading degree
    /// against half the moduli dimension, and remainder stability.
    VerifyAec(CommonArgs),
    /// Compares the sweep growth degree against half the maximal cohomology
    /// dimension over sampled representations.
    VerifyGrc(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Labels(a)
            | Command::Modular(a)
            | Command::Verlinde(a)
            | Command::Invariant(a)
            | Command::Cohomology(a)
            | Command::Extract(a)
            | Command::VerifyAec(a)
            | Command::VerifyGrc(a) => a,
        }
    }

    fn handler(&self) -> fn(&Scenario, &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::Labels(_) => cmd_labels,
            Command::Modular(_) => cmd_modular,
            Command::Verlinde(_) => cmd_verlinde,
            Command::Invariant(_) => cmd_invariant,
            Command::Cohomology(_) => cmd_cohomology,
            Command::Extract(_) => cmd_extract,
            Command::VerifyAec(_) => cmd_verify_aec,
            Command::VerifyGrc(_) => cmd_verify_grc,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wrtkit",
    version,
    about = "Scenario-driven verification toolkit for quantum invariants of mapping tori"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn run_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    if let Some(t) = args.tolerance {
        if !(t > 0.0) || !t.is_finite() {
            return Err(CliError::Flag {
                flag: "--tolerance",
                details: format!("must be a positive finite number, got {t}"),
            });
        }
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os("WRTKIT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(RunConfig {
        out_dir,
        seed: args.seed,
        convention: args.convention.map(|c| match c {
            ConventionArg::Cs => Convention::Cs,
            ConventionArg::Cft => Convention::Cft,
        }),
        tolerance: args.tolerance,
        precision: match args.precision {
            PrecisionArg::Double => Accumulation::Double,
            PrecisionArg::Extended => Accumulation::Extended,
        },
    })
}

/// Loads the scenario named by the arguments and dispatches the subcommand.
pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    let args = command.common();
    let scenario = Scenario::load(&args.scenario)?;
    let cfg = run_config(args)?;
    command.handler()(&scenario, &cfg)
}

/// Runs a parsed invocation to completion: prints outcome lines and report
/// text to stdout, errors with their cause chains to stderr, and returns the
/// process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(&cli.command) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if let Some(report) = &outcome.report {
                print!("{}", report.render_text());
            }
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            let mut shown = e.to_string();
            eprintln!("error: {shown}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                let text = cause.to_string();
                if !shown.contains(&text) {
                    eprintln!("  caused by: {text}");
                    shown = text;
                }
                source = cause.source();
            }
            e.failure_class().exit_code()
        }
    }
}
