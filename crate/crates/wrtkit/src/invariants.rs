//! Invariant sequences for mapping tori over a level sweep.
//!
//! For the supported mapping classes the invariant at level k factors as
//! (normalization constant) x (exact unit phase) x (Verlinde dimension), so
//! every swept value carries exact witnesses: the integer magnitude and the
//! rational phase exponent. Inadmissible levels are recorded with reasons and
//! skipped, never silently dropped; downstream fitting consumes the possibly
//! non-contiguous grid.

use crate::cs_values::{CsError, MappingClassKind};
use crate::lie_data::{LieError, Rational};
use crate::modular::{s_matrix, t_phase, verlinde_dimension_md, ModularError};
use crate::numeric::phase::Phase;
use crate::surfaces::{admissibility, SurfaceError, SurfaceMarking};
use num_complex::Complex64;
use serde_json::json;
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

/// Modulus slack allowed for user-supplied normalization constants.
const UNIT_MODULUS_EPSILON: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Modular(#[from] ModularError),
    #[error(transparent)]
    Cs(#[from] CsError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("level k = {k} is inadmissible: {}", reasons.join("; "))]
    Inadmissible { k: i64, reasons: Vec<String> },
    #[error("unsupported configuration: {details}")]
    UnsupportedConfiguration { details: String },
    #[error("no admissible levels in sweep k = s*{k0}, s = 1..{s_max}")]
    EmptySweep { k0: i64, s_max: u32 },
    #[error("normalization constant at k = {k} has modulus {modulus}, expected 1")]
    NormalizationNotUnit { k: i64, modulus: f64 },
    #[error("normalization table has no constant for swept level k = {k}")]
    NormalizationMissing { k: i64 },
}

/// Which exact phase a Dehn twist contributes per level: the Chern-Simons
/// phase of the twist coweight, or the conformal T-phase of the level-scaled
/// label. Both are recorded verbatim in all outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    Cs,
    Cft,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::Cs => "cs",
            Convention::Cft => "cft",
        }
    }
}

impl FromStr for Convention {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cs" => Ok(Convention::Cs),
            "cft" => Ok(Convention::Cft),
            other => Err(InvariantError::UnsupportedConfiguration {
                details: format!("unknown convention {other:?}, expected \"cs\" or \"cft\""),
            }),
        }
    }
}

/// The determinant-type prefactor of the invariant: exactly 1, or an opaque
/// unit-modulus constant per level supplied by the caller.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalization {
    Unit,
    Constants(BTreeMap<i64, Complex64>),
}

impl Normalization {
    fn at(&self, k: i64) -> Result<Complex64, InvariantError> {
        match self {
            Normalization::Unit => Ok(Complex64::new(1.0, 0.0)),
            Normalization::Constants(map) => {
                let z = map.get(&k).ok_or(InvariantError::NormalizationMissing { k })?;
                let modulus = z.norm();
                if (modulus - 1.0).abs() > UNIT_MODULUS_EPSILON {
                    return Err(InvariantError::NormalizationNotUnit { k, modulus });
                }
                Ok(*z)
            }
        }
    }

    fn is_unit(&self) -> bool {
        matches!(self, Normalization::Unit)
    }
}

/// A mapping class the invariant assembler supports, together with its
/// normalization prefactor.
#[derive(Clone, Debug)]
pub struct MappingClassSpec {
    kind: MappingClassKind,
    normalization: Normalization,
}

impl MappingClassSpec {
    pub fn identity() -> Self {
        MappingClassSpec { kind: MappingClassKind::Identity, normalization: Normalization::Unit }
    }

    /// Word of Dehn twists as (marked-point index, multiplicity) pairs.
    pub fn dehn_twist_word(word: Vec<(usize, i64)>) -> Self {
        MappingClassSpec {
            kind: MappingClassKind::DehnTwistWord(word),
            normalization: Normalization::Unit,
        }
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn kind(&self) -> &MappingClassKind {
        &self.kind
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    fn kind_json(&self) -> serde_json::Value {
        match &self.kind {
            MappingClassKind::Identity => json!({ "type": "identity" }),
            MappingClassKind::DehnTwistWord(word) => json!({
                "type": "dehn-twist-word",
                "twists": word.iter().map(|(i, m)| json!([i, m])).collect::<Vec<_>>(),
            }),
        }
    }
}

/// The exact unit phase contributed by the mapping class at level k: the
/// product over the twist word of per-point phases in the chosen convention.
fn mapping_class_phase(
    marking: &SurfaceMarking,
    kind: &MappingClassKind,
    k: i64,
    convention: Convention,
) -> Result<Phase, InvariantError> {
    let word = match kind {
        MappingClassKind::Identity => return Ok(Phase::one()),
        MappingClassKind::DehnTwistWord(word) => word,
    };
    let mut phase = Phase::one();
    for &(index, m) in word {
        let count = marking.num_points();
        let point = marking
            .points()
            .get(index)
            .ok_or(CsError::PointIndexOutOfRange { index, count })?;
        let factor = match convention {
            Convention::Cs => crate::cs_values::dehn_twist_phase(point.coweight(), k, m)?,
            Convention::Cft => {
                let label = point.coweight().scale_to_weight(k).ok_or_else(|| {
                    InvariantError::Inadmissible {
                        k,
                        reasons: vec![format!("k * alpha_{} is not integral", index + 1)],
                    }
                })?;
                t_phase(marking.n_rank(), k, &label)?.pow(m)
            }
        };
        phase = phase * factor;
    }
    Ok(phase)
}

struct LevelValue {
    verlinde: u64,
    phase: Phase,
    value: Complex64,
    /// Exact phase witness is only meaningful when no opaque user constant
    /// multiplies the value.
    exact: bool,
}

fn evaluate_level(
    marking: &SurfaceMarking,
    spec: &MappingClassSpec,
    k: i64,
    convention: Convention,
) -> Result<LevelValue, InvariantError> {
    let report = admissibility(marking, k);
    if !report.is_admissible() {
        return Err(InvariantError::Inadmissible { k, reasons: report.reasons });
    }
    let labels = marking.labels_at_level(k)?;
    let md = s_matrix(marking.n_rank(), k)?;
    let verlinde = verlinde_dimension_md(&md, marking.genus(), &labels)?;
    let phase = mapping_class_phase(marking, &spec.kind, k, convention)?;
    let norm = spec.normalization.at(k)?;
    let value = norm * phase.to_complex() * Complex64::new(verlinde as f64, 0.0);
    Ok(LevelValue { verlinde, phase, value, exact: spec.normalization.is_unit() })
}

/// The invariant at a single admissible level.
pub fn wrt_invariant(
    marking: &SurfaceMarking,
    spec: &MappingClassSpec,
    k: i64,
    convention: Convention,
) -> Result<Complex64, InvariantError> {
    Ok(evaluate_level(marking, spec, k, convention)?.value)
}

/// One admissible level of a sweep, with exact witnesses.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub k: i64,
    pub value: Complex64,
    /// |value| as the exact Verlinde integer.
    pub magnitude_int: u64,
    /// Exact phase exponent in [0, 1) when the normalization is unit.
    pub phase_exponent: Option<Rational>,
}

/// An inadmissible level of a sweep and why it was skipped.
#[derive(Clone, Debug)]
pub struct SkippedLevel {
    pub k: i64,
    pub weights_integral: bool,
    pub sum_in_root_lattice: bool,
    pub reasons: Vec<String>,
}

/// The values of the invariant along k = s*k0, s = 1..s_max.
#[derive(Clone, Debug)]
pub struct InvariantSequence {
    marking: SurfaceMarking,
    spec: MappingClassSpec,
    k0: i64,
    s_max: u32,
    convention: Convention,
    entries: Vec<SweepEntry>,
    skipped: Vec<SkippedLevel>,
}

impl InvariantSequence {
    pub fn marking(&self) -> &SurfaceMarking {
        &self.marking
    }

    pub fn spec(&self) -> &MappingClassSpec {
        &self.spec
    }

    pub fn k0(&self) -> i64 {
        self.k0
    }

    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn entries(&self) -> &[SweepEntry] {
        &self.entries
    }

    pub fn skipped(&self) -> &[SkippedLevel] {
        &self.skipped
    }

    /// (k, value) pairs over the admissible levels, in increasing k.
    pub fn points(&self) -> Vec<(i64, Complex64)> {
        self.entries.iter().map(|e| (e.k, e.value)).collect()
    }

    /// CSV with one row per swept level, admissible or not; value columns are
    /// empty on skipped levels.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "k",
            "re",
            "im",
            "convention",
            "weights_integral",
            "sum_in_root_lattice",
        ])
        .expect("in-memory write");
        let mut rows: Vec<(i64, Option<&SweepEntry>, Option<&SkippedLevel>)> = Vec::new();
        rows.extend(self.entries.iter().map(|e| (e.k, Some(e), None)));
        rows.extend(self.skipped.iter().map(|s| (s.k, None, Some(s))));
        rows.sort_by_key(|r| r.0);
        for (k, entry, skip) in rows {
            let record: [String; 6] = match (entry, skip) {
                (Some(e), _) => [
                    k.to_string(),
                    format!("{:.17e}", e.value.re),
                    format!("{:.17e}", e.value.im),
                    self.convention.as_str().to_string(),
                    "true".to_string(),
                    "true".to_string(),
                ],
                (None, Some(s)) => [
                    k.to_string(),
                    String::new(),
                    String::new(),
                    self.convention.as_str().to_string(),
                    s.weights_integral.to_string(),
                    s.sum_in_root_lattice.to_string(),
                ],
                (None, None) => unreachable!("row from one of the two lists"),
            };
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "schema_version": 1,
            "genus": self.marking.genus(),
            "n_rank": self.marking.n_rank(),
            "num_points": self.marking.num_points(),
            "k0": self.k0,
            "s_max": self.s_max,
            "convention": self.convention.as_str(),
            "mapping_class": self.spec.kind_json(),
            "entries": self.entries.iter().map(|e| json!({
                "k": e.k,
                "re": e.value.re,
                "im": e.value.im,
                "magnitude": e.magnitude_int,
                "phase_exponent": e.phase_exponent.map(|q| q.to_string()),
            })).collect::<Vec<_>>(),
            "skipped": self.skipped.iter().map(|s| json!({
                "k": s.k,
                "weights_integral": s.weights_integral,
                "sum_in_root_lattice": s.sum_in_root_lattice,
                "reasons": s.reasons,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Sweeps the invariant over k = s*k0, s = 1..s_max. Inadmissible levels are
/// reported in the result; a sweep with no admissible level at all is an
/// error.
pub fn invariant_sequence(
    marking: &SurfaceMarking,
    spec: &MappingClassSpec,
    k0: i64,
    s_max: u32,
    convention: Convention,
) -> Result<InvariantSequence, InvariantError> {
    if k0 < 1 {
        return Err(InvariantError::UnsupportedConfiguration {
            details: format!("base level k0 must be positive, got {k0}"),
        });
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for s in 1..=i64::from(s_max) {
        let k = k0 * s;
        let report = admissibility(marking, k);
        if !report.is_admissible() {
            skipped.push(SkippedLevel {
                k,
                weights_integral: report.weights_integral,
                sum_in_root_lattice: report.sum_in_root_lattice,
                reasons: report.reasons,
            });
            continue;
        }
        let lv = evaluate_level(marking, spec, k, convention)?;
        entries.push(SweepEntry {
            k,
            value: lv.value,
            magnitude_int: lv.verlinde,
            phase_exponent: lv.exact.then(|| lv.phase.exponent()),
        });
    }
    if entries.is_empty() {
        return Err(InvariantError::EmptySweep { k0, s_max });
    }
    Ok(InvariantSequence {
        marking: marking.clone(),
        spec: spec.clone(),
        k0,
        s_max,
        convention,
        entries,
        skipped,
    })
}
