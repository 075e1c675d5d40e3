//! Scenario documents: one JSON file naming everything a run needs, so the
//! same results are reproducible from the file and a seed alone.
//!
//! A scenario bundles the surface marking, the mapping class, the level
//! sweep, the phase convention, tolerances, and (optionally) a plan for
//! sampled representations. Parsing is strict: unknown fields, malformed
//! values, and unresolvable references are errors that name the offending
//! field, so a bad file fails loudly before any computation starts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariants::{Convention, MappingClassSpec, Normalization};
use crate::lie_data::{Rational, RationalWeight};
use crate::samples::SampleKind;
use crate::surfaces::{MarkedPoint, SurfaceMarking};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_PHASE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_TERMS: usize = 3;
pub const DEFAULT_TAIL_ORDER: usize = 3;

/// Parse and validation errors, each locating the problem: IO by path, JSON
/// syntax by line and column, semantic problems by field path.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {details}")]
    Json { line: usize, column: usize, details: String },
    #[error("field {field}: {details}")]
    Field { field: String, details: String },
}

fn field_err(field: impl Into<String>, details: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field: field.into(), details: details.into() }
}

/// Parses "p/q" or "p" into a reduced rational; rejects zero denominators
/// instead of panicking like `Rational::new` would.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((numer, denom)) => {
            let n: i64 = numer.trim().parse().ok()?;
            let d: i64 = denom.trim().parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => text.parse::<i64>().ok().map(Rational::from_integer),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    coweight: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    genus: u32,
    rank: usize,
    #[serde(default)]
    points: Vec<RawPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMappingClass {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twists: Option<Vec<(usize, i64)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    k0: i64,
    s_max: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    #[serde(default = "default_phase_tol")]
    phase: f64,
    #[serde(default = "default_rank_tol")]
    rank: f64,
}

fn default_phase_tol() -> f64 {
    DEFAULT_PHASE_TOLERANCE
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOLERANCE
}

impl Default for RawTolerances {
    fn default() -> Self {
        RawTolerances { phase: DEFAULT_PHASE_TOLERANCE, rank: DEFAULT_RANK_TOLERANCE }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSamples {
    kind: String,
    count: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawNormalization {
    Named(String),
    Constants { constants: BTreeMap<String, (f64, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    surface: RawSurface,
    mapping_class: RawMappingClass,
    sweep: RawSweep,
    #[serde(default = "default_convention")]
    convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<RawNormalization>,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_max_terms")]
    max_terms: usize,
    #[serde(default = "default_tail_order")]
    tail_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<RawSamples>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inject_phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_stem: Option<String>,
}

fn default_convention() -> String {
    "cs".to_string()
}

fn default_max_terms() -> usize {
    DEFAULT_MAX_TERMS
}

fn default_tail_order() -> usize {
    DEFAULT_TAIL_ORDER
}

/// Plan for sampled flat representations (used by the cohomology and GRC
/// verification commands).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplePlan {
    pub kind: SampleKind,
    pub count: u32,
}

/// A validated scenario. Construction goes through [`Scenario::from_json_str`]
/// or [`Scenario::load`]; every reference (twist indices into the point list,
/// convention and sample-kind names) is resolved up front.
#[derive(Clone, Debug)]
pub struct Scenario {
    name: String,
    marking: SurfaceMarking,
    spec: MappingClassSpec,
    k0: i64,
    s_max: u32,
    convention: Convention,
    phase_tolerance: f64,
    rank_tolerance: f64,
    seed: u64,
    max_terms: usize,
    tail_order: usize,
    samples: Option<SamplePlan>,
    inject_phase: Option<f64>,
    output_stem: String,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Json {
            line: e.line(),
            column: e.column(),
            details: e.to_string(),
        })?;
        Scenario::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, ScenarioError> {
        if raw.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("expected {SCENARIO_SCHEMA_VERSION}, got {}", raw.schema_version),
            ));
        }
        if raw.name.trim().is_empty() {
            return Err(field_err("name", "must be nonempty"));
        }

        let mut points = Vec::with_capacity(raw.surface.points.len());
        for (i, p) in raw.surface.points.iter().enumerate() {
            let mut dynkin = Vec::with_capacity(p.coweight.len());
            for (j, entry) in p.coweight.iter().enumerate() {
                let q = parse_rational(entry).ok_or_else(|| {
                    field_err(
                        format!("surface.points[{i}].coweight[{j}]"),
                        format!("cannot parse {entry:?} as a rational \"p/q\""),
                    )
                })?;
                dynkin.push(q);
            }
            let coweight =
                RationalWeight::from_dynkin(raw.surface.rank, &dynkin).map_err(|e| {
                    field_err(format!("surface.points[{i}].coweight"), e.to_string())
                })?;
            points.push(MarkedPoint::full(coweight));
        }
        let marking = SurfaceMarking::new(raw.surface.genus, raw.surface.rank, points)
            .map_err(|e| field_err("surface", e.to_string()))?;

        let spec = match raw.mapping_class.kind.as_str() {
            "identity" => {
                if raw.mapping_class.twists.is_some() {
                    return Err(field_err(
                        "mapping_class.twists",
                        "identity mapping class takes no twist word",
                    ));
                }
                MappingClassSpec::identity()
            }
            "dehn-twist-word" => {
                let word = raw.mapping_class.twists.clone().ok_or_else(|| {
                    field_err("mapping_class.twists", "dehn-twist-word requires a twist list")
                })?;
                if word.is_empty() {
                    return Err(field_err("mapping_class.twists", "twist word must be nonempty"));
                }
                for (j, &(index, _)) in word.iter().enumerate() {
                    if index >= marking.num_points() {
                        return Err(field_err(
                            format!("mapping_class.twists[{j}]"),
                            format!(
                                "references marked point {index}, but the surface has {}",
                                marking.num_points()
                            ),
                        ));
                    }
                }
                MappingClassSpec::dehn_twist_word(word)
            }
            other => {
                return Err(field_err(
                    "mapping_class.type",
                    format!("unknown mapping class {other:?} (expected \"identity\" or \"dehn-twist-word\")"),
                ))
            }
        };

        let spec = match &raw.normalization {
            None => spec,
            Some(RawNormalization::Named(name)) if name == "unit" => spec,
            Some(RawNormalization::Named(name)) => {
                return Err(field_err(
                    "normalization",
                    format!("unknown normalization {name:?} (expected \"unit\" or a constants table)"),
                ))
            }
            Some(RawNormalization::Constants { constants }) => {
                let mut table = BTreeMap::new();
                for (key, &(re, im)) in constants {
                    let k: i64 = key.parse().map_err(|_| {
                        field_err(
                            format!("normalization.constants.{key}"),
                            "key must be an integer level",
                        )
                    })?;
                    table.insert(k, Complex64::new(re, im));
                }
                spec.with_normalization(Normalization::Constants(table))
            }
        };

        if raw.sweep.k0 < 1 {
            return Err(field_err("sweep.k0", format!("must be >= 1, got {}", raw.sweep.k0)));
        }
        if raw.sweep.s_max < 1 {
            return Err(field_err("sweep.s_max", "must be >= 1; the sweep would be empty"));
        }

        let convention = match raw.convention.as_str() {
            "cs" => Convention::Cs,
            "cft" => Convention::Cft,
            other => {
                return Err(field_err(
                    "convention",
                    format!("unknown convention {other:?} (expected \"cs\" or \"cft\")"),
                ))
            }
        };

        for (name, value) in [("phase", raw.tolerances.phase), ("rank", raw.tolerances.rank)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(field_err(
                    format!("tolerances.{name}"),
                    format!("must be a positive finite number, got {value}"),
                ));
            }
        }

        if raw.max_terms < 1 {
            return Err(field_err("max_terms", "must be >= 1"));
        }

        let samples = match &raw.samples {
            None => None,
            Some(s) => {
                let kind = match s.kind.as_str() {
                    "irreducible" => SampleKind::Irreducible,
                    "torus-valued" => SampleKind::TorusValued,
                    "trivial" => SampleKind::Trivial,
                    other => {
                        return Err(field_err(
                            "samples.kind",
                            format!(
                                "unknown sample kind {other:?} (expected \"irreducible\", \
                                 \"torus-valued\", or \"trivial\")"
                            ),
                        ))
                    }
                };
                if s.count < 1 {
                    return Err(field_err("samples.count", "must be >= 1"));
                }
                Some(SamplePlan { kind, count: s.count })
            }
        };

        if let Some(offset) = raw.inject_phase {
            if !offset.is_finite() {
                return Err(field_err("inject_phase", "must be finite"));
            }
        }

        let output_stem = match &raw.output_stem {
            Some(stem) if !stem.trim().is_empty() => stem.clone(),
            Some(_) => return Err(field_err("output_stem", "must be nonempty when given")),
            None => slugify(&raw.name),
        };

        Ok(Scenario {
            name: raw.name,
            marking,
            spec,
            k0: raw.sweep.k0,
            s_max: raw.sweep.s_max,
            convention,
            phase_tolerance: raw.tolerances.phase,
            rank_tolerance: raw.tolerances.rank,
            seed: raw.seed,
            max_terms: raw.max_terms,
            tail_order: raw.tail_order,
            samples,
            inject_phase: raw.inject_phase,
            output_stem,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

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

    pub fn phase_tolerance(&self) -> f64 {
        self.phase_tolerance
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn tail_order(&self) -> usize {
        self.tail_order
    }

    pub fn samples(&self) -> Option<SamplePlan> {
        self.samples
    }

    /// Adversarial control: an offset added to the closed-form phase
    /// prediction before comparison, so a verification run can prove the
    /// phase check fails when it should.
    pub fn inject_phase(&self) -> Option<f64> {
        self.inject_phase
    }

    pub fn output_stem(&self) -> &str {
        &self.output_stem
    }

    /// Re-emits the scenario as its canonical JSON document.
    pub fn to_json(&self) -> serde_json::Value {
        let raw = self.to_raw();
        serde_json::to_value(&raw).expect("raw scenario serializes")
    }

    fn to_raw(&self) -> RawScenario {
        let points = self
            .marking
            .points()
            .iter()
            .map(|p| RawPoint {
                coweight: p.coweight().dynkin().iter().map(|q| q.to_string()).collect(),
            })
            .collect();
        let mapping_class = match self.spec.kind() {
            crate::cs_values::MappingClassKind::Identity => {
                RawMappingClass { kind: "identity".to_string(), twists: None }
            }
            crate::cs_values::MappingClassKind::DehnTwistWord(word) => RawMappingClass {
                kind: "dehn-twist-word".to_string(),
                twists: Some(word.clone()),
            },
        };
        let normalization = match self.spec.normalization() {
            Normalization::Unit => None,
            Normalization::Constants(table) => Some(RawNormalization::Constants {
                constants: table
                    .iter()
                    .map(|(k, z)| (k.to_string(), (z.re, z.im)))
                    .collect(),
            }),
        };
        RawScenario {
            schema_version: SCENARIO_SCHEMA_VERSION,
            name: self.name.clone(),
            surface: RawSurface {
                genus: self.marking.genus(),
                rank: self.marking.n_rank(),
                points,
            },
            mapping_class,
            sweep: RawSweep { k0: self.k0, s_max: self.s_max },
            convention: self.convention.as_str().to_string(),
            normalization,
            tolerances: RawTolerances { phase: self.phase_tolerance, rank: self.rank_tolerance },
            seed: self.seed,
            max_terms: self.max_terms,
            tail_order: self.tail_order,
            samples: self.samples.map(|s| RawSamples {
                kind: s.kind.as_str().to_string(),
                count: s.count,
            }),
            inject_phase: self.inject_phase,
            output_stem: Some(self.output_stem.clone()),
        }
    }
}

/// Lowercased alphanumeric-and-dashes form of a name, for artifact stems.
fn slugify(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut last_dash = true;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        "scenario".to_string()
    } else {
        out
    }
}
