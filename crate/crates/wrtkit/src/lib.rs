//! Verification toolkit for quantum invariants of links in mapping tori.
//!
//! The crate computes, from first principles and at desk scale:
//!
//! - exact su(N) weight arithmetic and level-k label sets ([`lie_data`]);
//! - modular data (S-matrix, T-phases), fusion coefficients, and Verlinde
//!   dimensions of conformal-block spaces ([`modular`]);
//! - marked-surface moduli dimensions and level admissibility ([`surfaces`]);
//! - parabolic group cohomology of punctured-surface groups and their
//!   mapping-torus extensions, including the Wang-sequence cross-checks
//!   ([`repvar`]);
//! - closed-form Chern-Simons phases for Dehn-twist mapping classes
//!   ([`cs_values`]);
//! - invariant level sweeps with exact integer and phase witnesses
//!   ([`invariants`]);
//! - asymptotic-expansion extraction (phase detection, model fitting,
//!   remainder checks, growth degrees) ([`asymptotics`]);
//! - a scenario-driven CLI assembling the above into verification pipelines
//!   ([`cli`]).
//!
//! The numerical design keeps every predicate that must be bit-exact in
//! rational arithmetic (`lie_data`, `surfaces`, `cs_values` exponents) and
//! confines floating point to the modular and asymptotics layers, where
//! integer outputs are recovered by rounding with an explicit residue check
//! and fits accumulate in double-double precision.

pub mod asymptotics;
pub mod book;
pub mod cli;
pub mod cs_values;
pub mod invariants;
pub mod lie_data;
pub mod modular;
pub mod numeric;
pub mod report;
pub mod repvar;
pub mod samples;
pub mod scenario;
pub mod surfaces;

pub use lie_data::{central_charge, inner_product, label_set, LabelSet, Rational, Weight};
pub use numeric::phase::Phase;
