//! Numerical building blocks shared across modules: exact root-of-unity
//! phases, double-double (compensated) accumulation, small dense complex
//! eigensolvers, compensated complex least squares, and real rank/kernel
//! helpers with explicit spectral-gap diagnostics.

pub mod dd;
pub mod lstsq;
pub mod phase;
pub mod rank;
pub mod roots;

pub use phase::Phase;
