//! Valuations with real residue field on the first Weyl algebra A₁ and on
//! the Ore extension R[y; d/dx] of Puiseux series.
//!
//! The crate evaluates valuations given by key sequences
//! ω_i = x^{m_i}·ω_{i−1}^{n_i} − β_i, converts them into Puiseux
//! z-sequences, and enumerates the orderings compatible with them.

pub mod descriptor;
pub mod error;
pub mod eval;
pub mod extension;
pub mod lattice;
pub mod orderings;
pub mod parse;
pub mod puiseux;
pub mod rat;
pub mod sample;
pub mod shadow;
pub mod value;
pub mod weyl;
pub mod zseq;

pub use error::{Error, Result};
pub use rat::Rat;
pub use value::Value;
pub use weyl::{WeylElement, WeylFraction};
