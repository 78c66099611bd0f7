//! Exact symbolic workbench for Lie conformal algebras, their enveloping
//! vertex algebras, and the presentation of binary operator product
//! expansions as gluing data over chart coverings of the affine plane and
//! 3-space.
//!
//! Everything is computed over the rationals with explicit truncation
//! windows; checks report `pass`, `fail`, or `inconclusive` and a `fail` is
//! always backed by an exact nonzero residual.
//!
//! Start with the runnable examples (`cargo run --example lca_axioms`) or the
//! `workbench` binary (`cargo run --bin workbench -- lca check algebras/vir.json`).

pub mod error;
pub mod rational;
pub mod poly;
pub mod localized;
pub mod tower;
pub mod conformal;
pub mod annihilation;
pub mod report;
pub mod charts;
pub mod enveloping;
pub mod descent;

pub use error::AlgebraError;
pub use rational::Rational;
