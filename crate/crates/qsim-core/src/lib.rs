//! Infinite qualitative simulation engine: qualitative calculi, a
//! finite-domain constraint solver, a linear temporal specification language,
//! and the translation of temporal formulas into constraints over lasso paths.

pub mod calculus;
pub mod csp;
pub mod engine;
pub mod ltl;
pub mod translate;
