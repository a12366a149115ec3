//! Solver for word equations under per-variable length bounds.
//!
//! An equation like `XabY = aXYb` asks for words over the terminal
//! alphabet that make both sides equal once substituted. Bounding the
//! length of every variable makes the question decidable by reduction
//! to propositional satisfiability: each variable becomes a fixed block
//! of cells over the alphabet plus a padding symbol, and the possible
//! alignments of the two sides form a reachability problem on a grid
//! that encodes compactly into CNF.
//!
//! The crate ships the full pipeline: parsing and preprocessing,
//! an explicit-state reference search, a linear length abstraction with
//! decision-diagram guiding, the CNF encoder, a small CDCL solver, and
//! benchmark instance generators.

pub mod automaton;
pub mod benchgen;
pub mod driver;
pub mod encoder;
pub mod error;
pub mod linear;
pub mod model;
pub mod preprocess;
pub mod sat;

pub use error::{Error, Result};
pub use model::{
    Bounds, EquationSystem, LinearConstraint, Pattern, Substitution, Symbol, WordEquation,
};
