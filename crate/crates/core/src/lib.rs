//! Semantic basis decomposition and composition engine.
//!
//! A signal corpus is decomposed into a compact set of unit-norm semantic
//! bases by a bi-level optimizer: the inner problem maximizes the
//! distributional diversity of the base set subject to an average cognitive
//! error budget, the outer problem minimizes storage plus average
//! representation complexity over the diversity-optimal band. Bases are
//! iterated into a hierarchy of higher-order bases, signals are encoded as
//! sparse coefficient vectors against the working base set, and new signals
//! are composed from explicit coefficient specs and checked against an
//! environment validator before they are journaled as discovered knowledge.
//!
//! The crate also carries the set-theoretic message algebra (message =
//! information ∪ knowledge ∪ dark message over a finite symbol universe)
//! and the file/CLI plumbing used by the `sembase` binary.

pub mod coding;
pub mod complexity;
pub mod compose;
pub mod decompose;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod message;
pub mod signal;
pub mod statistics;

mod linalg;

pub use coding::CodingConfig;
pub use complexity::{ComplexityConfig, ObjectiveValue};
pub use decompose::{CandidateTrace, DecomposeConfig, DecomposeResult};
pub use error::{Error, Result};
pub use hierarchy::{HierarchyConfig, HierarchyNode, HierarchyTree};
pub use signal::{
    BaseSet, Codebook, Coefficients, SampleSet, SemanticBase, SemanticSymbol, Signal,
};
