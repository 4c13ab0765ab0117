//! Python-subset to MP-SPDZ transpiler.
//!
//! The crate is organised as one module per stage: [`frontend`] parses the
//! input subset, [`rules`] rewrites it into Canonical Form Python, [`emit`]
//! maps that onto the MP-SPDZ surface, [`spdzsim`] executes the result under
//! fixed-point semantics, [`pipeline`] strings the stages together with a
//! repair loop and [`harness`] evaluates whole corpora.

pub mod frontend;
pub mod pyexec;
pub mod rules;
pub mod emit;
pub mod spdzsim;
pub mod pipeline;
pub mod harness;
