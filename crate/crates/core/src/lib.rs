//! Whole-project, usage-driven static type inference for Python.
//!
//! The pipeline discovers modules, orders them by their import graph,
//! infers slot types from how values are used, then fills the remaining
//! gaps from a retrieval index and naming conventions.

pub mod diag;
pub mod error;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod infer;
pub mod pipeline;
pub mod project;
pub mod retrieval;
pub mod slot;
pub mod source;
pub mod syntax;
pub mod types;

pub use error::{Error, Result};
