//! SPARQL algebra evaluation, algebraic rewriting, chase-based semantic
//! optimization and chase-termination analysis.

pub mod algebra;
pub mod chase;
pub mod cq;
pub mod error;
pub mod rdf;
pub mod reductions;
pub mod rewrite;
pub mod sqo;
pub mod syntax;
pub mod termination;

pub use error::{Error, Result};
