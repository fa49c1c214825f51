//! Total search problems between Lemke pivoting and contraction maps.
//!
//! The crate provides exact rational arithmetic, a Lemke solver for P-matrix
//! linear complementarity problems, oracle-based line-following problems,
//! arithmetic-circuit optimisation problems, and the reductions between them,
//! each reduction paired with a map that pulls solutions back.

pub mod arith;
pub mod circuit;
pub mod lcp;
pub mod line;
pub mod reduce;
pub mod gen;
pub mod harness;
