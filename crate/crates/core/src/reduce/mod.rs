//! Instance transformers between the problems, each paired with a solution
//! back-map that re-verifies its answer on the source instance.

mod contraction;
mod lines;
mod plcp;

use std::fmt;

use thiserror::Error;

use crate::circuit::problems::ProblemError;
use crate::circuit::CircuitError;
use crate::lcp::LcpError;
use crate::line::{LineError, OracleError};

pub use contraction::{
    clo_sol_to_contraction, clo_sol_to_gc, clo_to_mmc, contraction_to_clo, gc_sol_to_mmc, gc_to_clo, mmc_sol_to_clo,
    mmc_to_gc, power_mean_bound,
};
pub use lines::{eoml_sol_to_eopl, eoml_to_eopl, eopl_sol_to_eoml, eopl_to_eoml};
pub use plcp::{eopl_sol_to_plcp, plcp_to_eopl, PlcpEoplContext, PlcpReduction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Lcp(#[from] LcpError),
    #[error(transparent)]
    Line(#[from] LineError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    /// The input to a back-map is not a solution of the target instance, or
    /// is of a type the construction rules out.
    #[error("precondition violated: {0}")]
    Contract(String),
    /// A back-map produced something that does not verify. Signals a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("source instance is invalid: {}", .0.join("; "))]
    InvalidSource(Vec<String>),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<OracleError> for ReductionError {
    fn from(e: OracleError) -> Self {
        ReductionError::Line(LineError::Oracle(e))
    }
}

impl From<CircuitError> for ReductionError {
    fn from(e: CircuitError) -> Self {
        ReductionError::Problem(ProblemError::Circuit(e))
    }
}

impl ReductionError {
    pub fn is_degenerate(&self) -> bool {
        match self {
            ReductionError::Lcp(e) => e.is_degenerate(),
            ReductionError::Line(LineError::Oracle(e)) => e.is_degenerate(),
            _ => false,
        }
    }
}

/// Either a target instance or, when the source is trivially solved, the
/// solution itself.
#[derive(Debug, Clone)]
pub enum Reduced<T, S> {
    Instance(T),
    Immediate(S),
}

impl<T, S> Reduced<T, S> {
    pub fn instance(self) -> Option<T> {
        match self {
            Reduced::Instance(t) => Some(t),
            Reduced::Immediate(_) => None,
        }
    }
}

/// Record of one verified round trip: a target solution and the source
/// solution it maps back to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionCertificate {
    source: String,
    target: String,
    forward: String,
    target_solution: String,
    solution: String,
    verdict: String,
}

impl ReductionCertificate {
    /// Only called after the back-mapped solution has been re-verified.
    pub(crate) fn issue(
        source: &str,
        target: &str,
        forward: impl Into<String>,
        target_solution: impl fmt::Display,
        solution: impl fmt::Display,
        verdict: impl Into<String>,
    ) -> Self {
        ReductionCertificate {
            source: source.into(),
            target: target.into(),
            forward: forward.into(),
            target_solution: target_solution.to_string(),
            solution: solution.to_string(),
            verdict: verdict.into(),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn solution(&self) -> &str {
        &self.solution
    }
}

impl fmt::Display for ReductionCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CERTIFICATE")?;
        writeln!(f, "source {}", self.source)?;
        writeln!(f, "target {}", self.target)?;
        writeln!(f, "forward {}", self.forward)?;
        writeln!(f, "target-solution {}", self.target_solution)?;
        writeln!(f, "solution {}", self.solution)?;
        writeln!(f, "verdict pass: {}", self.verdict)
    }
}
