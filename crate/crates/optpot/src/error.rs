//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by mesh construction, assembly, solvers, the optimizer
/// and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The conjugate-gradient solver did not reach the requested residual
    /// within its iteration cap.
    #[error("linear solver failed to converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// The multiplier bracketing/bisection could not match the volume bound.
    #[error("multiplier search failed: volume mismatch {mismatch:.3e} (bound m = {bound})")]
    MultiplierFailure { mismatch: f64, bound: f64 },

    /// A failure that occurred inside the descent loop, tagged with the
    /// iteration at which it happened.
    #[error("optimization failed at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Configuration file problem; `line` is 1-based when known.
    #[error("config error{}: {message}", match line { Some(l) => format!(" (line {l})"), None => String::new() })]
    Config { line: Option<usize>, message: String },

    /// Unknown built-in problem name.
    #[error("unknown problem `{0}` (expected example1, example2, example3 or example4)")]
    UnknownProblem(String),

    /// A numerical check ran to completion but its result violates the
    /// required contract.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }

    /// True for errors caused by bad input (config, arguments, unknown names)
    /// rather than by a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Config { .. } | Error::UnknownProblem(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
