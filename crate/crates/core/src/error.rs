use crate::logscale::LogReal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VexError {
    #[error("non-finite input: {0}")]
    NonFinite(f64),
    #[error("domain: {0}")]
    Domain(String),
    #[error("range: {0}")]
    Range(String),
    #[error("conjugate undefined: p(x) = 1")]
    ConjugateUndefined,
    #[error("resolution exceeded: point below the resolved region of a depth-{depth} table")]
    ResolutionExceeded { depth: u32 },
    #[error("overlapping levels in piecewise-constant integrand")]
    Overlap,
    #[error("exponent bounds unresolvable, partial bounds [{lo}, {hi}]")]
    Unresolvable { lo: f64, hi: f64 },
    #[error("quadrature did not converge (best estimate ln = {}, error ln = {})", best.ln(), err.ln())]
    NoConvergence { best: LogReal, err: LogReal },
    #[error("bracketing failed, last bracket ln-lambda in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    #[error("empty interval family")]
    EmptyFamily,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, VexError>;
