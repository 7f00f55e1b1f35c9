use alloc::boxed::Box;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    EmptySample,
    QOutOfRange(f64),
    DimensionMismatch { expected: usize, found: usize },
    NonFinite,
    ZeroDirection,
    NetTooCoarse { gamma: f64, dim: usize },
    Unbounded,
    Infeasible { violation: f64 },
    InvalidConfig(&'static str),
    InvalidDomain(&'static str),
    OutsideRegion,
    RejectionStall { proposals: u64 },
    AlphaTooLarge { alpha: f64, limit: f64 },
    KTooSmall { k: usize, d: usize },
    InvalidProbe,
    InsufficientRows { needed: usize, available: usize },
    TypicalityGateFailed { batch: usize },
    EmptyBody,
    OracleFailure { step: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySample => f.write_str("sample has no rows"),
            Error::QOutOfRange(q) => write!(f, "quantile level {q} outside (1/2, 1)"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite => f.write_str("input contains NaN or infinite values"),
            Error::ZeroDirection => f.write_str("direction has zero norm"),
            Error::NetTooCoarse { gamma, dim } => {
                write!(f, "deterministic net with gap {gamma} unsupported in dimension {dim}")
            }
            Error::Unbounded => f.write_str("linear program is unbounded"),
            Error::Infeasible { violation } => {
                write!(f, "polytope is empty (smallest achievable violation {violation:e})")
            }
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::InvalidDomain(what) => write!(f, "argument outside its domain: {what}"),
            Error::OutsideRegion => f.write_str("center lies outside the output region"),
            Error::RejectionStall { proposals } => {
                write!(f, "rejection sampler accepted nothing in {proposals} proposals")
            }
            Error::AlphaTooLarge { alpha, limit } => {
                write!(f, "accuracy {alpha} must be below {limit}")
            }
            Error::KTooSmall { k, d } => write!(f, "step count {k} must be at least the dimension {d}"),
            Error::InvalidProbe => f.write_str("probe dataset lies outside the enumerated universe"),
            Error::InsufficientRows { needed, available } => {
                write!(f, "need {needed} rows, have {available}")
            }
            Error::TypicalityGateFailed { batch } => write!(f, "batch {batch} failed the typicality gate"),
            Error::EmptyBody => f.write_str("floating body has empty interior"),
            Error::OracleFailure { step, source } => write!(f, "oracle failed at step {step}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::OracleFailure { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
