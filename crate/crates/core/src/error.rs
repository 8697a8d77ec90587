use thiserror::Error;

/// Errors raised by constructors, transforms and numerical routines.
///
/// Structural violations of an [`MdSystem`](crate::system::MdSystem) are not
/// errors; they are reported as data by `validate`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("breakpoints must be strictly increasing (index {0})")]
    NonMonotoneBreakpoints(usize),
    #[error("breakpoints must start at 0 and end at 1")]
    BadEndpoints,
    #[error("atom index {index} out of range for grid with {atoms} atoms")]
    AtomIndexOutOfRange { index: usize, atoms: usize },
    #[error("split ratio must lie in [0, 1], got {0}")]
    BadRatio(String),
    #[error("unknown cell {cell} at level {level}")]
    UnknownCell { level: usize, cell: usize },
    #[error("level {level} out of range 1..={n}")]
    LevelOutOfRange { level: usize, n: usize },
    #[error("system is not dyadic")]
    NotDyadic,
    #[error("coefficient count {0} is not a full dyadic block 2^(K+1)")]
    BadCoefficientCount(usize),
    #[error("variable {0} is not symmetric")]
    NotSymmetric(usize),
    #[error("weights of variable {0} do not sum to 1")]
    NotProbability(usize),
    #[error("all differences vanish; ratio is undefined")]
    TrivialSystem,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("input is not {0}-dyadic")]
    NotKMinus1Dyadic(usize),
    #[error("cell {cell} at level {level} has zero envelope but nonzero value")]
    ZeroEnvelopeCell { level: usize, cell: usize },
    #[error("input does not have the IP property at level {0}")]
    NotIp(usize),
    #[error("cell {cell} at level {level} misses a sign class")]
    EmptySignClass { level: usize, cell: usize },
    #[error("input is not {0}-Rademacher")]
    NotMRademacher(usize),
    #[error("input is not prepared for the modulus equalization at m = {0}")]
    NotPrepared(usize),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("function does not have mean zero")]
    NotMeanZero,
    #[error("candidate is infeasible: max path sum of squares {0}")]
    Infeasible(f64),
    #[error("malformed system: {0}")]
    Shape(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("system failed validation: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
