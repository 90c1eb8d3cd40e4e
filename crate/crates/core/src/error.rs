use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error("digit {digit} out of range at level {level} (radix {radix})")]
    DigitOutOfRange {
        level: usize,
        digit: u128,
        radix: u128,
    },
    #[error("digit map carries no tail metadata")]
    NoTailMeta,
    #[error("enumeration of {requested} values exceeds the cap of {cap}")]
    ResourceLimit { requested: u64, cap: u64 },
    #[error("point {0} lies outside [0, 1]")]
    PointOutOfRange(f64),
    #[error("tail mass {eps_p} outside the grid range exceeds the ceiling {ceiling}")]
    RangeTooSmall { eps_p: f64, ceiling: f64 },
    #[error(
        "characteristic function does not decay: cutoff tail estimate {tail} exceeds {ceiling}"
    )]
    NonIntegrable { tail: f64, ceiling: f64 },
    #[error("regime B needs a density bound rho_inf")]
    MissingDensityBound,
    #[error("regime unavailable: {0}")]
    RegimeUnavailable(String),
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("transition matrix is not primitive")]
    NotPrimitive,
    #[error("alphabet mismatch: chain has {chain} states, map has {map} values")]
    AlphabetMismatch { chain: usize, map: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
