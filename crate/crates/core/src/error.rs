use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants split into two families: structural problems with the inputs
/// (see [`Error::is_validation`]) and numerical failures raised while
/// evaluating a limit, an integral or a factorization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("breakpoints must be strictly increasing with at least two entries (violated at index {index})")]
    InvalidBreakpoints { index: usize },
    #[error("{breakpoints} breakpoints but {values} continuous values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("continuous values decrease between index {index} and {}", index + 1)]
    NonMonotone { index: usize },
    #[error("jump at {at} lies outside the half-open window [{lo}, {hi})")]
    JumpOutOfWindow { at: f64, lo: f64, hi: f64 },
    #[error("duplicate jump at {at}")]
    DuplicateJump { at: f64 },
    #[error("jump at {at} has non-positive size {size}")]
    NonPositiveJump { at: f64, size: f64 },
    #[error("{t} is outside the window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },
    #[error("{x} is outside the range of the continuous part")]
    OutOfRange { x: f64 },
    #[error("intervals [{first:?}) and [{second:?}) overlap")]
    OverlappingIntervals { first: (f64, f64), second: (f64, f64) },
    #[error("invalid interval [{c}, {d})")]
    InvalidInterval { c: f64, d: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e}) within {intervals} subintervals")]
    QuadratureFailure { tol: f64, estimate: f64, intervals: usize },
    #[error("difference quotients at {at} do not settle")]
    NoLimit { at: f64 },
    #[error("g is locally constant on one side of {at}; the quotient has no denominator")]
    DegenerateDenominator { at: f64 },
    #[error("no right-hand limit at jump point {at}")]
    NotRegulated { at: f64 },
    #[error("sampled g-modulus {omega} at delta {delta:e} exceeds {eps}")]
    NotUniform { omega: f64, delta: f64, eps: f64 },
    #[error("reconstruction error {error:e} exceeds tolerance {tol:e}")]
    ReconstructionError { error: f64, tol: f64 },
    #[error("least-squares system is ill-conditioned ({reason})")]
    IllConditioned { reason: String },
    #[error("1 + lambda * jump = {factor} at {at} leaves the real logarithm branch")]
    BranchViolation { at: f64, factor: f64 },
    #[error("backward exponential forms disagree at {at}: {inverse} vs {transformed}")]
    BackwardMismatch { at: f64, inverse: f64, transformed: f64 },
    #[error("core interval [{a}, {b}] is not interior to the window [{lo}, {hi}]")]
    WindowTooSmall { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("family is empty")]
    EmptyFamily,
    #[error("sequence {index} has no declared tail bound")]
    MissingTailBound { index: usize },
    #[error("function is not decomposable: {reason}")]
    NotDecomposable { reason: String },
    #[error("no right-hand limit at {at}")]
    NoRightLimit { at: f64 },
    #[error("function vanishes at or right of jump point {at}")]
    ZeroNearJump { at: f64 },
    #[error("logarithmic jump sum is not finite")]
    LogSumDiverges,
}

impl Error {
    /// Stable identifier echoed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidBreakpoints { .. } => "InvalidBreakpoints",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::NonMonotone { .. } => "NonMonotone",
            Error::JumpOutOfWindow { .. } => "JumpOutOfWindow",
            Error::DuplicateJump { .. } => "DuplicateJump",
            Error::NonPositiveJump { .. } => "NonPositiveJump",
            Error::OutOfWindow { .. } => "OutOfWindow",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::OverlappingIntervals { .. } => "OverlappingIntervals",
            Error::InvalidInterval { .. } => "InvalidInterval",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::NoLimit { .. } => "NoLimit",
            Error::DegenerateDenominator { .. } => "DegenerateDenominator",
            Error::NotRegulated { .. } => "NotRegulated",
            Error::NotUniform { .. } => "NotUniform",
            Error::ReconstructionError { .. } => "ReconstructionError",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::BranchViolation { .. } => "BranchViolation",
            Error::BackwardMismatch { .. } => "BackwardMismatch",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::EmptyFamily => "EmptyFamily",
            Error::MissingTailBound { .. } => "MissingTailBound",
            Error::NotDecomposable { .. } => "NotDecomposable",
            Error::NoRightLimit { .. } => "NoRightLimit",
            Error::ZeroNearJump { .. } => "ZeroNearJump",
            Error::LogSumDiverges => "LogSumDiverges",
        }
    }

    /// True for malformed inputs, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidBreakpoints { .. }
                | Error::LengthMismatch { .. }
                | Error::NonFinite { .. }
                | Error::NonMonotone { .. }
                | Error::JumpOutOfWindow { .. }
                | Error::DuplicateJump { .. }
                | Error::NonPositiveJump { .. }
                | Error::OutOfWindow { .. }
                | Error::OutOfRange { .. }
                | Error::OverlappingIntervals { .. }
                | Error::InvalidInterval { .. }
                | Error::InvalidParameter { .. }
                | Error::WindowTooSmall { .. }
                | Error::EmptyFamily
                | Error::MissingTailBound { .. }
        )
    }
}
