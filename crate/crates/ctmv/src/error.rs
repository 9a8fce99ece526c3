//! Crate-wide error type.

/// Everything that can go wrong across market validation, closed forms,
/// simulation, and verification.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The horizon `T` must be strictly positive.
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),

    /// Mismatched array lengths or matrix shapes in the market definition.
    #[error("dimension mismatch: {0}")]
    BadDimensions(String),

    /// Breakpoints must be strictly increasing, start at 0, and end at the horizon.
    #[error("invalid breakpoints: {0}")]
    BadBreakpoints(String),

    /// The Gram matrix σσ' fell below the nondegeneracy floor on some interval.
    #[error("degenerate volatility on [{t0}, {t1}): min eigenvalue {eigenvalue:e} below floor {floor:e}")]
    Degenerate {
        t0: f64,
        t1: f64,
        eigenvalue: f64,
        floor: f64,
    },

    /// All appreciation rates equal the interest rate almost everywhere, so no
    /// target above the risk-free payoff is attainable.
    #[error("infeasible market: appreciation rates equal the interest rate almost everywhere")]
    Infeasible,

    /// A time argument fell outside `[0, T]`.
    #[error("time {t} outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    /// Integration bounds out of order.
    #[error("reversed interval: t0 = {t0} > t1 = {t1}")]
    ReversedInterval { t0: f64, t1: f64 },

    /// The expected-wealth target is below what the bond alone delivers.
    #[error("target {z} below the risk-free payoff {payoff}")]
    TargetBelowRiskFree { z: f64, payoff: f64 },

    /// A scalar argument violated its documented domain.
    #[error("invalid parameter: {0}")]
    BadParams(String),

    /// The exact scheme only applies to the efficient strategy.
    #[error("scheme mismatch: the exact scheme only supports the efficient strategy")]
    SchemeMismatch,

    /// A simulated wealth path left the trusted numerical range.
    #[error("numerical blowup at path {path}, step {step}: |wealth| exceeded 1e12 x0 or became non-finite")]
    NumericalBlowup { path: u64, step: usize },

    /// Terminal statistics need at least two paths.
    #[error("degenerate ensemble: need at least two paths")]
    DegenerateEnsemble,

    /// A self-check against known reference values failed.
    #[error("self-check failed: {0}")]
    SelfCheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
