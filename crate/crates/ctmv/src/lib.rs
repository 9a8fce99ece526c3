//! Continuous-time mean–variance portfolio analytics.
//!
//! A market of one bond and `m` stocks with piecewise-constant deterministic
//! coefficients admits closed forms for the variance-minimizing strategy at
//! any terminal target: the efficient frontier in the (σ_R, E[R]) diagram is
//! a straight line, its slope strictly exceeds the Sharpe ratio of every
//! admissible portfolio, and efficient wealth never exceeds a deterministic
//! cap. This crate computes those closed forms, simulates wealth processes
//! under efficient and user-defined strategies (exact sampling or
//! Euler–Maruyama on discounted wealth), samples the region reachable by
//! pure-risky strategies, and verifies the claims statistically with
//! reproducible, worker-count-independent Monte Carlo.
//!
//! Entry points:
//!
//! * [`market::MarketModel`] — define and validate a market.
//! * [`frontier`] — closed forms: frontier line, minimum variance, policies.
//! * [`simulate`] — Monte Carlo engines and terminal statistics.
//! * [`region`] — risky/combination region samplers and separation checks.
//! * [`verify`] — the statistical verification report.
//!
//! The `parallel` feature (default on) runs path loops on a rayon pool;
//! disabling it yields a dependency-light sequential build with bit-identical
//! outputs.

pub mod curve;
pub mod error;
pub mod frontier;
pub mod market;
pub mod region;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use curve::ParameterCurve;
pub use error::{Error, Result};
pub use frontier::{
    efficient_allocation, frontier_points, frontier_slope, premium, AllocationVector,
    EfficientSolution,
};
pub use market::{IntegralKind, MarketModel, ValidatedMarket};
pub use region::{
    check_separation, points_to_csv, sample_combination_region, sample_risky_region,
    DiagramPoint, RegionSample, SeparationReport,
};
pub use simulate::{
    estimate_terminal_stats, simulate_wealth, AlphaSpec, PathEnsemble, Scheme, SimConfig,
    Strategy, TerminalStats,
};
pub use verify::{run_all, CheckRecord, VerificationReport, VerifyConfig};
