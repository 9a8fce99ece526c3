//! Closed forms: efficient frontier, efficient feedback policy, and the
//! single-stock dominance inequalities.
//!
//! With Γ_r = ∫₀ᵀ r ds and Γ_θ = ∫₀ᵀ |θ|² ds, a target z ≥ x0·e^{Γ_r} is
//! reached with minimal variance by the feedback policy
//!
//! ```text
//! π*(t) = −(σσ')⁻¹B · (x*(t) − γ e^{−∫_t^T r ds}),
//! γ     = (z − x0 e^{Γ_r − Γ_θ}) / (1 − e^{−Γ_θ}),
//! Var x*(T) = (z − x0 e^{Γ_r})² / (e^{Γ_θ} − 1),
//! ```
//!
//! which traces the straight frontier
//! `E[R(T)] = R_f(T) + sqrt(e^{Γ_θ} − 1) · σ_R(T)` in the (σ, mean) plane of
//! terminal returns.

use crate::error::{Error, Result};
use crate::market::ValidatedMarket;
use crate::region::DiagramPoint;

/// Below this total squared risk premium the frontier denominators are
/// numerically meaningless and the market is treated as infeasible.
pub const MIN_TOTAL_THETA2: f64 = 1e-12;

fn check_x0(x0: f64) -> Result<()> {
    if !x0.is_finite() || x0 <= 0.0 {
        return Err(Error::BadParams(format!(
            "initial wealth must be positive, got {x0}"
        )));
    }
    Ok(())
}

fn check_feasible_target(market: &ValidatedMarket, x0: f64, z: f64) -> Result<()> {
    check_x0(x0)?;
    if !z.is_finite() {
        return Err(Error::BadParams(format!("target must be finite, got {z}")));
    }
    if market.integrals().total_theta2() < MIN_TOTAL_THETA2 {
        return Err(Error::Infeasible);
    }
    let payoff = market.risk_free_payoff(x0);
    if z < payoff {
        return Err(Error::TargetBelowRiskFree { z, payoff });
    }
    Ok(())
}

/// Lagrange-multiplier level γ of the efficient policy; also the wealth cap:
/// no efficient path ever exceeds γ·e^{−∫_t^T r ds}.
pub fn gamma(market: &ValidatedMarket, x0: f64, z: f64) -> Result<f64> {
    check_feasible_target(market, x0, z)?;
    let total_rate = market.integrals().total_rate();
    let total_theta2 = market.integrals().total_theta2();
    Ok((z - x0 * (total_rate - total_theta2).exp()) / (1.0 - (-total_theta2).exp()))
}

/// Smallest attainable variance of terminal wealth at the target `z`.
pub fn min_variance(market: &ValidatedMarket, x0: f64, z: f64) -> Result<f64> {
    check_feasible_target(market, x0, z)?;
    let d = z - market.risk_free_payoff(x0);
    Ok(d * d / (market.integrals().total_theta2().exp_m1()))
}

/// Slope sqrt(e^{∫|θ|²} − 1) of the efficient frontier in the
/// (σ_return, mean_return) plane.
pub fn frontier_slope(market: &ValidatedMarket) -> f64 {
    market.integrals().total_theta2().exp_m1().sqrt()
}

/// All frontier quantities for one target, packaged.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficientSolution {
    pub z: f64,
    pub gamma: f64,
    pub variance: f64,
    pub std_return: f64,
    pub mean_return: f64,
    pub slope: f64,
    pub risk_free_return: f64,
}

impl EfficientSolution {
    pub fn solve(market: &ValidatedMarket, x0: f64, z: f64) -> Result<Self> {
        let variance = min_variance(market, x0, z)?;
        Ok(Self {
            z,
            gamma: gamma(market, x0, z)?,
            variance,
            std_return: variance.sqrt() / x0,
            mean_return: (z - x0) / x0,
            slope: frontier_slope(market),
            risk_free_return: market.risk_free_return(),
        })
    }
}

/// Closed-form frontier trace: `count` targets equally spaced on
/// `[z_min, z_max]`, each mapped to its exact (σ, mean) point (zero standard
/// errors). A collapsed range yields the single risk-free point.
pub fn frontier_points(
    market: &ValidatedMarket,
    x0: f64,
    z_min: f64,
    z_max: f64,
    count: usize,
) -> Result<Vec<DiagramPoint>> {
    if count == 0 {
        return Err(Error::BadParams("need at least one frontier point".into()));
    }
    if !(z_min <= z_max) {
        return Err(Error::BadParams(format!(
            "z range reversed: [{z_min}, {z_max}]"
        )));
    }
    let point = |z: f64| -> Result<DiagramPoint> {
        let sol = EfficientSolution::solve(market, x0, z)?;
        Ok(DiagramPoint {
            label: format!("target[{z}]"),
            std_return: sol.std_return,
            mean_return: sol.mean_return,
            se_std: 0.0,
            se_mean: 0.0,
        })
    };
    if z_min == z_max || count == 1 {
        return Ok(vec![point(z_min)?]);
    }
    let step = (z_max - z_min) / (count - 1) as f64;
    (0..count).map(|i| point(z_min + step * i as f64)).collect()
}

/// Money amounts the efficient policy holds at time `t` with wealth `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector {
    /// Amount in each stock: −(σσ')⁻¹B(t) · (x − γ e^{−∫_t^T r ds}).
    pub risky: Vec<f64>,
    /// Amount in the bond: x − Σᵢ risky[i].
    pub bond: f64,
}

/// Efficient-policy allocation as a function of the current state.
pub fn efficient_allocation(
    market: &ValidatedMarket,
    x0: f64,
    z: f64,
    t: f64,
    x: f64,
) -> Result<AllocationVector> {
    if !x.is_finite() {
        return Err(Error::BadParams(format!("wealth must be finite, got {x}")));
    }
    let g = gamma(market, x0, z)?;
    let interval = market.interval_at(t)?;
    let cap = g * market.discount_from_horizon(t);
    let risky: Vec<f64> = interval.alloc_dir.iter().map(|d| d * (cap - x)).collect();
    let bond = x - risky.iter().sum::<f64>();
    Ok(AllocationVector { risky, bond })
}

/// Terminal-return statistics of holding one stock to the horizon in a
/// constant-coefficient single-stock market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StockStats {
    pub mean_return: f64,
    pub std_return: f64,
    pub sharpe: f64,
}

/// ```text
/// E[R(T)]  = e^{μT} − 1
/// σ_R(T)   = e^{μT} sqrt(e^{σ²T} − 1)
/// sharpe   = (E[R(T)] − (e^{rT} − 1)) / σ_R(T)
/// ```
pub fn stock_stats_bs(mu: f64, sigma: f64, rate: f64, horizon: f64) -> Result<StockStats> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::BadParams(format!(
            "volatility must be positive, got {sigma}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::BadParams(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let growth = (mu * horizon).exp();
    let mean_return = growth - 1.0;
    let std_return = growth * (sigma * sigma * horizon).exp_m1().sqrt();
    let sharpe = (mean_return - (rate * horizon).exp_m1()) / std_return;
    Ok(StockStats {
        mean_return,
        std_return,
        sharpe,
    })
}

/// Margin of the strict frontier-over-stock inequality in a
/// constant-coefficient single-stock market with μ > r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceMargin {
    /// e^{((μ−r)/σ)²T} − 1 − (e^{μT} − e^{rT})² / (e^{(2μ+σ²)T} − e^{2μT})
    pub margin: f64,
    pub holds: bool,
}

/// Dynamic trading beats buy-and-hold in Sharpe ratio iff `margin > 0`
/// (always true for μ > r; the margin quantifies by how much the squared
/// slope exceeds the squared stock Sharpe ratio numerator-normalized form).
pub fn bs_strict_dominance(mu: f64, sigma: f64, rate: f64, horizon: f64) -> Result<DominanceMargin> {
    if !(mu > rate) {
        return Err(Error::BadParams(format!(
            "need mu > rate for strict dominance, got mu = {mu}, rate = {rate}"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::BadParams(format!(
            "volatility must be positive, got {sigma}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::BadParams(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let theta = (mu - rate) / sigma;
    let lhs = (theta * theta * horizon).exp_m1();
    let num = (mu * horizon).exp() - (rate * horizon).exp();
    let den = ((2.0 * mu + sigma * sigma) * horizon).exp() - (2.0 * mu * horizon).exp();
    let margin = lhs - num * num / den;
    Ok(DominanceMargin {
        margin,
        holds: margin > 0.0,
    })
}

/// Margin of `(e^{bx} − 1)(e^{b/x} − 1) ≥ (e^b − 1)²` for `b, x > 0`;
/// zero exactly at `x = 1`, strictly positive elsewhere.
pub fn lemma_a1_margin(b: f64, x: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::BadParams(format!("need b > 0, got {b}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::BadParams(format!("need x > 0, got {x}")));
    }
    let square = (b.exp_m1()) * (b.exp_m1());
    Ok(((b * x).exp_m1()) * ((b / x).exp_m1()) - square)
}

/// Relative Sharpe-ratio advantage of the frontier over a risky benchmark:
/// `slope / risky_sharpe − 1`.
pub fn premium(frontier_slope: f64, risky_sharpe: f64) -> Result<f64> {
    if !frontier_slope.is_finite() || frontier_slope < 0.0 {
        return Err(Error::BadParams(format!(
            "slope must be nonnegative, got {frontier_slope}"
        )));
    }
    if !(risky_sharpe > 0.0) || !risky_sharpe.is_finite() {
        return Err(Error::BadParams(format!(
            "benchmark sharpe must be positive, got {risky_sharpe}"
        )));
    }
    Ok(frontier_slope / risky_sharpe - 1.0)
}
