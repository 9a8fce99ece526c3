//! Monte Carlo simulation of wealth processes.
//!
//! Two schemes:
//!
//! * `Euler` integrates the wealth equation for any strategy. The risk-free
//!   growth is handled exactly by stepping the *discounted* wealth
//!   `x̃(t) = x(t)·e^{−∫₀ᵗ r}`, whose dynamics have no `r·x` drift:
//!
//!   ```text
//!   x̃_{k+1} = x̃_k + e^{−∫₀^{t_k} r} [ B'π_k Δt + (σ'π_k)'ΔW_k ].
//!   ```
//!
//!   A strategy holding nothing risky therefore compounds to `x0·e^{∫r}`
//!   exactly, with no discretization error on the bond.
//!
//! * `Exact` samples the efficient strategy's wealth from its closed-form
//!   solution: with `y(t) = x*(t) − γe^{−∫_t^T r}`,
//!
//!   ```text
//!   y(t_{k+1}) = y(t_k) · exp{ ∫(r − 3/2|θ|²) ds − N(0, ∫|θ|² ds) },
//!   ```
//!
//!   all integrals over `[t_k, t_{k+1}]` evaluated exactly, so the sampled
//!   marginals (and joint law over the grid) carry no time-stepping bias at
//!   any step count. Since `y(0) ≤ 0` and the exponential never changes sign,
//!   the wealth cap `x*(t) ≤ γe^{−∫_t^T r}` holds pathwise by construction.
//!
//! Randomness is counter-based: the Gaussian used by path `p` at step `k`,
//! component `j`, is a pure function of `(seed, p, k, j)`. Worker threads and
//! scheduling order cannot affect any output bit; ensembles are reproducible
//! from `(market, strategy, config)` alone.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::curve::ParameterCurve;
use crate::error::{Error, Result};
use crate::frontier;
use crate::market::{Interval, ValidatedMarket};
use crate::rng;

/// Wealth paths are aborted once |x| exceeds this multiple of x0.
pub const BLOWUP_FACTOR: f64 = 1e12;

/// Cap-violation tolerance, as a multiple of γ.
pub const CAP_TOLERANCE: f64 = 1e-9;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Euler–Maruyama on discounted wealth; any strategy.
    Euler,
    /// Closed-form sampling; efficient strategy only.
    Exact,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "exact" => Ok(Scheme::Exact),
            other => Err(Error::BadParams(format!(
                "unknown scheme '{other}' (expected 'euler' or 'exact')"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Exact => "exact",
        })
    }
}

/// Simulation run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::BadParams("n_paths must be at least 1".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::BadParams("n_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Leverage profile α(t) applied to a base risky portfolio.
#[derive(Debug, Clone)]
pub enum AlphaSpec {
    /// α(t) ≡ value.
    Constant { value: f64 },
    /// Deterministic piecewise-constant α(t); the curve must span `[0, T]`.
    Deterministic { curve: ParameterCurve<f64> },
    /// `below` while the combined wealth is under `barrier`, `above` once at
    /// or over it (evaluated at the left endpoint of each step).
    Threshold { barrier: f64, below: f64, above: f64 },
    /// Two-state Markov switch between `levels` with the given jump
    /// intensity; starts in `levels.0`. Uses its own dedicated draw per step,
    /// so the Brownian increments are untouched.
    RandomSwitch { intensity: f64, levels: (f64, f64) },
}

impl AlphaSpec {
    fn check(&self, horizon: f64) -> Result<()> {
        match self {
            AlphaSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::BadParams(format!("alpha must be finite, got {value}")));
                }
            }
            AlphaSpec::Deterministic { curve } => {
                if curve.end() != horizon {
                    return Err(Error::BadParams(format!(
                        "alpha curve ends at {} but the horizon is {horizon}",
                        curve.end()
                    )));
                }
                if curve.values().iter().any(|v| !v.is_finite()) {
                    return Err(Error::BadParams("non-finite alpha value".into()));
                }
            }
            AlphaSpec::Threshold { barrier, below, above } => {
                if !barrier.is_finite() || !below.is_finite() || !above.is_finite() {
                    return Err(Error::BadParams("non-finite threshold alpha".into()));
                }
            }
            AlphaSpec::RandomSwitch { intensity, levels } => {
                if !intensity.is_finite() || *intensity < 0.0 {
                    return Err(Error::BadParams(format!(
                        "switch intensity must be nonnegative, got {intensity}"
                    )));
                }
                if !levels.0.is_finite() || !levels.1.is_finite() {
                    return Err(Error::BadParams("non-finite switch level".into()));
                }
            }
        }
        Ok(())
    }
}

/// A feedback allocation rule: `(t, x) ↦ π`, money amounts per stock.
pub type FeedbackRule = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// Trading strategy driving a simulation.
#[derive(Clone)]
pub enum Strategy {
    /// The variance-minimizing feedback policy for target `z`.
    Efficient { z: f64 },
    /// All wealth in the stocks, split by fixed weights summing to one.
    ConstantMixPureRisky { weights: Vec<f64> },
    /// α(t) times the portfolio process of a pure-risky base strategy,
    /// remainder in the bond: `π_α(t) = α(t)·π_base(t)`, where `π_base` runs
    /// on the base strategy's own wealth.
    BondRiskyCombination {
        base: Box<Strategy>,
        alpha: AlphaSpec,
    },
    /// Arbitrary feedback rule; admissibility is asserted by the caller, not
    /// verified.
    CustomFeedback { rule: FeedbackRule },
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Efficient { z } => f.debug_struct("Efficient").field("z", z).finish(),
            Strategy::ConstantMixPureRisky { weights } => f
                .debug_struct("ConstantMixPureRisky")
                .field("weights", weights)
                .finish(),
            Strategy::BondRiskyCombination { base, alpha } => f
                .debug_struct("BondRiskyCombination")
                .field("base", base)
                .field("alpha", alpha)
                .finish(),
            Strategy::CustomFeedback { .. } => f.write_str("CustomFeedback { rule: <closure> }"),
        }
    }
}

impl Strategy {
    pub fn efficient(z: f64) -> Self {
        Strategy::Efficient { z }
    }

    /// Constant-mix pure-risky strategy; weights must sum to 1 within 1e-12.
    pub fn constant_mix(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadParams("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::BadParams("non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadParams(format!(
                "pure-risky weights must sum to 1, got {sum}"
            )));
        }
        Ok(Strategy::ConstantMixPureRisky { weights })
    }

    pub fn custom(rule: FeedbackRule) -> Self {
        Strategy::CustomFeedback { rule }
    }

    /// Combine a pure-risky base with a leverage profile. The base must be
    /// pure-risky (constant-mix or a custom rule); nesting combinations or
    /// leveraging the efficient policy is rejected.
    pub fn combination(base: Strategy, alpha: AlphaSpec) -> Result<Self> {
        match base {
            Strategy::ConstantMixPureRisky { .. } | Strategy::CustomFeedback { .. } => {
                Ok(Strategy::BondRiskyCombination {
                    base: Box::new(base),
                    alpha,
                })
            }
            _ => Err(Error::BadParams(
                "combination base must be a pure-risky strategy".into(),
            )),
        }
    }
}

/// Terminal wealth samples plus run provenance.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub terminal_wealth: Vec<f64>,
    /// Count of (path, grid point) pairs where wealth exceeded the cap
    /// `γe^{−∫_t^T r} + 1e-9·γ`. Populated for efficient runs only.
    pub cap_violations: Option<u64>,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.terminal_wealth.len()
    }
}

/// Sample statistics of terminal returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub n_paths: usize,
    pub mean_return: f64,
    pub std_return: f64,
    /// std/√n.
    pub se_mean: f64,
    /// std/√(2(n−1)), the usual large-sample error of a sample deviation.
    pub se_std: f64,
    /// (mean − R_f)/std; `None` when the sample deviation is zero
    /// (a legitimate outcome for risk-free runs).
    pub sharpe: Option<f64>,
}

/// Reduce an ensemble to return-space statistics. `risk_free_return` is
/// `R_f(T) = e^{∫r} − 1`, needed for the Sharpe ratio.
pub fn estimate_terminal_stats(
    ensemble: &PathEnsemble,
    x0: f64,
    risk_free_return: f64,
) -> Result<TerminalStats> {
    let n = ensemble.terminal_wealth.len();
    if n < 2 {
        return Err(Error::DegenerateEnsemble);
    }
    if !x0.is_finite() || x0 <= 0.0 {
        return Err(Error::BadParams(format!(
            "initial wealth must be positive, got {x0}"
        )));
    }
    let nf = n as f64;
    // Welford recurrence: for an ensemble of identical terminals every delta
    // is exactly zero, so a riskless strategy reports a std of exactly 0.0
    // (and an undefined Sharpe) instead of summation noise.
    let mut mean_wealth = 0.0;
    let mut sum_sq = 0.0;
    for (i, x) in ensemble.terminal_wealth.iter().enumerate() {
        let delta = x - mean_wealth;
        mean_wealth += delta / (i + 1) as f64;
        sum_sq += delta * (x - mean_wealth);
    }
    let std_wealth = (sum_sq / (nf - 1.0)).sqrt();
    let mean_return = (mean_wealth - x0) / x0;
    let std_return = std_wealth / x0;
    let sharpe = if std_return > 0.0 {
        Some((mean_return - risk_free_return) / std_return)
    } else {
        None
    };
    Ok(TerminalStats {
        n_paths: n,
        mean_return,
        std_return,
        se_mean: std_return / nf.sqrt(),
        se_std: std_return / (2.0 * (nf - 1.0)).sqrt(),
        sharpe,
    })
}

/// Lognormal closed form for a pure-risky constant mix `w` (Σw = 1):
/// `ln x(T)/x0 ~ N(∫(w'μ − |σ'w|²/2), ∫|σ'w|²)`, hence
///
/// ```text
/// mean_return = e^{∫w'μ} − 1,
/// std_return  = e^{∫w'μ} sqrt(e^{∫|σ'w|²} − 1).
/// ```
pub fn constant_mix_closed_form(market: &ValidatedMarket, weights: &[f64]) -> Result<(f64, f64)> {
    if weights.len() != market.m() {
        return Err(Error::BadDimensions(format!(
            "{} weights for {} stocks",
            weights.len(),
            market.m()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::BadParams(format!(
            "pure-risky weights must sum to 1, got {sum}"
        )));
    }
    let w = DVector::from_column_slice(weights);
    let mut growth_exponent = 0.0; // ∫ w'μ ds
    let mut log_variance = 0.0; // ∫ |σ'w|² ds
    for iv in market.intervals() {
        let dt = iv.t1 - iv.t0;
        growth_exponent += iv.mu.dot(&w) * dt;
        log_variance += (&iv.sigma_t * &w).norm_squared() * dt;
    }
    let growth = growth_exponent.exp();
    Ok((growth - 1.0, growth * log_variance.exp_m1().sqrt()))
}

// ---------------------------------------------------------------------------
// Prepared (per-run, path-independent) coefficient tables
// ---------------------------------------------------------------------------

struct Grid {
    times: Vec<f64>,  // n+1 points
    growth: Vec<f64>, // e^{∫₀^{t_k} r}, n+1 entries
    dt: f64,
    sqrt_dt: f64,
}

impl Grid {
    fn uniform(market: &ValidatedMarket, n_steps: usize) -> Self {
        let horizon = market.horizon();
        let times: Vec<f64> = (0..=n_steps)
            .map(|k| {
                if k == n_steps {
                    horizon
                } else {
                    k as f64 * horizon / n_steps as f64
                }
            })
            .collect();
        let growth = times.iter().map(|t| market.growth_to(*t)).collect();
        let dt = horizon / n_steps as f64;
        Self {
            times,
            growth,
            dt,
            sqrt_dt: dt.sqrt(),
        }
    }
}

/// Per-step tables for a policy whose drift/noise are linear in one scalar
/// state: the efficient policy (state = cap − x) and constant mixes
/// (state = x).
struct LinearTables {
    /// B'π per unit state, times Δt, per step.
    drift: Vec<f64>,
    /// σ'π per unit state, times √Δt: flat `[step × m]`.
    noise: Vec<f64>,
}

enum PreparedPolicy<'a> {
    Efficient {
        tables: LinearTables,
        /// γe^{−∫_{t_k}^T r} at each of the n+1 grid points.
        caps: Vec<f64>,
        /// caps[k] + 1e-9·γ.
        caps_tol: Vec<f64>,
    },
    Mix {
        tables: LinearTables,
    },
    Custom {
        rule: &'a FeedbackRule,
        /// Interval data per step (left endpoint).
        intervals: Vec<&'a Interval>,
    },
    Combination {
        base: Box<PreparedPolicy<'a>>,
        alpha: PreparedAlpha,
    },
}

enum PreparedAlpha {
    /// Per-step α for `Constant` and `Deterministic`.
    Fixed(Vec<f64>),
    Threshold {
        barrier: f64,
        below: f64,
        above: f64,
    },
    Switch {
        /// 1 − e^{−λΔt}.
        prob: f64,
        levels: (f64, f64),
    },
}

fn prepare_policy<'a>(
    market: &'a ValidatedMarket,
    grid: &Grid,
    x0: f64,
    strategy: &'a Strategy,
) -> Result<PreparedPolicy<'a>> {
    let m = market.m();
    let n = grid.times.len() - 1;
    let step_intervals: Result<Vec<&Interval>> = grid.times[..n]
        .iter()
        .map(|t| market.interval_at(*t))
        .collect();
    let step_intervals = step_intervals?;

    match strategy {
        Strategy::Efficient { z } => {
            let g = frontier::gamma(market, x0, *z)?;
            let caps: Vec<f64> = grid
                .times
                .iter()
                .map(|t| g * market.discount_from_horizon(*t))
                .collect();
            let caps_tol = caps.iter().map(|c| c + CAP_TOLERANCE * g).collect();
            let mut drift = Vec::with_capacity(n);
            let mut noise = Vec::with_capacity(n * m);
            for iv in &step_intervals {
                // π = alloc_dir·(cap − x): B'π = θ²·(cap − x), σ'π = alloc_noise·(cap − x).
                drift.push(iv.theta2 * grid.dt);
                noise.extend(iv.alloc_noise.iter().map(|q| q * grid.sqrt_dt));
            }
            Ok(PreparedPolicy::Efficient {
                tables: LinearTables { drift, noise },
                caps,
                caps_tol,
            })
        }
        Strategy::ConstantMixPureRisky { weights } => {
            if weights.len() != m {
                return Err(Error::BadDimensions(format!(
                    "{} weights for {m} stocks",
                    weights.len()
                )));
            }
            let w = DVector::from_column_slice(weights);
            let mut drift = Vec::with_capacity(n);
            let mut noise = Vec::with_capacity(n * m);
            for iv in &step_intervals {
                // π = w·x: B'π = (B'w)·x, σ'π = (σ'w)·x.
                drift.push(iv.excess.dot(&w) * grid.dt);
                noise.extend((&iv.sigma_t * &w).iter().map(|q| q * grid.sqrt_dt));
            }
            Ok(PreparedPolicy::Mix {
                tables: LinearTables { drift, noise },
            })
        }
        Strategy::CustomFeedback { rule } => Ok(PreparedPolicy::Custom {
            rule,
            intervals: step_intervals,
        }),
        Strategy::BondRiskyCombination { base, alpha } => {
            alpha.check(market.horizon())?;
            let base = prepare_policy(market, grid, x0, base)?;
            let prepared_alpha = match alpha {
                AlphaSpec::Constant { value } => {
                    PreparedAlpha::Fixed(vec![*value; n])
                }
                AlphaSpec::Deterministic { curve } => {
                    let values: Result<Vec<f64>> = grid.times[..n]
                        .iter()
                        .map(|t| curve.value_at(*t).map(|v| *v))
                        .collect();
                    PreparedAlpha::Fixed(values?)
                }
                AlphaSpec::Threshold {
                    barrier,
                    below,
                    above,
                } => PreparedAlpha::Threshold {
                    barrier: *barrier,
                    below: *below,
                    above: *above,
                },
                AlphaSpec::RandomSwitch { intensity, levels } => PreparedAlpha::Switch {
                    prob: -(-intensity * grid.dt).exp_m1(),
                    levels: *levels,
                },
            };
            Ok(PreparedPolicy::Combination {
                base: Box::new(base),
                alpha: prepared_alpha,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Path kernels
// ---------------------------------------------------------------------------

struct EulerRun<'a> {
    grid: Grid,
    policy: PreparedPolicy<'a>,
    x0: f64,
    m: usize,
    seed: u64,
}

impl EulerRun<'_> {
    /// Discounted increment of the base (non-combination) policy at step `k`
    /// given undiscounted wealth `x`; returns the *undiscounted* bracket
    /// `B'πΔt + (σ'π)'√Δt·Z` which the caller discounts.
    #[inline]
    fn bracket(
        &self,
        policy: &PreparedPolicy<'_>,
        k: usize,
        x: f64,
        path: u64,
    ) -> Result<f64> {
        let m = self.m;
        match policy {
            PreparedPolicy::Efficient { tables, caps, .. } => {
                let state = caps[k] - x;
                let mut acc = tables.drift[k];
                for j in 0..m {
                    acc += tables.noise[k * m + j]
                        * rng::draw_normal(self.seed, path, k as u64, j as u64);
                }
                Ok(state * acc)
            }
            PreparedPolicy::Mix { tables } => {
                let mut acc = tables.drift[k];
                for j in 0..m {
                    acc += tables.noise[k * m + j]
                        * rng::draw_normal(self.seed, path, k as u64, j as u64);
                }
                Ok(x * acc)
            }
            PreparedPolicy::Custom { rule, intervals } => {
                let pi = rule(self.grid.times[k], x);
                if pi.len() != m {
                    return Err(Error::BadDimensions(format!(
                        "feedback rule returned {} allocations for {m} stocks",
                        pi.len()
                    )));
                }
                let iv = intervals[k];
                let pi = DVector::from_vec(pi);
                if pi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalBlowup { path, step: k });
                }
                let mut acc = iv.excess.dot(&pi) * self.grid.dt;
                let loadings = &iv.sigma_t * &pi;
                for j in 0..m {
                    acc += loadings[j]
                        * self.grid.sqrt_dt
                        * rng::draw_normal(self.seed, path, k as u64, j as u64);
                }
                Ok(acc)
            }
            PreparedPolicy::Combination { .. } => {
                unreachable!("combinations are expanded by the path kernel")
            }
        }
    }

    fn check(&self, x: f64, path: u64, step: usize) -> Result<()> {
        if !x.is_finite() || x.abs() > BLOWUP_FACTOR * self.x0 {
            return Err(Error::NumericalBlowup { path, step });
        }
        Ok(())
    }

    /// Run one path; returns terminal wealth and cap-violation count.
    fn path(&self, path: u64) -> Result<(f64, u64)> {
        let n = self.grid.times.len() - 1;
        match &self.policy {
            PreparedPolicy::Combination { base, alpha } => {
                let mut disc_base = self.x0; // discounted base wealth
                let mut disc_comb = self.x0; // discounted combined wealth
                let mut regime = false;
                for k in 0..n {
                    let growth = self.grid.growth[k];
                    let x_base = disc_base * growth;
                    let x_comb = disc_comb * growth;
                    let a = match alpha {
                        PreparedAlpha::Fixed(values) => values[k],
                        PreparedAlpha::Threshold {
                            barrier,
                            below,
                            above,
                        } => {
                            if x_comb < *barrier {
                                *below
                            } else {
                                *above
                            }
                        }
                        PreparedAlpha::Switch { levels, .. } => {
                            if regime {
                                levels.1
                            } else {
                                levels.0
                            }
                        }
                    };
                    let bracket = self.bracket(base, k, x_base, path)?;
                    let disc = 1.0 / growth;
                    disc_base += disc * bracket;
                    disc_comb += disc * a * bracket;
                    if let PreparedAlpha::Switch { prob, .. } = alpha {
                        let u =
                            rng::draw_uniform(self.seed, path, k as u64, self.m as u64);
                        if u < *prob {
                            regime = !regime;
                        }
                    }
                    let next_growth = self.grid.growth[k + 1];
                    self.check(disc_base * next_growth, path, k + 1)?;
                    self.check(disc_comb * next_growth, path, k + 1)?;
                }
                Ok((disc_comb * self.grid.growth[n], 0))
            }
            policy => {
                let mut disc_wealth = self.x0;
                let mut violations = 0u64;
                if let PreparedPolicy::Efficient { caps_tol, .. } = policy {
                    if self.x0 > caps_tol[0] {
                        violations += 1;
                    }
                }
                for k in 0..n {
                    let growth = self.grid.growth[k];
                    let x = disc_wealth * growth;
                    let bracket = self.bracket(policy, k, x, path)?;
                    // Same expression as the combination kernel so that an
                    // α ≡ 1 wrapper reproduces these paths bit for bit.
                    let disc = 1.0 / growth;
                    disc_wealth += disc * bracket;
                    let x_next = disc_wealth * self.grid.growth[k + 1];
                    self.check(x_next, path, k + 1)?;
                    if let PreparedPolicy::Efficient { caps_tol, .. } = policy {
                        if x_next > caps_tol[k + 1] {
                            violations += 1;
                        }
                    }
                }
                Ok((disc_wealth * self.grid.growth[n], violations))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parallel driver
// ---------------------------------------------------------------------------

/// Map each path index through `f`, preserving path order in the output and
/// picking the lowest-indexed error deterministically. With the `parallel`
/// feature the map runs on the rayon pool; outputs are identical either way
/// because every path's randomness is a pure function of its index.
fn run_paths<F>(n_paths: usize, f: F) -> Result<(Vec<f64>, u64)>
where
    F: Fn(u64) -> Result<(f64, u64)> + Sync,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(f64, u64)>> = {
        use rayon::prelude::*;
        (0..n_paths as u64).into_par_iter().map(&f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(f64, u64)>> = (0..n_paths as u64).map(&f).collect();

    let mut terminal = Vec::with_capacity(n_paths);
    let mut violations = 0u64;
    for r in results {
        let (x, v) = r?;
        terminal.push(x);
        violations += v;
    }
    Ok((terminal, violations))
}

/// Simulate terminal wealth under any strategy.
///
/// The exact scheme applies only to `Strategy::Efficient`; anything else
/// under `Scheme::Exact` is a `SchemeMismatch`.
pub fn simulate_wealth(
    market: &ValidatedMarket,
    x0: f64,
    strategy: &Strategy,
    cfg: &SimConfig,
) -> Result<PathEnsemble> {
    cfg.check()?;
    if !x0.is_finite() || x0 <= 0.0 {
        return Err(Error::BadParams(format!(
            "initial wealth must be positive, got {x0}"
        )));
    }
    match (cfg.scheme, strategy) {
        (Scheme::Exact, Strategy::Efficient { z }) => {
            exact_efficient_paths(market, x0, *z, cfg)
        }
        (Scheme::Exact, _) => Err(Error::SchemeMismatch),
        (Scheme::Euler, _) => {
            let grid = Grid::uniform(market, cfg.n_steps);
            let policy = prepare_policy(market, &grid, x0, strategy)?;
            let is_efficient = matches!(policy, PreparedPolicy::Efficient { .. });
            let run = EulerRun {
                grid,
                policy,
                x0,
                m: market.m(),
                seed: cfg.seed,
            };
            let (terminal_wealth, violations) = run_paths(cfg.n_paths, |p| run.path(p))?;
            Ok(PathEnsemble {
                terminal_wealth,
                cap_violations: is_efficient.then_some(violations),
                n_steps: cfg.n_steps,
                seed: cfg.seed,
                scheme: Scheme::Euler,
            })
        }
    }
}

struct ExactRun {
    /// Per step: ∫(r − 3/2|θ|²) ds.
    log_drift: Vec<f64>,
    /// Per step: sqrt(∫|θ|² ds).
    vol: Vec<f64>,
    /// γe^{−∫_{t_k}^T r} per grid point.
    caps: Vec<f64>,
    y0: f64,
    cap_tol: f64,
    x0: f64,
    seed: u64,
}

impl ExactRun {
    fn new(market: &ValidatedMarket, x0: f64, z: f64, times: &[f64], seed: u64) -> Result<Self> {
        let g = frontier::gamma(market, x0, z)?;
        let ints = market.integrals();
        let total_rate = ints.total_rate();
        let total_theta2 = ints.total_theta2();
        let y0 = (x0 - z * (-total_rate).exp()) / (1.0 - (-total_theta2).exp());
        let mut log_drift = Vec::with_capacity(times.len() - 1);
        let mut vol = Vec::with_capacity(times.len() - 1);
        for w in times.windows(2) {
            let rate = ints.rate_to(w[1]) - ints.rate_to(w[0]);
            let theta2 = ints.theta2_to(w[1]) - ints.theta2_to(w[0]);
            log_drift.push(rate - 1.5 * theta2);
            vol.push(theta2.sqrt());
        }
        let caps = times
            .iter()
            .map(|t| g * market.discount_from_horizon(*t))
            .collect();
        Ok(Self {
            log_drift,
            vol,
            caps,
            y0,
            cap_tol: CAP_TOLERANCE * g,
            x0,
            seed,
        })
    }

    #[inline]
    fn step_y(&self, y: f64, k: usize, path: u64) -> f64 {
        y * (self.log_drift[k] - self.vol[k] * rng::draw_normal(self.seed, path, k as u64, 0))
            .exp()
    }

    fn path(&self, path: u64) -> Result<(f64, u64)> {
        let n = self.log_drift.len();
        let mut y = self.y0;
        let mut violations = (y > self.cap_tol) as u64;
        for k in 0..n {
            y = self.step_y(y, k, path);
            let x = y + self.caps[k + 1];
            if !x.is_finite() || x.abs() > BLOWUP_FACTOR * self.x0 {
                return Err(Error::NumericalBlowup { path, step: k + 1 });
            }
            if y > self.cap_tol {
                violations += 1;
            }
        }
        Ok((y + self.caps[n], violations))
    }
}

/// Sample the efficient strategy's wealth from its closed-form law.
pub fn exact_efficient_paths(
    market: &ValidatedMarket,
    x0: f64,
    z: f64,
    cfg: &SimConfig,
) -> Result<PathEnsemble> {
    cfg.check()?;
    let grid = Grid::uniform(market, cfg.n_steps);
    let run = ExactRun::new(market, x0, z, &grid.times, cfg.seed)?;
    let (terminal_wealth, violations) = run_paths(cfg.n_paths, |p| run.path(p))?;
    Ok(PathEnsemble {
        terminal_wealth,
        cap_violations: Some(violations),
        n_steps: cfg.n_steps,
        seed: cfg.seed,
        scheme: Scheme::Exact,
    })
}

/// Per-time path counts from the exact scheme, for statistical checks of the
/// pathwise theorems. At each requested time the counters record how many
/// paths (a) exceeded the cap beyond tolerance, (b) sat strictly below it,
/// (c) held a risky allocation of magnitude above `risky_eps`, and (d) held
/// a bond allocation of magnitude above `bond_eps`.
#[derive(Debug, Clone)]
pub struct GridObservations {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub cap_exceed: Vec<u64>,
    pub strictly_below_cap: Vec<u64>,
    pub risky_nonzero: Vec<u64>,
    pub bond_nonzero: Vec<u64>,
}

pub fn exact_grid_observations(
    market: &ValidatedMarket,
    x0: f64,
    z: f64,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    risky_eps: f64,
    bond_eps: f64,
) -> Result<GridObservations> {
    if n_paths == 0 {
        return Err(Error::BadParams("n_paths must be at least 1".into()));
    }
    if times.is_empty() {
        return Err(Error::BadParams("need at least one observation time".into()));
    }
    let horizon = market.horizon();
    for t in times {
        if !t.is_finite() || *t < 0.0 || *t > horizon {
            return Err(Error::OutOfHorizon {
                t: *t,
                horizon,
            });
        }
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParams(
            "observation times must be strictly increasing".into(),
        ));
    }

    // Build the stepping grid 0 → times[0] → … → times[last].
    let mut grid_times = Vec::with_capacity(times.len() + 1);
    let observed_from = if times[0] == 0.0 { 0 } else { 1 };
    if times[0] != 0.0 {
        grid_times.push(0.0);
    }
    grid_times.extend_from_slice(times);

    let run = ExactRun::new(market, x0, z, &grid_times, seed)?;

    // Norm of the allocation direction and the bond coefficient per time.
    let mut dir_norm = Vec::with_capacity(times.len());
    let mut dir_sum = Vec::with_capacity(times.len());
    for t in times {
        let iv = market.interval_at(*t)?;
        dir_norm.push(iv.alloc_dir.norm());
        dir_sum.push(iv.alloc_dir_sum);
    }

    let n_times = times.len();
    #[derive(Clone)]
    struct Acc {
        cap_exceed: Vec<u64>,
        strictly_below: Vec<u64>,
        risky: Vec<u64>,
        bond: Vec<u64>,
        nonfinite: u64,
    }
    let zero = || Acc {
        cap_exceed: vec![0; n_times],
        strictly_below: vec![0; n_times],
        risky: vec![0; n_times],
        bond: vec![0; n_times],
        nonfinite: 0,
    };
    let observe = |acc: &mut Acc, path: u64| {
        let mut y = run.y0;
        for k in 0..grid_times.len() - 1 {
            y = run.step_y(y, k, path);
            let j = (k + 1).wrapping_sub(observed_from);
            if j >= n_times {
                continue;
            }
            if !y.is_finite() {
                acc.nonfinite += 1;
                return;
            }
            let cap = run.caps[k + 1];
            if y > run.cap_tol {
                acc.cap_exceed[j] += 1;
            }
            if y < 0.0 {
                acc.strictly_below[j] += 1;
            }
            if dir_norm[j] * y.abs() > risky_eps {
                acc.risky[j] += 1;
            }
            if ((1.0 + dir_sum[j]) * y + cap).abs() > bond_eps {
                acc.bond[j] += 1;
            }
        }
        // Time 0 observation, when requested (y(0) is deterministic).
        if observed_from == 0 {
            let y = run.y0;
            let cap = run.caps[0];
            if y > run.cap_tol {
                acc.cap_exceed[0] += 1;
            }
            if y < 0.0 {
                acc.strictly_below[0] += 1;
            }
            if dir_norm[0] * y.abs() > risky_eps {
                acc.risky[0] += 1;
            }
            if ((1.0 + dir_sum[0]) * y + cap).abs() > bond_eps {
                acc.bond[0] += 1;
            }
        }
    };
    #[cfg_attr(not(feature = "parallel"), allow(unused_variables))]
    let merge = |mut a: Acc, b: Acc| {
        for (x, y) in a.cap_exceed.iter_mut().zip(&b.cap_exceed) {
            *x += y;
        }
        for (x, y) in a.strictly_below.iter_mut().zip(&b.strictly_below) {
            *x += y;
        }
        for (x, y) in a.risky.iter_mut().zip(&b.risky) {
            *x += y;
        }
        for (x, y) in a.bond.iter_mut().zip(&b.bond) {
            *x += y;
        }
        a.nonfinite += b.nonfinite;
        a
    };

    #[cfg(feature = "parallel")]
    let acc = {
        use rayon::prelude::*;
        (0..n_paths as u64)
            .into_par_iter()
            .fold(zero, |mut acc, p| {
                observe(&mut acc, p);
                acc
            })
            .reduce(zero, merge)
    };
    #[cfg(not(feature = "parallel"))]
    let acc = {
        let mut acc = zero();
        for p in 0..n_paths as u64 {
            observe(&mut acc, p);
        }
        acc
    };

    if acc.nonfinite > 0 {
        // Locate the first offender for the diagnostic (cold path).
        for p in 0..n_paths as u64 {
            let mut y = run.y0;
            for k in 0..grid_times.len() - 1 {
                y = run.step_y(y, k, p);
                if !y.is_finite() {
                    return Err(Error::NumericalBlowup { path: p, step: k + 1 });
                }
            }
        }
        return Err(Error::NumericalBlowup { path: 0, step: 0 });
    }

    Ok(GridObservations {
        times: times.to_vec(),
        n_paths,
        cap_exceed: acc.cap_exceed,
        strictly_below_cap: acc.strictly_below,
        risky_nonzero: acc.risky,
        bond_nonzero: acc.bond,
    })
}
