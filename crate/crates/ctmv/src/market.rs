//! Market model: one bond, `m` stocks, piecewise-constant coefficients.
//!
//! The wealth equation driving everything downstream is
//!
//! ```text
//! dx(t) = [r(t) x(t) + B(t)'π(t)] dt + π(t)'σ(t) dW(t),
//! B(t)  = (μ₁(t) − r(t), …, μ_m(t) − r(t))',
//! ```
//!
//! with the nondegeneracy requirement σ(t)σ(t)' ⪰ δI. Validation front-loads
//! every per-interval linear solve (risk premium, allocation direction) and
//! the prefix sums behind exact integral queries, so the hot simulation loops
//! never touch a matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::ParameterCurve;
use crate::error::{Error, Result};

/// Default floor for the smallest eigenvalue of σσ'.
pub const DEFAULT_DELTA: f64 = 1e-8;

/// Plain-data market description, the on-disk JSON format.
///
/// `rate[k]`, `mu[k]`, and `sigma[k]` apply on `[breakpoints[k], breakpoints[k+1])`.
/// `sigma[k]` is row-major: `sigma[k][i][j]` is the loading of stock `i` on
/// the `j`-th Brownian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub horizon: f64,
    pub breakpoints: Vec<f64>,
    pub rate: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl MarketModel {
    /// Single-stock market with constant coefficients on `[0, horizon]`.
    pub fn black_scholes(rate: f64, mu: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            horizon,
            breakpoints: vec![0.0, horizon],
            rate: vec![rate],
            mu: vec![vec![mu]],
            sigma: vec![vec![vec![sigma]]],
            delta: None,
        }
    }

    /// Constant-coefficient market with `m` stocks on `[0, horizon]`.
    pub fn constant(rate: f64, mu: Vec<f64>, sigma: Vec<Vec<f64>>, horizon: f64) -> Self {
        Self {
            horizon,
            breakpoints: vec![0.0, horizon],
            rate: vec![rate],
            mu: vec![mu],
            sigma: vec![sigma],
            delta: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadParams(format!("market JSON: {e}")))
    }

    /// Serialization uses shortest round-trip float formatting, so
    /// `from_json(to_json(m))` reproduces every coefficient bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("market model serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadParams(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::BadParams(format!("writing {}: {e}", path.display())))
    }

    /// Validate, precomputing everything the closed forms and simulators need.
    pub fn validate(&self) -> Result<ValidatedMarket> {
        ValidatedMarket::new(self)
    }
}

/// What can be integrated exactly over sub-intervals of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralKind {
    /// ∫ r(s) ds
    Rate,
    /// ∫ |θ(s)|² ds
    ThetaSquared,
    /// ∫ Σᵢ |μᵢ(s) − r(s)| ds
    ExcessAbs,
}

/// Prefix sums of the opportunity-set integrands at the breakpoints.
///
/// Because the integrands are piecewise-constant, every query
/// `∫_{t0}^{t1}` is an exact interval sum — no quadrature error.
#[derive(Debug, Clone)]
pub struct OpportunityIntegrals {
    breakpoints: Vec<f64>,
    rate_density: Vec<f64>,
    theta2_density: Vec<f64>,
    excess_density: Vec<f64>,
    cum_rate: Vec<f64>,
    cum_theta2: Vec<f64>,
    cum_excess: Vec<f64>,
}

impl OpportunityIntegrals {
    fn new(
        breakpoints: Vec<f64>,
        rate_density: Vec<f64>,
        theta2_density: Vec<f64>,
        excess_density: Vec<f64>,
    ) -> Self {
        let cum = |density: &[f64]| {
            let mut acc = 0.0;
            let mut out = vec![0.0; breakpoints.len()];
            for (k, d) in density.iter().enumerate() {
                acc += d * (breakpoints[k + 1] - breakpoints[k]);
                out[k + 1] = acc;
            }
            out
        };
        let cum_rate = cum(&rate_density);
        let cum_theta2 = cum(&theta2_density);
        let cum_excess = cum(&excess_density);
        Self {
            breakpoints,
            rate_density,
            theta2_density,
            excess_density,
            cum_rate,
            cum_theta2,
            cum_excess,
        }
    }

    fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    fn index_of(&self, t: f64) -> usize {
        if t >= self.horizon() {
            return self.breakpoints.len() - 2;
        }
        self.breakpoints.partition_point(|b| *b <= t) - 1
    }

    fn cum_at(&self, cum: &[f64], density: &[f64], t: f64) -> f64 {
        let k = self.index_of(t);
        cum[k] + density[k] * (t - self.breakpoints[k])
    }

    fn check_bounds(&self, t0: f64, t1: f64) -> Result<()> {
        let horizon = self.horizon();
        for t in [t0, t1] {
            if !t.is_finite() || t < 0.0 || t > horizon {
                return Err(Error::OutOfHorizon { t, horizon });
            }
        }
        if t0 > t1 {
            return Err(Error::ReversedInterval { t0, t1 });
        }
        Ok(())
    }

    pub fn integrate(&self, kind: IntegralKind, t0: f64, t1: f64) -> Result<f64> {
        self.check_bounds(t0, t1)?;
        let (cum, density) = match kind {
            IntegralKind::Rate => (&self.cum_rate, &self.rate_density),
            IntegralKind::ThetaSquared => (&self.cum_theta2, &self.theta2_density),
            IntegralKind::ExcessAbs => (&self.cum_excess, &self.excess_density),
        };
        Ok(self.cum_at(cum, density, t1) - self.cum_at(cum, density, t0))
    }

    /// ∫₀ᵀ r ds without bounds checking.
    pub fn total_rate(&self) -> f64 {
        *self.cum_rate.last().unwrap()
    }

    /// ∫₀ᵀ |θ|² ds without bounds checking.
    pub fn total_theta2(&self) -> f64 {
        *self.cum_theta2.last().unwrap()
    }

    /// Σᵢ ∫₀ᵀ |μᵢ − r| ds — zero iff the market cannot beat the bond.
    pub fn excess_abs(&self) -> f64 {
        *self.cum_excess.last().unwrap()
    }

    /// ∫₀ᵗ r ds for `t` already known to lie in `[0, T]`.
    pub(crate) fn rate_to(&self, t: f64) -> f64 {
        self.cum_at(&self.cum_rate, &self.rate_density, t)
    }

    pub(crate) fn theta2_to(&self, t: f64) -> f64 {
        self.cum_at(&self.cum_theta2, &self.theta2_density, t)
    }
}

/// Per-interval data with every linear solve done once up front.
#[derive(Debug, Clone)]
pub struct Interval {
    pub t0: f64,
    pub t1: f64,
    pub rate: f64,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// σ' cached for feedback rules that need σ'π.
    pub sigma_t: DMatrix<f64>,
    /// Excess appreciation B = μ − r·1.
    pub excess: DVector<f64>,
    /// Risk premium column θ' solving σθ' = B (θ = B'(σ')⁻¹).
    pub theta: DVector<f64>,
    /// |θ|², equal to B'(σσ')⁻¹B.
    pub theta2: f64,
    /// Allocation direction (σσ')⁻¹B of the efficient feedback rule.
    pub alloc_dir: DVector<f64>,
    /// 1'(σσ')⁻¹B — turns the scalar state of the efficient policy into its
    /// total risky holding.
    pub alloc_dir_sum: f64,
    /// σ'(σσ')⁻¹B, the diffusion loading of the efficient policy (norm |θ|).
    pub alloc_noise: DVector<f64>,
    /// Smallest eigenvalue of σσ' on this interval.
    pub gram_min_eigenvalue: f64,
}

impl Interval {
    /// Whether any stock's appreciation differs from the interest rate here.
    pub fn has_excess(&self) -> bool {
        self.excess.iter().any(|b| *b != 0.0)
    }
}

/// A market that passed validation: positive horizon, coherent shapes,
/// positive rates and appreciation rates, nondegenerate volatility, and at
/// least one stock whose appreciation differs from the interest rate
/// somewhere (otherwise no target above the bond is attainable).
#[derive(Debug, Clone)]
pub struct ValidatedMarket {
    model: MarketModel,
    m: usize,
    delta: f64,
    intervals: Vec<Interval>,
    integrals: OpportunityIntegrals,
    grid: ParameterCurve<usize>,
}

impl ValidatedMarket {
    fn new(model: &MarketModel) -> Result<Self> {
        if !model.horizon.is_finite() || model.horizon <= 0.0 {
            return Err(Error::BadHorizon(model.horizon));
        }
        let n = model.breakpoints.len().checked_sub(1).ok_or_else(|| {
            Error::BadBreakpoints("need at least two breakpoints".into())
        })?;
        // Curve validation covers monotonicity and the 0 start.
        let grid = ParameterCurve::new(model.breakpoints.clone(), (0..n).collect())?;
        if grid.end() != model.horizon {
            return Err(Error::BadBreakpoints(format!(
                "last breakpoint {} must equal the horizon {}",
                grid.end(),
                model.horizon
            )));
        }
        if model.rate.len() != n || model.mu.len() != n || model.sigma.len() != n {
            return Err(Error::BadDimensions(format!(
                "{} intervals but {} rates, {} mu rows, {} sigma blocks",
                n,
                model.rate.len(),
                model.mu.len(),
                model.sigma.len()
            )));
        }
        let m = model.mu[0].len();
        if m == 0 {
            return Err(Error::BadDimensions("need at least one stock".into()));
        }
        let delta = model.delta.unwrap_or(DEFAULT_DELTA);
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::BadParams(format!(
                "nondegeneracy floor must be positive, got {delta}"
            )));
        }

        let mut intervals = Vec::with_capacity(n);
        for k in 0..n {
            let (t0, t1) = (model.breakpoints[k], model.breakpoints[k + 1]);
            if model.mu[k].len() != m {
                return Err(Error::BadDimensions(format!(
                    "interval {k}: expected {m} appreciation rates, got {}",
                    model.mu[k].len()
                )));
            }
            if model.sigma[k].len() != m || model.sigma[k].iter().any(|row| row.len() != m) {
                return Err(Error::BadDimensions(format!(
                    "interval {k}: sigma must be {m}x{m}"
                )));
            }
            let rate = model.rate[k];
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::BadParams(format!(
                    "interval {k}: interest rate must be positive, got {rate}"
                )));
            }
            if model.mu[k].iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::BadParams(format!(
                    "interval {k}: appreciation rates must be positive"
                )));
            }
            if model.sigma[k]
                .iter()
                .any(|row| row.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::BadParams(format!(
                    "interval {k}: non-finite volatility entry"
                )));
            }

            let mu = DVector::from_column_slice(&model.mu[k]);
            let sigma = DMatrix::from_fn(m, m, |i, j| model.sigma[k][i][j]);
            let gram = &sigma * sigma.transpose();
            let gram_min_eigenvalue = nalgebra::SymmetricEigen::new(gram.clone())
                .eigenvalues
                .min();
            if !(gram_min_eigenvalue >= delta) {
                return Err(Error::Degenerate {
                    t0,
                    t1,
                    eigenvalue: gram_min_eigenvalue,
                    floor: delta,
                });
            }

            let excess = mu.map(|v| v - rate);
            let sigma_lu = sigma.clone().lu();
            let theta = sigma_lu.solve(&excess).ok_or(Error::Degenerate {
                t0,
                t1,
                eigenvalue: gram_min_eigenvalue,
                floor: delta,
            })?;
            let alloc_dir = gram.clone().lu().solve(&excess).ok_or(Error::Degenerate {
                t0,
                t1,
                eigenvalue: gram_min_eigenvalue,
                floor: delta,
            })?;
            let theta2 = theta.norm_squared();
            let alloc_noise = sigma.transpose() * &alloc_dir;

            intervals.push(Interval {
                t0,
                t1,
                rate,
                mu,
                sigma_t: sigma.transpose(),
                sigma,
                alloc_dir_sum: alloc_dir.sum(),
                alloc_noise,
                theta,
                theta2,
                alloc_dir,
                excess,
                gram_min_eigenvalue,
            });
        }

        let integrals = OpportunityIntegrals::new(
            model.breakpoints.clone(),
            intervals.iter().map(|iv| iv.rate).collect(),
            intervals.iter().map(|iv| iv.theta2).collect(),
            intervals
                .iter()
                .map(|iv| iv.excess.iter().map(|b| b.abs()).sum())
                .collect(),
        );
        if integrals.excess_abs() == 0.0 {
            return Err(Error::Infeasible);
        }

        Ok(Self {
            model: model.clone(),
            m,
            delta,
            intervals,
            integrals,
            grid,
        })
    }

    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    /// Number of stocks.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> f64 {
        self.model.horizon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval_at(&self, t: f64) -> Result<&Interval> {
        Ok(&self.intervals[*self.grid.value_at(t)?])
    }

    pub fn integrals(&self) -> &OpportunityIntegrals {
        &self.integrals
    }

    /// Risk premium θ(t)' as a column vector: the solution of σ(t)θ' = B(t).
    pub fn risk_premium(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.interval_at(t)?.theta.clone())
    }

    /// Exact ∫_{t0}^{t1} of the chosen integrand.
    pub fn integrate(&self, kind: IntegralKind, t0: f64, t1: f64) -> Result<f64> {
        self.integrals.integrate(kind, t0, t1)
    }

    /// e^{∫₀ᵀ r ds} · x0 — terminal wealth of the bond-only policy.
    pub fn risk_free_payoff(&self, x0: f64) -> f64 {
        x0 * self.integrals.total_rate().exp()
    }

    /// R_f(T) = e^{∫₀ᵀ r ds} − 1.
    pub fn risk_free_return(&self) -> f64 {
        self.integrals.total_rate().exp() - 1.0
    }

    /// e^{−∫_t^T r ds}, the discount from the horizon back to `t`
    /// (`t` must already lie in `[0, T]`).
    pub(crate) fn discount_from_horizon(&self, t: f64) -> f64 {
        (self.integrals.rate_to(t) - self.integrals.total_rate()).exp()
    }

    /// e^{∫₀ᵗ r ds} (`t` must already lie in `[0, T]`).
    pub(crate) fn growth_to(&self, t: f64) -> f64 {
        self.integrals.rate_to(t).exp()
    }
}
