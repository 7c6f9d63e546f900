//! Kelly-growth market impact.
//!
//! A liquidity provider that maximises log growth, with capital charged as
//! `W = k sqrt(Q)`, quotes a price concession `dP` that grows as `sqrt(Q)` for
//! Brownian prices. When the holding time scales with size, `T = k_hat Q`,
//! and the price is driven by fractional noise, the optimal concession is
//!
//! ```text
//! dP = 2H k_hat^(2H-1) sigma^2 / k * Q^(2H - 1/2)
//! ```
//!
//! which collapses to the square-root law at `H = 1/2, k_hat = 1`. The growth
//! functions are second-order expansions; cubic and higher terms are dropped.

use crate::csv::CsvBuffer;
use crate::error::{require_hurst, require_positive, Error, Result};
use crate::numerics::ols_slope;
use crate::optimize::{bracket_by_derivative, golden_section_max, DEFAULT_MAX_ITER, DEFAULT_REL_TOL};
use crate::stochastic_paths::{simulate_fou_with_driver, FouParams, SamplePath};

/// Structural constants of a diversified liquidity provider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthModel {
    /// `k` in `W = k sqrt(Q)`.
    pub capital_scale_k: f64,
    /// `k_hat` in `T = k_hat Q`.
    pub time_per_size_khat: f64,
    pub sigma: f64,
    pub hurst: f64,
}

impl GrowthModel {
    pub fn new(capital_scale_k: f64, time_per_size_khat: f64, sigma: f64, hurst: f64) -> Result<Self> {
        let model = Self {
            capital_scale_k,
            time_per_size_khat,
            sigma,
            hurst,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("capital_scale_k", self.capital_scale_k)?;
        require_positive("time_per_size_khat", self.time_per_size_khat)?;
        require_positive("sigma", self.sigma)?;
        require_hurst(self.hurst)
    }

    /// Exponent of the optimal impact curve, `2H - 1/2`.
    pub fn impact_exponent(&self) -> f64 {
        2.0 * self.hurst - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactPoint {
    pub size_q: f64,
    pub delta_p: f64,
}

fn require_size(q: f64) -> Result<()> {
    require_positive("q", q)
}

/// `g(Q) = Q dP / W - Q^2 sigma^2 / (2 W^2)`.
pub fn growth_rate(q: f64, delta_p: f64, wealth: f64, sigma: f64) -> Result<f64> {
    require_positive("wealth", wealth)?;
    require_positive("sigma", sigma)?;
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::domain(format!("q must be finite and >= 0, got {q}")));
    }
    Ok(q * delta_p / wealth - q * q * sigma * sigma / (2.0 * wealth * wealth))
}

/// Growth with the capital constraint substituted:
/// `g(Q) = (dP / k) sqrt(Q) - sigma^2 Q / (2 k^2)`.
pub fn growth_rate_constrained(q: f64, delta_p: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    let k = model.capital_scale_k;
    Ok(delta_p / k * q.sqrt() - model.sigma * model.sigma * q / (2.0 * k * k))
}

/// Square-root impact `dP = (sigma^2 / k) sqrt(Q)`.
pub fn optimal_impact_sqrt(q: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    Ok(model.sigma * model.sigma / model.capital_scale_k * q.sqrt())
}

/// Growth per unit holding time under fractional noise with `T = k_hat Q`:
/// `(dP / k) sqrt(Q) - sigma^2 / (2 k^2) k_hat^(2H-1) Q^(2H)`.
pub fn growth_per_time_fou(q: f64, delta_p: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    Ok(growth_per_time_unchecked(q, delta_p, model))
}

fn growth_per_time_unchecked(q: f64, delta_p: f64, m: &GrowthModel) -> f64 {
    let k = m.capital_scale_k;
    let h2 = 2.0 * m.hurst;
    delta_p / k * q.sqrt()
        - m.sigma * m.sigma / (2.0 * k * k) * m.time_per_size_khat.powf(h2 - 1.0) * q.powf(h2)
}

/// `d/dQ` of [`growth_per_time_fou`].
pub fn growth_per_time_fou_derivative(q: f64, delta_p: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    Ok(growth_per_time_derivative_unchecked(q, delta_p, model))
}

fn growth_per_time_derivative_unchecked(q: f64, delta_p: f64, m: &GrowthModel) -> f64 {
    let k = m.capital_scale_k;
    let h2 = 2.0 * m.hurst;
    delta_p / (2.0 * k * q.sqrt())
        - h2 * m.sigma * m.sigma / (2.0 * k * k) * m.time_per_size_khat.powf(h2 - 1.0) * q.powf(h2 - 1.0)
}

/// `dP = 2H k_hat^(2H-1) sigma^2 / k * Q^(2H - 1/2)`.
///
/// At `H = 1/4` the exponent is zero and the curve is flat.
pub fn optimal_impact_fou(q: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    let h2 = 2.0 * model.hurst;
    Ok(h2 * model.time_per_size_khat.powf(h2 - 1.0) * model.sigma * model.sigma
        / model.capital_scale_k
        * q.powf(model.impact_exponent()))
}

/// Position size that maximises [`growth_per_time_fou`] for a quoted `dP`.
///
/// The bracket is grown by doubling from `Q = 1` until the derivative changes
/// sign, then refined by golden-section search. For `H <= 1/4` the stationary
/// point is a minimum (or absent) and a [`Error::BracketFailure`] results.
pub fn optimal_size_numeric(delta_p: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_positive("delta_p", delta_p)?;
    let (lo, hi) = bracket_by_derivative(|q| growth_per_time_derivative_unchecked(q, delta_p, model), 1.0)?;
    let best = golden_section_max(
        |q| growth_per_time_unchecked(q, delta_p, model),
        lo,
        hi,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_ITER,
    );
    Ok(best.x)
}

/// Least-squares slope of `ln dP` on `ln Q`.
pub fn impact_exponent(points: &[ImpactPoint]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "impact exponent needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.size_q > 0.0 && p.delta_p > 0.0)) {
        return Err(Error::domain(format!(
            "impact points must be positive, got ({}, {})",
            p.size_q, p.delta_p
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.size_q.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delta_p.ln()).collect();
    ols_slope(&xs, &ys)
}

/// The optimal impact curve sampled at `sizes`.
pub fn impact_curve(sizes: &[f64], model: &GrowthModel) -> Result<Vec<ImpactPoint>> {
    sizes
        .iter()
        .map(|&q| {
            Ok(ImpactPoint {
                size_q: q,
                delta_p: optimal_impact_fou(q, model)?,
            })
        })
        .collect()
}

/// `q,delta_p,exponent_model` CSV.
pub fn impact_curve_csv(points: &[ImpactPoint], model: &GrowthModel) -> String {
    let mut buf = CsvBuffer::with_header(&["q", "delta_p", "exponent_model"]);
    for p in points {
        buf.push_floats(&[p.size_q, p.delta_p, model.impact_exponent()]);
    }
    buf.into_string()
}

/// Optimal Kelly leverage on the OU edge, `f = kappa (p - K) / sigma^2`.
pub fn kelly_fraction_ou(p: f64, params: &FouParams) -> Result<f64> {
    params.validate()?;
    Ok(params.kappa * (p - params.level) / (params.sigma * params.sigma))
}

/// Instantaneous growth `f dP - f^2 sigma^2 / 2` of leverage `f`.
pub fn instantaneous_growth(fraction: f64, edge: f64, sigma: f64) -> f64 {
    fraction * edge - 0.5 * fraction * fraction * sigma * sigma
}

/// `W_t = W_0 exp((kappa / sigma^2)(P_t - P_0))`; only defined for `K = 0`.
pub fn wealth_closed_form(p_t: f64, p0: f64, params: &FouParams, w0: f64) -> Result<f64> {
    params.validate()?;
    require_positive("w0", w0)?;
    if params.level != 0.0 {
        return Err(Error::domain(format!(
            "closed-form wealth requires level = 0, got {}",
            params.level
        )));
    }
    Ok(w0 * (params.kappa / (params.sigma * params.sigma) * (p_t - p0)).exp())
}

/// Self-financing wealth `W_{i+1} = W_i + Q_i (P_{i+1} - P_i)` with the
/// Kelly position `Q_i = W_i kappa (P_i - K) / (P_i sigma^2)`.
pub fn simulate_self_financing(path: &SamplePath, params: &FouParams, w0: f64) -> Result<SamplePath> {
    params.validate()?;
    require_positive("w0", w0)?;
    if let Some((index, &value)) = path.values.iter().enumerate().find(|(_, &v)| v.is_nan() || v <= 0.0) {
        return Err(Error::NonPositivePrice { index, value });
    }
    let var = params.sigma * params.sigma;
    let mut wealth = Vec::with_capacity(path.len());
    let mut w = w0;
    wealth.push(w);
    for pair in path.values.windows(2) {
        let (p, p_next) = (pair[0], pair[1]);
        let position = w * params.kappa * (p - params.level) / (p * var);
        w += position * (p_next - p);
        wealth.push(w);
    }
    Ok(SamplePath {
        times: path.times.clone(),
        values: wealth,
        seed: path.seed,
        meta: format!("self-financing;{}", path.meta),
    })
}

/// Square-root impact recovered through leverage instead of size.
///
/// With `P Q = f W` and `W = k sqrt(Q)`, the leverage that size `Q` implies
/// is `f = P Q / W`. The growth `g(f) = (dP/P) f - sigma^2 f^2 / (2 P^2)`
/// peaks where `dP P = sigma^2 f`, which fixes the concession.
pub fn optimal_impact_leverage_form(q: f64, price_level: f64, model: &GrowthModel) -> Result<f64> {
    model.validate()?;
    require_size(q)?;
    require_positive("price_level", price_level)?;
    if model.hurst != 0.5 {
        return Err(Error::domain(format!(
            "leverage form is derived for hurst = 0.5, got {}",
            model.hurst
        )));
    }
    let wealth = model.capital_scale_k * q.sqrt();
    let leverage = price_level * q / wealth;
    Ok(model.sigma * model.sigma * leverage / price_level)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub dt: f64,
    pub terminal_price: f64,
    pub terminal_wealth: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// Runs the self-financing strategy on coarsenings of one fine driver path.
///
/// Each stride subsamples `driver`, re-runs the Euler price scheme on the
/// coarse grid and compares terminal wealth with [`wealth_closed_form`].
pub fn self_financing_refinement(
    params: &FouParams,
    p0: f64,
    w0: f64,
    driver: &SamplePath,
    strides: &[usize],
) -> Result<Vec<RefinementRow>> {
    strides
        .iter()
        .map(|&stride| {
            let coarse = driver.subsample(stride)?;
            let price = simulate_fou_with_driver(params, p0, &coarse)?;
            let wealth = simulate_self_financing(&price, params, w0)?;
            let closed_form = wealth_closed_form(price.terminal(), p0, params, w0)?;
            let terminal_wealth = wealth.terminal();
            Ok(RefinementRow {
                dt: coarse.dt(),
                terminal_price: price.terminal(),
                terminal_wealth,
                closed_form,
                rel_error: (terminal_wealth - closed_form).abs() / closed_form,
            })
        })
        .collect()
}
