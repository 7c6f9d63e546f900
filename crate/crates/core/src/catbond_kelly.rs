//! Discrete Kelly sizing for catastrophe and de-pegging bonds.
//!
//! A bond returns `r` per unit staked with survival probability `p = 1 - q`
//! and loses the stake on default (zero recovery). Staking a fraction `f`
//! grows log wealth by `q ln(1 - f) + p ln(1 + f r)`, maximised at
//! `f = 1 - q - q/r`.

use crate::csv::CsvBuffer;
use crate::error::{require_positive, Error, Result};
use crate::optimize::{golden_section_max, DEFAULT_MAX_ITER, DEFAULT_REL_TOL};

/// Distance kept from the log singularity by the numeric searches.
const SINGULARITY_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondSpec {
    pub default_prob_q: f64,
    pub return_r: f64,
}

impl BondSpec {
    pub fn new(default_prob_q: f64, return_r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&default_prob_q) {
            return Err(Error::domain(format!(
                "default probability must lie in [0, 1), got {default_prob_q}"
            )));
        }
        require_positive("return_r", return_r)?;
        Ok(Self {
            default_prob_q,
            return_r,
        })
    }

    pub fn survival_prob(&self) -> f64 {
        1.0 - self.default_prob_q
    }

    /// Mean payoff per unit staked, `p r - q`.
    pub fn mean_payoff(&self) -> f64 {
        self.survival_prob() * self.return_r - self.default_prob_q
    }

    /// Payoff variance per unit staked, `p q (1 + r)^2`.
    pub fn payoff_variance(&self) -> f64 {
        self.survival_prob() * self.default_prob_q * (1.0 + self.return_r).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMethod {
    Analytic,
    Series,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationResult {
    pub fraction: f64,
    pub growth: f64,
    pub method: AllocationMethod,
    /// The raw formula fell outside the admissible range and was clamped.
    pub clamped: bool,
}

/// `w ln(x)` with the convention `0 ln(0) = 0`.
fn weighted_ln(weight: f64, x: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * x.ln()
    }
}

fn single_growth_unchecked(f: f64, bond: &BondSpec) -> f64 {
    weighted_ln(bond.default_prob_q, 1.0 - f) + weighted_ln(bond.survival_prob(), 1.0 + f * bond.return_r)
}

/// `q ln(1 - f) + p ln(1 + f r)` for `0 <= f < 1`.
pub fn single_bond_growth(f: f64, bond: &BondSpec) -> Result<f64> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::domain(format!("fraction must lie in [0, 1), got {f}")));
    }
    Ok(single_growth_unchecked(f, bond))
}

/// `d/df` of [`single_bond_growth`].
pub fn single_bond_growth_derivative(f: f64, bond: &BondSpec) -> Result<f64> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::domain(format!("fraction must lie in [0, 1), got {f}")));
    }
    let (q, r) = (bond.default_prob_q, bond.return_r);
    Ok(-q / (1.0 - f) + bond.survival_prob() * r / (1.0 + f * r))
}

/// Unclamped optimum `1 - q - q/r`, evaluated as `1 - q (1 + r) / r`.
pub fn single_bond_raw_fraction(bond: &BondSpec) -> f64 {
    let (q, r) = (bond.default_prob_q, bond.return_r);
    1.0 - q * (1.0 + r) / r
}

/// Closed-form Kelly fraction, clamped at zero when the edge is negative.
pub fn single_bond_fraction(bond: &BondSpec) -> AllocationResult {
    let raw = single_bond_raw_fraction(bond);
    let fraction = raw.max(0.0);
    AllocationResult {
        fraction,
        growth: single_growth_unchecked(fraction, bond),
        method: AllocationMethod::Analytic,
        clamped: raw < 0.0,
    }
}

/// Golden-section maximisation of [`single_bond_growth`] on `[0, 1 - 1e-12]`.
pub fn single_bond_fraction_numeric(bond: &BondSpec) -> AllocationResult {
    let best = golden_section_max(
        |f| single_growth_unchecked(f, bond),
        0.0,
        1.0 - SINGULARITY_GAP,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_ITER,
    );
    AllocationResult {
        fraction: best.x,
        growth: best.value,
        method: AllocationMethod::BruteForce,
        clamped: false,
    }
}

/// Mean over variance of the payoff; a first estimate of the fraction.
pub fn mean_variance_fraction(bond: &BondSpec) -> f64 {
    bond.mean_payoff() / bond.payoff_variance()
}

/// Default-probability shifts that keep the Kelly fraction fixed when the
/// return moves from `r` to `r + delta_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoShift {
    /// `q delta / (r (1 + r + delta))`, solving `f(q + D, r + delta) = f(q, r)`.
    pub exact: f64,
    /// Leading term `(delta / r) q / (1 + r)`.
    pub first_order: f64,
    /// `(delta / r)(q/(1+r) + q^2/(1+r)^2 + ...)` summed in closed form.
    pub geometric_series: f64,
}

pub fn iso_fraction_shift(bond: &BondSpec, delta_r: f64) -> Result<IsoShift> {
    let (q, r) = (bond.default_prob_q, bond.return_r);
    if (r + delta_r).is_nan() || r + delta_r <= 0.0 {
        return Err(Error::domain(format!(
            "shifted return r + delta must be > 0, got {}",
            r + delta_r
        )));
    }
    let ratio = q / (1.0 + r);
    Ok(IsoShift {
        exact: q * delta_r / (r * (1.0 + r + delta_r)),
        first_order: delta_r / r * ratio,
        geometric_series: delta_r / r * ratio / (1.0 - ratio),
    })
}

fn two_bond_growth_unchecked(f: f64, bond: &BondSpec) -> f64 {
    let (q, r) = (bond.default_prob_q, bond.return_r);
    let p = bond.survival_prob();
    weighted_ln(p * p, 1.0 + 2.0 * f * r)
        + weighted_ln(2.0 * p * q, 1.0 + f * (r - 1.0))
        + weighted_ln(q * q, 1.0 - 2.0 * f)
}

/// Two independent, identical bonds, each held at fraction `f`:
/// `p^2 ln(1 + 2fr) + 2pq ln(1 + f(r - 1)) + q^2 ln(1 - 2f)`.
pub fn two_bond_growth(f: f64, bond: &BondSpec) -> Result<f64> {
    if !(0.0..0.5).contains(&f) {
        return Err(Error::domain(format!("per-bond fraction must lie in [0, 0.5), got {f}")));
    }
    if 1.0 + f * (bond.return_r - 1.0) <= 0.0 {
        return Err(Error::domain("single-default outcome wipes out wealth"));
    }
    Ok(two_bond_growth_unchecked(f, bond))
}

/// Unclamped `1/2 - q/r - q^2/(2r^2) - (q/(3r))(q/r)^2`.
pub fn two_bond_series_raw(bond: &BondSpec) -> f64 {
    let x = bond.default_prob_q / bond.return_r;
    0.5 - x - 0.5 * x * x - x / 3.0 * x * x
}

/// Per-bond fraction from the small-`q/r` series, clamped to `[0, 1/2]`.
pub fn two_bond_fraction_series(bond: &BondSpec) -> AllocationResult {
    let raw = two_bond_series_raw(bond);
    let fraction = raw.clamp(0.0, 0.5);
    AllocationResult {
        fraction,
        growth: two_bond_growth_unchecked(fraction, bond),
        method: AllocationMethod::Series,
        clamped: fraction != raw,
    }
}

/// Golden-section maximisation of [`two_bond_growth`] on `[0, 1/2 - 1e-12]`.
pub fn two_bond_fraction_numeric(bond: &BondSpec) -> AllocationResult {
    let best = golden_section_max(
        |f| two_bond_growth_unchecked(f, bond),
        0.0,
        0.5 - SINGULARITY_GAP,
        DEFAULT_REL_TOL,
        DEFAULT_MAX_ITER,
    );
    AllocationResult {
        fraction: best.x,
        growth: best.value,
        method: AllocationMethod::BruteForce,
        clamped: false,
    }
}

/// Non-default return that makes `target_f` the Kelly fraction:
/// `r = q / (1 - q - target_f)`.
pub fn implied_return(q: f64, target_f: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "implied return needs 0 < q < 1, got {q}"
        )));
    }
    if target_f.is_nan() || target_f < 0.0 {
        return Err(Error::domain(format!("target fraction must be >= 0, got {target_f}")));
    }
    let slack = 1.0 - q - target_f;
    if slack.is_nan() || slack <= 0.0 {
        return Err(Error::domain(format!(
            "target fraction {target_f} is not below 1 - q = {}",
            1.0 - q
        )));
    }
    Ok(q / slack)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub r: f64,
    pub f_analytic: f64,
    pub f_numeric: f64,
    pub f_series: f64,
    /// `|f_analytic - f_numeric|`.
    pub abs_err: f64,
}

pub fn sensitivity_sweep(qs: &[f64], rs: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(qs.len() * rs.len());
    for &q in qs {
        for &r in rs {
            let bond = BondSpec::new(q, r)?;
            let f_analytic = single_bond_fraction(&bond).fraction;
            let f_numeric = single_bond_fraction_numeric(&bond).fraction;
            rows.push(SweepRow {
                q,
                r,
                f_analytic,
                f_numeric,
                f_series: two_bond_fraction_series(&bond).fraction,
                abs_err: (f_analytic - f_numeric).abs(),
            });
        }
    }
    Ok(rows)
}

/// `q,r,f_analytic,f_numeric,f_series,abs_err` CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut buf = CsvBuffer::with_header(&["q", "r", "f_analytic", "f_numeric", "f_series", "abs_err"]);
    for row in rows {
        buf.push_floats(&[row.q, row.r, row.f_analytic, row.f_numeric, row.f_series, row.abs_err]);
    }
    buf.into_string()
}
