//! Fee-free constant-product pool.
//!
//! Reserves `(X, Y)` with invariant `K = X Y` and spot price `P = Y / X`.
//! Every operation returns a new [`PoolState`]; `K` is always recomputed from
//! the reserves.

use crate::csv::{fmt_f64, CsvBuffer};
use crate::error::{require_positive, Error, Result};
use crate::kelly_impact::{optimal_impact_fou, GrowthModel};

/// Relative tolerance on `x/y` when adding or removing liquidity.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolState {
    reserve_x: f64,
    reserve_y: f64,
}

impl PoolState {
    pub fn new(reserve_x: f64, reserve_y: f64) -> Result<Self> {
        require_positive("reserve_x", reserve_x)?;
        require_positive("reserve_y", reserve_y)?;
        Ok(Self {
            reserve_x,
            reserve_y,
        })
    }

    pub fn reserve_x(&self) -> f64 {
        self.reserve_x
    }

    pub fn reserve_y(&self) -> f64 {
        self.reserve_y
    }

    pub fn invariant(&self) -> f64 {
        self.reserve_x * self.reserve_y
    }
}

pub fn spot_price(pool: &PoolState) -> f64 {
    pool.reserve_y / pool.reserve_x
}

/// Sells `dx` of X into the pool; returns the new pool and the Y paid out.
pub fn swap_x_for_y(pool: &PoolState, dx: f64) -> Result<(PoolState, f64)> {
    require_positive("dx", dx)?;
    let k = pool.invariant();
    let new_x = pool.reserve_x + dx;
    let new_y = k / new_x;
    let dy = pool.reserve_y - new_y;
    Ok((PoolState::new(new_x, new_y)?, dy))
}

/// Sells `dy` of Y into the pool; returns the new pool and the X paid out.
pub fn swap_y_for_x(pool: &PoolState, dy: f64) -> Result<(PoolState, f64)> {
    require_positive("dy", dy)?;
    let k = pool.invariant();
    let new_y = pool.reserve_y + dy;
    let new_x = k / new_y;
    let dx = pool.reserve_x - new_x;
    Ok((PoolState::new(new_x, new_y)?, dx))
}

/// Buys exactly `dx_out` of X from the pool; returns the new pool and the Y
/// that had to be paid in.
pub fn buy_x_with_y(pool: &PoolState, dx_out: f64) -> Result<(PoolState, f64)> {
    require_positive("dx_out", dx_out)?;
    if dx_out >= pool.reserve_x {
        return Err(Error::ReserveUnderflow {
            requested: dx_out,
            reserve: pool.reserve_x,
        });
    }
    let k = pool.invariant();
    let new_x = pool.reserve_x - dx_out;
    let new_y = k / new_x;
    let dy_in = new_y - pool.reserve_y;
    Ok((PoolState::new(new_x, new_y)?, dy_in))
}

fn check_ratio(pool: &PoolState, m: f64, n: f64) -> Result<()> {
    let pool_ratio = pool.reserve_x / pool.reserve_y;
    let amount_ratio = m / n;
    if (amount_ratio - pool_ratio).abs() > RATIO_TOLERANCE * pool_ratio {
        return Err(Error::RatioMismatch {
            pool_ratio,
            amount_ratio,
        });
    }
    Ok(())
}

/// Deposits `(m, n)` at the pool ratio.
pub fn add_liquidity(pool: &PoolState, m: f64, n: f64) -> Result<PoolState> {
    require_positive("m", m)?;
    require_positive("n", n)?;
    check_ratio(pool, m, n)?;
    PoolState::new(pool.reserve_x + m, pool.reserve_y + n)
}

/// Withdraws `(g, h)` at the pool ratio.
pub fn remove_liquidity(pool: &PoolState, g: f64, h: f64) -> Result<PoolState> {
    require_positive("g", g)?;
    require_positive("h", h)?;
    if g >= pool.reserve_x {
        return Err(Error::ReserveUnderflow {
            requested: g,
            reserve: pool.reserve_x,
        });
    }
    if h >= pool.reserve_y {
        return Err(Error::ReserveUnderflow {
            requested: h,
            reserve: pool.reserve_y,
        });
    }
    check_ratio(pool, g, h)?;
    PoolState::new(pool.reserve_x - g, pool.reserve_y - h)
}

/// Exact relative price move of an X sale, `(X / (X + dx))^2 - 1`.
pub fn exact_relative_impact(pool: &PoolState, dx: f64) -> Result<f64> {
    if !dx.is_finite() || dx <= -pool.reserve_x {
        return Err(Error::domain(format!(
            "dx must exceed -X = {}, got {dx}",
            -pool.reserve_x
        )));
    }
    let ratio = pool.reserve_x / (pool.reserve_x + dx);
    Ok(ratio * ratio - 1.0)
}

/// First-order relative price move, `-2 dx / X`, from `P'(X) = -2 P / X`.
pub fn linearized_relative_impact(pool: &PoolState, dx: f64) -> f64 {
    -2.0 * dx / pool.reserve_x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactComparison {
    pub dx: f64,
    pub u: f64,
    pub exact: f64,
    pub linear: f64,
    pub growth_optimal: f64,
    /// `|linear| / growth_optimal`.
    pub linear_to_optimal: f64,
}

/// Pool impact against the growth-optimal concession for the same size.
pub fn compare_impact(pool: &PoolState, sizes: &[f64], model: &GrowthModel) -> Result<Vec<ImpactComparison>> {
    sizes
        .iter()
        .map(|&dx| {
            let linear = linearized_relative_impact(pool, dx);
            let growth_optimal = optimal_impact_fou(dx, model)?;
            Ok(ImpactComparison {
                dx,
                u: dx / pool.reserve_x,
                exact: exact_relative_impact(pool, dx)?,
                linear,
                growth_optimal,
                linear_to_optimal: linear.abs() / growth_optimal,
            })
        })
        .collect()
}

pub fn impact_comparison_csv(rows: &[ImpactComparison]) -> String {
    let mut buf = CsvBuffer::with_header(&[
        "dx",
        "u",
        "exact",
        "linear",
        "abs_diff",
        "growth_optimal",
        "linear_to_optimal",
    ]);
    for r in rows {
        buf.push_floats(&[
            r.dx,
            r.u,
            r.exact,
            r.linear,
            (r.exact - r.linear).abs(),
            r.growth_optimal,
            r.linear_to_optimal,
        ]);
    }
    buf.into_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolAction {
    Init,
    SwapXForY,
    SwapYForX,
    AddLiquidity,
    RemoveLiquidity,
}

impl PoolAction {
    pub fn label(self) -> &'static str {
        match self {
            PoolAction::Init => "init",
            PoolAction::SwapXForY => "swap_x_for_y",
            PoolAction::SwapYForX => "swap_y_for_x",
            PoolAction::AddLiquidity => "add_liquidity",
            PoolAction::RemoveLiquidity => "remove_liquidity",
        }
    }
}

/// Records every transition of a pool, starting from its initial state.
#[derive(Debug, Clone)]
pub struct PoolTrace {
    steps: Vec<(PoolAction, PoolState)>,
}

impl PoolTrace {
    pub fn new(pool: PoolState) -> Self {
        Self {
            steps: vec![(PoolAction::Init, pool)],
        }
    }

    pub fn current(&self) -> PoolState {
        self.steps.last().expect("trace starts with init").1
    }

    pub fn steps(&self) -> &[(PoolAction, PoolState)] {
        &self.steps
    }

    pub fn swap_x_for_y(&mut self, dx: f64) -> Result<f64> {
        let (pool, dy) = swap_x_for_y(&self.current(), dx)?;
        self.steps.push((PoolAction::SwapXForY, pool));
        Ok(dy)
    }

    pub fn swap_y_for_x(&mut self, dy: f64) -> Result<f64> {
        let (pool, dx) = swap_y_for_x(&self.current(), dy)?;
        self.steps.push((PoolAction::SwapYForX, pool));
        Ok(dx)
    }

    pub fn add_liquidity(&mut self, m: f64, n: f64) -> Result<()> {
        let pool = add_liquidity(&self.current(), m, n)?;
        self.steps.push((PoolAction::AddLiquidity, pool));
        Ok(())
    }

    pub fn remove_liquidity(&mut self, g: f64, h: f64) -> Result<()> {
        let pool = remove_liquidity(&self.current(), g, h)?;
        self.steps.push((PoolAction::RemoveLiquidity, pool));
        Ok(())
    }

    /// `step,action,reserve_x,reserve_y,spot_price` CSV.
    pub fn to_csv(&self) -> String {
        let mut buf = CsvBuffer::with_header(&["step", "action", "reserve_x", "reserve_y", "spot_price"]);
        for (i, (action, pool)) in self.steps.iter().enumerate() {
            buf.push_row([
                i.to_string(),
                action.label().to_string(),
                fmt_f64(pool.reserve_x),
                fmt_f64(pool.reserve_y),
                fmt_f64(spot_price(pool)),
            ]);
        }
        buf.into_string()
    }
}
