//! Four-stage DEX trading cycle on a constant-product pool.
//!
//! 1. switch: the investor takes `alpha` of X out of the pool, paying `beta` of Y;
//! 2. add: the investor deposits `(M, N)` at the pool ratio;
//! 3. switch: the investor sells `sigma` of X into the pool for `delta` of Y;
//! 4. remove: `(G, H)` is withdrawn from the pool.
//!
//! The ledger tracks three token vectors: pool reserves, the investor's
//! in-pool position and the investor's outside position. Outside balances may
//! go negative (temporary shorts). Tokens are only moved between pool and
//! outside, so `pool + outside = (X0, Y0)` at every stage. The in-pool
//! position is bookkept literally as `(M, N)` minus withdrawals; it is not a
//! pro-rata share.

use crate::csv::{fmt_f64, CsvBuffer};
use crate::cpmm_engine::{add_liquidity, buy_x_with_y, remove_liquidity, spot_price, swap_x_for_y, PoolState};
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Start,
    AfterStage1,
    AfterStage2,
    AfterStage3,
    AfterStage4,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Start => "start",
            Stage::AfterStage1 => "stage1",
            Stage::AfterStage2 => "stage2",
            Stage::AfterStage3 => "stage3",
            Stage::AfterStage4 => "stage4",
        }
    }
}

/// How `delta` is obtained in stage 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stage3Formula {
    /// `delta = K3 sigma / ((X - alpha + M)(X - alpha + M + sigma))`: a true
    /// constant-product swap on the post-stage-2 pool.
    #[default]
    ExactInvariant,
    /// `delta = sigma (YX / (X - alpha)) (1 + M / (X - alpha)) / (X + M)`.
    /// Kept for comparison; it does not preserve the pool product.
    FixedDenominator,
}

impl Stage3Formula {
    pub fn label(self) -> &'static str {
        match self {
            Stage3Formula::ExactInvariant => "exact-invariant",
            Stage3Formula::FixedDenominator => "fixed-denominator",
        }
    }
}

impl std::str::FromStr for Stage3Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-invariant" => Ok(Stage3Formula::ExactInvariant),
            "fixed-denominator" => Ok(Stage3Formula::FixedDenominator),
            other => Err(Error::domain(format!(
                "unknown stage-3 formula {other:?}, expected exact-invariant or fixed-denominator"
            ))),
        }
    }
}

/// Amounts moved so far; zero until the corresponding stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageAmounts {
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub n: f64,
    pub sigma: f64,
    pub delta: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleLedger {
    pub pool: PoolState,
    pub inside_x: f64,
    pub inside_y: f64,
    pub outside_x: f64,
    pub outside_y: f64,
    pub stage: Stage,
    pub amounts: StageAmounts,
    origin: (f64, f64),
}

impl CycleLedger {
    pub fn start(pool: PoolState) -> Self {
        Self {
            pool,
            inside_x: 0.0,
            inside_y: 0.0,
            outside_x: 0.0,
            outside_y: 0.0,
            stage: Stage::Start,
            amounts: StageAmounts::default(),
            origin: (pool.reserve_x(), pool.reserve_y()),
        }
    }

    /// Starting reserves `(X0, Y0)`.
    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// Largest componentwise deviation of `pool + outside` from `(X0, Y0)`.
    pub fn conservation_error(&self) -> f64 {
        let dx = self.pool.reserve_x() + self.outside_x - self.origin.0;
        let dy = self.pool.reserve_y() + self.outside_y - self.origin.1;
        dx.abs().max(dy.abs())
    }

    fn expect_stage(&self, expected: Stage) -> Result<()> {
        if self.stage == expected {
            Ok(())
        } else {
            Err(Error::StageOrder {
                expected: expected.label(),
                found: self.stage.label(),
            })
        }
    }
}

pub fn stage1_switch(ledger: &CycleLedger, alpha: f64) -> Result<CycleLedger> {
    ledger.expect_stage(Stage::Start)?;
    require_positive("alpha", alpha)?;
    if alpha >= ledger.pool.reserve_x() {
        return Err(Error::domain(format!(
            "alpha must be below X = {}, got {alpha}",
            ledger.pool.reserve_x()
        )));
    }
    let (pool, beta) = buy_x_with_y(&ledger.pool, alpha)?;
    Ok(CycleLedger {
        pool,
        outside_x: ledger.outside_x + alpha,
        outside_y: ledger.outside_y - beta,
        stage: Stage::AfterStage1,
        amounts: StageAmounts {
            alpha,
            beta,
            ..ledger.amounts
        },
        ..*ledger
    })
}

/// Deposits `M` of X with `N = M Y X / (X - alpha)^2` of Y.
pub fn stage2_add(ledger: &CycleLedger, m: f64) -> Result<CycleLedger> {
    ledger.expect_stage(Stage::AfterStage1)?;
    require_positive("m", m)?;
    let (x0, y0) = ledger.origin;
    let shifted = x0 - ledger.amounts.alpha;
    let n = m * y0 * x0 / (shifted * shifted);
    let pool = add_liquidity(&ledger.pool, m, n)?;
    Ok(CycleLedger {
        pool,
        inside_x: ledger.inside_x + m,
        inside_y: ledger.inside_y + n,
        outside_x: ledger.outside_x - m,
        outside_y: ledger.outside_y - n,
        stage: Stage::AfterStage2,
        amounts: StageAmounts { m, n, ..ledger.amounts },
        ..*ledger
    })
}

/// `delta` for a stage-3 sale of `sigma`, before it is applied.
fn stage3_delta(ledger: &CycleLedger, sigma: f64, formula: Stage3Formula) -> f64 {
    let (x0, y0) = ledger.origin;
    let StageAmounts { alpha, m, n, .. } = ledger.amounts;
    match formula {
        Stage3Formula::ExactInvariant => {
            let x2 = x0 - alpha + m;
            let k3 = x2 * (y0 * x0 / (x0 - alpha) + n);
            k3 * sigma / (x2 * (x2 + sigma))
        }
        Stage3Formula::FixedDenominator => {
            let shifted = x0 - alpha;
            sigma * (y0 * x0 / shifted) * (1.0 + m / shifted) / (x0 + m)
        }
    }
}

pub fn stage3_switch(ledger: &CycleLedger, sigma: f64, formula: Stage3Formula) -> Result<CycleLedger> {
    ledger.expect_stage(Stage::AfterStage2)?;
    require_positive("sigma", sigma)?;
    let (pool, delta) = match formula {
        Stage3Formula::ExactInvariant => swap_x_for_y(&ledger.pool, sigma)?,
        Stage3Formula::FixedDenominator => {
            let delta = stage3_delta(ledger, sigma, formula);
            let pool = PoolState::new(ledger.pool.reserve_x() + sigma, ledger.pool.reserve_y() - delta)?;
            (pool, delta)
        }
    };
    Ok(CycleLedger {
        pool,
        outside_x: ledger.outside_x - sigma,
        outside_y: ledger.outside_y + delta,
        stage: Stage::AfterStage3,
        amounts: StageAmounts {
            sigma,
            delta,
            ..ledger.amounts
        },
        ..*ledger
    })
}

fn apply_removal(ledger: &CycleLedger, pool: PoolState, g: f64, h: f64) -> CycleLedger {
    CycleLedger {
        pool,
        inside_x: ledger.inside_x - g,
        inside_y: ledger.inside_y - h,
        outside_x: ledger.outside_x + g,
        outside_y: ledger.outside_y + h,
        stage: Stage::AfterStage4,
        amounts: StageAmounts { g, h, ..ledger.amounts },
        ..*ledger
    }
}

/// Withdraws `(G, H)` at the current pool ratio. `G = H = 0` is a no-op
/// that still completes the cycle.
pub fn stage4_remove(ledger: &CycleLedger, g: f64, h: f64) -> Result<CycleLedger> {
    ledger.expect_stage(Stage::AfterStage3)?;
    if g == 0.0 && h == 0.0 {
        return Ok(apply_removal(ledger, ledger.pool, 0.0, 0.0));
    }
    if g == 0.0 || h == 0.0 {
        return Err(Error::RatioMismatch {
            pool_ratio: ledger.pool.reserve_x() / ledger.pool.reserve_y(),
            amount_ratio: g / h,
        });
    }
    let pool = remove_liquidity(&ledger.pool, g, h)?;
    Ok(apply_removal(ledger, pool, g, h))
}

/// Withdraws `(G, H)` without the ratio check, as needed to return the pool
/// to its starting reserves. Returns the ledger and the relative gap between
/// `G/H` and the pool's `X/Y` at withdrawal.
pub fn stage4_close(ledger: &CycleLedger, g: f64, h: f64) -> Result<(CycleLedger, f64)> {
    ledger.expect_stage(Stage::AfterStage3)?;
    for (name, v, reserve) in [("G", g, ledger.pool.reserve_x()), ("H", h, ledger.pool.reserve_y())] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
        }
        if v >= reserve {
            return Err(Error::ReserveUnderflow {
                requested: v,
                reserve,
            });
        }
    }
    let pool = PoolState::new(ledger.pool.reserve_x() - g, ledger.pool.reserve_y() - h)?;
    let pool_ratio = ledger.pool.reserve_x() / ledger.pool.reserve_y();
    let gap = if g == 0.0 && h == 0.0 {
        0.0
    } else {
        (g / h - pool_ratio).abs() / pool_ratio
    };
    Ok((apply_removal(ledger, pool, g, h), gap))
}

/// What stage 4 withdraws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Removal {
    /// Solve for the amounts that return the pool to `(X0, Y0)`.
    Closure,
    /// Withdraw these amounts at the pool ratio.
    Amounts { g: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    pub x0: f64,
    pub y0: f64,
    pub alpha: f64,
    pub m: f64,
    pub sigma_amt: f64,
    pub removal: Removal,
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("x0", self.x0)?;
        require_positive("y0", self.y0)?;
        require_positive("alpha", self.alpha)?;
        require_positive("m", self.m)?;
        require_positive("sigma_amt", self.sigma_amt)?;
        if self.alpha >= self.x0 {
            return Err(Error::domain(format!(
                "alpha must be below x0 = {}, got {}",
                self.x0, self.alpha
            )));
        }
        Ok(())
    }
}

/// Stage-4 amounts `G = M - alpha + sigma` and
/// `H = (YX / (X - alpha))(1 + M / (X - alpha)) - delta - Y` that return the
/// pool to its starting reserves.
pub fn closure_parameters(config: &CycleConfig, formula: Stage3Formula) -> Result<(f64, f64)> {
    config.validate()?;
    let (x, y) = (config.x0, config.y0);
    let shifted = x - config.alpha;
    let n = config.m * y * x / (shifted * shifted);
    let after2 = CycleLedger {
        amounts: StageAmounts {
            alpha: config.alpha,
            m: config.m,
            n,
            ..StageAmounts::default()
        },
        ..CycleLedger::start(PoolState::new(x, y)?)
    };
    let delta = stage3_delta(&after2, config.sigma_amt, formula);
    let g = config.m - config.alpha + config.sigma_amt;
    let h = y * x / shifted * (1.0 + config.m / shifted) - delta - y;
    let snap = |v: f64, scale: f64| if v < 0.0 && v > -1e-12 * scale { 0.0 } else { v };
    let (g, h) = (snap(g, x), snap(h, y));
    if g < 0.0 || h < 0.0 {
        return Err(Error::InfeasibleClosure { g, h });
    }
    Ok((g, h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub formula: Stage3Formula,
    /// Ledger at start and after each of the four stages.
    pub snapshots: Vec<CycleLedger>,
    pub final_inside: (f64, f64),
    pub final_outside: (f64, f64),
    /// Final outside position valued at the starting spot price `Y0 / X0`,
    /// in units of Y.
    pub work_analogue: f64,
    /// Largest short (negative outside balance) in each token over the cycle.
    pub gross_short_x: f64,
    pub gross_short_y: f64,
    /// Relative mismatch between `G/H` and the pool ratio when stage 4 closed
    /// the pool; `None` for a ratio-respecting withdrawal.
    pub closure_ratio_gap: Option<f64>,
}

impl CycleReport {
    pub fn final_ledger(&self) -> &CycleLedger {
        self.snapshots.last().expect("a report always holds five snapshots")
    }

    pub fn max_conservation_error(&self) -> f64 {
        self.snapshots
            .iter()
            .map(CycleLedger::conservation_error)
            .fold(0.0, f64::max)
    }

    /// `stage,pool_x,pool_y,inside_x,inside_y,outside_x,outside_y` rows and a
    /// trailing `summary` row of label/value pairs.
    pub fn to_csv(&self) -> String {
        let mut buf = CsvBuffer::with_header(&[
            "stage",
            "pool_x",
            "pool_y",
            "inside_x",
            "inside_y",
            "outside_x",
            "outside_y",
        ]);
        for s in &self.snapshots {
            buf.push_labelled(
                s.stage.label(),
                &[
                    s.pool.reserve_x(),
                    s.pool.reserve_y(),
                    s.inside_x,
                    s.inside_y,
                    s.outside_x,
                    s.outside_y,
                ],
            );
        }
        buf.push_row([
            "summary".to_string(),
            "work_analogue".to_string(),
            fmt_f64(self.work_analogue),
            "gross_short_x".to_string(),
            fmt_f64(self.gross_short_x),
            "gross_short_y".to_string(),
            fmt_f64(self.gross_short_y),
        ]);
        buf.into_string()
    }
}

pub fn run_cycle(config: &CycleConfig, formula: Stage3Formula) -> Result<CycleReport> {
    config.validate()?;
    let start = CycleLedger::start(PoolState::new(config.x0, config.y0)?);
    let s1 = stage1_switch(&start, config.alpha)?;
    let s2 = stage2_add(&s1, config.m)?;
    let s3 = stage3_switch(&s2, config.sigma_amt, formula)?;
    let (s4, closure_ratio_gap) = match config.removal {
        Removal::Closure => {
            let (g, h) = closure_parameters(config, formula)?;
            let (ledger, gap) = stage4_close(&s3, g, h)?;
            (ledger, Some(gap))
        }
        Removal::Amounts { g, h } => (stage4_remove(&s3, g, h)?, None),
    };
    let snapshots = vec![start, s1, s2, s3, s4];
    let short = |f: fn(&CycleLedger) -> f64| snapshots.iter().map(|l| (-f(l)).max(0.0)).fold(0.0, f64::max);
    let gross_short_x = short(|l| l.outside_x);
    let gross_short_y = short(|l| l.outside_y);
    let start_price = spot_price(&start.pool);
    Ok(CycleReport {
        formula,
        final_inside: (s4.inside_x, s4.inside_y),
        final_outside: (s4.outside_x, s4.outside_y),
        work_analogue: s4.outside_x * start_price + s4.outside_y,
        gross_short_x,
        gross_short_y,
        closure_ratio_gap,
        snapshots,
    })
}
