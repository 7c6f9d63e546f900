//! The experiments the runner knows, their key schemas and their outputs.

use liqlab_core::carnot_cycle::{run_cycle, CycleConfig, Removal, Stage3Formula};
use liqlab_core::catbond_kelly::{
    iso_fraction_shift, sensitivity_sweep, single_bond_fraction, single_bond_fraction_numeric, sweep_csv,
    two_bond_fraction_numeric, two_bond_fraction_series, AllocationResult, BondSpec,
};
use liqlab_core::cpmm_engine::{compare_impact, impact_comparison_csv, PoolState, PoolTrace};
use liqlab_core::csv::{fmt_f64, CsvBuffer};
use liqlab_core::kelly_impact::{
    impact_curve, impact_curve_csv, impact_exponent, optimal_impact_fou, optimal_impact_leverage_form,
    optimal_size_numeric, self_financing_refinement, GrowthModel,
};
use liqlab_core::numerics::log_grid;
use liqlab_core::stochastic_paths::{
    path_seed, simulate_fou_with_driver, variance_scaling_exponent, FbmGenerator, FbmMethod, FouParams,
    NORMAL_LABEL, PRNG_LABEL,
};

use crate::config::{key, optional, ConfigError, Domain, KeySpec, Kind, Resolved};
use crate::RunError;

pub const EXPERIMENTS: &[&str] = &[
    "fbm-gen",
    "impact-curve",
    "impact-verify",
    "cpmm-compare",
    "cycle-run",
    "catbond-optimize",
    "catbond-sensitivity",
];

/// What an experiment produced, before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outputs {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    /// Generator and sampler labels.
    pub methods: Vec<(String, String)>,
    /// Headline numbers echoed into the manifest.
    pub results: Vec<(String, String)>,
}

impl Outputs {
    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn method(&mut self, name: &str, label: impl Into<String>) {
        self.methods.push((name.to_string(), label.into()));
    }

    fn result(&mut self, name: &str, value: f64) {
        self.results.push((name.to_string(), fmt_f64(value)));
    }

    fn flag(&mut self, name: &str, value: bool) {
        self.results.push((name.to_string(), value.to_string()));
    }
}

const MODEL_KEYS: [KeySpec; 4] = [
    key("hurst", Kind::Float, "0.5", Domain::Unit),
    key("sigma", Kind::Float, "1", Domain::Positive),
    key("k", Kind::Float, "1", Domain::Positive),
    key("khat", Kind::Float, "1", Domain::Positive),
];

const FBM_GEN: &[KeySpec] = &[
    key("process", Kind::Str, "fbm", Domain::OneOf(&["fbm", "fou"])),
    key("method", Kind::Str, "auto", Domain::OneOf(&["auto", "davies-harte", "cholesky"])),
    key("hurst", Kind::Float, "0.5", Domain::Unit),
    key("n_steps", Kind::Int, "1024", Domain::AtLeast(2)),
    key("horizon", Kind::Float, "1", Domain::Positive),
    key("n_paths", Kind::Int, "4", Domain::AtLeast(1)),
    key("kappa", Kind::Float, "0", Domain::Any),
    key("level", Kind::Float, "0", Domain::Any),
    key("sigma", Kind::Float, "1", Domain::Positive),
    key("p0", Kind::Float, "0", Domain::Any),
];

const IMPACT_CURVE: &[KeySpec] = &[
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    key("q_min", Kind::Float, "0.01", Domain::Positive),
    key("q_max", Kind::Float, "10000", Domain::Positive),
    key("n_points", Kind::Int, "61", Domain::AtLeast(2)),
];

const IMPACT_VERIFY: &[KeySpec] = &[
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    key("q_min", Kind::Float, "0.1", Domain::Positive),
    key("q_max", Kind::Float, "100", Domain::Positive),
    key("n_points", Kind::Int, "4", Domain::AtLeast(2)),
    key("kappa", Kind::Float, "1", Domain::Any),
    key("ou_sigma", Kind::Float, "10", Domain::Positive),
    key("driver_hurst", Kind::Float, "0.5", Domain::Unit),
    key("p0", Kind::Float, "100", Domain::Positive),
    key("w0", Kind::Float, "1", Domain::Positive),
    key("horizon", Kind::Float, "1", Domain::Positive),
    key("fine_steps", Kind::Int, "800", Domain::AtLeast(1)),
    key("levels", Kind::Int, "4", Domain::AtLeast(1)),
];

const CPMM_COMPARE: &[KeySpec] = &[
    MODEL_KEYS[0],
    MODEL_KEYS[1],
    MODEL_KEYS[2],
    MODEL_KEYS[3],
    key("reserve_x", Kind::Float, "100", Domain::Positive),
    key("reserve_y", Kind::Float, "100", Domain::Positive),
    key("u_min", Kind::Float, "0.01", Domain::Positive),
    key("u_max", Kind::Float, "0.1", Domain::Positive),
    key("n_points", Kind::Int, "4", Domain::AtLeast(2)),
];

const CYCLE_RUN: &[KeySpec] = &[
    key("x0", Kind::Float, "100", Domain::Positive),
    key("y0", Kind::Float, "100", Domain::Positive),
    key("alpha", Kind::Float, "10", Domain::Positive),
    key("m", Kind::Float, "9", Domain::Positive),
    key("sigma_amt", Kind::Float, "1", Domain::Positive),
    key(
        "formula",
        Kind::Str,
        "exact-invariant",
        Domain::OneOf(&["exact-invariant", "fixed-denominator"]),
    ),
    key("removal", Kind::Str, "closure", Domain::OneOf(&["closure", "amounts"])),
    optional("g", Kind::Float, Domain::NonNegative),
    optional("h", Kind::Float, Domain::NonNegative),
];

const CATBOND_OPTIMIZE: &[KeySpec] = &[
    key("q", Kind::Float, "0.2", Domain::Probability),
    key("r", Kind::Float, "1", Domain::Positive),
    key("delta_r", Kind::Float, "0.01", Domain::Positive),
];

const CATBOND_SENSITIVITY: &[KeySpec] = &[
    key("q_min", Kind::Float, "0.0025", Domain::Unit),
    key("q_max", Kind::Float, "0.2", Domain::Unit),
    key("n_q", Kind::Int, "8", Domain::AtLeast(1)),
    key("r_min", Kind::Float, "0.5", Domain::Positive),
    key("r_max", Kind::Float, "4", Domain::Positive),
    key("n_r", Kind::Int, "8", Domain::AtLeast(1)),
];

pub fn schema(experiment: &str) -> Result<&'static [KeySpec], ConfigError> {
    Ok(match experiment {
        "fbm-gen" => FBM_GEN,
        "impact-curve" => IMPACT_CURVE,
        "impact-verify" => IMPACT_VERIFY,
        "cpmm-compare" => CPMM_COMPARE,
        "cycle-run" => CYCLE_RUN,
        "catbond-optimize" => CATBOND_OPTIMIZE,
        "catbond-sensitivity" => CATBOND_SENSITIVITY,
        other => return Err(ConfigError::UnknownExperiment(other.to_string())),
    })
}

pub fn execute(experiment: &str, cfg: &Resolved, seed: u64) -> Result<Outputs, RunError> {
    match experiment {
        "fbm-gen" => fbm_gen(cfg, seed),
        "impact-curve" => impact_curve_run(cfg),
        "impact-verify" => impact_verify(cfg, seed),
        "cpmm-compare" => cpmm_compare(cfg),
        "cycle-run" => cycle_run(cfg),
        "catbond-optimize" => catbond_optimize(cfg),
        "catbond-sensitivity" => catbond_sensitivity(cfg),
        other => Err(ConfigError::UnknownExperiment(other.to_string()).into()),
    }
}

fn range(key: &str, value: impl ToString, expected: &str) -> RunError {
    ConfigError::Range {
        key: key.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    }
    .into()
}

fn grid(cfg: &Resolved, lo: &str, hi: &str, n: &str) -> Result<Vec<f64>, RunError> {
    let (a, b, count) = (cfg.float(lo), cfg.float(hi), cfg.count(n));
    if count > 1 && b <= a {
        return Err(range(hi, b, &format!("a value above {lo} = {a}")));
    }
    if count == 1 {
        return Ok(vec![a]);
    }
    Ok(log_grid(a, b, count)?)
}

fn model(cfg: &Resolved) -> Result<GrowthModel, RunError> {
    Ok(GrowthModel::new(
        cfg.float("k"),
        cfg.float("khat"),
        cfg.float("sigma"),
        cfg.float("hurst"),
    )?)
}

fn rng_labels(out: &mut Outputs) {
    out.method("prng", PRNG_LABEL);
    out.method("normal_sampler", NORMAL_LABEL);
}

fn fbm_gen(cfg: &Resolved, seed: u64) -> Result<Outputs, RunError> {
    let n_steps = cfg.count("n_steps");
    let dt = cfg.float("horizon") / n_steps as f64;
    let hurst = cfg.float("hurst");
    let gen = match cfg.text("method") {
        "davies-harte" => FbmGenerator::with_method(n_steps, dt, hurst, FbmMethod::DaviesHarte)?,
        "cholesky" => FbmGenerator::with_method(n_steps, dt, hurst, FbmMethod::Cholesky)?,
        _ => FbmGenerator::new(n_steps, dt, hurst)?,
    };
    let n_paths = cfg.count("n_paths");
    let mut out = Outputs::default();
    out.method("fbm_generator", gen.meta());
    rng_labels(&mut out);
    let drivers = gen.sample_batch(seed, n_paths);
    let fou = cfg.text("process") == "fou";
    if fou {
        out.method("price_scheme", "euler");
    }
    let params = FouParams::new(cfg.float("kappa"), cfg.float("level"), cfg.float("sigma"), hurst)?;
    let width = n_paths.saturating_sub(1).to_string().len().max(4);
    for (i, driver) in drivers.iter().enumerate() {
        let path = if fou {
            simulate_fou_with_driver(&params, cfg.float("p0"), driver)?
        } else {
            driver.clone()
        };
        out.file(format!("path_{i:0width$}.csv"), path.to_csv());
    }
    if n_paths >= 2 {
        out.result("variance_exponent", variance_scaling_exponent(&gen, seed, n_paths)?);
        out.result("variance_exponent_expected", 2.0 * hurst);
    }
    Ok(out)
}

fn impact_curve_run(cfg: &Resolved) -> Result<Outputs, RunError> {
    let model = model(cfg)?;
    let points = impact_curve(&grid(cfg, "q_min", "q_max", "n_points")?, &model)?;
    let mut out = Outputs::default();
    out.file("impact_curve.csv", impact_curve_csv(&points, &model));
    out.result("fitted_exponent", impact_exponent(&points)?);
    out.result("model_exponent", model.impact_exponent());
    Ok(out)
}

fn impact_verify(cfg: &Resolved, seed: u64) -> Result<Outputs, RunError> {
    let model = model(cfg)?;
    let sizes = grid(cfg, "q_min", "q_max", "n_points")?;
    let mut out = Outputs::default();

    let mut inversion = CsvBuffer::with_header(&["q", "delta_p", "q_recovered", "rel_error"]);
    let mut worst_inversion = 0.0f64;
    for &q in &sizes {
        let dp = optimal_impact_fou(q, &model)?;
        let back = optimal_size_numeric(dp, &model)?;
        let err = (back - q).abs() / q;
        worst_inversion = worst_inversion.max(err);
        inversion.push_floats(&[q, dp, back, err]);
    }
    out.file("inversion.csv", inversion.into_string());
    out.result("max_inversion_error", worst_inversion);
    if sizes.len() >= 2 {
        out.result("fitted_exponent", impact_exponent(&impact_curve(&sizes, &model)?)?);
    }
    out.result("model_exponent", model.impact_exponent());

    // The leverage form is a Brownian statement, so it is checked on the
    // H = 1/2 model with the same k and sigma.
    let brownian = GrowthModel { hurst: 0.5, ..model };
    let mut leverage = CsvBuffer::with_header(&["price", "q", "direct", "leverage", "rel_error"]);
    let mut worst_leverage = 0.0f64;
    for price in [0.1, 1.0, 10.0] {
        for &q in &sizes {
            let direct = optimal_impact_fou(q, &brownian)?;
            let lev = optimal_impact_leverage_form(q, price, &brownian)?;
            let err = (lev - direct).abs() / direct;
            worst_leverage = worst_leverage.max(err);
            leverage.push_floats(&[price, q, direct, lev, err]);
        }
    }
    out.file("leverage.csv", leverage.into_string());
    out.result("max_leverage_error", worst_leverage);

    let levels = cfg.count("levels");
    let coarsest = 1usize
        .checked_shl(levels as u32 - 1)
        .filter(|s| *s <= cfg.count("fine_steps"))
        .ok_or_else(|| range("levels", levels, "2^(levels-1) <= fine_steps"))?;
    let fine_steps = cfg.count("fine_steps");
    if !fine_steps.is_multiple_of(coarsest) {
        return Err(range("fine_steps", fine_steps, &format!("a multiple of {coarsest}")));
    }
    let strides: Vec<usize> = (0..levels).map(|l| coarsest >> l).collect();
    let driver_hurst = cfg.float("driver_hurst");
    let gen = FbmGenerator::new(fine_steps, cfg.float("horizon") / fine_steps as f64, driver_hurst)?;
    out.method("fbm_generator", gen.meta());
    rng_labels(&mut out);
    let driver = gen.sample(path_seed(seed, 0));
    let params = FouParams::new(cfg.float("kappa"), 0.0, cfg.float("ou_sigma"), driver_hurst)?;
    let rows = self_financing_refinement(&params, cfg.float("p0"), cfg.float("w0"), &driver, &strides)?;
    let mut refinement =
        CsvBuffer::with_header(&["dt", "terminal_price", "terminal_wealth", "closed_form", "rel_error"]);
    for r in &rows {
        refinement.push_floats(&[r.dt, r.terminal_price, r.terminal_wealth, r.closed_form, r.rel_error]);
    }
    out.file("refinement.csv", refinement.into_string());
    out.result("finest_wealth_error", rows.last().map_or(f64::NAN, |r| r.rel_error));
    out.flag(
        "wealth_error_decreasing",
        rows.windows(2).all(|w| w[1].rel_error < w[0].rel_error),
    );
    Ok(out)
}

fn cpmm_compare(cfg: &Resolved) -> Result<Outputs, RunError> {
    let model = model(cfg)?;
    let pool = PoolState::new(cfg.float("reserve_x"), cfg.float("reserve_y"))?;
    let sizes: Vec<f64> = grid(cfg, "u_min", "u_max", "n_points")?
        .into_iter()
        .map(|u| u * pool.reserve_x())
        .collect();
    let rows = compare_impact(&pool, &sizes, &model)?;
    let mut out = Outputs::default();
    out.file("impact_comparison.csv", impact_comparison_csv(&rows));
    let within = rows.iter().all(|r| (r.exact - r.linear).abs() <= 3.5 * r.u * r.u);
    out.flag("linearization_within_3.5u2", within);

    // Each size is sold into the pool and then bought back with the proceeds.
    let mut trace = PoolTrace::new(pool);
    for &dx in &sizes {
        let dy = trace.swap_x_for_y(dx)?;
        trace.swap_y_for_x(dy)?;
    }
    let end = trace.current();
    out.file("pool_trace.csv", trace.to_csv());
    out.result("round_trip_drift_x", end.reserve_x() - pool.reserve_x());
    Ok(out)
}

fn cycle_run(cfg: &Resolved) -> Result<Outputs, RunError> {
    let formula = cfg
        .text("formula")
        .parse::<Stage3Formula>()
        .map_err(|_| range("formula", cfg.text("formula"), "exact-invariant or fixed-denominator"))?;
    let removal = match cfg.text("removal") {
        "amounts" => Removal::Amounts {
            g: cfg.require_float("g")?,
            h: cfg.require_float("h")?,
        },
        _ => {
            if cfg.float_opt("g").is_some() || cfg.float_opt("h").is_some() {
                return Err(range("removal", "closure", "`amounts` when g or h is given"));
            }
            Removal::Closure
        }
    };
    let config = CycleConfig {
        x0: cfg.float("x0"),
        y0: cfg.float("y0"),
        alpha: cfg.float("alpha"),
        m: cfg.float("m"),
        sigma_amt: cfg.float("sigma_amt"),
        removal,
    };
    let report = run_cycle(&config, formula)?;
    let mut out = Outputs::default();
    out.method("stage3_formula", formula.label());
    out.file("cycle_report.csv", report.to_csv());
    out.result("max_conservation_error", report.max_conservation_error());
    out.result("final_inside_x", report.final_inside.0);
    out.result("final_inside_y", report.final_inside.1);
    out.result("final_outside_x", report.final_outside.0);
    out.result("final_outside_y", report.final_outside.1);
    out.result("work_analogue", report.work_analogue);
    if let Some(gap) = report.closure_ratio_gap {
        out.result("closure_ratio_gap", gap);
    }
    Ok(out)
}

fn allocation_row(buf: &mut CsvBuffer, label: &str, bond: &BondSpec, alloc: &AllocationResult) {
    buf.push_row([
        label.to_string(),
        fmt_f64(bond.default_prob_q),
        fmt_f64(bond.return_r),
        fmt_f64(alloc.fraction),
        fmt_f64(alloc.growth),
        u8::from(alloc.clamped).to_string(),
    ]);
}

fn catbond_optimize(cfg: &Resolved) -> Result<Outputs, RunError> {
    let bond = BondSpec::new(cfg.float("q"), cfg.float("r"))?;
    let analytic = single_bond_fraction(&bond);
    let numeric = single_bond_fraction_numeric(&bond);
    let mut buf = CsvBuffer::with_header(&["method", "q", "r", "fraction", "growth", "clamped"]);
    allocation_row(&mut buf, "single-analytic", &bond, &analytic);
    allocation_row(&mut buf, "single-golden-section", &bond, &numeric);
    allocation_row(&mut buf, "two-bond-series", &bond, &two_bond_fraction_series(&bond));
    allocation_row(&mut buf, "two-bond-golden-section", &bond, &two_bond_fraction_numeric(&bond));
    let mut out = Outputs::default();
    out.file("catbond_optimize.csv", buf.into_string());

    let delta = cfg.float("delta_r");
    let shift = iso_fraction_shift(&bond, delta)?;
    let mut iso = CsvBuffer::with_header(&["delta_r", "exact", "first_order", "geometric_series"]);
    iso.push_floats(&[delta, shift.exact, shift.first_order, shift.geometric_series]);
    out.file("iso_shift.csv", iso.into_string());
    out.result("fraction", analytic.fraction);
    out.result("oracle_gap", (analytic.fraction - numeric.fraction).abs());
    Ok(out)
}

fn catbond_sensitivity(cfg: &Resolved) -> Result<Outputs, RunError> {
    let qs = grid(cfg, "q_min", "q_max", "n_q")?;
    let rs = grid(cfg, "r_min", "r_max", "n_r")?;
    let rows = sensitivity_sweep(&qs, &rs)?;
    let mut out = Outputs::default();
    out.file("sensitivity.csv", sweep_csv(&rows));
    out.result("max_abs_err", rows.iter().map(|r| r.abs_err).fold(0.0, f64::max));
    Ok(out)
}
