use liqlab_core::carnot_cycle::{run_cycle, CycleConfig, Removal, Stage3Formula};
use liqlab_core::catbond_kelly::{
    iso_fraction_shift, mean_variance_fraction, single_bond_fraction, single_bond_growth_derivative,
    single_bond_raw_fraction, BondSpec,
};
use liqlab_core::cpmm_engine::{
    exact_relative_impact, linearized_relative_impact, spot_price, swap_x_for_y, swap_y_for_x, PoolState,
};
use liqlab_core::kelly_impact::{
    instantaneous_growth, kelly_fraction_ou, optimal_impact_fou, optimal_size_numeric, GrowthModel,
};
use liqlab_core::numerics::log_grid;
use liqlab_core::stochastic_paths::{generate_fbm, path_seed, FbmGenerator, FouParams};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn swaps_preserve_invariant(x in 1e-3f64..1e6, y in 1e-3f64..1e6, frac in 1e-6f64..10.0) {
        let pool = PoolState::new(x, y).unwrap();
        let (after, _) = swap_x_for_y(&pool, frac * x).unwrap();
        prop_assert!(rel(after.invariant(), pool.invariant()) <= 1e-15);
        let (after, _) = swap_y_for_x(&pool, frac * y).unwrap();
        prop_assert!(rel(after.invariant(), pool.invariant()) <= 1e-15);
    }

    #[test]
    fn split_swap_matches_single_swap(x in 1e-3f64..1e6, y in 1e-3f64..1e6, frac in 1e-6f64..10.0) {
        let pool = PoolState::new(x, y).unwrap();
        let dx = frac * x;
        let (once, _) = swap_x_for_y(&pool, dx).unwrap();
        let (half, _) = swap_x_for_y(&pool, dx / 2.0).unwrap();
        let (twice, _) = swap_x_for_y(&half, dx / 2.0).unwrap();
        let ulp = |v: f64| f64::EPSILON * v.abs();
        prop_assert!((once.reserve_x() - twice.reserve_x()).abs() <= 2.0 * ulp(once.reserve_x()));
        prop_assert!((once.reserve_y() - twice.reserve_y()).abs() <= 2.0 * ulp(once.reserve_y()));
    }

    #[test]
    fn selling_x_lowers_price(x in 1e-3f64..1e6, y in 1e-3f64..1e6, frac in 1e-6f64..10.0) {
        let pool = PoolState::new(x, y).unwrap();
        let (after, _) = swap_x_for_y(&pool, frac * x).unwrap();
        prop_assert!(spot_price(&after) < spot_price(&pool));
    }

    #[test]
    fn linearisation_error_is_quadratic(x in 1e-3f64..1e6, u in 1e-6f64..=0.1) {
        let pool = PoolState::new(x, x).unwrap();
        let dx = u * x;
        let err = (exact_relative_impact(&pool, dx).unwrap() - linearized_relative_impact(&pool, dx)).abs();
        prop_assert!(err <= 3.5 * u * u);
    }

    #[test]
    fn ou_growth_is_nonnegative(p in -1e3f64..1e3, level in -10f64..10.0, kappa in 0.01f64..5.0, sigma in 0.1f64..5.0) {
        let params = FouParams::new(kappa, level, sigma, 0.5).unwrap();
        let f = kelly_fraction_ou(p, &params).unwrap();
        let edge = kappa * (p - level);
        let g = instantaneous_growth(f, edge, sigma);
        prop_assert!(g >= 0.0);
        let expect = 0.5 * (edge / sigma).powi(2);
        prop_assert!((g - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn analytic_fraction_is_stationary(q in 0.001f64..0.3, r in 0.5f64..5.0) {
        let bond = BondSpec::new(q, r).unwrap();
        let f = single_bond_raw_fraction(&bond);
        prop_assume!(f > 0.0 && f < 1.0);
        prop_assert!(single_bond_growth_derivative(f, &bond).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn clamped_fraction_has_no_growth_at_zero(q in 0.01f64..0.9, r in 0.01f64..3.0) {
        let bond = BondSpec::new(q, r).unwrap();
        let alloc = single_bond_fraction(&bond);
        prop_assume!(alloc.clamped && alloc.fraction == 0.0);
        prop_assert!(single_bond_growth_derivative(0.0, &bond).unwrap() <= 0.0);
    }

    #[test]
    fn iso_shift_keeps_fraction(q in 0.01f64..0.3, r in 0.5f64..4.0, delta in 1e-4f64..0.1) {
        let bond = BondSpec::new(q, r).unwrap();
        let base = single_bond_fraction(&bond);
        prop_assume!(!base.clamped);
        let shift = iso_fraction_shift(&bond, delta).unwrap();
        let moved = BondSpec::new(q + shift.exact, r + delta).unwrap();
        prop_assert!((single_bond_fraction(&moved).fraction - base.fraction).abs() <= 1e-12);
    }

    #[test]
    fn cycle_conserves_tokens(
        x0 in 10f64..1e4,
        y0 in 10f64..1e4,
        alpha_frac in 0.01f64..0.5,
        m_frac in 0.01f64..0.5,
        sigma_frac in 0.001f64..0.05,
    ) {
        let config = CycleConfig {
            x0,
            y0,
            alpha: alpha_frac * x0,
            m: m_frac * x0,
            sigma_amt: sigma_frac * x0,
            removal: Removal::Closure,
        };
        match run_cycle(&config, Stage3Formula::ExactInvariant) {
            Ok(report) => {
                prop_assert!(report.max_conservation_error() <= 1e-12 * x0.max(y0));
                let pool = report.final_ledger().pool;
                prop_assert!((pool.reserve_x() - x0).abs() <= 1e-12 * x0);
                prop_assert!((pool.reserve_y() - y0).abs() <= 1e-12 * y0);
            }
            Err(liqlab_core::Error::InfeasibleClosure { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn inversion_over_log_grid() {
    for hurst in [0.3, 0.5, 0.7] {
        let model = GrowthModel::new(1.0, 1.0, 1.0, hurst).unwrap();
        for q in log_grid(1e-3, 1e3, 25).unwrap() {
            let dp = optimal_impact_fou(q, &model).unwrap();
            let back = optimal_size_numeric(dp, &model).unwrap();
            assert!(rel(back, q) <= 1e-6, "H={hurst} q={q} back={back}");
        }
    }
}

#[test]
fn linear_to_optimal_ratio_diverges_away_from_three_quarters() {
    let pool = PoolState::new(1e6, 1e6).unwrap();
    for hurst in [0.3, 0.5, 0.7, 0.8, 0.9] {
        let model = GrowthModel::new(1.0, 1.0, 1.0, hurst).unwrap();
        let ratios: Vec<f64> = log_grid(1e-3, 1e3, 13)
            .unwrap()
            .into_iter()
            .map(|q| linearized_relative_impact(&pool, q).abs() / optimal_impact_fou(q, &model).unwrap())
            .collect();
        let rising = ratios.windows(2).all(|w| w[1] > w[0]);
        let falling = ratios.windows(2).all(|w| w[1] < w[0]);
        assert!(rising || falling, "H={hurst}: {ratios:?}");
        let span = ratios.last().unwrap() / ratios[0];
        let expected = 1e6f64.powf(1.5 - 2.0 * hurst);
        assert!(rel(span, expected) < 1e-9, "H={hurst}");
    }
}

#[test]
fn mean_variance_ratio_does_not_approach_kelly_fraction() {
    // E/Var behaves like r / (q (1 + r)^2) for small q while the Kelly
    // fraction tends to 1, so their ratio grows without bound.
    let ratio = |q: f64| {
        let bond = BondSpec::new(q, 1.0).unwrap();
        mean_variance_fraction(&bond) / single_bond_fraction(&bond).fraction
    };
    let ratios: Vec<f64> = [0.1, 0.01, 0.001, 0.0001].into_iter().map(ratio).collect();
    assert!(ratios.windows(2).all(|w| w[1] > 5.0 * w[0]), "{ratios:?}");
}

#[test]
fn fbm_paths_are_reproducible() {
    for method_h in [0.3, 0.5, 0.8] {
        let a = generate_fbm(257, 0.01, method_h, 99).unwrap();
        let b = generate_fbm(257, 0.01, method_h, 99).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.meta, b.meta);
        assert_eq!(a.to_csv(), b.to_csv());
    }
}

#[test]
fn brownian_increments_are_uncorrelated() {
    let n_paths = 10_000;
    let gen = FbmGenerator::new(16, 1.0 / 16.0, 0.5).unwrap();
    let incs: Vec<Vec<f64>> = (0..n_paths as u64).map(|i| gen.increments(path_seed(7, i))).collect();
    let bound = 4.0 / (n_paths as f64).sqrt();
    for lag in 1..4 {
        let (mut cross, mut sq_a, mut sq_b) = (0.0, 0.0, 0.0);
        for path in &incs {
            let (a, b) = (path[0], path[lag]);
            cross += a * b;
            sq_a += a * a;
            sq_b += b * b;
        }
        let corr = cross / (sq_a * sq_b).sqrt();
        assert!(corr.abs() < bound, "lag {lag}: {corr}");
    }
}
