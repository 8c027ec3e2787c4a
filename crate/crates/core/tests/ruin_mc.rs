use ruinlab_core::model::{premium_for_loading, ClaimLaw, InvestmentModel, RiskParams};
use ruinlab_core::num::norm_cdf;
use ruinlab_core::paths::{Scheme, SchemeConfig};
use ruinlab_core::ruin_mc::*;

fn exp_model(u: f64, c: f64) -> RiskParams<f64> {
    RiskParams::poisson(u, c, 1.0, ClaimLaw::exponential(1.0).unwrap()).unwrap()
}

fn reinvested(dt: f64) -> SchemeConfig {
    SchemeConfig::new(dt, Scheme::Reinvested)
}

/// Infinite-horizon ruin of the compound Poisson model with Exp(μ) claims.
fn classical_psi(u: f64, rho: f64, mu: f64) -> f64 {
    (-rho * u / (mu * (1.0 + rho))).exp() / (1.0 + rho)
}

/// `P(min_{s ≤ T} u + d s + √v W_s < 0)`.
fn brownian_ruin(u: f64, d: f64, v: f64, t: f64) -> f64 {
    let s = (v * t).sqrt();
    norm_cdf((-u - d * t) / s) + (-2.0 * d * u / v).exp() * norm_cdf((-u + d * t) / s)
}

#[test]
fn no_capital_no_premium_ruins_at_first_claim() {
    let p = exp_model(0.0, 0.0);
    let est = estimate_ruin(&p, &InvestmentModel::none(), &reinvested(0.01), 0.7, 20_000, 5).unwrap();
    let exact = 1.0 - (-0.7f64).exp();
    assert!(
        (est.estimate - exact).abs() < 4.0 * est.stderr(),
        "{} vs {exact}",
        est.estimate
    );
}

#[test]
fn classical_model_matches_closed_form() {
    let c = premium_for_loading(0.2, 1.0, 1.0);
    let p = exp_model(5.0, c);
    let est = estimate_ruin(&p, &InvestmentModel::none(), &reinvested(0.01), 400.0, 10_000, 11).unwrap();
    let exact = classical_psi(5.0, 0.2, 1.0);
    assert!((exact - 0.3622).abs() < 1e-4);
    assert!((est.estimate - exact).abs() < 0.02, "{} vs {exact}", est.estimate);
}

#[test]
fn wilson_interval_covers() {
    let p = exp_model(0.0, 0.0);
    let exact = 1.0 - (-0.3f64).exp();
    let covered = (0..500u64)
        .filter(|&seed| {
            let e = estimate_ruin(&p, &InvestmentModel::none(), &reinvested(0.01), 0.3, 200, 1000 + seed).unwrap();
            e.ci_low <= exact && exact <= e.ci_high
        })
        .count();
    assert!(covered >= 465, "{covered}/500");
}

#[test]
fn riskless_growth_stops_ruin() {
    let p = exp_model(5.0, 1.1);
    let inv = InvestmentModel::gbm(0.05, 0.0).unwrap();
    let times = ruin_times(&p, &inv, &reinvested(0.05), 800.0, 2000, 3).unwrap();
    let ladder = ladder_estimates(&times, &[200.0, 800.0], 3);
    assert!(ladder[1].estimate < 0.5);
    assert!(ladder[0].overlaps(&ladder[1]), "{ladder:?}");
}

#[test]
fn ruin_is_pathwise_monotone_in_capital() {
    let inv = InvestmentModel::gbm(0.02, 0.3).unwrap();
    let cfg = reinvested(0.02);
    let low = ruin_times(&exp_model(2.0, 1.1), &inv, &cfg, 100.0, 500, 9).unwrap();
    let high = ruin_times(&exp_model(10.0, 1.1), &inv, &cfg, 100.0, 500, 9).unwrap();
    for (a, b) in low.iter().zip(&high) {
        if let Some(tb) = b {
            assert!(a.is_some_and(|ta| ta <= *tb), "{a:?} {b:?}");
        }
    }
    assert!(low.iter().filter(|t| t.is_some()).count() > high.iter().filter(|t| t.is_some()).count());
}

#[test]
fn regime_sign_separates_outcomes() {
    let p = exp_model(5.0, 1.1);
    let cfg = reinvested(0.02);
    let ladder = [100.0, 500.0];
    let safe = certain_ruin_experiment(&p, &InvestmentModel::gbm(0.1, 0.2).unwrap(), &cfg, &ladder, 400, 4).unwrap();
    let doomed = certain_ruin_experiment(&p, &InvestmentModel::gbm(0.01, 0.4).unwrap(), &cfg, &ladder, 400, 4).unwrap();
    assert!(safe.final_estimate().estimate < 0.3);
    assert!(doomed.final_estimate().estimate > 0.8);
    assert!(doomed.is_monotone());
    assert_ne!(safe.regime, doomed.regime);
}

#[test]
fn base_variant_reproduces_experiment() {
    let p = exp_model(5.0, 1.1);
    let inv = InvestmentModel::gbm(0.01, 0.3).unwrap();
    let cfg = reinvested(0.05);
    let ladder = [50.0, 100.0];
    let direct = certain_ruin_experiment(&p, &inv, &cfg, &ladder, 300, 8).unwrap();
    let via = corollary_matrix(&[Variant::new("base", p.clone(), inv)], &cfg, &ladder, 300, 8).unwrap();
    assert_eq!(direct, via[0]);
    let rows = report_rows(&via);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].len(), REPORT_HEADER.len());
}

#[test]
fn rejects_bad_inputs() {
    let p = exp_model(5.0, 1.1);
    let inv = InvestmentModel::none();
    assert!(estimate_ruin(&p, &inv, &reinvested(0.01), 10.0, 50, 1).is_err());
    assert!(certain_ruin_experiment(&p, &inv, &reinvested(0.01), &[10.0, 5.0], 100, 1).is_err());
    assert!(diffusion_ruin(0.1, 0.0, &[1.0], 10.0, 0.1, 100, 1).is_err());
}

#[test]
fn diffusion_ruin_matches_reflection_formula() {
    let (d, v, t) = (0.2, 2.0, 50.0);
    let est = diffusion_ruin(d, v, &[0.5, 2.0, 5.0], t, 0.25, 20_000, 21).unwrap();
    for (e, u) in est.iter().zip([0.5, 2.0, 5.0]) {
        let exact = brownian_ruin(u, d, v, t);
        assert!(
            (e.estimate - exact).abs() < 4.0 * e.stderr() + 1e-3,
            "u={u}: {} vs {exact}",
            e.estimate
        );
    }
}

#[test]
fn aggregate_claims_have_compound_poisson_moments() {
    let p = exp_model(0.0, 1.0);
    let (mean, var) = aggregate_claim_moments(&p, 5.0, 100_000, 2);
    // E[S] = λtμ, Var[S] = λtE[Y²].
    assert!((mean - 5.0).abs() < 0.05, "{mean}");
    assert!((var - 10.0).abs() < 0.3, "{var}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = exp_model(3.0, 1.1);
    let inv = InvestmentModel::gbm(0.01, 0.3).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ruin_times(&p, &inv, &reinvested(0.05), 50.0, 300, 6).unwrap())
    };
    assert_eq!(run(1), run(4));
}
