use ruinlab_core::model::{ClaimLaw, InvestmentModel, PremiumSpec, RiskParams};
use ruinlab_core::paths::*;
use ruinlab_core::processes::{CountingProcess, LevyJumpSpec, SeedSpec};
use ruinlab_core::ruin_mc::{boundedness_sweep, envelope_statistics};
use ruinlab_core::stats::Moments;

fn exp_claims(mean: f64) -> ClaimLaw<f64> {
    ClaimLaw::exponential(mean).unwrap()
}

#[test]
fn classical_mean_matches_compound_poisson() {
    let (u, c, lambda, mu, t) = (5.0, 1.3, 2.0, 0.5, 10.0);
    let p = RiskParams::poisson(u, c, lambda, exp_claims(mu)).unwrap();
    let xs: Vec<f64> = (0..10_000)
        .map(|i| {
            *simulate_classical(&p, t, SeedSpec::new(9, i))
                .unwrap()
                .x
                .last()
                .unwrap()
        })
        .collect();
    let m = Moments::of(&xs);
    let expected = u + (c - lambda * mu) * t;
    assert!((m.mean - expected).abs() < 3.0 * m.stderr(), "{} vs {expected}", m.mean);
}

#[test]
fn classical_capital_identity_at_nodes() {
    let p = RiskParams::poisson(2.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    let path = simulate_invested(
        &p,
        &InvestmentModel::gbm(0.03, 0.3).unwrap(),
        &SchemeConfig::new(0.05, Scheme::DilationExact),
        40.0,
        SeedSpec::new(4, 4),
    )
    .unwrap();
    for i in 0..path.len() {
        let claimed: f64 = path.claims.iter().filter(|c| c.0 <= path.t[i]).map(|c| c.1).sum();
        let x = 2.0 + 1.1 * path.t[i] - claimed;
        assert!((path.x[i] - x).abs() <= 1e-12 * (1.0 + x.abs() + claimed));
    }
}

#[test]
fn zero_size_claim_leaves_path_unchanged() {
    let inv = InvestmentModel::gbm(0.02, 0.25).unwrap();
    let times = vec![0.73, 2.5, 4.11];
    let sizes = vec![1.5, 0.4, 2.0];
    let base = RiskParams::new(
        3.0,
        PremiumSpec::Constant(1.0),
        CountingProcess::schedule_with_sizes(times, sizes),
        exp_claims(1.0),
    )
    .unwrap();
    let with_zero = RiskParams::new(
        3.0,
        PremiumSpec::Constant(1.0),
        CountingProcess::schedule_with_sizes(vec![0.73, 0.74, 2.5, 3.3, 4.11], vec![1.5, 0.0, 0.4, 0.0, 2.0]),
        exp_claims(1.0),
    )
    .unwrap();
    for scheme in [Scheme::DilationExact, Scheme::Reinvested] {
        let cfg = SchemeConfig::new(0.1, scheme);
        let a = simulate_invested(&base, &inv, &cfg, 6.0, SeedSpec::new(3, 1)).unwrap();
        let b = simulate_invested(&with_zero, &inv, &cfg, 6.0, SeedSpec::new(3, 1)).unwrap();
        assert_eq!(b.len(), a.len() + 2);
        for (i, &t) in a.t.iter().enumerate() {
            let j = b.node_at(t).unwrap();
            assert_eq!(a.xp[i].to_bits(), b.xp[j].to_bits(), "{scheme:?} t={t}");
            assert_eq!(a.env[i].to_bits(), b.env[j].to_bits());
        }
    }
}

#[test]
fn dilation_covariance() {
    let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
    let k = 4.0;
    let p1 = RiskParams::poisson(3.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    let pk = RiskParams::poisson(3.0 * k, 1.1 * k, 1.0, exp_claims(k)).unwrap();
    for scheme in [Scheme::DilationExact, Scheme::Reinvested] {
        let cfg = SchemeConfig::new(0.02, scheme);
        for i in 0..20 {
            let a = simulate_invested(&p1, &inv, &cfg, 30.0, SeedSpec::new(5, i)).unwrap();
            let b = simulate_invested(&pk, &inv, &cfg, 30.0, SeedSpec::new(5, i)).unwrap();
            assert_eq!(a.t, b.t);
            for (x, y) in a.xp.iter().zip(&b.xp) {
                assert_eq!((k * x).to_bits(), y.to_bits());
            }
            assert_eq!(a.ruined_at, b.ruined_at);
        }
    }
}

#[test]
fn levy_without_jumps_is_gbm() {
    let (a, sigma) = (0.03, 0.25);
    let gbm = InvestmentModel::gbm(a, sigma).unwrap();
    let levy = InvestmentModel::exp_levy(sigma, a - 0.5 * sigma * sigma, LevyJumpSpec::none()).unwrap();
    let p = RiskParams::poisson(2.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    let cfg = SchemeConfig::new(0.05, Scheme::DilationExact);
    for i in 0..10 {
        let x = simulate_invested(&p, &gbm, &cfg, 20.0, SeedSpec::new(6, i)).unwrap();
        let y = simulate_invested(&p, &levy, &cfg, 20.0, SeedSpec::new(6, i)).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn refinement_keeps_coarse_nodes() {
    let p = RiskParams::new(
        1.0,
        PremiumSpec::Constant(1.0),
        CountingProcess::schedule(vec![]),
        exp_claims(1.0),
    )
    .unwrap();
    let inv = InvestmentModel::gbm(0.0, 0.5).unwrap();
    let coarse = simulate_invested(
        &p,
        &inv,
        &SchemeConfig {
            refine: 2,
            ..SchemeConfig::new(0.1, Scheme::DilationExact)
        },
        4.0,
        SeedSpec::new(1, 1),
    )
    .unwrap();
    let fine = simulate_invested(
        &p,
        &inv,
        &SchemeConfig {
            refine: 4,
            ..SchemeConfig::new(0.025, Scheme::DilationExact)
        },
        4.0,
        SeedSpec::new(1, 1),
    )
    .unwrap();
    assert_eq!(fine.len(), 4 * (coarse.len() - 1) + 1);
    for (i, &t) in coarse.t.iter().enumerate().step_by(4) {
        let j = fine.t.iter().position(|&s| (s - t).abs() < 1e-12).unwrap();
        assert_eq!(coarse.env[i], fine.env[j]);
    }
}

/// Mean terminal capital difference between successive refinements.
fn refinement_gaps(
    scheme_of_level: impl Fn(u32) -> SchemeConfig,
    reference: SchemeConfig,
    p: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    levels: u32,
    n: u64,
) -> Vec<f64> {
    let terminal = |cfg: &SchemeConfig, i: u64| {
        *simulate_invested(p, inv, cfg, 1.0, SeedSpec::new(8, i))
            .unwrap()
            .xp
            .last()
            .unwrap()
    };
    (0..levels)
        .map(|k| {
            let cfg = scheme_of_level(k);
            let d: Vec<f64> = (0..n).map(|i| terminal(&cfg, i) - terminal(&reference, i)).collect();
            Moments::of(&d).mean.abs()
        })
        .collect()
}

fn fitted_order(hs: &[f64], errs: &[f64]) -> f64 {
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (
        lx.iter().sum::<f64>() / lx.len() as f64,
        ly.iter().sum::<f64>() / ly.len() as f64,
    );
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn euler_weak_order_against_exact_solution() {
    // No claims: Euler–Maruyama on dX' = aX'dt + σX'dB + c dt against the exact reinvested solution.
    let p = RiskParams::new(
        1.0,
        PremiumSpec::Constant(0.5),
        CountingProcess::schedule(vec![]),
        exp_claims(1.0),
    )
    .unwrap();
    let inv = InvestmentModel::gbm(0.8, 0.4).unwrap();
    let h0 = 0.2;
    let levels = 4;
    let cfg = |scheme, k: u32| SchemeConfig {
        refine: k,
        ..SchemeConfig::new(h0 / f64::powi(2.0, k as i32), scheme)
    };
    let reference = cfg(Scheme::Reinvested, 8);
    let gaps = refinement_gaps(|k| cfg(Scheme::EulerSde, k), reference, &p, &inv, levels, 4000);
    let hs: Vec<f64> = (0..levels).map(|k| h0 / f64::powi(2.0, k as i32)).collect();
    let order = fitted_order(&hs, &gaps);
    assert!((0.8..1.3).contains(&order), "order {order}, gaps {gaps:?}");
}

#[test]
fn euler_matches_dilation_without_premium() {
    // With c = 0 and no claims both constructions reduce to u·e^{E_t}.
    let p = RiskParams::new(
        1.0,
        PremiumSpec::Constant(0.0),
        CountingProcess::schedule(vec![]),
        exp_claims(1.0),
    )
    .unwrap();
    let inv = InvestmentModel::gbm(0.8, 0.4).unwrap();
    let h0 = 0.2;
    let cfg = |scheme, k: u32| SchemeConfig {
        refine: k,
        ..SchemeConfig::new(h0 / f64::powi(2.0, k as i32), scheme)
    };
    let gaps = refinement_gaps(
        |k| cfg(Scheme::EulerSde, k),
        cfg(Scheme::DilationExact, 8),
        &p,
        &inv,
        4,
        4000,
    );
    let hs: Vec<f64> = (0..4).map(|k| h0 / f64::powi(2.0, k)).collect();
    let order = fitted_order(&hs, &gaps);
    assert!((0.8..1.3).contains(&order), "order {order}, gaps {gaps:?}");
}

#[test]
fn dilation_grid_refinement_order() {
    let p = RiskParams::poisson(2.0, 1.5, 1.0, exp_claims(1.0)).unwrap();
    let inv = InvestmentModel::gbm(0.3, 0.6).unwrap();
    let h0 = 0.1;
    let cfg = |k: u32| SchemeConfig {
        refine: k,
        ..SchemeConfig::new(h0 / f64::powi(2.0, k as i32), Scheme::DilationExact)
    };
    // Pathwise change when halving the step, averaged in absolute value.
    let terminal = |k: u32, i: u64| {
        *simulate_invested(&p, &inv, &cfg(k), 1.0, SeedSpec::new(12, i))
            .unwrap()
            .xp
            .last()
            .unwrap()
    };
    let changes: Vec<f64> = (0..4)
        .map(|k| {
            (0..400)
                .map(|i| (terminal(k + 1, i) - terminal(k, i)).abs())
                .sum::<f64>()
                / 400.0
        })
        .collect();
    let hs: Vec<f64> = (0..4).map(|k| h0 / f64::powi(2.0, k)).collect();
    let order = fitted_order(&hs, &changes);
    assert!(order >= 0.8, "order {order}, changes {changes:?}");
}

#[test]
fn boundedness_holds_on_random_paths() {
    let p = RiskParams::poisson(10.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
    for scheme in [Scheme::DilationExact, Scheme::Reinvested] {
        let res = boundedness_sweep(
            &p,
            &inv,
            &SchemeConfig::new(0.01, scheme),
            200.0,
            200,
            3,
            1e-6 * (10.0 + 1.1 * 200.0),
        )
        .unwrap();
        assert!(res.iter().all(|b| b.holds), "{scheme:?}");
    }
}

#[test]
fn sinusoidal_premium_respects_its_bound() {
    let mut p = RiskParams::poisson(10.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    p.premium = PremiumSpec::Sinusoidal {
        base: 1.1,
        amplitude: 0.5,
        frequency: 1.0,
    };
    let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
    for quadrature in [Quadrature::Trapezoid, Quadrature::LeftEndpoint] {
        let cfg = SchemeConfig {
            quadrature,
            ..SchemeConfig::new(0.01, Scheme::DilationExact)
        };
        let path = simulate_invested(&p, &inv, &cfg, 100.0, SeedSpec::new(2, 2)).unwrap();
        let b = check_boundedness(&path, 1.65, 1e-9).unwrap();
        assert!(b.holds && b.min_slack >= 0.0);
    }
}

#[test]
fn dilation_term_vanishes_for_negative_exponent() {
    let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
    let cfg = SchemeConfig::new(0.05, Scheme::DilationExact);
    let stats = envelope_statistics(&inv, 10.0, 1.1, &[1000.0, 2000.0], &cfg, 1000, 17).unwrap();
    assert!(stats[1].median_dilation < 1e-6 * 10.0, "{:?}", stats[1]);
    // E_t = 0.2 W_t − 0.01 t is below zero on most paths by t = 1000, so the
    // median supremum has settled; the upper quantiles still grow.
    let ratio = stats[1].median_supremum / stats[0].median_supremum;
    assert!((1.0..1.05).contains(&ratio), "{ratio} {stats:?}");
    assert!(stats[1].q99_supremum >= stats[0].q99_supremum);
}

#[test]
fn deterministic_envelope_terminal_term() {
    let inv = InvestmentModel::Deterministic { a: -0.01 };
    let e = envelope_supremum(
        &inv,
        10.0,
        1.1,
        100.0,
        &SchemeConfig::new(0.1, Scheme::DilationExact),
        SeedSpec::new(1, 1),
    )
    .unwrap();
    assert_eq!(e.dilation, 10.0 * (-0.01f64 * 100.0).exp());
}

#[test]
fn path_csv_dump() {
    let p = RiskParams::poisson(2.0, 1.1, 1.0, exp_claims(1.0)).unwrap();
    let path = simulate_invested(
        &p,
        &InvestmentModel::gbm(0.01, 0.2).unwrap(),
        &SchemeConfig::new(0.5, Scheme::Reinvested),
        5.0,
        SeedSpec::new(1, 0),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("path_0.csv");
    path.write_csv(&f).unwrap();
    let text = std::fs::read_to_string(&f).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,env,X,Xp,is_claim");
    assert_eq!(text.lines().count(), path.len() + 1);
}
