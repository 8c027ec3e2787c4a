use ruinlab_core::quadrature::{adaptive, GaussLegendre};
use ruinlab_core::stats::{ks_statistic, linspace, logspace};
use ruinlab_core::yor::*;
use ruinlab_core::Error;

/// `E[A_t | B_t = x]` from the Brownian bridge: `∫_0^t exp(2sx/t + 2s(t−s)/t) ds`.
fn bridge_mean(t: f64, x: f64) -> f64 {
    adaptive(
        |s: f64| (2.0 * s * x / t + 2.0 * s * (t - s) / t).exp(),
        0.0,
        t,
        1e-13,
        1e-13,
        500,
    )
    .value
}

/// `E[A_t² | B_t = x]` from the bridge's Gaussian law.
fn bridge_second_moment(t: f64, x: f64) -> f64 {
    let gl = GaussLegendre::<f64>::new(40);
    let mut acc = 0.0;
    for (r, wr) in gl.mapped(0.0, t) {
        for (s, ws) in gl.mapped(0.0, r) {
            let var = s * (t - s) / t + r * (t - r) / t + 2.0 * s * (t - r) / t;
            acc += wr * ws * (2.0 * x * (s + r) / t + 2.0 * var).exp();
        }
    }
    2.0 * acc
}

#[test]
fn density_is_nonnegative_within_its_error() {
    for t in [0.5, 1.0, 2.0] {
        let xs = linspace(-1.5, 1.5, 6);
        let g = YorDensityGrid::build(t, &xs, 1e-3, 50.0, 40).unwrap();
        assert!(g.min_lower_slack() >= 0.0, "t={t}: {}", g.min_lower_slack());
        assert!(g.defects.iter().all(|d| d.abs() < 1e-6), "{:?}", g.defects);
    }
}

#[test]
fn normalizes_to_one() {
    for t in [0.5, 1.0, 2.0, 4.0] {
        for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let d = normalization_defect(t, x).unwrap();
            assert!(d.abs() < 1e-6, "t={t} x={x}: {d}");
        }
    }
}

#[test]
fn conditional_moments_match_bridge() {
    for (t, x) in [(1.0, 0.0), (1.0, -1.0), (1.0, 1.0), (2.0, -0.5), (0.5, 0.7)] {
        let m1 = conditional_expectation(t, x, 1200, |u| u).unwrap();
        let e1 = bridge_mean(t, x);
        assert!((m1 - e1).abs() < 1e-6 * e1, "t={t} x={x}: {m1} vs {e1}");
        let m2 = conditional_expectation(t, x, 1200, |u| u * u).unwrap();
        let e2 = bridge_second_moment(t, x);
        assert!((m2 - e2).abs() < 1e-5 * e2, "t={t} x={x}: {m2} vs {e2}");
    }
    assert!((bridge_mean(1.0, 0.0) - 1.41069).abs() < 1e-5);
}

#[test]
fn reported_error_covers_refinement_change() {
    let coarse = ThetaOptions::<f64>::default();
    let fine = ThetaOptions { depth: 4, ..coarse };
    for (r, t) in [(0.5, 0.3), (1.0, 1.0), (3.0, 0.5), (0.05, 4.0)] {
        let a = theta_with(r, t, &coarse).unwrap();
        let b = theta_with(r, t, &fine).unwrap();
        assert!(
            (a.value - b.value).abs() <= a.error + b.error,
            "r={r} t={t}: {a:?} {b:?}"
        );
        assert_eq!(a.method, ThetaMethod::OscillatorySubdivision);
    }
}

#[test]
fn small_times_are_refused_by_name() {
    match theta(1.0f64, 0.1) {
        Err(Error::SmallTime { t, t_min }) => assert!(t == 0.1 && t_min == DEFAULT_T_MIN),
        other => panic!("{other:?}"),
    }
    let opts = ThetaOptions {
        t_min: 0.05,
        ..ThetaOptions::default()
    };
    // Below the default floor the cancellation error shows in the bound.
    let th = theta_with(1.0f64, 0.1, &opts);
    if let Ok(th) = th {
        assert!(th.error > 1e-8 * th.value.abs());
    }
}

#[test]
fn scaled_density_matches_oracle_mean() {
    for (sigma, alpha) in [(0.5, 0.0), (1.0, 0.2), (1.0, -0.2)] {
        let t = 1.0;
        let s = Scaling::new(sigma, alpha, t).unwrap();
        let x = alpha * t;
        // Conditional mean of the scaled functional from the standard one.
        let m = conditional_expectation(s.tau(), x, 1200, |u| u).unwrap() / (sigma * sigma);
        let direct = adaptive(
            |r: f64| (2.0 * r * x / t + 2.0 * sigma * sigma * r * (t - r) / t).exp(),
            0.0,
            t,
            1e-13,
            1e-13,
            500,
        )
        .value;
        assert!((m - direct).abs() < 1e-6 * direct, "σ={sigma} α={alpha}: {m} {direct}");
        // And from simulation, conditioning on a thin slab around x.
        let spec = OracleSpec { sigma, alpha, dt: 1e-3 };
        let (sum, n) = oracle_fold(
            &spec,
            &[t],
            200_000,
            13,
            || (0.0, 0u64),
            |acc, s| {
                if (s[0].1 - x).abs() < 0.05 * sigma {
                    acc.0 += s[0].0;
                    acc.1 += 1;
                }
            },
            |a, b| {
                a.0 += b.0;
                a.1 += b.1;
            },
        )
        .unwrap();
        let mc = sum / n as f64;
        assert!(
            (mc - direct).abs() < 0.05 * direct,
            "σ={sigma} α={alpha}: {mc} {direct}"
        );
    }
}

#[test]
fn oracle_functional_mean() {
    let spec = OracleSpec {
        sigma: 1.0,
        alpha: 0.0,
        dt: 1e-3,
    };
    let t = 1.0;
    let (sum, n) = oracle_fold(
        &spec,
        &[t],
        50_000,
        3,
        || (0.0, 0u64),
        |a, s| {
            a.0 += s[0].0;
            a.1 += 1;
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
        },
    )
    .unwrap();
    let exact = ((2.0f64 * t).exp() - 1.0) / 2.0;
    assert!((sum / n as f64 - exact).abs() < 0.03 * exact);
}

#[test]
fn terminal_marginal_is_gaussian() {
    let (sigma, alpha, t) = (0.8, -0.3, 1.0);
    let spec = OracleSpec { sigma, alpha, dt: 1e-3 };
    let mut xs = oracle_fold(
        &spec,
        &[t],
        4000,
        5,
        Vec::new,
        |v, s| v.push(s[0].1),
        |a, b| a.extend(b),
    )
    .unwrap();
    let s = Scaling::new(sigma, alpha, t).unwrap();
    let cdf = |x: f64| ruinlab_core::num::norm_cdf((x - alpha * t) / s.tau().sqrt());
    assert!(ks_statistic(&mut xs, cdf) < 1.63 / (xs.len() as f64).sqrt());
}

#[test]
fn tiny_volatility_concentrates_near_deterministic_value() {
    // σ → 0: A_t → (e^{2αt} − 1)/2α.
    let (sigma, alpha, t) = (1e-8, 0.1, 1.0);
    let s = Scaling::new(sigma, alpha, t).unwrap();
    assert!(s.tau() < DEFAULT_T_MIN);
    assert!(matches!(
        yor_density_scaled(sigma, alpha, t, alpha * t, 1.1),
        Err(Error::SmallTime { .. })
    ));
    let spec = OracleSpec { sigma, alpha, dt: 1e-3 };
    let a = oracle_fold(&spec, &[t], 100, 1, Vec::new, |v, s| v.push(s[0].0), |a, b| a.extend(b)).unwrap();
    let exact = ((2.0 * alpha * t).exp() - 1.0) / (2.0 * alpha);
    assert!(a.iter().all(|v| (v - exact).abs() < 1e-6));
}

#[test]
fn single_precision_agrees() {
    for (x, u) in [(0.0f32, 1.0f32), (-0.5, 0.5), (0.5, 3.0)] {
        let a = yor_density_generic(1.0f32, x, u).unwrap() as f64;
        let b = yor_density(1.0, x as f64, u as f64).unwrap();
        assert!((a - b).abs() < 1e-3 * b, "{a} {b}");
    }
}

#[test]
fn grid_round_trips_through_binary() {
    let g = YorDensityGrid::build(1.0, &[-0.5, 0.5], 0.1, 10.0, 8).unwrap();
    let grid = g.to_grid();
    let mut buf = Vec::new();
    grid.write_binary(&mut buf).unwrap();
    let back = ruinlab_core::io::Grid::read_binary(buf.as_slice()).unwrap();
    assert_eq!(back, grid);
    assert_eq!(g.us, logspace(0.1, 10.0, 7));
}
