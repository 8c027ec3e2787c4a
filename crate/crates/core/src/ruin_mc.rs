//! Finite-horizon ruin probabilities by simulation.
//!
//! Path `i` of a run with master seed `s` always uses the streams of
//! `SeedSpec::new(s, i)`, so runs with different parameters share random
//! numbers path by path, and results do not depend on the thread count.

use std::ops::ControlFlow;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv};
use crate::model::{ClaimLaw, InvestmentModel, PremiumSpec, RiskParams, RuinRegime};
use crate::paths::{self, classical_ruin_time, envelope_profile, SchemeConfig};
use crate::processes::{std_normal, CountingProcess, JumpLaw, LevyJumpSpec, SeedSpec, Substream};
use crate::stats::{quantile, wilson, Z95};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ruined: u64,
    pub n_paths: u64,
    pub horizon: f64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    pub fn from_counts(ruined: u64, n_paths: u64, horizon: f64, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson(ruined, n_paths, Z95);
        Self {
            estimate: ruined as f64 / n_paths.max(1) as f64,
            ci_low,
            ci_high,
            ruined,
            n_paths,
            horizon,
            seed,
        }
    }

    /// Binomial standard error of the estimate.
    pub fn stderr(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.n_paths as f64).sqrt()
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < 100 {
        return Err(Error::domain(
            "n_paths",
            format!("need at least 100 paths, got {n_paths}"),
        ));
    }
    Ok(())
}

fn is_identity(inv: &InvestmentModel<f64>) -> bool {
    inv.sigma() == 0.0 && inv.alpha() == 0.0 && inv.jumps().is_none_or(|j| j.intensity == 0.0)
}

/// Ruin time of every path (in path order), `None` if it survives `horizon`.
pub fn ruin_times(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "horizon",
            format!("must be positive and finite, got {horizon}"),
        ));
    }
    // Without investment the capital only falls at claims; skip the grid.
    let classical = is_identity(inv);
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let stream = SeedSpec::new(seed, i);
            if classical {
                Ok(classical_ruin_time(params, horizon, stream))
            } else {
                paths::first_ruin_time(params, inv, cfg, horizon, stream)
            }
        })
        .collect()
}

/// Fraction of paths ruined by `horizon`, with a Wilson 95% interval.
pub fn estimate_ruin(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_paths(n_paths)?;
    let times = ruin_times(params, inv, cfg, horizon, n_paths, seed)?;
    let ruined = times.iter().filter(|t| t.is_some()).count() as u64;
    Ok(MonteCarloEstimate::from_counts(ruined, n_paths as u64, horizon, seed))
}

/// Estimates at each horizon of an increasing ladder from one set of paths.
pub fn ladder_estimates(times: &[Option<f64>], ladder: &[f64], seed: u64) -> Vec<MonteCarloEstimate> {
    ladder
        .iter()
        .map(|&h| {
            let k = times.iter().filter(|t| t.is_some_and(|t| t <= h)).count() as u64;
            MonteCarloEstimate::from_counts(k, times.len() as u64, h, seed)
        })
        .collect()
}

/// Distribution of the dilation envelope `e^{E_t}u + c̄∫e^{E_s}ds` at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeStats {
    pub horizon: f64,
    pub n_paths: usize,
    pub median_supremum: f64,
    pub q99_supremum: f64,
    /// Median of the terminal dilation term `e^{E_T} u`.
    pub median_dilation: f64,
}

/// Envelope statistics over paths `0..n_paths` of `seed`.
pub fn envelope_statistics(
    inv: &InvestmentModel<f64>,
    u: f64,
    c_bar: f64,
    ladder: &[f64],
    cfg: &SchemeConfig,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<EnvelopeStats>> {
    let profiles: Vec<Vec<paths::EnvelopePoint>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| envelope_profile(inv, u, c_bar, ladder, cfg, SeedSpec::new(seed, i)))
        .collect::<Result<_>>()?;
    Ok(ladder
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let mut sup: Vec<f64> = profiles.iter().map(|p| p[k].supremum).collect();
            let mut dil: Vec<f64> = profiles.iter().map(|p| p[k].dilation).collect();
            sup.sort_by(f64::total_cmp);
            dil.sort_by(f64::total_cmp);
            EnvelopeStats {
                horizon: h,
                n_paths,
                median_supremum: quantile(&sup, 0.5),
                q99_supremum: quantile(&sup, 0.99),
                median_dilation: quantile(&dil, 0.5),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertainRuinReport {
    pub variant: String,
    pub regime: RuinRegime,
    pub estimates: Vec<MonteCarloEstimate>,
    pub envelope: Vec<EnvelopeStats>,
    pub warnings: Vec<String>,
}

impl CertainRuinReport {
    /// Frequencies nondecreasing along the ladder, allowing CI overlap.
    pub fn is_monotone(&self) -> bool {
        self.estimates
            .windows(2)
            .all(|w| w[1].estimate >= w[0].estimate || w[0].overlaps(&w[1]))
    }

    pub fn final_estimate(&self) -> &MonteCarloEstimate {
        self.estimates.last().expect("nonempty ladder")
    }
}

/// Number of paths used for envelope statistics in the experiment harness.
pub const ENVELOPE_PATHS: usize = 256;

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[0] < w[1])) || !(ladder[0] > 0.0) {
        return Err(Error::domain(
            "horizons",
            "ladder must be nonempty, positive and strictly increasing",
        ));
    }
    Ok(())
}

/// Ruin frequencies along a horizon ladder, plus envelope statistics.
pub fn certain_ruin_experiment(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    ladder: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<CertainRuinReport> {
    run_variant("base", params, inv, cfg, ladder, n_paths, seed)
}

fn run_variant(
    name: &str,
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    ladder: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<CertainRuinReport> {
    check_paths(n_paths)?;
    check_ladder(ladder)?;
    let mut warnings = Vec::new();
    if !params.claims.has_unbounded_support() {
        warnings.push("claim law has bounded support; certain ruin is not predicted".to_string());
    }
    let horizon = *ladder.last().unwrap();
    let times = ruin_times(params, inv, cfg, horizon, n_paths, seed)?;
    let estimates = ladder_estimates(&times, ladder, seed);
    let envelope = envelope_statistics(
        inv,
        params.u,
        params.premium.bound(),
        ladder,
        cfg,
        ENVELOPE_PATHS.min(n_paths),
        seed,
    )?;
    Ok(CertainRuinReport {
        variant: name.to_string(),
        regime: inv.regime(),
        estimates,
        envelope,
        warnings,
    })
}

/// One row of the corollary matrix.
#[derive(Debug, Clone)]
pub struct Variant {
    pub name: String,
    pub params: RiskParams<f64>,
    pub inv: InvestmentModel<f64>,
}

impl Variant {
    pub fn new(name: &str, params: RiskParams<f64>, inv: InvestmentModel<f64>) -> Self {
        Self {
            name: name.into(),
            params,
            inv,
        }
    }

    /// Bounded premium `c(1 + ½ sin t)`, bound `1.5c`.
    pub fn bounded_premium(base: &RiskParams<f64>, inv: &InvestmentModel<f64>) -> Result<Self> {
        let c = match base.premium {
            PremiumSpec::Constant(c) => c,
            _ => return Err(Error::domain("premium", "variant needs a constant base premium")),
        };
        let mut params = base.clone();
        params.premium = PremiumSpec::Sinusoidal {
            base: c,
            amplitude: 0.5,
            frequency: 1.0,
        };
        Ok(Self::new("bounded-premium", params, inv.clone()))
    }

    /// Renewal arrivals with LogNormal inter-arrival times of the same mean.
    pub fn lognormal_renewal(base: &RiskParams<f64>, inv: &InvestmentModel<f64>, scale: f64) -> Result<Self> {
        let lambda = base
            .claim_intensity()
            .ok_or_else(|| Error::domain("arrivals", "variant needs a claim intensity"))?;
        let mut params = base.clone();
        params.arrivals = CountingProcess::Renewal {
            inter_arrival: ClaimLaw::lognormal_with_mean(1.0 / lambda, scale)?,
        };
        Ok(Self::new("lognormal-renewal", params, inv.clone()))
    }

    /// Exponential-Lévy investment: the base Brownian part plus compensated
    /// Normal jumps.
    pub fn levy_jumps(base: &RiskParams<f64>, inv: &InvestmentModel<f64>, jumps: LevyJumpSpec<f64>) -> Result<Self> {
        let inv = InvestmentModel::exp_levy(inv.sigma(), inv.alpha(), jumps)?;
        Ok(Self::new("levy-jumps", base.clone(), inv))
    }

    /// The three standard variants around a base model.
    pub fn corollary_set(base: &RiskParams<f64>, inv: &InvestmentModel<f64>) -> Result<Vec<Self>> {
        Ok(vec![
            Self::bounded_premium(base, inv)?,
            Self::lognormal_renewal(base, inv, 0.5)?,
            Self::levy_jumps(
                base,
                inv,
                LevyJumpSpec {
                    intensity: 0.5,
                    law: JumpLaw::Normal { mean: -0.02, sd: 0.1 },
                },
            )?,
        ])
    }
}

/// One report per variant; every variant uses the same seed.
pub fn corollary_matrix(
    variants: &[Variant],
    cfg: &SchemeConfig,
    ladder: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<CertainRuinReport>> {
    variants
        .iter()
        .map(|v| run_variant(&v.name, &v.params, &v.inv, cfg, ladder, n_paths, seed))
        .collect()
}

pub const REPORT_HEADER: [&str; 7] = ["variant", "horizon", "n", "ruin_freq", "ci_low", "ci_high", "regime"];

pub fn report_rows(reports: &[CertainRuinReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.estimates.iter().map(move |e| {
                vec![
                    r.variant.clone(),
                    fmt_f64(e.horizon),
                    e.n_paths.to_string(),
                    fmt_f64(e.estimate),
                    fmt_f64(e.ci_low),
                    fmt_f64(e.ci_high),
                    r.regime.as_str().to_string(),
                ]
            })
        })
        .collect()
}

pub fn write_report(path: &Path, reports: &[CertainRuinReport]) -> Result<()> {
    write_csv(path, &REPORT_HEADER, report_rows(reports))
}

/// Ruin frequencies of the Brownian risk process `u + d t + √v W_t`,
/// monitored continuously: on each step the minimum of the Brownian bridge
/// between the endpoints is sampled exactly. One set of paths serves every
/// initial capital in `us`.
pub fn diffusion_ruin(
    drift: f64,
    variance: f64,
    us: &[f64],
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<MonteCarloEstimate>> {
    check_paths(n_paths)?;
    if !(variance > 0.0) {
        return Err(Error::domain("variance", "must be positive"));
    }
    if us.iter().any(|&u| !(u >= 0.0)) {
        return Err(Error::domain("u", "initial capital must be nonnegative"));
    }
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::domain("dt", "step and horizon must be positive"));
    }
    let steps = (horizon / dt).round().max(1.0) as u64;
    let sd = (variance * dt).sqrt();
    let u_max = us.iter().copied().fold(0.0, f64::max);
    // Per path: the running minimum of the driftless-from-zero process S_t = X_t − u.
    let minima: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let stream = SeedSpec::new(seed, i);
            let mut normals = stream.rng(Substream::Brownian);
            let mut unif = stream.rng(Substream::Auxiliary(0));
            let mut s: f64 = 0.0;
            let mut min: f64 = 0.0;
            for _ in 0..steps {
                let next = s + drift * dt + sd * std_normal(&mut normals);
                let v: f64 = unif.random();
                // Minimum of a bridge from s to next over a step of variance v·dt.
                let gap = next - s;
                let m = 0.5 * (s + next - (gap * gap - 2.0 * variance * dt * (1.0 - v).ln()).sqrt());
                min = min.min(m);
                s = next;
                if min < -u_max {
                    break;
                }
            }
            min
        })
        .collect();
    Ok(us
        .iter()
        .map(|&u| {
            let k = minima.iter().filter(|&&m| m < -u).count() as u64;
            MonteCarloEstimate::from_counts(k, n_paths as u64, horizon, seed)
        })
        .collect())
}

/// Sample mean and variance of the aggregate claims `Σ_{k ≤ N_t} Y_k`.
pub fn aggregate_claim_moments(params: &RiskParams<f64>, t: f64, n_paths: usize, seed: u64) -> (f64, f64) {
    let sums: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            crate::processes::Claims::new(&params.arrivals, &params.claims, SeedSpec::new(seed, i))
                .take_while(|&(s, _)| s <= t)
                .map(|(_, y)| y)
                .sum()
        })
        .collect();
    let m = crate::stats::Moments::of(&sums);
    (m.mean, m.variance)
}

/// Streams the nodes of each path through [`paths::check_boundedness`]'s
/// inequality without storing them; returns per-path results in order.
pub fn boundedness_sweep(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    n_paths: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Vec<paths::Boundedness>> {
    let c_bar = params.premium.bound();
    let u = params.u;
    let scheme = cfg.scheme;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut max_violation: f64 = 0.0;
            let mut min_slack = f64::INFINITY;
            paths::stream_invested(params, inv, cfg, horizon, SeedSpec::new(seed, i), |n| {
                let e = n.env.exp();
                let bound = match scheme {
                    paths::Scheme::DilationExact => e * u + c_bar * n.unit_integral,
                    _ => e * (u + c_bar * n.unit_integral),
                };
                let slack = bound - n.xp;
                min_slack = min_slack.min(slack);
                if -slack > max_violation {
                    max_violation = -slack;
                }
                ControlFlow::Continue(())
            })?;
            Ok(paths::Boundedness {
                holds: max_violation <= tolerance,
                max_violation,
                min_slack,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Scheme;

    #[test]
    fn huge_capital_never_ruins() {
        let p = RiskParams::poisson(1e6, 1.2, 1.0, ClaimLaw::exponential(1.0).unwrap()).unwrap();
        let e = estimate_ruin(
            &p,
            &InvestmentModel::none(),
            &SchemeConfig::new(0.1, Scheme::DilationExact),
            10.0,
            1000,
            1,
        )
        .unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.ci_high < 0.01);
    }

    #[test]
    fn too_few_paths() {
        let p = RiskParams::poisson(1.0, 1.2, 1.0, ClaimLaw::exponential(1.0).unwrap()).unwrap();
        let r = estimate_ruin(
            &p,
            &InvestmentModel::none(),
            &SchemeConfig::new(0.1, Scheme::DilationExact),
            1.0,
            99,
            1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn diffusion_minimum_never_above_endpoints() {
        let e = diffusion_ruin(0.0, 1.0, &[0.0], 1.0, 0.5, 100, 3).unwrap();
        // Starting at zero, the bridge minimum is strictly negative almost surely.
        assert_eq!(e[0].estimate, 1.0);
    }
}
