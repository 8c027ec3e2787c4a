//! Executes one experiment into a run directory.

use std::path::{Path, PathBuf};

use ruinlab_core::density::{
    cf_crosscheck, compare_with_samples, ruin_at_t_row, ruin_probability_at, sample_pairs, write_ruin_at_t,
    DensityOptions, TransitionDensityGrid,
};
use ruinlab_core::io::{fmt_f64, write_csv};
use ruinlab_core::model::diffusion_limit_ruin;
use ruinlab_core::paths::{check_boundedness, simulate_invested, Scheme};
use ruinlab_core::processes::SeedSpec;
use ruinlab_core::ruin_mc::{
    boundedness_sweep, certain_ruin_experiment, corollary_matrix, diffusion_ruin, ladder_estimates, ruin_times,
    write_report, CertainRuinReport, MonteCarloEstimate, Variant,
};
use ruinlab_core::stats::{linspace, Histogram1D};
use ruinlab_core::yor::{self, conditional_quantile_edges, oracle_slab_histograms, slab_bin_masses, YorDensityGrid};

use crate::config::{core_error, Experiment, ManifestInfo, RunConfig};
use crate::{io_error, CliError};

pub const MANIFEST: &str = "manifest.toml";
pub const CHECKS: &str = "checks.csv";
pub const SUMMARY: &str = "summary.txt";
pub const CHECKS_HEADER: [&str; 5] = ["name", "value", "op", "tolerance", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    AtMost,
    AtLeast,
}

impl Op {
    pub fn as_str(&self) -> &'static str {
        match self {
            Op::AtMost => "<=",
            Op::AtLeast => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "<=" => Some(Op::AtMost),
            ">=" => Some(Op::AtLeast),
            _ => None,
        }
    }

    pub fn holds(&self, value: f64, tolerance: f64) -> bool {
        match self {
            Op::AtMost => value <= tolerance,
            Op::AtLeast => value >= tolerance,
        }
    }
}

/// One pass/fail line of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub op: Op,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, op: Op, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            op,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.op.holds(self.value, self.tolerance)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} = {} {} {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.op.as_str(),
            self.tolerance
        )
    }
}

/// Where and what a run wrote.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: String,
    pub checks: Vec<Check>,
}

struct Out<'a> {
    dir: &'a Path,
    summary: String,
    checks: Vec<Check>,
}

impl Out<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv(&self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let p = self.path(name);
        write_csv(&p, header, rows).map_err(|e| io_error(&p, e))
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.summary.push_str(s.as_ref());
        self.summary.push('\n');
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

fn numerical(e: ruinlab_core::Error) -> CliError {
    if e.is_numerical() {
        CliError::Numerical(e.to_string())
    } else {
        CliError::validation("config", e.to_string())
    }
}

/// Default run directory under `root`.
pub fn default_dir(root: &Path, cfg: &RunConfig) -> PathBuf {
    root.join(format!("{}-{}", cfg.experiment.as_str(), cfg.seed))
}

/// Runs `cfg` into `dir`, writing the manifest, result files, `checks.csv`
/// and `summary.txt`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut manifest = cfg.clone();
    manifest.manifest = Some(ManifestInfo {
        tool: "ruinlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    });
    let mp = dir.join(MANIFEST);
    std::fs::write(&mp, manifest.to_toml()).map_err(|e| io_error(&mp, e))?;

    let mut out = Out {
        dir,
        summary: String::new(),
        checks: Vec::new(),
    };
    out.line(format!("experiment: {}", cfg.experiment.as_str()));
    out.line(format!("seed: {}", cfg.seed));
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &mut out)?,
        Experiment::Ruin => ruin(cfg, &mut out)?,
        Experiment::CertainRuin => certain_ruin(cfg, &mut out)?,
        Experiment::Corollaries => corollaries(cfg, &mut out)?,
        Experiment::Theta => theta(cfg, &mut out)?,
        Experiment::YorDensity => yor_density(cfg, &mut out)?,
        Experiment::TransitionDensity => transition_density(cfg, &mut out)?,
        Experiment::RuinAtT => ruin_at_t(cfg, &mut out)?,
        Experiment::DiffusionLimit => diffusion_limit(cfg, &mut out)?,
        Experiment::CfCheck => cf_check(cfg, &mut out)?,
    }
    let rows = out
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                fmt_f64(c.value),
                c.op.as_str().to_string(),
                fmt_f64(c.tolerance),
                if c.pass() { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    out.csv(CHECKS, &CHECKS_HEADER, rows)?;
    if !out.checks.is_empty() {
        out.line("checks:");
        let lines: Vec<String> = out.checks.iter().map(|c| format!("  {}", c.line())).collect();
        for l in lines {
            out.line(l);
        }
    }
    let sp = dir.join(SUMMARY);
    std::fs::write(&sp, &out.summary).map_err(|e| io_error(&sp, e))?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary: out.summary,
        checks: out.checks,
    })
}

fn horizon(cfg: &RunConfig) -> f64 {
    *cfg.numerics.horizons.last().expect("validated nonempty")
}

fn estimate_table(out: &mut Out, estimates: &[MonteCarloEstimate]) {
    out.line(format!(
        "{:>12} {:>8} {:>10} {:>22}",
        "horizon", "n", "ruin_freq", "95% CI"
    ));
    for e in estimates {
        out.line(format!(
            "{:>12} {:>8} {:>10.4} {:>10.4} .. {:.4}",
            e.horizon, e.n_paths, e.estimate, e.ci_low, e.ci_high
        ));
    }
}

fn simulate(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let params = cfg.risk_params()?;
    let inv = cfg.investment_model()?;
    let scheme = cfg.scheme_config()?;
    let t = horizon(cfg);
    let c_bar = params.premium.bound();
    let tol = cfg.tolerances.boundedness_rel * (params.u + c_bar * t);
    let mut worst: f64 = 0.0;
    out.line(format!(
        "{:>6} {:>8} {:>8} {:>14}",
        "path", "nodes", "claims", "ruined_at"
    ));
    for i in 0..cfg.numerics.dump_paths {
        let path = simulate_invested(&params, &inv, &scheme, t, SeedSpec::new(cfg.seed, i))
            .map_err(|e| core_error("numerics", e))?;
        let p = out.path(&format!("path_{i:04}.csv"));
        path.write_csv(&p).map_err(|e| io_error(&p, e))?;
        out.line(format!(
            "{:>6} {:>8} {:>8} {:>14}",
            i,
            path.len(),
            path.claims.len(),
            path.ruined_at.map_or("-".to_string(), |t| format!("{t:.4}"))
        ));
        if scheme.scheme != Scheme::EulerSde {
            let b = check_boundedness(&path, c_bar, tol).map_err(numerical)?;
            worst = worst.max(b.max_violation);
        }
    }
    if scheme.scheme != Scheme::EulerSde && cfg.numerics.dump_paths > 0 {
        out.check(Check::new("boundedness_max_violation", worst, Op::AtMost, tol));
    }
    Ok(())
}

fn ruin(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let params = cfg.risk_params()?;
    let inv = cfg.investment_model()?;
    let scheme = cfg.scheme_config()?;
    let times = ruin_times(
        &params,
        &inv,
        &scheme,
        horizon(cfg),
        cfg.numerics.n_paths as usize,
        cfg.seed,
    )
    .map_err(|e| core_error("numerics", e))?;
    let est = ladder_estimates(&times, &cfg.numerics.horizons, cfg.seed);
    let rows = est
        .iter()
        .map(|e| {
            vec![
                fmt_f64(e.horizon),
                e.n_paths.to_string(),
                e.ruined.to_string(),
                fmt_f64(e.estimate),
                fmt_f64(e.ci_low),
                fmt_f64(e.ci_high),
            ]
        })
        .collect();
    out.csv(
        "ruin.csv",
        &["horizon", "n", "ruined", "ruin_freq", "ci_low", "ci_high"],
        rows,
    )?;
    out.line(format!("regime: {}", inv.regime().as_str()));
    estimate_table(out, &est);
    Ok(())
}

fn write_envelope(out: &Out, reports: &[CertainRuinReport]) -> Result<(), CliError> {
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.envelope.iter().map(move |e| {
                vec![
                    r.variant.clone(),
                    fmt_f64(e.horizon),
                    e.n_paths.to_string(),
                    fmt_f64(e.median_supremum),
                    fmt_f64(e.q99_supremum),
                    fmt_f64(e.median_dilation),
                ]
            })
        })
        .collect();
    out.csv(
        "envelope.csv",
        &[
            "variant",
            "horizon",
            "n",
            "median_supremum",
            "q99_supremum",
            "median_dilation",
        ],
        rows,
    )
}

fn report_checks(cfg: &RunConfig, out: &mut Out, r: &CertainRuinReport) {
    out.line(format!("variant: {} (regime {})", r.variant, r.regime.as_str()));
    estimate_table(out, &r.estimates);
    for w in &r.warnings {
        out.line(format!("warning: {w}"));
    }
    out.check(Check::new(
        format!("{}.final_ruin_freq", r.variant),
        r.final_estimate().estimate,
        Op::AtLeast,
        cfg.tolerances.min_final_ruin,
    ));
    out.check(Check::new(
        format!("{}.monotone", r.variant),
        if r.is_monotone() { 1.0 } else { 0.0 },
        Op::AtLeast,
        1.0,
    ));
}

fn certain_ruin(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let params = cfg.risk_params()?;
    let inv = cfg.investment_model()?;
    let scheme = cfg.scheme_config()?;
    let n = cfg.numerics.n_paths as usize;
    let report = certain_ruin_experiment(&params, &inv, &scheme, &cfg.numerics.horizons, n, cfg.seed)
        .map_err(|e| core_error("numerics", e))?;
    let reports = [report];
    let p = out.path("report.csv");
    write_report(&p, &reports).map_err(|e| io_error(&p, e))?;
    write_envelope(out, &reports)?;
    report_checks(cfg, out, &reports[0]);
    if cfg.numerics.boundedness_paths > 0 {
        let t = horizon(cfg);
        let tol = cfg.tolerances.boundedness_rel * (params.u + params.premium.bound() * t);
        let res = boundedness_sweep(
            &params,
            &inv,
            &scheme,
            t,
            cfg.numerics.boundedness_paths as usize,
            cfg.seed,
            tol,
        )
        .map_err(numerical)?;
        let worst = res.iter().map(|b| b.max_violation).fold(0.0, f64::max);
        let failing = res.iter().filter(|b| !b.holds).count();
        out.line(format!(
            "boundedness: {} paths, {failing} violating, max violation {worst:e}",
            res.len()
        ));
        out.check(Check::new("boundedness_max_violation", worst, Op::AtMost, tol));
    }
    Ok(())
}

fn corollaries(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let params = cfg.risk_params()?;
    let inv = cfg.investment_model()?;
    let scheme = cfg.scheme_config()?;
    let variants = Variant::corollary_set(&params, &inv).map_err(|e| core_error("model", e))?;
    let reports = corollary_matrix(
        &variants,
        &scheme,
        &cfg.numerics.horizons,
        cfg.numerics.n_paths as usize,
        cfg.seed,
    )
    .map_err(|e| core_error("numerics", e))?;
    let p = out.path("report.csv");
    write_report(&p, &reports).map_err(|e| io_error(&p, e))?;
    write_envelope(out, &reports)?;
    for r in &reports {
        report_checks(cfg, out, r);
    }
    Ok(())
}

/// Message for a refused small-time evaluation.
fn refusal(e: ruinlab_core::Error) -> CliError {
    match e {
        ruinlab_core::Error::SmallTime { t, t_min } => CliError::Numerical(format!(
            "small-t refusal: Θ is not evaluated at standard time {t} < t_min = {t_min} because the oscillatory integral cancels to noise; \
             use the Monte Carlo oracle instead (yor-density with yor.fallback = true and yor.n_oracle > 0)"
        )),
        e => numerical(e),
    }
}

fn theta(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let th = yor::theta(cfg.yor.r, cfg.yor.t).map_err(refusal)?;
    out.csv(
        "theta.csv",
        &["r", "t", "value", "error", "method"],
        vec![vec![
            fmt_f64(th.r),
            fmt_f64(th.t),
            fmt_f64(th.value),
            fmt_f64(th.error),
            th.method.as_str().to_string(),
        ]],
    )?;
    out.line(format!("theta(r={}, t={}) = {} ± {:e}", th.r, th.t, th.value, th.error));
    Ok(())
}

/// Core errors from the simulation oracles, with the step renamed to its config key.
fn oracle_error(section: &str, e: ruinlab_core::Error) -> CliError {
    match e {
        ruinlab_core::Error::Domain { param: "dt", reason } => {
            CliError::validation(&format!("{section}.oracle_dt"), reason)
        }
        e => core_error(section, e),
    }
}

/// Slab-conditioned oracle histograms for every `x`, or `None` when disabled.
fn yor_oracle(cfg: &RunConfig, edges: &[Vec<f64>]) -> Result<Vec<Histogram1D>, CliError> {
    let y = &cfg.yor;
    let mut hs = oracle_slab_histograms(
        &[y.t],
        &y.xs,
        y.slab,
        &[edges.to_vec()],
        y.n_oracle,
        y.oracle_dt,
        cfg.seed,
    )
    .map_err(|e| oracle_error("yor", e))?;
    Ok(hs.remove(0))
}

fn yor_density(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let y = &cfg.yor;
    let n_bins = y.n_bins as usize;
    if y.t < yor::DEFAULT_T_MIN {
        if !y.fallback {
            return Err(refusal(ruinlab_core::Error::SmallTime {
                t: y.t,
                t_min: yor::DEFAULT_T_MIN,
            }));
        }
        // Simulated conditional law on log-spaced bins.
        let edges: Vec<Vec<f64>> =
            y.xs.iter()
                .map(|_| ruinlab_core::stats::logspace(y.u_min, y.u_max, n_bins))
                .collect();
        let hs = yor_oracle(cfg, &edges)?;
        let mut rows = Vec::new();
        for (x, h) in y.xs.iter().zip(&hs) {
            let n = h.total().max(1) as f64;
            for (k, w) in h.edges.windows(2).enumerate() {
                let p = h.counts[k] as f64 / n;
                let width = w[1] - w[0];
                rows.push(vec![
                    fmt_f64(y.t),
                    fmt_f64(*x),
                    fmt_f64(w[0]),
                    fmt_f64(w[1]),
                    fmt_f64(p / width),
                    fmt_f64((p * (1.0 - p) / n).sqrt() / width),
                ]);
            }
            out.line(format!("x = {x}: {} oracle samples in the slab", h.total()));
        }
        out.csv(
            "yor_density_mc.csv",
            &["t", "x", "u_lo", "u_hi", "density", "stderr"],
            rows,
        )?;
        out.line("method: simulated fallback (small-t regime)");
        return Ok(());
    }
    let grid = YorDensityGrid::build(y.t, &y.xs, y.u_min, y.u_max, y.n_u as usize).map_err(|e| core_error("yor", e))?;
    let g = grid.to_grid();
    let p = out.path("yor_density.csv");
    g.save_csv(&p, "x", "u", Some(&grid.errors))
        .map_err(|e| io_error(&p, e))?;
    let p = out.path("yor_density.bin");
    g.save_binary(&p).map_err(|e| io_error(&p, e))?;
    out.csv(
        "defects.csv",
        &["t", "x", "normalization_defect"],
        y.xs.iter()
            .zip(&grid.defects)
            .map(|(x, d)| vec![fmt_f64(y.t), fmt_f64(*x), fmt_f64(*d)])
            .collect(),
    )?;
    let worst = grid.defects.iter().map(|d| d.abs()).fold(0.0, f64::max);
    out.line(format!(
        "grid: {} x {} cells, max |normalization defect| {worst:e}",
        y.xs.len(),
        grid.us.len()
    ));
    out.check(Check::new(
        "normalization_defect",
        worst,
        Op::AtMost,
        cfg.tolerances.normalization,
    ));
    out.check(Check::new(
        "min_value_plus_error",
        grid.min_lower_slack(),
        Op::AtLeast,
        0.0,
    ));
    if y.n_oracle > 0 {
        let edges: Vec<Vec<f64>> =
            y.xs.iter()
                .map(|&x| conditional_quantile_edges(y.t, x, n_bins, 0.005, 0.995))
                .collect::<Result<_, _>>()
                .map_err(numerical)?;
        let hs = yor_oracle(cfg, &edges)?;
        let mut rows = Vec::new();
        for ((&x, e), h) in y.xs.iter().zip(&edges).zip(&hs) {
            let dens = slab_bin_masses(y.t, x, y.slab, e).map_err(numerical)?;
            let emp = h.probabilities();
            let tv = ruinlab_core::stats::total_variation(&dens, &emp);
            rows.push(vec![fmt_f64(y.t), fmt_f64(x), h.total().to_string(), fmt_f64(tv)]);
            out.line(format!("x = {x}: oracle TV {tv:.5} over {} samples", h.total()));
            out.check(Check::new(
                format!("oracle_tv[x={x}]"),
                tv,
                Op::AtMost,
                cfg.tolerances.tv,
            ));
        }
        out.csv("oracle_tv.csv", &["t", "x", "n_slab", "tv"], rows)?;
    }
    Ok(())
}

fn density_options(cfg: &RunConfig) -> DensityOptions {
    DensityOptions {
        n_y: cfg.density.n_y as usize,
        ..DensityOptions::default()
    }
}

fn transition_density(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let d = &cfg.density;
    let p = cfg.diffusion_params(d.u)?;
    let conv = cfg.convention();
    let opts = density_options(cfg);
    let (z0, z1, x0, x1) = p.truncation_box(d.t);
    let grid = TransitionDensityGrid::build(
        &p,
        &conv,
        d.t,
        &linspace(z0, z1, d.nz as usize),
        &linspace(x0, x1, d.nx as usize),
        &opts,
    )
    .map_err(refusal)?;
    let g = grid.to_grid();
    let path = out.path("transition_density.csv");
    g.save_csv(&path, "z", "x", Some(&grid.errors))
        .map_err(|e| io_error(&path, e))?;
    let path = out.path("transition_density.bin");
    g.save_binary(&path).map_err(|e| io_error(&path, e))?;
    out.line(format!("convention: {}", conv.as_str()));
    out.line(format!(
        "grid mass: {} (y-quadrature defect {:e})",
        grid.total_mass, grid.quadrature_defect
    ));
    out.check(Check::new(
        "mass_defect",
        (grid.total_mass - 1.0).abs(),
        Op::AtMost,
        cfg.tolerances.mass,
    ));
    if d.n_oracle > 0 {
        let samples = sample_pairs(&p, d.t, d.n_oracle, d.oracle_dt, cfg.seed, cfg.representation())
            .map_err(|e| oracle_error("density", e))?;
        let cmp = compare_with_samples(&p, &conv, d.t, &samples, d.nz as usize, d.nx as usize, 0.005, &opts)
            .map_err(refusal)?;
        let nx = cmp.x_edges.len() - 1;
        let rows = (0..cmp.density.len() - 1)
            .map(|k| {
                let (i, j) = (k / nx, k % nx);
                vec![
                    fmt_f64(cmp.z_edges[i]),
                    fmt_f64(cmp.z_edges[i + 1]),
                    fmt_f64(cmp.x_edges[j]),
                    fmt_f64(cmp.x_edges[j + 1]),
                    fmt_f64(cmp.density[k]),
                    fmt_f64(cmp.empirical[k]),
                ]
            })
            .collect();
        out.csv(
            "oracle_comparison.csv",
            &["z_lo", "z_hi", "x_lo", "x_hi", "density_mass", "mc_freq"],
            rows,
        )?;
        out.line(format!("oracle TV: {:.5} over {} samples", cmp.tv, samples.len()));
        out.check(Check::new("oracle_tv", cmp.tv, Op::AtMost, cfg.tolerances.tv));
    }
    Ok(())
}

fn ruin_at_t(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let d = &cfg.density;
    let conv = cfg.convention();
    let opts = density_options(cfg);
    let mut rows = Vec::new();
    out.line(format!(
        "{:>8} {:>14} {:>12} {:>14}",
        "u", "ruin_prob", "err_budget", "mc"
    ));
    for &u in &d.us {
        let p = cfg.diffusion_params(u)?;
        let r = ruin_probability_at(&p, &conv, d.t, &opts).map_err(refusal)?;
        let mc = if d.n_oracle > 0 {
            let s = sample_pairs(&p, d.t, d.n_oracle, d.oracle_dt, cfg.seed, cfg.representation())
                .map_err(|e| oracle_error("density", e))?;
            let k = s.iter().filter(|v| v.0 <= 0.0).count() as u64;
            let est = MonteCarloEstimate::from_counts(k, s.len() as u64, d.t, cfg.seed);
            let band = cfg.tolerances.ruin_abs.max(3.0 * est.stderr());
            out.check(Check::new(
                format!("ruin_gap[u={u}]"),
                (r.probability - est.estimate).abs(),
                Op::AtMost,
                band,
            ));
            Some((est.estimate, 0.5 * (est.ci_high - est.ci_low)))
        } else {
            None
        };
        out.line(format!(
            "{:>8} {:>14.6e} {:>12.2e} {:>14}",
            u,
            r.probability,
            r.error_budget,
            mc.map_or("-".to_string(), |m| format!("{:.6}", m.0))
        ));
        rows.push(ruin_at_t_row(&p, d.t, &r, mc));
    }
    let path = out.path("ruin_at_t.csv");
    write_ruin_at_t(&path, rows).map_err(|e| io_error(&path, e))
}

fn diffusion_limit(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let d = &cfg.diffusion;
    let psi: Vec<f64> =
        d.us.iter()
            .map(|&u| diffusion_limit_ruin(d.rho, d.mu, d.m, u))
            .collect::<Result<_, _>>()
            .map_err(|e| core_error("diffusion", e))?;
    // Unit claim rate: drift ρμ, variance m.
    let mc = if d.n_paths > 0 {
        Some(
            diffusion_ruin(d.rho * d.mu, d.m, &d.us, d.horizon, d.dt, d.n_paths as usize, cfg.seed)
                .map_err(|e| core_error("diffusion", e))?,
        )
    } else {
        None
    };
    let mut rows = Vec::new();
    for (k, (&u, &v)) in d.us.iter().zip(&psi).enumerate() {
        let mut row = vec![fmt_f64(d.rho), fmt_f64(d.mu), fmt_f64(d.m), fmt_f64(u), fmt_f64(v)];
        match &mc {
            Some(est) => {
                let e = &est[k];
                let band = cfg.tolerances.ruin_abs.max(3.0 * e.stderr());
                row.extend([fmt_f64(e.estimate), fmt_f64(e.stderr())]);
                out.line(format!("u={u} psi={v} mc={} se={:.2e}", e.estimate, e.stderr()));
                out.check(Check::new(
                    format!("psi_gap[u={u}]"),
                    (e.estimate - v).abs(),
                    Op::AtMost,
                    band,
                ));
            }
            None => {
                row.extend([String::new(), String::new()]);
                out.line(format!("u={u} psi={v}"));
            }
        }
        rows.push(row);
    }
    out.csv(
        "diffusion_limit.csv",
        &["rho", "mu", "m", "u", "psi", "mc_estimate", "mc_stderr"],
        rows,
    )
}

fn cf_check(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let d = &cfg.density;
    let p = cfg.diffusion_params(d.u)?;
    let samples = sample_pairs(&p, d.t, cfg.cf.n_paths, d.oracle_dt, cfg.seed, cfg.representation())
        .map_err(|e| oracle_error("density", e))?;
    let chk = cf_crosscheck(
        &p,
        &cfg.convention(),
        d.t,
        &cfg.cf.xis,
        &cfg.cf.zetas,
        &samples,
        &density_options(cfg),
    )
    .map_err(refusal)?;
    let nz = chk.zetas.len();
    let rows = (0..chk.density.len())
        .map(|k| {
            let (a, b) = (chk.density[k], chk.empirical[k]);
            vec![
                fmt_f64(chk.xis[k / nz]),
                fmt_f64(chk.zetas[k % nz]),
                fmt_f64(a.re),
                fmt_f64(a.im),
                fmt_f64(b.re),
                fmt_f64(b.im),
                fmt_f64((a - b).norm()),
            ]
        })
        .collect();
    out.csv(
        "cf.csv",
        &[
            "xi",
            "zeta",
            "density_re",
            "density_im",
            "empirical_re",
            "empirical_im",
            "abs_diff",
        ],
        rows,
    )?;
    out.line(format!(
        "max |density cf - empirical cf| = {:.5} over {} samples",
        chk.max_discrepancy,
        samples.len()
    ));
    out.check(Check::new(
        "cf_max_discrepancy",
        chk.max_discrepancy,
        Op::AtMost,
        cfg.tolerances.cf,
    ));
    Ok(())
}
