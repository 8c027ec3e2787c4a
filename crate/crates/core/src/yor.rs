//! The Hartman–Watson type function `Θ_r(t)` and the conditional density
//! `a_t(x, u)` of `A_t = ∫_0^t e^{2B_s} ds` given `B_t = x`:
//!
//! ```text
//! Θ_r(t) = r e^{π²/2t} / √(2π³t) ∫_0^∞ e^{−y²/2t} e^{−r cosh y} sinh y sin(πy/t) dy
//! P(A_t ∈ du, B_t ∈ dx) = (1/u) exp(−(1 + e^{2x})/2u) Θ_{e^x/u}(t) du dx
//! a_t(x, u) = √(2πt) e^{x²/2t} (1/u) exp(−(1 + e^{2x})/2u) Θ_{e^x/u}(t)
//! ```
//!
//! The `Θ` integral is split at the zeros `k t` of `sin(πy/t)` and each
//! half-period is integrated with 32-point Gauss–Legendre. The factor
//! `e^{π²/2t}` multiplies a heavily cancelling integral, so relative accuracy
//! collapses as `t → 0`; times below `t_min` are refused.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::Grid;
use crate::num::Real;
use crate::processes::{std_normal, SeedSpec, Substream};
use crate::quadrature::GaussLegendre;
use crate::stats::Histogram2D;

/// Smallest time at which `Θ` is evaluated by default.
pub const DEFAULT_T_MIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMethod {
    OscillatorySubdivision,
    SmallTimeRefused,
}

impl ThetaMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThetaMethod::OscillatorySubdivision => "oscillatory-subdivision",
            ThetaMethod::SmallTimeRefused => "small-t-regime-refused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEval<T> {
    pub r: T,
    pub t: T,
    pub value: T,
    /// Tail, quadrature and rounding error, absolute.
    pub error: T,
    pub method: ThetaMethod,
}

impl<T: Real> ThetaEval<T> {
    /// Placeholder record for a refused evaluation (value NaN).
    pub fn refused(r: T, t: T) -> Self {
        Self {
            r,
            t,
            value: T::nan(),
            error: T::infinity(),
            method: ThetaMethod::SmallTimeRefused,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptions<T> {
    pub t_min: T,
    /// Largest admissible absolute tail error.
    pub tail_tol: T,
    /// Truncate once a half-period contributes less than this fraction of the sum.
    pub rel_cutoff: T,
    pub max_panels: usize,
    /// Number of sub-panels per half-period.
    pub depth: usize,
}

impl<T: Real> Default for ThetaOptions<T> {
    fn default() -> Self {
        Self {
            t_min: T::lit(DEFAULT_T_MIN),
            tail_tol: T::lit(1e-10),
            rel_cutoff: T::lit(1e-18),
            max_panels: 100_000,
            depth: 1,
        }
    }
}

struct Rules<T> {
    fine: GaussLegendre<T>,
    coarse: GaussLegendre<T>,
}

fn rules<T: Real>() -> Rules<T> {
    Rules {
        fine: GaussLegendre::new(32),
        coarse: GaussLegendre::new(20),
    }
}

fn rules_f64() -> &'static Rules<f64> {
    static R: OnceLock<Rules<f64>> = OnceLock::new();
    R.get_or_init(rules)
}

fn check_time<T: Real>(t: T, t_min: T) -> Result<()> {
    if !(t >= t_min) || !t.is_finite() {
        return Err(Error::SmallTime {
            t: t.f64(),
            t_min: t_min.f64(),
        });
    }
    Ok(())
}

fn theta_impl<T: Real>(r: T, t: T, opts: &ThetaOptions<T>, rules: &Rules<T>) -> Result<ThetaEval<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::domain("r", format!("must be positive and finite, got {r}")));
    }
    check_time(t, opts.t_min)?;
    let two = T::lit(2.0);
    let pi = T::PI();
    let integrand = |y: T| {
        let g = -y * y / (two * t) - r * y.cosh();
        if g < T::lit(-745.0) {
            T::zero()
        } else {
            g.exp() * y.sinh() * (pi * y / t).sin()
        }
    };
    let depth = opts.depth.max(1);
    let h = t / T::from_usize_lossy(depth);
    let (mut sum, mut abs_sum, mut quad_err) = (T::zero(), T::zero(), T::zero());
    let mut tail = T::infinity();
    let mut k = 0usize;
    while k < opts.max_panels {
        let a = T::from_usize_lossy(k) * t;
        let (mut term, mut term_abs, mut term_err) = (T::zero(), T::zero(), T::zero());
        for j in 0..depth {
            let lo = a + T::from_usize_lossy(j) * h;
            let hi = lo + h;
            let (v, va) = rules.fine.integrate_with_abs(lo, hi, integrand);
            let vc = rules.coarse.integrate(lo, hi, integrand);
            term = term + v;
            term_abs = term_abs + va;
            term_err = term_err + (v - vc).abs();
        }
        // Past the peak of e^{y − y²/2t} the half-periods shrink monotonically.
        if k >= 3 && term.abs() <= opts.rel_cutoff * sum.abs() {
            tail = term.abs();
            break;
        }
        sum = sum + term;
        abs_sum = abs_sum + term_abs;
        quad_err = quad_err + term_err;
        k += 1;
    }
    let pref = r * (pi * pi / (two * t)).exp() / (two * pi * pi * pi * t).sqrt();
    let tail_err = pref * tail;
    if !(tail_err <= opts.tail_tol) {
        return Err(Error::Accuracy {
            what: "theta alternating tail",
            achieved: tail_err.f64(),
            requested: opts.tail_tol.f64(),
        });
    }
    let rounding = T::lit(64.0) * T::epsilon() * abs_sum;
    Ok(ThetaEval {
        r,
        t,
        value: pref * sum,
        error: pref * (tail + quad_err + rounding),
        method: ThetaMethod::OscillatorySubdivision,
    })
}

/// `Θ_r(t)` with default options.
pub fn theta<T: Real>(r: T, t: T) -> Result<ThetaEval<T>> {
    theta_with(r, t, &ThetaOptions::default())
}

pub fn theta_with<T: Real>(r: T, t: T, opts: &ThetaOptions<T>) -> Result<ThetaEval<T>> {
    theta_impl(r, t, opts, &rules())
}

fn theta_f64(r: f64, t: f64, opts: &ThetaOptions<f64>) -> Result<ThetaEval<f64>> {
    theta_impl(r, t, opts, rules_f64())
}

/// Joint density of `(A_t, B_t)` at `(u, x)` with its error bound.
pub fn joint_density_with(t: f64, x: f64, u: f64, opts: &ThetaOptions<f64>) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::domain("u", format!("must be positive, got {u}")));
    }
    check_time(t, opts.t_min)?;
    let damp = -(1.0 + (2.0 * x).exp()) / (2.0 * u);
    let r = x.exp() / u;
    if damp < -745.0 || r > 745.0 {
        // e^{−1/2u} and e^{−r} both vanish; Θ_r ≤ r e^{π²/2t} e^{−r}·const.
        return Ok((0.0, 0.0));
    }
    let th = theta_f64(r, t, opts)?;
    let f = damp.exp() / u;
    Ok((f * th.value, f * th.error))
}

/// Joint density of `(A_t, B_t)` at `(u, x)`.
pub fn joint_density(t: f64, x: f64, u: f64) -> Result<f64> {
    joint_density_with(t, x, u, &ThetaOptions::default()).map(|v| v.0)
}

/// `a_t(x, u)` with error bound.
pub fn yor_density_eval(t: f64, x: f64, u: f64, opts: &ThetaOptions<f64>) -> Result<(f64, f64)> {
    let (v, e) = joint_density_with(t, x, u, opts)?;
    let g = (2.0 * std::f64::consts::PI * t).sqrt() * (x * x / (2.0 * t)).exp();
    Ok((g * v, g * e))
}

/// Conditional density `a_t(x, u)` of `A_t` at `u` given `B_t = x`.
pub fn yor_density(t: f64, x: f64, u: f64) -> Result<f64> {
    yor_density_eval(t, x, u, &ThetaOptions::default()).map(|v| v.0)
}

/// Generic-precision `a_t(x, u)`.
pub fn yor_density_generic<T: Real>(t: T, x: T, u: T) -> Result<T> {
    let two = T::lit(2.0);
    if !(u > T::zero()) {
        return Err(Error::domain("u", format!("must be positive, got {u}")));
    }
    let th = theta(x.exp() / u, t)?;
    let damp = (-(T::one() + (two * x).exp()) / (two * u)).exp() / u;
    Ok((two * T::PI() * t).sqrt() * (x * x / (two * t)).exp() * damp * th.value)
}

/// Scaling between `A^{(α)}_{σ²t} = ∫_0^t e^{2(σB_s + αs)} ds` given
/// `σB_t + αt = x` and the standard functional: with `τ = σ²t`, the
/// conditional density at `u` is `σ² a_τ(x, σ²u)`, for every `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub sigma: f64,
    pub alpha: f64,
    pub t: f64,
}

impl Scaling {
    pub fn new(sigma: f64, alpha: f64, t: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", format!("must be positive, got {sigma}")));
        }
        if !alpha.is_finite() {
            return Err(Error::domain("alpha", "must be finite"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain("t", format!("must be positive, got {t}")));
        }
        Ok(Self { sigma, alpha, t })
    }

    /// Standard-clock time `σ²t`.
    pub fn tau(&self) -> f64 {
        self.sigma * self.sigma * self.t
    }

    /// Girsanov weight `e^{νx − ν²τ/2}`, `ν = α/σ²`, turning the standard
    /// Gaussian law of the terminal value into that of `σB_t + αt`.
    pub fn tilt(&self, x: f64) -> f64 {
        let nu = self.alpha / (self.sigma * self.sigma);
        (nu * x - 0.5 * nu * nu * self.tau()).exp()
    }

    /// Density of `σB_t + αt` at `x`.
    pub fn terminal_density(&self, x: f64) -> f64 {
        crate::num::norm_pdf(x, self.alpha * self.t, self.tau())
    }
}

/// Conditional density of `∫_0^t e^{2(σB_s+αs)} ds` at `u` given `σB_t + αt = x`.
pub fn yor_density_scaled(sigma: f64, alpha: f64, t: f64, x: f64, u: f64) -> Result<f64> {
    let s = Scaling::new(sigma, alpha, t)?;
    let s2 = sigma * sigma;
    yor_density(s.tau(), x, s2 * u).map(|v| s2 * v)
}

/// Joint density of `(∫_0^t e^{2(σB_s+αs)} ds, σB_t + αt)` at `(u, x)`.
pub fn joint_density_scaled(s: &Scaling, x: f64, u: f64, opts: &ThetaOptions<f64>) -> Result<(f64, f64)> {
    let s2 = s.sigma * s.sigma;
    let (v, e) = joint_density_with(s.tau(), x, s2 * u, opts)?;
    let k = s2 * s.tilt(x);
    Ok((k * v, k * e))
}

/// Log-spaced support of `u ↦ a_t(x, u)`: the range where `u a_t(x,u)`
/// exceeds `1e-15` of its maximum, padded by one unit in `ln u`.
pub fn log_support(t: f64, x: f64) -> Result<(f64, f64)> {
    let centre = t.ln() + x.max(0.0);
    let ss: Vec<f64> = (0..=160).map(|i| centre - 40.0 + 0.5 * i as f64).collect();
    let g: Vec<f64> = ss
        .iter()
        .map(|&s| joint_density(t, x, s.exp()).map(|v| v * s.exp()))
        .collect::<Result<_>>()?;
    let gmax = g.iter().copied().fold(0.0, f64::max);
    if !(gmax > 0.0) {
        return Err(Error::Accuracy {
            what: "yor density support",
            achieved: 0.0,
            requested: f64::MIN_POSITIVE,
        });
    }
    let keep: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 1e-15 * gmax).collect();
    Ok((ss[keep[0]] - 1.0, ss[*keep.last().unwrap()] + 1.0))
}

/// `∫ h(u) a_t(x, u) du` by the trapezoid rule in `s = ln u` with `n`
/// points over the log support.
pub fn conditional_expectation(t: f64, x: f64, n: usize, h: impl Fn(f64) -> f64) -> Result<f64> {
    let (lo, hi) = log_support(t, x)?;
    let ds = (hi - lo) / (n - 1) as f64;
    let mut s = 0.0;
    for i in 0..n {
        let u = (lo + ds * i as f64).exp();
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += w * h(u) * yor_density(t, x, u)? * u;
    }
    Ok(s * ds)
}

/// `1 − ∫ a_t(x, u) du`.
pub fn normalization_defect(t: f64, x: f64) -> Result<f64> {
    Ok(1.0 - conditional_expectation(t, x, 1200, |_| 1.0)?)
}

/// Edges of `n_bins` bins of equal `a_t(x, ·)`-probability between the
/// quantiles `q_lo` and `q_hi`.
pub fn conditional_quantile_edges(t: f64, x: f64, n_bins: usize, q_lo: f64, q_hi: f64) -> Result<Vec<f64>> {
    let (lo, hi) = log_support(t, x)?;
    let n = 4000;
    let ds = (hi - lo) / n as f64;
    let ss: Vec<f64> = (0..=n).map(|i| lo + ds * i as f64).collect();
    let g: Vec<f64> = ss
        .iter()
        .map(|&s| yor_density(t, x, s.exp()).map(|v| v * s.exp()))
        .collect::<Result<_>>()?;
    let mut cdf = vec![0.0; n + 1];
    for i in 1..=n {
        cdf[i] = cdf[i - 1] + 0.5 * ds * (g[i - 1] + g[i]);
    }
    let total = cdf[n];
    let edges: Vec<f64> = crate::stats::linspace(q_lo, q_hi, n_bins)
        .into_iter()
        .map(|q| {
            let target = q * total;
            let i = cdf.partition_point(|&c| c < target).clamp(1, n);
            let frac = (target - cdf[i - 1]) / (cdf[i] - cdf[i - 1]).max(f64::MIN_POSITIVE);
            (ss[i - 1] + frac.clamp(0.0, 1.0) * ds).exp()
        })
        .collect();
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(
            "n_bins",
            "too many bins for the resolution of the support",
        ));
    }
    Ok(edges)
}

/// Mass of `a_t(x, ·)` in each bin of `edges`, followed by the mass outside.
pub fn conditional_bin_masses(t: f64, x: f64, edges: &[f64]) -> Result<Vec<f64>> {
    let gl = GaussLegendre::<f64>::new(16);
    let panels = 4;
    let mut masses = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0].ln(), w[1].ln());
        let h = (b - a) / panels as f64;
        let mut m = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            for (s, ws) in gl.mapped(lo, lo + h) {
                m += ws * yor_density(t, x, s.exp())? * s.exp();
            }
        }
        masses.push(m);
    }
    let inside: f64 = masses.iter().sum();
    masses.push((1.0 - inside).max(0.0));
    Ok(masses)
}

/// [`conditional_bin_masses`] averaged over `B_t ∈ [x − h, x + h]` with the
/// Gaussian weight of `B_t`, the law seen by slab-conditioned simulation.
pub fn slab_bin_masses(t: f64, x: f64, h: f64, edges: &[f64]) -> Result<Vec<f64>> {
    let gl = GaussLegendre::<f64>::new(5);
    let mut acc = vec![0.0; edges.len()];
    let mut norm = 0.0;
    for (xk, wk) in gl.mapped(x - h, x + h) {
        let w = wk * crate::num::norm_pdf(xk, 0.0, t);
        for (a, m) in acc.iter_mut().zip(conditional_bin_masses(t, xk, edges)?) {
            *a += w * m;
        }
        norm += w;
    }
    Ok(acc.into_iter().map(|a| a / norm).collect())
}

/// Histograms of `A_t` over standard Brownian paths with `|B_t − x| < h`,
/// indexed `[checkpoint][x]`; `edges[k][j]` bins checkpoint `k`, slab `j`.
pub fn oracle_slab_histograms(
    checkpoints: &[f64],
    xs: &[f64],
    h: f64,
    edges: &[Vec<Vec<f64>>],
    n_paths: u64,
    dt: f64,
    seed: u64,
) -> Result<Vec<Vec<crate::stats::Histogram1D>>> {
    if edges.len() != checkpoints.len() || edges.iter().any(|e| e.len() != xs.len()) {
        return Err(Error::domain("edges", "need one edge vector per checkpoint and slab"));
    }
    let template: Vec<Vec<crate::stats::Histogram1D>> = edges
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| crate::stats::Histogram1D::new(e.clone()))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let spec = OracleSpec {
        sigma: 1.0,
        alpha: 0.0,
        dt,
    };
    oracle_fold(
        &spec,
        checkpoints,
        n_paths,
        seed,
        || template.clone(),
        |hs, s| {
            for (k, &(a, b)) in s.iter().enumerate() {
                for (j, &x) in xs.iter().enumerate() {
                    if (b - x).abs() < h {
                        hs[k][j].add(a);
                    }
                }
            }
        },
        |hs, o| {
            for (r, ro) in hs.iter_mut().zip(&o) {
                for (a, b) in r.iter_mut().zip(ro) {
                    a.merge(b);
                }
            }
        },
    )
}

/// Tabulated `a_t(x, u)`; `us` log-spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct YorDensityGrid {
    pub t: f64,
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    /// Row-major over `(x, u)`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// `1 − ∫ a_t(x, u) du` per `x`.
    pub defects: Vec<f64>,
}

impl YorDensityGrid {
    pub fn build(t: f64, xs: &[f64], u_lo: f64, u_hi: f64, n_u: usize) -> Result<Self> {
        if !(u_lo > 0.0 && u_hi > u_lo) || n_u < 2 {
            return Err(Error::domain("u_range", "need 0 < u_lo < u_hi and at least two points"));
        }
        check_time(t, DEFAULT_T_MIN)?;
        let us = crate::stats::logspace(u_lo, u_hi, n_u - 1);
        let cells: Vec<(f64, f64)> = xs
            .iter()
            .flat_map(|&x| us.iter().map(move |&u| (x, u)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(x, u)| yor_density_eval(t, x, u, &ThetaOptions::default()))
            .collect::<Result<_>>()?;
        let defects = xs
            .par_iter()
            .map(|&x| normalization_defect(t, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            xs: xs.to_vec(),
            us,
            values: cells.iter().map(|c| c.0).collect(),
            errors: cells.iter().map(|c| c.1).collect(),
            defects,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.us.len() + j]
    }

    /// Smallest `value + error` over the grid; nonnegative when every cell is
    /// nonnegative within its error bound.
    pub fn min_lower_slack(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.errors)
            .map(|(v, e)| v + e)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_grid(&self) -> Grid {
        Grid {
            t: self.t,
            rows: self.xs.clone(),
            cols: self.us.clone(),
            values: self.values.clone(),
        }
    }
}

/// Joint samples `(A, X)` at several checkpoint times of one path, where
/// `A_s = ∫_0^s e^{2(σB_r + αr)} dr` by the trapezoid rule and
/// `X_s = σB_s + αs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSpec {
    pub sigma: f64,
    pub alpha: f64,
    pub dt: f64,
}

impl OracleSpec {
    fn steps_to(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    /// Simulates one path up to the last checkpoint; `out[k] = (A_{t_k}, X_{t_k})`.
    pub fn sample(&self, checkpoints: &[f64], stream: SeedSpec, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let mut rng = stream.rng(Substream::Brownian);
        let sd = self.sigma * self.dt.sqrt();
        let drift = self.alpha * self.dt;
        let (mut x, mut a, mut e_prev) = (0.0f64, 0.0f64, 1.0f64);
        let mut step = 0usize;
        for &t in checkpoints {
            let target = self.steps_to(t);
            while step < target {
                x += drift + sd * std_normal(&mut rng);
                let e = (2.0 * x).exp();
                a += 0.5 * self.dt * (e_prev + e);
                e_prev = e;
                step += 1;
            }
            out.push((a, x));
        }
    }
}

/// Paths per deterministic work unit of the oracles.
pub const ORACLE_CHUNK: u64 = 8192;

/// Folds oracle samples over `n_paths` paths. Work is split into fixed
/// chunks whose accumulators are merged in chunk order, so the result does
/// not depend on the thread count.
pub fn oracle_fold<A, I, F, M>(
    spec: &OracleSpec,
    checkpoints: &[f64],
    n_paths: u64,
    seed: u64,
    init: I,
    fold: F,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[(f64, f64)]) + Sync + Send,
    M: Fn(&mut A, A),
{
    if !(spec.dt > 0.0) || checkpoints.is_empty() || checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(
            "checkpoints",
            "dt must be positive and checkpoints strictly increasing",
        ));
    }
    if checkpoints.iter().any(|&t| spec.dt > 1e-3 * t * (1.0 + 1e-9)) {
        return Err(Error::domain("dt", "oracle-grade accuracy needs dt <= 1e-3 t"));
    }
    let chunks = n_paths.div_ceil(ORACLE_CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut buf = Vec::with_capacity(checkpoints.len());
            for i in c * ORACLE_CHUNK..((c + 1) * ORACLE_CHUNK).min(n_paths) {
                spec.sample(checkpoints, SeedSpec::new(seed, i), &mut buf);
                fold(&mut acc, &buf);
            }
            acc
        })
        .collect();
    let mut it = parts.into_iter();
    let mut total = it.next().unwrap_or_else(&init);
    for p in it {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Binned empirical joint law of `(A^{(α)}_{σ²t}, σB_t + αt)`; rows bin the
/// functional, columns the terminal value.
#[allow(clippy::too_many_arguments)]
pub fn mc_oracle_joint(
    sigma: f64,
    alpha: f64,
    t: f64,
    n_paths: u64,
    dt: f64,
    seed: u64,
    a_edges: &[f64],
    x_edges: &[f64],
) -> Result<Histogram2D> {
    let template = Histogram2D::new(a_edges.to_vec(), x_edges.to_vec())?;
    let spec = OracleSpec { sigma, alpha, dt };
    oracle_fold(
        &spec,
        &[t],
        n_paths,
        seed,
        || template.clone(),
        |h, s| h.add(s[0].0, s[0].1),
        |h, o| h.merge(&o),
    )
}
