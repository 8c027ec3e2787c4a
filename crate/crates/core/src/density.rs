//! Joint law of the invested diffusion risk process and the investment
//! level at a fixed time.
//!
//! The risk process is the Brownian approximation `X_s = u + d s + √v W_s`
//! (`d = ρλμ`, `v = λm`). The invested capital is represented as the time
//! change `X'_t = X_{A_t}` with `A_t = ∫_0^t e^{2(σB_s + αs)} ds`, so given
//! `A_t = y` and `σB_t + αt = x`, `X'_t ~ Normal(u + d y, v y)` and
//!
//! ```text
//! p_t(z, x) = ∫_0^∞ Normal(z; u + d y, v y) f_t(y, x) dy
//! ```
//!
//! where `f_t` is the joint density of `(A_t, σB_t + αt)`. The transcription
//! with kernel variance `λμ y²/2`, mean `u + d t` and a driftless Gaussian
//! factor in `x` is kept as [`DensityConvention::Printed`] for comparison.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, Grid};
use crate::model::{InvestmentModel, PremiumSpec, RiskParams};
use crate::num::{norm_cdf, norm_pdf};
use crate::processes::{std_normal, SeedSpec, Substream};
use crate::quadrature::GaussLegendre;
use crate::stats::Histogram2D;
use crate::yor::{joint_density_with, log_support, Scaling, ThetaOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionRiskParams {
    pub u: f64,
    /// `ρλμ`.
    pub drift: f64,
    /// `λm`, `m = E[Y²]`.
    pub variance: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl DiffusionRiskParams {
    pub fn new(u: f64, drift: f64, variance: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::domain("u", "must be finite"));
        }
        if !drift.is_finite() {
            return Err(Error::domain("drift", "must be finite"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain("variance", format!("must be positive, got {variance}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", format!("must be positive, got {sigma}")));
        }
        if !alpha.is_finite() {
            return Err(Error::domain("alpha", "must be finite"));
        }
        Ok(Self {
            u,
            drift,
            variance,
            sigma,
            alpha,
        })
    }

    /// Moment matching of a Poisson risk model: drift `c − λμ`, variance `λE[Y²]`.
    pub fn from_risk(params: &RiskParams<f64>, inv: &InvestmentModel<f64>) -> Result<Self> {
        let lambda = match params.arrivals {
            crate::processes::CountingProcess::Poisson { rate } => rate,
            _ => {
                return Err(Error::domain(
                    "arrivals",
                    "diffusion approximation needs Poisson arrivals",
                ))
            }
        };
        let c = match params.premium {
            PremiumSpec::Constant(c) => c,
            _ => {
                return Err(Error::domain(
                    "premium",
                    "diffusion approximation needs a constant premium",
                ))
            }
        };
        if inv.jumps().is_some_and(|j| j.intensity > 0.0) {
            return Err(Error::domain(
                "investment",
                "diffusion density needs Brownian investment",
            ));
        }
        let mu = params.claims.mean();
        Self::new(
            params.u,
            c - lambda * mu,
            lambda * params.claims.second_moment(),
            inv.sigma(),
            inv.alpha(),
        )
    }

    pub fn scaling(&self, t: f64) -> Result<Scaling> {
        Scaling::new(self.sigma, self.alpha, t)
    }

    /// `E[A_t] = ∫_0^t e^{2(α+σ²)s} ds`.
    pub fn mean_functional(&self, t: f64) -> f64 {
        let k = 2.0 * (self.alpha + self.sigma * self.sigma);
        if k.abs() < 1e-12 {
            t
        } else {
            ((k * t).exp() - 1.0) / k
        }
    }

    /// Truncation box `(z_lo, z_hi, x_lo, x_hi)`.
    pub fn truncation_box(&self, t: f64) -> (f64, f64, f64, f64) {
        let ea = self.mean_functional(t);
        let zc = self.u + self.drift * ea;
        let zs = 12.0 * (self.variance * ea).sqrt();
        let xs = 8.0 * self.sigma * t.sqrt();
        (zc - zs, zc + zs, self.alpha * t - xs, self.alpha * t + xs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityConvention {
    /// Kernel `Normal(u + d y, v y)` against the joint density of the
    /// functional and the drifted terminal value.
    OracleValidated,
    /// Kernel `exp(−(z − u − d t)²/(λμ y²))` (normalized), weighted by
    /// `N(x; 0, σ²t) a_{σ²t}(x, y)`.
    Printed { lambda_mu: f64 },
}

impl DensityConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            DensityConvention::OracleValidated => "oracle-validated",
            DensityConvention::Printed { .. } => "printed",
        }
    }

    #[inline]
    fn kernel(&self, p: &DiffusionRiskParams, t: f64, y: f64) -> (f64, f64) {
        match *self {
            DensityConvention::OracleValidated => (p.u + p.drift * y, p.variance * y),
            DensityConvention::Printed { lambda_mu } => (p.u + p.drift * t, 0.5 * lambda_mu * y * y),
        }
    }
}

/// Quadrature resolution for density computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    /// Points of the trapezoid rule in `ln y`.
    pub n_y: usize,
    /// Gauss–Legendre points per `x` panel or bin.
    pub x_order: usize,
    /// Number of `x` panels for integrals over the whole line.
    pub x_panels: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            n_y: 320,
            x_order: 8,
            x_panels: 24,
        }
    }
}

/// The joint density `f_t(·, x)` tabulated on a log grid in `y`.
#[derive(Debug, Clone)]
pub struct XSlice {
    pub x: f64,
    /// Integration weight of this `x` node.
    pub wx: f64,
    pub ys: Vec<f64>,
    /// Trapezoid weights in `ln y`, including the Jacobian `y`.
    pub wy: Vec<f64>,
    pub f: Vec<f64>,
    pub ferr: Vec<f64>,
}

impl XSlice {
    fn build(p: &DiffusionRiskParams, conv: &DensityConvention, t: f64, x: f64, wx: f64, n_y: usize) -> Result<Self> {
        let s = p.scaling(t)?;
        let tau = s.tau();
        let opts = ThetaOptions::default();
        let (lo, hi) = log_support(tau, x)?;
        // The functional in the natural clock is the standard one divided by σ².
        let shift = match conv {
            DensityConvention::OracleValidated => -(s.sigma * s.sigma).ln(),
            DensityConvention::Printed { .. } => 0.0,
        };
        let ds = (hi - lo) / (n_y - 1) as f64;
        let mut ys = Vec::with_capacity(n_y);
        let mut wy = Vec::with_capacity(n_y);
        let mut f = Vec::with_capacity(n_y);
        let mut ferr = Vec::with_capacity(n_y);
        for i in 0..n_y {
            let y = (lo + shift + ds * i as f64).exp();
            let (v, e) = match conv {
                DensityConvention::OracleValidated => crate::yor::joint_density_scaled(&s, x, y, &opts)?,
                DensityConvention::Printed { .. } => joint_density_with(tau, x, y, &opts)?,
            };
            let w = if i == 0 || i == n_y - 1 { 0.5 } else { 1.0 };
            ys.push(y);
            wy.push(w * ds * y);
            f.push(v);
            ferr.push(e);
        }
        Ok(Self { x, wx, ys, wy, f, ferr })
    }

    /// `∫ f_t(y, x) g(y) dy`.
    #[inline]
    fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for k in 0..self.ys.len() {
            s += self.wy[k] * self.f[k] * g(self.ys[k]);
        }
        s
    }

    fn error_mass(&self) -> f64 {
        self.wy.iter().zip(&self.ferr).map(|(w, e)| w * e).sum()
    }
}

fn slices(
    p: &DiffusionRiskParams,
    conv: &DensityConvention,
    t: f64,
    nodes: &[(f64, f64)],
    n_y: usize,
) -> Result<Vec<XSlice>> {
    nodes
        .par_iter()
        .map(|&(x, w)| XSlice::build(p, conv, t, x, w, n_y))
        .collect()
}

fn gl_nodes(edges: &[f64], order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::<f64>::new(order);
    edges
        .windows(2)
        .flat_map(|e| gl.mapped(e[0], e[1]).collect::<Vec<_>>())
        .collect()
}

fn panel_edges(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    crate::stats::linspace(lo, hi, panels)
}

/// Point value of the transition density `p_t(z, x)`.
pub fn transition_density(p: &DiffusionRiskParams, conv: &DensityConvention, t: f64, z: f64, x: f64) -> Result<f64> {
    let sl = XSlice::build(p, conv, t, x, 1.0, DensityOptions::default().n_y)?;
    Ok(sl.integrate(|y| {
        let (m, v) = conv.kernel(p, t, y);
        norm_pdf(z, m, v)
    }))
}

/// Bin masses of `p_t` over a `z × x` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDensityGrid {
    pub t: f64,
    pub convention: DensityConvention,
    pub z_edges: Vec<f64>,
    pub x_edges: Vec<f64>,
    /// Row-major over `(z bin, x bin)`.
    pub masses: Vec<f64>,
    /// Propagated `Θ` error per cell.
    pub errors: Vec<f64>,
    pub total_mass: f64,
    /// `|∫_x ∫_y f_t dy dx − P(x bins)|`, the `y`-quadrature defect.
    pub quadrature_defect: f64,
}

impl TransitionDensityGrid {
    pub fn build(
        p: &DiffusionRiskParams,
        conv: &DensityConvention,
        t: f64,
        z_edges: &[f64],
        x_edges: &[f64],
        opts: &DensityOptions,
    ) -> Result<Self> {
        for (name, e) in [("z_edges", z_edges), ("x_edges", x_edges)] {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::domain(name, "bin edges must be strictly increasing"));
            }
        }
        let nz = z_edges.len() - 1;
        let nx = x_edges.len() - 1;
        let nodes = gl_nodes(x_edges, opts.x_order);
        let sl = slices(p, conv, t, &nodes, opts.n_y)?;
        let mut masses = vec![0.0; nz * nx];
        let mut errors = vec![0.0; nz * nx];
        let mut f_total = 0.0;
        for (k, s) in sl.iter().enumerate() {
            let j = k / opts.x_order;
            let mut cdf = vec![0.0; z_edges.len()];
            for q in 0..s.ys.len() {
                let (m, v) = conv.kernel(p, t, s.ys[q]);
                let sd = v.sqrt();
                let w = s.wx * s.wy[q];
                for (e, c) in z_edges.iter().zip(cdf.iter_mut()) {
                    *c += w * s.f[q] * norm_cdf((e - m) / sd);
                }
                f_total += w * s.f[q];
            }
            let err = s.wx * s.error_mass();
            for i in 0..nz {
                masses[i * nx + j] += cdf[i + 1] - cdf[i];
                errors[i * nx + j] += err;
            }
        }
        let x_mass: f64 = match conv {
            DensityConvention::OracleValidated => {
                let sd = p.sigma * t.sqrt();
                norm_cdf((x_edges[nx] - p.alpha * t) / sd) - norm_cdf((x_edges[0] - p.alpha * t) / sd)
            }
            DensityConvention::Printed { .. } => {
                let sd = p.sigma * t.sqrt();
                norm_cdf(x_edges[nx] / sd) - norm_cdf(x_edges[0] / sd)
            }
        };
        let total_mass = masses.iter().sum();
        Ok(Self {
            t,
            convention: *conv,
            z_edges: z_edges.to_vec(),
            x_edges: x_edges.to_vec(),
            masses,
            errors,
            total_mass,
            quadrature_defect: (f_total - x_mass).abs(),
        })
    }

    /// Grid over the truncation box with `nz × nx` bins.
    pub fn build_default(
        p: &DiffusionRiskParams,
        conv: &DensityConvention,
        t: f64,
        nz: usize,
        nx: usize,
    ) -> Result<Self> {
        let (z0, z1, x0, x1) = p.truncation_box(t);
        Self::build(
            p,
            conv,
            t,
            &crate::stats::linspace(z0, z1, nz),
            &crate::stats::linspace(x0, x1, nx),
            &DensityOptions::default(),
        )
    }

    pub fn n_z(&self) -> usize {
        self.z_edges.len() - 1
    }

    pub fn n_x(&self) -> usize {
        self.x_edges.len() - 1
    }

    /// Cell probabilities followed by the mass outside the grid.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = self.masses.clone();
        p.push((1.0 - self.total_mass).max(0.0));
        p
    }

    /// Mean density per cell at the cell centres.
    pub fn to_grid(&self) -> Grid {
        let centres = |e: &[f64]| e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>();
        let nx = self.n_x();
        let values = (0..self.masses.len())
            .map(|k| {
                let (i, j) = (k / nx, k % nx);
                self.masses[k] / ((self.z_edges[i + 1] - self.z_edges[i]) * (self.x_edges[j + 1] - self.x_edges[j]))
            })
            .collect();
        Grid {
            t: self.t,
            rows: centres(&self.z_edges),
            cols: centres(&self.x_edges),
            values,
        }
    }
}

/// Probability that the capital is nonpositive at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinAtT {
    pub probability: f64,
    /// Truncation, quadrature and `Θ` error budget.
    pub error_budget: f64,
}

pub fn ruin_probability_at(
    p: &DiffusionRiskParams,
    conv: &DensityConvention,
    t: f64,
    opts: &DensityOptions,
) -> Result<RuinAtT> {
    let (_, _, x0, x1) = p.truncation_box(t);
    let nodes = gl_nodes(&panel_edges(x0, x1, opts.x_panels), opts.x_order);
    let sl = slices(p, conv, t, &nodes, opts.n_y)?;
    let (mut prob, mut mass, mut err) = (0.0, 0.0, 0.0);
    for s in &sl {
        prob += s.wx
            * s.integrate(|y| {
                let (m, v) = conv.kernel(p, t, y);
                norm_cdf(-m / v.sqrt())
            });
        mass += s.wx * s.integrate(|_| 1.0);
        err += s.wx * s.error_mass();
    }
    let x_tail = 2.0 * norm_cdf(-8.0);
    let defect = (1.0 - x_tail - mass).abs();
    if x_tail + defect > 1e-4 {
        return Err(Error::Accuracy {
            what: "ruin probability truncation",
            achieved: x_tail + defect,
            requested: 1e-4,
        });
    }
    Ok(RuinAtT {
        probability: prob.clamp(0.0, 1.0),
        error_budget: x_tail + defect + err,
    })
}

/// Barycentric weights of Lagrange interpolation on `nodes`.
fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            1.0 / (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect()
}

fn interpolate(nodes: &[f64], bw: &[f64], values: &[Complex64], x: f64) -> Complex64 {
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for j in 0..nodes.len() {
        let d = x - nodes[j];
        if d == 0.0 {
            return values[j];
        }
        let w = bw[j] / d;
        num += values[j] * w;
        den += w;
    }
    num / den
}

/// `∫ g(x) e^{iζ e^x} dx` where `g` is known at the Gauss nodes of each panel;
/// `g` is interpolated inside each panel and integrated on finer sub-panels.
fn oscillatory_integral(edges: &[f64], order: usize, g: &[Complex64], zeta: f64, sub: usize) -> Complex64 {
    let gl = GaussLegendre::<f64>::new(order);
    let fine = GaussLegendre::<f64>::new(16);
    let mut total = Complex64::new(0.0, 0.0);
    for (pi, e) in edges.windows(2).enumerate() {
        let nodes: Vec<f64> = gl.mapped(e[0], e[1]).map(|(x, _)| x).collect();
        let bw = barycentric_weights(&nodes);
        let vals = &g[pi * order..(pi + 1) * order];
        let h = (e[1] - e[0]) / sub as f64;
        for k in 0..sub {
            let a = e[0] + h * k as f64;
            for (x, w) in fine.mapped(a, a + h) {
                total += interpolate(&nodes, &bw, vals, x) * Complex64::from_polar(w, zeta * x.exp());
            }
        }
    }
    total
}

/// Characteristic function `E[exp(i(ξ X'_t + ζ e^{σB_t+αt}))]` from the
/// density, row-major over `(ξ, ζ)`.
pub fn cf_density(
    p: &DiffusionRiskParams,
    conv: &DensityConvention,
    t: f64,
    xis: &[f64],
    zetas: &[f64],
    opts: &DensityOptions,
) -> Result<Vec<Complex64>> {
    let (_, _, x0, x1) = p.truncation_box(t);
    let edges = panel_edges(x0, x1, opts.x_panels);
    let nodes = gl_nodes(&edges, opts.x_order);
    let sl = slices(p, conv, t, &nodes, opts.n_y)?;
    let mut out = Vec::with_capacity(xis.len() * zetas.len());
    for &xi in xis {
        // g_ξ(x) = ∫ f(y, x) E[e^{iξX'} | y] dy, with the node weight folded in later.
        let g: Vec<Complex64> = sl
            .iter()
            .map(|s| {
                let (mut re, mut im) = (0.0, 0.0);
                for q in 0..s.ys.len() {
                    let (m, v) = conv.kernel(p, t, s.ys[q]);
                    let amp = s.wy[q] * s.f[q] * (-0.5 * xi * xi * v).exp();
                    re += amp * (xi * m).cos();
                    im += amp * (xi * m).sin();
                }
                Complex64::new(re, im)
            })
            .collect();
        for &zeta in zetas {
            out.push(oscillatory_integral(&edges, opts.x_order, &g, zeta, 8));
        }
    }
    Ok(out)
}

/// `E[exp(iζ e^{X})]`, `X ~ Normal(αt, σ²t)`, by quadrature.
pub fn lognormal_cf(sigma: f64, alpha: f64, t: f64, zeta: f64) -> Complex64 {
    let sd = sigma * t.sqrt();
    let edges = panel_edges(alpha * t - 9.0 * sd, alpha * t + 9.0 * sd, 36);
    let g: Vec<Complex64> = gl_nodes(&edges, 16)
        .iter()
        .map(|&(x, _)| Complex64::new(norm_pdf(x, alpha * t, sd * sd), 0.0))
        .collect();
    oscillatory_integral(&edges, 16, &g, zeta, 8)
}

/// Empirical characteristic function of `(X'_t, e^{x})` samples, row-major over `(ξ, ζ)`.
pub fn cf_empirical(samples: &[(f64, f64)], xis: &[f64], zetas: &[f64]) -> Vec<Complex64> {
    let n = samples.len() as f64;
    let mut out = Vec::with_capacity(xis.len() * zetas.len());
    for &xi in xis {
        for &zeta in zetas {
            let (mut re, mut im) = (0.0, 0.0);
            for &(z, x) in samples {
                let ph = xi * z + zeta * x.exp();
                re += ph.cos();
                im += ph.sin();
            }
            out.push(Complex64::new(re / n, im / n));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfCheck {
    pub xis: Vec<f64>,
    pub zetas: Vec<f64>,
    pub density: Vec<Complex64>,
    pub empirical: Vec<Complex64>,
    pub max_discrepancy: f64,
}

/// Supremum over the `(ξ, ζ)` grid of the gap between the density and
/// empirical characteristic functions.
pub fn cf_crosscheck(
    p: &DiffusionRiskParams,
    conv: &DensityConvention,
    t: f64,
    xis: &[f64],
    zetas: &[f64],
    samples: &[(f64, f64)],
    opts: &DensityOptions,
) -> Result<CfCheck> {
    let density = cf_density(p, conv, t, xis, zetas, opts)?;
    let empirical = cf_empirical(samples, xis, zetas);
    let max_discrepancy = density
        .iter()
        .zip(&empirical)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(CfCheck {
        xis: xis.to_vec(),
        zetas: zetas.to_vec(),
        density,
        empirical,
        max_discrepancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `X_{A_t}` with `A_t = ∫_0^t e^{2(σB_s+αs)} ds`.
    TimeChange,
    /// `e^{E_t} u + d ∫_0^t e^{E_s} ds + √v ∫_0^t e^{E_s} dW_s` with `E = σB + αt`.
    StochasticIntegral,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::TimeChange => "time-change",
            Representation::StochasticIntegral => "stochastic-integral",
        }
    }
}

/// Paths per deterministic work unit.
const PAIR_CHUNK: u64 = 4096;

/// Samples `(X'_t, σB_t + αt)` on a grid of step `dt`, in path order.
pub fn sample_pairs(
    p: &DiffusionRiskParams,
    t: f64,
    n_paths: u64,
    dt: f64,
    seed: u64,
    repr: Representation,
) -> Result<Vec<(f64, f64)>> {
    if !(t > 0.0 && dt > 0.0) {
        return Err(Error::domain("dt", "time and step must be positive"));
    }
    if dt > 1e-3 * t * (1.0 + 1e-9) {
        return Err(Error::domain("dt", "oracle-grade accuracy needs dt <= 1e-3 t"));
    }
    let steps = (t / dt).round() as usize;
    let h = t / steps as f64;
    let sh = h.sqrt();
    let chunks = n_paths.div_ceil(PAIR_CHUNK);
    let parts: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * PAIR_CHUNK;
            let hi = ((c + 1) * PAIR_CHUNK).min(n_paths);
            (lo..hi)
                .map(|i| {
                    let stream = SeedSpec::new(seed, i);
                    let mut rb = stream.rng(Substream::Brownian);
                    let mut rw = stream.rng(Substream::RiskNoise);
                    let mut e = 0.0f64;
                    match repr {
                        Representation::TimeChange => {
                            let mut prev = 1.0f64;
                            let mut a = 0.0;
                            for _ in 0..steps {
                                e += p.alpha * h + p.sigma * sh * std_normal(&mut rb);
                                let next = (2.0 * e).exp();
                                a += 0.5 * h * (prev + next);
                                prev = next;
                            }
                            let z = p.u + p.drift * a + (p.variance * a).sqrt() * std_normal(&mut rw);
                            (z, e)
                        }
                        Representation::StochasticIntegral => {
                            let sv = p.variance.sqrt();
                            let mut prev = 1.0f64;
                            let (mut drift_int, mut noise_int) = (0.0, 0.0);
                            for _ in 0..steps {
                                noise_int += prev * sh * std_normal(&mut rw);
                                e += p.alpha * h + p.sigma * sh * std_normal(&mut rb);
                                let next = e.exp();
                                drift_int += 0.5 * h * (prev + next);
                                prev = next;
                            }
                            (e.exp() * p.u + p.drift * drift_int + sv * noise_int, e)
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

/// Binned empirical law of `(X'_t, σB_t + αt)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_density_oracle(
    p: &DiffusionRiskParams,
    t: f64,
    n_paths: u64,
    dt: f64,
    seed: u64,
    repr: Representation,
    z_edges: &[f64],
    x_edges: &[f64],
) -> Result<Histogram2D> {
    let mut h = Histogram2D::new(z_edges.to_vec(), x_edges.to_vec())?;
    for (z, x) in sample_pairs(p, t, n_paths, dt, seed, repr)? {
        h.add(z, x);
    }
    Ok(h)
}

pub fn histogram_of(samples: &[(f64, f64)], z_edges: &[f64], x_edges: &[f64]) -> Result<Histogram2D> {
    let mut h = Histogram2D::new(z_edges.to_vec(), x_edges.to_vec())?;
    for &(z, x) in samples {
        h.add(z, x);
    }
    Ok(h)
}

/// Density bin masses against empirical frequencies on a grid spanned by
/// sample quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub z_edges: Vec<f64>,
    pub x_edges: Vec<f64>,
    /// Cell probabilities with the outside cell last.
    pub density: Vec<f64>,
    pub empirical: Vec<f64>,
    pub total_mass: f64,
    pub tv: f64,
}

/// Compares the density with samples on `nz × nx` bins between the
/// `q`- and `(1 − q)`-quantiles of each coordinate, plus an outside cell.
#[allow(clippy::too_many_arguments)]
pub fn compare_with_samples(
    p: &DiffusionRiskParams,
    conv: &DensityConvention,
    t: f64,
    samples: &[(f64, f64)],
    nz: usize,
    nx: usize,
    q: f64,
    opts: &DensityOptions,
) -> Result<OracleComparison> {
    let mut zs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut xs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let z_edges = crate::stats::quantile_edges(&mut zs, nz, q, 1.0 - q);
    let x_edges = crate::stats::quantile_edges(&mut xs, nx, q, 1.0 - q);
    let grid = TransitionDensityGrid::build(p, conv, t, &z_edges, &x_edges, opts)?;
    let hist = histogram_of(samples, &z_edges, &x_edges)?;
    let density = grid.probabilities();
    let empirical = hist.probabilities();
    let tv = crate::stats::total_variation(&density, &empirical);
    Ok(OracleComparison {
        z_edges,
        x_edges,
        density,
        empirical,
        total_mass: grid.total_mass,
        tv,
    })
}

pub const RUIN_AT_T_HEADER: [&str; 8] = [
    "t",
    "u",
    "sigma",
    "alpha",
    "ruin_prob",
    "err_budget",
    "mc_estimate",
    "mc_ci",
];

/// One row of the review-date ruin report; `mc` is `(estimate, ci_half_width)`.
pub fn ruin_at_t_row(p: &DiffusionRiskParams, t: f64, r: &RuinAtT, mc: Option<(f64, f64)>) -> Vec<String> {
    let (m, ci) = mc.map_or(("".to_string(), "".to_string()), |(m, c)| (fmt_f64(m), fmt_f64(c)));
    vec![
        fmt_f64(t),
        fmt_f64(p.u),
        fmt_f64(p.sigma),
        fmt_f64(p.alpha),
        fmt_f64(r.probability),
        fmt_f64(r.error_budget),
        m,
        ci,
    ]
}

pub fn write_ruin_at_t(path: &std::path::Path, rows: Vec<Vec<String>>) -> Result<()> {
    write_csv(path, &RUIN_AT_T_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_conventions() {
        let p = DiffusionRiskParams::new(2.0, 0.1, 1.0, 1.0, -0.1).unwrap();
        assert_eq!(
            DensityConvention::OracleValidated.kernel(&p, 1.0, 3.0),
            (2.0 + 0.1 * 3.0, 3.0)
        );
        assert_eq!(
            DensityConvention::Printed { lambda_mu: 1.0 }.kernel(&p, 1.0, 3.0),
            (2.1, 4.5)
        );
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DiffusionRiskParams::new(1.0, 0.1, 0.0, 1.0, 0.0).is_err());
        assert!(DiffusionRiskParams::new(1.0, 0.1, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let nodes: Vec<f64> = GaussLegendre::<f64>::new(6).nodes;
        let bw = barycentric_weights(&nodes);
        let vals: Vec<Complex64> = nodes.iter().map(|x| Complex64::new(x.powi(5) - x, 0.0)).collect();
        let got = interpolate(&nodes, &bw, &vals, 0.3).re;
        assert!((got - (0.3f64.powi(5) - 0.3)).abs() < 1e-13);
    }

    #[test]
    fn lognormal_cf_at_origin_is_one() {
        let c = lognormal_cf(1.0, -0.1, 1.0, 0.0);
        assert!((c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12);
    }
}
