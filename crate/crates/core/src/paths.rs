//! Joint trajectories of the classical capital `X_t` and the invested
//! capital `X'_t`.
//!
//! Three constructions of the invested capital are available:
//!
//! * [`Scheme::DilationExact`]: the investment index acts as a dilation on
//!   the increments of the classical process,
//!   `X'_t = e^{E_t} u + ∫ e^{E_s} c_s ds − Σ e^{E_{T_k}} Y_k`.
//! * [`Scheme::Reinvested`]: capital continuously invested in the asset,
//!   `dX' = X' dS/S + dX`, through its exact solution
//!   `X'_t = e^{E_t} (u + ∫ e^{−E_s} c_s ds − Σ e^{−E_{T_k}} Y_k)`.
//! * [`Scheme::EulerSde`]: Euler–Maruyama on
//!   `dX' = a X' dt + σ X' dB + dX`, used to cross-check the exact solution.
//!
//! Here `E_t = σB_t + αt` (or `σL_t + αt`). The Brownian path lives on a
//! uniform base grid; claim instants are inserted as extra nodes whose
//! Brownian values are bridge samples conditioned on the points already
//! known, so the coarse-grid values never depend on the claims.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv};
use crate::model::{InvestmentModel, PremiumSpec, RiskParams};
use crate::processes::{levy_env, std_normal, Claims, LevyJumpSpec, LevyJumps, PathRng, SeedSpec, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    DilationExact,
    Reinvested,
    EulerSde,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::DilationExact => "dilation",
            Scheme::Reinvested => "reinvested",
            Scheme::EulerSde => "euler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoid,
    LeftEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    /// Base step of the output grid.
    pub dt: f64,
    /// Number of dyadic bridge refinements applied to a Brownian path
    /// sampled at step `dt · 2^refine`. Paths that differ only in `refine`
    /// share their coarse nodes exactly.
    pub refine: u32,
    pub scheme: Scheme,
    pub quadrature: Quadrature,
}

impl SchemeConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            refine: 0,
            scheme,
            quadrature: Quadrature::Trapezoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(
                "dt",
                format!("step size must be positive, got {}", self.dt),
            ));
        }
        if self.refine > 24 {
            return Err(Error::domain("refine", "at most 24 refinement levels"));
        }
        Ok(())
    }
}

/// One node of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    /// `E_t = σB_t + αt` (or `σL_t + αt`).
    pub env: f64,
    pub x: f64,
    pub xp: f64,
    /// Running premium integral weighted by the scheme's dilation factor.
    pub premium_integral: f64,
    /// Running integral of the dilation factor alone.
    pub unit_integral: f64,
    pub is_claim: bool,
}

/// A fully recorded path (structure of arrays).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub scheme: Scheme,
    pub u: f64,
    pub t: Vec<f64>,
    pub env: Vec<f64>,
    pub x: Vec<f64>,
    pub xp: Vec<f64>,
    pub premium_integral: Vec<f64>,
    pub unit_integral: Vec<f64>,
    pub is_claim: Vec<bool>,
    pub claims: Vec<(f64, f64)>,
    pub jumps: Vec<(f64, f64)>,
    /// First node with `X' < 0`.
    pub ruined_at: Option<f64>,
}

impl SimulatedPath {
    fn empty(scheme: Scheme, u: f64) -> Self {
        Self {
            scheme,
            u,
            t: Vec::new(),
            env: Vec::new(),
            x: Vec::new(),
            xp: Vec::new(),
            premium_integral: Vec::new(),
            unit_integral: Vec::new(),
            is_claim: Vec::new(),
            claims: Vec::new(),
            jumps: Vec::new(),
            ruined_at: None,
        }
    }

    fn push(&mut self, n: &Node) {
        self.t.push(n.t);
        self.env.push(n.env);
        self.x.push(n.x);
        self.xp.push(n.xp);
        self.premium_integral.push(n.premium_integral);
        self.unit_integral.push(n.unit_integral);
        self.is_claim.push(n.is_claim);
        if self.ruined_at.is_none() && n.xp < 0.0 {
            self.ruined_at = Some(n.t);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Writes `t, env, X, Xp, is_claim`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let rows = (0..self.len()).map(|i| {
            vec![
                fmt_f64(self.t[i]),
                fmt_f64(self.env[i]),
                fmt_f64(self.x[i]),
                fmt_f64(self.xp[i]),
                (self.is_claim[i] as u8).to_string(),
            ]
        });
        write_csv(path, &["t", "env", "X", "Xp", "is_claim"], rows)
    }

    /// Index of the node at exactly time `t`, if any.
    pub fn node_at(&self, t: f64) -> Option<usize> {
        self.t.iter().position(|&s| s == t)
    }
}

/// Brownian path on the base grid, built coarse interval by coarse interval.
///
/// Within a coarse interval the Brownian values are sampled in this order:
/// the right end point, the nonzero claim instants (bridges between the
/// points known so far), the dyadic refinement levels (each conditioned on
/// every point already known) and finally the zero-size claim instants.
/// Refining the grid therefore never moves a claim instant's value, and a
/// zero-size claim never moves anything else.
struct Walker {
    coarse_dt: f64,
    horizon: f64,
    coarse: PathRng,
    levels: Vec<PathRng>,
    t: f64,
    w: f64,
    done: bool,
    known: Vec<(f64, f64)>,
    grid: Vec<(f64, f64)>,
    scratch: Vec<(f64, f64)>,
}

/// Samples `W_t` given the known points around `t` and records it.
fn insert_bridge(known: &mut Vec<(f64, f64)>, t: f64, rng: &mut PathRng) -> f64 {
    let pos = known.partition_point(|k| k.0 < t);
    if pos < known.len() && known[pos].0 == t {
        return known[pos].1;
    }
    let (l, r) = (known[pos - 1], known[pos]);
    let w = bridge(l.0, l.1, r.0, r.1, t, rng);
    known.insert(pos, (t, w));
    w
}

impl Walker {
    fn new(cfg: &SchemeConfig, horizon: f64, stream: SeedSpec) -> Self {
        let coarse_dt = cfg.dt * f64::powi(2.0, cfg.refine as i32);
        Self {
            coarse_dt,
            horizon,
            coarse: stream.rng(Substream::Brownian),
            levels: (1..=cfg.refine).map(|k| stream.rng(Substream::Refine(k))).collect(),
            t: 0.0,
            w: 0.0,
            done: false,
            known: Vec::new(),
            grid: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Right end of coarse interval `k`, or `None` past the horizon.
    fn coarse_end(&mut self, k: u64) -> Option<f64> {
        if self.done {
            return None;
        }
        let mut t1 = (k + 1) as f64 * self.coarse_dt;
        if t1 >= self.horizon * (1.0 - 1e-12) {
            t1 = self.horizon;
            self.done = true;
        }
        Some(t1)
    }

    /// Fills `out` with the base nodes `(t, W_t)` in `(self.t, t1]` and
    /// `claim_w` with the Brownian value at each claim of `claims`.
    fn fill(
        &mut self,
        t1: f64,
        claims: &[(f64, f64)],
        main: &mut PathRng,
        null: &mut PathRng,
        out: &mut Vec<(f64, f64)>,
        claim_w: &mut Vec<f64>,
    ) {
        let h = t1 - self.t;
        let w1 = self.w + h.sqrt() * std_normal(&mut self.coarse);
        out.clear();
        claim_w.clear();
        if claims.is_empty() && self.levels.is_empty() {
            out.push((t1, w1));
        } else {
            self.known.clear();
            self.known.push((self.t, self.w));
            self.known.push((t1, w1));
            claim_w.resize(claims.len(), f64::NAN);
            for (i, &(tc, y)) in claims.iter().enumerate() {
                if y != 0.0 {
                    claim_w[i] = insert_bridge(&mut self.known, tc, main);
                }
            }
            self.grid.clear();
            self.grid.push((self.t, self.w));
            self.grid.push((t1, w1));
            for rng in &mut self.levels {
                self.scratch.clear();
                self.scratch.push(self.grid[0]);
                for k in 1..self.grid.len() {
                    let (ta, tb) = (self.grid[k - 1].0, self.grid[k].0);
                    let tm = 0.5 * (ta + tb);
                    let wm = insert_bridge(&mut self.known, tm, rng);
                    self.scratch.push((tm, wm));
                    self.scratch.push(self.grid[k]);
                }
                std::mem::swap(&mut self.grid, &mut self.scratch);
            }
            for (i, &(tc, y)) in claims.iter().enumerate() {
                if y == 0.0 {
                    claim_w[i] = insert_bridge(&mut self.known, tc, null);
                }
            }
            out.extend_from_slice(&self.grid[1..]);
        }
        self.t = t1;
        self.w = w1;
    }
}

/// Bridge value at `t` between `(ta, wa)` and `(tb, wb)`.
#[inline]
fn bridge(ta: f64, wa: f64, tb: f64, wb: f64, t: f64, rng: &mut PathRng) -> f64 {
    let h = tb - ta;
    let s = t - ta;
    let mean = wa + (wb - wa) * s / h;
    let var = s * (tb - t) / h;
    mean + var.max(0.0).sqrt() * std_normal(rng)
}

/// Everything the engine needs, resolved once per path.
struct Setup<'a> {
    params: &'a RiskParams<f64>,
    scheme: Scheme,
    quadrature: Quadrature,
    sigma: f64,
    alpha: f64,
    a: f64,
    kappa: f64,
    jumps: Option<LevyJumpSpec<f64>>,
    identity: bool,
}

impl<'a> Setup<'a> {
    fn new(params: &'a RiskParams<f64>, inv: &InvestmentModel<f64>, cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let jumps = inv.jumps().copied().filter(|j| j.intensity > 0.0);
        let a = match (cfg.scheme, inv.return_rate()) {
            (Scheme::EulerSde, None) => {
                return Err(Error::Unsupported(
                    "the Euler scheme needs a return rate `a`; exponential-Lévy investment has none".into(),
                ))
            }
            (_, a) => a.unwrap_or(0.0),
        };
        let sigma = inv.sigma();
        let alpha = inv.alpha();
        Ok(Self {
            params,
            scheme: cfg.scheme,
            quadrature: cfg.quadrature,
            sigma,
            alpha,
            a,
            kappa: jumps.map(|j| j.compensation()).unwrap_or(0.0),
            jumps,
            identity: sigma == 0.0 && alpha == 0.0 && jumps.is_none(),
        })
    }

    #[inline(always)]
    fn env(&self, w: f64, jsum: f64, t: f64) -> f64 {
        levy_env(self.sigma, self.alpha, w, jsum, self.kappa, t)
    }

    /// Dilation factor used in the integrals: `e^{E}` or `e^{−E}`.
    #[inline(always)]
    fn weight(&self, env: f64) -> f64 {
        if self.identity {
            1.0
        } else {
            match self.scheme {
                Scheme::DilationExact => env.exp(),
                Scheme::Reinvested | Scheme::EulerSde => (-env).exp(),
            }
        }
    }

    #[inline(always)]
    fn quad(&self, h: f64, fa: f64, fb: f64) -> f64 {
        match self.quadrature {
            Quadrature::Trapezoid => 0.5 * h * (fa + fb),
            Quadrature::LeftEndpoint => h * fa,
        }
    }
}

/// Running state at the last base node.
#[derive(Clone, Copy)]
struct State {
    t: f64,
    jsum: f64,
    weight: f64,
    unit: f64,
    prem: f64,
    /// Cumulative undilated premium `∫ c_s ds`.
    income: f64,
}

struct Accounts {
    classical_claims: f64,
    /// Claims dilated (or discounted) by the scheme weight.
    weighted_claims: f64,
    euler_t: f64,
    euler_w: f64,
    euler_xp: f64,
}

fn capital(setup: &Setup, t: f64, env: f64, weight: f64, prem: f64, income: f64, acc: &Accounts) -> (f64, f64) {
    let u = setup.params.u;
    let x = match setup.params.premium {
        PremiumSpec::Constant(c) => u + c * t,
        _ => u + income,
    } - acc.classical_claims;
    let xp = match setup.scheme {
        Scheme::DilationExact => {
            // The weight is already e^{E} here.
            weight * u + prem - acc.weighted_claims
        }
        Scheme::Reinvested => {
            let e = if setup.identity { 1.0 } else { env.exp() };
            e * (u + prem - acc.weighted_claims)
        }
        Scheme::EulerSde => acc.euler_xp,
    };
    (x, xp)
}

fn euler_advance(setup: &Setup, acc: &mut Accounts, t: f64, w: f64, claim: f64) {
    let h = t - acc.euler_t;
    let dw = w - acc.euler_w;
    let c = setup.params.premium.rate(acc.euler_t);
    acc.euler_xp += acc.euler_xp * (setup.a * h + setup.sigma * dw) + c * h - claim;
    acc.euler_t = t;
    acc.euler_w = w;
}

/// (time, size) pairs.
type Events = Vec<(f64, f64)>;

/// Streams the nodes of one path to `visit` until the horizon or until the
/// visitor breaks. Returns the claims and Lévy jumps seen.
fn run_path<F>(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    stream: SeedSpec,
    record_events: bool,
    mut visit: F,
) -> Result<(Events, Events)>
where
    F: FnMut(&Node) -> ControlFlow<()>,
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "horizon",
            format!("must be positive and finite, got {horizon}"),
        ));
    }
    let setup = Setup::new(params, inv, cfg)?;
    let constant_c = match params.premium {
        PremiumSpec::Constant(c) => Some(c),
        _ => None,
    };
    let mut walker = Walker::new(cfg, horizon, stream);
    let mut claims = Claims::new(&params.arrivals, &params.claims, stream).peekable();
    let mut levy = setup.jumps.map(|j| LevyJumps::new(j, stream).peekable());
    let mut bridge_main = stream.rng(Substream::ClaimBridge);
    let mut bridge_null = stream.rng(Substream::NullClaimBridge);

    let mut seen_claims = Vec::new();
    let mut seen_jumps = Vec::new();
    let mut block: Vec<(f64, f64)> = Vec::new();
    let mut block_w: Vec<f64> = Vec::new();
    let mut fine: Vec<(f64, f64)> = Vec::new();

    let mut st = State {
        t: 0.0,
        jsum: 0.0,
        weight: 1.0,
        unit: 0.0,
        prem: 0.0,
        income: 0.0,
    };
    let mut acc = Accounts {
        classical_claims: 0.0,
        weighted_claims: 0.0,
        euler_t: 0.0,
        euler_w: 0.0,
        euler_xp: params.u,
    };
    let start = Node {
        t: 0.0,
        env: 0.0,
        x: params.u,
        xp: params.u,
        premium_integral: 0.0,
        unit_integral: 0.0,
        is_claim: false,
    };
    if visit(&start).is_break() {
        return Ok((seen_claims, seen_jumps));
    }

    let mut k = 0u64;
    while let Some(t1) = walker.coarse_end(k) {
        k += 1;
        block.clear();
        while let Some(&(tc, yc)) = claims.peek() {
            if tc > t1 {
                break;
            }
            claims.next();
            if record_events {
                seen_claims.push((tc, yc));
            }
            block.push((tc, yc));
        }
        walker.fill(t1, &block, &mut bridge_main, &mut bridge_null, &mut fine, &mut block_w);
        let mut next_claim = 0usize;
        for &(tb, wb) in fine.iter() {
            // Lévy jumps up to tb (exact times; the left limit is used at tb's claim if simultaneous).
            let mut jsum_b = st.jsum;
            let mut jumps_here: Vec<(f64, f64)> = Vec::new();
            if let Some(lj) = levy.as_mut() {
                while let Some(&(tj, sj)) = lj.peek() {
                    if tj > tb {
                        break;
                    }
                    lj.next();
                    jsum_b += sj;
                    jumps_here.push((tj, sj));
                    if record_events {
                        seen_jumps.push((tj, sj));
                    }
                }
            }

            // Claims strictly inside (st.t, tb) become nodes; a claim exactly at tb is applied at the base node.
            let mut claim_at_b = 0.0;
            let mut has_claim_at_b = false;
            while next_claim < block.len() && block[next_claim].0 <= tb {
                let (tc, yc) = block[next_claim];
                let wc = block_w.get(next_claim).copied().unwrap_or(wb);
                next_claim += 1;
                if tc == tb {
                    claim_at_b += yc;
                    has_claim_at_b = true;
                    continue;
                }
                {
                    let jsum_c = st.jsum + jumps_here.iter().filter(|j| j.0 <= tc).map(|j| j.1).sum::<f64>();
                    let env_c = setup.env(wc, jsum_c, tc);
                    let weight_c = setup.weight(env_c);
                    let h = tc - st.t;
                    let (unit_c, prem_c, income_c);
                    if setup.identity {
                        unit_c = tc;
                        income_c = st.income + params.premium.integral(st.t, tc);
                        prem_c = match constant_c {
                            Some(c) => c * tc,
                            None => income_c,
                        };
                    } else {
                        unit_c = st.unit + setup.quad(h, st.weight, weight_c);
                        income_c = st.income + params.premium.integral(st.t, tc);
                        prem_c = match constant_c {
                            Some(c) => c * unit_c,
                            None => {
                                st.prem
                                    + setup.quad(
                                        h,
                                        params.premium.rate(st.t) * st.weight,
                                        params.premium.rate(tc) * weight_c,
                                    )
                            }
                        };
                    }
                    acc.classical_claims += yc;
                    acc.weighted_claims += match setup.scheme {
                        Scheme::DilationExact if !setup.identity => env_c.exp() * yc,
                        Scheme::Reinvested if !setup.identity => (-env_c).exp() * yc,
                        _ => yc,
                    };
                    if setup.scheme == Scheme::EulerSde {
                        euler_advance(&setup, &mut acc, tc, wc, yc);
                    }
                    let (x, xp) = capital(&setup, tc, env_c, weight_c, prem_c, income_c, &acc);
                    let node = Node {
                        t: tc,
                        env: env_c,
                        x,
                        xp,
                        premium_integral: prem_c,
                        unit_integral: unit_c,
                        is_claim: true,
                    };
                    if visit(&node).is_break() {
                        return Ok((seen_claims, seen_jumps));
                    }
                }
            }

            // Base node.
            let env_b = setup.env(wb, jsum_b, tb);
            let weight_b = setup.weight(env_b);
            let h = tb - st.t;
            let income_b = match constant_c {
                Some(_) => 0.0,
                None => st.income + params.premium.integral(st.t, tb),
            };
            let (unit_b, prem_b);
            if setup.identity {
                unit_b = tb;
                prem_b = match constant_c {
                    Some(c) => c * tb,
                    None => income_b,
                };
            } else {
                unit_b = st.unit + setup.quad(h, st.weight, weight_b);
                prem_b = match constant_c {
                    Some(c) => c * unit_b,
                    None => {
                        st.prem
                            + setup.quad(
                                h,
                                params.premium.rate(st.t) * st.weight,
                                params.premium.rate(tb) * weight_b,
                            )
                    }
                };
            }
            if has_claim_at_b {
                acc.classical_claims += claim_at_b;
                acc.weighted_claims += match setup.scheme {
                    Scheme::DilationExact if !setup.identity => env_b.exp() * claim_at_b,
                    Scheme::Reinvested if !setup.identity => (-env_b).exp() * claim_at_b,
                    _ => claim_at_b,
                };
            }
            if setup.scheme == Scheme::EulerSde {
                euler_advance(&setup, &mut acc, tb, wb, claim_at_b);
            }
            st = State {
                t: tb,
                jsum: jsum_b,
                weight: weight_b,
                unit: unit_b,
                prem: prem_b,
                income: income_b,
            };
            let (x, xp) = capital(&setup, tb, env_b, weight_b, prem_b, income_b, &acc);
            let node = Node {
                t: tb,
                env: env_b,
                x,
                xp,
                premium_integral: prem_b,
                unit_integral: unit_b,
                is_claim: has_claim_at_b,
            };
            if visit(&node).is_break() {
                return Ok((seen_claims, seen_jumps));
            }
        }
    }
    Ok((seen_claims, seen_jumps))
}

/// Streams nodes without recording them; used by the Monte Carlo estimators.
pub fn stream_invested<F>(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    stream: SeedSpec,
    visit: F,
) -> Result<()>
where
    F: FnMut(&Node) -> ControlFlow<()>,
{
    run_path(params, inv, cfg, horizon, stream, false, visit).map(|_| ())
}

/// First time the invested capital is negative, if before `horizon`.
pub fn first_ruin_time(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    stream: SeedSpec,
) -> Result<Option<f64>> {
    let mut ruin = None;
    stream_invested(params, inv, cfg, horizon, stream, |n| {
        if n.xp < 0.0 {
            ruin = Some(n.t);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(ruin)
}

/// Full trajectory of the invested process.
pub fn simulate_invested(
    params: &RiskParams<f64>,
    inv: &InvestmentModel<f64>,
    cfg: &SchemeConfig,
    horizon: f64,
    stream: SeedSpec,
) -> Result<SimulatedPath> {
    let mut path = SimulatedPath::empty(cfg.scheme, params.u);
    let (claims, jumps) = run_path(params, inv, cfg, horizon, stream, true, |n| {
        path.push(n);
        ControlFlow::Continue(())
    })?;
    path.claims = claims;
    path.jumps = jumps;
    Ok(path)
}

/// Classical capital only, exact at the claim instants; nodes at 0, every
/// claim time and the horizon. `xp` mirrors `x` (identity dilation).
pub fn simulate_classical(params: &RiskParams<f64>, horizon: f64, stream: SeedSpec) -> Result<SimulatedPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "horizon",
            format!("must be positive and finite, got {horizon}"),
        ));
    }
    let u = params.u;
    let mut path = SimulatedPath::empty(Scheme::DilationExact, u);
    let income = |t: f64| match params.premium {
        PremiumSpec::Constant(c) => c * t,
        _ => params.premium.integral(0.0, t),
    };
    let node = |t: f64, x: f64, is_claim: bool| Node {
        t,
        env: 0.0,
        x,
        xp: x,
        premium_integral: income(t),
        unit_integral: t,
        is_claim,
    };
    path.push(&node(0.0, u, false));
    let mut claimed = 0.0;
    for (t, y) in Claims::new(&params.arrivals, &params.claims, stream) {
        if t > horizon {
            break;
        }
        claimed += y;
        path.claims.push((t, y));
        path.push(&node(t, u + income(t) - claimed, true));
    }
    if path.t.last() != Some(&horizon) {
        path.push(&node(horizon, u + income(horizon) - claimed, false));
    }
    Ok(path)
}

/// Ruin time of the classical process (claim instants only).
pub fn classical_ruin_time(params: &RiskParams<f64>, horizon: f64, stream: SeedSpec) -> Option<f64> {
    let u = params.u;
    let mut claimed = 0.0;
    for (t, y) in Claims::new(&params.arrivals, &params.claims, stream) {
        if t > horizon {
            return None;
        }
        claimed += y;
        let income = match params.premium {
            PremiumSpec::Constant(c) => c * t,
            _ => params.premium.integral(0.0, t),
        };
        if u + income - claimed < 0.0 {
            return Some(t);
        }
    }
    None
}

/// Outcome of the pathwise check of `X'_t <= envelope_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    pub holds: bool,
    /// `max_t (X'_t − envelope_t)`, clipped at zero.
    pub max_violation: f64,
    /// `min_t (envelope_t − X'_t)`.
    pub min_slack: f64,
}

/// Checks the capital envelope implied by positive claims and a premium rate
/// bounded by `c_bar`: for the dilation scheme
/// `X'_t <= e^{E_t} u + c̄ ∫ e^{E_s} ds`, for the reinvested scheme
/// `X'_t <= e^{E_t} (u + c̄ ∫ e^{−E_s} ds)`.
pub fn check_boundedness(path: &SimulatedPath, c_bar: f64, tolerance: f64) -> Result<Boundedness> {
    let mut max_violation: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for i in 0..path.len() {
        let e = path.env[i].exp();
        let bound = match path.scheme {
            Scheme::DilationExact => e * path.u + c_bar * path.unit_integral[i],
            Scheme::Reinvested => e * (path.u + c_bar * path.unit_integral[i]),
            Scheme::EulerSde => {
                return Err(Error::Unsupported("the envelope check needs an exact scheme".into()));
            }
        };
        let slack = bound - path.xp[i];
        min_slack = min_slack.min(slack);
        if -slack > max_violation {
            max_violation = -slack;
        }
    }
    Ok(Boundedness {
        holds: max_violation <= tolerance,
        max_violation,
        min_slack,
    })
}

/// Running supremum of the capital envelope and the dilation term at one
/// checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub horizon: f64,
    /// `sup_{t <= horizon} (e^{E_t} u + c̄ ∫_0^t e^{E_s} ds)`.
    pub supremum: f64,
    /// `e^{E_horizon} u`.
    pub dilation: f64,
}

/// The dilation envelope `e^{E_t} u + c̄ ∫ e^{E_s} ds` along the Brownian
/// (or Lévy) path of `stream`, reported at each checkpoint.
pub fn envelope_profile(
    inv: &InvestmentModel<f64>,
    u: f64,
    c_bar: f64,
    checkpoints: &[f64],
    cfg: &SchemeConfig,
    stream: SeedSpec,
) -> Result<Vec<EnvelopePoint>> {
    let horizon = checkpoints.iter().copied().fold(f64::NAN, f64::max);
    if checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("checkpoints", "must be strictly increasing"));
    }
    let params = RiskParams::new(
        u,
        PremiumSpec::Constant(c_bar),
        crate::processes::CountingProcess::schedule(vec![]),
        crate::model::ClaimLaw::exponential(1.0)?,
    )?;
    let cfg = SchemeConfig {
        scheme: Scheme::DilationExact,
        ..*cfg
    };
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sup = f64::NEG_INFINITY;
    let mut next = 0;
    stream_invested(&params, inv, &cfg, horizon, stream, |n| {
        sup = sup.max(n.xp);
        while next < checkpoints.len() && n.t >= checkpoints[next] * (1.0 - 1e-12) {
            out.push(EnvelopePoint {
                horizon: checkpoints[next],
                supremum: sup,
                dilation: n.env.exp() * u,
            });
            next += 1;
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Envelope supremum and terminal dilation term over `[0, horizon]`.
pub fn envelope_supremum(
    inv: &InvestmentModel<f64>,
    u: f64,
    c_bar: f64,
    horizon: f64,
    cfg: &SchemeConfig,
    stream: SeedSpec,
) -> Result<EnvelopePoint> {
    Ok(envelope_profile(inv, u, c_bar, &[horizon], cfg, stream)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClaimLaw;
    use crate::processes::CountingProcess;

    fn exp1() -> ClaimLaw<f64> {
        ClaimLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn no_claims_classical_is_linear() {
        let p = RiskParams::new(
            3.0,
            PremiumSpec::Constant(1.5),
            CountingProcess::schedule(vec![]),
            exp1(),
        )
        .unwrap();
        let path = simulate_classical(&p, 10.0, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(path.t, vec![0.0, 10.0]);
        assert_eq!(path.x[1], 3.0 + 1.5 * 10.0);
        assert_eq!(path.ruined_at, None);
    }

    #[test]
    fn single_large_claim_ruins() {
        let p = RiskParams::new(
            10.0,
            PremiumSpec::Constant(1.0),
            CountingProcess::schedule_with_sizes(vec![5.0], vec![20.0]),
            exp1(),
        )
        .unwrap();
        let path = simulate_classical(&p, 10.0, SeedSpec::new(1, 0)).unwrap();
        let i = path.node_at(5.0).unwrap();
        assert_eq!(path.x[i], -5.0);
        assert_eq!(path.ruined_at, Some(5.0));
        assert_eq!(classical_ruin_time(&p, 10.0, SeedSpec::new(1, 0)), Some(5.0));

        let cfg = SchemeConfig::new(0.1, Scheme::DilationExact);
        let inv = InvestmentModel::none();
        let path = simulate_invested(&p, &inv, &cfg, 10.0, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(path.ruined_at, Some(5.0));
    }

    #[test]
    fn identity_dilation_reproduces_classical() {
        let p = RiskParams::poisson(4.0, 1.1, 1.0, exp1()).unwrap();
        let inv = InvestmentModel::gbm(0.0, 0.0).unwrap();
        for scheme in [Scheme::DilationExact, Scheme::Reinvested] {
            let path =
                simulate_invested(&p, &inv, &SchemeConfig::new(0.07, scheme), 50.0, SeedSpec::new(2, 3)).unwrap();
            assert!(path.claims.len() > 10);
            assert_eq!(path.x, path.xp);
            for (i, &t) in path.t.iter().enumerate() {
                assert_eq!(path.env[i], 0.0);
                assert!(path.t[i] <= 50.0 && t >= 0.0);
            }
        }
    }

    #[test]
    fn claim_times_become_nodes() {
        let p = RiskParams::poisson(4.0, 1.1, 2.0, exp1()).unwrap();
        let inv = InvestmentModel::gbm(0.05, 0.3).unwrap();
        let path = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(0.25, Scheme::DilationExact),
            20.0,
            SeedSpec::new(5, 1),
        )
        .unwrap();
        for &(t, _) in &path.claims {
            let i = path.node_at(t).expect("claim node");
            assert!(path.is_claim[i]);
        }
        assert!(path.t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deterministic_interest_closed_form() {
        let (u, c, a, horizon) = (5.0, 2.0, 0.05, 10.0);
        let p = RiskParams::new(u, PremiumSpec::Constant(c), CountingProcess::schedule(vec![]), exp1()).unwrap();
        let inv = InvestmentModel::Deterministic { a };
        let path = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(1e-3, Scheme::DilationExact),
            horizon,
            SeedSpec::new(1, 1),
        )
        .unwrap();
        for (i, &t) in path.t.iter().enumerate().step_by(97) {
            let exact = (a * t).exp() * u + c * ((a * t).exp() - 1.0) / a;
            assert!((path.xp[i] - exact).abs() <= 1e-4 * (1.0 + exact.abs()), "t={t}");
        }
    }

    #[test]
    fn euler_without_volatility_tracks_exact_solution() {
        let (u, c, a, horizon) = (5.0, 2.0, 0.05, 10.0);
        let p = RiskParams::new(u, PremiumSpec::Constant(c), CountingProcess::schedule(vec![]), exp1()).unwrap();
        let inv = InvestmentModel::Deterministic { a };
        let path = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(1e-4, Scheme::EulerSde),
            horizon,
            SeedSpec::new(1, 1),
        )
        .unwrap();
        // dX' = aX' dt + c dt has X'_t = e^{at}u + c(e^{at} − 1)/a.
        let exact = (a * horizon).exp() * u + c * ((a * horizon).exp() - 1.0) / a;
        assert!((path.xp.last().unwrap() - exact).abs() < 1e-3 * exact);
        let reinv = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(1e-3, Scheme::Reinvested),
            horizon,
            SeedSpec::new(1, 1),
        )
        .unwrap();
        assert!((reinv.xp.last().unwrap() - exact).abs() < 1e-5 * exact);
    }

    #[test]
    fn boundedness_tight_without_claims() {
        let p = RiskParams::new(
            7.0,
            PremiumSpec::Constant(1.3),
            CountingProcess::schedule(vec![]),
            exp1(),
        )
        .unwrap();
        let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
        for scheme in [Scheme::DilationExact, Scheme::Reinvested] {
            let path =
                simulate_invested(&p, &inv, &SchemeConfig::new(0.01, scheme), 30.0, SeedSpec::new(3, 3)).unwrap();
            let b = check_boundedness(&path, 1.3, 1e-12).unwrap();
            assert!(b.holds);
            assert!(b.max_violation <= 1e-12 * 100.0);
            assert!(b.min_slack.abs() <= 1e-9);
        }
    }

    #[test]
    fn boundedness_strict_after_first_claim() {
        let p = RiskParams::poisson(7.0, 1.3, 1.0, exp1()).unwrap();
        let inv = InvestmentModel::gbm(0.01, 0.2).unwrap();
        let path = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(0.01, Scheme::DilationExact),
            30.0,
            SeedSpec::new(3, 4),
        )
        .unwrap();
        let first = path.claims[0].0;
        for i in 0..path.len() {
            if path.t[i] >= first {
                let bound = path.env[i].exp() * 7.0 + 1.3 * path.unit_integral[i];
                assert!(path.xp[i] < bound);
            }
        }
    }

    #[test]
    fn envelope_without_volatility() {
        let inv = InvestmentModel::Deterministic { a: -0.02 };
        let e = envelope_supremum(
            &inv,
            10.0,
            1.0,
            50.0,
            &SchemeConfig::new(0.01, Scheme::DilationExact),
            SeedSpec::new(1, 0),
        )
        .unwrap();
        assert_eq!(e.dilation, (-0.02f64 * 50.0).exp() * 10.0);
    }

    #[test]
    fn euler_rejects_levy() {
        let p = RiskParams::poisson(1.0, 1.0, 1.0, exp1()).unwrap();
        let inv = InvestmentModel::exp_levy(0.2, -0.01, LevyJumpSpec::none()).unwrap();
        let r = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(0.1, Scheme::EulerSde),
            1.0,
            SeedSpec::new(1, 1),
        );
        assert!(matches!(r, Err(Error::Unsupported(_))));
        let r = simulate_invested(
            &p,
            &inv,
            &SchemeConfig::new(0.0, Scheme::DilationExact),
            1.0,
            SeedSpec::new(1, 1),
        );
        assert!(matches!(r, Err(Error::Domain { .. })));
    }
}
