//! Random-variate generation: claim arrivals, claim sizes, Brownian and
//! mean-zero Lévy increments.
//!
//! Every random quantity is drawn from a [`Substream`] of a [`SeedSpec`].
//! A substream is a ChaCha8 generator whose key is derived from the master
//! seed and the substream tag, and whose 64-bit stream id is the path index,
//! so the mapping `(seed, path, tag) -> stream` is injective in the path index
//! and independent of execution order or thread count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::ClaimLaw;
use crate::num::Real;

/// Default master seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_2006_0000_0001;

pub type PathRng = ChaCha8Rng;

/// Master seed plus path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master: u64,
    pub path: u64,
}

/// Independent random sources within a single path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    /// Brownian increments on the coarse grid.
    Brownian,
    /// Bridge midpoints inserted by dyadic refinement level `k >= 1`.
    Refine(u32),
    Arrivals,
    ClaimSizes,
    /// Bridge values of the Brownian part at claim instants.
    ClaimBridge,
    /// Bridge values at zero-size claim instants, kept apart so that such
    /// claims never perturb any other value of the path.
    NullClaimBridge,
    LevyJumps,
    /// Secondary Brownian motion (the risk diffusion `W`).
    RiskNoise,
    /// Free for test harnesses and oracles.
    Auxiliary(u32),
}

impl Substream {
    fn tag(self) -> u64 {
        match self {
            Substream::Brownian => 1,
            Substream::Refine(k) => 0x100 + k as u64,
            Substream::Arrivals => 2,
            Substream::ClaimSizes => 3,
            Substream::ClaimBridge => 4,
            Substream::NullClaimBridge => 5,
            Substream::LevyJumps => 6,
            Substream::RiskNoise => 7,
            Substream::Auxiliary(k) => 0x1_0000 + k as u64,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master: u64, path: u64) -> Self {
        Self { master, path }
    }

    /// Generator for one substream of this path.
    pub fn rng(&self, sub: Substream) -> PathRng {
        let mut state = self.master ^ sub.tag().wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.path);
        rng
    }
}

#[inline]
pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[inline]
fn std_exp<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

impl ClaimLaw<f64> {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ClaimLaw::Exponential { mean } => mean * std_exp(rng),
            ClaimLaw::Pareto { shape, scale } => {
                // Inversion of the Lomax survival function; `1 - U` lies in (0, 1].
                let u: f64 = 1.0 - rng.random::<f64>();
                scale * (u.powf(-1.0 / shape) - 1.0)
            }
            ClaimLaw::LogNormal { location, scale } => (location + scale * std_normal(rng)).exp(),
        }
    }
}

/// Claim counting process.
#[derive(Debug, Clone, PartialEq)]
pub enum CountingProcess<T> {
    Poisson {
        rate: T,
    },
    /// Renewal process with i.i.d. inter-arrival times.
    Renewal {
        inter_arrival: ClaimLaw<T>,
    },
    /// Fixed claim instants; optional fixed sizes override the claim law.
    Schedule {
        times: Vec<T>,
        sizes: Option<Vec<T>>,
    },
}

impl<T: Real> CountingProcess<T> {
    pub fn schedule(times: Vec<T>) -> Self {
        CountingProcess::Schedule { times, sizes: None }
    }

    pub fn schedule_with_sizes(times: Vec<T>, sizes: Vec<T>) -> Self {
        CountingProcess::Schedule {
            times,
            sizes: Some(sizes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CountingProcess::Poisson { rate } => {
                if !(*rate > T::zero() && rate.is_finite()) {
                    return Err(Error::domain(
                        "lambda",
                        format!("claim intensity must be positive, got {rate}"),
                    ));
                }
            }
            CountingProcess::Renewal { .. } => {}
            CountingProcess::Schedule { times, sizes } => {
                if times.windows(2).any(|w| !(w[0] < w[1])) || times.first().is_some_and(|t| !(*t > T::zero())) {
                    return Err(Error::domain(
                        "schedule",
                        "claim times must be positive and strictly increasing",
                    ));
                }
                if let Some(sizes) = sizes {
                    if sizes.len() != times.len() {
                        return Err(Error::domain("schedule", "sizes and times differ in length"));
                    }
                    if sizes.iter().any(|y| !(*y >= T::zero())) {
                        return Err(Error::domain("schedule", "claim sizes must be nonnegative"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Long-run arrival rate; `None` for a fixed schedule.
    pub fn intensity(&self) -> Option<T> {
        match self {
            CountingProcess::Poisson { rate } => Some(*rate),
            CountingProcess::Renewal { inter_arrival } => Some(inter_arrival.mean().recip()),
            CountingProcess::Schedule { .. } => None,
        }
    }
}

/// Lazily generated arrival times of a counting process.
pub struct Arrivals<'a> {
    process: &'a CountingProcess<f64>,
    rng: PathRng,
    last: f64,
    index: usize,
}

impl<'a> Arrivals<'a> {
    pub fn new(process: &'a CountingProcess<f64>, stream: SeedSpec) -> Self {
        Self {
            process,
            rng: stream.rng(Substream::Arrivals),
            last: 0.0,
            index: 0,
        }
    }
}

impl Iterator for Arrivals<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let t = match self.process {
            CountingProcess::Poisson { rate } => self.last + std_exp(&mut self.rng) / rate,
            CountingProcess::Renewal { inter_arrival } => {
                // A zero inter-arrival would break strict monotonicity.
                let mut gap = inter_arrival.sample(&mut self.rng);
                while gap <= 0.0 {
                    gap = inter_arrival.sample(&mut self.rng);
                }
                self.last + gap
            }
            CountingProcess::Schedule { times, .. } => *times.get(self.index)?,
        };
        self.index += 1;
        self.last = t;
        Some(t)
    }
}

/// Claims `(time, size)` in arrival order.
pub struct Claims<'a> {
    arrivals: Arrivals<'a>,
    law: &'a ClaimLaw<f64>,
    sizes: PathRng,
    k: usize,
}

impl<'a> Claims<'a> {
    pub fn new(process: &'a CountingProcess<f64>, law: &'a ClaimLaw<f64>, stream: SeedSpec) -> Self {
        Self {
            arrivals: Arrivals::new(process, stream),
            law,
            sizes: stream.rng(Substream::ClaimSizes),
            k: 0,
        }
    }
}

impl Iterator for Claims<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let t = self.arrivals.next()?;
        let y = match self.arrivals.process {
            CountingProcess::Schedule { sizes: Some(sizes), .. } => sizes[self.k],
            _ => self.law.sample(&mut self.sizes),
        };
        self.k += 1;
        Some((t, y))
    }
}

/// Sorted arrival times in `(0, horizon]`.
pub fn sample_arrivals(process: &CountingProcess<f64>, horizon: f64, stream: SeedSpec) -> Vec<f64> {
    Arrivals::new(process, stream).take_while(|&t| t <= horizon).collect()
}

/// Signed jump-size law for the Lévy investment driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw<T> {
    Fixed(T),
    Normal {
        mean: T,
        sd: T,
    },
    /// Positive jumps distributed as a claim law.
    Up(ClaimLaw<T>),
    /// Negative jumps whose magnitude follows a claim law.
    Down(ClaimLaw<T>),
}

impl<T: Real> JumpLaw<T> {
    pub fn mean(&self) -> T {
        match self {
            JumpLaw::Fixed(v) => *v,
            JumpLaw::Normal { mean, .. } => *mean,
            JumpLaw::Up(law) => law.mean(),
            JumpLaw::Down(law) => -law.mean(),
        }
    }
}

impl JumpLaw<f64> {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Fixed(v) => *v,
            JumpLaw::Normal { mean, sd } => mean + sd * std_normal(rng),
            JumpLaw::Up(law) => law.sample(rng),
            JumpLaw::Down(law) => -law.sample(rng),
        }
    }
}

/// Compound Poisson jump component of `L_t = B_t + Σ J_k − κt`, with the
/// compensator `κ = intensity · E[J]` making `E[L_t] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyJumpSpec<T> {
    pub intensity: T,
    pub law: JumpLaw<T>,
}

impl<T: Real> LevyJumpSpec<T> {
    pub fn none() -> Self {
        Self {
            intensity: T::zero(),
            law: JumpLaw::Fixed(T::zero()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= T::zero() && self.intensity.is_finite()) {
            return Err(Error::domain(
                "jumps.intensity",
                format!("must be finite and >= 0, got {}", self.intensity),
            ));
        }
        // Mean-zero compensation needs E|J| < ∞, which every supported law has.
        if !self.law.mean().is_finite() {
            return Err(Error::domain("jumps.law", "jump law must have a finite mean"));
        }
        Ok(())
    }

    /// Compensating drift `κ`.
    pub fn compensation(&self) -> T {
        if self.intensity == T::zero() {
            T::zero()
        } else {
            self.intensity * self.law.mean()
        }
    }
}

/// Jump times and sizes of the compound Poisson part.
pub struct LevyJumps {
    spec: LevyJumpSpec<f64>,
    rng: PathRng,
    last: f64,
}

impl LevyJumps {
    pub fn new(spec: LevyJumpSpec<f64>, stream: SeedSpec) -> Self {
        Self {
            spec,
            rng: stream.rng(Substream::LevyJumps),
            last: 0.0,
        }
    }
}

impl Iterator for LevyJumps {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        if self.spec.intensity <= 0.0 {
            return None;
        }
        self.last += std_exp(&mut self.rng) / self.spec.intensity;
        let size = self.spec.law.sample(&mut self.rng);
        Some((self.last, size))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("grid", "must start at 0 and be strictly increasing"));
    }
    Ok(())
}

/// Standard Brownian motion at the grid nodes.
pub fn sample_standard_brownian(grid: &[f64], stream: SeedSpec) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let mut rng = stream.rng(Substream::Brownian);
    let mut w = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    w.push(0.0);
    for pair in grid.windows(2) {
        acc += (pair[1] - pair[0]).sqrt() * std_normal(&mut rng);
        w.push(acc);
    }
    Ok(w)
}

/// `σB_t + αt` at the grid nodes. The standard path is shared across `(σ, α)`,
/// so `σ = 1, α = 0` scaled by `σ` reproduces this output exactly.
pub fn sample_brownian_grid(sigma: f64, alpha: f64, grid: &[f64], stream: SeedSpec) -> Result<Vec<f64>> {
    let w = sample_standard_brownian(grid, stream)?;
    Ok(w.iter().zip(grid).map(|(w, t)| sigma * w + alpha * t).collect())
}

/// Inserts bridge midpoints between consecutive nodes of a Brownian path.
/// Existing nodes are kept verbatim; the midpoint draws come from the
/// refinement substream of the given level.
pub fn refine_brownian(grid: &[f64], w: &[f64], level: u32, stream: SeedSpec) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream.rng(Substream::Refine(level));
    let mut g = Vec::with_capacity(grid.len() * 2);
    let mut v = Vec::with_capacity(grid.len() * 2);
    g.push(grid[0]);
    v.push(w[0]);
    for i in 1..grid.len() {
        let (t0, t1) = (grid[i - 1], grid[i]);
        let mid = 0.5 * (w[i - 1] + w[i]) + 0.5 * (t1 - t0).sqrt() * std_normal(&mut rng);
        g.push(0.5 * (t0 + t1));
        v.push(mid);
        g.push(t1);
        v.push(w[i]);
    }
    (g, v)
}

/// Discretized `σL_t + αt` with its jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    pub env: Vec<f64>,
    /// `(time, size)` of every jump of `L` in `(0, horizon]`, exact times.
    pub jumps: Vec<(f64, f64)>,
}

/// `σL_t + αt` with `L_t = B_t + Σ_{τ_k <= t} J_k − κt`.
pub fn sample_levy_grid(
    spec: &LevyJumpSpec<f64>,
    sigma: f64,
    alpha: f64,
    grid: &[f64],
    stream: SeedSpec,
) -> Result<LevyPath> {
    spec.validate()?;
    let w = sample_standard_brownian(grid, stream)?;
    let horizon = *grid.last().unwrap_or(&0.0);
    let jumps: Vec<(f64, f64)> = LevyJumps::new(*spec, stream).take_while(|j| j.0 <= horizon).collect();
    let kappa = spec.compensation();
    let mut env = Vec::with_capacity(grid.len());
    let mut k = 0;
    let mut jsum = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        while k < jumps.len() && jumps[k].0 <= t {
            jsum += jumps[k].1;
            k += 1;
        }
        env.push(levy_env(sigma, alpha, w[i], jsum, kappa, t));
    }
    Ok(LevyPath { env, jumps })
}

/// `σ(w + j − κt) + αt`; the one formula used for every investment model so
/// that a jump-free Lévy driver reproduces GBM bit for bit.
#[inline(always)]
pub fn levy_env(sigma: f64, alpha: f64, w: f64, jsum: f64, kappa: f64, t: f64) -> f64 {
    sigma * (w + jsum - kappa * t) + alpha * t
}

/// Uniform grid `0, dt, 2dt, …` ending exactly at `horizon`.
pub fn uniform_grid(dt: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / dt).ceil() as usize;
    let mut g: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    if g.last().is_some_and(|&t| horizon - t <= 1e-12 * horizon) && n > 1 {
        g.pop();
    }
    g.push(horizon);
    g
}
