//! Domain parameters of the risk and investment processes, plus the scalar
//! closed forms: safety loading, drift exponent, regime classification, the
//! diffusion-limit ruin probability and the group law of the hyperbolic
//! (affine) group that couples capital and investment.

use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::processes::{CountingProcess, LevyJumpSpec};

/// Claim-size distribution. Every variant has unbounded support on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClaimLaw<T> {
    Exponential {
        mean: T,
    },
    /// Lomax form: `P(Y > y) = (scale / (scale + y))^shape`.
    Pareto {
        shape: T,
        scale: T,
    },
    /// `ln Y ~ Normal(location, scale²)`.
    LogNormal {
        location: T,
        scale: T,
    },
}

impl<T: Real> ClaimLaw<T> {
    pub fn exponential(mean: T) -> Result<Self> {
        if !(mean > T::zero() && mean.is_finite()) {
            return Err(Error::domain(
                "mean",
                format!("must be positive and finite, got {mean}"),
            ));
        }
        Ok(ClaimLaw::Exponential { mean })
    }

    /// Pareto with finite mean (`shape > 1`). The second moment is finite
    /// only for `shape > 2`.
    pub fn pareto(shape: T, scale: T) -> Result<Self> {
        if !(shape > T::one() && shape.is_finite()) {
            return Err(Error::domain(
                "shape",
                format!("must exceed 1 for a finite mean, got {shape}"),
            ));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::domain("scale", format!("must be positive, got {scale}")));
        }
        Ok(ClaimLaw::Pareto { shape, scale })
    }

    pub fn lognormal(location: T, scale: T) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::domain("location", "must be finite"));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::domain("scale", format!("must be positive, got {scale}")));
        }
        Ok(ClaimLaw::LogNormal { location, scale })
    }

    /// LogNormal with prescribed mean and log-scale.
    pub fn lognormal_with_mean(mean: T, scale: T) -> Result<Self> {
        if !(mean > T::zero()) {
            return Err(Error::domain("mean", format!("must be positive, got {mean}")));
        }
        Self::lognormal(mean.ln() - scale * scale / T::lit(2.0), scale)
    }

    /// `μ = E[Y]`.
    pub fn mean(&self) -> T {
        match *self {
            ClaimLaw::Exponential { mean } => mean,
            ClaimLaw::Pareto { shape, scale } => scale / (shape - T::one()),
            ClaimLaw::LogNormal { location, scale } => (location + scale * scale / T::lit(2.0)).exp(),
        }
    }

    /// `m = E[Y²]`; infinite for Pareto with `shape <= 2`.
    pub fn second_moment(&self) -> T {
        let two = T::lit(2.0);
        match *self {
            ClaimLaw::Exponential { mean } => two * mean * mean,
            ClaimLaw::Pareto { shape, scale } => {
                if shape <= two {
                    T::infinity()
                } else {
                    two * scale * scale / ((shape - T::one()) * (shape - two))
                }
            }
            ClaimLaw::LogNormal { location, scale } => (two * location + two * scale * scale).exp(),
        }
    }

    pub fn variance(&self) -> T {
        let mu = self.mean();
        self.second_moment() - mu * mu
    }

    /// `P(Y > y)`.
    pub fn survival(&self, y: T) -> T {
        if y <= T::zero() {
            return T::one();
        }
        match *self {
            ClaimLaw::Exponential { mean } => (-y / mean).exp(),
            ClaimLaw::Pareto { shape, scale } => (scale / (scale + y)).powf(shape),
            ClaimLaw::LogNormal { location, scale } => {
                let z = (y.ln() - location) / scale;
                crate::num::erfc(z / T::SQRT_2()) / T::lit(2.0)
            }
        }
    }

    /// Whether `P(Y > y) > 0` for every `y`. Holds for all supported laws.
    pub fn has_unbounded_support(&self) -> bool {
        true
    }
}

/// A premium rate as a function of time.
#[derive(Clone)]
pub enum PremiumSpec<T> {
    Constant(T),
    /// `c_t = base · (1 + amplitude · sin(frequency · t))`, with `|amplitude| <= 1`.
    Sinusoidal {
        base: T,
        amplitude: T,
        frequency: T,
    },
    /// Arbitrary nonnegative rate with a declared supremum.
    Custom {
        rate: Arc<dyn Fn(T) -> T + Send + Sync>,
        supremum: T,
    },
}

impl<T: fmt::Debug> fmt::Debug for PremiumSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PremiumSpec::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            PremiumSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
            } => f
                .debug_struct("Sinusoidal")
                .field("base", base)
                .field("amplitude", amplitude)
                .field("frequency", frequency)
                .finish(),
            PremiumSpec::Custom { supremum, .. } => f
                .debug_struct("Custom")
                .field("supremum", supremum)
                .finish_non_exhaustive(),
        }
    }
}

impl<T: Real> PremiumSpec<T> {
    pub fn is_constant(&self) -> bool {
        matches!(self, PremiumSpec::Constant(_))
    }

    #[inline]
    pub fn rate(&self, t: T) -> T {
        match self {
            PremiumSpec::Constant(c) => *c,
            PremiumSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
            } => *base * (T::one() + *amplitude * (*frequency * t).sin()),
            PremiumSpec::Custom { rate, .. } => rate(t),
        }
    }

    /// `sup_t c_t`.
    pub fn bound(&self) -> T {
        match self {
            PremiumSpec::Constant(c) => *c,
            PremiumSpec::Sinusoidal { base, amplitude, .. } => *base * (T::one() + amplitude.abs()),
            PremiumSpec::Custom { supremum, .. } => *supremum,
        }
    }

    /// `∫_{t0}^{t1} c_s ds`; exact except for `Custom`, which uses Simpson's rule.
    pub fn integral(&self, t0: T, t1: T) -> T {
        match self {
            PremiumSpec::Constant(c) => *c * (t1 - t0),
            PremiumSpec::Sinusoidal {
                base,
                amplitude,
                frequency,
            } => {
                if *frequency == T::zero() {
                    return *base * (t1 - t0);
                }
                *base * (t1 - t0)
                    - *base * *amplitude / *frequency * ((*frequency * t1).cos() - (*frequency * t0).cos())
            }
            PremiumSpec::Custom { rate, .. } => {
                let mid = (t0 + t1) / T::lit(2.0);
                (t1 - t0) / T::lit(6.0) * (rate(t0) + T::lit(4.0) * rate(mid) + rate(t1))
            }
        }
    }

    /// Checks `0 <= c_t <= sup` on `samples` equispaced points of `[0, horizon]`.
    pub fn validate(&self, horizon: T, samples: usize) -> Result<()> {
        let sup = self.bound();
        if !(sup >= T::zero() && sup.is_finite()) {
            return Err(Error::domain(
                "premium",
                format!("supremum must be finite and nonnegative, got {sup}"),
            ));
        }
        if let PremiumSpec::Sinusoidal { amplitude, .. } = self {
            if amplitude.abs() > T::one() {
                return Err(Error::domain("premium.amplitude", "must satisfy |amplitude| <= 1"));
            }
        }
        let n = samples.max(2);
        for i in 0..n {
            let s = horizon * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1);
            let c = self.rate(s);
            if !(c >= T::zero() && c <= sup * (T::one() + T::epsilon() * T::lit(16.0))) {
                return Err(Error::domain(
                    "premium",
                    format!("rate {c} at t = {s} outside [0, {sup}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of the classical risk process `X_t = u + ∫ c_s ds − Σ Y_k`.
#[derive(Debug, Clone)]
pub struct RiskParams<T> {
    pub u: T,
    pub premium: PremiumSpec<T>,
    pub arrivals: CountingProcess<T>,
    pub claims: ClaimLaw<T>,
}

impl<T: Real> RiskParams<T> {
    pub fn new(u: T, premium: PremiumSpec<T>, arrivals: CountingProcess<T>, claims: ClaimLaw<T>) -> Result<Self> {
        if !(u >= T::zero() && u.is_finite()) {
            return Err(Error::domain(
                "u",
                format!("initial capital must be finite and >= 0, got {u}"),
            ));
        }
        if !premium.bound().is_finite() {
            return Err(Error::domain("premium", "supremum must be finite"));
        }
        arrivals.validate()?;
        Ok(Self {
            u,
            premium,
            arrivals,
            claims,
        })
    }

    /// Cramér–Lundberg parameters: constant premium `c`, Poisson claims of rate `λ`.
    pub fn poisson(u: T, c: T, lambda: T, claims: ClaimLaw<T>) -> Result<Self> {
        if !(c >= T::zero()) {
            return Err(Error::domain("c", format!("premium rate must be >= 0, got {c}")));
        }
        Self::new(
            u,
            PremiumSpec::Constant(c),
            CountingProcess::Poisson { rate: lambda },
            claims,
        )
    }

    /// Long-run claim intensity, if the counting process has one.
    pub fn claim_intensity(&self) -> Option<T> {
        self.arrivals.intensity()
    }

    /// Safety loading of the constant-premium model.
    pub fn loading(&self) -> Result<T> {
        let lambda = self
            .claim_intensity()
            .ok_or_else(|| Error::domain("arrivals", "a deterministic schedule has no claim intensity"))?;
        safety_loading(self.premium.bound(), lambda, self.claims.mean())
    }
}

/// Sign classification of the drift exponent `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuinRegime {
    /// `α < 0`: ruin is certain for claims with unbounded support.
    Certain,
    /// `α = 0`.
    Boundary,
    Uncertain,
}

impl RuinRegime {
    pub fn from_exponent<T: Real>(alpha: T) -> Self {
        if alpha < T::zero() {
            RuinRegime::Certain
        } else if alpha == T::zero() {
            RuinRegime::Boundary
        } else {
            RuinRegime::Uncertain
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RuinRegime::Certain => "certain",
            RuinRegime::Boundary => "boundary",
            RuinRegime::Uncertain => "uncertain",
        }
    }
}

impl fmt::Display for RuinRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dynamics of the investment index `e^{σB_t + αt}` (or `e^{σL_t + αt}`).
#[derive(Debug, Clone, PartialEq)]
pub enum InvestmentModel<T> {
    /// Geometric Brownian motion `dS = aS dt + σS dB`.
    Gbm { a: T, sigma: T },
    /// `e^{σL_t + αt}` with `L` a mean-zero Lévy process (Brownian part plus
    /// compensated compound Poisson jumps).
    ExpLevy { sigma: T, alpha: T, jumps: LevyJumpSpec<T> },
    /// Deterministic force of interest `a`; identical to `Gbm { a, sigma: 0 }`.
    Deterministic { a: T },
}

impl<T: Real> InvestmentModel<T> {
    pub fn gbm(a: T, sigma: T) -> Result<Self> {
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return Err(Error::domain("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        if !a.is_finite() {
            return Err(Error::domain("a", "must be finite"));
        }
        Ok(InvestmentModel::Gbm { a, sigma })
    }

    pub fn exp_levy(sigma: T, alpha: T, jumps: LevyJumpSpec<T>) -> Result<Self> {
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return Err(Error::domain("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        jumps.validate()?;
        Ok(InvestmentModel::ExpLevy { sigma, alpha, jumps })
    }

    /// No investment at all: the identity dilation.
    pub fn none() -> Self {
        InvestmentModel::Deterministic { a: T::zero() }
    }

    pub fn sigma(&self) -> T {
        match self {
            InvestmentModel::Gbm { sigma, .. } | InvestmentModel::ExpLevy { sigma, .. } => *sigma,
            InvestmentModel::Deterministic { .. } => T::zero(),
        }
    }

    /// The drift exponent `α` of `e^{σB_t + αt}`.
    pub fn alpha(&self) -> T {
        match self {
            InvestmentModel::Gbm { a, sigma } => gbm_exponent(*a, *sigma),
            InvestmentModel::ExpLevy { alpha, .. } => *alpha,
            InvestmentModel::Deterministic { a } => *a,
        }
    }

    /// The instantaneous return rate `a` of the SDE form, where defined.
    pub fn return_rate(&self) -> Option<T> {
        match self {
            InvestmentModel::Gbm { a, .. } | InvestmentModel::Deterministic { a } => Some(*a),
            InvestmentModel::ExpLevy { .. } => None,
        }
    }

    pub fn jumps(&self) -> Option<&LevyJumpSpec<T>> {
        match self {
            InvestmentModel::ExpLevy { jumps, .. } => Some(jumps),
            _ => None,
        }
    }

    pub fn regime(&self) -> RuinRegime {
        RuinRegime::from_exponent(self.alpha())
    }

    pub fn certain_ruin_regime(&self) -> bool {
        self.regime() == RuinRegime::Certain
    }
}

/// `ρ = (c − λμ) / (λμ)`.
pub fn safety_loading<T: Real>(c: T, lambda: T, mu: T) -> Result<T> {
    let expected = lambda * mu;
    if !(lambda > T::zero() && mu > T::zero() && expected > T::zero()) {
        return Err(Error::domain(
            "lambda*mu",
            format!("expected claim rate must be positive, got {expected}"),
        ));
    }
    Ok((c - expected) / expected)
}

/// Inverse of [`safety_loading`]: `c = (1 + ρ)λμ`.
pub fn premium_for_loading<T: Real>(rho: T, lambda: T, mu: T) -> T {
    (T::one() + rho) * lambda * mu
}

/// Diffusion approximation of the infinite-horizon ruin probability,
/// `exp(−2ρμu / m)` with `m = E[Y²]`.
pub fn diffusion_limit_ruin<T: Real>(rho: T, mu: T, m: T, u: T) -> Result<T> {
    if !(m > T::zero()) {
        return Err(Error::domain("m", format!("second moment must be positive, got {m}")));
    }
    if !(rho >= T::zero()) {
        return Err(Error::domain(
            "rho",
            format!("negative loading {rho}: ruin is certain and the formula does not apply"),
        ));
    }
    if !(u >= T::zero()) {
        return Err(Error::domain("u", format!("initial capital must be >= 0, got {u}")));
    }
    if !(mu > T::zero()) {
        return Err(Error::domain("mu", format!("mean claim must be positive, got {mu}")));
    }
    Ok((-T::lit(2.0) * rho * mu * u / m).exp())
}

/// `α = a − σ²/2`. Results within a few ulps of zero are snapped to zero so
/// that `2a = σ²` is classified as the boundary case despite rounding.
pub fn gbm_exponent<T: Real>(a: T, sigma: T) -> T {
    let half_var = sigma * sigma / T::lit(2.0);
    let alpha = a - half_var;
    if alpha.abs() <= T::lit(4.0) * T::epsilon() * a.abs().max(half_var) {
        T::zero()
    } else {
        alpha
    }
}

/// Element of `ℝ ⋊ ℝ⁺` with product `(x, y)(x', y') = (x + x'y, yy')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> HyperbolicPoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(y > T::zero()) {
            return Err(Error::domain("y", format!("must be positive, got {y}")));
        }
        Ok(Self { x, y })
    }

    pub fn identity() -> Self {
        Self {
            x: T::zero(),
            y: T::one(),
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            x: -self.x / self.y,
            y: self.y.recip(),
        }
    }

    /// Acts on a capital level: `x + capital · y`.
    pub fn act(self, capital: T) -> T {
        self.x + capital * self.y
    }
}

/// Group law of the semi-direct product.
pub fn hyperbolic_mul<T: Real>(p: HyperbolicPoint<T>, q: HyperbolicPoint<T>) -> HyperbolicPoint<T> {
    HyperbolicPoint {
        x: p.x + q.x * p.y,
        y: p.y * q.y,
    }
}

impl<T: Real> Mul for HyperbolicPoint<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        hyperbolic_mul(self, rhs)
    }
}
