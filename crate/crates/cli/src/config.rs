//! Run configuration: a TOML document with one table per module. Every key
//! has a default; unknown keys are rejected.

use std::path::Path;

use ruinlab_core::density::{DensityConvention, DiffusionRiskParams, Representation};
use ruinlab_core::model::{ClaimLaw, InvestmentModel, PremiumSpec, RiskParams};
use ruinlab_core::paths::{Quadrature, Scheme, SchemeConfig};
use ruinlab_core::processes::{CountingProcess, JumpLaw, LevyJumpSpec, DEFAULT_SEED};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Ruin,
    CertainRuin,
    Corollaries,
    Theta,
    YorDensity,
    TransitionDensity,
    RuinAtT,
    DiffusionLimit,
    CfCheck,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Ruin => "ruin",
            Experiment::CertainRuin => "certain-ruin",
            Experiment::Corollaries => "corollaries",
            Experiment::Theta => "theta",
            Experiment::YorDensity => "yor-density",
            Experiment::TransitionDensity => "transition-density",
            Experiment::RuinAtT => "ruin-at-t",
            Experiment::DiffusionLimit => "diffusion-limit",
            Experiment::CfCheck => "cf-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PremiumKind {
    Constant,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalKind {
    Poisson,
    LognormalRenewal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    Exponential,
    Pareto,
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvestmentKind {
    None,
    Gbm,
    Levy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Dilation,
    Reinvested,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureName {
    Trapezoid,
    LeftEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionName {
    OracleValidated,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationName {
    TimeChange,
    StochasticIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub u: f64,
    pub premium: f64,
    pub premium_kind: PremiumKind,
    pub premium_amplitude: f64,
    pub premium_frequency: f64,
    pub arrivals: ArrivalKind,
    pub lambda: f64,
    /// Log-scale of LogNormal inter-arrival times.
    pub renewal_scale: f64,
    pub claims: ClaimKind,
    pub claim_mean: f64,
    /// Pareto shape.
    pub claim_shape: f64,
    /// LogNormal log-scale.
    pub claim_scale: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            u: 10.0,
            premium: 1.1,
            premium_kind: PremiumKind::Constant,
            premium_amplitude: 0.5,
            premium_frequency: 1.0,
            arrivals: ArrivalKind::Poisson,
            lambda: 1.0,
            renewal_scale: 0.5,
            claims: ClaimKind::Exponential,
            claim_mean: 1.0,
            claim_shape: 3.0,
            claim_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvestmentSection {
    pub kind: InvestmentKind,
    /// GBM drift.
    pub a: f64,
    pub sigma: f64,
    /// Drift exponent of the Lévy model.
    pub alpha: f64,
    pub jump_intensity: f64,
    pub jump_mean: f64,
    pub jump_sd: f64,
}

impl Default for InvestmentSection {
    fn default() -> Self {
        Self {
            kind: InvestmentKind::Gbm,
            a: 0.01,
            sigma: 0.2,
            alpha: -0.01,
            jump_intensity: 0.5,
            jump_mean: -0.02,
            jump_sd: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub dt: f64,
    pub refine: u32,
    pub scheme: SchemeName,
    pub quadrature: QuadratureName,
    pub n_paths: u64,
    pub horizons: Vec<f64>,
    /// Paths streamed through the boundedness check; 0 skips it.
    pub boundedness_paths: u64,
    /// Paths written out by `simulate`.
    pub dump_paths: u64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            refine: 0,
            scheme: SchemeName::Reinvested,
            quadrature: QuadratureName::Trapezoid,
            n_paths: 10_000,
            horizons: vec![250.0, 500.0, 1000.0, 2000.0],
            boundedness_paths: 0,
            dump_paths: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YorSection {
    pub r: f64,
    pub t: f64,
    pub xs: Vec<f64>,
    pub u_min: f64,
    pub u_max: f64,
    pub n_u: u64,
    /// Replace a refused `Θ` evaluation with the simulated conditional law.
    pub fallback: bool,
    /// Oracle paths for the histogram comparison; 0 skips it.
    pub n_oracle: u64,
    pub oracle_dt: f64,
    /// Half-width of the conditioning slab around each `x`.
    pub slab: f64,
    pub n_bins: u64,
}

impl Default for YorSection {
    fn default() -> Self {
        Self {
            r: 1.0,
            t: 1.0,
            xs: vec![-1.0, 0.0, 1.0],
            u_min: 1e-3,
            u_max: 50.0,
            n_u: 60,
            fallback: false,
            n_oracle: 0,
            oracle_dt: 1e-3,
            slab: 0.02,
            n_bins: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub t: f64,
    pub u: f64,
    /// Initial capitals for `ruin-at-t`.
    pub us: Vec<f64>,
    pub sigma: f64,
    pub alpha: f64,
    /// `ρλμ`.
    pub drift: f64,
    /// `λm`.
    pub variance: f64,
    pub convention: ConventionName,
    /// `λμ` of the printed kernel.
    pub lambda_mu: f64,
    pub nz: u64,
    pub nx: u64,
    pub n_y: u64,
    pub n_oracle: u64,
    pub oracle_dt: f64,
    pub representation: RepresentationName,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            t: 1.0,
            u: 2.0,
            us: vec![0.5, 1.0, 2.0, 5.0],
            sigma: 1.0,
            alpha: -0.1,
            drift: 0.1,
            variance: 1.0,
            convention: ConventionName::OracleValidated,
            lambda_mu: 1.0,
            nz: 20,
            nx: 20,
            n_y: 320,
            n_oracle: 0,
            oracle_dt: 1e-3,
            representation: RepresentationName::TimeChange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionSection {
    pub rho: f64,
    pub mu: f64,
    pub m: f64,
    pub us: Vec<f64>,
    /// Simulated paths; 0 evaluates the formula only.
    pub n_paths: u64,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            rho: 0.1,
            mu: 1.0,
            m: 2.0,
            us: vec![2.0, 5.0, 10.0],
            n_paths: 0,
            horizon: 4000.0,
            dt: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfSection {
    pub xis: Vec<f64>,
    pub zetas: Vec<f64>,
    pub n_paths: u64,
}

impl Default for CfSection {
    fn default() -> Self {
        let grid = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        Self {
            xis: grid.clone(),
            zetas: grid,
            n_paths: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Smallest acceptable ruin frequency at the last horizon (certain-ruin, corollaries).
    pub min_final_ruin: f64,
    /// Boundedness violations allowed, relative to `u + c̄T`.
    pub boundedness_rel: f64,
    pub mass: f64,
    pub normalization: f64,
    pub tv: f64,
    pub cf: f64,
    /// Floor of the ruin-probability agreement band.
    pub ruin_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            min_final_ruin: 0.95,
            boundedness_rel: 1e-6,
            mass: 0.02,
            normalization: 0.01,
            tv: 0.05,
            cf: 0.02,
            ruin_abs: 0.01,
        }
    }
}

/// Provenance written into manifests; ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub tool: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub model: ModelSection,
    pub investment: InvestmentSection,
    pub numerics: NumericsSection,
    pub yor: YorSection,
    pub density: DensitySection,
    pub diffusion: DiffusionSection,
    pub cf: CfSection,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::CertainRuin,
            seed: DEFAULT_SEED,
            model: ModelSection::default(),
            investment: InvestmentSection::default(),
            numerics: NumericsSection::default(),
            yor: YorSection::default(),
            density: DensitySection::default(),
            diffusion: DiffusionSection::default(),
            cf: CfSection::default(),
            tolerances: Tolerances::default(),
            manifest: None,
        }
    }
}

/// Reads a config file into a raw table.
pub fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::validation("config", format!("{}: {}", path.display(), e.message())))
}

/// Sets `section.key` (or a top-level `key`) in `table`.
pub fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    match key.split_once('.') {
        None => {
            table.insert(key.to_string(), value);
        }
        Some((section, field)) => {
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(field.to_string(), value);
                }
                _ => return Err(CliError::validation(section, "expected a table")),
            }
        }
    }
    Ok(())
}

/// Parses the right-hand side of `--set key=value` as a TOML value, falling
/// back to a bare string.
pub fn parse_assignment(s: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::validation("set", format!("expected key=value, got `{s}`")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

/// Deserializes and validates a table; every error names its key.
pub fn resolve(table: toml::Table) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        let reason = e.into_inner().to_string();
        let mut reason = reason.split_whitespace().collect::<Vec<_>>().join(" ");
        // toml appends the location, which the key already gives.
        if let Some(i) = reason.rfind(" in `").filter(|_| reason.ends_with('`')) {
            reason.truncate(i);
        }
        CliError::validation(&path, reason)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn require(ok: bool, key: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(key, msg))
    }
}

fn positive(v: f64, key: &str) -> Result<(), CliError> {
    require(v > 0.0 && v.is_finite(), key, "must be positive and finite")
}

fn increasing(v: &[f64], key: &str) -> Result<(), CliError> {
    require(
        !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1]),
        key,
        "must be a nonempty, strictly increasing list",
    )
}

/// Maps a core error to the config key it came from.
pub fn core_error(section: &str, e: ruinlab_core::Error) -> CliError {
    match e {
        ruinlab_core::Error::Domain { param, reason } => CliError::validation(&format!("{section}.{param}"), reason),
        e if e.is_numerical() => CliError::Numerical(e.to_string()),
        e => CliError::validation(section, e.to_string()),
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the sections the experiment reads.
    pub fn validate(&self) -> Result<(), CliError> {
        require(self.seed <= i64::MAX as u64, "seed", "must fit in 63 bits")?;
        use Experiment::*;
        match self.experiment {
            Simulate | Ruin | CertainRuin | Corollaries => {
                self.risk_params()?;
                self.investment_model()?;
                self.scheme_config()?;
                increasing(&self.numerics.horizons, "numerics.horizons")?;
                positive(self.numerics.horizons[0], "numerics.horizons")?;
                require(
                    self.numerics.n_paths >= 100 || self.experiment == Simulate,
                    "numerics.n_paths",
                    "need at least 100 paths",
                )?;
                require(
                    self.numerics.dump_paths <= 1000,
                    "numerics.dump_paths",
                    "at most 1000 path files",
                )?;
                positive(self.tolerances.boundedness_rel, "tolerances.boundedness_rel")?;
                require(
                    (0.0..=1.0).contains(&self.tolerances.min_final_ruin),
                    "tolerances.min_final_ruin",
                    "must lie in [0, 1]",
                )?;
            }
            Theta => {
                positive(self.yor.r, "yor.r")?;
                positive(self.yor.t, "yor.t")?;
            }
            YorDensity => {
                positive(self.yor.t, "yor.t")?;
                require(
                    !self.yor.xs.is_empty() && self.yor.xs.iter().all(|x| x.is_finite()),
                    "yor.xs",
                    "must be a nonempty list of finite values",
                )?;
                positive(self.yor.u_min, "yor.u_min")?;
                require(
                    self.yor.u_max > self.yor.u_min && self.yor.u_max.is_finite(),
                    "yor.u_max",
                    "must exceed yor.u_min",
                )?;
                require(self.yor.n_u >= 2, "yor.n_u", "need at least two points")?;
                positive(self.yor.oracle_dt, "yor.oracle_dt")?;
                positive(self.yor.slab, "yor.slab")?;
                require(self.yor.n_bins >= 2, "yor.n_bins", "need at least two bins")?;
                positive(self.tolerances.normalization, "tolerances.normalization")?;
                positive(self.tolerances.tv, "tolerances.tv")?;
                require(
                    !self.yor.fallback || self.yor.n_oracle > 0,
                    "yor.n_oracle",
                    "the simulated fallback needs oracle paths",
                )?;
            }
            TransitionDensity | RuinAtT | CfCheck => {
                self.diffusion_params(self.density.u)?;
                positive(self.density.t, "density.t")?;
                positive(self.density.oracle_dt, "density.oracle_dt")?;
                require(self.density.n_y >= 16, "density.n_y", "need at least 16 points")?;
                require(
                    self.density.nz >= 1 && self.density.nx >= 1,
                    "density.nz",
                    "grid needs at least one bin per axis",
                )?;
                if self.density.convention == ConventionName::Printed {
                    positive(self.density.lambda_mu, "density.lambda_mu")?;
                }
                if self.experiment == RuinAtT {
                    require(!self.density.us.is_empty(), "density.us", "must be a nonempty list")?;
                    for &u in &self.density.us {
                        self.diffusion_params(u)
                            .map_err(|_| CliError::validation("density.us", "entries must be finite"))?;
                    }
                }
                if self.experiment == CfCheck {
                    require(!self.cf.xis.is_empty(), "cf.xis", "must be a nonempty list")?;
                    require(!self.cf.zetas.is_empty(), "cf.zetas", "must be a nonempty list")?;
                    require(self.cf.n_paths >= 100, "cf.n_paths", "need at least 100 paths")?;
                }
                positive(self.tolerances.mass, "tolerances.mass")?;
                positive(self.tolerances.tv, "tolerances.tv")?;
                positive(self.tolerances.cf, "tolerances.cf")?;
            }
            DiffusionLimit => {
                let d = &self.diffusion;
                require(
                    d.rho >= 0.0 && d.rho.is_finite(),
                    "diffusion.rho",
                    "must be finite and >= 0",
                )?;
                positive(d.mu, "diffusion.mu")?;
                positive(d.m, "diffusion.m")?;
                require(
                    !d.us.is_empty() && d.us.iter().all(|u| *u >= 0.0 && u.is_finite()),
                    "diffusion.us",
                    "must be a nonempty list of finite values >= 0",
                )?;
                if d.n_paths > 0 {
                    require(d.n_paths >= 100, "diffusion.n_paths", "need 0 or at least 100 paths")?;
                    positive(d.horizon, "diffusion.horizon")?;
                    positive(d.dt, "diffusion.dt")?;
                }
            }
        }
        Ok(())
    }

    pub fn claim_law(&self) -> Result<ClaimLaw<f64>, CliError> {
        let m = &self.model;
        let law = match m.claims {
            ClaimKind::Exponential => ClaimLaw::exponential(m.claim_mean),
            ClaimKind::Pareto => {
                require(
                    m.claim_shape > 1.0,
                    "model.claim_shape",
                    "Pareto claims need shape > 1 for a finite mean",
                )?;
                ClaimLaw::pareto(m.claim_shape, m.claim_mean * (m.claim_shape - 1.0))
            }
            ClaimKind::Lognormal => ClaimLaw::lognormal_with_mean(m.claim_mean, m.claim_scale),
        };
        law.map_err(|e| core_error("model", e))
    }

    pub fn risk_params(&self) -> Result<RiskParams<f64>, CliError> {
        let m = &self.model;
        positive(m.lambda, "model.lambda")?;
        require(
            m.premium >= 0.0 && m.premium.is_finite(),
            "model.premium",
            "must be finite and >= 0",
        )?;
        let claims = self.claim_law()?;
        let premium = match m.premium_kind {
            PremiumKind::Constant => PremiumSpec::Constant(m.premium),
            PremiumKind::Sinusoidal => {
                require(
                    m.premium_amplitude.abs() <= 1.0,
                    "model.premium_amplitude",
                    "must satisfy |amplitude| <= 1",
                )?;
                positive(m.premium_frequency, "model.premium_frequency")?;
                PremiumSpec::Sinusoidal {
                    base: m.premium,
                    amplitude: m.premium_amplitude,
                    frequency: m.premium_frequency,
                }
            }
        };
        let arrivals = match m.arrivals {
            ArrivalKind::Poisson => CountingProcess::Poisson { rate: m.lambda },
            ArrivalKind::LognormalRenewal => CountingProcess::Renewal {
                inter_arrival: ClaimLaw::lognormal_with_mean(1.0 / m.lambda, m.renewal_scale)
                    .map_err(|e| core_error("model", e))?,
            },
        };
        RiskParams::new(m.u, premium, arrivals, claims).map_err(|e| core_error("model", e))
    }

    pub fn investment_model(&self) -> Result<InvestmentModel<f64>, CliError> {
        let i = &self.investment;
        let r = match i.kind {
            InvestmentKind::None => Ok(InvestmentModel::none()),
            InvestmentKind::Gbm => InvestmentModel::gbm(i.a, i.sigma),
            InvestmentKind::Levy => {
                require(i.alpha.is_finite(), "investment.alpha", "must be finite")?;
                require(
                    i.jump_intensity >= 0.0 && i.jump_intensity.is_finite(),
                    "investment.jump_intensity",
                    "must be finite and >= 0",
                )?;
                require(
                    i.jump_sd >= 0.0 && i.jump_sd.is_finite(),
                    "investment.jump_sd",
                    "must be finite and >= 0",
                )?;
                InvestmentModel::exp_levy(
                    i.sigma,
                    i.alpha,
                    LevyJumpSpec {
                        intensity: i.jump_intensity,
                        law: JumpLaw::Normal {
                            mean: i.jump_mean,
                            sd: i.jump_sd,
                        },
                    },
                )
            }
        };
        r.map_err(|e| core_error("investment", e))
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig, CliError> {
        let n = &self.numerics;
        positive(n.dt, "numerics.dt")?;
        let scheme = match n.scheme {
            SchemeName::Dilation => Scheme::DilationExact,
            SchemeName::Reinvested => Scheme::Reinvested,
            SchemeName::Euler => Scheme::EulerSde,
        };
        let cfg = SchemeConfig {
            refine: n.refine,
            quadrature: match n.quadrature {
                QuadratureName::Trapezoid => Quadrature::Trapezoid,
                QuadratureName::LeftEndpoint => Quadrature::LeftEndpoint,
            },
            ..SchemeConfig::new(n.dt, scheme)
        };
        cfg.validate().map_err(|e| core_error("numerics", e))?;
        Ok(cfg)
    }

    pub fn diffusion_params(&self, u: f64) -> Result<DiffusionRiskParams, CliError> {
        let d = &self.density;
        DiffusionRiskParams::new(u, d.drift, d.variance, d.sigma, d.alpha).map_err(|e| core_error("density", e))
    }

    pub fn convention(&self) -> DensityConvention {
        match self.density.convention {
            ConventionName::OracleValidated => DensityConvention::OracleValidated,
            ConventionName::Printed => DensityConvention::Printed {
                lambda_mu: self.density.lambda_mu,
            },
        }
    }

    pub fn representation(&self) -> Representation {
        match self.density.representation {
            RepresentationName::TimeChange => Representation::TimeChange,
            RepresentationName::StochasticIntegral => Representation::StochasticIntegral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(s: &str) -> toml::Table {
        s.parse().unwrap()
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = resolve(table(&cfg.to_toml())).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = resolve(table("[model]\nlambdaa = 1.0\n")).unwrap_err();
        assert!(
            err.to_string().contains("model") && err.to_string().contains("lambdaa"),
            "{err}"
        );
    }

    #[test]
    fn bad_value_is_named() {
        let err = resolve(table("[numerics]\ndt = -1.0\n")).unwrap_err();
        assert!(err.to_string().contains("numerics.dt"), "{err}");
        let err = resolve(table("[numerics]\nscheme = \"rk4\"\n")).unwrap_err();
        assert!(err.to_string().contains("numerics.scheme"), "{err}");
    }

    #[test]
    fn assignments_parse_as_toml() {
        assert_eq!(parse_assignment("model.u = 3").unwrap().1, toml::Value::Integer(3));
        assert_eq!(
            parse_assignment("numerics.scheme=dilation").unwrap().1,
            toml::Value::String("dilation".into())
        );
        assert!(parse_assignment("nokey").is_err());
    }
}
