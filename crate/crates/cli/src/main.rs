use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ruinlab_cli::config::{load_table, parse_assignment, resolve, set_key, Experiment};
use ruinlab_cli::{report, run, CliError, DEFAULT_OUT_ROOT};

#[derive(Parser)]
#[command(
    name = "ruinlab",
    version,
    about = "Ruin experiments for risk processes with invested capital"
)]
struct Cli {
    /// Master seed (default: a fixed constant).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run directory (default: $RUINLAB_OUT/<experiment>-<seed>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any key, e.g. `--set numerics.dt=0.05`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Omit to run the experiment named in `--config`.
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Default)]
struct RiskFlags {
    #[arg(long)]
    u: Option<f64>,
    /// Premium rate.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// GBM drift.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// dilation, reinvested or euler.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n_paths: Option<u64>,
    /// Comma-separated horizon ladder.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
}

#[derive(Args, Default)]
struct DensityFlags {
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `ρλμ`.
    #[arg(long)]
    drift: Option<f64>,
    /// `λm`.
    #[arg(long)]
    variance: Option<f64>,
    /// Oracle sample size.
    #[arg(long)]
    n_oracle: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and dump individual paths.
    Simulate(RiskFlags),
    /// Ruin frequencies along a horizon ladder.
    Ruin(RiskFlags),
    /// Certain-ruin experiment with envelope statistics.
    CertainRuin(RiskFlags),
    /// Bounded premium, renewal arrivals and Lévy investment variants.
    Corollaries(RiskFlags),
    /// Evaluate the Θ_r(t) integral.
    Theta {
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Tabulate the conditional density of the exponential functional.
    YorDensity {
        #[arg(long)]
        t: Option<f64>,
        /// Comma-separated conditioning values.
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
        #[arg(long)]
        u_min: Option<f64>,
        #[arg(long)]
        u_max: Option<f64>,
        #[arg(long)]
        n_u: Option<u64>,
        /// Fall back to simulation when Θ is refused.
        #[arg(long)]
        fallback: bool,
        #[arg(long)]
        n_oracle: Option<u64>,
    },
    /// Joint density of invested capital and investment level.
    TransitionDensity {
        #[command(flatten)]
        d: DensityFlags,
        #[arg(long)]
        nz: Option<u64>,
        #[arg(long)]
        nx: Option<u64>,
    },
    /// Probability of nonpositive capital at a review date.
    RuinAtT {
        #[arg(long)]
        t: Option<f64>,
        /// Comma-separated initial capitals.
        #[arg(long, value_delimiter = ',')]
        u: Option<Vec<f64>>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        drift: Option<f64>,
        #[arg(long)]
        variance: Option<f64>,
        #[arg(long)]
        n_oracle: Option<u64>,
    },
    /// Brownian approximation of the infinite-horizon ruin probability.
    DiffusionLimit {
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Second claim moment E[Y²].
        #[arg(long)]
        m: Option<f64>,
        /// Comma-separated initial capitals.
        #[arg(long, value_delimiter = ',')]
        u: Option<Vec<f64>>,
        /// Simulated paths (0: formula only).
        #[arg(long)]
        n_paths: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Density-route characteristic function against simulation.
    CfCheck {
        #[command(flatten)]
        d: DensityFlags,
        #[arg(long)]
        n_paths: Option<u64>,
    },
    /// Summarize a run directory.
    Report { dir: PathBuf },
}

type Sets = Vec<(&'static str, toml::Value)>;

fn f(v: f64) -> toml::Value {
    toml::Value::Float(v)
}

fn list(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|&x| f(x)).collect())
}

fn int(v: u64) -> Result<toml::Value, CliError> {
    i64::try_from(v)
        .map(toml::Value::Integer)
        .map_err(|_| CliError::validation("flag", format!("{v} is too large")))
}

fn push<T>(sets: &mut Sets, key: &'static str, v: Option<T>, conv: impl Fn(T) -> toml::Value) {
    if let Some(v) = v {
        sets.push((key, conv(v)));
    }
}

fn risk_sets(r: RiskFlags) -> Result<Sets, CliError> {
    let mut s = Sets::new();
    push(&mut s, "model.u", r.u, f);
    push(&mut s, "model.premium", r.c, f);
    push(&mut s, "model.lambda", r.lambda, f);
    push(&mut s, "investment.a", r.a, f);
    push(&mut s, "investment.sigma", r.sigma, f);
    push(&mut s, "numerics.dt", r.dt, f);
    push(&mut s, "numerics.scheme", r.scheme, toml::Value::String);
    if let Some(n) = r.n_paths {
        s.push(("numerics.n_paths", int(n)?));
    }
    push(&mut s, "numerics.horizons", r.horizons, |v| list(&v));
    Ok(s)
}

fn density_sets(d: DensityFlags) -> Result<Sets, CliError> {
    let mut s = Sets::new();
    push(&mut s, "density.t", d.t, f);
    push(&mut s, "density.u", d.u, f);
    push(&mut s, "density.sigma", d.sigma, f);
    push(&mut s, "density.alpha", d.alpha, f);
    push(&mut s, "density.drift", d.drift, f);
    push(&mut s, "density.variance", d.variance, f);
    if let Some(n) = d.n_oracle {
        s.push(("density.n_oracle", int(n)?));
    }
    Ok(s)
}

fn flags(cmd: Command) -> Result<(Experiment, Sets), CliError> {
    Ok(match cmd {
        Command::Simulate(r) => (Experiment::Simulate, risk_sets(r)?),
        Command::Ruin(r) => (Experiment::Ruin, risk_sets(r)?),
        Command::CertainRuin(r) => (Experiment::CertainRuin, risk_sets(r)?),
        Command::Corollaries(r) => (Experiment::Corollaries, risk_sets(r)?),
        Command::Theta { r, t } => {
            let mut s = Sets::new();
            push(&mut s, "yor.r", r, f);
            push(&mut s, "yor.t", t, f);
            (Experiment::Theta, s)
        }
        Command::YorDensity {
            t,
            x,
            u_min,
            u_max,
            n_u,
            fallback,
            n_oracle,
        } => {
            let mut s = Sets::new();
            push(&mut s, "yor.t", t, f);
            push(&mut s, "yor.xs", x, |v| list(&v));
            push(&mut s, "yor.u_min", u_min, f);
            push(&mut s, "yor.u_max", u_max, f);
            if let Some(n) = n_u {
                s.push(("yor.n_u", int(n)?));
            }
            if fallback {
                s.push(("yor.fallback", toml::Value::Boolean(true)));
            }
            if let Some(n) = n_oracle {
                s.push(("yor.n_oracle", int(n)?));
            }
            (Experiment::YorDensity, s)
        }
        Command::TransitionDensity { d, nz, nx } => {
            let mut s = density_sets(d)?;
            if let Some(n) = nz {
                s.push(("density.nz", int(n)?));
            }
            if let Some(n) = nx {
                s.push(("density.nx", int(n)?));
            }
            (Experiment::TransitionDensity, s)
        }
        Command::RuinAtT {
            t,
            u,
            sigma,
            alpha,
            drift,
            variance,
            n_oracle,
        } => {
            let mut s = Sets::new();
            push(&mut s, "density.t", t, f);
            push(&mut s, "density.us", u, |v| list(&v));
            push(&mut s, "density.sigma", sigma, f);
            push(&mut s, "density.alpha", alpha, f);
            push(&mut s, "density.drift", drift, f);
            push(&mut s, "density.variance", variance, f);
            if let Some(n) = n_oracle {
                s.push(("density.n_oracle", int(n)?));
            }
            (Experiment::RuinAtT, s)
        }
        Command::DiffusionLimit {
            rho,
            mu,
            m,
            u,
            n_paths,
            horizon,
        } => {
            let mut s = Sets::new();
            push(&mut s, "diffusion.rho", rho, f);
            push(&mut s, "diffusion.mu", mu, f);
            push(&mut s, "diffusion.m", m, f);
            push(&mut s, "diffusion.us", u, |v| list(&v));
            if let Some(n) = n_paths {
                s.push(("diffusion.n_paths", int(n)?));
            }
            push(&mut s, "diffusion.horizon", horizon, f);
            (Experiment::DiffusionLimit, s)
        }
        Command::CfCheck { d, n_paths } => {
            let mut s = density_sets(d)?;
            if let Some(n) = n_paths {
                s.push(("cf.n_paths", int(n)?));
            }
            (Experiment::CfCheck, s)
        }
        Command::Report { .. } => unreachable!("handled before dispatch"),
    })
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation("threads", e.to_string()))?;
    }
    if let Some(Command::Report { dir }) = &cli.command {
        let r = report::load(dir)?;
        print!("{}", r.render(dir));
        return match r.failures() {
            0 => Ok(()),
            k => Err(CliError::Failed(k)),
        };
    }
    let mut table = match &cli.config {
        Some(p) => load_table(p)?,
        None => toml::Table::new(),
    };
    // The manifest section only records provenance.
    table.remove("manifest");
    match cli.command {
        Some(cmd) => {
            let (experiment, sets) = flags(cmd)?;
            set_key(
                &mut table,
                "experiment",
                toml::Value::String(experiment.as_str().into()),
            )?;
            for (k, v) in sets {
                set_key(&mut table, k, v)?;
            }
        }
        None if cli.config.is_none() => {
            return Err(CliError::validation(
                "experiment",
                "give a subcommand or a --config naming one",
            ));
        }
        None if !table.contains_key("experiment") => {
            return Err(CliError::validation("experiment", "missing from the config file"));
        }
        None => {}
    }
    for s in &cli.sets {
        let (k, v) = parse_assignment(s)?;
        set_key(&mut table, &k, v)?;
    }
    if let Some(seed) = cli.seed {
        set_key(
            &mut table,
            "seed",
            int(seed).map_err(|_| CliError::validation("seed", "must fit in 63 bits"))?,
        )?;
    }
    let cfg = resolve(table)?;
    let dir = match cli.out {
        Some(d) => d,
        None => {
            let root = std::env::var_os("RUINLAB_OUT").map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
            run::default_dir(&root, &cfg)
        }
    };
    let outcome = run::execute(&cfg, &dir)?;
    print!("{}", outcome.summary);
    println!("run directory: {}", outcome.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ruinlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
