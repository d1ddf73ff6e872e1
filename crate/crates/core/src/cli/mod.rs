//! Command-line front end: `params`, `lambda`, `simulate`, `sweep`, `montecarlo`
//! and `verify`.

pub mod config;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::control::run_trajectory;
use crate::experiments::{convergence_experiment, stability_sweep, svg, sweep_csv, ExperimentConfig, InitialState};
use crate::noise::{bernoulli_sigma_window, NoiseSpec, RngStream};

pub use config::{ConfigError, Resolved, RunConfig};

pub const PARAMS_SCHEMA: &str = "# stochstab params v1";
pub const LAMBDA_SCHEMA: &str = "# stochstab lambda v1";
pub const VERIFY_SCHEMA: &str = "# stochstab verify v1";

/// Environment variable holding the default master seed.
pub const SEED_ENV: &str = "STOCHSTAB_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_HORIZON: u64 = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-2;
/// Trajectories drawn by `--emit-svg` when the run count is not given.
pub const DEFAULT_SVG_RUNS: u64 = 6;

#[derive(Debug, Parser)]
#[command(name = "stochstab", version, about = "Noise and directed-walk control of one-dimensional maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Run configuration, `section.key = value` lines or JSON.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one configuration entry, e.g. `--set control.sigma=2.1`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed; falls back to the file, then STOCHSTAB_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Bernoulli,
    Uniform,
    Discrete,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive every constant of the configured regime and check its relations.
    Params {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Lyapunov exponent of the noise-perturbed linear part.
    Lambda {
        #[arg(long, value_enum, default_value = "bernoulli")]
        noise: NoiseArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        probs: Vec<f64>,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        sigma: f64,
        /// Also estimate by Monte Carlo with this many draws.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one controlled trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Also draw the first few trajectories to this SVG file.
        #[arg(long)]
        emit_svg: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SVG_RUNS)]
        svg_runs: u64,
    },
    /// Sign of the Lyapunov exponent over a grid of `(q, sigma)`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<f64>,
    },
    /// Many seeded trials with convergence, hitting-time and envelope statistics.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        emit_svg: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SVG_RUNS)]
        svg_runs: u64,
    },
    /// Run the invariant checks on the configuration; fails if any does.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Params { common, format } => cmd_params(&common, format),
        Command::Lambda { noise, values, probs, q, sigma, mc, seed } => {
            let noise = match noise {
                NoiseArg::Bernoulli => NoiseSpec::Bernoulli,
                NoiseArg::Uniform => NoiseSpec::Uniform,
                NoiseArg::Discrete => NoiseSpec::discrete(values, probs)?,
            };
            let text = cmd_lambda(&noise, q, sigma, mc, seed.unwrap_or(env_seed()?.unwrap_or(DEFAULT_SEED)))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { common, trial, emit_svg, svg_runs } => {
            cmd_simulate(&common, trial, emit_svg.as_deref(), svg_runs)
        }
        Command::Sweep { common, q, sigma } => cmd_sweep(&common, q, sigma),
        Command::Montecarlo { common, workers, emit_svg, svg_runs } => {
            cmd_montecarlo(&common, workers, emit_svg.as_deref(), svg_runs)
        }
        Command::Verify { common } => cmd_verify(&common),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => Ok(Some(s.trim().parse().with_context(|| format!("{SEED_ENV} = '{s}' is not a seed"))?)),
        Err(_) => Ok(None),
    }
}

/// Configuration from `--config` and `--set`, with flags taking precedence.
pub fn load(common: &Common) -> Result<RunConfig> {
    let base = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&common.set)?;
    let e = &mut cfg.experiment;
    e.seed = match (common.seed, e.seed) {
        (Some(s), _) | (None, Some(s)) => Some(s),
        (None, None) => env_seed()?,
    };
    if common.trials.is_some() {
        e.trials = common.trials;
    }
    if common.horizon.is_some() {
        e.horizon = common.horizon;
    }
    if let Some(out) = &common.out {
        cfg.output.path = Some(out.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

fn write_output(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {p}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn svg_path(flag: Option<&Path>, cfg: &RunConfig) -> Option<PathBuf> {
    flag.map(Path::to_path_buf).or_else(|| cfg.output.svg.as_ref().map(PathBuf::from))
}

fn seed_of(cfg: &RunConfig) -> u64 {
    cfg.experiment.seed.unwrap_or(DEFAULT_SEED)
}

/// Quotes a CSV field when it needs it.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn params_text(resolved: &Resolved, format: Format) -> String {
    let constants = resolved.constants();
    let relations = resolved.relations();
    match format {
        Format::Csv => {
            let mut out = format!("{PARAMS_SCHEMA}\nkind,name,value,holds\n");
            for c in &constants {
                let _ = writeln!(out, "constant,{},{},", c.name, csv_field(&c.value));
            }
            for r in &relations {
                let _ = writeln!(out, "relation,{},{},{}", r.name, csv_field(&r.statement), r.holds);
            }
            out
        }
        Format::Json => {
            let constants: serde_json::Map<String, serde_json::Value> =
                constants.into_iter().map(|c| (c.name, json!(c.value))).collect();
            let relations: Vec<_> =
                relations.iter().map(|r| json!({"name": r.name, "statement": r.statement, "holds": r.holds})).collect();
            let mut s = serde_json::to_string_pretty(&json!({"constants": constants, "relations": relations}))
                .expect("json serializes");
            s.push('\n');
            s
        }
    }
}

fn cmd_params(common: &Common, format: Option<Format>) -> Result<ExitCode> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let format = format.unwrap_or(match cfg.output.format {
        config::FormatName::Csv => Format::Csv,
        config::FormatName::Json => Format::Json,
    });
    write_output(&cfg, &params_text(&resolved, format))?;
    let failed: Vec<_> = resolved.relations().into_iter().filter(|r| !r.holds).collect();
    for r in &failed {
        eprintln!("relation {} fails: {}", r.name, r.statement);
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn cmd_lambda(noise: &NoiseSpec, q: f64, sigma: f64, mc: Option<u64>, seed: u64) -> Result<String> {
    let (mean, var) = noise.log_theta_moments(q, sigma)?;
    let (lo, hi) = bernoulli_sigma_window(q);
    let mut out = format!("{LAMBDA_SCHEMA}\n# noise = {noise}\n");
    out.push_str("q,sigma,lambda,log_theta_variance,bernoulli_window_lo,bernoulli_window_hi,stabilizable");
    if mc.is_some() {
        out.push_str(",lambda_mc,lambda_mc_std_error");
    }
    out.push('\n');
    let _ = write!(out, "{q:.16e},{sigma:.16e},{:.16e},{var:.16e},{lo:.16e},{hi:.16e},{}", -mean, -mean > 0.0);
    if let Some(n) = mc {
        let mut stream = RngStream::new(seed, 0);
        let est = noise.lambda_mc(q, sigma, n, &mut stream)?;
        let _ = write!(out, ",{:.16e},{:.16e}", -est.estimate, est.std_error);
    }
    out.push('\n');
    Ok(out)
}

fn cmd_simulate(common: &Common, trial: u64, emit_svg: Option<&Path>, svg_runs: u64) -> Result<ExitCode> {
    let cfg = load(common)?;
    if cfg.control.z0.is_none() {
        bail!("control.z0 is required to simulate");
    }
    let resolved = cfg.resolve()?;
    let seed = seed_of(&cfg);
    let horizon = cfg.experiment.horizon.unwrap_or(DEFAULT_HORIZON);
    let traj = run_trajectory(&resolved.control, seed, trial, horizon)?;
    write_output(&cfg, &traj.to_csv())?;
    if let Some(path) = svg_path(emit_svg, &cfg).as_deref() {
        let runs = (0..svg_runs.max(1))
            .map(|t| run_trajectory(&resolved.control, seed, trial + t, horizon))
            .collect::<Result<Vec<_>, _>>()?;
        let title = format!(
            "{} {}, sigma = {}",
            resolved.control.map.kind(),
            resolved.control.regime.name(),
            resolved.control.sigma
        );
        std::fs::write(path, svg::trajectories(&runs, &title))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(common: &Common, q: Vec<f64>, sigma: Vec<f64>) -> Result<ExitCode> {
    let cfg = load(common)?;
    let noise = cfg.build_noise()?;
    let q = if q.is_empty() { cfg.sweep.q.clone().unwrap_or_default() } else { q };
    let sigma = if sigma.is_empty() { cfg.sweep.sigma.clone().unwrap_or_default() } else { sigma };
    if q.is_empty() || sigma.is_empty() {
        bail!("a sweep needs q and sigma grids (--q/--sigma or sweep.q/sweep.sigma)");
    }
    let cells = stability_sweep(&noise, &q, &sigma)?;
    write_output(&cfg, &sweep_csv(&noise, &cells))?;
    Ok(ExitCode::SUCCESS)
}

/// The Monte Carlo campaign described by a configuration.
pub fn experiment_config(cfg: &RunConfig, resolved: &Resolved, workers: Option<usize>) -> Result<ExperimentConfig> {
    let e = &cfg.experiment;
    let z0 = match (e.z0_lo, e.z0_hi, cfg.control.z0) {
        (Some(lo), Some(hi), _) => InitialState::Uniform { lo, hi },
        (None, None, Some(z)) => InitialState::Fixed(z),
        (None, None, None) => bail!("set control.z0 or experiment.z0_lo and experiment.z0_hi"),
        _ => bail!("experiment.z0_lo and experiment.z0_hi must be given together"),
    };
    let mut x = ExperimentConfig::new(
        resolved.control.clone(),
        e.trials.unwrap_or(DEFAULT_TRIALS),
        e.horizon.unwrap_or(DEFAULT_HORIZON),
        seed_of(cfg),
    );
    x.z0 = z0;
    x.gamma = resolved.gamma;
    x.tolerance = e.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    x.mnc = resolved.mnc.clone();
    x.workers = workers.or(e.workers);
    x.constants = resolved.constants().into_iter().map(|c| (c.name, c.value)).collect();
    Ok(x)
}

fn cmd_montecarlo(common: &Common, workers: Option<usize>, emit_svg: Option<&Path>, svg_runs: u64) -> Result<ExitCode> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let x = experiment_config(&cfg, &resolved, workers)?;
    let report = convergence_experiment(&x)?;
    write_output(&cfg, &report.to_csv())?;
    if let Some(path) = svg_path(emit_svg, &cfg).as_deref() {
        let runs = (0..svg_runs.min(x.trials).max(1))
            .map(|t| {
                let control =
                    crate::control::ControlConfig { z0: x.z0.for_trial(x.master_seed, t), ..x.control.clone() };
                run_trajectory(&control, x.master_seed, t, x.horizon)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let title = format!("{} {}, {} trials", x.control.map.kind(), x.control.regime.name(), x.trials);
        std::fs::write(path, svg::trajectories(&runs, &title))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(common: &Common) -> Result<ExitCode> {
    let cfg = load(common)?;
    let resolved = cfg.resolve()?;
    let checks = verify::run(&resolved, seed_of(&cfg));
    let mut out = format!("{VERIFY_SCHEMA}\ncheck,passed,detail\n");
    for c in &checks {
        let _ = writeln!(out, "{},{},{}", c.name, c.passed, csv_field(&c.detail));
    }
    write_output(&cfg, &out)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", checks.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses arguments, returning clap's message as an error instead of exiting.
pub fn parse_args<I, T>(args: I) -> Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| anyhow!(e.to_string()))
}
