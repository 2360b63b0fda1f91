mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};
use output::RunWriter;

#[derive(Parser)]
#[command(name = "cylfield", version, about = "Cylinder-measure experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config, or a manifest.json from a previous run to replay it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and CYLFIELD_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Shell sizes and free level variances.
    Shells,
    /// Second and fourth level moments, exact and sampled.
    Moments,
    /// Wick quartic coefficients per level.
    Wick,
    /// Martingale property of the Wick perturbation.
    MartingaleCheck,
    /// One renormalization step, closed form against regression.
    RenormStep,
    /// Tail-series quartic densities with diagnostics.
    AlphaSeries,
    /// Cutoff dependence of the naive one-level limit.
    FailedLimit,
    /// Mixing coefficients between shells and decay sums.
    Mixing,
    /// Measure flow in the coupling constant.
    Flow,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Shells => "shells",
            Command::Moments => "moments",
            Command::Wick => "wick",
            Command::MartingaleCheck => "martingale-check",
            Command::RenormStep => "renorm-step",
            Command::AlphaSeries => "alpha-series",
            Command::FailedLimit => "failed-limit",
            Command::Mixing => "mixing",
            Command::Flow => "flow",
        }
    }

    fn run(self, cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
        match self {
            Command::Shells => commands::shells(cfg, out),
            Command::Moments => commands::moments(cfg, out),
            Command::Wick => commands::wick(cfg, out),
            Command::MartingaleCheck => commands::martingale(cfg, out),
            Command::RenormStep => commands::renorm(cfg, out),
            Command::AlphaSeries => commands::alpha_series(cfg, out),
            Command::FailedLimit => commands::failed_limit(cfg, out),
            Command::Mixing => commands::mixing(cfg, out),
            Command::Flow => commands::flow(cfg, out),
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<cylfield_core::Error>() {
        Some(e) if e.is_numerical() => 3,
        Some(cylfield_core::Error::Io(_)) | Some(cylfield_core::Error::Format(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return dir.clone();
    }
    let base = std::env::var_os("CYLFIELD_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cylfield-runs"));
    base.join(&cfg.name)
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.sampling.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, dir: &mut Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let cfg = load_config(cli)?;
    let root = output_dir(cli, &cfg);
    *dir = Some(root.clone());
    let mut out = RunWriter::create(&root)?;
    cli.command.run(&cfg, &mut out)?;
    out.finish(cli.command.name(), &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut dir = None;
    match run(&cli, &mut dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err:#}");
            if let Some(dir) = dir.filter(|d| d.is_dir()) {
                let report = serde_json::json!({
                    "subcommand": cli.command.name(),
                    "error": format!("{err:#}"),
                    "exit_code": code,
                });
                let _ = std::fs::write(dir.join("error.json"), serde_json::to_string_pretty(&report).unwrap_or_default());
            }
            ExitCode::from(code)
        }
    }
}
