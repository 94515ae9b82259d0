//! Command-line front end: TOML run configs, figure presets, CSV and JSON output.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, RunConfig};
pub use error::{CliError, CliResult};

/// Default output directory when neither `--outdir` nor `output.dir` is given.
pub const OUTDIR_ENV: &str = "ESOC_OUTDIR";
pub const THREADS_ENV: &str = "ESOC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "esoc", version, about = "Spin polarization in golden-rule electron transfer with spin-orbit coupling")]
pub struct Cli {
    /// Worker threads for parallel sweeps
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// Output directory (overrides output.dir and ESOC_OUTDIR)
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// TOML run configuration
    pub config: Option<PathBuf>,

    /// Shipped configuration by name (see `esoc presets`)
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium population trace and rate at the configured driving force
    EqRate(Source),
    /// Equilibrium rate against driving force, one column per |W| (and φ)
    MarcusCurve {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_negative_numbers = true)]
        dg_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        dg_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Ground-state population after photoexcitation
    NeqPopulation(Source),
    /// Spin-resolved populations and polarization traces
    Polarization(Source),
    /// Final χ and P_g over the (φ, η) plane
    Sweep(Source),
    /// Final χ and P_g over φ and temperature
    TempSweep(Source),
    /// Cross-check closed forms against the Fock-basis oracle (only [output] is read)
    OracleCheck(Source),
    /// Final χ and P_g against bath mode count and cutoff
    ConvergeBath(Source),
    /// List shipped presets
    Presets,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EqRate(_) => "eq-rate",
            Command::MarcusCurve { .. } => "marcus-curve",
            Command::NeqPopulation(_) => "neq-population",
            Command::Polarization(_) => "polarization",
            Command::Sweep(_) => "sweep",
            Command::TempSweep(_) => "temp-sweep",
            Command::OracleCheck(_) => "oracle-check",
            Command::ConvergeBath(_) => "converge-bath",
            Command::Presets => "presets",
        }
    }
}

pub fn load_config(source: &Source) -> CliResult<RunConfig> {
    let text = match (&source.config, &source.preset) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| CliError::Validation(format!("unknown preset {name:?}; see `esoc presets`")))?
            .to_string(),
        (None, None) => String::new(),
    };
    parse_config(&text)
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.outdir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTDIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one invocation; outputs are written before any deferred failure is returned.
pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("thread count must be positive".into()));
        }
        // a pool already built (repeated calls in one process) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match &cli.command {
        Command::Presets => {
            for (name, text) in presets::PRESETS {
                let figure = parse_config(text)?.figure.unwrap_or_default();
                println!("{name:<24} {figure}");
            }
            return Ok(());
        }
        Command::EqRate(s)
        | Command::NeqPopulation(s)
        | Command::Polarization(s)
        | Command::Sweep(s)
        | Command::TempSweep(s)
        | Command::OracleCheck(s)
        | Command::ConvergeBath(s)
        | Command::MarcusCurve { source: s, .. } => load_config(s)?,
    };
    if let Command::MarcusCurve {
        dg_min, dg_max, points, ..
    } = &cli.command
    {
        cfg.marcus.dg_min = dg_min.unwrap_or(cfg.marcus.dg_min);
        cfg.marcus.dg_max = dg_max.unwrap_or(cfg.marcus.dg_max);
        cfg.marcus.points = points.unwrap_or(cfg.marcus.points);
        cfg.marcus.validate()?;
    }
    let done = match &cli.command {
        Command::EqRate(_) => commands::eq_rate(&cfg)?,
        Command::MarcusCurve { .. } => commands::marcus_curve(&cfg)?,
        Command::NeqPopulation(_) => commands::neq_population(&cfg)?,
        Command::Polarization(_) => commands::polarization(&cfg)?,
        Command::Sweep(_) => commands::sweep_cmd(&cfg)?,
        Command::TempSweep(_) => commands::temp_sweep_cmd(&cfg)?,
        Command::OracleCheck(_) => commands::oracle_check()?,
        Command::ConvergeBath(_) => commands::converge_bath(&cfg)?,
        Command::Presets => unreachable!("handled above"),
    };
    if let Some(report) = &done.report {
        print!("{report}");
    }
    let dir = output_dir(cli, &cfg);
    for path in output::write_run(&dir, cli.command.name(), &cfg, &done.output)? {
        println!("{}", path.display());
    }
    match done.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
