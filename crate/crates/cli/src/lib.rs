//! Command-line front end: `hh <experiment> [options]`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hh_experiments::{run_to_dir, Experiment, ExperimentConfig, ExperimentError, ExperimentReport};

#[derive(Debug, Parser)]
#[command(name = "hh", version, about = "Numerical experiments on atoms of the Heisenberg group and their potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; each experiment writes to a subdirectory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 uses every core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Start from the reduced configuration instead of the defaults.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Override a configuration key, e.g. `--set maximal.grid_count=32`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_defaults: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The constant of the fundamental solution.
    Cn {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build and certify the default atom.
    Atom,
    /// Potential of the default atom along the sample rays.
    Potential,
    /// Decay slopes of the potential and its derivatives.
    Decay,
    /// Pointwise domination of the maximal function of the potential.
    Domination,
    /// Weak identity for the potential.
    Weak,
    /// Norm comparability over a family of atoms.
    Comparability,
    /// Growth of truncated integrals below and above the critical exponent.
    Triviality,
    /// Exact and sampled group and kernel identities.
    Identities,
    /// Every experiment in turn.
    All,
}

impl Command {
    fn experiments(&self) -> Vec<Experiment> {
        match self {
            Command::Cn { .. } => vec![Experiment::Cn],
            Command::Atom => vec![Experiment::Atom],
            Command::Potential => vec![Experiment::Potential],
            Command::Decay => vec![Experiment::Decay],
            Command::Domination => vec![Experiment::Domination],
            Command::Weak => vec![Experiment::Weak],
            Command::Comparability => vec![Experiment::Comparability],
            Command::Triviality => vec![Experiment::Triviality],
            Command::Identities => vec![Experiment::Identities],
            Command::All => Experiment::ALL.to_vec(),
        }
    }
}

/// Effective configuration: defaults (or the reduced set), then the file, then flags.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = match &cli.common.config {
        Some(path) => ExperimentConfig::from_toml(&fs::read_to_string(path)?)?,
        None if cli.common.quick => ExperimentConfig::quick(),
        None => ExperimentConfig::default(),
    };
    if cli.common.config.is_some() && cli.common.quick {
        return Err(ExperimentError::Config("--quick and --config are exclusive".into()));
    }
    for o in &cli.common.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ExperimentError::Config(format!("override `{o}` is not KEY=VALUE")))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(t) = cli.common.threads {
        config.threads = t;
    }
    if let Some(s) = cli.common.seed {
        config.seed = s;
    }
    if let Command::Cn { n: Some(n) } = cli.command {
        config = config.with_dimension(n);
    }
    config.validate()?;
    Ok(config)
}

/// Runs the experiments, writing `<out>/<name>/` per experiment and the wall time to
/// `<out>/<name>/runtime.txt`, outside the report.
pub fn execute(experiments: &[Experiment], config: &ExperimentConfig, out: &Path) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let mut reports = Vec::new();
    for &e in experiments {
        let start = Instant::now();
        let r = run_to_dir(e, config, out)?;
        fs::write(out.join(e.name()).join("runtime.txt"), format!("{:.3}\n", start.elapsed().as_secs_f64()))?;
        println!("{}", r.summary());
        reports.push(r);
    }
    if experiments.len() > 1 {
        let lines: String = reports.iter().map(|r| r.summary() + "\n").collect();
        fs::write(out.join("summary.txt"), lines)?;
    }
    Ok(reports)
}

/// Parses `argv` and runs; returns the exit status: 0 when every report passes, 1 when some
/// check fails, 2 on usage, configuration or runtime errors.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if cli.common.print_defaults {
        print!("{}", config.to_toml());
        return 0;
    }
    match execute(&cli.command.experiments(), &config, &cli.common.out) {
        Ok(reports) if reports.iter().all(|r| r.pass) => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
