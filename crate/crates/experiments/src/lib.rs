//! Numerical experiments on atoms of ℍⁿ and their potentials: each runner produces an
//! [`ExperimentReport`] with tables, fitted slopes, constants and pass/fail checks.

pub mod basic;
pub mod comparability;
pub mod config;
pub mod decay;
pub mod domination;
pub mod fit;
pub mod identities;
pub mod report;
pub mod setup;
pub mod triviality;
pub mod weak;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use report::ExperimentReport;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Atom(#[from] hh_core::AtomError),
    #[error(transparent)]
    Potential(#[from] hh_core::PotentialError),
    #[error(transparent)]
    Maximal(#[from] hh_core::MaximalError),
    #[error(transparent)]
    Quadrature(#[from] hh_core::QuadError),
    #[error(transparent)]
    Kernel(#[from] hh_core::KernelError),
    #[error(transparent)]
    Group(#[from] hh_core::GroupError),
    #[error(transparent)]
    Fit(#[from] fit::FitError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// The experiments runnable from the command line, in the order `all` runs them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Identities,
    Cn,
    Atom,
    Potential,
    Weak,
    Decay,
    Domination,
    Comparability,
    Triviality,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Identities,
        Experiment::Cn,
        Experiment::Atom,
        Experiment::Potential,
        Experiment::Weak,
        Experiment::Decay,
        Experiment::Domination,
        Experiment::Comparability,
        Experiment::Triviality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Cn => "cn",
            Experiment::Atom => "atom",
            Experiment::Potential => "potential",
            Experiment::Weak => "weak",
            Experiment::Decay => "decay",
            Experiment::Domination => "domination",
            Experiment::Comparability => "comparability",
            Experiment::Triviality => "triviality",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Runs one experiment on a thread pool sized by `config.threads`.
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let pool = setup::thread_pool(config)?;
    pool.install(|| match experiment {
        Experiment::Identities => identities::run(config),
        Experiment::Cn => basic::run_cn(config),
        Experiment::Atom => basic::run_atom(config),
        Experiment::Potential => basic::run_potential(config),
        Experiment::Weak => weak::run(config),
        Experiment::Decay => decay::run(config),
        Experiment::Domination => domination::run(config),
        Experiment::Comparability => comparability::run(config),
        Experiment::Triviality => triviality::run(config),
    })
}

/// Runs `experiment` and writes its report under `out_dir/<name>/`.
pub fn run_to_dir(experiment: Experiment, config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport, ExperimentError> {
    let report = run(experiment, config)?;
    report.write(&out_dir.join(experiment.name()))?;
    Ok(report)
}

/// Runs every experiment, writing each report and a `summary.json` listing their verdicts.
pub fn run_all(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let mut reports = Vec::new();
    for e in Experiment::ALL {
        reports.push(run_to_dir(e, config, out_dir)?);
    }
    let summary: Vec<serde_json::Value> =
        reports.iter().map(|r| serde_json::json!({ "experiment": r.experiment, "pass": r.pass, "summary": r.summary() })).collect();
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    Ok(reports)
}
