//! Batch front end: scenario files and presets in, CSV trajectories and a text report out.

pub mod config;
pub mod output;
pub mod report;
pub mod sweep;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use seirvax::presets::PRESETS;
use seirvax::{integrate, RunStatus, Scenario, Traj};

use crate::report::RunReport;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SEIRVAX_OUT";
pub const DEFAULT_OUT: &str = "seirvax-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("model error: {0}")]
    Model(#[from] seirvax::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(e) if is_config_error(e) => 2,
            _ => 1,
        }
    }
}

fn is_config_error(e: &seirvax::Error) -> bool {
    matches!(
        e,
        seirvax::Error::InvalidParams(_) | seirvax::Error::InvalidConfig(_) | seirvax::Error::InvalidScenario(_)
    )
}

pub fn status_exit_code(status: &RunStatus<f64>) -> i32 {
    match status {
        RunStatus::Completed => 0,
        RunStatus::Extinct { .. } => 3,
        RunStatus::Blowup { .. } => 4,
    }
}

/// `--out`, else `$SEIRVAX_OUT`, else [`DEFAULT_OUT`].
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    }
}

pub fn list_presets(machine: bool) -> String {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    PRESETS
        .iter()
        .map(|p| {
            if machine {
                format!("{}\n", p.name)
            } else {
                format!("{:width$}  {}\n", p.name, p.description)
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub struct RunOutput {
    pub trajectory: Traj,
    pub report: RunReport,
    pub report_text: String,
}

/// Integrates `sc` and writes `trajectory.csv`, `resets.csv` and `report.txt` under `out`.
pub fn run_to_dir(sc: &Scenario, out: &Path) -> Result<RunOutput, CliError> {
    let trajectory = integrate(sc)?;
    ensure_dir(out)?;
    let csv_path = out.join("trajectory.csv");
    output::write_trajectory(&trajectory, create(&csv_path)?)
        .map_err(|source| CliError::Csv { path: csv_path, source })?;
    let resets_path = out.join("resets.csv");
    output::write_resets(&trajectory, create(&resets_path)?).map_err(|source| CliError::Csv {
        path: resets_path,
        source,
    })?;
    let report = RunReport::build(sc, &trajectory);
    let report_text = report.render(sc);
    let report_path = out.join("report.txt");
    fs::write(&report_path, &report_text).map_err(|source| CliError::Io {
        path: report_path,
        source,
    })?;
    Ok(RunOutput {
        trajectory,
        report,
        report_text,
    })
}

/// Runs the grid and writes `sweep.csv` under `out`.
pub fn sweep_to_dir(base: &Scenario, specs: &[String], out: &Path) -> Result<Vec<sweep::SweepRow>, CliError> {
    let axes = specs
        .iter()
        .map(|s| sweep::parse_axis(s))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = sweep::sweep(base, &axes)?;
    ensure_dir(out)?;
    let path = out.join("sweep.csv");
    sweep::write_sweep(&axes, &rows, create(&path)?).map_err(|source| CliError::Csv { path, source })?;
    Ok(rows)
}

pub fn load_scenario(preset: Option<&str>, config: Option<&Path>) -> Result<Scenario, CliError> {
    match (preset, config) {
        (Some(_), Some(_)) => Err(CliError::Config("give either --preset or --config, not both".into())),
        (Some(name), None) => config::base_scenario(name),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            config::parse_config(&text)
        }
        (None, None) => Err(CliError::Config(
            "a scenario is needed: --preset NAME or --config PATH".into(),
        )),
    }
}
