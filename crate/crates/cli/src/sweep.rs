//! Parameter grids run in parallel, reported in grid order.

use std::io::Write;

use rayon::prelude::*;
use seirvax::{integrate, Scenario};

use crate::config::{apply_setting, section_of};
use crate::report::{status_key, RunReport};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

/// Parses `KEY=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep {spec:?}: expected KEY=v1,v2,...")))?;
    let key = key.trim();
    if section_of(key).is_none() {
        return Err(CliError::Config(format!("sweep: unknown key {key:?}")));
    }
    let values: Vec<String> = list
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(CliError::Config(format!("sweep {key}: empty grid")));
    }
    Ok(Axis {
        key: key.to_string(),
        values,
    })
}

/// Cartesian product of the axes, first axis slowest.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: Vec<(String, String)>,
    pub outcome: Result<RunReport, String>,
}

pub fn run_point(base: &Scenario, point: &[(String, String)]) -> Result<RunReport, String> {
    let mut sc = base.clone();
    for (k, v) in point {
        let section = section_of(k).ok_or_else(|| format!("unknown key {k}"))?;
        apply_setting(&mut sc, section, k, v).map_err(|e| e.to_string())?;
    }
    let traj = integrate(&sc).map_err(|e| e.to_string())?;
    Ok(RunReport::build(&sc, &traj))
}

pub fn sweep(base: &Scenario, axes: &[Axis]) -> Result<Vec<SweepRow>, CliError> {
    if axes.is_empty() {
        return Err(CliError::Config("sweep: no grid given".into()));
    }
    let points = grid_points(axes);
    Ok(points
        .into_par_iter()
        .map(|point| SweepRow {
            outcome: run_point(base, &point),
            point,
        })
        .collect())
}

pub fn write_sweep<W: Write>(axes: &[Axis], rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.extend(
        [
            "status",
            "t_end",
            "S",
            "E",
            "I",
            "R",
            "N",
            "final_infected_fraction",
            "steady_state_found",
            "composition_infected_fraction",
            "reset_count",
            "identity_max_residual",
            "error",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.point.iter().map(|(_, v)| v.clone()).collect();
        match &row.outcome {
            Ok(r) => {
                let x = r.final_state;
                rec.push(status_key(&r.status).into());
                rec.push(r.final_time.to_string());
                for v in [x.s, x.e, x.i, x.r, x.total(), (x.e + x.i) / x.total()] {
                    rec.push(v.to_string());
                }
                rec.push(r.steady_state.found.to_string());
                rec.push(
                    r.composition_infected_fraction
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                );
                rec.push(r.reset_count.to_string());
                rec.push(r.identity_max_residual.to_string());
                rec.push(String::new());
            }
            Err(e) => {
                rec.push("error".into());
                rec.extend(std::iter::repeat_n(String::new(), 11));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
