//! CSV serialisation of trajectories; floats use shortest round-trip formatting.

use std::io::{Read, Write};

use seirvax::{Compartment, Traj};

use crate::CliError;

pub const TRAJECTORY_COLUMNS: [&str; 15] = [
    "t",
    "S",
    "E",
    "I",
    "R",
    "N",
    "V_a",
    "V",
    "g",
    "h",
    "R_star",
    "dN",
    "reset_flag",
    "theta0",
    "theta1",
];

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trajectory<W: Write>(traj: &Traj, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in &traj.records {
        let x = r.state;
        let c = &r.control;
        let nums = [x.s, x.e, x.i, x.r, x.total(), c.v_a, c.v, c.g, c.h, c.r_star, r.dn];
        let mut row: Vec<String> = Vec::with_capacity(TRAJECTORY_COLUMNS.len());
        row.push(r.t.to_string());
        row.extend(nums.iter().map(|v| v.to_string()));
        row.push(flag(!r.resets.is_empty()).into());
        row.push(flag(c.theta0).into());
        row.push(flag(c.theta1).into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_resets<W: Write>(traj: &Traj, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "compartment", "value_before"])?;
    for e in traj.reset_events() {
        w.write_record([
            e.time.to_string(),
            e.component.label().to_string(),
            e.value_before.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed trajectory row; flags are kept as booleans.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub values: [f64; 12],
    pub reset: bool,
    pub theta0: bool,
    pub theta1: bool,
}

impl TrajectoryRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        TRAJECTORY_COLUMNS[..12]
            .iter()
            .position(|c| *c == column)
            .map(|k| self.values[k])
    }

    pub fn compartment(&self, c: Compartment) -> f64 {
        self.values[1 + c.index()]
    }
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, CliError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| CliError::Config(format!("trajectory header: {e}")))?;
    if header.iter().ne(TRAJECTORY_COLUMNS.iter().copied()) {
        return Err(CliError::Config(format!("unexpected trajectory header {header:?}")));
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("trajectory row {}: {e}", k + 1)))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| CliError::Config(format!("trajectory row {}: bad number {:?}", k + 1, &rec[i])))
        };
        let mut values = [0.0; 12];
        for (i, v) in values.iter_mut().enumerate() {
            *v = num(i)?;
        }
        rows.push(TrajectoryRow {
            values,
            reset: &rec[12] == "1",
            theta0: &rec[13] == "1",
            theta1: &rec[14] == "1",
        });
    }
    Ok(rows)
}
