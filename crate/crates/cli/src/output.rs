//! Result files: a CSV table with one row per grid point and a JSON summary.
//!
//! Floats are written with 17 significant digits, which reads back to the
//! same bits. The column list and summary layout are described in
//! `SCHEMA.md` next to this crate's manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use repcode::model::SimParams;
use repcode::observables::{Observable, Stat};
use serde::{Deserialize, Serialize};

use crate::analysis::{crossings_by_observable, CrossingEstimate};
use crate::config::{boundary_name, initial_state_from_name, initial_state_name, Axis, Engine};
use crate::error::{CliError, Result};
use crate::sweep::{build_id, ResultRow};

pub const CSV_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 36] = [
    "axis",
    "value",
    "lambda",
    "q",
    "delta",
    "lambda_x",
    "lambda_zz",
    "q_x",
    "q_zz",
    "theta_x",
    "theta_zz",
    "L",
    "T",
    "boundary",
    "initial_state",
    "master_seed",
    "kappa_ea_mean",
    "kappa_ea_stderr",
    "kappa_2_mean",
    "kappa_2_stderr",
    "d_ea_mean",
    "d_ea_stderr",
    "d_2_mean",
    "d_2_stderr",
    "s_r_mean",
    "s_r_stderr",
    "i_c_mean",
    "i_c_stderr",
    "i_c_renyi2_mean",
    "i_c_renyi2_stderr",
    "n_trajectories",
    "engine",
    "chi_max",
    "build_id",
    "wall_time",
    "error",
];

/// Index of the `wall_time` column, the only one that varies between runs.
pub const WALL_TIME_COLUMN: usize = 34;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonSummary,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn row_to_record(r: &ResultRow) -> Vec<String> {
    let p = &r.params;
    let mut rec = vec![
        r.axis.name().to_string(),
        format_f64(r.value),
        opt_f64(r.lambda),
        opt_f64(r.q),
        opt_f64(r.delta),
        format_f64(p.lambda_x),
        format_f64(p.lambda_zz),
        format_f64(p.q_x),
        format_f64(p.q_zz),
        format_f64(p.theta_x),
        format_f64(p.theta_zz),
        p.l.to_string(),
        p.t.to_string(),
        boundary_name(p.boundary).to_string(),
        initial_state_name(p.initial_state).to_string(),
        p.master_seed.to_string(),
    ];
    for o in Observable::ALL {
        let s = r.stats.get(&o);
        rec.push(opt_f64(s.map(|s| s.mean)));
        rec.push(opt_f64(s.map(|s| s.stderr)));
    }
    rec.extend([
        r.n_trajectories.to_string(),
        r.engine.name().to_string(),
        r.chi_max.map(|c| c.to_string()).unwrap_or_default(),
        r.build_id.clone(),
        format_f64(r.wall_time),
        r.error.clone().unwrap_or_default(),
    ]);
    rec
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| CliError::Parse(format!("missing column {}", COLUMNS[i])))?;
    s.parse().map_err(|_| CliError::Parse(format!("bad value `{s}` in column {}", COLUMNS[i])))
}

fn opt_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i).map(Some),
    }
}

pub fn row_from_record(rec: &csv::StringRecord) -> Result<ResultRow> {
    let bad = |col: usize| CliError::Parse(format!("bad value in column {}", COLUMNS[col]));
    let axis = Axis::from_name(&field::<String>(rec, 0)?).ok_or_else(|| bad(0))?;
    let boundary = match &rec[13] {
        "open" => repcode::model::Boundary::Open,
        "periodic" => repcode::model::Boundary::Periodic,
        _ => return Err(bad(13)),
    };
    let params = SimParams {
        lambda_x: field(rec, 5)?,
        lambda_zz: field(rec, 6)?,
        q_x: field(rec, 7)?,
        q_zz: field(rec, 8)?,
        theta_x: field(rec, 9)?,
        theta_zz: field(rec, 10)?,
        l: field(rec, 11)?,
        t: field(rec, 12)?,
        boundary,
        initial_state: initial_state_from_name(&rec[14]).ok_or_else(|| bad(14))?,
        master_seed: field(rec, 15)?,
    };
    let mut stats = BTreeMap::new();
    for (k, o) in Observable::ALL.into_iter().enumerate() {
        let col = 16 + 2 * k;
        if let (Some(mean), Some(stderr)) = (opt_field(rec, col)?, opt_field(rec, col + 1)?) {
            stats.insert(o, Stat { mean, stderr });
        }
    }
    Ok(ResultRow {
        axis,
        value: field(rec, 1)?,
        lambda: opt_field(rec, 2)?,
        q: opt_field(rec, 3)?,
        delta: opt_field(rec, 4)?,
        params,
        stats,
        n_trajectories: field(rec, 30)?,
        engine: Engine::from_name(&rec[31]).ok_or_else(|| bad(31))?,
        chi_max: opt_field(rec, 32)?,
        build_id: rec[33].to_string(),
        wall_time: field(rec, 34)?,
        error: (!rec[35].is_empty()).then(|| rec[35].to_string()),
    })
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(row_to_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if !header.iter().eq(COLUMNS) {
        return Err(CliError::Parse("unexpected CSV header".into()));
    }
    rd.records().map(|rec| row_from_record(&rec?)).collect()
}

/// Appends rows to a CSV file as they complete, flushing after each one, so
/// rows already written survive a later failure.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut writer = csv::Writer::from_writer(File::create(path)?);
        writer.write_record(COLUMNS)?;
        writer.flush()?;
        Ok(Self { writer })
    }

    pub fn push(&mut self, row: &ResultRow) -> Result<()> {
        self.writer.write_record(row_to_record(row))?;
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub value: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub build_id: String,
    pub master_seed: u64,
    /// The configuration as given, after command-line overrides.
    pub config: serde_json::Value,
    pub columns: Vec<String>,
    pub n_rows: usize,
    pub failed_points: Vec<FailedPoint>,
    /// Per observable, present when the rows hold at least two chain lengths.
    pub crossings: BTreeMap<String, CrossingEstimate>,
}

pub fn summarize(rows: &[ResultRow], config: serde_json::Value) -> Summary {
    Summary {
        schema_version: SCHEMA_VERSION,
        build_id: build_id(),
        master_seed: rows.first().map_or(0, |r| r.params.master_seed),
        config,
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        n_rows: rows.len(),
        failed_points: rows
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| FailedPoint { value: r.value, l: r.params.l, error: e.clone() }))
            .collect(),
        crossings: crossings_by_observable(rows),
    }
}

/// Writes `rows` into `dir` in the given format and returns the file path.
pub fn write_results(rows: &[ResultRow], format: OutputFormat, dir: &Path, config: &serde_json::Value) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(CliError::NoRows);
    }
    fs::create_dir_all(dir)?;
    match format {
        OutputFormat::Csv => {
            let path = dir.join(CSV_FILE);
            write_csv(rows, File::create(&path)?)?;
            Ok(path)
        }
        OutputFormat::JsonSummary => {
            let path = dir.join(SUMMARY_FILE);
            let text = serde_json::to_string_pretty(&summarize(rows, config.clone()))?;
            fs::write(&path, text + "\n")?;
            Ok(path)
        }
    }
}
