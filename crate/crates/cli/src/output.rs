use std::path::{Path, PathBuf};

use lpconv_core::opnorm::TruncationSchedule;
use lpconv_core::report::Row;
use lpconv_core::{par, Group};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentSpec;
use crate::error::CliError;
use crate::experiments::Outcome;
use crate::RunOptions;

pub const CSV_HEADER: [&str; 8] = ["group", "p", "q", "radius", "lower", "upper", "factor", "verdict"];

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub seed: u64,
    pub schedule: TruncationSchedule,
    pub parallel: bool,
    pub threads: usize,
    pub max_radius: Option<usize>,
    pub dense_limit: usize,
    pub group: Option<String>,
}

impl Metadata {
    pub fn new(opts: &RunOptions, sched: &TruncationSchedule, seed: u64, group: Option<&Group>) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            schedule: sched.clone(),
            parallel: par::is_parallel(),
            threads: rayon::current_num_threads(),
            max_radius: opts.max_radius,
            dense_limit: opts.dense_limit,
            group: group.map(|g| g.descriptor().to_string()),
        }
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_record(r: &Row) -> [String; 8] {
    [
        r.group.clone(),
        float(r.p),
        float(r.q),
        r.radius.to_string(),
        float(r.lower),
        float(r.upper),
        float(r.factor),
        r.verdict.as_str().to_string(),
    ]
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(csv_record(r)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_block(prefix: &Path, spec: &ExperimentSpec, out: &Outcome, secs: f64, meta: &Metadata) -> Result<(), CliError> {
    if let Some(dir) = prefix.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let report = json!({
        "spec": spec,
        "check": out.report.check,
        "verdict": out.report.verdict,
        "notes": out.report.notes,
        "rows": out.report.rows,
        "summary": out.summary,
        "samples": out.samples,
        "wall_time_s": secs,
        "metadata": meta,
    });
    write_json(&with_suffix(prefix, ".report.json"), &report)?;
    write_csv(&with_suffix(prefix, ".rows.csv"), &out.report.rows)?;
    for (suffix, value) in &out.artifacts {
        write_json(&with_suffix(prefix, &format!(".{suffix}.json")), value)?;
    }
    Ok(())
}
