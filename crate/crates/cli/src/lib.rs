//! Experiment runner for the `lpconv` command line tool.
//!
//! A config file holds `[[experiment]]` blocks. Each block is planned up
//! front (so config errors exit before any computation), then run in order;
//! every block writes `<prefix>.report.json` and `<prefix>.rows.csv`, and
//! the run writes `<config-stem>.summary.json` into the output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod params;
pub mod registry;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lpconv_core::group::BallLimits;
use lpconv_core::opnorm::dense::DEFAULT_DENSE_LIMIT;
use lpconv_core::report::{CheckReport, Verdict};
use lpconv_core::LabError;
use serde::Serialize;

pub use config::{Config, ExperimentSpec, ScheduleSpec};
pub use error::CliError;
pub use registry::{listing, REGISTRY};

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Replaces every block's seed.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub max_radius: Option<usize>,
    pub dense_limit: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: None, out_dir: PathBuf::from("."), max_radius: None, dense_limit: DEFAULT_DENSE_LIMIT }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub name: String,
    pub prefix: PathBuf,
    pub verdict: Verdict,
    pub rows: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: PathBuf,
    pub verdict: Verdict,
    pub blocks: Vec<BlockResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Fail { 1 } else { 0 }
    }
}

struct Planned {
    spec: ExperimentSpec,
    location: String,
    job: experiments::Job,
    sched: lpconv_core::opnorm::TruncationSchedule,
    seed: u64,
    prefix: PathBuf,
}

fn plan(config: &Config, opts: &RunOptions) -> Result<Vec<Planned>, CliError> {
    let limits = BallLimits { max_radius: opts.max_radius, ..Default::default() };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.experiment.len());
    for (i, spec) in config.experiment.iter().enumerate() {
        let location = format!("experiment[{i}] `{}`", spec.name);
        let seed = opts.seed.unwrap_or(spec.seed);
        let sched = spec.schedule.resolve(seed, opts.dense_limit, &location)?;
        let job = experiments::prepare(spec, &location, limits)?;
        let prefix = opts.out_dir.join(spec.output.as_deref().unwrap_or(&spec.name));
        if !seen.insert(prefix.clone()) {
            return Err(CliError::parse(&location, format!("output prefix {} used twice", prefix.display())));
        }
        out.push(Planned { spec: spec.clone(), location, job, sched, seed, prefix });
    }
    Ok(out)
}

/// Plan and run every block of `path`. Blocks whose checks fail still
/// write their outputs; a resource error stops the run after writing the
/// summary of completed blocks.
pub fn run_config(path: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let config = Config::load(path)?;
    run(&config, path, opts)
}

pub fn run(config: &Config, origin: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let planned = plan(config, opts)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let stem = origin.file_stem().and_then(|s| s.to_str()).unwrap_or("lpconv");
    let summary_path = opts.out_dir.join(format!("{stem}.summary.json"));
    let mut summary =
        RunSummary { config: origin.to_path_buf(), verdict: Verdict::Pass, blocks: Vec::new(), error: None, wall_time_s: 0.0 };
    for (done, b) in planned.iter().enumerate() {
        log::info!("{}: running", b.location);
        let cx = experiments::RunCtx { sched: b.sched.clone(), seed: b.seed, out_dir: opts.out_dir.clone() };
        let t = Instant::now();
        let outcome = match b.job.run(&cx) {
            Ok(o) => o,
            Err(LabError::Consistency(msg)) => {
                let mut report = CheckReport::new(b.job.info.name);
                report.fail(format!("internal consistency violation: {msg}"));
                experiments::Outcome { report, samples: Vec::new(), summary: serde_json::Value::Null, artifacts: Vec::new() }
            }
            Err(e) => {
                let err = CliError::from_lab(&b.location, e, done);
                summary.verdict = Verdict::Fail;
                summary.error = Some(err.to_string());
                summary.wall_time_s = start.elapsed().as_secs_f64();
                output::write_json(&summary_path, &summary)?;
                return Err(err);
            }
        };
        let secs = t.elapsed().as_secs_f64();
        let meta = output::Metadata::new(opts, &b.sched, b.seed, b.job.group.as_ref());
        output::write_block(&b.prefix, &b.spec, &outcome, secs, &meta)?;
        log::info!("{}: {} ({} rows, {secs:.2} s)", b.location, outcome.report.verdict.as_str(), outcome.report.rows.len());
        summary.verdict = summary.verdict.max(outcome.report.verdict);
        summary.blocks.push(BlockResult {
            name: b.spec.name.clone(),
            prefix: b.prefix.clone(),
            verdict: outcome.report.verdict,
            rows: outcome.report.rows.len(),
            wall_time_s: secs,
        });
    }
    summary.wall_time_s = start.elapsed().as_secs_f64();
    output::write_json(&summary_path, &summary)?;
    Ok(summary)
}
