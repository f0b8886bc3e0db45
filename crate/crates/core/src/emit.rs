//! CSV, JSON and text emitters for reports, call series and traces.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::app::{AppVersion, Function};
use crate::dispatch::Pattern;
use crate::error::EmitError;
use crate::gas::Gas;
use crate::harness::{self, CallRecord, DeploymentRow, GasReport, NameConfig, ReportRow, ScenarioRun};
use crate::trace::OpTrace;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const DEPLOYMENTS_CSV: &str = "deployments.csv";
pub const CALLS_CSV: &str = "calls.csv";
pub const CALLS_JSON: &str = "calls.json";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_JSON: &str = "comparison.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CallRow {
    pattern: Pattern,
    version: AppVersion,
    function: Function,
    config: Option<NameConfig>,
    iteration: usize,
    gas: Gas,
}

#[derive(Debug, Serialize)]
struct ComparisonCsvRow {
    version: AppVersion,
    function: Function,
    baseline: Pattern,
    pattern: Pattern,
    avg: Gas,
    delta: i64,
    relative: String,
}

const REPORT_HEADER: [&str; 8] = ["pattern", "version", "function", "calls", "min", "avg", "median", "max"];
const CALLS_HEADER: [&str; 6] = ["pattern", "version", "function", "config", "iteration", "gas"];

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

pub fn write_report_csv<W: Write>(report: &GasReport, out: W) -> Result<(), EmitError> {
    let mut w = csv_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, EmitError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(EmitError::Parse(format!("unexpected report header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?)
}

pub fn write_deployments_csv<W: Write>(rows: &[DeploymentRow], out: W) -> Result<(), EmitError> {
    let mut w = csv_writer(out);
    w.write_record(["pattern", "version", "gas", "cumulative"])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_deployments_csv<R: Read>(input: R) -> Result<Vec<DeploymentRow>, EmitError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<DeploymentRow>, _>>()?)
}

pub fn write_calls_csv<W: Write>(records: &[CallRecord], out: W) -> Result<(), EmitError> {
    let mut w = csv_writer(out);
    w.write_record(CALLS_HEADER)?;
    for r in records {
        w.serialize(CallRow {
            pattern: r.pattern,
            version: r.version,
            function: r.function,
            config: r.config,
            iteration: r.iteration,
            gas: r.gas,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(report: &GasReport, out: W) -> Result<(), EmitError> {
    let mut w = csv_writer(out);
    w.write_record(["version", "function", "baseline", "pattern", "avg", "delta", "relative"])?;
    for row in harness::diff_patterns(report) {
        for p in &row.patterns {
            w.serialize(ComparisonCsvRow {
                version: row.version,
                function: row.function,
                baseline: row.baseline,
                pattern: p.pattern,
                avg: p.avg,
                delta: p.delta,
                relative: format!("{:.6}", p.relative),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<(), EmitError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_report<W: Write>(report: &GasReport, format: Format, out: W) -> Result<(), EmitError> {
    match format {
        Format::Csv => write_report_csv(report, out),
        Format::Json => write_json(report, out),
    }
}

pub fn write_trace<W: Write>(trace: &OpTrace, format: Format, mut out: W) -> Result<(), EmitError> {
    match format {
        Format::Csv => out.write_all(trace.render().as_bytes())?,
        Format::Json => write_json(trace, out)?,
    }
    Ok(())
}

/// Writes the report, call series and pattern comparison of a run into `dir`.
pub fn write_run(run: &ScenarioRun, dir: &Path) -> Result<(), EmitError> {
    fs::create_dir_all(dir)?;
    let file = |name: &str| fs::File::create(dir.join(name)).map(std::io::BufWriter::new);
    write_report_csv(&run.report, file(REPORT_CSV)?)?;
    write_json(&run.report, file(REPORT_JSON)?)?;
    write_deployments_csv(&run.report.deployments, file(DEPLOYMENTS_CSV)?)?;
    write_calls_csv(&run.records, file(CALLS_CSV)?)?;
    write_json(&run.records, file(CALLS_JSON)?)?;
    write_comparison_csv(&run.report, file(COMPARISON_CSV)?)?;
    write_json(&harness::diff_patterns(&run.report), file(COMPARISON_JSON)?)?;
    Ok(())
}

/// Rebuilds a report from the files [`write_run`] produced.
pub fn read_run_report(dir: &Path, include_reverted: bool) -> Result<GasReport, EmitError> {
    let calls: Vec<CallRecord> =
        serde_json::from_reader(std::io::BufReader::new(fs::File::open(dir.join(CALLS_JSON))?))?;
    let mut report = harness::aggregate(&calls, include_reverted);
    let deployments = dir.join(DEPLOYMENTS_CSV);
    if deployments.exists() {
        report.deployments = read_deployments_csv(fs::File::open(deployments)?)?;
    }
    Ok(report)
}
