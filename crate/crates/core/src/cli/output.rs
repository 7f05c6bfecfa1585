//! File formats: CSV (header row, LF endings) or JSON lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::estimators::VarianceReport;
use crate::harness::{EstimatorSummary, GroupStats, McSummary, ReplicationRecord};
use crate::simulate::SimulatedPath;

#[derive(Debug, Serialize)]
pub struct PathRow {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Serialize)]
pub struct JumpRow {
    pub jump_time: f64,
    pub jump_size: f64,
}

#[derive(Debug, Serialize)]
pub struct TruthRow {
    pub t: f64,
    pub continuous: f64,
    pub sigma: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimateRow {
    pub estimator: &'static str,
    pub value: f64,
    pub p: f64,
    pub mode: &'static str,
    pub k: usize,
    pub l: Option<usize>,
    pub sampled: bool,
    pub seed: Option<u64>,
    pub elapsed_ms: f64,
}

impl From<&VarianceReport> for EstimateRow {
    fn from(r: &VarianceReport) -> Self {
        Self {
            estimator: r.estimator.name(),
            value: r.value,
            p: r.config.p,
            mode: r.config.mode.as_str(),
            k: r.config.k,
            l: r.estimator.uses_subsets().then_some(r.config.l),
            sampled: r.sampled(),
            seed: r.path_seed,
            elapsed_ms: r.elapsed.as_secs_f64() * 1e3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryRow<'a> {
    pub estimator: &'a str,
    pub group: &'static str,
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub oracle_mean: Option<f64>,
    pub rmse: Option<f64>,
    pub relative_bias: Option<f64>,
    pub ratio_count: usize,
    pub zero_oracle: usize,
    pub ratio_mean: Option<f64>,
    pub ratio_median: Option<f64>,
    pub ratio_variance: Option<f64>,
    pub median_value_over_n: Option<f64>,
    pub median_value_k_delta: Option<f64>,
    pub median_value_delta: Option<f64>,
    pub ks_distance: Option<f64>,
    pub oracle_ks_distance: Option<f64>,
    pub coverage: Option<f64>,
    pub standardized_count: usize,
    pub standardized_excluded: usize,
}

impl<'a> SummaryRow<'a> {
    fn new(e: &'a EstimatorSummary, group: &'static str, g: &GroupStats) -> Self {
        Self {
            estimator: &e.label,
            group,
            count: g.count,
            mean: g.mean,
            sd: g.sd,
            oracle_mean: g.oracle_mean,
            rmse: g.rmse,
            relative_bias: g.relative_bias,
            ratio_count: g.ratio_count,
            zero_oracle: g.zero_oracle,
            ratio_mean: g.ratio_mean,
            ratio_median: g.ratio_median,
            ratio_variance: g.ratio_variance,
            median_value_over_n: g.median_value_over_n,
            median_value_k_delta: g.median_value_k_delta,
            median_value_delta: g.median_value_delta,
            ks_distance: e.ks_distance,
            oracle_ks_distance: e.oracle_ks_distance,
            coverage: e.coverage,
            standardized_count: e.standardized_count,
            standardized_excluded: e.standardized_excluded,
        }
    }
}

pub fn summary_rows(summary: &McSummary) -> Vec<SummaryRow<'_>> {
    summary
        .estimators
        .iter()
        .flat_map(|e| {
            [
                SummaryRow::new(e, "all", &e.all),
                SummaryRow::new(e, "jump", &e.jump_paths),
                SummaryRow::new(e, "continuous", &e.continuous_paths),
            ]
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ReplicationRow<'a> {
    pub replication: usize,
    pub seed: u64,
    pub jump_count: usize,
    pub estimator: &'a str,
    pub value: f64,
    pub oracle: f64,
    pub standardized: Option<f64>,
    pub oracle_standardized: Option<f64>,
    pub elapsed_ms: f64,
}

pub fn replication_rows<'a>(
    labels: &'a [String],
    records: &[ReplicationRecord],
) -> Vec<ReplicationRow<'a>> {
    records
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().zip(labels).map(move |(o, label)| ReplicationRow {
                replication: r.replication,
                seed: r.seed,
                jump_count: r.jump_count,
                estimator: label,
                value: o.value,
                oracle: o.oracle,
                standardized: o.standardized,
                oracle_standardized: o.oracle_standardized,
                elapsed_ms: o.elapsed_ms,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct StandardizedRow<'a> {
    pub replication: usize,
    pub estimator: &'a str,
    pub standardized: f64,
}

pub fn standardized_rows<'a>(
    labels: &'a [String],
    records: &[ReplicationRecord],
) -> Vec<StandardizedRow<'a>> {
    records
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().zip(labels).filter_map(move |(o, label)| {
                o.standardized.map(|z| StandardizedRow {
                    replication: r.replication,
                    estimator: label,
                    standardized: z,
                })
            })
        })
        .collect()
}

pub fn path_rows(path: &SimulatedPath) -> Vec<PathRow> {
    let n = path.n() as f64;
    path.observations
        .iter()
        .enumerate()
        .map(|(i, &x)| PathRow { t: i as f64 / n, x })
        .collect()
}

pub fn jump_rows(path: &SimulatedPath) -> Vec<JumpRow> {
    path.jump_times
        .iter()
        .zip(&path.jump_sizes)
        .map(|(&jump_time, &jump_size)| JumpRow { jump_time, jump_size })
        .collect()
}

pub fn truth_rows(path: &SimulatedPath) -> Vec<TruthRow> {
    let n = path.n();
    let substeps = (path.fine_sigma.len() - 1) / n;
    (0..=n)
        .map(|i| TruthRow {
            t: i as f64 / n as f64,
            continuous: path.continuous[i],
            sigma: path.fine_sigma[i * substeps],
        })
        .collect()
}

/// Writes `rows` to `dir/stem.{csv,jsonl}` and returns the file name.
pub fn write_rows<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    rows: &[T],
    header: &[&str],
) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let file = File::create(&path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let file = BufWriter::new(file);
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .has_headers(!rows.is_empty())
                .from_writer(file);
            if rows.is_empty() {
                writer.write_record(header)?;
            }
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        OutputFormat::JsonLines => {
            let mut file = file;
            for row in rows {
                serde_json::to_writer(&mut file, row)?;
                file.write_all(b"\n")?;
            }
            file.flush()?;
        }
    }
    Ok(path)
}

pub const PATH_HEADER: &[&str] = &["t", "x"];
pub const JUMP_HEADER: &[&str] = &["jump_time", "jump_size"];
pub const TRUTH_HEADER: &[&str] = &["t", "continuous", "sigma"];
pub const ESTIMATE_HEADER: &[&str] = &[
    "estimator", "value", "p", "mode", "k", "l", "sampled", "seed", "elapsed_ms",
];
pub const SUMMARY_HEADER: &[&str] = &[
    "estimator",
    "group",
    "count",
    "mean",
    "sd",
    "oracle_mean",
    "rmse",
    "relative_bias",
    "ratio_count",
    "zero_oracle",
    "ratio_mean",
    "ratio_median",
    "ratio_variance",
    "median_value_over_n",
    "median_value_k_delta",
    "median_value_delta",
    "ks_distance",
    "oracle_ks_distance",
    "coverage",
    "standardized_count",
    "standardized_excluded",
];
pub const REPLICATION_HEADER: &[&str] = &[
    "replication",
    "seed",
    "jump_count",
    "estimator",
    "value",
    "oracle",
    "standardized",
    "oracle_standardized",
    "elapsed_ms",
];
pub const STANDARDIZED_HEADER: &[&str] = &["replication", "estimator", "standardized"];
pub const FAILURE_HEADER: &[&str] = &[
    "n",
    "k",
    "l",
    "replications",
    "jump_paths",
    "median_nt_over_n",
    "median_subsample_k_delta",
    "median_subsample_delta",
    "median_nt_ratio",
    "median_subsample_ratio",
    "median_v_tilde_ratio",
    "median_v_universal_ratio",
    "continuous_nt_ratio",
    "continuous_subsample_ratio",
];

/// Reads observations from a CSV file with header `t,x`. Errors name the
/// 1-based line of the offending record.
pub fn read_path_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Csv(e),
            _ => Error::Parse { line: 1, message: e.to_string() },
        })?;
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let x_column = match (header.get(0), header.get(1), header.len()) {
        (Some("t"), Some("x"), 2) => 1,
        (Some("x"), None, 1) => 0,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `t,x`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
            })
        }
    };
    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(x_column).unwrap_or("");
        let x: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("`{field}` is not a number"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite observation `{field}`") });
        }
        observations.push(x);
    }
    if observations.len() < 3 {
        return Err(Error::Parse {
            line: observations.len() as u64 + 1,
            message: "at least three observations are required".into(),
        });
    }
    Ok(observations)
}
