//! Experiment reports: per-epoch metric rows plus run summaries, written
//! as CSV.
//!
//! CSV output is byte-reproducible for a fixed seed: rows are sorted by
//! (config-label, epoch) and the wall-seconds column is written as zero
//! unless timing was explicitly requested, since measured times differ
//! between otherwise identical runs.

use crate::error::{Error, Result};
use crate::training::EpochMetrics;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One per-epoch metrics row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub label: String,
    pub epoch: usize,
    pub train_loss: f64,
    pub test_metric: Option<f64>,
    pub wall_seconds: f64,
}

/// Final numbers for one configuration in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub final_metric: f64,
    pub parameter_count: usize,
    pub wall_seconds: f64,
}

/// All rows and summaries from one experiment invocation.
#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    pub run_label: String,
    pub rows: Vec<MetricRow>,
    pub summaries: Vec<RunSummary>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, run_label: impl Into<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            run_label: run_label.into(),
            rows: Vec::new(),
            summaries: Vec::new(),
        }
    }

    /// Append one configuration's epoch curve. `wall_seconds` applies to
    /// every row (pass 0.0 for reproducible output).
    pub fn push_epochs(&mut self, label: &str, metrics: &[EpochMetrics], wall_seconds: f64) {
        for m in metrics {
            self.rows.push(MetricRow {
                label: label.to_string(),
                epoch: m.epoch,
                train_loss: m.train_loss,
                test_metric: m.test_metric,
                wall_seconds,
            });
        }
    }

    /// Sort rows by (config-label, epoch); idempotent and always applied
    /// before serialization so worker completion order cannot leak in.
    pub fn sort_rows(&mut self) {
        self.rows
            .sort_by(|a, b| a.label.cmp(&b.label).then(a.epoch.cmp(&b.epoch)));
        self.summaries.sort_by(|a, b| a.label.cmp(&b.label));
    }

    /// CSV with header `experiment-id,config-label,epoch,train-loss,
    /// test-metric,wall-seconds`. Missing test metrics are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("experiment-id,config-label,epoch,train-loss,test-metric,wall-seconds\n");
        for r in &self.rows {
            let test = r.test_metric.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.3}",
                self.experiment, r.label, r.epoch, r.train_loss, test, r.wall_seconds
            );
        }
        out
    }

    pub fn file_stem(&self) -> String {
        format!("{}-{}", self.experiment, self.run_label)
    }

    /// Write `{experiment}-{run_label}.csv` under `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<PathBuf> {
        if self.rows.is_empty() {
            return Err(Error::Argument("report has no rows to write".to_string()));
        }
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.file_stem()));
        std::fs::write(&path, self.to_csv())?;
        Ok(path)
    }

    /// Human-readable summary block for the console.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{} {}: final metric {:.6}, {} parameters, {:.1}s",
                self.experiment, s.label, s.final_metric, s.parameter_count, s.wall_seconds
            );
        }
        out
    }
}
