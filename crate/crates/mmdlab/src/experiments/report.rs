//! Experiment reports: per-trial records, summaries, and file output.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::complexity::ComplexityEstimate;
use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::report::{write_json_file, write_records_csv};

/// One Monte-Carlo trial. Self-contained: `sub_seed` replays the trial's
/// sample draws exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub sub_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_index: Option<usize>,
}

/// One point of a decay curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    pub mean_deviation: f64,
    pub std_error: f64,
}

/// One audit check: an observed empirical extremum against its certified
/// ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub check: String,
    pub observed: f64,
    pub certified: f64,
    pub passed: bool,
}

/// Complexity expectations reused across trials.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTerms {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_fg: Option<ComplexityEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_f: Option<ComplexityEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gc_g: Option<ComplexityEstimate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    /// Binomial standard error of the coverage fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_excess_risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityTerms>,
    /// Extra slack added to the bound in coverage comparisons when the
    /// population oracle is Monte-Carlo: three times its standard error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_optimum: Option<f64>,
    /// false when the decay fit was degenerate (some mean deviation
    /// was zero, so the log-log regression is undefined).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_defined: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_checks: Option<Vec<AuditCheck>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_passed: Option<bool>,
}

/// A complete experiment result. The summary JSON embeds the config echo
/// and summary; per-trial records go to CSV. Wall-clock time is kept out of
/// the serialized form so reruns with the same config and seed are
/// byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summary: ExperimentSummary,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<Vec<DecayPoint>>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    /// Write the summary JSON, per-trial CSV, and decay CSV wherever the
    /// config's output section points; explicit arguments override.
    pub fn write_files(&self, summary_override: Option<&Path>) -> Result<()> {
        let output = self.config.output.clone().unwrap_or_default();
        let summary_path = summary_override
            .map(|p| p.to_path_buf())
            .or_else(|| output.summary_json.as_ref().map(Into::into));
        if let Some(path) = summary_path {
            write_json_file(self, &path)?;
        }
        if let Some(path) = &output.trials_csv {
            self.write_trials_csv(Path::new(path))?;
        }
        if let Some(path) = &output.decay_csv {
            self.write_decay_csv(Path::new(path))?;
        }
        Ok(())
    }

    pub fn write_trials_csv(&self, path: &Path) -> Result<()> {
        let header = [
            "trial",
            "sub_seed",
            "deviation",
            "bound",
            "covered",
            "excess_risk",
            "g_index",
            "f_index",
        ];
        let rows: Vec<Vec<String>> = self
            .trials
            .iter()
            .map(|t| {
                vec![
                    t.trial.to_string(),
                    t.sub_seed.to_string(),
                    opt_real(t.deviation),
                    opt_real(t.bound),
                    t.covered.map(|c| c.to_string()).unwrap_or_default(),
                    opt_real(t.excess_risk),
                    t.g_index.map(|i| i.to_string()).unwrap_or_default(),
                    t.f_index.map(|i| i.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        write_records_csv(path, &header, &rows)
    }

    pub fn write_decay_csv(&self, path: &Path) -> Result<()> {
        let header = ["n", "mean_deviation", "stderr"];
        let rows: Vec<Vec<String>> = self
            .decay
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|p| {
                vec![
                    p.n.to_string(),
                    crate::report::format_real(p.mean_deviation),
                    crate::report::format_real(p.std_error),
                ]
            })
            .collect();
        write_records_csv(path, &header, &rows)
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(crate::report::format_real).unwrap_or_default()
}
