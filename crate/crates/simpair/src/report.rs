use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use simpair_core::{OutcomeModel, PairEvaluation, ScanConfig};

use crate::io::{format_f64, write_file, Loaded};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub tool_version: String,
    pub dataset: DatasetFingerprint,
    pub config: ConfigEcho,
    /// The flagged subset of `all_pairs`, in the same order.
    pub findings: Vec<PairEvaluation>,
    pub all_pairs: Vec<PairEvaluation>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetFingerprint {
    pub source: String,
    pub rows: usize,
    pub dropped_rows: usize,
    pub columns: Vec<String>,
    pub outcome: String,
    pub content_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub threshold: f64,
    pub model: OutcomeModel,
    /// `auto` or a `STRATEGY:K` spec.
    pub default_bins: String,
    pub bin_overrides: BTreeMap<String, String>,
    pub min_bin_rows: Option<usize>,
    pub min_valid_bins: usize,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
    pub jobs: usize,
}

impl ConfigEcho {
    pub fn new(cfg: &ScanConfig, vars: &[String]) -> Self {
        Self {
            threshold: cfg.threshold,
            model: cfg.model,
            default_bins: cfg.default_bins.map_or_else(|| "auto".to_string(), |s| s.to_string()),
            bin_overrides: cfg
                .bin_overrides
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string()))
                .collect(),
            min_bin_rows: cfg.min_bin_rows,
            min_valid_bins: cfg.min_valid_bins,
            vars: vars.to_vec(),
        }
    }
}

impl ScanReport {
    pub fn new(
        source: &Path,
        loaded: &Loaded,
        config: ConfigEcho,
        all_pairs: Vec<PairEvaluation>,
        elapsed: Duration,
        jobs: usize,
    ) -> Self {
        let d = &loaded.dataset;
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: DatasetFingerprint {
                source: source.display().to_string(),
                rows: d.n_rows(),
                dropped_rows: loaded.dropped_rows,
                columns: d.column_names().map(str::to_owned).collect(),
                outcome: d.outcome_name().to_string(),
                content_hash: loaded.content_hash.clone(),
            },
            config,
            findings: all_pairs.iter().filter(|e| e.is_paradox).cloned().collect(),
            all_pairs,
            timing: Timing {
                elapsed_ms: elapsed.as_secs_f64() * 1e3,
                jobs,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }

    /// One row per evaluation with scalar fields only.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |source| Error::Csv {
            path: "<report>".into(),
            source,
        };
        w.write_record([
            "x_p",
            "x_c",
            "is_paradox",
            "classification",
            "bin_spec",
            "aggregate_beta",
            "aggregate_p",
            "aggregate_sign",
            "mean_disagg_sign",
            "disagg_sign",
            "valid_bins",
            "skipped_bins",
            "dependence_pc",
            "spread",
            "error",
        ])
        .map_err(csv_err)?;
        for e in &self.all_pairs {
            w.write_record([
                e.x_p.clone(),
                e.x_c.clone(),
                e.is_paradox.to_string(),
                e.classification.as_str().to_string(),
                e.bin_spec.to_string(),
                format_f64(e.aggregate_fit.beta),
                format_f64(e.aggregate_fit.p_value),
                e.aggregate_sign.value().to_string(),
                format_f64(e.mean_disagg_sign),
                e.disagg_sign.value().to_string(),
                e.valid_bins.to_string(),
                e.skipped_bins.to_string(),
                format_f64(e.diagnostics.dependence_pc),
                format_f64(e.diagnostics.between_bin_outcome_spread),
                e.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv()?.as_bytes())
    }

    /// Findings ordered by the gap between mean bin sign and aggregate sign,
    /// largest first, then by name.
    pub fn ranked_findings(&self) -> Vec<&PairEvaluation> {
        let gap = |e: &PairEvaluation| (e.mean_disagg_sign - f64::from(e.aggregate_sign.value())).abs();
        let mut out: Vec<&PairEvaluation> = self.findings.iter().collect();
        out.sort_by(|a, b| {
            gap(b)
                .total_cmp(&gap(a))
                .then_with(|| a.x_p.cmp(&b.x_p))
                .then_with(|| a.x_c.cmp(&b.x_c))
        });
        out
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.ranked_findings()
            .into_iter()
            .map(|e| {
                format!(
                    "{} | {}: {} (aggregate {:+}, mean bin sign {:+.3}, {} valid bins)",
                    e.x_p,
                    e.x_c,
                    e.classification.as_str(),
                    e.aggregate_sign.value(),
                    e.mean_disagg_sign,
                    e.valid_bins
                )
            })
            .collect()
    }
}
