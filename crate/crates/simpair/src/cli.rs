use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simpair_core::synthgen::{
    gen_majority_mask_with, gen_null, gen_reversal, gen_sessions, MajorityMaskParams, ReversalGenParams,
    SessionGenParams,
};
use simpair_core::{
    diagnostics, mixture_identity_check, BinSpec, Dataset, OutcomeModel, ParadoxDiagnostics, ScanConfig,
    VariableKind,
};

use crate::io::{load_csv_selected, write_csv, ColumnSelection};
use crate::plot::emit_plot_data;
use crate::report::{ConfigEcho, ScanReport};
use crate::scan::{default_jobs, parallel_scan};
use crate::{Error, Result};

pub const JOBS_ENV: &str = "SIMPAIR_JOBS";
pub const NULL_DEFAULT_ROWS: usize = 10_000;
pub const NULL_DEFAULT_VARS: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "simpair", version, about = "Find Simpson's paradoxes in tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every ordered variable pair and write a report.
    Scan(ScanArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Print the dependence and outcome-spread diagnostics for one pair.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logistic,
    Linear,
}

impl From<ModelArg> for OutcomeModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Logistic => OutcomeModel::Logistic,
            ModelArg::Linear => OutcomeModel::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Comma-separated variables; defaults to every non-outcome column.
    #[arg(long, value_delimiter = ',')]
    pub vars: Option<Vec<String>>,
    #[arg(long, default_value_t = simpair_core::stats::DEFAULT_THRESHOLD, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Binning for all conditioning variables, e.g. `quantile:10`; automatic
    /// when absent.
    #[arg(long, value_parser = parse_bin_spec)]
    pub bins: Option<BinSpec>,
    /// Per-variable binning, e.g. `age=width:5`. Repeatable.
    #[arg(long = "bins-for", value_parser = parse_bin_override)]
    pub bins_for: Vec<(String, BinSpec)>,
    #[arg(long)]
    pub min_bin_rows: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModelArg::Logistic)]
    pub model: ModelArg,
    /// Report path; `scan_report.json` or `scan_report.csv` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, env = JOBS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Sessions,
    Reversal,
    Null,
    MajorityMask,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,

    /// sessions: number of sessions.
    #[arg(long, help_heading = "sessions")]
    pub n_sessions: Option<usize>,
    #[arg(long, help_heading = "sessions", allow_negative_numbers = true)]
    pub p_continue: Option<f64>,
    #[arg(long, help_heading = "sessions")]
    pub max_len: Option<usize>,
    #[arg(long, help_heading = "sessions", allow_negative_numbers = true)]
    pub base_accept: Option<f64>,
    #[arg(long, help_heading = "sessions", allow_negative_numbers = true)]
    pub within_slope: Option<f64>,
    #[arg(long, help_heading = "sessions", allow_negative_numbers = true)]
    pub between_offset: Option<f64>,

    #[arg(long, help_heading = "reversal")]
    pub n_per_group: Option<usize>,
    /// Comma-separated mean of `x_p` per group.
    #[arg(long, help_heading = "reversal", value_delimiter = ',', allow_negative_numbers = true)]
    pub centers: Option<Vec<f64>>,
    /// Comma-separated log-odds offset per group.
    #[arg(long, help_heading = "reversal", value_delimiter = ',', allow_negative_numbers = true)]
    pub offsets: Option<Vec<f64>>,
    #[arg(long, help_heading = "reversal", allow_negative_numbers = true)]
    pub slope: Option<f64>,

    /// null, majority-mask: number of rows.
    #[arg(long, help_heading = "null / majority-mask")]
    pub rows: Option<usize>,
    /// null: number of predictor columns.
    #[arg(long, help_heading = "null / majority-mask")]
    pub n_vars: Option<usize>,
    #[arg(long, help_heading = "null / majority-mask", allow_negative_numbers = true)]
    pub majority_share: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub xp: String,
    #[arg(long)]
    pub xc: String,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn parse_bin_spec(s: &str) -> std::result::Result<BinSpec, String> {
    s.parse::<BinSpec>().map_err(|e| e.to_string())
}

fn parse_bin_override(s: &str) -> std::result::Result<(String, BinSpec), String> {
    let (var, spec) = s
        .split_once('=')
        .ok_or_else(|| format!("expected VAR=STRATEGY[:K], got `{s}`"))?;
    if var.is_empty() {
        return Err(format!("missing variable name in `{s}`"));
    }
    Ok((var.to_string(), parse_bin_spec(spec)?))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(a) => cmd_scan(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
    }
}

impl ScanArgs {
    pub fn config(&self) -> Result<ScanConfig> {
        let mut overrides = BTreeMap::new();
        for (var, spec) in &self.bins_for {
            if overrides.insert(var.clone(), *spec).is_some() {
                return Err(Error::Usage(format!("--bins-for given twice for `{var}`")));
            }
        }
        let cfg = ScanConfig {
            threshold: self.threshold,
            default_bins: self.bins,
            bin_overrides: overrides,
            min_bin_rows: self.min_bin_rows,
            model: self.model.into(),
            ..ScanConfig::default()
        };
        cfg.validate()
            .map_err(|e| Error::Usage(format!("invalid scan options: {e}")))?;
        Ok(cfg)
    }
}

pub fn cmd_scan(a: &ScanArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = a.config()?;
    if let Some(vars) = &a.vars {
        if vars.iter().any(|v| *v == a.outcome) {
            return Err(Error::Usage(format!("--vars lists the outcome `{}`", a.outcome)));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::Usage(format!("--vars lists `{v}` twice")));
            }
        }
    }
    let outcome_kind = match cfg.model {
        OutcomeModel::Logistic => VariableKind::BinaryOutcome,
        OutcomeModel::Linear => VariableKind::ContinuousOutcome,
    };
    let loaded = load_csv_selected(
        &a.input,
        &ColumnSelection {
            outcome: &a.outcome,
            outcome_kind,
            vars: a.vars.as_deref(),
        },
    )?;
    for var in cfg.bin_overrides.keys() {
        if !loaded.dataset.has_column(var) || var == &a.outcome {
            return Err(Error::Usage(format!("--bins-for names `{var}`, which is not a scanned variable")));
        }
    }
    let vars = loaded.dataset.variables();
    let jobs = a.jobs.map_or_else(default_jobs, |j| j as usize);
    let evals = parallel_scan(&loaded.dataset, &cfg, &vars, jobs)?;
    let report = ScanReport::new(&a.input, &loaded, ConfigEcho::new(&cfg, &vars), evals, start.elapsed(), jobs);

    let out = a.out.clone().unwrap_or_else(|| match a.format {
        ReportFormat::Json => "scan_report.json".into(),
        ReportFormat::Csv => "scan_report.csv".into(),
    });
    match a.format {
        ReportFormat::Json => report.write_json(&out)?,
        ReportFormat::Csv => report.write_csv(&out)?,
    }
    if let Some(path) = &a.plot_data {
        emit_plot_data(&report, &loaded.dataset, path)?;
    }

    if loaded.dropped_rows > 0 {
        eprintln!("dropped {} rows with missing or non-numeric values", loaded.dropped_rows);
    }
    for line in report.summary_lines() {
        println!("{line}");
    }
    println!(
        "{} of {} pairs flagged; report written to {}",
        report.findings.len(),
        report.all_pairs.len(),
        out.display()
    );
    Ok(())
}

impl SynthArgs {
    fn reject_unused(&self) -> Result<()> {
        use SynthKind::*;
        let flags: [(&str, bool, &[SynthKind]); 13] = [
            ("--n-sessions", self.n_sessions.is_some(), &[Sessions]),
            ("--p-continue", self.p_continue.is_some(), &[Sessions]),
            ("--max-len", self.max_len.is_some(), &[Sessions]),
            ("--base-accept", self.base_accept.is_some(), &[Sessions]),
            ("--within-slope", self.within_slope.is_some(), &[Sessions]),
            ("--between-offset", self.between_offset.is_some(), &[Sessions]),
            ("--n-per-group", self.n_per_group.is_some(), &[Reversal]),
            ("--centers", self.centers.is_some(), &[Reversal]),
            ("--offsets", self.offsets.is_some(), &[Reversal]),
            ("--slope", self.slope.is_some(), &[Reversal]),
            ("--rows", self.rows.is_some(), &[Null, MajorityMask]),
            ("--n-vars", self.n_vars.is_some(), &[Null]),
            ("--majority-share", self.majority_share.is_some(), &[MajorityMask]),
        ];
        for (flag, set, kinds) in flags {
            if set && !kinds.contains(&self.kind) {
                let kind = self.kind.to_possible_value().expect("no skipped variants");
                return Err(Error::Usage(format!("{flag} does not apply to --kind {}", kind.get_name())));
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.reject_unused()?;
        let invalid = |e: simpair_core::Error| Error::Usage(format!("invalid generator parameters: {e}"));
        let d = match self.kind {
            SynthKind::Sessions => {
                let dflt = SessionGenParams::default();
                gen_sessions(&SessionGenParams {
                    n_sessions: self.n_sessions.unwrap_or(dflt.n_sessions),
                    p_continue: self.p_continue.unwrap_or(dflt.p_continue),
                    max_len: self.max_len.unwrap_or(dflt.max_len),
                    base_accept: self.base_accept.unwrap_or(dflt.base_accept),
                    within_slope: self.within_slope.unwrap_or(dflt.within_slope),
                    between_offset: self.between_offset.unwrap_or(dflt.between_offset),
                    seed: self.seed,
                })
            }
            SynthKind::Reversal => {
                let dflt = ReversalGenParams::default();
                gen_reversal(&ReversalGenParams {
                    n_per_group: self.n_per_group.unwrap_or(dflt.n_per_group),
                    group_centers: self.centers.clone().unwrap_or(dflt.group_centers),
                    group_offsets: self.offsets.clone().unwrap_or(dflt.group_offsets),
                    within_slope: self.slope.unwrap_or(dflt.within_slope),
                    seed: self.seed,
                })
            }
            SynthKind::Null => gen_null(
                self.rows.unwrap_or(NULL_DEFAULT_ROWS),
                self.n_vars.unwrap_or(NULL_DEFAULT_VARS),
                self.seed,
            ),
            SynthKind::MajorityMask => {
                let dflt = MajorityMaskParams::default();
                gen_majority_mask_with(&MajorityMaskParams {
                    n: self.rows.unwrap_or(dflt.n),
                    majority_share: self.majority_share.unwrap_or(dflt.majority_share),
                    seed: self.seed,
                    ..dflt
                })
            }
        };
        d.map_err(invalid)
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let d = a.generate()?;
    write_csv(&d, &a.out)?;
    println!("wrote {} rows to {}", d.n_rows(), a.out.display());
    Ok(())
}

#[derive(Debug, serde::Serialize)]
struct DiagnoseOutput {
    x_p: String,
    x_c: String,
    #[serde(flatten)]
    diagnostics: ParadoxDiagnostics,
    /// `None` when `x_p` has too many distinct values for the check.
    mixture_identity_deviation: Option<f64>,
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    if a.xp == a.xc {
        return Err(simpair_core::Error::IdenticalVariables(a.xp.clone()).into());
    }
    let vars = [a.xp.clone(), a.xc.clone()];
    let loaded = load_csv_selected(
        &a.input,
        &ColumnSelection {
            outcome: &a.outcome,
            outcome_kind: VariableKind::ContinuousOutcome,
            vars: Some(&vars),
        },
    )?;
    let d = &loaded.dataset;
    let diag = diagnostics(d, &a.xp, &a.xc)?;
    let deviation = match mixture_identity_check(d, &a.xp, &a.xc) {
        Ok(v) => Some(v),
        Err(simpair_core::Error::TooManyDistinctValues { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let out = DiagnoseOutput {
        x_p: a.xp.clone(),
        x_c: a.xc.clone(),
        diagnostics: diag,
        mixture_identity_deviation: deviation,
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("pair: {} | {}", out.x_p, out.x_c);
        println!("dependence_pc: {}", diag.dependence_pc);
        println!("between_bin_outcome_spread: {}", diag.between_bin_outcome_spread);
        println!("condition1_met: {}", diag.condition1_met);
        println!("condition2_met: {}", diag.condition2_met);
        match deviation {
            Some(v) => println!("mixture_identity_deviation: {v:e}"),
            None => println!("mixture_identity_deviation: n/a (too many distinct x_p values)"),
        }
    }
    Ok(())
}
