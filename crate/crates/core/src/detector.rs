//! Pairwise scan for trend reversals.
//!
//! For an ordered pair `(x_p, x_c)` the outcome is regressed on `x_p` over all
//! rows (the aggregate trend) and again inside every subgroup of `x_c`. Each
//! fit is reduced to a [`TrendSign`]; the pair is a paradox when the aggregate
//! sign differs from the sign of the unweighted mean of the subgroup signs.
//! Undersized and degenerate subgroups carry no sign and are left out of the
//! mean rather than counted as zero.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::binning::{auto_bin_spec_for, bin_values, BinSpec, Subgroup};
use crate::dataset::{distinct_count, Dataset};
use crate::error::{Error, Result};
use crate::math::{self, order_key};
use crate::stats::{trend_sign, FitResult, FitStatus, OutcomeModel, TrendSign, DEFAULT_THRESHOLD};

/// `|mean sign|` below this counts as zero.
pub const SIGN_EPS: f64 = 1e-12;
/// `|corr(x_p, x_c)|` above this meets the dependence condition.
pub const DEPENDENCE_EPS: f64 = 0.01;
/// Between-bin outcome variance above this meets the outcome-variation condition.
pub const SPREAD_EPS: f64 = 1e-12;
/// Largest number of distinct `x_p` values the mixture check accepts.
pub const MIXTURE_DISTINCT_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Classification {
    /// Aggregate and subgroup signs are opposite.
    Reversal,
    /// A nonzero aggregate trend vanishes in the subgroups.
    Disappearance,
    /// A trend absent in aggregate appears in the subgroups.
    Emergence,
    None,
}

impl Classification {
    pub fn of(aggregate: TrendSign, disaggregated: TrendSign) -> Self {
        match (aggregate.value(), disaggregated.value()) {
            (a, d) if a * d == -1 => Classification::Reversal,
            (a, 0) if a != 0 => Classification::Disappearance,
            (0, d) if d != 0 => Classification::Emergence,
            _ => Classification::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Reversal => "reversal",
            Classification::Disappearance => "disappearance",
            Classification::Emergence => "emergence",
            Classification::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BinStatus {
    Valid,
    /// Fewer than `min_bin_rows` rows; not fitted.
    Undersized,
    /// Fitted, but the fit was impossible (constant outcome or predictor).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BinResult {
    pub label: String,
    pub n: usize,
    pub status: BinStatus,
    pub fit: Option<FitResult>,
    pub sign: Option<TrendSign>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ParadoxDiagnostics {
    /// Pearson correlation of `x_p` and `x_c`.
    pub dependence_pc: f64,
    /// Variance across valid `x_c` bins of the per-bin outcome mean.
    pub between_bin_outcome_spread: f64,
    /// `x_p` and `x_c` are associated.
    pub condition1_met: bool,
    /// The outcome varies with `x_c`.
    pub condition2_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairEvaluation {
    pub x_p: String,
    pub x_c: String,
    pub bin_spec: BinSpec,
    pub aggregate_fit: FitResult,
    pub aggregate_sign: TrendSign,
    pub bin_results: Vec<BinResult>,
    pub mean_disagg_sign: f64,
    pub disagg_sign: TrendSign,
    pub is_paradox: bool,
    pub classification: Classification,
    pub valid_bins: usize,
    pub skipped_bins: usize,
    pub diagnostics: ParadoxDiagnostics,
    /// Set when the pair could not be evaluated (e.g. binning failed).
    pub error: Option<String>,
}

impl PairEvaluation {
    /// Recomputes the paradox flag from the stored signs.
    pub fn recompute_flag(&self, min_valid_bins: usize) -> bool {
        let signs: Vec<f64> = self
            .bin_results
            .iter()
            .filter_map(|b| b.sign.map(|s| s.value() as f64))
            .collect();
        let mean = if signs.is_empty() {
            0.0
        } else {
            signs.iter().sum::<f64>() / signs.len() as f64
        };
        signs.len() >= min_valid_bins && TrendSign::of(mean, SIGN_EPS) != self.aggregate_sign
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub threshold: f64,
    /// Binning for every conditioning variable without an override; `None`
    /// selects automatically per variable.
    pub default_bins: Option<BinSpec>,
    pub bin_overrides: BTreeMap<String, BinSpec>,
    /// Replaces the `min_bin_rows` of every bin spec when set.
    pub min_bin_rows: Option<usize>,
    pub min_valid_bins: usize,
    pub model: OutcomeModel,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            default_bins: None,
            bin_overrides: BTreeMap::new(),
            min_bin_rows: None,
            min_valid_bins: 2,
            model: OutcomeModel::Logistic,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.min_valid_bins == 0 {
            return Err(Error::InvalidParameter("min_valid_bins must be positive".into()));
        }
        if self.min_bin_rows == Some(0) {
            return Err(Error::InvalidParameter("min_bin_rows must be positive".into()));
        }
        if let Some(spec) = &self.default_bins {
            spec.validate()?;
        }
        for spec in self.bin_overrides.values() {
            spec.validate()?;
        }
        Ok(())
    }

    /// Bin specification used when conditioning on `var` with the given values.
    pub fn bin_spec_for(&self, var: &str, values: &[f64]) -> BinSpec {
        let mut spec = self
            .bin_overrides
            .get(var)
            .copied()
            .or(self.default_bins)
            .unwrap_or_else(|| auto_bin_spec_for(values));
        if let Some(m) = self.min_bin_rows {
            spec.min_bin_rows = m;
        }
        spec
    }

    fn check_outcome(&self, d: &Dataset) -> Result<()> {
        if self.model == OutcomeModel::Logistic
            && d.outcome().iter().any(|&v| v != 0.0 && v != 1.0)
        {
            return Err(Error::OutcomeNotBinary {
                column: d.outcome_name().to_string(),
                value: *d.outcome().iter().find(|&&v| v != 0.0 && v != 1.0).unwrap(),
            });
        }
        Ok(())
    }
}

/// Per-variable fits and partitions shared by all pairs of one scan.
#[derive(Debug)]
pub struct ScanPlan<'a> {
    data: &'a Dataset,
    cfg: &'a ScanConfig,
    vars: Vec<String>,
    aggregates: Vec<FitResult>,
    partitions: Vec<(BinSpec, Result<Vec<Subgroup>>)>,
}

impl<'a> ScanPlan<'a> {
    pub fn new(data: &'a Dataset, cfg: &'a ScanConfig, vars: &[String]) -> Result<Self> {
        cfg.validate()?;
        cfg.check_outcome(data)?;
        if vars.len() < 2 {
            return Err(Error::TooFewVariables(vars.len()));
        }
        for (i, v) in vars.iter().enumerate() {
            data.variable(v)?;
            if vars[..i].contains(v) {
                return Err(Error::DuplicateColumn(v.clone()));
            }
        }
        let y = data.outcome();
        let mut aggregates = Vec::with_capacity(vars.len());
        let mut partitions = Vec::with_capacity(vars.len());
        for v in vars {
            let values = data.column(v)?;
            aggregates.push(cfg.model.fit(values, y)?);
            let spec = cfg.bin_spec_for(v, values);
            let groups = bin_values(values, &spec).map_err(|e| match e {
                Error::NonPositiveLogValues(_) => Error::NonPositiveLogValues(v.clone()),
                e => e,
            });
            partitions.push((spec, groups));
        }
        Ok(Self {
            data,
            cfg,
            vars: vars.to_vec(),
            aggregates,
            partitions,
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// All ordered pairs `(p, c)` with `p != c`, as indices into [`ScanPlan::vars`].
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let m = self.vars.len();
        (0..m)
            .flat_map(|p| (0..m).filter(move |&c| c != p).map(move |c| (p, c)))
            .collect()
    }

    pub fn evaluate(&self, p: usize, c: usize) -> PairEvaluation {
        let xp = self.data.column(&self.vars[p]).expect("checked in new");
        let xc = self.data.column(&self.vars[c]).expect("checked in new");
        let (spec, groups) = &self.partitions[c];
        let input = PairInput {
            x_p_name: &self.vars[p],
            x_c_name: &self.vars[c],
            xp,
            xc,
            y: self.data.outcome(),
            aggregate: self.aggregates[p],
            spec: *spec,
        };
        match groups {
            Ok(groups) => assemble(&input, groups, self.cfg),
            Err(e) => {
                let mut eval = assemble(&input, &[], self.cfg);
                eval.error = Some(e.to_string());
                eval
            }
        }
    }

    /// Evaluates every ordered pair, sorted by [`sort_evaluations`].
    pub fn run(&self) -> Vec<PairEvaluation> {
        let mut out: Vec<PairEvaluation> = self
            .pairs()
            .into_iter()
            .map(|(p, c)| self.evaluate(p, c))
            .collect();
        sort_evaluations(&mut out);
        out
    }
}

/// Flagged pairs first, then by `x_p` and `x_c` name.
pub fn sort_evaluations(evals: &mut [PairEvaluation]) {
    evals.sort_by(|a, b| {
        b.is_paradox
            .cmp(&a.is_paradox)
            .then_with(|| a.x_p.cmp(&b.x_p))
            .then_with(|| a.x_c.cmp(&b.x_c))
    });
}

struct PairInput<'a> {
    x_p_name: &'a str,
    x_c_name: &'a str,
    xp: &'a [f64],
    xc: &'a [f64],
    y: &'a [f64],
    aggregate: FitResult,
    spec: BinSpec,
}

fn assemble(input: &PairInput<'_>, groups: &[Subgroup], cfg: &ScanConfig) -> PairEvaluation {
    let aggregate_sign = trend_sign(&input.aggregate, cfg.threshold);
    let mut bin_results = Vec::with_capacity(groups.len());
    let mut sign_sum = 0.0;
    let mut valid_bins = 0;
    for g in groups {
        let (status, fit, sign) = if !g.valid {
            (BinStatus::Undersized, None, None)
        } else {
            let (x, y) = gather(input.xp, input.y, &g.row_indices);
            match cfg.model.fit(&x, &y) {
                Ok(fit) if fit.status != FitStatus::Degenerate => {
                    let s = trend_sign(&fit, cfg.threshold);
                    sign_sum += s.value() as f64;
                    valid_bins += 1;
                    (BinStatus::Valid, Some(fit), Some(s))
                }
                Ok(fit) => (BinStatus::Degenerate, Some(fit), None),
                Err(_) => (BinStatus::Degenerate, None, None),
            }
        };
        bin_results.push(BinResult {
            label: g.label.clone(),
            n: g.n(),
            status,
            fit,
            sign,
        });
    }
    let mean_disagg_sign = if valid_bins == 0 {
        0.0
    } else {
        sign_sum / valid_bins as f64
    };
    let disagg_sign = TrendSign::of(mean_disagg_sign, SIGN_EPS);
    let is_paradox = aggregate_sign != disagg_sign && valid_bins >= cfg.min_valid_bins;
    PairEvaluation {
        x_p: input.x_p_name.to_string(),
        x_c: input.x_c_name.to_string(),
        bin_spec: input.spec,
        aggregate_fit: input.aggregate,
        aggregate_sign,
        mean_disagg_sign,
        disagg_sign,
        is_paradox,
        classification: if is_paradox {
            Classification::of(aggregate_sign, disagg_sign)
        } else {
            Classification::None
        },
        valid_bins,
        skipped_bins: groups.len() - valid_bins,
        diagnostics: diagnostics_from_groups(input.xp, input.xc, input.y, groups),
        bin_results,
        error: None,
    }
}

fn gather(x: &[f64], y: &[f64], rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    rows.iter().map(|&r| (x[r], y[r])).unzip()
}

fn diagnostics_from_groups(xp: &[f64], xc: &[f64], y: &[f64], groups: &[Subgroup]) -> ParadoxDiagnostics {
    let dependence_pc = math::pearson(xp, xc);
    let means: Vec<f64> = groups
        .iter()
        .filter(|g| g.valid)
        .map(|g| g.row_indices.iter().map(|&r| y[r]).sum::<f64>() / g.n() as f64)
        .collect();
    let spread = if means.len() < 2 {
        0.0
    } else {
        math::sum_sq_dev(&means) / means.len() as f64
    };
    ParadoxDiagnostics {
        dependence_pc,
        between_bin_outcome_spread: spread,
        condition1_met: libm::fabs(dependence_pc) > DEPENDENCE_EPS,
        condition2_met: spread > SPREAD_EPS,
    }
}

/// Evaluates one ordered pair.
pub fn evaluate_pair(d: &Dataset, x_p: &str, x_c: &str, cfg: &ScanConfig) -> Result<PairEvaluation> {
    cfg.validate()?;
    if x_p == x_c {
        return Err(Error::IdenticalVariables(x_p.to_string()));
    }
    let xp = d.variable(x_p)?;
    let xc = d.variable(x_c)?;
    cfg.check_outcome(d)?;
    let spec = cfg.bin_spec_for(x_c, xc);
    let groups = crate::binning::disaggregate(d, x_c, &spec)?;
    let input = PairInput {
        x_p_name: x_p,
        x_c_name: x_c,
        xp,
        xc,
        y: d.outcome(),
        aggregate: cfg.model.fit(xp, d.outcome())?,
        spec,
    };
    Ok(assemble(&input, &groups, cfg))
}

/// Evaluates every ordered pair of non-outcome variables.
///
/// `m` variables give `m (m - 1)` evaluations. Pairs that fail (for example a
/// log-width override on a column with zeros) are reported with `error` set.
pub fn scan_pairs(d: &Dataset, cfg: &ScanConfig) -> Result<Vec<PairEvaluation>> {
    let vars = d.variables();
    Ok(ScanPlan::new(d, cfg, &vars)?.run())
}

/// Association and outcome-variation measures for the pair, using the
/// automatic binning of `x_c`.
pub fn diagnostics(d: &Dataset, x_p: &str, x_c: &str) -> Result<ParadoxDiagnostics> {
    let xc = d.variable(x_c)?;
    diagnostics_with_spec(d, x_p, x_c, &auto_bin_spec_for(xc))
}

pub fn diagnostics_with_spec(d: &Dataset, x_p: &str, x_c: &str, spec: &BinSpec) -> Result<ParadoxDiagnostics> {
    let xp = d.variable(x_p)?;
    let xc = d.variable(x_c)?;
    if x_p == x_c || xp == xc {
        return Err(Error::IdenticalVariables(x_p.to_string()));
    }
    let groups = crate::binning::disaggregate(d, x_c, spec)?;
    Ok(diagnostics_from_groups(xp, xc, d.outcome(), &groups))
}

/// Largest gap between `E[Y | x_p]` and `Σ_c E[Y | x_p, x_c = c] P(x_c = c | x_p)`
/// over the distinct values of `x_p`, computed from empirical frequencies.
pub fn mixture_identity_check(d: &Dataset, x_p: &str, x_c: &str) -> Result<f64> {
    let xp = d.variable(x_p)?;
    let xc = d.variable(x_c)?;
    let distinct = distinct_count(xp);
    if distinct > MIXTURE_DISTINCT_LIMIT {
        return Err(Error::TooManyDistinctValues {
            column: x_p.to_string(),
            count: distinct,
            limit: MIXTURE_DISTINCT_LIMIT,
        });
    }
    let y = d.outcome();
    // x_p key -> (outcome sum, count); (x_p, x_c) key -> (outcome sum, count)
    let mut marginal: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    let mut cells: BTreeMap<(i64, i64), (f64, usize)> = BTreeMap::new();
    for i in 0..y.len() {
        let kp = order_key(xp[i]);
        let m = marginal.entry(kp).or_insert((0.0, 0));
        m.0 += y[i];
        m.1 += 1;
        let c = cells.entry((kp, order_key(xc[i]))).or_insert((0.0, 0));
        c.0 += y[i];
        c.1 += 1;
    }
    let mut worst = 0.0f64;
    for (kp, (sum, count)) in &marginal {
        let lhs = sum / *count as f64;
        let rhs: f64 = cells
            .range((*kp, i64::MIN)..=(*kp, i64::MAX))
            .map(|(_, (s, n))| (s / *n as f64) * (*n as f64 / *count as f64))
            .sum();
        worst = worst.max(libm::fabs(lhs - rhs));
    }
    Ok(worst)
}
