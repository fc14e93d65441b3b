//! Disaggregation of rows into subgroups by one conditioning variable.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{distinct_count, Dataset};
use crate::error::{Error, Result};
use crate::math::order_key;

/// Columns with at most this many distinct values are grouped by value.
pub const AUTO_DISTINCT_LIMIT: usize = 20;
/// `max / min` ratio beyond which a positive column is binned logarithmically.
pub const AUTO_LOG_RATIO: f64 = 1000.0;
pub const DEFAULT_BIN_COUNT: usize = 10;
pub const DEFAULT_MIN_BIN_ROWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BinStrategy {
    DistinctValues,
    EqualWidth,
    EqualFrequency,
    LogWidth,
}

impl BinStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            BinStrategy::DistinctValues => "distinct",
            BinStrategy::EqualWidth => "width",
            BinStrategy::EqualFrequency => "quantile",
            BinStrategy::LogWidth => "log",
        }
    }
}

impl fmt::Display for BinStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BinStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distinct" | "distinct_values" => Ok(BinStrategy::DistinctValues),
            "width" | "equal_width" => Ok(BinStrategy::EqualWidth),
            "quantile" | "equal_frequency" => Ok(BinStrategy::EqualFrequency),
            "log" | "log_width" => Ok(BinStrategy::LogWidth),
            other => Err(Error::InvalidParameter(format!("unknown bin strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BinSpec {
    pub strategy: BinStrategy,
    /// Ignored for [`BinStrategy::DistinctValues`].
    pub bin_count: usize,
    /// Subgroups smaller than this are returned but marked invalid.
    pub min_bin_rows: usize,
}

impl BinSpec {
    pub fn new(strategy: BinStrategy, bin_count: usize) -> Self {
        Self {
            strategy,
            bin_count,
            min_bin_rows: DEFAULT_MIN_BIN_ROWS,
        }
    }

    pub fn with_min_bin_rows(mut self, min_bin_rows: usize) -> Self {
        self.min_bin_rows = min_bin_rows;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategy != BinStrategy::DistinctValues && self.bin_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "{} binning needs at least 2 bins, got {}",
                self.strategy, self.bin_count
            )));
        }
        if self.min_bin_rows == 0 {
            return Err(Error::InvalidParameter("min_bin_rows must be positive".into()));
        }
        Ok(())
    }
}

/// Parses `STRATEGY` or `STRATEGY:K`, e.g. `quantile:10` or `distinct`.
impl FromStr for BinSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, count) = match s.split_once(':') {
            Some((name, k)) => {
                let k = k
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad bin count in `{s}`")))?;
                (name, k)
            }
            None => (s, DEFAULT_BIN_COUNT),
        };
        let spec = BinSpec::new(name.parse()?, count);
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for BinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy {
            BinStrategy::DistinctValues => write!(f, "{}", self.strategy),
            s => write!(f, "{}:{}", s, self.bin_count),
        }
    }
}

/// One cell of a disaggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgroup {
    /// A value (`3`) or an interval (`[1, 2)`; the last bin is closed, `[2, 5]`).
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub upper_closed: bool,
    pub row_indices: Vec<usize>,
    /// `n >= min_bin_rows`.
    pub valid: bool,
}

impl Subgroup {
    pub fn n(&self) -> usize {
        self.row_indices.len()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && (v < self.upper || (self.upper_closed && v <= self.upper))
    }
}

/// Chooses a bin specification from the column's shape.
pub fn auto_bin_spec(d: &Dataset, var: &str) -> Result<BinSpec> {
    let values = d.column(var)?;
    Ok(auto_bin_spec_for(values))
}

pub(crate) fn auto_bin_spec_for(values: &[f64]) -> BinSpec {
    if distinct_count(values) <= AUTO_DISTINCT_LIMIT {
        return BinSpec::new(BinStrategy::DistinctValues, DEFAULT_BIN_COUNT);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min > 0.0 && max / min > AUTO_LOG_RATIO {
        BinSpec::new(BinStrategy::LogWidth, DEFAULT_BIN_COUNT)
    } else {
        BinSpec::new(BinStrategy::EqualFrequency, DEFAULT_BIN_COUNT)
    }
}

/// Partitions the rows of `d` by the values of `var`.
pub fn disaggregate(d: &Dataset, var: &str, spec: &BinSpec) -> Result<Vec<Subgroup>> {
    let values = d.variable(var)?;
    spec.validate()?;
    bin_values(values, spec).map_err(|e| match e {
        Error::NonPositiveLogValues(_) => Error::NonPositiveLogValues(var.to_string()),
        e => e,
    })
}

/// Bins a raw slice; row indices refer to positions in `values`.
pub(crate) fn bin_values(values: &[f64], spec: &BinSpec) -> Result<Vec<Subgroup>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    if spec.strategy == BinStrategy::DistinctValues {
        return Ok(distinct_groups(values, spec.min_bin_rows));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = spec.bin_count;
    let mut edges: Vec<f64> = match spec.strategy {
        BinStrategy::EqualWidth => (0..=k)
            .map(|i| interpolate(min, max, i, k))
            .collect(),
        BinStrategy::LogWidth => {
            if !(min > 0.0) {
                return Err(Error::NonPositiveLogValues(String::new()));
            }
            let (lmin, lmax) = (libm::log10(min), libm::log10(max));
            (0..=k)
                .map(|i| libm::pow(10.0, interpolate(lmin, lmax, i, k)))
                .collect()
        }
        BinStrategy::EqualFrequency => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            let n = sorted.len();
            (0..=k)
                .map(|i| if i == k { sorted[n - 1] } else { sorted[i * n / k] })
                .collect()
        }
        BinStrategy::DistinctValues => unreachable!(),
    };
    // Pin the outer edges to the data range and drop repeated edges.
    let last = edges.len() - 1;
    edges[0] = min;
    edges[last] = max;
    let mut clean: Vec<f64> = Vec::with_capacity(edges.len());
    for e in edges {
        let e = e.clamp(min, max);
        if clean.last().map_or(true, |&prev| e > prev) {
            clean.push(e);
        }
    }
    if clean.len() == 1 {
        // Constant column: a single closed bin.
        clean.push(max);
    }

    let bins = clean.len() - 1;
    let interior = &clean[1..bins];
    let mut members: Vec<Vec<usize>> = (0..bins).map(|_| Vec::new()).collect();
    for (row, &v) in values.iter().enumerate() {
        let b = interior.partition_point(|&e| e <= v);
        members[b].push(row);
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(b, rows)| {
            let (lower, upper) = (clean[b], clean[b + 1]);
            let upper_closed = b + 1 == bins;
            let label = if upper_closed {
                format!("[{lower}, {upper}]")
            } else {
                format!("[{lower}, {upper})")
            };
            Subgroup {
                label,
                lower,
                upper,
                upper_closed,
                valid: rows.len() >= spec.min_bin_rows,
                row_indices: rows,
            }
        })
        .collect())
}

fn interpolate(lo: f64, hi: f64, i: usize, k: usize) -> f64 {
    if i == k {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / k as f64)
    }
}

fn distinct_groups(values: &[f64], min_bin_rows: usize) -> Vec<Subgroup> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps row indices ascending within each value.
    order.sort_by_key(|&r| order_key(values[r]));
    let mut groups: Vec<Subgroup> = Vec::new();
    for r in order {
        let v = values[r] + 0.0;
        match groups.last_mut() {
            Some(g) if order_key(g.lower) == order_key(v) => g.row_indices.push(r),
            _ => groups.push(Subgroup {
                label: format!("{v}"),
                lower: v,
                upper: v,
                upper_closed: true,
                row_indices: alloc::vec![r],
                valid: false,
            }),
        }
    }
    for g in &mut groups {
        g.valid = g.n() >= min_bin_rows;
    }
    groups
}
