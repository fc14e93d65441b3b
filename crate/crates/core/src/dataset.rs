//! Immutable columnar table of numeric variables with one outcome column.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Largest integer magnitude an `f64` stores exactly.
const MAX_EXACT_INT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VariableKind {
    BinaryOutcome,
    ContinuousOutcome,
    Continuous,
    Integer,
    /// Numerically coded levels; every distinct value is one subgroup.
    Categorical,
}

impl VariableKind {
    pub fn is_outcome(self) -> bool {
        matches!(self, VariableKind::BinaryOutcome | VariableKind::ContinuousOutcome)
    }

    fn is_integral(self) -> bool {
        matches!(self, VariableKind::Integer | VariableKind::Categorical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VariableKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SummaryStats {
    pub mean: f64,
    /// Unbiased sample variance (0 for a single row).
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub distinct_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Column {
    name: String,
    kind: VariableKind,
    values: Vec<f64>,
}

/// A validated table. Every column has `n_rows` finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    outcome: usize,
    metadata: Vec<(String, String)>,
}

/// A dataset together with the number of rows removed while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

impl Dataset {
    /// Builds a dataset from raw columns given in schema order.
    ///
    /// Rows holding a non-finite value in any column are dropped (surviving rows
    /// keep their order). Validation of outcome and integer columns happens on
    /// the surviving rows.
    pub fn from_columns(schema: &[VariableSpec], columns: Vec<Vec<f64>>) -> Result<Filtered> {
        if schema.len() != columns.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} columns supplied for a schema of {}",
                columns.len(),
                schema.len()
            )));
        }
        let outcomes: Vec<usize> = schema
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind.is_outcome())
            .map(|(i, _)| i)
            .collect();
        if outcomes.len() != 1 {
            return Err(Error::OutcomeCount(outcomes.len()));
        }
        for (i, spec) in schema.iter().enumerate() {
            if schema[..i].iter().any(|s| s.name == spec.name) {
                return Err(Error::DuplicateColumn(spec.name.clone()));
            }
        }
        let raw_rows = columns.first().map_or(0, Vec::len);
        for (spec, col) in schema.iter().zip(&columns) {
            if col.len() != raw_rows {
                return Err(Error::LengthMismatch {
                    column: spec.name.clone(),
                    expected: raw_rows,
                    found: col.len(),
                });
            }
        }

        let keep: Vec<usize> = (0..raw_rows)
            .filter(|&r| columns.iter().all(|c| c[r].is_finite()))
            .collect();
        let dropped_rows = raw_rows - keep.len();
        if keep.is_empty() {
            return Err(Error::NoRows);
        }

        let mut out = Vec::with_capacity(schema.len());
        for (spec, col) in schema.iter().zip(columns) {
            let values: Vec<f64> = if keep.len() == raw_rows {
                col
            } else {
                keep.iter().map(|&r| col[r]).collect()
            };
            validate_column(spec, &values)?;
            out.push(Column {
                name: spec.name.clone(),
                kind: spec.kind,
                values,
            });
        }
        Ok(Filtered {
            dataset: Dataset {
                columns: out,
                n_rows: keep.len(),
                outcome: outcomes[0],
                metadata: Vec::new(),
            },
            dropped_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn outcome_name(&self) -> &str {
        &self.columns[self.outcome].name
    }

    pub fn outcome_kind(&self) -> VariableKind {
        self.columns[self.outcome].kind
    }

    pub fn outcome(&self) -> &[f64] {
        &self.columns[self.outcome].values
    }

    /// All column names in schema order, outcome included.
    pub fn column_names(&self) -> impl Iterator<Item = &str> + '_ {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Non-outcome column names in schema order.
    pub fn variables(&self) -> Vec<String> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.outcome)
            .map(|(_, c)| c.name.clone())
            .collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.find(name).map(|c| c.values.as_slice())
    }

    pub fn kind(&self, name: &str) -> Result<VariableKind> {
        self.find(name).map(|c| c.kind)
    }

    /// Like [`Dataset::column`] but rejects the outcome column.
    pub fn variable(&self, name: &str) -> Result<&[f64]> {
        if name == self.outcome_name() {
            return Err(Error::OutcomeNotAllowed(name.to_string()));
        }
        self.column(name)
    }

    fn find(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        let key = key.into();
        self.metadata.retain(|(k, _)| *k != key);
        self.metadata.push((key, value.into()));
        self
    }

    /// A new dataset holding only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::InvalidInput(alloc::format!(
                "row index {bad} out of range for {} rows",
                self.n_rows
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind,
                values: rows.iter().map(|&r| c.values[r]).collect(),
            })
            .collect();
        Ok(Dataset {
            columns,
            n_rows: rows.len(),
            outcome: self.outcome,
            metadata: self.metadata.clone(),
        })
    }

    /// Adds `numerator / denominator` as a new continuous column.
    ///
    /// Rows with a zero denominator are dropped and counted.
    pub fn derive_ratio(&self, numerator: &str, denominator: &str, new_name: &str) -> Result<Filtered> {
        let num = self.variable(numerator)?;
        let den = self.variable(denominator)?;
        if self.has_column(new_name) {
            return Err(Error::DuplicateColumn(new_name.to_string()));
        }
        let ratio: Vec<f64> = num
            .iter()
            .zip(den)
            .map(|(n, d)| if *d == 0.0 { f64::NAN } else { n / d })
            .collect();
        if den.iter().all(|d| *d == 0.0) {
            return Err(Error::AllDenominatorsZero(denominator.to_string()));
        }

        let mut schema: Vec<VariableSpec> = self
            .columns
            .iter()
            .map(|c| VariableSpec::new(c.name.clone(), c.kind))
            .collect();
        schema.push(VariableSpec::new(new_name, VariableKind::Continuous));
        let mut columns: Vec<Vec<f64>> = self.columns.iter().map(|c| c.values.clone()).collect();
        columns.push(ratio);
        let mut filtered = Dataset::from_columns(&schema, columns)?;
        filtered.dataset.metadata = self.metadata.clone();
        Ok(filtered)
    }

    pub fn column_stats(&self, name: &str) -> Result<SummaryStats> {
        let values = self.column(name)?;
        let n = values.len();
        let mean = math::mean(values);
        let variance = if n > 1 {
            math::sum_sq_dev(values) / (n - 1) as f64
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(SummaryStats {
            // Rounding can push the mean of a near-constant column a hair outside [min, max].
            mean: mean.clamp(min, max),
            variance,
            min,
            max,
            distinct_count: distinct_count(values),
        })
    }
}

pub(crate) fn distinct_count(values: &[f64]) -> usize {
    let mut keys: Vec<i64> = values.iter().map(|v| math::order_key(*v)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn validate_column(spec: &VariableSpec, values: &[f64]) -> Result<()> {
    if spec.kind == VariableKind::BinaryOutcome {
        if let Some(&v) = values.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::OutcomeNotBinary {
                column: spec.name.clone(),
                value: v,
            });
        }
    }
    if spec.kind.is_integral() {
        if let Some(&v) = values
            .iter()
            .find(|&&v| libm::trunc(v) != v || libm::fabs(v) > MAX_EXACT_INT)
        {
            return Err(Error::NotInteger {
                column: spec.name.clone(),
                value: v,
            });
        }
    }
    Ok(())
}
