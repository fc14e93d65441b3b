use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use simpair_core::{Dataset, VariableKind, VariableSpec};

use crate::{Error, Result};

/// A dataset read from disk together with what loading discarded.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    /// Rows removed for a missing, unparsable or non-finite value in a
    /// declared column.
    pub dropped_rows: usize,
    /// Hex SHA-256 of the file bytes.
    pub content_hash: String,
}

/// Which columns to load when the schema is not given explicitly.
#[derive(Debug, Clone)]
pub struct ColumnSelection<'a> {
    pub outcome: &'a str,
    pub outcome_kind: VariableKind,
    /// `None` selects every header column other than the outcome.
    pub vars: Option<&'a [String]>,
}

impl ColumnSelection<'_> {
    /// Outcome first, then the variables in header (or listed) order. Variables
    /// are loaded as continuous columns.
    pub fn schema(&self, header: &[String]) -> Vec<VariableSpec> {
        let mut schema = vec![VariableSpec::new(self.outcome, self.outcome_kind)];
        let vars: Vec<&str> = match self.vars {
            Some(v) => v.iter().map(String::as_str).collect(),
            None => header
                .iter()
                .map(String::as_str)
                .filter(|h| *h != self.outcome)
                .collect(),
        };
        schema.extend(vars.into_iter().map(|v| VariableSpec::new(v, VariableKind::Continuous)));
        schema
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads the columns named in `schema`; other header columns are ignored.
pub fn load_csv(path: &Path, schema: &[VariableSpec]) -> Result<Loaded> {
    load_with(path, |_| schema.to_vec())
}

/// Loads a CSV, deriving the schema from its header.
pub fn load_csv_selected(path: &Path, selection: &ColumnSelection<'_>) -> Result<Loaded> {
    load_with(path, |header| selection.schema(header))
}

fn load_with(path: &Path, schema_for: impl FnOnce(&[String]) -> Vec<VariableSpec>) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let schema = schema_for(&header);

    let mut indices = Vec::with_capacity(schema.len());
    for spec in &schema {
        let mut hits = header.iter().enumerate().filter(|(_, h)| **h == spec.name);
        let (i, _) = hits.next().ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
        if hits.next().is_some() {
            return Err(Error::DuplicateHeader(spec.name.clone()));
        }
        indices.push(i);
    }

    let mut columns = vec![Vec::new(); schema.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        for (col, &i) in columns.iter_mut().zip(&indices) {
            let value = record.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN);
            col.push(value);
        }
    }
    let filtered = Dataset::from_columns(&schema, columns)?;
    Ok(Loaded {
        dataset: filtered.dataset,
        dropped_rows: filtered.dropped_rows,
        content_hash: content_hash(&bytes),
    })
}

/// Writes every column, header first, in dataset column order.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let names: Vec<&str> = d.column_names().collect();
        let columns: Vec<&[f64]> = names.iter().map(|n| d.column(n)).collect::<Result<_, _>>()?;
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        w.write_record(&names).map_err(csv_err)?;
        for r in 0..d.n_rows() {
            w.write_record(columns.iter().map(|c| format_f64(c[r]))).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    write_file(path, &out)
}

/// Shortest round-trip text, switching to exponent notation for very small or
/// large magnitudes.
pub(crate) fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
