use std::path::Path;

use simpair_core::{disaggregate, Dataset, FitResult, OutcomeModel};

use crate::io::{format_f64, write_file};
use crate::report::ScanReport;
use crate::{Error, Result};

pub const FITTED_POINTS: usize = 50;
/// Above this many distinct `x_p` values a curve's empirical means are taken
/// per decile instead of per value.
pub const EMPIRICAL_DISTINCT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveType {
    Aggregate,
    Bin,
}

impl CurveType {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveType::Aggregate => "aggregate",
            CurveType::Bin => "bin",
        }
    }
}

/// A point on the fitted grid has no empirical mean; an empirical point
/// carries the fitted value at its own `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub fitted: f64,
    pub empirical: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub pair_id: String,
    pub x_p: String,
    pub x_c: String,
    pub curve_type: CurveType,
    /// Empty for the aggregate curve.
    pub bin_label: String,
    /// Sorted by `x`.
    pub points: Vec<PlotPoint>,
}

pub fn pair_id(x_p: &str, x_c: &str) -> String {
    format!("{x_p}|{x_c}")
}

/// Aggregate and per-bin curves for every evaluation in the report. Bins
/// without a fit are skipped.
pub fn plot_series(report: &ScanReport, d: &Dataset) -> Result<Vec<PlotSeries>> {
    let model = report.config.model;
    let y = d.outcome();
    let mut out = Vec::new();
    for e in &report.all_pairs {
        let xp = d.column(&e.x_p)?;
        let id = pair_id(&e.x_p, &e.x_c);
        let all: Vec<usize> = (0..d.n_rows()).collect();
        out.push(PlotSeries {
            pair_id: id.clone(),
            x_p: e.x_p.clone(),
            x_c: e.x_c.clone(),
            curve_type: CurveType::Aggregate,
            bin_label: String::new(),
            points: curve(model, &e.aggregate_fit, xp, y, &all),
        });
        if e.error.is_some() {
            continue;
        }
        let groups = disaggregate(d, &e.x_c, &e.bin_spec)?;
        if groups.len() != e.bin_results.len() {
            return Err(Error::Usage(format!(
                "report lists {} bins for {id} but the data yields {}",
                e.bin_results.len(),
                groups.len()
            )));
        }
        for (g, b) in groups.iter().zip(&e.bin_results) {
            let Some(fit) = &b.fit else { continue };
            out.push(PlotSeries {
                pair_id: id.clone(),
                x_p: e.x_p.clone(),
                x_c: e.x_c.clone(),
                curve_type: CurveType::Bin,
                bin_label: b.label.clone(),
                points: curve(model, fit, xp, y, &g.row_indices),
            });
        }
    }
    Ok(out)
}

fn curve(model: OutcomeModel, fit: &FitResult, xp: &[f64], y: &[f64], rows: &[usize]) -> Vec<PlotPoint> {
    let mut pts: Vec<(f64, f64)> = rows.iter().map(|&r| (xp[r], y[r])).collect();
    if pts.is_empty() {
        return Vec::new();
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let predict = |x: f64| model.predict(fit.alpha, fit.beta, x);
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);

    let mut points: Vec<PlotPoint> = if lo == hi {
        vec![PlotPoint {
            x: lo,
            fitted: predict(lo),
            empirical: None,
            n: None,
        }]
    } else {
        (0..FITTED_POINTS)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (FITTED_POINTS - 1) as f64;
                PlotPoint {
                    x,
                    fitted: predict(x),
                    empirical: None,
                    n: None,
                }
            })
            .collect()
    };

    for (x, mean, n) in empirical_means(&pts) {
        points.push(PlotPoint {
            x,
            fitted: predict(x),
            empirical: Some(mean),
            n: Some(n),
        });
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points
}

/// `(x, mean outcome, count)` per distinct `x`, or per decile of the sorted
/// points with `x` the decile's mean.
fn empirical_means(sorted: &[(f64, f64)]) -> Vec<(f64, f64, usize)> {
    let runs: Vec<&[(f64, f64)]> = sorted.chunk_by(|a, b| a.0 == b.0).collect();
    let groups: Vec<&[(f64, f64)]> = if runs.len() <= EMPIRICAL_DISTINCT_LIMIT {
        runs
    } else {
        let n = sorted.len();
        (0..10)
            .map(|i| &sorted[i * n / 10..(i + 1) * n / 10])
            .filter(|g| !g.is_empty())
            .collect()
    };
    groups
        .into_iter()
        .map(|g| {
            let n = g.len();
            let x = g.iter().map(|p| p.0).sum::<f64>() / n as f64;
            let mean = g.iter().map(|p| p.1).sum::<f64>() / n as f64;
            (x, mean, n)
        })
        .collect()
}

pub fn plot_csv(series: &[PlotSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| Error::Csv {
        path: "<plot data>".into(),
        source,
    };
    w.write_record(["pair_id", "x_p", "x_c", "curve_type", "bin_label", "x", "fitted", "empirical", "n"])
        .map_err(csv_err)?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.pair_id.as_str(),
                &s.x_p,
                &s.x_c,
                s.curve_type.as_str(),
                &s.bin_label,
                &format_f64(p.x),
                &format_f64(p.fitted),
                &p.empirical.map(format_f64).unwrap_or_default(),
                &p.n.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes the curves of every evaluation in `report` as one CSV. `d` must be
/// the dataset the report was computed from.
pub fn emit_plot_data(report: &ScanReport, d: &Dataset, path: &Path) -> Result<()> {
    write_file(path, plot_csv(&plot_series(report, d)?)?.as_bytes())
}
