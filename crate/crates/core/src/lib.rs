//! Automatic detection of Simpson's paradoxes in trends.
//!
//! For an outcome `Y` and an ordered pair of variables `(x_p, x_c)`, the
//! detector fits the trend of `Y` against `x_p` over all rows, then again
//! inside every subgroup obtained by binning `x_c`. A pair is flagged when the
//! sign of the aggregate trend differs from the sign of the unweighted mean of
//! the per-subgroup trend signs.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel scanning live in the companion `simpair` crate.

#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod binning;
pub mod dataset;
pub mod detector;
mod error;
mod math;
pub mod stats;
pub mod synthgen;

pub use binning::{auto_bin_spec, disaggregate, BinSpec, BinStrategy, Subgroup};
pub use dataset::{Dataset, Filtered, SummaryStats, VariableKind, VariableSpec};
pub use detector::{
    diagnostics, diagnostics_with_spec, evaluate_pair, mixture_identity_check, scan_pairs,
    sort_evaluations, BinResult, BinStatus,
    Classification, PairEvaluation, ParadoxDiagnostics, ScanConfig, ScanPlan,
};
pub use error::{Error, Result};
pub use stats::{
    chi_square_survival, fit_linear, fit_logistic, fit_logistic_multivariate,
    likelihood_ratio_test, trend_sign, FitResult, FitStatus, MultiFitResult, OutcomeModel,
    TrendSign,
};
