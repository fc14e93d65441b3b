//! File formats, reports, plot data and the command-line frontend for
//! [`simpair_core`].

pub mod cli;
mod error;
pub mod io;
pub mod plot;
pub mod report;
pub mod scan;

pub use error::{Error, Result};
