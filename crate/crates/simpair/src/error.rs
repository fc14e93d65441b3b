use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("column `{0}` not found in the input header")]
    MissingColumn(String),
    #[error("column `{0}` appears more than once in the input header")]
    DuplicateHeader(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] simpair_core::Error),
    #[error("cannot encode report: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for invalid flags or parameters, 3 for data errors.
    pub fn exit_code(&self) -> u8 {
        use simpair_core::Error as E;
        match self {
            Error::Usage(_) => 2,
            Error::Data(
                E::InvalidParameter(_)
                | E::IdenticalVariables(_)
                | E::TooFewVariables(_)
                | E::DuplicateColumn(_),
            ) => 2,
            _ => 3,
        }
    }
}
