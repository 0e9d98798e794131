use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("bandwidth {0} is not in the candidate grid")]
    NotInGrid(f64),

    #[error("bandwidth grid is empty")]
    EmptyGrid,

    #[error("{what} = {value} lies outside {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{0} sample is empty")]
    EmptySample(&'static str),

    #[error("kernel check failed: {0}")]
    Kernel(String),

    #[error("model check failed: {0}")]
    Model(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("replication {rep} (seed {seed}): {source}")]
    Replication {
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("nothing to export")]
    EmptyTable,
}

impl Error {
    /// True for errors caused by bad user input rather than by the
    /// environment (I/O) or a failed numerical step.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Csv { .. } => false,
            Error::Replication { source, .. } => source.is_validation(),
            _ => true,
        }
    }

    pub(crate) fn out_of_domain(what: &'static str, value: f64, domain: &'static str) -> Self {
        Error::OutOfDomain {
            what,
            value,
            domain,
        }
    }

    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
