use std::io;

use thiserror::Error;

use fri_core::goodbox::GoodBoxError;
use fri_core::hitting::SolverError;
use fri_core::io::FormatError;
use fri_core::peierls::PeierlsError;
use fri_core::sampler::SamplerError;
use fri_core::scan::ScanError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Resource(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Resource { .. } => CliError::Resource(e.to_string()),
            SamplerError::Solver(s) => s.into(),
            SamplerError::InvalidParameter { name, .. } => CliError::config(name, e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Resource { .. } => CliError::Resource(e.to_string()),
            SolverError::InvalidTolerance(_) => CliError::config("tol", e.to_string()),
            SolverError::Domain(_) => CliError::config("d", e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::InvalidConfig { key, reason } => CliError::config(format!("scan.{key}"), reason),
            ScanError::Sampler { source, .. } if !matches!(source, SamplerError::Resource { .. }) => source.into(),
            e if e.is_resource() => CliError::Resource(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<GoodBoxError> for CliError {
    fn from(e: GoodBoxError) -> Self {
        match e {
            GoodBoxError::Geometry(what) => CliError::config("goodbox", format!("geometry violates {what}")),
            GoodBoxError::Sampler(s) => s.into(),
            GoodBoxError::Solver(s) => s.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PeierlsError> for CliError {
    fn from(e: PeierlsError) -> Self {
        match e {
            PeierlsError::InvalidParameter { name, .. } => CliError::config(name, e.to_string()),
            PeierlsError::Solver(s) => s.into(),
            PeierlsError::Sampler(s) => s.into(),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(e) => CliError::Io(e),
            e => CliError::config("points", e.to_string()),
        }
    }
}
