use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate resonance cubic at detuning {detuning}: {reason}")]
    DegenerateCubic { detuning: f64, reason: &'static str },

    #[error("eigenvalue solver did not converge")]
    EigenSolver,

    #[error("integration step size underflow at t = {time:.6e} s")]
    StepUnderflow { time: f64 },

    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCubic { .. } | Error::EigenSolver | Error::StepUnderflow { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Syntax(String),

    #[error("unknown section [{0}]")]
    UnknownSection(String),

    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },

    #[error("key `{key}` in [{section}] is dimensional; write it as `{expected}`")]
    UnitSuffix {
        section: String,
        key: String,
        expected: String,
    },

    #[error("key `{key}` in [{section}]: {reason}")]
    BadValue {
        section: String,
        key: String,
        reason: String,
    },

    #[error("`{first}` and `{second}` are mutually exclusive; supply only one")]
    Conflict {
        first: &'static str,
        second: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),
}
