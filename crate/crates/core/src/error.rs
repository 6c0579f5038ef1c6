//! Crate-wide error type.
//!
//! Every failure carries enough context to print a one-line diagnosis, and
//! maps onto one of three coarse classes used for process exit codes:
//! usage errors (1), data errors (2) and numerical failures (3).

use thiserror::Error;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad invocation: unknown flags, invalid parameter values.
    Usage,
    /// Bad or inconsistent input data.
    Data,
    /// Numerical failure during estimation.
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate document id `{id}` (lines {first} and {second})")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },

    #[error("document `{id}` has no tokens after filtering")]
    EmptyDocument { id: String },

    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,

    #[error("time slice {label} contains no documents")]
    EmptySlice { label: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("unknown institution `{0}`")]
    UnknownInstitution(String),

    #[error("document has no in-vocabulary tokens")]
    NoInVocabularyTokens,

    #[error("non-finite ELBO at EM iteration {iteration}")]
    NonFiniteElbo { iteration: usize },

    #[error("cannot score topic: token `{0}` has zero document frequency")]
    ZeroDocumentFrequency(String),

    #[error("series has a gap at bucket {0}; refusing to interpolate")]
    SeriesGap(String),

    #[error("design matrix is rank deficient; collinear columns: {0}")]
    RankDeficient(String),

    #[error("insufficient observations: need at least {needed}, have {have}")]
    InsufficientObservations { needed: usize, have: usize },

    #[error("{0}")]
    Numerical(String),

    #[error("archive format error in {path}: {reason}")]
    ArchiveFormat { path: String, reason: String },

    #[error(
        "artifact provenance mismatch: {consumer} expects input produced by manifest \
         {expected}, but {producer} was produced by manifest {actual} (use --force to override)"
    )]
    ProvenanceMismatch {
        consumer: String,
        producer: String,
        expected: String,
        actual: String,
    },

    #[error("{0}")]
    Config(String),
}

impl Error {
    /// Failure class for exit-code mapping.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => ErrorClass::Usage,
            Error::NonFiniteElbo { .. } | Error::Numerical(_) | Error::RankDeficient(_) => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
