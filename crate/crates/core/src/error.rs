use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: empty input")]
    EmptyInput,

    #[error("parse error: row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("parse error: invalid token {token:?}")]
    BadToken { token: String },

    #[error("parse error: {0}")]
    Malformed(String),

    #[error("{what}: n = {n} exceeds the size guard {max}")]
    SizeGuard {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("zero pivot in round {round}: {detail}")]
    ZeroPivot { round: usize, detail: String },

    #[error("site {site} is already occupied in state {state}")]
    OccupiedSite { state: String, site: usize },

    #[error("level mismatch: expected level {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is outside 0..={max}")]
    Range {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("the permanent (or determinant) vanishes; spectral construction is undefined")]
    ZeroPermanent,

    #[error("eigenpair k = {k} has relative residual {residual:e} above tolerance {tol:e}")]
    SpectralMismatch { k: usize, residual: f64, tol: f64 },

    #[error("block structure violated: {0}")]
    BlockStructure(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),
}

impl Error {
    /// Errors that point at bad input rather than a failed verification.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::SpectralMismatch { .. } | Error::BlockStructure(_) | Error::Consistency(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput
            | Error::RaggedRow { .. }
            | Error::BadToken { .. }
            | Error::Malformed(_) => "ParseError",
            Error::SizeGuard { .. } => "SizeGuardError",
            Error::ZeroPivot { .. } => "ZeroPivotError",
            Error::OccupiedSite { .. } => "OccupiedSiteError",
            Error::LevelMismatch { .. } => "LevelMismatchError",
            Error::Range { .. } => "RangeError",
            Error::ZeroPermanent => "ZeroPermanentError",
            Error::SpectralMismatch { .. } => "SpectralMismatchError",
            Error::BlockStructure(_) => "BlockStructureError",
            Error::Dimension { .. } => "DimensionError",
            Error::Consistency(_) => "ConsistencyError",
            Error::Unsupported(_) => "UnsupportedError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
