use std::path::PathBuf;

use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum TourError {
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate point set: {0}")]
    DegeneratePointSet(String),
    #[error("too few keyframes: need at least 2, got {0}")]
    TooFewKeyframes(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rank deficient: requested {requested} components but only {available} are nonzero")]
    RankDeficient { requested: usize, available: usize },
    #[error("too many points for spectral embedding: {n} > {max}")]
    TooManyPoints { n: usize, max: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no residual axis: residual covariance is numerically zero")]
    NoAxis,
    #[error("axis not orthogonal to the view plane (max |dot| = {0:.3e})")]
    AxisNotOrthogonal(f64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("column {0} is not categorical")]
    NotCategorical(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("truncated file")]
    TruncatedFile,
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("orthonormality violation in keyframe {index}: drift {drift:.3e}")]
    OrthonormalityViolation { index: usize, drift: f64 },
    #[error("polygon needs at least 3 vertices, got {0}")]
    BadPolygon(usize),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("failed to bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error on {path}: {source}")]
    FileIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TourError> = std::result::Result<T, E>;

impl TourError {
    /// Stable snake_case identifier used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            TourError::DegenerateBasis(_) => "degenerate_basis",
            TourError::DimensionMismatch { .. } => "dimension_mismatch",
            TourError::DegeneratePointSet(_) => "degenerate_point_set",
            TourError::TooFewKeyframes(_) => "too_few_keyframes",
            TourError::InvalidArgument(_) => "invalid_argument",
            TourError::RankDeficient { .. } => "rank_deficient",
            TourError::TooManyPoints { .. } => "too_many_points",
            TourError::LengthMismatch(_) => "length_mismatch",
            TourError::NoAxis => "no_axis",
            TourError::AxisNotOrthogonal(_) => "axis_not_orthogonal",
            TourError::Parse { .. } => "parse_error",
            TourError::MissingColumn(_) => "missing_column",
            TourError::NotCategorical(_) => "not_categorical",
            TourError::EmptyDataset => "empty_dataset",
            TourError::BadMagic => "bad_magic",
            TourError::TruncatedFile => "truncated_file",
            TourError::VersionUnsupported(_) => "version_unsupported",
            TourError::Schema(_) => "schema_error",
            TourError::OrthonormalityViolation { .. } => "orthonormality_violation",
            TourError::BadPolygon(_) => "bad_polygon",
            TourError::ProtocolViolation(_) => "protocol_violation",
            TourError::BindFailure { .. } => "bind_failure",
            TourError::FileIo { .. } | TourError::Io(_) => "io_error",
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TourError::FileIo {
            path: path.into(),
            source,
        }
    }
}
