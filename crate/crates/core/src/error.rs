use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index out of bounds: {index:?} not within {dims:?}")]
    IndexOutOfBounds { index: [usize; 3], dims: [usize; 3] },

    #[error("non-finite voxel field: {0}")]
    NonFiniteVoxel(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame has no labeling")]
    MissingLabeling,

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid geometry mismatch: {0}")]
    GridMismatch(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("volume magic mismatch (expected SLTV1)")]
    BadMagic,

    #[error("truncated volume payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("volume dimensions overflow: {0:?}")]
    DimsOverflow([u32; 3]),

    #[error("unknown object name {0:?} with no id assignment")]
    UnknownObject(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Short stable identifier, used by the CLI for machine-parsable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfBounds { .. } => "index_out_of_bounds",
            Error::NonFiniteVoxel(_) => "non_finite_voxel",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::MissingLabeling => "missing_labeling",
            Error::Frame { source, .. } => source.kind(),
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Format { .. } => "format",
            Error::Parse { .. } => "parse",
            Error::BadMagic => "bad_magic",
            Error::TruncatedPayload { .. } => "truncated_payload",
            Error::DimsOverflow(_) => "dims_overflow",
            Error::UnknownObject(_) => "unknown_object",
            Error::Io { .. } => "io",
        }
    }
}
