use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("malformed record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{key}` expects {expected} values, found {found}")]
    Arity {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    LineParse { line: usize, reason: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("scan has {rows} scan lines, sensor has only {max}")]
    RowOverflow { rows: usize, max: usize },
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("point lies behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("no valid depth pixel to project")]
    EmptyProjection,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unmapped class values: {}", .0.join(", "))]
    UnmappedClass(Vec<String>),
    #[error("degenerate pose: {0}")]
    DegeneratePose(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("covariance is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("no valid cells to compare")]
    EmptyValidMask,
    #[error("frame {id}: {source}")]
    Frame {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a frame id to an error raised while processing that frame.
    pub fn in_frame(self, id: impl Into<String>) -> Self {
        Error::Frame {
            id: id.into(),
            source: Box::new(self),
        }
    }
}
