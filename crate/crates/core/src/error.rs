use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value {value} outside allowed range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("degenerate projection: camera-frame depth {0} is zero")]
    DegenerateProjection(f64),
    #[error("matrix is not a rotation (orthogonality residual {0:e})")]
    NotARotation(f64),
    #[error("degenerate homography fit: design matrix rank {rank} < 8")]
    DegenerateFit { rank: usize },
    #[error("singular homography")]
    SingularHomography,
    #[error("average precision undefined: no ground truth boxes")]
    UndefinedAp,
    #[error("unsupported rig style {given:?}; supported: {supported}")]
    UnsupportedRigStyle { given: String, supported: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
