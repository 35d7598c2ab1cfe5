use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed PFM: {0}")]
    MalformedPfm(String),

    #[error("PFM payload holds {actual} bytes, header expects {expected}")]
    PfmSizeMismatch { expected: usize, actual: usize },

    #[error("colour PFM (\"PF\") images are not supported")]
    ColorPfm,

    #[error("calibration is missing key `{0}`")]
    MissingCalibKey(&'static str),

    #[error("calibration key `{key}` has unparsable value `{value}`")]
    BadCalibValue { key: String, value: String },

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("grid shape {width}x{height} does not match {len} samples")]
    ShapeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("grid dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("no pixel is valid in both inputs")]
    EmptyOverlap,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no samples left to compute {0}")]
    NoSamples(&'static str),

    #[error("histogram has no in-range samples")]
    EmptyHistogram,

    #[error("K = {value} lies outside the histogram range [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },

    #[error("scene file line {line}: {message}")]
    SceneSyntax { line: usize, message: String },

    #[error("unknown scene `{0}`")]
    UnknownScene(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
