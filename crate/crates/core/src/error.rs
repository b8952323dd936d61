use std::path::PathBuf;

use crate::skeleton::BodyPart;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid pose sequence: {0}")]
    InvalidSequence(String),
    #[error("mean scale bone length {0:e} is too small to normalize")]
    DegenerateScale(f64),
    #[error("sequence has {frames} frames, shorter than the {window}-frame window")]
    TooShort { frames: usize, window: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set contains a single class ({0})")]
    SingleClass(String),
    #[error("expected vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("subject {subject} has no predictions for {part}")]
    MissingPart { subject: String, part: BodyPart },
    #[error("subject {0} has no annotation")]
    MissingAnnotation(String),
    #[error("segment mask is empty")]
    EmptyMask,
    #[error("invalid subject profile: {0}")]
    InvalidProfile(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: joint {joint:?} does not map onto the topology")]
    JointMismatch { path: PathBuf, joint: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    /// Stable machine-readable error class, printed by the CLI.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidTopology(_) => "InvalidTopology",
            Error::InvalidSequence(_) => "InvalidSequence",
            Error::DegenerateScale(_) => "DegenerateScale",
            Error::TooShort { .. } => "TooShort",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyDataset => "EmptyDataset",
            Error::SingleClass(_) => "SingleClass",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TooFewSubjects(_) => "TooFewSubjects",
            Error::EmptyInput => "EmptyInput",
            Error::MissingPart { .. } => "MissingPart",
            Error::MissingAnnotation(_) => "MissingAnnotation",
            Error::EmptyMask => "EmptyMask",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::Parse { .. } => "ParseError",
            Error::Schema { .. } => "SchemaError",
            Error::JointMismatch { .. } => "JointMismatch",
            Error::Io { .. } => "IoError",
            Error::Image { .. } => "ImageError",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
