use std::path::PathBuf;

/// Errors raised by loading, validation, and audit computation.
///
/// Every variant that originates from user input carries a location
/// (file row/column, JSON path, or attribute/group context).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A value could not be parsed. `location` names the row/column or JSON path.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("disparity intolerance {0} is outside (0, 1]")]
    InvalidTau(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("dataset carries raw scores; binarize it before grouping")]
    NotBinarized,

    #[error("cannot select a reference from an empty group list")]
    NoGroups,

    #[error("reference group `{group}` not found among the groups of attribute `{attribute}`")]
    ReferenceGroupNotFound { attribute: String, group: String },

    #[error("external benchmark has no defined value for metric `{0}`")]
    MissingExternalMetric(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("attribute `{attribute}`: {source}")]
    InAttribute {
        attribute: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_attribute(self, attribute: &str) -> Self {
        Error::InAttribute {
            attribute: attribute.to_owned(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with attribute context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InAttribute { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
