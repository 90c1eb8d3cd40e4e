use cantorlab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// A config or argument problem, located by its field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("unknown preset `{0}` (see `cantorlab preset-list`)")]
    UnknownPreset(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn config(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        LabError::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for config or argument problems, 3 when a
    /// resource cap is hit, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::UnknownPreset(_) => 2,
            LabError::Core(CoreError::ResourceLimit { .. }) => 3,
            LabError::Core(
                CoreError::InvalidBase(_)
                | CoreError::DigitOutOfRange { .. }
                | CoreError::MissingDensityBound
                | CoreError::RegimeUnavailable(_)
                | CoreError::NotStochastic(_)
                | CoreError::NotPrimitive
                | CoreError::AlphabetMismatch { .. }
                | CoreError::InvalidArgument(_),
            ) => 2,
            _ => 1,
        }
    }
}
