use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage used to annotate errors raised inside [`crate::flow::run_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Split,
    Route,
    Ranking,
    ModelSelection,
    DimensionalitySweep,
    FinalScoring,
    Hierarchy,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Split => "split",
            Stage::Route => "route",
            Stage::Ranking => "ranking",
            Stage::ModelSelection => "model selection",
            Stage::DimensionalitySweep => "dimensionality sweep",
            Stage::FinalScoring => "final scoring",
            Stage::Hierarchy => "hierarchy",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Serialization(#[from] serde_json::Error),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used by the CLI to map failures to exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Stage { stage, source } => match (stage, source.class()) {
                (Stage::Report, ErrorClass::Data) => ErrorClass::Internal,
                (_, class) => class,
            },
            Error::Io { .. } | Error::Parse { .. } | Error::InvalidData(_) => ErrorClass::Data,
            Error::SchemaMismatch(_) => ErrorClass::Data,
            Error::InvalidParameter(_) => ErrorClass::Usage,
            Error::Numerical(_) | Error::Serialization(_) => ErrorClass::Internal,
        }
    }
}

pub trait ResultExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
