use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{scenario}: {source}")]
    Numerical {
        scenario: String,
        #[source]
        source: engres_core::Error,
    },
    #[error("{scenario}: {source}")]
    Regime {
        scenario: String,
        #[source]
        source: engres_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Wraps a core error, routing regime violations to their own kind.
    pub fn from_core(scenario: impl Into<String>, source: engres_core::Error) -> Self {
        let scenario = scenario.into();
        match source {
            engres_core::Error::Regime(_) => HarnessError::Regime { scenario, source },
            source => HarnessError::Numerical { scenario, source },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 numerical, 4 regime. IO failures count as numerical
    /// failures of the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Numerical { .. } | HarnessError::Io { .. } => 3,
            HarnessError::Regime { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::Numerical { .. } => "numerical",
            HarnessError::Regime { .. } => "regime",
            HarnessError::Io { .. } => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            path: Option<&'a str>,
        }
        let path = match self {
            HarnessError::Config { path, .. } => Some(path.as_str()),
            _ => None,
        };
        serde_json::to_value(Report {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            path,
        })
        .expect("error report serializes")
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
