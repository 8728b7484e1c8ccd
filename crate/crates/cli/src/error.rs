use std::io;

use ktree_core::constants::ConstantsError;
use ktree_core::ktrees::KTreeError;
use ktree_core::oracle::OracleError;
use ktree_core::sampler::SamplerError;
use ktree_core::GfError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Series(#[from] GfError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tree(#[from] KTreeError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("selfcheck failed: {0} check(s)")]
    SelfCheck(usize),
}

impl CliError {
    pub fn io(path: &str, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Series(GfError::Integrality { .. }) | CliError::Series(GfError::Negative { .. }) => "integrality",
            CliError::Series(_) => "series",
            CliError::Constants(_) => "constants",
            CliError::Sampler(_) => "sampler",
            CliError::Oracle(_) => "oracle",
            CliError::Tree(_) => "ktree",
            CliError::Io { .. } => "io",
            CliError::SelfCheck(_) => "selfcheck",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "integrality" => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string() })
    }
}
