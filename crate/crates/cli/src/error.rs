use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("repetition {repetition} (seed {seed}) aborted: {source}")]
    Numerical { repetition: usize, seed: u64, source: branchmc_core::Error },
    #[error(transparent)]
    Core(#[from] branchmc_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn is_config_error(e: &branchmc_core::Error) -> bool {
    use branchmc_core::Error as E;
    matches!(e, E::InvalidParams(_) | E::InvalidConfig(_) | E::OddSubsteps(_) | E::NonPositiveStep(_))
}

impl HarnessError {
    /// 2 for configuration problems, 3 for numerical aborts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } => 2,
            HarnessError::Numerical { source, .. } | HarnessError::Core(source) => {
                if is_config_error(source) {
                    2
                } else {
                    3
                }
            }
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
