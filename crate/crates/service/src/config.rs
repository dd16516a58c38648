use std::net::SocketAddr;
use std::path::PathBuf;

use alterfactual_study::StudyConfig;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOKEN_ENV: &str = "ALTERFACTUAL_ADMIN_TOKEN";
/// File name of the event log inside the data directory.
pub const LOG_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Study config file. The built-in document study is used when absent.
    #[serde(default)]
    pub study_config: Option<PathBuf>,
    /// Seed of the built-in study.
    #[serde(default)]
    pub seed: u64,
    pub data_dir: PathBuf,
    /// Environment variable holding the admin token.
    #[serde(default = "default_token_env")]
    pub admin_token_env: String,
    /// Allowed browser origins. Empty disables CORS headers.
    #[serde(default)]
    pub cors_origins: Vec<String>,
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.into()
}

impl ServiceConfig {
    pub fn new(bind: SocketAddr, data_dir: PathBuf) -> Self {
        ServiceConfig {
            bind,
            study_config: None,
            seed: 0,
            data_dir,
            admin_token_env: default_token_env(),
            cors_origins: Vec::new(),
        }
    }

    /// Loads and validates the study. The error text is reported to clients
    /// with a 503, so the service can still start and serve existing logs.
    pub fn load_study(&self) -> Result<StudyConfig, String> {
        let config = match &self.study_config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                StudyConfig::parse(&text).map_err(|e| e.to_string())?
            }
            None => StudyConfig::document(self.seed).map_err(|e| e.to_string())?,
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    /// The admin token, if the variable is set and non-empty.
    pub fn admin_token(&self) -> Option<String> {
        std::env::var(&self.admin_token_env).ok().filter(|t| !t.trim().is_empty())
    }
}
