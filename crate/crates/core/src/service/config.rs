use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{AnonKey, ModelConfig};
use crate::policy::PolicyConfig;
use crate::{Error, Result};

/// Service configuration file (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    pub data_dir: PathBuf,
    pub anon_key_hex: String,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub model: ModelConfig,
    /// Directory holding the moderator console bundle, served under /console.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub console_dir: Option<PathBuf>,
}

fn default_port() -> u16 {
    8080
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.anon_key()?;
        self.policy.validate()?;
        self.model.validate()
    }

    pub fn anon_key(&self) -> Result<AnonKey> {
        AnonKey::from_hex(&self.anon_key_hex)
    }

    pub fn log_path(&self) -> PathBuf {
        self.data_dir.join("events.jsonl")
    }
}
