use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that overrides `bind_address`.
pub const BIND_ENV: &str = "BDC_BIND";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteEndpoint {
    pub name: String,
    pub base_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    #[serde(default = "default_bind")]
    pub bind_address: String,
    /// Store root; relative paths resolve against the config file.
    #[serde(default = "default_store")]
    pub store: PathBuf,
    /// Provenance source names, most preferred first.
    #[serde(default)]
    pub source_preference: Vec<String>,
    #[serde(default = "default_timeout")]
    pub request_timeout_ms: u64,
    /// Consulted in order on a local miss.
    #[serde(default)]
    pub remotes: Vec<RemoteEndpoint>,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_store() -> PathBuf {
    PathBuf::from("store")
}

fn default_timeout() -> u64 {
    2000
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            bind_address: default_bind(),
            store: default_store(),
            source_preference: Vec::new(),
            request_timeout_ms: default_timeout(),
            remotes: Vec::new(),
        }
    }
}

impl ApiConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ApiConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file, resolves the store path against its directory and
    /// applies the `BDC_BIND` override.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config = Self::from_toml(&text)?;
        if config.store.is_relative() {
            if let Some(dir) = path.parent() {
                config.store = dir.join(&config.store);
            }
        }
        if let Ok(bind) = std::env::var(BIND_ENV) {
            if !bind.trim().is_empty() {
                config.bind_address = bind.trim().to_string();
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.request_timeout_ms == 0 {
            return Err(ConfigError::Invalid("request_timeout_ms must be positive".into()));
        }
        let mut names = BTreeSet::new();
        for r in &self.remotes {
            if r.name.trim().is_empty() {
                return Err(ConfigError::Invalid("remote name is empty".into()));
            }
            if !names.insert(r.name.as_str()) {
                return Err(ConfigError::Invalid(format!("remote `{}` listed twice", r.name)));
            }
            if !(r.base_url.starts_with("http://") || r.base_url.starts_with("https://")) {
                return Err(ConfigError::Invalid(format!("remote `{}` needs an http(s) base_url", r.name)));
            }
        }
        Ok(())
    }
}
