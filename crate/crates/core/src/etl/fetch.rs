use chrono::{DateTime, Utc};
use sha2::{Digest, Sha256};

use super::source::{FetchKind, SourceSpec};
use super::EtlError;

/// Source bytes exactly as fetched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawArtifact {
    pub bytes: Vec<u8>,
    pub content_hash: String,
    pub fetched_at: DateTime<Utc>,
    pub source_name: String,
    pub location: String,
}

impl RawArtifact {
    pub fn new(source_name: &str, location: &str, bytes: Vec<u8>) -> Self {
        RawArtifact {
            content_hash: content_hash(&bytes),
            bytes,
            fetched_at: Utc::now(),
            source_name: source_name.to_string(),
            location: location.to_string(),
        }
    }
}

/// Lowercase hex SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn fetch(spec: &SourceSpec) -> Result<RawArtifact, EtlError> {
    let failed = |cause: String| EtlError::FetchFailed {
        source_name: spec.source_name.clone(),
        cause,
    };
    match spec.fetch.kind {
        FetchKind::LocalFile => {
            let path = spec.resolve_location();
            let bytes = std::fs::read(&path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
            Ok(RawArtifact::new(&spec.source_name, &path.display().to_string(), bytes))
        }
        FetchKind::HttpJson | FetchKind::HttpCsv => {
            let bytes = http_get(&spec.fetch.location).map_err(failed)?;
            Ok(RawArtifact::new(&spec.source_name, &spec.fetch.location, bytes))
        }
    }
}

#[cfg(feature = "http")]
fn http_get(url: &str) -> Result<Vec<u8>, String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(std::time::Duration::from_secs(30)))
        .build()
        .into();
    let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
    resp.body_mut()
        .with_config()
        .limit(512 * 1024 * 1024)
        .read_to_vec()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "http"))]
fn http_get(url: &str) -> Result<Vec<u8>, String> {
    Err(format!("{url}: built without http support"))
}
