//! Series lookups that fall back to remote commons on a local miss.

use std::time::Duration;

use axum::http::StatusCode;
use bdc_core::{Commons, NodeId};

use crate::config::RemoteEndpoint;
use crate::error::ApiError;
use crate::views::{local_series, SeriesResponse};

/// Query flag that stops the receiving instance from federating further.
pub const LOCAL_ONLY: &str = "local_only";

pub fn remote_origin(name: &str) -> String {
    format!("remote:{name}")
}

pub struct Federator {
    client: reqwest::Client,
    remotes: Vec<RemoteEndpoint>,
}

impl Federator {
    pub fn new(remotes: Vec<RemoteEndpoint>, timeout_ms: u64) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .expect("http client builds with default settings");
        Federator { client, remotes }
    }

    pub fn remotes(&self) -> &[RemoteEndpoint] {
        &self.remotes
    }

    /// Local data wins outright and no remote is contacted. Otherwise remotes
    /// are asked in order and the first non-empty answer is returned, its
    /// points tagged `remote:<name>`. Remote trouble becomes a warning.
    ///
    /// Unknown ids are a 404 only when no remote could be consulted.
    pub async fn series(
        &self,
        commons: &Commons,
        entity: &NodeId,
        variable: &NodeId,
        local_only: bool,
    ) -> Result<SeriesResponse, ApiError> {
        let mut warnings = Vec::new();
        match local_series(commons, entity, variable) {
            Ok(s) if !s.points.is_empty() => return Ok(s),
            Ok(s) if local_only || self.remotes.is_empty() => return Ok(s),
            Err(e) if local_only || self.remotes.is_empty() => return Err(e),
            Ok(_) => {}
            Err(e) => warnings.push(format!("local: {}", e.message)),
        }
        for remote in &self.remotes {
            match self.fetch(remote, entity, variable).await {
                Ok(mut s) if !s.points.is_empty() => {
                    let origin = remote_origin(&remote.name);
                    for p in &mut s.points {
                        p.origin = origin.clone();
                    }
                    s.warnings = warnings;
                    return Ok(s);
                }
                Ok(_) => warnings.push(format!("{}: no points", remote_origin(&remote.name))),
                Err(why) => warnings.push(format!("{}: {why}", remote_origin(&remote.name))),
            }
        }
        Ok(SeriesResponse {
            entity: entity.clone(),
            variable: variable.clone(),
            points: Vec::new(),
            warnings,
        })
    }

    async fn fetch(&self, remote: &RemoteEndpoint, entity: &NodeId, variable: &NodeId) -> Result<SeriesResponse, String> {
        let url = format!("{}/api/observations/series", remote.base_url.trim_end_matches('/'));
        let resp = self
            .client
            .get(&url)
            .query(&[("entity", entity.as_str()), ("variable", variable.as_str()), (LOCAL_ONLY, "true")])
            .send()
            .await
            .map_err(|e| if e.is_timeout() { "timed out".to_string() } else { format!("unreachable ({e})") })?;
        let status = resp.status();
        let body = resp.bytes().await.map_err(|e| format!("reading body: {e}"))?;
        if status == StatusCode::OK {
            let s: SeriesResponse =
                serde_json::from_slice(&body).map_err(|e| format!("protocol error: {e}"))?;
            if &s.entity != entity || &s.variable != variable {
                return Err("protocol error: answer is for a different series".into());
            }
            return Ok(s);
        }
        match serde_json::from_slice::<ApiError>(&body) {
            Ok(e) => Err(format!("{} {}", e.status, e.code)),
            Err(_) => Err(format!("status {status}")),
        }
    }
}
