use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::EtlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IngestStatus {
    Ingested,
    SkippedUnchanged,
    RejectedPrivacy,
    Failed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerCounts {
    pub observations: usize,
    pub unresolved_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestLedgerEntry {
    pub source_name: String,
    pub content_hash: String,
    pub status: IngestStatus,
    pub counts: LedgerCounts,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
    /// Risk report summary for microdata sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<serde_json::Value>,
}

impl IngestLedgerEntry {
    pub fn new(source_name: &str, content_hash: &str, status: IngestStatus) -> Self {
        IngestLedgerEntry {
            source_name: source_name.to_string(),
            content_hash: content_hash.to_string(),
            status,
            counts: LedgerCounts::default(),
            timestamp: Utc::now(),
            cause: None,
            gate: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("ledger entries always serialize")
    }
}

/// Append-only record of ingest attempts, one JSON object per line.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: Vec<IngestLedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Reads the ledger at `path`; a missing file is an empty ledger.
    pub fn open(path: &Path) -> Result<Self, EtlError> {
        let mut entries = Vec::new();
        match File::open(path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(|e| EtlError::Ledger(format!("{}: {e}", path.display())))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry = serde_json::from_str(&line)
                        .map_err(|e| EtlError::Ledger(format!("{} line {}: {e}", path.display(), i + 1)))?;
                    entries.push(entry);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(EtlError::Ledger(format!("{}: {e}", path.display()))),
        }
        Ok(Ledger {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    pub fn entries(&self) -> &[IngestLedgerEntry] {
        &self.entries
    }

    pub fn is_ingested(&self, source_name: &str, content_hash: &str) -> bool {
        self.entries.iter().any(|e| {
            e.status == IngestStatus::Ingested && e.source_name == source_name && e.content_hash == content_hash
        })
    }

    pub fn append(&mut self, entry: IngestLedgerEntry) -> Result<(), EtlError> {
        if entry.status == IngestStatus::Ingested && self.is_ingested(&entry.source_name, &entry.content_hash) {
            return Err(EtlError::Ledger(format!(
                "`{}` with hash {} is already ingested",
                entry.source_name, entry.content_hash
            )));
        }
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| EtlError::Ledger(format!("{}: {e}", path.display())))?;
            writeln!(f, "{}", entry.to_json_line())
                .and_then(|_| f.sync_data())
                .map_err(|e| EtlError::Ledger(format!("{}: {e}", path.display())))?;
        }
        self.entries.push(entry);
        Ok(())
    }
}
