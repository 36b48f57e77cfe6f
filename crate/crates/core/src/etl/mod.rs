//! Fetch, parse and normalize declared sources into observations.

mod fetch;
mod ledger;
mod normalize;
mod resolve;
mod source;
mod table;

use thiserror::Error;

use crate::kg::{NodeId, PlaceLevel};

pub use fetch::{content_hash, fetch, RawArtifact};
pub use ledger::{IngestLedgerEntry, IngestStatus, Ledger, LedgerCounts};
pub use normalize::{aggregate, normalize, parse_date, parse_value, RejectReason, RejectedRow};
pub use resolve::resolve_place_code;
pub use source::{
    Aggregation, DataKind, DatePrecision, EntityField, FetchKind, FetchSpec, FieldMapping, PrivacySettings,
    SourceSpec, TableDialect, TableFormat,
};
pub use table::{parse, GenericTable, ParseReject};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EtlError {
    #[error("fetching `{source_name}` failed: {cause}")]
    FetchFailed { source_name: String, cause: String },
    #[error("parse error at line {line}, offset {offset}: {message}")]
    Parse { line: u64, offset: u64, message: String },
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("no {level} with code `{code}`")]
    UnknownCode { code: String, level: PlaceLevel },
    #[error("code `{code}` matches several places: {}", join(candidates))]
    AmbiguousCode { code: String, candidates: Vec<NodeId> },
    #[error("invalid source spec: {0}")]
    InvalidSpec(String),
    #[error("ledger: {0}")]
    Ledger(String),
}

fn join(ids: &[NodeId]) -> String {
    ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
}

/// Provenance id for an artifact: source name plus the first 12 hash digits.
pub fn provenance_id(source_name: &str, content_hash: &str) -> String {
    let short = content_hash.get(..12).unwrap_or(content_hash);
    format!("{source_name}@{short}")
}
