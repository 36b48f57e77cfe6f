//! A knowledge graph, observation store and ingest ledger under one root.
//!
//! On-disk layout:
//!
//! ```text
//! <root>/nodes/nodes.txt                  one node id per line
//! <root>/triples/triples.jsonl            one triple per line
//! <root>/observations/variables.jsonl
//! <root>/observations/provenance.jsonl
//! <root>/observations/observations.jsonl
//! <root>/ledger                           ingest ledger, append-only
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::etl::{
    self, aggregate, normalize, provenance_id, DataKind, EtlError, IngestLedgerEntry, IngestStatus, GenericTable, Ledger, RejectedRow,
    SourceSpec,
};
use crate::kg::{KgError, KnowledgeGraph, NodeId};
use crate::privacy::Decision;
use crate::stat_store::{Provenance, StatError, StatStore, StatisticalVariable};

pub const VARIABLE_TYPE: &str = "StatisticalVariable";

#[derive(Debug, Error)]
pub enum CommonsError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Etl(#[from] EtlError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CommonsError {
    CommonsError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Commons {
    pub graph: KnowledgeGraph,
    pub stats: StatStore,
    ledger: Ledger,
    root: Option<PathBuf>,
}

impl Commons {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the store at `root`, creating an empty one if needed.
    pub fn open(root: &Path) -> Result<Self, CommonsError> {
        for dir in ["nodes", "triples", "observations"] {
            fs::create_dir_all(root.join(dir)).map_err(|e| io_err(&root.join(dir), e))?;
        }
        let mut graph = KnowledgeGraph::new();
        let nodes_path = root.join("nodes/nodes.txt");
        if nodes_path.exists() {
            let text = fs::read_to_string(&nodes_path).map_err(|e| io_err(&nodes_path, e))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
                let id = NodeId::new(line).map_err(|e| CommonsError::Corrupt {
                    path: nodes_path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                graph.insert_bare_node(id);
            }
        }
        for t in read_jsonl(&root.join("triples/triples.jsonl"))? {
            graph.insert_triple(t)?;
        }
        let mut stats = StatStore::new();
        for v in read_jsonl(&root.join("observations/variables.jsonl"))? {
            stats.register_variable(v)?;
        }
        for p in read_jsonl(&root.join("observations/provenance.jsonl"))? {
            stats.register_provenance(p);
        }
        for o in read_jsonl(&root.join("observations/observations.jsonl"))? {
            stats.put_observation(&graph, o)?;
        }
        Ok(Commons {
            graph,
            stats,
            ledger: Ledger::open(&root.join("ledger"))?,
            root: Some(root.to_path_buf()),
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Writes graph and observations to disk. A no-op for in-memory stores.
    pub fn save(&self) -> Result<(), CommonsError> {
        let Some(root) = &self.root else {
            return Ok(());
        };
        let mut nodes = String::new();
        for id in self.graph.nodes() {
            nodes.push_str(id.as_str());
            nodes.push('\n');
        }
        write_atomic(&root.join("nodes/nodes.txt"), nodes.as_bytes())?;
        write_jsonl(&root.join("triples/triples.jsonl"), self.graph.all_triples())?;
        write_jsonl(&root.join("observations/variables.jsonl"), self.stats.variables())?;
        write_jsonl(&root.join("observations/provenance.jsonl"), self.stats.provenances())?;
        write_jsonl(&root.join("observations/observations.jsonl"), self.stats.observations())?;
        Ok(())
    }

    /// Loads a place registry CSV into the graph and persists it.
    pub fn import_registry<R: std::io::Read>(&mut self, reader: R) -> Result<usize, CommonsError> {
        let mut graph = self.graph.clone();
        let n = graph.load_registry(reader)?;
        self.graph = graph;
        self.save()?;
        Ok(n)
    }

    /// Registers a variable in the store and as a graph node.
    pub fn register_variable(&mut self, v: StatisticalVariable) -> Result<(), CommonsError> {
        register_variable(&mut self.graph, &mut self.stats, v)?;
        Ok(())
    }

    /// Fetches, checks and loads one source, appending the outcome to the
    /// ledger. Source problems are reported through the entry's status;
    /// `Err` means the store or ledger could not be written.
    pub fn ingest(&mut self, spec: &SourceSpec) -> Result<IngestLedgerEntry, CommonsError> {
        let entry = self.run_ingest(spec);
        self.ledger.append(entry.clone())?;
        Ok(entry)
    }

    fn run_ingest(&mut self, spec: &SourceSpec) -> IngestLedgerEntry {
        let failed = |hash: &str, e: &dyn std::fmt::Display| {
            let mut entry = IngestLedgerEntry::new(&spec.source_name, hash, IngestStatus::Failed);
            entry.cause = Some(e.to_string());
            entry
        };
        if let Err(e) = spec.validate() {
            return failed("", &e);
        }
        let artifact = match etl::fetch(spec) {
            Ok(a) => a,
            Err(e) => return failed("", &e),
        };
        let hash = artifact.content_hash.clone();
        if self.ledger.is_ingested(&spec.source_name, &hash) {
            return IngestLedgerEntry::new(&spec.source_name, &hash, IngestStatus::SkippedUnchanged);
        }
        let table = match etl::parse(&artifact, &spec.format) {
            Ok(t) => t,
            Err(e) => return failed(&hash, &e),
        };

        let mut gate_summary = None;
        if spec.kind_of_data == DataKind::Microdata {
            let report = match spec
                .privacy
                .assess(&table.columns, table.rows.clone(), spec.base_dir.as_deref())
            {
                Ok(r) => r,
                Err(e) => return failed(&hash, &e),
            };
            if report.decision == Decision::Reject {
                let mut entry = IngestLedgerEntry::new(&spec.source_name, &hash, IngestStatus::RejectedPrivacy);
                entry.cause = Some(report.reasons.join("; "));
                entry.gate = Some(report.to_json());
                return entry;
            }
            gate_summary = Some(report.to_json());
        }

        // All writes go to a copy that replaces the live store only on success.
        let mut graph = self.graph.clone();
        let mut stats = self.stats.clone();
        for v in &spec.variables {
            if stats.variable(&v.id).is_none() {
                if let Err(e) = register_variable(&mut graph, &mut stats, v.clone()) {
                    return failed(&hash, &e);
                }
            }
        }
        let prov = provenance_id(&spec.source_name, &hash);
        let (observations, rejects) = match normalize(&graph, &stats, &table, &spec.mapping, &prov) {
            Ok(r) => r,
            Err(e) => return failed(&hash, &e),
        };
        let observations = aggregate(observations, spec.mapping.aggregate);
        let unresolved = rejects.len() + table.rejects.len();
        if observations.is_empty() && unresolved > 0 {
            let mut entry = failed(&hash, &format!("none of {unresolved} rows resolved; first: {}", first_reject(&rejects, &table)));
            entry.counts.unresolved_rows = unresolved;
            return entry;
        }
        stats.register_provenance(Provenance {
            id: prov,
            source_name: spec.source_name.clone(),
            url: artifact.location.clone(),
            import_timestamp: artifact.fetched_at,
            content_hash: hash.clone(),
        });
        let written = observations.len();
        for o in observations {
            if let Err(e) = stats.put_observation(&graph, o) {
                return failed(&hash, &e);
            }
        }
        let previous = (std::mem::replace(&mut self.graph, graph), std::mem::replace(&mut self.stats, stats));
        if let Err(e) = self.save() {
            (self.graph, self.stats) = previous;
            return failed(&hash, &e);
        }

        let mut entry = IngestLedgerEntry::new(&spec.source_name, &hash, IngestStatus::Ingested);
        entry.counts.observations = written;
        entry.counts.unresolved_rows = unresolved;
        entry.gate = gate_summary;
        entry
    }
}

fn first_reject(rejects: &[RejectedRow], table: &GenericTable) -> String {
    match (rejects.first(), table.rejects.first()) {
        (Some(r), _) => format!("row {} {}: {}", r.row, r.reason, r.detail),
        (None, Some(r)) => format!("line {}: {}", r.line, r.reason),
        (None, None) => String::new(),
    }
}

fn register_variable(graph: &mut KnowledgeGraph, stats: &mut StatStore, v: StatisticalVariable) -> Result<(), CommonsError> {
    if !graph.contains(&v.id) {
        graph.insert_node(v.id.clone(), VARIABLE_TYPE, &v.name)?;
    }
    stats.register_variable(v)?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CommonsError> {
    let f = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CommonsError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CommonsError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item).map_err(|e| io_err(path, e))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CommonsError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
