//! Statistical variables, observations and their provenance.
//!
//! Several sources may report the same (entity, variable, date). All reports
//! are kept; reads pick one per date using the configured source preference
//! and, among equally preferred sources, the most recent import.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::ObsDate;
use crate::kg::{KnowledgeGraph, NodeId};

pub const CSV_HEADER: &str = "entity_id,entity_name,variable,date,value,unit,provenance";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatError {
    #[error("variable `{0}` already registered")]
    DuplicateId(NodeId),
    #[error("unknown entity `{0}`")]
    UnknownEntity(NodeId),
    #[error("unknown variable `{0}`")]
    UnknownVariable(NodeId),
    #[error("unknown provenance `{0}`")]
    UnknownProvenance(String),
    #[error("value is not a finite number")]
    NonFiniteValue,
    #[error("request needs at least one entity and one variable")]
    EmptyRequest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatisticalVariable {
    pub id: NodeId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub source_name: String,
    pub url: String,
    pub import_timestamp: DateTime<Utc>,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub entity: NodeId,
    pub variable: NodeId,
    pub date: ObsDate,
    #[serde(with = "rust_decimal::serde::str")]
    pub value: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesPoint {
    pub date: ObsDate,
    #[serde(with = "rust_decimal::serde::str")]
    pub value: Decimal,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Series {
    pub entity: NodeId,
    pub variable: NodeId,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsertResult {
    Inserted,
    Replaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateSpec {
    Exact(ObsDate),
    Latest,
}

impl std::str::FromStr for DateSpec {
    type Err = crate::date::DateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("latest") {
            Ok(DateSpec::Latest)
        } else {
            s.parse().map(DateSpec::Exact)
        }
    }
}

/// Converts a binary float, refusing NaN and infinities.
pub fn decimal_from_f64(v: f64) -> Result<Decimal, StatError> {
    if !v.is_finite() {
        return Err(StatError::NonFiniteValue);
    }
    Decimal::try_from(v).map_err(|_| StatError::NonFiniteValue)
}

/// Canonical text form: no trailing zeros, `.` separator, no exponent.
pub fn render_decimal(d: &Decimal) -> String {
    if d.is_zero() {
        return "0".to_string();
    }
    d.normalize().to_string()
}

type DateBucket = BTreeMap<ObsDate, BTreeMap<String, Observation>>;

#[derive(Debug, Clone, Default)]
pub struct StatStore {
    variables: BTreeMap<NodeId, StatisticalVariable>,
    provenance: BTreeMap<String, Provenance>,
    observations: BTreeMap<(NodeId, NodeId), DateBucket>,
    by_entity: BTreeMap<NodeId, BTreeSet<NodeId>>,
    source_preference: Vec<String>,
}

impl StatStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_source_preference(&mut self, order: Vec<String>) {
        self.source_preference = order;
    }

    pub fn source_preference(&self) -> &[String] {
        &self.source_preference
    }

    pub fn register_variable(&mut self, v: StatisticalVariable) -> Result<(), StatError> {
        if self.variables.contains_key(&v.id) {
            return Err(StatError::DuplicateId(v.id));
        }
        self.variables.insert(v.id.clone(), v);
        Ok(())
    }

    pub fn variable(&self, id: &NodeId) -> Option<&StatisticalVariable> {
        self.variables.get(id)
    }

    pub fn variables(&self) -> impl Iterator<Item = &StatisticalVariable> {
        self.variables.values()
    }

    /// Registering the same provenance id again overwrites it.
    pub fn register_provenance(&mut self, p: Provenance) {
        self.provenance.insert(p.id.clone(), p);
    }

    pub fn provenance(&self, id: &str) -> Option<&Provenance> {
        self.provenance.get(id)
    }

    pub fn provenances(&self) -> impl Iterator<Item = &Provenance> {
        self.provenance.values()
    }

    /// Every stored observation, including ones shadowed by a preferred source.
    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.observations
            .values()
            .flat_map(|dates| dates.values().flat_map(|by_prov| by_prov.values()))
    }

    pub fn observation_count(&self) -> usize {
        self.observations().count()
    }

    pub fn put_observation(&mut self, graph: &KnowledgeGraph, o: Observation) -> Result<UpsertResult, StatError> {
        if !graph.contains(&o.entity) {
            return Err(StatError::UnknownEntity(o.entity));
        }
        if !self.variables.contains_key(&o.variable) {
            return Err(StatError::UnknownVariable(o.variable));
        }
        if !self.provenance.contains_key(&o.provenance) {
            return Err(StatError::UnknownProvenance(o.provenance));
        }
        self.by_entity
            .entry(o.entity.clone())
            .or_default()
            .insert(o.variable.clone());
        let slot = self
            .observations
            .entry((o.entity.clone(), o.variable.clone()))
            .or_default()
            .entry(o.date)
            .or_default();
        Ok(match slot.insert(o.provenance.clone(), o) {
            Some(_) => UpsertResult::Replaced,
            None => UpsertResult::Inserted,
        })
    }

    fn preference_rank(&self, source: &str) -> usize {
        self.source_preference
            .iter()
            .position(|s| s == source)
            .unwrap_or(self.source_preference.len())
    }

    fn pick<'a>(&'a self, reports: &'a BTreeMap<String, Observation>) -> Option<&'a Observation> {
        reports.values().min_by_key(|o| {
            let prov = self.provenance.get(&o.provenance);
            let rank = prov.map_or(usize::MAX, |p| self.preference_rank(&p.source_name));
            (rank, Reverse(prov.map(|p| p.import_timestamp)), o.provenance.as_str())
        })
    }

    fn resolved(&self, entity: &NodeId, variable: &NodeId) -> impl Iterator<Item = &Observation> {
        self.observations
            .get(&(entity.clone(), variable.clone()))
            .into_iter()
            .flat_map(|dates| dates.values().filter_map(|reports| self.pick(reports)))
    }

    fn check_pair(&self, graph: &KnowledgeGraph, entity: &NodeId, variable: &NodeId) -> Result<(), StatError> {
        if !graph.contains(entity) {
            return Err(StatError::UnknownEntity(entity.clone()));
        }
        if !self.variables.contains_key(variable) {
            return Err(StatError::UnknownVariable(variable.clone()));
        }
        Ok(())
    }

    pub fn series(&self, graph: &KnowledgeGraph, entity: &NodeId, variable: &NodeId) -> Result<Series, StatError> {
        self.check_pair(graph, entity, variable)?;
        Ok(Series {
            entity: entity.clone(),
            variable: variable.clone(),
            points: self
                .resolved(entity, variable)
                .map(|o| SeriesPoint {
                    date: o.date,
                    value: o.value,
                    provenance: o.provenance.clone(),
                })
                .collect(),
        })
    }

    /// One observation per entity for `variable`; entities without a match
    /// (or unknown to the graph) are left out. Output is sorted by entity.
    pub fn point(&self, entities: &[NodeId], variable: &NodeId, date: DateSpec) -> Result<Vec<Observation>, StatError> {
        if !self.variables.contains_key(variable) {
            return Err(StatError::UnknownVariable(variable.clone()));
        }
        let wanted: BTreeSet<&NodeId> = entities.iter().collect();
        Ok(wanted
            .into_iter()
            .filter_map(|e| {
                let dates = self.observations.get(&(e.clone(), variable.clone()))?;
                let reports = match date {
                    DateSpec::Exact(d) => dates.get(&d)?,
                    DateSpec::Latest => dates.values().next_back()?,
                };
                self.pick(reports).cloned()
            })
            .collect())
    }

    pub fn list_variables(&self, graph: &KnowledgeGraph, entity: &NodeId) -> Result<Vec<NodeId>, StatError> {
        if !graph.contains(entity) {
            return Err(StatError::UnknownEntity(entity.clone()));
        }
        Ok(self
            .by_entity
            .get(entity)
            .map(|vars| vars.iter().cloned().collect())
            .unwrap_or_default())
    }

    /// Renders the download CSV. Unknown entities and variables contribute no
    /// rows. The output depends only on store state and the request.
    pub fn export_csv(
        &self,
        graph: &KnowledgeGraph,
        entities: &[NodeId],
        variables: &[NodeId],
        range: Option<(ObsDate, ObsDate)>,
    ) -> Result<Vec<u8>, StatError> {
        if entities.is_empty() || variables.is_empty() {
            return Err(StatError::EmptyRequest);
        }
        let entities: BTreeSet<&NodeId> = entities.iter().collect();
        let variables: BTreeSet<&NodeId> = variables.iter().collect();
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .has_headers(false)
            .from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, rec: &[&str]| {
            w.write_record(rec).expect("writing to memory cannot fail");
        };
        write(&mut out, &CSV_HEADER.split(',').collect::<Vec<_>>());
        for entity in entities {
            if !graph.contains(entity) {
                continue;
            }
            let entity_name = graph.name_of(entity).unwrap_or("");
            for variable in &variables {
                let Some(var) = self.variables.get(*variable) else {
                    continue;
                };
                for o in self.resolved(entity, variable) {
                    if let Some((from, to)) = &range {
                        if !o.date.within(from, to) {
                            continue;
                        }
                    }
                    let date = o.date.to_string();
                    let value = render_decimal(&o.value);
                    let unit = o.unit.as_deref().or(var.unit.as_deref()).unwrap_or("");
                    write(
                        &mut out,
                        &[
                            entity.as_str(),
                            entity_name,
                            variable.as_str(),
                            &date,
                            &value,
                            unit,
                            &o.provenance,
                        ],
                    );
                }
            }
        }
        Ok(out.into_inner().expect("in-memory writer"))
    }
}
