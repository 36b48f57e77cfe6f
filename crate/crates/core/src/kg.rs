//! Knowledge graph of places, variables and their properties.
//!
//! Every fact is a [`Triple`]. Node identities are internal handles; callers
//! find entities by description through [`KnowledgeGraph::resolve_by_description`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::date::ObsDate;

pub const TYPE_OF: &str = "typeOf";
pub const NAME: &str = "name";
pub const CONTAINED_IN_PLACE: &str = "containedInPlace";
pub const PLACE_CODE: &str = "placeCode";

const MAX_ID_LEN: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KgError {
    #[error("invalid node id `{0}`")]
    InvalidId(String),
    #[error("node `{0}` already exists")]
    DuplicateId(NodeId),
    #[error("unknown subject `{0}`")]
    UnknownSubject(NodeId),
    #[error("unknown object `{0}`")]
    UnknownObject(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("node `{0}` is not a place")]
    NotAPlace(NodeId),
    #[error("place `{0}` already has a parent")]
    MultipleParents(NodeId),
    #[error("containment cycle through `{0}`")]
    CycleDetected(NodeId),
    #[error("level {requested} is not below the level of `{place}`")]
    InvalidLevel { place: NodeId, requested: PlaceLevel },
    #[error("entity descriptor is empty")]
    EmptyDescriptor,
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error("registry line {line}: {message}")]
    Registry { line: u64, message: String },
}

/// Internal node handle, e.g. `mun/3106200`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(value: impl Into<String>) -> Result<Self, KgError> {
        let value = value.into();
        let valid = !value.is_empty()
            && value.len() <= MAX_ID_LEN
            && value
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'/' | b'_' | b'-'));
        if valid {
            Ok(NodeId(value))
        } else {
            Err(KgError::InvalidId(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NodeId {
    type Err = KgError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NodeId::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum LiteralValue {
    Text(String),
    Number(#[serde(with = "rust_decimal::serde::str")] Decimal),
    Date(ObsDate),
}

impl LiteralValue {
    pub fn number(value: Decimal) -> Self {
        LiteralValue::Number(value.normalize())
    }

    pub fn lexical(&self) -> String {
        match self {
            LiteralValue::Text(s) => s.clone(),
            LiteralValue::Number(d) => d.normalize().to_string(),
            LiteralValue::Date(d) => d.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Object {
    Node(NodeId),
    Literal(LiteralValue),
}

impl Object {
    pub fn text(s: impl Into<String>) -> Self {
        Object::Literal(LiteralValue::Text(s.into()))
    }

    pub fn lexical(&self) -> String {
        match self {
            Object::Node(id) => id.to_string(),
            Object::Literal(l) => l.lexical(),
        }
    }

    pub fn as_node(&self) -> Option<&NodeId> {
        match self {
            Object::Node(id) => Some(id),
            Object::Literal(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Object::Literal(LiteralValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Object::Node(_) => 0,
            Object::Literal(LiteralValue::Text(_)) => 1,
            Object::Literal(LiteralValue::Number(_)) => 2,
            Object::Literal(LiteralValue::Date(_)) => 3,
        }
    }
}

// Lexicographic on the rendered value, so listings read in text order.
impl Ord for Object {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lexical()
            .cmp(&other.lexical())
            .then(self.rank().cmp(&other.rank()))
    }
}

impl PartialOrd for Object {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: NodeId, predicate: impl Into<String>, object: Object) -> Self {
        Triple {
            subject,
            predicate: predicate.into(),
            object,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlaceLevel {
    Country,
    State,
    Municipality,
}

impl PlaceLevel {
    /// 1 for Country, 2 for State, 3 for Municipality.
    pub fn depth(self) -> usize {
        match self {
            PlaceLevel::Country => 1,
            PlaceLevel::State => 2,
            PlaceLevel::Municipality => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlaceLevel::Country => "Country",
            PlaceLevel::State => "State",
            PlaceLevel::Municipality => "Municipality",
        }
    }
}

impl fmt::Display for PlaceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlaceLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "country" => Ok(PlaceLevel::Country),
            "state" => Ok(PlaceLevel::State),
            "municipality" => Ok(PlaceLevel::Municipality),
            _ => Err(format!("unknown place level `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDescriptor {
    pub name: Option<String>,
    pub level: Option<PlaceLevel>,
    pub ancestor_name: Option<String>,
    pub code: Option<String>,
}

impl EntityDescriptor {
    pub fn named(name: impl Into<String>) -> Self {
        EntityDescriptor {
            name: Some(name.into()),
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.name.is_none() && self.level.is_none() && self.ancestor_name.is_none() && self.code.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Unique(NodeId),
    /// Candidates sorted by node id.
    Ambiguous(Vec<NodeId>),
    NotFound,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeSet<NodeId>,
    outbound: BTreeMap<NodeId, BTreeSet<(String, Object)>>,
    inbound: BTreeMap<NodeId, BTreeSet<(String, NodeId)>>,
    by_name: BTreeMap<String, BTreeSet<NodeId>>,
    by_code: BTreeMap<String, BTreeSet<NodeId>>,
    triple_count: usize,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triple_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    /// Adds a node with its `typeOf` and `name` triples.
    pub fn insert_node(&mut self, id: NodeId, type_of: &str, name: &str) -> Result<NodeId, KgError> {
        if self.nodes.contains(&id) {
            return Err(KgError::DuplicateId(id));
        }
        self.nodes.insert(id.clone());
        self.insert_triple(Triple::new(id.clone(), TYPE_OF, Object::text(type_of)))?;
        self.insert_triple(Triple::new(id.clone(), NAME, Object::text(name)))?;
        Ok(id)
    }

    /// Adds a node without any triples. Returns false if it already existed.
    pub fn insert_bare_node(&mut self, id: NodeId) -> bool {
        self.nodes.insert(id)
    }

    /// Idempotent: a triple already present is left as is.
    pub fn insert_triple(&mut self, t: Triple) -> Result<(), KgError> {
        if !self.nodes.contains(&t.subject) {
            return Err(KgError::UnknownSubject(t.subject));
        }
        if let Object::Node(target) = &t.object {
            if !self.nodes.contains(target) {
                return Err(KgError::UnknownObject(target.clone()));
            }
        }
        let out = self.outbound.entry(t.subject.clone()).or_default();
        let key = (t.predicate.clone(), t.object.clone());
        if out.contains(&key) {
            return Ok(());
        }
        if t.predicate == CONTAINED_IN_PLACE && out.iter().any(|(p, _)| p == CONTAINED_IN_PLACE) {
            return Err(KgError::MultipleParents(t.subject));
        }
        out.insert(key);
        self.triple_count += 1;
        if let Object::Node(target) = &t.object {
            self.inbound
                .entry(target.clone())
                .or_default()
                .insert((t.predicate.clone(), t.subject.clone()));
        }
        if let Some(text) = t.object.as_text() {
            if t.predicate == NAME {
                self.by_name
                    .entry(text.to_lowercase())
                    .or_default()
                    .insert(t.subject.clone());
            } else if t.predicate == PLACE_CODE {
                self.by_code.entry(text.to_string()).or_default().insert(t.subject.clone());
            }
        }
        Ok(())
    }

    pub fn triples_out(&self, node: &NodeId, predicate: Option<&str>) -> Result<Vec<Triple>, KgError> {
        if !self.nodes.contains(node) {
            return Err(KgError::UnknownNode(node.clone()));
        }
        Ok(self
            .outbound
            .get(node)
            .into_iter()
            .flatten()
            .filter(|(p, _)| predicate.is_none_or(|want| want == p))
            .map(|(p, o)| Triple::new(node.clone(), p.clone(), o.clone()))
            .collect())
    }

    /// Triples whose object is `node`, ordered by (predicate, subject).
    pub fn triples_in(&self, node: &NodeId, predicate: Option<&str>) -> Result<Vec<Triple>, KgError> {
        if !self.nodes.contains(node) {
            return Err(KgError::UnknownNode(node.clone()));
        }
        Ok(self
            .inbound
            .get(node)
            .into_iter()
            .flatten()
            .filter(|(p, _)| predicate.is_none_or(|want| want == p))
            .map(|(p, s)| Triple::new(s.clone(), p.clone(), Object::Node(node.clone())))
            .collect())
    }

    /// Every stored triple, ordered by (subject, predicate, object).
    pub fn all_triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.outbound.iter().flat_map(|(s, set)| {
            set.iter()
                .map(move |(p, o)| Triple::new(s.clone(), p.clone(), o.clone()))
        })
    }

    fn first_text(&self, node: &NodeId, predicate: &str) -> Option<&str> {
        self.outbound
            .get(node)?
            .iter()
            .find(|(p, _)| p == predicate)
            .and_then(|(_, o)| o.as_text())
    }

    pub fn name_of(&self, node: &NodeId) -> Option<&str> {
        self.first_text(node, NAME)
    }

    pub fn type_of(&self, node: &NodeId) -> Option<&str> {
        self.first_text(node, TYPE_OF)
    }

    pub fn code_of(&self, node: &NodeId) -> Option<&str> {
        self.first_text(node, PLACE_CODE)
    }

    pub fn level_of(&self, node: &NodeId) -> Option<PlaceLevel> {
        self.type_of(node).and_then(|t| t.parse().ok())
    }

    pub fn nodes_with_code(&self, code: &str) -> impl Iterator<Item = &NodeId> {
        self.by_code.get(code).into_iter().flatten()
    }

    /// All (code, node) pairs whose code starts with `prefix`.
    pub fn codes_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a NodeId)> + 'a {
        self.by_code
            .range(prefix.to_string()..)
            .take_while(move |(code, _)| code.starts_with(prefix))
            .flat_map(|(code, ids)| ids.iter().map(move |id| (code.as_str(), id)))
    }

    fn parent_of(&self, node: &NodeId) -> Option<&NodeId> {
        self.outbound
            .get(node)?
            .iter()
            .find(|(p, _)| p == CONTAINED_IN_PLACE)
            .and_then(|(_, o)| o.as_node())
    }

    /// Parents from the immediate one up to the root.
    pub fn ancestors(&self, place: &NodeId) -> Result<Vec<NodeId>, KgError> {
        if !self.nodes.contains(place) {
            return Err(KgError::UnknownNode(place.clone()));
        }
        if self.level_of(place).is_none() {
            return Err(KgError::NotAPlace(place.clone()));
        }
        let mut seen = HashSet::from([place.clone()]);
        let mut chain = Vec::new();
        let mut current = place;
        while let Some(parent) = self.parent_of(current) {
            if !seen.insert(parent.clone()) {
                return Err(KgError::CycleDetected(parent.clone()));
            }
            chain.push(parent.clone());
            current = parent;
        }
        Ok(chain)
    }

    /// Descendants of `place` at exactly `level`, sorted by id.
    pub fn children(&self, place: &NodeId, level: PlaceLevel) -> Result<Vec<NodeId>, KgError> {
        if !self.nodes.contains(place) {
            return Err(KgError::UnknownNode(place.clone()));
        }
        let own = self.level_of(place).ok_or_else(|| KgError::NotAPlace(place.clone()))?;
        if level.depth() <= own.depth() {
            return Err(KgError::InvalidLevel {
                place: place.clone(),
                requested: level,
            });
        }
        let mut found = BTreeSet::new();
        let mut seen = HashSet::from([place.clone()]);
        let mut frontier = vec![place.clone()];
        while let Some(current) = frontier.pop() {
            for (p, child) in self.inbound.get(&current).into_iter().flatten() {
                if p != CONTAINED_IN_PLACE || !seen.insert(child.clone()) {
                    continue;
                }
                if self.level_of(child) == Some(level) {
                    found.insert(child.clone());
                }
                frontier.push(child.clone());
            }
        }
        Ok(found.into_iter().collect())
    }

    /// Finds an entity from what is known about it rather than from its id.
    ///
    /// An exact code match wins outright. Otherwise nodes are matched by
    /// case-insensitive name, then narrowed by level and by the name of any
    /// ancestor.
    pub fn resolve_by_description(&self, d: &EntityDescriptor) -> Result<Resolution, KgError> {
        if d.is_empty() {
            return Err(KgError::EmptyDescriptor);
        }
        if let Some(code) = &d.code {
            let hits: Vec<&NodeId> = self
                .nodes_with_code(code)
                .filter(|id| d.level.is_none_or(|l| self.level_of(id) == Some(l)))
                .collect();
            if hits.len() == 1 {
                return Ok(Resolution::Unique(hits[0].clone()));
            }
        }
        let candidates: Box<dyn Iterator<Item = &NodeId>> = match &d.name {
            Some(name) => Box::new(self.by_name.get(&name.to_lowercase()).into_iter().flatten()),
            None if d.level.is_some() || d.ancestor_name.is_some() => Box::new(self.nodes.iter()),
            None => Box::new(std::iter::empty()),
        };
        let ancestor = d.ancestor_name.as_ref().map(|a| a.to_lowercase());
        let matches: Vec<NodeId> = candidates
            .filter(|id| d.level.is_none_or(|l| self.level_of(id) == Some(l)))
            .filter(|id| match &ancestor {
                None => true,
                Some(want) => self.ancestors(id).is_ok_and(|chain| {
                    chain
                        .iter()
                        .any(|a| self.name_of(a).is_some_and(|n| n.to_lowercase() == *want))
                }),
            })
            .cloned()
            .collect();
        Ok(match matches.len() {
            0 => Resolution::NotFound,
            1 => Resolution::Unique(matches.into_iter().next().unwrap()),
            _ => Resolution::Ambiguous(matches),
        })
    }

    /// Loads a place registry CSV with header `node_id,type,name,code,parent_id`.
    ///
    /// Rows may list children before their parents.
    pub fn load_registry<R: Read>(&mut self, reader: R) -> Result<usize, KgError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers().map_err(|e| KgError::Registry {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != ["node_id", "type", "name", "code", "parent_id"] {
            return Err(KgError::Registry {
                line: 1,
                message: "expected header node_id,type,name,code,parent_id".into(),
            });
        }
        let mut pending = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| KgError::Registry {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let wrap = |e: KgError| KgError::Registry {
                line,
                message: e.to_string(),
            };
            let id = NodeId::new(&record[0]).map_err(wrap)?;
            let kind = &record[1];
            if kind.parse::<PlaceLevel>().is_err() {
                return Err(KgError::Registry {
                    line,
                    message: format!("unknown place type `{kind}`"),
                });
            }
            self.insert_node(id.clone(), kind, &record[2]).map_err(wrap)?;
            if !record[3].is_empty() {
                self.insert_triple(Triple::new(id.clone(), PLACE_CODE, Object::text(&record[3])))
                    .map_err(wrap)?;
            }
            if !record[4].is_empty() {
                pending.push((line, id, NodeId::new(&record[4]).map_err(wrap)?));
            }
        }
        let count = self.nodes.len();
        for (line, child, parent) in pending {
            self.insert_triple(Triple::new(child, CONTAINED_IN_PLACE, Object::Node(parent)))
                .map_err(|e| KgError::Registry {
                    line,
                    message: e.to_string(),
                })?;
        }
        Ok(count)
    }
}
