//! Request parsing and response bodies, shared by the HTTP routes and the
//! command line so both produce the same bytes.

use std::collections::BTreeMap;
use std::str::FromStr;

use bdc_core::kg::Object;
use bdc_core::stat_store::{render_decimal, DateSpec};
use bdc_core::{Commons, EntityDescriptor, LiteralValue, NodeId, ObsDate, PlaceLevel, Resolution};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

pub const LOCAL_ORIGIN: &str = "local";

/// Query parameters; unknown keys are kept but never consulted.
#[derive(Debug, Clone, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new(map: impl IntoIterator<Item = (String, String)>) -> Self {
        Params(map.into_iter().collect())
    }

    /// The trimmed value, or `None` when absent or blank.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(|v| v.trim()).filter(|v| !v.is_empty())
    }

    pub fn present(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn require(&self, name: &str) -> Result<&str, ApiError> {
        self.get(name).ok_or_else(|| ApiError::missing_param(name))
    }

    pub fn id(&self, name: &str) -> Result<NodeId, ApiError> {
        parse_id(name, self.require(name)?)
    }

    pub fn flag(&self, name: &str) -> bool {
        self.get(name).is_some_and(|v| v == "true" || v == "1")
    }
}

pub fn parse_id(param: &str, text: &str) -> Result<NodeId, ApiError> {
    NodeId::new(text.trim()).map_err(|e| ApiError::invalid_param(param, e))
}

/// Comma-separated ids; blank items are skipped.
pub fn parse_ids(param: &str, text: &str) -> Result<Vec<NodeId>, ApiError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_id(param, s))
        .collect()
}

pub fn number(d: &Decimal) -> serde_json::Number {
    serde_json::Number::from_str(&render_decimal(d)).expect("canonical decimals are valid JSON numbers")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub type_of: String,
}

impl NodeRef {
    pub fn of(c: &Commons, id: &NodeId) -> Self {
        NodeRef {
            id: id.clone(),
            name: c.graph.name_of(id).unwrap_or_default().to_string(),
            type_of: c.graph.type_of(id).unwrap_or_default().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleView {
    pub subject: NodeId,
    pub predicate: String,
    pub object: String,
    /// `node`, `text`, `number` or `date`.
    pub object_kind: String,
}

impl From<bdc_core::Triple> for TripleView {
    fn from(t: bdc_core::Triple) -> Self {
        let kind = match &t.object {
            Object::Node(_) => "node",
            Object::Literal(LiteralValue::Text(_)) => "text",
            Object::Literal(LiteralValue::Number(_)) => "number",
            Object::Literal(LiteralValue::Date(_)) => "date",
        };
        TripleView {
            object: t.object.lexical(),
            subject: t.subject,
            predicate: t.predicate,
            object_kind: kind.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriplesResponse {
    pub node: NodeId,
    pub direction: String,
    pub triples: Vec<TripleView>,
}

pub fn triples(c: &Commons, node: &NodeId, params: &Params) -> Result<TriplesResponse, ApiError> {
    let direction = params.get("direction").unwrap_or("out");
    let predicate = params.get("predicate");
    let list = match direction {
        "out" => c.graph.triples_out(node, predicate)?,
        "in" => c.graph.triples_in(node, predicate)?,
        other => return Err(ApiError::invalid_param("direction", format!("`{other}` is not `out` or `in`"))),
    };
    Ok(TriplesResponse {
        node: node.clone(),
        direction: direction.to_string(),
        triples: list.into_iter().map(TripleView::from).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResolveResponse {
    Unique(NodeRef),
    Ambiguous { candidates: Vec<NodeRef> },
}

fn parse_level(param: &str, text: &str) -> Result<PlaceLevel, ApiError> {
    text.parse().map_err(|e| ApiError::invalid_param(param, e))
}

pub fn resolve(c: &Commons, params: &Params) -> Result<ResolveResponse, ApiError> {
    let d = EntityDescriptor {
        name: params.get("name").map(str::to_string),
        level: params.get("level").map(|l| parse_level("level", l)).transpose()?,
        ancestor_name: params.get("ancestor").map(str::to_string),
        code: params.get("code").map(str::to_string),
    };
    if d.is_empty() {
        return Err(ApiError::new(
            axum::http::StatusCode::BAD_REQUEST,
            "missing_param",
            "give at least one of `name`, `level`, `ancestor`, `code`",
        ));
    }
    match c.graph.resolve_by_description(&d)? {
        Resolution::Unique(id) => Ok(ResolveResponse::Unique(NodeRef::of(c, &id))),
        Resolution::Ambiguous(ids) => Ok(ResolveResponse::Ambiguous {
            candidates: ids.iter().map(|id| NodeRef::of(c, id)).collect(),
        }),
        Resolution::NotFound => Err(ApiError::not_found("no place matches the description")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildrenResponse {
    pub place: NodeId,
    pub level: PlaceLevel,
    pub children: Vec<NodeRef>,
}

pub fn children(c: &Commons, place: &NodeId, params: &Params) -> Result<ChildrenResponse, ApiError> {
    let level = parse_level("level", params.require("level")?)?;
    let ids = c.graph.children(place, level)?;
    Ok(ChildrenResponse {
        place: place.clone(),
        level,
        children: ids.iter().map(|id| NodeRef::of(c, id)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableView {
    pub id: NodeId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariablesResponse {
    pub entity: NodeId,
    pub variables: Vec<VariableView>,
}

pub fn variables(c: &Commons, params: &Params) -> Result<VariablesResponse, ApiError> {
    let entity = params.id("entity")?;
    let ids = c.stats.list_variables(&c.graph, &entity)?;
    Ok(VariablesResponse {
        variables: ids
            .iter()
            .map(|id| {
                let v = c.stats.variable(id);
                VariableView {
                    id: id.clone(),
                    name: v.map(|v| v.name.clone()).unwrap_or_default(),
                    unit: v.and_then(|v| v.unit.clone()),
                }
            })
            .collect(),
        entity,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointView {
    pub date: ObsDate,
    pub value: serde_json::Number,
    pub provenance: String,
    /// `local` or `remote:<name>`.
    #[serde(default)]
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesResponse {
    pub entity: NodeId,
    pub variable: NodeId,
    pub points: Vec<PointView>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// The local series only; federation lives in [`crate::federation`].
pub fn local_series(c: &Commons, entity: &NodeId, variable: &NodeId) -> Result<SeriesResponse, ApiError> {
    let s = c.stats.series(&c.graph, entity, variable)?;
    Ok(SeriesResponse {
        entity: s.entity,
        variable: s.variable,
        points: s
            .points
            .iter()
            .map(|p| PointView {
                date: p.date,
                value: number(&p.value),
                provenance: p.provenance.clone(),
                origin: LOCAL_ORIGIN.into(),
            })
            .collect(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPoint {
    pub entity: NodeId,
    pub date: ObsDate,
    pub value: serde_json::Number,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointResponse {
    pub variable: NodeId,
    /// The requested date, or `LATEST`.
    pub date: String,
    pub points: Vec<EntityPoint>,
}

pub fn point(c: &Commons, params: &Params) -> Result<PointResponse, ApiError> {
    let entities = parse_ids("entities", params.require("entities")?)?;
    if entities.is_empty() {
        return Err(ApiError::new(
            axum::http::StatusCode::BAD_REQUEST,
            "empty_request",
            "`entities` lists no ids",
        ));
    }
    let variable = params.id("variable")?;
    let date_text = params.get("date").unwrap_or("LATEST");
    let spec: DateSpec = date_text.parse().map_err(|e| ApiError::invalid_param("date", e))?;
    let obs = c.stats.point(&entities, &variable, spec)?;
    Ok(PointResponse {
        variable,
        date: match spec {
            DateSpec::Latest => "LATEST".into(),
            DateSpec::Exact(d) => d.to_string(),
        },
        points: obs
            .into_iter()
            .map(|o| EntityPoint {
                value: number(&o.value),
                entity: o.entity,
                date: o.date,
                provenance: o.provenance,
            })
            .collect(),
    })
}

/// A CSV download request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownloadRequest {
    pub entities: Vec<NodeId>,
    pub variables: Vec<NodeId>,
    pub range: Option<(ObsDate, ObsDate)>,
}

impl DownloadRequest {
    pub fn from_params(params: &Params) -> Result<Self, ApiError> {
        let list = |name: &str| -> Result<Vec<NodeId>, ApiError> {
            if !params.present(name) {
                return Err(ApiError::missing_param(name));
            }
            parse_ids(name, params.get(name).unwrap_or(""))
        };
        Self::new(list("entities")?, list("variables")?, params.get("from"), params.get("to"))
    }

    pub fn new(entities: Vec<NodeId>, variables: Vec<NodeId>, from: Option<&str>, to: Option<&str>) -> Result<Self, ApiError> {
        if entities.is_empty() || variables.is_empty() {
            return Err(ApiError::new(
                axum::http::StatusCode::BAD_REQUEST,
                "empty_request",
                "a download needs at least one entity and one variable",
            ));
        }
        let date = |name: &str, v: Option<&str>| -> Result<Option<ObsDate>, ApiError> {
            v.map(|t| t.parse().map_err(|e| ApiError::invalid_param(name, e))).transpose()
        };
        let from = date("from", from)?;
        let to = date("to", to)?;
        let range = match (from, to) {
            (None, None) => None,
            (f, t) => Some((
                f.unwrap_or(ObsDate::year(i32::MIN)),
                t.unwrap_or(ObsDate::year(i32::MAX)),
            )),
        };
        Ok(DownloadRequest {
            entities,
            variables,
            range,
        })
    }

    pub fn render(&self, c: &Commons) -> Result<Vec<u8>, ApiError> {
        Ok(c.stats.export_csv(&c.graph, &self.entities, &self.variables, self.range)?)
    }
}

/// Suggested download file name, `<UTC timestamp>.csv`.
pub fn download_filename(now: chrono::DateTime<chrono::Utc>) -> String {
    format!("{}.csv", now.format("%Y%m%dT%H%M%SZ"))
}
