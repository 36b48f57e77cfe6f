//! Disclosure-risk assessment and anonymization of microdata.
//!
//! The attack model is a prosecutor who knows a target's quasi-identifiers.
//! A record's re-identification probability is one over the size of its
//! equivalence class; its attribute-inference probability is the share of
//! the most frequent sensitive value inside that class.

mod anonymize;
mod dp;
mod lexicon;
mod risk;
mod transform;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anonymize::{anonymize_k, PlanStep};
pub use dp::{
    debias_proportion, laplace_release, randomized_response, retention_probability, DpParams, LaplaceNoise,
    RandomizedResponse,
};
pub use lexicon::{classify_attributes, Lexicon};
pub use risk::{
    check_k_anonymity, check_l_diversity, check_t_closeness, gate, infer_risk, max_class_distance, partition, reid_risk, Decision,
    MetricResult, RiskReport, RiskThresholds,
};
pub use transform::{generalize, suppress, swap, GeneralizationHierarchy};

/// Exact probabilities and fractions.
pub type Ratio = num_rational::Ratio<u128>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("row {row} has {found} cells, expected {expected}")]
    Arity { row: usize, expected: usize, found: usize },
    #[error("attribute `{0}` listed twice")]
    DuplicateAttribute(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("table has no rows")]
    EmptyTable,
    #[error("attribute `{0}` is not marked sensitive")]
    NotSensitive(String),
    #[error("value `{value}` of `{attribute}` has no mapping at level {level}")]
    UnmappedValue { attribute: String, value: String, level: usize },
    #[error("level {level} exceeds the {depth} levels of the `{attribute}` hierarchy")]
    LevelOutOfRange { attribute: String, level: usize, depth: usize },
    #[error("no hierarchy for quasi-identifier `{0}`")]
    MissingHierarchy(String),
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Identifier,
    QuasiIdentifier,
    Sensitive,
    Other,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Identifier => "identifier",
            Role::QuasiIdentifier => "quasi_identifier",
            Role::Sensitive => "sensitive",
            Role::Other => "other",
        })
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "identifier" | "id" => Ok(Role::Identifier),
            "quasi_identifier" | "qi" => Ok(Role::QuasiIdentifier),
            "sensitive" => Ok(Role::Sensitive),
            "other" => Ok(Role::Other),
            _ => Err(format!("unknown attribute role `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub role: Role,
}

/// Individual-level records; every row has one cell per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicrodataTable {
    attributes: Vec<Attribute>,
    rows: Vec<Vec<String>>,
}

impl MicrodataTable {
    pub fn new(attributes: Vec<Attribute>, rows: Vec<Vec<String>>) -> Result<Self, PrivacyError> {
        let mut seen = HashMap::new();
        for a in &attributes {
            if seen.insert(a.name.as_str(), ()).is_some() {
                return Err(PrivacyError::DuplicateAttribute(a.name.clone()));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(PrivacyError::Arity {
                    row: i,
                    expected: attributes.len(),
                    found: row.len(),
                });
            }
        }
        Ok(MicrodataTable { attributes, rows })
    }

    /// Reads a CSV with a header row; roles come from `role_of` per column name.
    pub fn from_csv<R: std::io::Read>(reader: R, role_of: impl Fn(&str) -> Role) -> Result<Self, PrivacyError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| PrivacyError::InvalidParameter(e.to_string()))?
            .clone();
        let attributes = header
            .iter()
            .map(|h| Attribute {
                name: h.to_string(),
                role: role_of(h),
            })
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PrivacyError::InvalidParameter(e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Self::new(attributes, rows)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, PrivacyError> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| PrivacyError::UnknownAttribute(name.to_string()))
    }

    pub fn role(&self, name: &str) -> Result<Role, PrivacyError> {
        Ok(self.attributes[self.column_index(name)?].role)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.attributes
            .iter()
            .filter(|a| a.role == role)
            .map(|a| a.name.clone())
            .collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>, PrivacyError> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub(crate) fn rows_mut(&mut self) -> &mut Vec<Vec<String>> {
        &mut self.rows
    }
}
