//! Declarative source descriptions, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EtlError;
use crate::kg::{NodeId, PlaceLevel};
use crate::privacy::{gate, Attribute, Lexicon, MicrodataTable, RiskReport, RiskThresholds, Role};
use crate::stat_store::StatisticalVariable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub source_name: String,
    #[serde(default)]
    pub kind_of_data: DataKind,
    pub fetch: FetchSpec,
    #[serde(default)]
    pub format: TableFormat,
    pub mapping: FieldMapping,
    /// Variables created on first ingest when missing from the store.
    #[serde(default)]
    pub variables: Vec<StatisticalVariable>,
    #[serde(default)]
    pub privacy: PrivacySettings,
    /// Directory that relative `local-file` locations resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    #[default]
    Aggregate,
    Microdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetchKind {
    HttpJson,
    HttpCsv,
    LocalFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSpec {
    pub kind: FetchKind,
    pub location: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableDialect {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableFormat {
    pub kind: TableDialect,
    /// CSV field delimiter, a single byte.
    pub delimiter: char,
    /// JSON: dotted path to the array of records; empty means the document root.
    pub records_path: String,
}

impl Default for TableFormat {
    fn default() -> Self {
        TableFormat {
            kind: TableDialect::Csv,
            delimiter: ',',
            records_path: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntityField {
    /// Official place code in `column` at `level`.
    PlaceCode { column: String, level: PlaceLevel },
    /// Place found by name, optionally narrowed by level and an ancestor
    /// given either per row (`ancestor_column`) or fixed (`ancestor`).
    Description {
        name_column: String,
        #[serde(default)]
        level: Option<PlaceLevel>,
        #[serde(default)]
        ancestor_column: Option<String>,
        #[serde(default)]
        ancestor: Option<String>,
    },
    /// Every row belongs to one entity.
    Fixed { node: NodeId },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    None,
    /// One observation per (entity, variable, date) holding the row count.
    Count,
    /// One observation per (entity, variable, date) holding the sum of values.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatePrecision {
    Year,
    Month,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapping {
    pub entity: EntityField,
    #[serde(default)]
    pub variable: Option<NodeId>,
    #[serde(default)]
    pub variable_column: Option<String>,
    #[serde(default)]
    pub variable_prefix: String,
    pub date_column: String,
    /// Tokens `YYYY`, `MM`, `DD`; `*` ignores the rest; anything else is literal.
    #[serde(default = "default_date_format")]
    pub date_format: String,
    #[serde(default)]
    pub date_precision: Option<DatePrecision>,
    #[serde(default)]
    pub value_column: Option<String>,
    #[serde(default = "default_separator")]
    pub decimal_separator: char,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub aggregate: Aggregation,
}

fn default_date_format() -> String {
    "YYYY".into()
}

fn default_separator() -> char {
    '.'
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySettings {
    /// Sensitive-term lexicon file; the built-in LGPD list when absent.
    pub lexicon: Option<PathBuf>,
    /// Role per column, overriding the lexicon's suggestion.
    pub roles: BTreeMap<String, String>,
    pub thresholds: RiskThresholds,
}

impl PrivacySettings {
    /// Reads settings on their own, as used for ad hoc checks.
    pub fn from_toml(text: &str) -> Result<Self, EtlError> {
        let settings: PrivacySettings = toml::from_str(text).map_err(|e| EtlError::InvalidSpec(e.to_string()))?;
        for role in settings.roles.values() {
            role.parse::<Role>().map_err(EtlError::InvalidSpec)?;
        }
        settings
            .thresholds
            .validate()
            .map_err(|e| EtlError::InvalidSpec(e.to_string()))?;
        Ok(settings)
    }

    /// The configured lexicon file, relative paths against `base_dir`.
    pub fn lexicon(&self, base_dir: Option<&Path>) -> Result<Lexicon, EtlError> {
        let Some(path) = &self.lexicon else {
            return Ok(Lexicon::lgpd_default());
        };
        let path = match base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.clone(),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| EtlError::InvalidSpec(format!("lexicon {}: {e}", path.display())))?;
        Ok(Lexicon::parse(&text))
    }

    /// Explicit role for `column`, else the lexicon's classification.
    pub fn role_of(&self, lexicon: &Lexicon, column: &str) -> Role {
        self.roles
            .get(column)
            .and_then(|r| r.parse().ok())
            .unwrap_or_else(|| lexicon.classify(column))
    }

    /// Runs the publication gate over a table of text cells.
    pub fn assess(
        &self,
        columns: &[String],
        rows: Vec<Vec<String>>,
        base_dir: Option<&Path>,
    ) -> Result<RiskReport, EtlError> {
        let lexicon = self.lexicon(base_dir)?;
        let attributes = columns
            .iter()
            .map(|c| Attribute {
                name: c.clone(),
                role: self.role_of(&lexicon, c),
            })
            .collect();
        let table = MicrodataTable::new(attributes, rows).map_err(|e| EtlError::Mapping(e.to_string()))?;
        let qi = table.names_with_role(Role::QuasiIdentifier);
        let sensitive = table.names_with_role(Role::Sensitive);
        gate(&table, &qi, &sensitive, &self.thresholds).map_err(|e| EtlError::Mapping(e.to_string()))
    }
}

impl FieldMapping {
    pub fn precision(&self) -> DatePrecision {
        self.date_precision.unwrap_or(if self.date_format.contains("MM") {
            DatePrecision::Month
        } else {
            DatePrecision::Year
        })
    }

    /// Columns the mapping reads.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.date_column.as_str()];
        match &self.entity {
            EntityField::PlaceCode { column, .. } => cols.push(column),
            EntityField::Description {
                name_column,
                ancestor_column,
                ..
            } => {
                cols.push(name_column);
                if let Some(a) = ancestor_column {
                    cols.push(a);
                }
            }
            EntityField::Fixed { .. } => {}
        }
        if let Some(v) = &self.variable_column {
            cols.push(v);
        }
        if let Some(v) = &self.value_column {
            cols.push(v);
        }
        cols
    }

    pub fn validate(&self) -> Result<(), EtlError> {
        match (&self.variable, &self.variable_column) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(EtlError::InvalidSpec(
                    "mapping needs exactly one of `variable` or `variable_column`".into(),
                ))
            }
        }
        if self.value_column.is_none() && self.aggregate != Aggregation::Count {
            return Err(EtlError::InvalidSpec(
                "`value_column` is required unless aggregate = \"count\"".into(),
            ));
        }
        if self.precision() == DatePrecision::Month && !self.date_format.contains("MM") {
            return Err(EtlError::InvalidSpec("monthly precision needs `MM` in date_format".into()));
        }
        if !self.date_format.contains("YYYY") {
            return Err(EtlError::InvalidSpec("date_format must contain `YYYY`".into()));
        }
        if !matches!(self.decimal_separator, '.' | ',') {
            return Err(EtlError::InvalidSpec("decimal_separator must be `.` or `,`".into()));
        }
        Ok(())
    }
}

impl SourceSpec {
    pub fn from_toml(text: &str) -> Result<Self, EtlError> {
        let spec: SourceSpec = toml::from_str(text).map_err(|e| EtlError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative locations resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, EtlError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EtlError::InvalidSpec(format!("{}: {e}", path.display())))?;
        let mut spec = Self::from_toml(&text)?;
        spec.base_dir = path.parent().map(Path::to_path_buf);
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EtlError> {
        if self.source_name.trim().is_empty() {
            return Err(EtlError::InvalidSpec("source_name is empty".into()));
        }
        match (self.fetch.kind, self.format.kind) {
            (FetchKind::HttpJson, TableDialect::Csv) | (FetchKind::HttpCsv, TableDialect::Json) => {
                return Err(EtlError::InvalidSpec(format!(
                    "fetch kind {:?} does not match format {:?}",
                    self.fetch.kind, self.format.kind
                )))
            }
            _ => {}
        }
        if !self.format.delimiter.is_ascii() {
            return Err(EtlError::InvalidSpec("delimiter must be a single ASCII character".into()));
        }
        for role in self.privacy.roles.values() {
            role.parse::<Role>().map_err(EtlError::InvalidSpec)?;
        }
        self.privacy
            .thresholds
            .validate()
            .map_err(|e| EtlError::InvalidSpec(e.to_string()))?;
        self.mapping.validate()
    }

    pub fn resolve_location(&self) -> PathBuf {
        let p = PathBuf::from(&self.fetch.location);
        match (&self.base_dir, p.is_absolute()) {
            (Some(base), false) => base.join(p),
            _ => p,
        }
    }
}
