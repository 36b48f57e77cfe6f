use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::Serialize;

use super::resolve::resolve_place_code;
use super::source::{Aggregation, DatePrecision, EntityField, FieldMapping};
use super::table::GenericTable;
use super::EtlError;
use crate::date::ObsDate;
use crate::kg::{EntityDescriptor, KnowledgeGraph, NodeId, Resolution};
use crate::stat_store::{Observation, StatStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Entity,
    Date,
    Value,
    Variable,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Entity => "entity",
            RejectReason::Date => "date",
            RejectReason::Value => "value",
            RejectReason::Variable => "variable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    /// 0-based index into the table's rows.
    pub row: usize,
    pub reason: RejectReason,
    pub detail: String,
}

/// Reads a date cell against a pattern of `YYYY`, `MM`, `DD` tokens and
/// literal characters; `*` accepts any remainder.
pub fn parse_date(text: &str, pattern: &str, precision: DatePrecision) -> Option<ObsDate> {
    let text = text.trim();
    let (mut year, mut month) = (None, None);
    let mut rest = text;
    let mut pat = pattern;
    while !pat.is_empty() {
        if pat == "*" {
            rest = "";
            break;
        }
        let (width, slot) = if pat.starts_with("YYYY") {
            (4, 0)
        } else if pat.starts_with("MM") {
            (2, 1)
        } else if pat.starts_with("DD") {
            (2, 2)
        } else {
            let c = pat.chars().next()?;
            rest = rest.strip_prefix(c)?;
            pat = &pat[c.len_utf8()..];
            continue;
        };
        let digits = rest.get(..width)?;
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let n: u32 = digits.parse().ok()?;
        match slot {
            0 => year = Some(n as i32),
            1 => month = Some(n),
            _ if !(1..=31).contains(&n) => return None,
            _ => {}
        }
        rest = &rest[width..];
        pat = &pat[width..];
    }
    if !rest.is_empty() {
        return None;
    }
    let year = year?;
    if let Some(m) = month {
        if !(1..=12).contains(&m) {
            return None;
        }
    }
    match precision {
        DatePrecision::Year => Some(ObsDate::year(year)),
        DatePrecision::Month => ObsDate::month(year, month? as u8).ok(),
    }
}

/// Parses a numeric cell. With `,` as the decimal separator, `.` is taken as
/// a thousands separator.
pub fn parse_value(text: &str, decimal_separator: char) -> Option<Decimal> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let owned;
    let t = if decimal_separator == ',' {
        owned = t.replace('.', "").replace(',', ".");
        owned.as_str()
    } else {
        t
    };
    if t.starts_with('+') {
        return None;
    }
    Decimal::from_str(t)
        .or_else(|_| Decimal::from_scientific(t))
        .ok()
        .map(|d| d.normalize())
}

fn column(table: &GenericTable, name: &str) -> Result<usize, EtlError> {
    table
        .column_index(name)
        .ok_or_else(|| EtlError::Mapping(format!("column `{name}` not in table {:?}", table.columns)))
}

enum EntityRule<'a> {
    Code(usize, crate::kg::PlaceLevel),
    Description {
        name: usize,
        level: Option<crate::kg::PlaceLevel>,
        ancestor_col: Option<usize>,
        ancestor: Option<&'a str>,
    },
    Fixed(&'a NodeId),
}

/// Turns each table row into one observation or one rejected row.
///
/// Entities are resolved against `graph`; variables must be registered in
/// `stats`. Every row lands in exactly one of the two outputs, in row order.
pub fn normalize(
    graph: &KnowledgeGraph,
    stats: &StatStore,
    table: &GenericTable,
    mapping: &FieldMapping,
    provenance: &str,
) -> Result<(Vec<Observation>, Vec<RejectedRow>), EtlError> {
    mapping.validate()?;
    let entity = match &mapping.entity {
        EntityField::PlaceCode { column: c, level } => EntityRule::Code(column(table, c)?, *level),
        EntityField::Description {
            name_column,
            level,
            ancestor_column,
            ancestor,
        } => EntityRule::Description {
            name: column(table, name_column)?,
            level: *level,
            ancestor_col: ancestor_column.as_deref().map(|c| column(table, c)).transpose()?,
            ancestor: ancestor.as_deref(),
        },
        EntityField::Fixed { node } => {
            if !graph.contains(node) {
                return Err(EtlError::Mapping(format!("fixed entity `{node}` is not in the graph")));
            }
            EntityRule::Fixed(node)
        }
    };
    let date_col = column(table, &mapping.date_column)?;
    let value_col = mapping.value_column.as_deref().map(|c| column(table, c)).transpose()?;
    let variable_col = mapping.variable_column.as_deref().map(|c| column(table, c)).transpose()?;
    let precision = mapping.precision();

    let mut observations = Vec::with_capacity(table.rows.len());
    let mut rejects = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let reject = |reason, detail: String| RejectedRow { row: i, reason, detail };

        let entity = match &entity {
            EntityRule::Fixed(node) => Ok((*node).clone()),
            EntityRule::Code(c, level) => resolve_place_code(graph, &row[*c], *level).map_err(|e| e.to_string()),
            EntityRule::Description {
                name,
                level,
                ancestor_col,
                ancestor,
            } => {
                let d = EntityDescriptor {
                    name: Some(row[*name].trim().to_string()).filter(|s| !s.is_empty()),
                    level: *level,
                    ancestor_name: ancestor_col
                        .map(|c| row[c].trim().to_string())
                        .or(ancestor.map(str::to_string))
                        .filter(|s| !s.is_empty()),
                    code: None,
                };
                match graph.resolve_by_description(&d) {
                    Ok(Resolution::Unique(id)) => Ok(id),
                    Ok(Resolution::Ambiguous(ids)) => Err(format!(
                        "`{}` is ambiguous: {}",
                        row[*name],
                        ids.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
                    )),
                    Ok(Resolution::NotFound) => Err(format!("no place matches `{}`", row[*name])),
                    Err(e) => Err(e.to_string()),
                }
            }
        };
        let entity = match entity {
            Ok(e) => e,
            Err(detail) => {
                rejects.push(reject(RejectReason::Entity, detail));
                continue;
            }
        };

        let variable = match (&mapping.variable, variable_col) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(c)) => NodeId::new(format!("{}{}", mapping.variable_prefix, row[c].trim())).map_err(|e| e.to_string()),
            (None, None) => unreachable!("validated mapping binds a variable"),
        };
        let variable = match variable {
            Ok(v) if stats.variable(&v).is_some() => v,
            Ok(v) => {
                rejects.push(reject(RejectReason::Variable, format!("unknown variable `{v}`")));
                continue;
            }
            Err(detail) => {
                rejects.push(reject(RejectReason::Variable, detail));
                continue;
            }
        };

        let Some(date) = parse_date(&row[date_col], &mapping.date_format, precision) else {
            rejects.push(reject(
                RejectReason::Date,
                format!("`{}` does not match `{}`", row[date_col], mapping.date_format),
            ));
            continue;
        };

        let value = match value_col {
            None => Decimal::ONE,
            Some(c) => match parse_value(&row[c], mapping.decimal_separator) {
                Some(v) => v,
                None => {
                    rejects.push(reject(RejectReason::Value, format!("`{}` is not a number", row[c])));
                    continue;
                }
            },
        };

        observations.push(Observation {
            entity,
            variable,
            date,
            value,
            unit: mapping.unit.clone(),
            provenance: provenance.to_string(),
        });
    }
    Ok((observations, rejects))
}

/// Collapses observations sharing (entity, variable, date, provenance) into
/// their count or sum. `Aggregation::None` returns the input unchanged.
pub fn aggregate(observations: Vec<Observation>, how: Aggregation) -> Vec<Observation> {
    if how == Aggregation::None {
        return observations;
    }
    let mut groups: BTreeMap<(NodeId, NodeId, ObsDate, String), Observation> = BTreeMap::new();
    for o in observations {
        let key = (o.entity.clone(), o.variable.clone(), o.date, o.provenance.clone());
        let add = match how {
            Aggregation::Count => Decimal::ONE,
            _ => o.value,
        };
        groups
            .entry(key)
            .and_modify(|g| g.value += add)
            .or_insert(Observation { value: add, ..o });
    }
    groups
        .into_values()
        .map(|mut o| {
            o.value = o.value.normalize();
            o
        })
        .collect()
}
