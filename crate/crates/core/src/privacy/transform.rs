use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MicrodataTable, PrivacyError};
use crate::kg::{KnowledgeGraph, PlaceLevel};

/// Coarsening steps for one attribute. `steps[i]` maps values at level `i`
/// to values at level `i + 1`; level 0 is the raw value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizationHierarchy {
    pub attribute: String,
    pub steps: Vec<BTreeMap<String, String>>,
}

impl GeneralizationHierarchy {
    pub fn new(attribute: impl Into<String>, steps: Vec<BTreeMap<String, String>>) -> Self {
        GeneralizationHierarchy {
            attribute: attribute.into(),
            steps,
        }
    }

    /// Number of levels above the raw value.
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Maps one value up to `level`.
    pub fn lift(&self, value: &str, level: usize) -> Result<String, PrivacyError> {
        if level > self.depth() {
            return Err(PrivacyError::LevelOutOfRange {
                attribute: self.attribute.clone(),
                level,
                depth: self.depth(),
            });
        }
        let mut current = value.to_string();
        for (i, step) in self.steps[..level].iter().enumerate() {
            current = step
                .get(&current)
                .cloned()
                .ok_or_else(|| PrivacyError::UnmappedValue {
                    attribute: self.attribute.clone(),
                    value: current.clone(),
                    level: i + 1,
                })?;
        }
        Ok(current)
    }

    /// Integer bands: for each width `w`, a value `v` maps to `lo-hi` where
    /// `lo = v - v mod w`. Later widths must be multiples of earlier ones.
    /// A final `*` level suppresses the value entirely.
    pub fn numeric_bands<'a>(
        attribute: impl Into<String>,
        values: impl IntoIterator<Item = &'a str>,
        widths: &[u32],
        with_top: bool,
    ) -> Result<Self, PrivacyError> {
        let attribute = attribute.into();
        let mut current: BTreeSet<String> = values.into_iter().map(str::to_string).collect();
        let mut steps = Vec::new();
        let mut prev_width = 1u32;
        for &w in widths {
            if w == 0 || w % prev_width != 0 {
                return Err(PrivacyError::InvalidParameter(format!(
                    "band width {w} is not a multiple of {prev_width}"
                )));
            }
            let mut step = BTreeMap::new();
            for v in &current {
                let low = match v.split_once('-') {
                    Some((lo, _)) => lo.parse::<i64>(),
                    None => v.parse::<i64>(),
                }
                .map_err(|_| PrivacyError::InvalidParameter(format!("`{v}` is not an integer")))?;
                let lo = low - low.rem_euclid(w as i64);
                step.insert(v.clone(), format!("{}-{}", lo, lo + w as i64 - 1));
            }
            current = step.values().cloned().collect();
            steps.push(step);
            prev_width = w;
        }
        if with_top {
            steps.push(current.iter().map(|v| (v.clone(), "*".to_string())).collect());
        }
        Ok(GeneralizationHierarchy { attribute, steps })
    }

    /// Place-code hierarchy from the graph: municipality code → state code →
    /// country code.
    pub fn from_places(attribute: impl Into<String>, graph: &KnowledgeGraph) -> Self {
        let mut to_state = BTreeMap::new();
        let mut to_country = BTreeMap::new();
        for node in graph.nodes() {
            let (Some(level), Some(code)) = (graph.level_of(node), graph.code_of(node)) else {
                continue;
            };
            let Ok(chain) = graph.ancestors(node) else {
                continue;
            };
            let parent_code = chain.first().and_then(|p| graph.code_of(p));
            match (level, parent_code) {
                (PlaceLevel::Municipality, Some(p)) => {
                    to_state.insert(code.to_string(), p.to_string());
                }
                (PlaceLevel::State, Some(p)) => {
                    to_country.insert(code.to_string(), p.to_string());
                }
                _ => {}
            }
        }
        GeneralizationHierarchy {
            attribute: attribute.into(),
            steps: vec![to_state, to_country],
        }
    }
}

/// Replaces `attribute` with its value at `level` of `hierarchy`.
pub fn generalize(
    table: &MicrodataTable,
    attribute: &str,
    hierarchy: &GeneralizationHierarchy,
    level: usize,
) -> Result<MicrodataTable, PrivacyError> {
    let col = table.column_index(attribute)?;
    let mut out = table.clone();
    if level == 0 {
        return Ok(out);
    }
    for row in out.rows_mut() {
        row[col] = hierarchy.lift(&row[col], level)?;
    }
    Ok(out)
}

/// Drops whole records; the remaining rows keep their order.
pub fn suppress(table: &MicrodataTable, rows: &BTreeSet<usize>) -> Result<MicrodataTable, PrivacyError> {
    if let Some(&bad) = rows.iter().find(|&&i| i >= table.len()) {
        return Err(PrivacyError::RowOutOfRange(bad));
    }
    let kept = table
        .rows()
        .iter()
        .enumerate()
        .filter(|(i, _)| !rows.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    MicrodataTable::new(table.attributes().to_vec(), kept)
}

/// Exchanges `attribute` between ⌊fraction·n/2⌋ disjoint, uniformly drawn
/// pairs of records. The column's multiset of values is preserved.
pub fn swap(table: &MicrodataTable, attribute: &str, fraction: f64, seed: u64) -> Result<MicrodataTable, PrivacyError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PrivacyError::InvalidParameter(format!("swap fraction {fraction} outside [0, 1]")));
    }
    let col = table.column_index(attribute)?;
    let n = table.len();
    let pairs = (fraction * n as f64 / 2.0).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut out = table.clone();
    let rows = out.rows_mut();
    for pair in order[..2 * pairs].chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        let tmp = std::mem::take(&mut rows[a][col]);
        rows[a][col] = std::mem::replace(&mut rows[b][col], tmp);
    }
    Ok(out)
}
