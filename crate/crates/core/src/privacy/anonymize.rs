use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::risk::partition;
use super::transform::{generalize, suppress, GeneralizationHierarchy};
use super::{MicrodataTable, PrivacyError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PlanStep {
    /// `attribute` now sits at `level` of its hierarchy.
    Generalize { attribute: String, level: usize },
    /// Original row indices removed because their class stayed below k.
    Suppress { rows: Vec<usize> },
}

fn min_class<S: AsRef<str>>(table: &MicrodataTable, qi: &[S]) -> Result<usize, PrivacyError> {
    Ok(partition(table, qi)?.iter().map(Vec::len).min().unwrap_or(0))
}

/// Greedy k-anonymization.
///
/// While the smallest class is below `k`, the next attribute of
/// `attribute_order` (round-robin, skipping exhausted ones) is lifted one
/// level. When nothing can be lifted further, records still in classes
/// smaller than `k` are suppressed.
pub fn anonymize_k<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    k: usize,
    hierarchies: &[GeneralizationHierarchy],
    attribute_order: &[S],
) -> Result<(MicrodataTable, Vec<PlanStep>), PrivacyError> {
    if k == 0 {
        return Err(PrivacyError::InvalidParameter("k must be at least 1".into()));
    }
    let by_attr: BTreeMap<&str, &GeneralizationHierarchy> =
        hierarchies.iter().map(|h| (h.attribute.as_str(), h)).collect();
    for a in attribute_order {
        if !by_attr.contains_key(a.as_ref()) {
            return Err(PrivacyError::MissingHierarchy(a.as_ref().to_string()));
        }
        table.column_index(a.as_ref())?;
    }
    let mut plan = Vec::new();
    if table.is_empty() {
        return Ok((table.clone(), plan));
    }

    let mut current = table.clone();
    let mut levels = vec![0usize; attribute_order.len()];
    let mut cursor = 0;
    while min_class(&current, qi)? < k {
        let n = attribute_order.len();
        let Some(pick) = (0..n)
            .map(|off| (cursor + off) % n)
            .find(|&i| levels[i] < by_attr[attribute_order[i].as_ref()].depth())
        else {
            break;
        };
        let attr = attribute_order[pick].as_ref();
        levels[pick] += 1;
        // Lift from the raw column so other attributes keep their levels.
        let lifted = generalize(table, attr, by_attr[attr], levels[pick])?;
        let col = table.column_index(attr)?;
        for (row, src) in current.rows_mut().iter_mut().zip(lifted.rows()) {
            row[col] = src[col].clone();
        }
        plan.push(PlanStep::Generalize {
            attribute: attr.to_string(),
            level: levels[pick],
        });
        cursor = (pick + 1) % n;
    }

    let small: BTreeSet<usize> = partition(&current, qi)?
        .into_iter()
        .filter(|g| g.len() < k)
        .flatten()
        .collect();
    if !small.is_empty() {
        current = suppress(&current, &small)?;
        plan.push(PlanStep::Suppress {
            rows: small.into_iter().collect(),
        });
    }
    Ok((current, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::{check_k_anonymity, Attribute, Role};

    fn table(rows: &[[&str; 3]]) -> MicrodataTable {
        MicrodataTable::new(
            ["age", "sex", "region"]
                .iter()
                .map(|n| Attribute { name: n.to_string(), role: Role::QuasiIdentifier })
                .collect(),
            rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
        )
        .unwrap()
    }

    fn hierarchies() -> Vec<GeneralizationHierarchy> {
        let map = |pairs: &[(&str, &str)]| {
            pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<BTreeMap<_, _>>()
        };
        vec![
            GeneralizationHierarchy::new(
                "age",
                vec![
                    map(&[("28", "20-29"), ("31", "30-39"), ("35", "30-39"), ("42", "40-49"), ("47", "40-49"), ("52", "50-59")]),
                    map(&[("20-29", "<40"), ("30-39", "<40"), ("40-49", "40+"), ("50-59", "40+")]),
                ],
            ),
            GeneralizationHierarchy::new("sex", vec![map(&[("M", "*"), ("F", "*")])]),
            GeneralizationHierarchy::new("region", vec![]),
        ]
    }

    const QI: [&str; 3] = ["age", "sex", "region"];

    #[test]
    fn hand_traced_six_rows() {
        let t = table(&[
            ["31", "M", "N"],
            ["35", "M", "N"],
            ["42", "F", "N"],
            ["47", "F", "N"],
            ["52", "M", "N"],
            ["28", "F", "S"],
        ]);
        let (out, plan) = anonymize_k(&t, &QI, 2, &hierarchies(), &QI).unwrap();
        // age→1: classes {0,1},{2,3},{4},{5}; sex→1: unchanged sizes;
        // region exhausted so age→2: {0,1},{2,3,4},{5}; nothing left, drop row 5.
        assert_eq!(
            plan,
            vec![
                PlanStep::Generalize { attribute: "age".into(), level: 1 },
                PlanStep::Generalize { attribute: "sex".into(), level: 1 },
                PlanStep::Generalize { attribute: "age".into(), level: 2 },
                PlanStep::Suppress { rows: vec![5] },
            ]
        );
        assert_eq!(
            out,
            table(&[
                ["<40", "*", "N"],
                ["<40", "*", "N"],
                ["40+", "*", "N"],
                ["40+", "*", "N"],
                ["40+", "*", "N"],
            ])
        );
        assert_eq!(check_k_anonymity(&out, &QI, 2).unwrap(), (true, 2));
    }

    #[test]
    fn no_steps_when_already_anonymous() {
        let t = table(&[["31", "M", "N"], ["31", "M", "N"]]);
        assert_eq!(anonymize_k(&t, &QI, 1, &hierarchies(), &QI).unwrap(), (t.clone(), vec![]));
        assert_eq!(anonymize_k(&t, &QI, 2, &hierarchies(), &QI).unwrap(), (t, vec![]));
    }

    #[test]
    fn missing_hierarchy() {
        let t = table(&[["31", "M", "N"]]);
        assert_eq!(
            anonymize_k(&t, &QI, 2, &hierarchies()[..1], &QI),
            Err(PrivacyError::MissingHierarchy("sex".into()))
        );
    }
}
