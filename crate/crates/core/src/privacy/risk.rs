use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{MicrodataTable, PrivacyError, Ratio, Role};

/// Cutoffs for the publication gate and the k/ℓ/t checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskThresholds {
    pub k: usize,
    pub l: usize,
    #[serde(with = "flex_decimal")]
    pub t: Decimal,
    /// A record is at risk when its probability reaches this value.
    #[serde(with = "flex_decimal")]
    pub attack_prob: Decimal,
    /// The table is rejected when this share of records is at risk.
    #[serde(with = "flex_decimal")]
    pub pop_fraction: Decimal,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        RiskThresholds {
            k: 2,
            l: 2,
            t: Decimal::new(2, 1),
            attack_prob: Decimal::new(90, 2),
            pop_fraction: Decimal::new(30, 2),
        }
    }
}

impl RiskThresholds {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        let unit = |d: Decimal| d >= Decimal::ZERO && d <= Decimal::ONE;
        if self.k < 1 || self.l < 1 {
            return Err(PrivacyError::InvalidParameter("k and l must be at least 1".into()));
        }
        for (name, v) in [("t", self.t), ("attack_prob", self.attack_prob), ("pop_fraction", self.pop_fraction)] {
            if !unit(v) {
                return Err(PrivacyError::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

mod flex_decimal {
    use super::*;
    use std::str::FromStr;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(d: &Decimal, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&d.normalize())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
        let text = match Raw::deserialize(d)? {
            Raw::Int(i) => i.to_string(),
            // Shortest round-trip form, so 0.9 stays 0.9.
            Raw::Float(f) => f.to_string(),
            Raw::Text(s) => s,
        };
        Decimal::from_str(text.trim()).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn decimal_ratio(d: Decimal) -> Ratio {
    let d = d.normalize();
    let mantissa = d.mantissa();
    assert!(mantissa >= 0, "probability thresholds are non-negative");
    Ratio::new(mantissa as u128, 10u128.pow(d.scale()))
}

fn ratio_f64(r: &Ratio) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn qi_indices<S: AsRef<str>>(table: &MicrodataTable, qi: &[S]) -> Result<Vec<usize>, PrivacyError> {
    qi.iter().map(|q| table.column_index(q.as_ref())).collect()
}

/// Groups rows that agree on every quasi-identifier. Groups are ordered by
/// their quasi-identifier values; row indices inside a group ascend.
pub fn partition<S: AsRef<str>>(table: &MicrodataTable, qi: &[S]) -> Result<Vec<Vec<usize>>, PrivacyError> {
    let cols = qi_indices(table, qi)?;
    let mut groups: BTreeMap<Vec<&str>, Vec<usize>> = BTreeMap::new();
    for (i, row) in table.rows().iter().enumerate() {
        let key = cols.iter().map(|&c| row[c].as_str()).collect();
        groups.entry(key).or_default().push(i);
    }
    Ok(groups.into_values().collect())
}

/// Per-record probabilities for one attack and the share of records at risk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricResult {
    pub metric: String,
    pub per_record: Vec<Ratio>,
    pub at_risk: usize,
    pub fraction_at_risk: Ratio,
}

impl MetricResult {
    fn from_probs(metric: String, per_record: Vec<Ratio>, attack_prob: Decimal) -> Self {
        let cutoff = decimal_ratio(attack_prob);
        let at_risk = per_record.iter().filter(|p| **p >= cutoff).count();
        let fraction_at_risk = Ratio::new(at_risk as u128, per_record.len().max(1) as u128);
        MetricResult {
            metric,
            per_record,
            at_risk,
            fraction_at_risk,
        }
    }

    pub fn per_record_f64(&self) -> Vec<f64> {
        self.per_record.iter().map(ratio_f64).collect()
    }

    pub fn fraction_f64(&self) -> f64 {
        ratio_f64(&self.fraction_at_risk)
    }
}

fn class_probs<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    prob: impl Fn(&[usize]) -> Ratio,
) -> Result<Vec<Ratio>, PrivacyError> {
    if table.is_empty() {
        return Err(PrivacyError::EmptyTable);
    }
    let mut probs = vec![Ratio::from_integer(0); table.len()];
    for group in partition(table, qi)? {
        let p = prob(&group);
        for &i in &group {
            probs[i] = p;
        }
    }
    Ok(probs)
}

/// Re-identification: a record in a class of size c is linked with probability 1/c.
pub fn reid_risk<S: AsRef<str>>(table: &MicrodataTable, qi: &[S], attack_prob: Decimal) -> Result<MetricResult, PrivacyError> {
    let probs = class_probs(table, qi, |g| Ratio::new(1, g.len() as u128))?;
    Ok(MetricResult::from_probs("reidentification".into(), probs, attack_prob))
}

fn modal_count(values: impl Iterator<Item = impl AsRef<str>>) -> usize {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for v in values {
        *counts.entry(v.as_ref().to_string()).or_default() += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

/// Attribute inference: a record's sensitive value is guessed as its class's
/// most frequent value, succeeding with that value's share of the class.
pub fn infer_risk<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    sensitive: &str,
    attack_prob: Decimal,
) -> Result<MetricResult, PrivacyError> {
    let col = table.column_index(sensitive)?;
    if table.role(sensitive)? != Role::Sensitive {
        return Err(PrivacyError::NotSensitive(sensitive.to_string()));
    }
    let rows = table.rows();
    let probs = class_probs(table, qi, |g| {
        let modal = modal_count(g.iter().map(|&i| rows[i][col].as_str()));
        Ratio::new(modal as u128, g.len() as u128)
    })?;
    Ok(MetricResult::from_probs(format!("inference:{sensitive}"), probs, attack_prob))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Publish,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskReport {
    pub reidentification: MetricResult,
    pub inference: Vec<MetricResult>,
    pub thresholds: RiskThresholds,
    pub decision: Decision,
    pub reasons: Vec<String>,
}

#[derive(Serialize)]
struct MetricSummary<'a> {
    metric: &'a str,
    records_at_risk: usize,
    fraction_at_risk: f64,
    exact_fraction: String,
    verdict: &'static str,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    decision: Decision,
    records: usize,
    attack_prob: String,
    pop_fraction: String,
    metrics: Vec<MetricSummary<'a>>,
    reasons: &'a [String],
}

impl RiskReport {
    pub fn metrics(&self) -> impl Iterator<Item = &MetricResult> {
        std::iter::once(&self.reidentification).chain(self.inference.iter())
    }

    fn violates(&self, m: &MetricResult) -> bool {
        m.fraction_at_risk >= decimal_ratio(self.thresholds.pop_fraction)
    }

    /// One metric per line: name, fraction at risk, population cutoff, verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in self.metrics() {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{}\t{}",
                m.metric,
                m.fraction_f64(),
                self.thresholds.pop_fraction.normalize(),
                if self.violates(m) { "fail" } else { "pass" }
            );
        }
        let _ = writeln!(out, "decision\t{:?}", self.decision);
        for r in &self.reasons {
            let _ = writeln!(out, "reason\t{r}");
        }
        out
    }

    /// Compact machine-readable form, as stored in the ingest ledger.
    pub fn to_json(&self) -> serde_json::Value {
        let metrics = self
            .metrics()
            .map(|m| MetricSummary {
                metric: &m.metric,
                records_at_risk: m.at_risk,
                fraction_at_risk: m.fraction_f64(),
                exact_fraction: m.fraction_at_risk.to_string(),
                verdict: if self.violates(m) { "fail" } else { "pass" },
            })
            .collect();
        serde_json::to_value(ReportSummary {
            decision: self.decision,
            records: self.reidentification.per_record.len(),
            attack_prob: self.thresholds.attack_prob.normalize().to_string(),
            pop_fraction: self.thresholds.pop_fraction.normalize().to_string(),
            metrics,
            reasons: &self.reasons,
        })
        .expect("report summary serializes")
    }
}

/// Publication gate: reject when, for re-identification or for any
/// sensitive attribute, the share of records at risk reaches `pop_fraction`.
pub fn gate<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    sensitives: &[S],
    thresholds: &RiskThresholds,
) -> Result<RiskReport, PrivacyError> {
    thresholds.validate()?;
    let reidentification = reid_risk(table, qi, thresholds.attack_prob)?;
    let inference = sensitives
        .iter()
        .map(|s| infer_risk(table, qi, s.as_ref(), thresholds.attack_prob))
        .collect::<Result<Vec<_>, _>>()?;
    let cutoff = decimal_ratio(thresholds.pop_fraction);
    let pct = |r: &Ratio| ratio_f64(r) * 100.0;
    let mut reasons = Vec::new();
    if reidentification.fraction_at_risk >= cutoff {
        reasons.push(format!(
            "re-identification: {:.1}% of records linkable with probability >= {} (limit {:.1}%)",
            pct(&reidentification.fraction_at_risk),
            thresholds.attack_prob.normalize(),
            pct(&cutoff)
        ));
    }
    for m in &inference {
        if m.fraction_at_risk >= cutoff {
            reasons.push(format!(
                "attribute inference on `{}`: {:.1}% of records exposed with probability >= {} (limit {:.1}%)",
                m.metric.trim_start_matches("inference:"),
                pct(&m.fraction_at_risk),
                thresholds.attack_prob.normalize(),
                pct(&cutoff)
            ));
        }
    }
    let decision = if reasons.is_empty() { Decision::Publish } else { Decision::Reject };
    Ok(RiskReport {
        reidentification,
        inference,
        thresholds: thresholds.clone(),
        decision,
        reasons,
    })
}

/// Returns whether every class has at least `k` records, and the smallest class size.
pub fn check_k_anonymity<S: AsRef<str>>(table: &MicrodataTable, qi: &[S], k: usize) -> Result<(bool, usize), PrivacyError> {
    if table.is_empty() {
        return Err(PrivacyError::EmptyTable);
    }
    let min = partition(table, qi)?.iter().map(Vec::len).min().unwrap_or(0);
    Ok((min >= k, min))
}

/// Distinct ℓ-diversity: every class holds at least `l` different sensitive values.
pub fn check_l_diversity<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    sensitive: &str,
    l: usize,
) -> Result<bool, PrivacyError> {
    if table.is_empty() {
        return Err(PrivacyError::EmptyTable);
    }
    let col = table.column_index(sensitive)?;
    let rows = table.rows();
    Ok(partition(table, qi)?.iter().all(|g| {
        let mut distinct: Vec<&str> = g.iter().map(|&i| rows[i][col].as_str()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.len() >= l
    }))
}

/// Largest total-variation distance between a class's sensitive-value
/// distribution and the whole table's.
pub fn max_class_distance<S: AsRef<str>>(table: &MicrodataTable, qi: &[S], sensitive: &str) -> Result<Ratio, PrivacyError> {
    if table.is_empty() {
        return Err(PrivacyError::EmptyTable);
    }
    let col = table.column_index(sensitive)?;
    let rows = table.rows();
    let n = rows.len() as i128;
    let mut global: BTreeMap<&str, i128> = BTreeMap::new();
    for r in rows {
        *global.entry(r[col].as_str()).or_default() += 1;
    }
    let mut worst = Ratio::from_integer(0);
    for g in partition(table, qi)? {
        let m = g.len() as i128;
        let mut local: BTreeMap<&str, i128> = BTreeMap::new();
        for &i in &g {
            *local.entry(rows[i][col].as_str()).or_default() += 1;
        }
        // ½·Σ|c/m − g/n| = Σ|c·n − g·m| / (2·m·n)
        let diff: i128 = global
            .iter()
            .map(|(v, &gc)| (local.get(v).copied().unwrap_or(0) * n - gc * m).abs())
            .sum();
        let d = Ratio::new(diff as u128, (2 * m * n) as u128);
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Categorical t-closeness under total-variation distance.
pub fn check_t_closeness<S: AsRef<str>>(
    table: &MicrodataTable,
    qi: &[S],
    sensitive: &str,
    t: Decimal,
) -> Result<bool, PrivacyError> {
    Ok(max_class_distance(table, qi, sensitive)? <= decimal_ratio(t))
}
